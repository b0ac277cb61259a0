//! Built-in nonlinearities `f(x, t) = a(x) φ(t)` with closed-form
//! antiderivative `F` and `G = f t − 2F`.

use std::fmt;

use crate::error::{Error, Result};
use crate::params::ProblemParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// `φ(t) = t log(1 + |t|)`.
    LogSuperlinear,
    /// `φ(t) = |t|^{p−1} t`.
    Power(f64),
    /// `φ ≡ 0`, the linear control problem.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity {
    shape: Shape,
    /// `a(x) = 1 + ½ Π cos(ω x_i)` when set, `a ≡ 1` otherwise.
    modulated: bool,
    omega: f64,
    label: String,
}

/// Parses `log_superlinear`, `pure_power(p)`, `modulated_power(p)` or `zero`.
pub fn builtin_nonlinearity(label: &str, params: &ProblemParams) -> Result<Nonlinearity> {
    let label = label.trim();
    let unknown = || Error::UnknownLabel(label.to_string());
    let parse_p = |rest: &str| -> Result<f64> {
        let inner = rest
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(unknown)?;
        let p: f64 = inner.trim().parse().map_err(|_| unknown())?;
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidParams(format!("growth exponent p = {p} must exceed 1")));
        }
        Ok(p)
    };
    let (shape, modulated) = if label == "log_superlinear" {
        (Shape::LogSuperlinear, false)
    } else if label == "zero" {
        (Shape::Zero, false)
    } else if let Some(rest) = label.strip_prefix("pure_power") {
        (Shape::Power(parse_p(rest)?), false)
    } else if let Some(rest) = label.strip_prefix("modulated_power") {
        (Shape::Power(parse_p(rest)?), true)
    } else {
        return Err(unknown());
    };
    Ok(Nonlinearity {
        shape,
        modulated,
        omega: params.omega(),
        label: label.to_string(),
    })
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl Nonlinearity {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn is_autonomous(&self) -> bool {
        !self.modulated
    }

    pub fn is_zero(&self) -> bool {
        self.shape == Shape::Zero
    }

    /// Growth exponent `p` of `|f| ≤ C(1 + |t|^p)`.
    pub fn growth(&self) -> f64 {
        match self.shape {
            Shape::LogSuperlinear => 2.0,
            Shape::Power(p) => p,
            Shape::Zero => 3.0,
        }
    }

    /// Constant `γ` of `G(x, θt) ≤ γ G(x, t)`.
    pub fn gamma(&self) -> f64 {
        1.0
    }

    /// Constant `C` of `|f(x,t)| ≤ C(1 + |t|^p)`.
    pub fn growth_constant(&self) -> f64 {
        let amax = if self.modulated { 1.5 } else { 1.0 };
        match self.shape {
            // log(1 + a) ≤ a
            Shape::LogSuperlinear => amax,
            Shape::Power(_) => amax,
            Shape::Zero => 0.0,
        }
    }

    /// `(min a, max a)` over the torus.
    pub fn modulation_range(&self) -> (f64, f64) {
        if self.modulated {
            (0.5, 1.5)
        } else {
            (1.0, 1.0)
        }
    }

    /// `a(x)`.
    pub fn modulation(&self, x: &[f64]) -> f64 {
        if self.modulated {
            1.0 + 0.5 * x.iter().map(|&xi| (self.omega * xi).cos()).product::<f64>()
        } else {
            1.0
        }
    }

    /// `φ(t)`.
    pub fn phi(&self, t: f64) -> f64 {
        match self.shape {
            Shape::LogSuperlinear => t * t.abs().ln_1p(),
            Shape::Power(p) => t.abs().powf(p - 1.0) * t,
            Shape::Zero => 0.0,
        }
    }

    /// `φ'(t)`.
    pub fn phi_prime(&self, t: f64) -> f64 {
        match self.shape {
            Shape::LogSuperlinear => {
                let a = t.abs();
                a.ln_1p() + a / (1.0 + a)
            }
            Shape::Power(p) => p * t.abs().powf(p - 1.0),
            Shape::Zero => 0.0,
        }
    }

    /// `Φ(t) = ∫₀ᵗ φ`.
    pub fn big_phi(&self, t: f64) -> f64 {
        match self.shape {
            Shape::LogSuperlinear => {
                let a = t.abs();
                if a < 0.1 {
                    // Σ (−1)^{n+1} a^{n+2} / (n(n+2))
                    let mut acc = 0.0;
                    let mut pw = a * a * a;
                    for n in 1..30 {
                        let nf = n as f64;
                        let term = pw / (nf * (nf + 2.0));
                        acc += if n % 2 == 1 { term } else { -term };
                        pw *= a;
                    }
                    acc
                } else {
                    0.5 * a * a * a.ln_1p() - 0.5 * (0.5 * a * a - a + a.ln_1p())
                }
            }
            Shape::Power(p) => t.abs().powf(p + 1.0) / (p + 1.0),
            Shape::Zero => 0.0,
        }
    }

    /// `φ(t) t − 2Φ(t)`.
    pub fn big_gamma(&self, t: f64) -> f64 {
        match self.shape {
            Shape::LogSuperlinear => {
                let a = t.abs();
                if a < 0.1 {
                    // Σ_{n≥3} (−1)^{n+1} a^n / n
                    let mut acc = 0.0;
                    let mut pw = a * a * a;
                    for n in 3..40 {
                        let term = pw / n as f64;
                        acc += if n % 2 == 1 { term } else { -term };
                        pw *= a;
                    }
                    acc
                } else {
                    0.5 * a * a - a + a.ln_1p()
                }
            }
            Shape::Power(p) => (p - 1.0) / (p + 1.0) * t.abs().powf(p + 1.0),
            Shape::Zero => 0.0,
        }
    }

    pub fn f(&self, x: &[f64], t: f64) -> f64 {
        self.modulation(x) * self.phi(t)
    }

    pub fn big_f(&self, x: &[f64], t: f64) -> f64 {
        self.modulation(x) * self.big_phi(t)
    }

    pub fn big_g(&self, x: &[f64], t: f64) -> f64 {
        self.modulation(x) * self.big_gamma(t)
    }

    /// `∂f/∂t`.
    pub fn f_t(&self, x: &[f64], t: f64) -> f64 {
        self.modulation(x) * self.phi_prime(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> ProblemParams {
        ProblemParams::new(1, 2.0 * std::f64::consts::PI, 0.5, 1.0, 8, 32).unwrap()
    }

    #[test]
    fn parses_labels() {
        let p = params();
        assert_eq!(builtin_nonlinearity("pure_power(3)", &p).unwrap().growth(), 3.0);
        assert!(!builtin_nonlinearity("modulated_power(2.5)", &p).unwrap().is_autonomous());
        assert!(builtin_nonlinearity("zero", &p).unwrap().is_zero());
        assert!(matches!(builtin_nonlinearity("cubic", &p), Err(Error::UnknownLabel(_))));
        assert!(matches!(builtin_nonlinearity("pure_power(x)", &p), Err(Error::UnknownLabel(_))));
        assert!(builtin_nonlinearity("pure_power(1)", &p).is_err());
    }

    #[test]
    fn log_closed_forms() {
        let nl = builtin_nonlinearity("log_superlinear", &params()).unwrap();
        assert_relative_eq!(nl.f(&[0.3], 1.0), std::f64::consts::LN_2, epsilon = 1e-15);
        assert_relative_eq!(nl.big_phi(1.0), 0.25, epsilon = 1e-15);
        assert_relative_eq!(nl.big_phi(2.0), 1.5 * 3f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(nl.big_phi(-2.0), nl.big_phi(2.0));
        // series and closed form agree at the switch
        let a = 0.1f64;
        let closed_f = 0.5 * a * a * a.ln_1p() - 0.5 * (0.5 * a * a - a + a.ln_1p());
        assert_relative_eq!(nl.big_phi(0.1 - 1e-15), closed_f, max_relative = 1e-11);
        let closed_g = 0.5 * a * a - a + a.ln_1p();
        assert_relative_eq!(nl.big_gamma(0.1 - 1e-15), closed_g, max_relative = 1e-10);
    }

    #[test]
    fn antiderivative_by_quadrature() {
        let p = params();
        for label in ["log_superlinear", "pure_power(3)", "modulated_power(2.5)"] {
            let nl = builtin_nonlinearity(label, &p).unwrap();
            for &t in &[-7.0, -0.3, 0.05, 1.0, 12.0] {
                let x = [0.7];
                let q = crate::quad::adaptive(&|s: f64| nl.f(&x, s), 0.0, t, 1e-14);
                assert_relative_eq!(nl.big_f(&x, t), q, max_relative = 1e-10);
                let g = nl.f(&x, t) * t - 2.0 * nl.big_f(&x, t);
                assert_relative_eq!(nl.big_g(&x, t), g, max_relative = 1e-9, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn power_closed_forms() {
        let nl = builtin_nonlinearity("pure_power(3)", &params()).unwrap();
        assert_relative_eq!(nl.big_phi(2.0), 4.0);
        assert_relative_eq!(nl.big_gamma(2.0), 8.0);
        assert_relative_eq!(nl.phi_prime(-2.0), 12.0);
    }
}

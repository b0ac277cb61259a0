//! Bessel-kernel extension of a trace to the half-cylinder `(0,T)^N × (0,∞)`.
//!
//! Mode `k` of the extension is `c_k θ(λ_k ξ)` with `λ_k = √(ω²|k|² + m²)`
//! and the master profile `θ(η) = (2/Γ(s)) (η/2)^s K_s(η)`, which solves
//! `θ'' + ((1 − 2s)/η) θ' − θ = 0`, `θ(0) = 1`, `θ(∞) = 0`.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad;
use crate::special::{bessel_k, gamma};
use crate::torus::FourierField;

/// Upper end of the finite part of half-line quadratures (`θ ~ e^{-η}`).
pub const QUAD_CUTOFF: f64 = 40.0;
const QUAD_LEVELS: u32 = 60;
const QUAD_TOL: f64 = 1e-13;

/// A profile `φ` on `[0, ∞)` with `φ(0) = 1`, used per mode as `φ(λξ)`.
pub trait MasterProfile: Sync {
    fn value(&self, eta: f64) -> f64;
    fn slope(&self, eta: f64) -> f64;
}

/// The harmonic profile `θ` at order `s` with the constant `κ_s`.
#[derive(Debug, Clone, Copy)]
pub struct ExtensionProfile {
    order: f64,
    kappa: f64,
    gamma_s: f64,
    energy: f64,
}

/// Order-`s` profile; the energy integral `∫ η^{1−2s}(θ'² + θ²)` is computed
/// once here.
pub fn make_profile(s: f64) -> Result<ExtensionProfile> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::OrderOutOfRange(s));
    }
    let mut p = ExtensionProfile {
        order: s,
        kappa: 2f64.powf(1.0 - 2.0 * s) * gamma(1.0 - s) / gamma(s),
        gamma_s: gamma(s),
        energy: f64::NAN,
    };
    p.energy = profile_energy(&p, s);
    Ok(p)
}

impl ExtensionProfile {
    pub fn order(&self) -> f64 {
        self.order
    }

    /// `κ_s = 2^{1−2s} Γ(1−s)/Γ(s)`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `E_θ = ∫₀^∞ η^{1−2s} (θ'² + θ²) dη` by quadrature.
    pub fn energy_integral(&self) -> f64 {
        self.energy
    }

    pub fn theta(&self, eta: f64) -> f64 {
        if eta <= 0.0 {
            return 1.0;
        }
        let s = self.order;
        2.0 / self.gamma_s * (0.5 * eta).powf(s) * bessel_k(s, eta)
    }

    /// `θ'(η) = −(2^{1−s}/Γ(s)) η^s K_{1−s}(η)`.
    pub fn theta_prime(&self, eta: f64) -> f64 {
        let s = self.order;
        -2f64.powf(1.0 - s) / self.gamma_s * eta.powf(s) * bessel_k(1.0 - s, eta)
    }

    /// `−η^{1−2s} θ'(η)`, which tends to `κ_s` as `η → 0`.
    pub fn conormal(&self, eta: f64) -> f64 {
        let s = self.order;
        2f64.powf(1.0 - s) / self.gamma_s * eta.powf(1.0 - s) * bessel_k(1.0 - s, eta)
    }

    /// Writes `(xi, theta, theta_prime)` rows.
    pub fn write_table<W: Write>(&self, w: W, xs: &[f64]) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["xi", "theta", "theta_prime"])?;
        for &x in xs {
            let d = if x > 0.0 {
                self.theta_prime(x)
            } else {
                f64::NEG_INFINITY
            };
            wtr.write_record(&[format!("{x:e}"), format!("{:e}", self.theta(x)), format!("{d:e}")])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

impl MasterProfile for ExtensionProfile {
    fn value(&self, eta: f64) -> f64 {
        self.theta(eta)
    }
    fn slope(&self, eta: f64) -> f64 {
        self.theta_prime(eta)
    }
}

/// `e^{-η}`: the `s = 1/2` harmonic profile, a competitor for other orders.
#[derive(Debug, Clone, Copy)]
pub struct ExponentialProfile;

impl MasterProfile for ExponentialProfile {
    fn value(&self, eta: f64) -> f64 {
        (-eta).exp()
    }
    fn slope(&self, eta: f64) -> f64 {
        -(-eta).exp()
    }
}

/// `θ(η) + a η e^{-η}`: same trace, different interior.
#[derive(Debug, Clone, Copy)]
pub struct BumpedProfile {
    pub base: ExtensionProfile,
    pub amplitude: f64,
}

impl MasterProfile for BumpedProfile {
    fn value(&self, eta: f64) -> f64 {
        self.base.theta(eta) + self.amplitude * eta * (-eta).exp()
    }
    fn slope(&self, eta: f64) -> f64 {
        self.base.theta_prime(eta) + self.amplitude * (1.0 - eta) * (-eta).exp()
    }
}

/// `∫₀^∞ η^{1−2s} (φ'² + φ²) dη`.
pub fn profile_energy<P: MasterProfile + ?Sized>(profile: &P, s: f64) -> f64 {
    let w = 1.0 - 2.0 * s;
    let g = |eta: f64| {
        let v = profile.value(eta);
        let d = profile.slope(eta);
        eta.powf(w) * (d * d + v * v)
    };
    quad::half_line(
        &g,
        |d| quad::power_head(&g, d),
        |x| 0.5 * g(x),
        QUAD_CUTOFF,
        QUAD_LEVELS,
        QUAD_TOL,
    )
}

/// `∫₀^∞ η^{1−2s} φ'² dη`.
pub fn profile_slope_energy<P: MasterProfile + ?Sized>(profile: &P, s: f64) -> f64 {
    let w = 1.0 - 2.0 * s;
    let g = |eta: f64| {
        let d = profile.slope(eta);
        eta.powf(w) * d * d
    };
    quad::half_line(
        &g,
        |d| quad::power_head(&g, d),
        |x| 0.5 * g(x),
        QUAD_CUTOFF,
        QUAD_LEVELS,
        QUAD_TOL,
    )
}

/// `∫₀^a η^{1−2s} φ² dη`.
pub fn profile_mass_below<P: MasterProfile + ?Sized>(profile: &P, s: f64, a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let w = 1.0 - 2.0 * s;
    let g = |eta: f64| {
        let v = profile.value(eta);
        eta.powf(w) * v * v
    };
    let top = a.min(QUAD_CUTOFF);
    let tail = if a > QUAD_CUTOFF {
        quad::adaptive(&g, QUAD_CUTOFF, a.min(2.0 * QUAD_CUTOFF), QUAD_TOL)
    } else {
        0.0
    };
    quad::half_line(&g, |d| quad::power_head(&g, d), |_| 0.0, top, QUAD_LEVELS, QUAD_TOL) + tail
}

/// Three-point generalized Richardson extrapolation of `g(ξ) → g(0)` under
/// the model `g(ξ) = g₀ + a ξ^{e₁} + b ξ^{e₂}`. Returns the extrapolated value
/// together with the two-point (`e₁` only) estimate from the smallest probes.
pub fn richardson(xs: &[f64; 3], gs: &[f64; 3], e1: f64, e2: f64) -> (f64, f64) {
    let [x0, x1, x2] = *xs;
    // Two-point: eliminate ξ^{e1} using the two smallest probes.
    let (pa, pb) = (x1.powf(e1), x2.powf(e1));
    let two = (gs[2] * pa - gs[1] * pb) / (pa - pb);
    // Three-point: Cramer's rule on [1, ξ^e1, ξ^e2].
    let rows = [
        [1.0, x0.powf(e1), x0.powf(e2)],
        [1.0, x1.powf(e1), x1.powf(e2)],
        [1.0, x2.powf(e1), x2.powf(e2)],
    ];
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det3(rows);
    let mut num = rows;
    for (r, g) in num.iter_mut().zip(gs) {
        r[0] = *g;
    }
    (det3(num) / d, two)
}

/// Correction exponents of the conormal derivative near `ξ = 0`: the
/// expansion of `η^{1−s} K_{1−s}(η)` has powers `η^{2−2s}` and `η²`.
pub fn conormal_exponents(s: f64) -> (f64, f64) {
    (2.0 - 2.0 * s, 2.0)
}

/// Extrapolates `−ξ^{1−2s} ∂_ξ φ(λξ)` to `ξ = 0` from three probes.
///
/// The residual is the relative gap between the three-point and two-point
/// estimates; it must not exceed `tol`.
pub fn extrapolate_conormal<F: Fn(f64) -> f64>(
    sample: F,
    s: f64,
    probes: &[f64],
    tol: f64,
) -> Result<f64> {
    let xs = check_probes(probes)?;
    let gs = [sample(xs[0]), sample(xs[1]), sample(xs[2])];
    let (e1, e2) = conormal_exponents(s);
    let (three, two) = richardson(&xs, &gs, e1, e2);
    let scale = three.abs().max(f64::MIN_POSITIVE);
    let residual = (three - two).abs() / scale;
    if residual > tol {
        return Err(Error::ProbeTooCoarse { residual, tol });
    }
    Ok(three)
}

fn check_probes(probes: &[f64]) -> Result<[f64; 3]> {
    let n = probes.len();
    let ok = n >= 3
        && probes.iter().all(|&x| x > 0.0 && x.is_finite())
        && probes.windows(2).all(|w| w[1] < w[0]);
    if !ok {
        return Err(Error::InvalidParams(
            "probes must be at least three strictly decreasing positive values".into(),
        ));
    }
    Ok([probes[n - 3], probes[n - 2], probes[n - 1]])
}

/// Default probe heights for [`ExtensionField::dtn_apply`].
pub const DEFAULT_PROBES: [f64; 3] = [1e-4, 5e-5, 2.5e-5];

/// The extension `v(x, ξ) = Σ c_k θ(λ_k ξ) e^{iωk·x}/√(T^N)` of a trace.
#[derive(Debug, Clone)]
pub struct ExtensionField {
    pub trace: FourierField,
    pub profile: ExtensionProfile,
}

impl ExtensionField {
    pub fn new(trace: FourierField) -> Result<Self> {
        let profile = make_profile(trace.params().order)?;
        Ok(Self { trace, profile })
    }

    pub fn with_profile(trace: FourierField, profile: ExtensionProfile) -> Self {
        Self { trace, profile }
    }

    /// `λ_k = √(ω²|k|² + m²)` in storage order.
    pub fn lambdas(&self) -> Vec<f64> {
        let p = *self.trace.params();
        let w = p.omega();
        self.trace
            .k_squared()
            .into_iter()
            .map(|q| (w * w * q + p.mass * p.mass).sqrt())
            .collect()
    }

    /// The trace at height `ξ` as a Fourier field.
    pub fn slice(&self, xi: f64) -> FourierField {
        let lam = self.lambdas();
        let coeffs = self
            .trace
            .coeffs()
            .iter()
            .zip(&lam)
            .map(|(c, &l)| c * self.profile.theta(l * xi))
            .collect();
        FourierField::from_coeffs(*self.trace.params(), coeffs).expect("same shape")
    }

    /// Pointwise value `v(x, ξ)`; the real part when the trace is real.
    pub fn evaluate(&self, x: &[f64], xi: f64) -> Complex64 {
        let p = self.trace.params();
        let w = p.omega();
        let norm = 1.0 / p.volume().sqrt();
        let lam = self.lambdas();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, c) in self.trace.coeffs().iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let k = self.trace.mode(i);
            let phase: f64 = k.iter().zip(x).map(|(&ki, &xi)| ki as f64 * xi).sum::<f64>() * w;
            acc += c * Complex64::from_polar(self.profile.theta(lam[i] * xi), phase);
        }
        acc * norm
    }

    /// `‖v‖²_X = Σ |c_k|² λ_k^{2s} E_θ`.
    pub fn extension_energy(&self) -> Result<f64> {
        self.check_massless()?;
        let s = self.profile.order;
        let sum: f64 = self
            .trace
            .coeffs()
            .iter()
            .zip(self.lambdas())
            .map(|(c, l)| c.norm_sqr() * l.powf(2.0 * s))
            .sum();
        Ok(sum * self.profile.energy)
    }

    fn check_massless(&self) -> Result<()> {
        let p = self.trace.params();
        if p.mass == 0.0 && self.trace.coeffs()[self.trace.zero_index()].norm() != 0.0 {
            return Err(Error::MasslessExtension);
        }
        Ok(())
    }

    /// Dirichlet-to-Neumann map: per mode, `−ξ^{1−2s} ∂_ξ [θ(λξ)]` sampled at
    /// the probes and extrapolated to `ξ = 0`.
    pub fn dtn_apply(&self, probes: &[f64], tol: f64) -> Result<FourierField> {
        let s = self.profile.order;
        let lam = self.lambdas();
        let symbols = crate::parallel::map(&lam, |&l| {
            if l == 0.0 {
                return Ok(0.0);
            }
            // −ξ^{1−2s} d/dξ θ(λξ) = λ^{2s} · conormal(λξ)
            let l2s = l.powf(2.0 * s);
            extrapolate_conormal(|x| l2s * self.profile.conormal(l * x), s, probes, tol)
        });
        let mut coeffs = Vec::with_capacity(lam.len());
        for (c, sym) in self.trace.coeffs().iter().zip(symbols) {
            coeffs.push(c * sym?);
        }
        FourierField::from_coeffs(*self.trace.params(), coeffs)
    }
}

/// Both sides of `κ_s |Tr v|²_H ≤ ‖v‖²_X` for the competitor whose mode `k`
/// is `c_k φ(λ_k ξ)`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct TraceReport {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub holds: bool,
}

/// Compares the energy of a competitor extension with `κ_s |u|²_H`.
pub fn trace_inequality_check<P: MasterProfile + ?Sized>(
    trace: &FourierField,
    competitor: &P,
    kappa: f64,
    tol: f64,
) -> TraceReport {
    let s = trace.params().order;
    let e = profile_energy(competitor, s);
    trace_report(trace, e, kappa, tol)
}

/// As [`trace_inequality_check`] with the competitor's energy integral given.
pub fn trace_report(trace: &FourierField, competitor_energy: f64, kappa: f64, tol: f64) -> TraceReport {
    let h2 = trace.hs_norm_sq();
    let lhs = kappa * h2;
    let rhs = competitor_energy * h2;
    let gap = rhs - lhs;
    TraceReport {
        lhs,
        rhs,
        gap,
        holds: gap >= -tol * (1.0 + lhs),
    }
}

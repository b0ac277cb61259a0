//! The energy functional on the trace side,
//!
//! `J(u) = κ [ ½ Σ ((ω²|k|²+m²)^s − m^{2s}) |c_k|² − ∫ F(x, u) dx ]`,
//!
//! with `κ = κ_s` (explicit) or `κ = 1` (normalized). The integral is the
//! trapezoidal sum on a zero-padded grid, and the gradient is the exact
//! gradient of that discrete functional.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::extension::make_profile;
use crate::nonlinearity::Nonlinearity;
use crate::params::{Normalization, ProblemParams};
use crate::torus::{k_squared_table, lq_norm, FourierField, GridField};

/// Norm used on `J'(u)` in the Cerami measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualNorm {
    /// Dual of the energy norm `√κ |u|_H`.
    #[default]
    Energy,
    /// Raw coefficient `ℓ²` norm.
    L2,
}

#[derive(Debug, Clone)]
pub struct Functional {
    params: ProblemParams,
    nl: Nonlinearity,
    kappa: f64,
    padded: usize,
    shifted: Vec<f64>,
    symbol: Vec<f64>,
    /// `a(x)` on the padded grid; `None` for autonomous `f`.
    modulation: Option<Vec<f64>>,
    pub dual: DualNorm,
}

impl Functional {
    pub fn new(params: ProblemParams, nl: &Nonlinearity, normalization: Normalization) -> Result<Self> {
        let kappa = match normalization {
            Normalization::Explicit => make_profile(params.order)?.kappa(),
            Normalization::Normalized => 1.0,
        };
        let padded = params.padded_grid(nl.growth());
        let k2 = k_squared_table(&params);
        let shifted = k2.iter().map(|&q| params.shifted_symbol(q)).collect();
        let symbol = k2.iter().map(|&q| params.symbol(q)).collect();
        let modulation = (!nl.is_autonomous()).then(|| {
            let grid = params.with_grid(params.cutoff, padded).expect("padded grid is valid");
            GridField::from_fn(grid, |x| nl.modulation(x)).values().to_vec()
        });
        Ok(Self {
            params,
            nl: nl.clone(),
            kappa,
            padded,
            shifted,
            symbol,
            modulation,
            dual: DualNorm::Energy,
        })
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    /// The factor `κ` in front of the functional.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn padded_grid(&self) -> usize {
        self.padded
    }

    fn cell(&self) -> f64 {
        (self.params.period / self.padded as f64).powi(self.params.dim as i32)
    }

    fn weight(&self, j: usize) -> f64 {
        self.modulation.as_ref().map_or(1.0, |a| a[j])
    }

    /// Real samples of `u` on the padded grid.
    pub fn samples(&self, u: &FourierField) -> Result<Vec<f64>> {
        u.sample(self.padded)
    }

    /// `∫ h(a(x), u(x)) dx` on the padded grid.
    fn integrate<H: Fn(f64) -> f64>(&self, u: &FourierField, h: H) -> Result<f64> {
        let vals = self.samples(u)?;
        let sum: f64 = vals
            .iter()
            .enumerate()
            .map(|(j, &t)| self.weight(j) * h(t))
            .sum();
        Ok(sum * self.cell())
    }

    /// `Σ ((ω²|k|²+m²)^s − m^{2s}) |c_k|²`.
    pub fn quadratic_form(&self, u: &FourierField) -> f64 {
        u.coeffs()
            .iter()
            .zip(&self.shifted)
            .map(|(c, w)| w * c.norm_sqr())
            .sum()
    }

    pub fn value(&self, u: &FourierField) -> Result<f64> {
        let q = self.quadratic_form(u);
        let f = self.integrate(u, |t| self.nl.big_phi(t))?;
        Ok(self.kappa * (0.5 * q - f))
    }

    /// `∫ F(x, u) dx`.
    pub fn potential(&self, u: &FourierField) -> Result<f64> {
        self.integrate(u, |t| self.nl.big_phi(t))
    }

    /// `κ ∫ G(x, u) dx`.
    pub fn g_integral(&self, u: &FourierField) -> Result<f64> {
        Ok(self.kappa * self.integrate(u, |t| self.nl.big_gamma(t))?)
    }

    /// Fourier coefficients (`|k|∞ ≤ K`) of `f(·, u)`.
    pub fn nonlinear_term(&self, u: &FourierField) -> Result<FourierField> {
        let vals = self.samples(u)?;
        let fx: Vec<f64> = vals
            .iter()
            .enumerate()
            .map(|(j, &t)| self.weight(j) * self.nl.phi(t))
            .collect();
        FourierField::analyze(self.params, &fx, self.padded)
    }

    /// `J'(u)` against the `L²` pairing: `κ [shift_k c_k − f̂_k]`.
    pub fn gradient(&self, u: &FourierField) -> Result<FourierField> {
        let f = self.nonlinear_term(u)?;
        let coeffs: Vec<Complex64> = u
            .coeffs()
            .iter()
            .zip(f.coeffs())
            .zip(&self.shifted)
            .map(|((c, fk), w)| (c * w - fk) * self.kappa)
            .collect();
        let g = FourierField::from_coeffs(self.params, coeffs)?;
        Ok(g.symmetrize())
    }

    /// Second derivative applied to a direction: `κ [shift_k h_k − P(f_t(u) h)_k]`.
    pub fn hessian_apply(&self, u: &FourierField, h: &FourierField) -> Result<FourierField> {
        let uv = self.samples(u)?;
        let hv = self.samples(h)?;
        let prod: Vec<f64> = uv
            .iter()
            .zip(&hv)
            .enumerate()
            .map(|(j, (&t, &d))| self.weight(j) * self.nl.phi_prime(t) * d)
            .collect();
        let ph = FourierField::analyze(self.params, &prod, self.padded)?;
        let coeffs: Vec<Complex64> = h
            .coeffs()
            .iter()
            .zip(ph.coeffs())
            .zip(&self.shifted)
            .map(|((c, q), w)| (c * w - q) * self.kappa)
            .collect();
        Ok(FourierField::from_coeffs(self.params, coeffs)?.symmetrize())
    }

    /// Riesz representative of `g` in the energy inner product,
    /// `g_k / (κ (ω²|k|²+m²)^s)`.
    pub fn riesz(&self, g: &FourierField) -> FourierField {
        let coeffs: Vec<Complex64> = g
            .coeffs()
            .iter()
            .zip(&self.symbol)
            .map(|(c, &w)| if w > 0.0 { c / (self.kappa * w) } else { Complex64::new(0.0, 0.0) })
            .collect();
        FourierField::from_coeffs(self.params, coeffs).expect("shape")
    }

    /// `⟨g, h⟩ = Re Σ g_k conj(h_k)`.
    pub fn pairing(&self, g: &FourierField, h: &FourierField) -> f64 {
        g.dot(h)
    }

    /// Energy norm `‖u‖ = √κ |u|_H` (equal to the extension norm).
    pub fn energy_norm(&self, u: &FourierField) -> f64 {
        (self.kappa * u.hs_norm_sq()).sqrt()
    }

    /// Norm of a gradient under [`Functional::dual`].
    pub fn dual_norm(&self, g: &FourierField) -> f64 {
        match self.dual {
            DualNorm::L2 => g.l2_norm(),
            DualNorm::Energy => self.weighted_dual(g, &self.symbol),
        }
    }

    /// `√(Σ |g_k|² / (κ w_k))`; infinite if some `w_k = 0` carries mass.
    pub fn weighted_dual(&self, g: &FourierField, weights: &[f64]) -> f64 {
        g.coeffs()
            .iter()
            .zip(weights)
            .map(|(c, &w)| {
                let n = c.norm_sqr();
                if n == 0.0 {
                    0.0
                } else {
                    n / (self.kappa * w)
                }
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `(J(u), (1 + ‖u‖) ‖J'(u)‖_*)`.
    pub fn cerami_measure(&self, u: &FourierField) -> Result<(f64, f64)> {
        let level = self.value(u)?;
        let g = self.gradient(u)?;
        Ok((level, (1.0 + self.energy_norm(u)) * self.dual_norm(&g)))
    }

    /// `|u|_{L^q}` on the padded grid.
    pub fn lq_norm(&self, u: &FourierField, q: f64) -> Result<f64> {
        lq_norm(&self.params, &self.samples(u)?, self.padded, q)
    }

    /// Real orthonormal coordinates of a Hermitian field:
    /// `(c_0, √2 Re c_k, √2 Im c_k)` over the upper half-lattice.
    pub fn to_real(&self, u: &FourierField) -> DVector<f64> {
        to_real(u)
    }

    pub fn from_real(&self, v: &DVector<f64>) -> FourierField {
        from_real(self.params, v)
    }

    /// Hessian of the discrete functional in the coordinates of
    /// [`Functional::to_real`].
    pub fn hessian(&self, u: &FourierField) -> Result<DMatrix<f64>> {
        let vals = self.samples(u)?;
        let d: Vec<f64> = vals
            .iter()
            .enumerate()
            .map(|(j, &t)| self.weight(j) * self.nl.phi_prime(t) * self.cell())
            .collect();
        let basis = self.basis_samples();
        let n = basis.nrows();
        let mut scaled = basis.clone();
        for (j, dj) in d.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*dj);
        }
        let mut h = -(&scaled * basis.transpose());
        for (row, idx) in real_layout(n) {
            h[(row, row)] += self.shifted[idx];
        }
        Ok(h * self.kappa)
    }

    /// Rows: real basis functions sampled on the padded grid.
    fn basis_samples(&self) -> DMatrix<f64> {
        let p = self.params;
        let n = p.num_modes();
        let grid = p.with_grid(p.cutoff, self.padded).expect("valid");
        let pts = GridField::from_fn(grid, |_| 0.0);
        let npts = grid.num_grid_points();
        let w = p.omega();
        let norm = 1.0 / p.volume().sqrt();
        let layout = real_layout(n);
        let mut b = DMatrix::zeros(n, npts);
        for j in 0..npts {
            let x = pts.point(j);
            for (row, &(r, idx)) in layout.iter().enumerate() {
                debug_assert_eq!(row, r);
                let k = crate::torus::mode_of(&p, idx);
                let phase: f64 = w * k.iter().zip(&x).map(|(&a, &b)| a as f64 * b).sum::<f64>();
                let kind = real_kind(n, row);
                b[(row, j)] = norm
                    * match kind {
                        RealKind::Constant => 1.0,
                        RealKind::Cos => std::f64::consts::SQRT_2 * phase.cos(),
                        RealKind::Sin => -std::f64::consts::SQRT_2 * phase.sin(),
                    };
            }
        }
        b
    }
}

enum RealKind {
    Constant,
    Cos,
    Sin,
}

fn real_kind(n: usize, row: usize) -> RealKind {
    if row == 0 {
        RealKind::Constant
    } else if row <= (n - 1) / 2 {
        RealKind::Cos
    } else {
        RealKind::Sin
    }
}

/// `(row, storage index)`: row 0 is `k = 0`, rows `1..=h` the real parts of
/// the upper half-lattice, rows `h+1..` the imaginary parts.
fn real_layout(n: usize) -> Vec<(usize, usize)> {
    let zero = (n - 1) / 2;
    let h = zero;
    let mut out = Vec::with_capacity(n);
    out.push((0, zero));
    for i in 0..h {
        out.push((1 + i, zero + 1 + i));
    }
    for i in 0..h {
        out.push((1 + h + i, zero + 1 + i));
    }
    out
}

pub fn to_real(u: &FourierField) -> DVector<f64> {
    let c = u.coeffs();
    let n = c.len();
    let zero = (n - 1) / 2;
    let mut v = DVector::zeros(n);
    v[0] = c[zero].re;
    let r2 = std::f64::consts::SQRT_2;
    for i in 0..zero {
        v[1 + i] = r2 * c[zero + 1 + i].re;
        v[1 + zero + i] = r2 * c[zero + 1 + i].im;
    }
    v
}

pub fn from_real(params: ProblemParams, v: &DVector<f64>) -> FourierField {
    let n = params.num_modes();
    let zero = (n - 1) / 2;
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    c[zero] = Complex64::new(v[0], 0.0);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..zero {
        let z = Complex64::new(v[1 + i], v[1 + zero + i]) * r;
        c[zero + 1 + i] = z;
        c[zero - 1 - i] = z.conj();
    }
    FourierField::from_coeffs(params, c).expect("shape")
}

//! Bessel-free check of the extension: per-mode finite elements for
//! `−(ξ^{1−2s} w')' + λ² ξ^{1−2s} w = 0`, `w(0) = 1`, `w(Ξ) = 0`.
//!
//! Elements are linear in `τ = ξ^{2s}`, the variable in which the solution is
//! regular at the degenerate end (`w ≈ 1 − c τ`). The weighted stiffness of a
//! cell is then exact, `2s/(b^{2s} − a^{2s})`, which is the harmonic average
//! of `ξ^{1−2s}` against the cell's `ξ`-derivative.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad;

/// One decoupled mode on a graded grid `ξ_j = Ξ (j/J)^β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeProblem {
    pub lambda: f64,
    pub order: f64,
    pub height: f64,
    pub cells: usize,
    pub grading: f64,
}

impl ModeProblem {
    pub fn new(lambda: f64, order: f64, height: f64, cells: usize, grading: f64) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidParams(m.into()));
        if !(lambda > 0.0 && lambda.is_finite()) {
            return bad("lambda must be positive");
        }
        if !(order > 0.0 && order < 1.0) {
            return Err(Error::OrderOutOfRange(order));
        }
        if !(height > 0.0 && height.is_finite()) {
            return bad("height must be positive");
        }
        if cells < 16 {
            return bad("at least 16 cells are required");
        }
        if !(grading >= 1.0) {
            return bad("grading exponent must be at least 1");
        }
        Ok(Self {
            lambda,
            order,
            height,
            cells,
            grading,
        })
    }

    /// Height `30/λ` and grading `β = 2`.
    pub fn standard(lambda: f64, order: f64, cells: usize) -> Result<Self> {
        Self::new(lambda, order, 30.0 / lambda, cells, 2.0)
    }

    pub fn with_cells(&self, cells: usize) -> Result<Self> {
        Self::new(self.lambda, self.order, self.height, cells, self.grading)
    }

    pub fn nodes(&self) -> Vec<f64> {
        let j = self.cells as f64;
        (0..=self.cells)
            .map(|i| self.height * (i as f64 / j).powf(self.grading))
            .collect()
    }

    /// Exact symbol `κ_s λ^{2s}` the scheme should reproduce.
    pub fn exact_symbol(&self, kappa: f64) -> f64 {
        kappa * self.lambda.powf(2.0 * self.order)
    }
}

/// Tridiagonal stiffness-plus-mass matrix: `(diag, upper)`.
fn assemble(mp: &ModeProblem) -> (Vec<f64>, Vec<f64>) {
    let s = mp.order;
    let l2 = mp.lambda * mp.lambda;
    let xs = mp.nodes();
    let n = xs.len();
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n - 1];
    let alpha = 1.0 / s - 2.0;
    let rule = quad::gauss(10);
    for c in 0..n - 1 {
        let ta = xs[c].powf(2.0 * s);
        let tb = xs[c + 1].powf(2.0 * s);
        let dt = tb - ta;
        let k = 2.0 * s / dt;
        // Mass entries ∫ ξ^{1−2s} φ_i φ_j dξ = (1/2s) ∫ τ^{1/s−2} φ_i φ_j dτ.
        let (maa, mab, mbb) = if c == 0 {
            let a1 = alpha + 1.0;
            let a2 = alpha + 2.0;
            let a3 = alpha + 3.0;
            let f = tb.powf(a1) / (2.0 * s);
            (
                f * (1.0 / a1 - 2.0 / a2 + 1.0 / a3),
                f * (1.0 / a2 - 1.0 / a3),
                f / a3,
            )
        } else {
            let mut m = (0.0, 0.0, 0.0);
            for (t, w) in rule.mapped(ta, tb) {
                let pb = (t - ta) / dt;
                let pa = 1.0 - pb;
                let wt = w * t.powf(alpha) / (2.0 * s);
                m.0 += wt * pa * pa;
                m.1 += wt * pa * pb;
                m.2 += wt * pb * pb;
            }
            m
        };
        diag[c] += k + l2 * maa;
        diag[c + 1] += k + l2 * mbb;
        upper[c] += -k + l2 * mab;
    }
    (diag, upper)
}

/// Nodal values of the discrete profile (`w_0 = 1`, `w_J = 0`).
pub fn solve_mode(mp: &ModeProblem) -> Result<Vec<f64>> {
    let (diag, upper) = assemble(mp);
    let n = diag.len();
    // Unknowns 1..n-2; Dirichlet rows eliminated.
    let m = n - 2;
    let mut b = vec![0.0; m];
    b[0] = -upper[0];
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    // Thomas algorithm on the symmetric tridiagonal block.
    let mut prev_c = 0.0;
    let mut prev_d = 0.0;
    for i in 0..m {
        let sub = if i == 0 { 0.0 } else { upper[i] };
        let denom = diag[i + 1] - sub * prev_c;
        if !(denom.is_finite() && denom.abs() > 0.0) {
            return Err(Error::SingularSystem(i + 1));
        }
        c[i] = if i + 1 < m { upper[i + 1] / denom } else { 0.0 };
        d[i] = (b[i] - sub * prev_d) / denom;
        prev_c = c[i];
        prev_d = d[i];
    }
    let mut w = vec![0.0; n];
    w[0] = 1.0;
    for i in (0..m).rev() {
        let next = if i + 1 < m { w[i + 2] } else { 0.0 };
        w[i + 1] = d[i] - c[i] * next;
    }
    Ok(w)
}

/// Consistent boundary flux `(A w)_0` of a discrete profile. For the
/// Galerkin solution this equals the discrete energy `wᵀ A w`, so it
/// approaches `κ_s λ^{2s}` from above.
pub fn dtn_symbol(mp: &ModeProblem, profile: &[f64]) -> Result<f64> {
    let (diag, upper) = assemble(mp);
    if profile.len() != diag.len() {
        return Err(Error::Shape(format!(
            "profile has {} values for {} nodes",
            profile.len(),
            diag.len()
        )));
    }
    Ok(diag[0] * profile[0] + upper[0] * profile[1])
}

/// Discrete weighted energy `∫ ξ^{1−2s}(w'² + λ² w²)` of the piecewise
/// `τ`-linear interpolant of nodal values.
pub fn discrete_energy(mp: &ModeProblem, profile: &[f64]) -> f64 {
    let (diag, upper) = assemble(mp);
    let mut e = 0.0;
    for i in 0..diag.len() {
        e += diag[i] * profile[i] * profile[i];
        if i + 1 < diag.len() {
            e += 2.0 * upper[i] * profile[i] * profile[i + 1];
        }
    }
    e
}

/// Richardson extrapolation of the secant conormals `2s (w_0 − w_j)/ξ_j^{2s}`
/// at the first three interior nodes. Meant for profiles sampled from a
/// smooth function (e.g. the exact profile at the nodes).
pub fn secant_symbol(mp: &ModeProblem, profile: &[f64], tol: f64) -> Result<f64> {
    let xs = mp.nodes();
    let s = mp.order;
    let g = |j: usize| 2.0 * s * (profile[0] - profile[j]) / xs[j].powf(2.0 * s);
    let probes = [xs[3], xs[2], xs[1]];
    let vals = [g(3), g(2), g(1)];
    let (e1, e2) = crate::extension::conormal_exponents(s);
    let (three, two) = crate::extension::richardson(&probes, &vals, e1, e2);
    let residual = (three - two).abs() / three.abs().max(f64::MIN_POSITIVE);
    if residual > tol {
        return Err(Error::ProbeTooCoarse { residual, tol });
    }
    Ok(three)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvergenceRow {
    pub cells: usize,
    pub lambda: f64,
    pub order: f64,
    pub symbol: f64,
    pub error: f64,
    /// `log2(e_prev/e)/log2(J/J_prev)`; `NaN` on the first row.
    pub observed_order: f64,
}

/// Runs [`solve_mode`] and [`dtn_symbol`] for each cell count and compares
/// with the reference symbol `reference` (typically `κ_s λ^{2s}`).
pub fn convergence_study(
    template: &ModeProblem,
    cells: &[usize],
    reference: f64,
) -> Result<Vec<ConvergenceRow>> {
    let symbols = crate::parallel::map(cells, |&j| {
        let mp = template.with_cells(j)?;
        let w = solve_mode(&mp)?;
        dtn_symbol(&mp, &w)
    });
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(cells.len());
    for (&j, sym) in cells.iter().zip(symbols) {
        let symbol = sym?;
        let error = (symbol - reference).abs();
        let observed_order = match rows.last() {
            Some(prev) => (prev.error / error).log2() / (j as f64 / prev.cells as f64).log2(),
            None => f64::NAN,
        };
        rows.push(ConvergenceRow {
            cells: j,
            lambda: template.lambda,
            order: template.order,
            symbol,
            error,
            observed_order,
        });
    }
    Ok(rows)
}

/// CSV with columns `J, lambda, s, symbol, error, order`.
pub fn write_convergence_csv<W: Write>(w: W, rows: &[ConvergenceRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["J", "lambda", "s", "symbol", "error", "order"])?;
    for r in rows {
        wtr.write_record(&[
            r.cells.to_string(),
            format!("{:e}", r.lambda),
            format!("{:e}", r.order),
            format!("{:e}", r.symbol),
            format!("{:e}", r.error),
            format!("{:e}", r.observed_order),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::make_profile;

    #[test]
    fn half_order_profile_is_exponential() {
        let mp = ModeProblem::new(1.0, 0.5, 30.0, 256, 2.0).unwrap();
        let w = solve_mode(&mp).unwrap();
        assert_eq!(w[0], 1.0);
        assert_eq!(*w.last().unwrap(), 0.0);
        let err = mp
            .nodes()
            .iter()
            .zip(&w)
            .map(|(x, v)| (v - (-x).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "max error {err}");
    }

    #[test]
    fn discrete_maximum_principle() {
        for s in [0.2, 0.5, 0.8] {
            for lam in [0.5, 1.0, 5.0] {
                let mp = ModeProblem::standard(lam, s, 64).unwrap();
                let w = solve_mode(&mp).unwrap();
                assert!(w.iter().all(|v| (0.0..=1.0).contains(v)));
                assert!(w.windows(2).all(|p| p[1] <= p[0]));
            }
        }
    }

    #[test]
    fn flux_equals_energy() {
        let mp = ModeProblem::standard(2.0, 0.3, 128).unwrap();
        let w = solve_mode(&mp).unwrap();
        let a = dtn_symbol(&mp, &w).unwrap();
        let b = discrete_energy(&mp, &w);
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn energy_from_above() {
        let prof = make_profile(0.25).unwrap();
        let mp = ModeProblem::standard(1.0, 0.25, 128).unwrap();
        let w = solve_mode(&mp).unwrap();
        assert!(dtn_symbol(&mp, &w).unwrap() >= prof.kappa());
    }

    #[test]
    fn exact_profile_secant() {
        let mp = ModeProblem::new(1.0, 0.5, 30.0, 4096, 2.0).unwrap();
        let w: Vec<f64> = mp.nodes().iter().map(|x| (-x).exp()).collect();
        let sym = secant_symbol(&mp, &w, 1e-3).unwrap();
        assert!((sym - 1.0).abs() < 1e-9, "{sym}");
    }

    #[test]
    fn rejects_bad_problems() {
        assert!(ModeProblem::new(1.0, 0.5, 30.0, 8, 2.0).is_err());
        assert!(ModeProblem::new(0.0, 0.5, 30.0, 64, 2.0).is_err());
        assert!(ModeProblem::new(1.0, 0.5, 30.0, 64, 0.5).is_err());
    }
}

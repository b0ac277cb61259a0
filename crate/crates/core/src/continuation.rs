//! Uniform level bounds below `m₀ = ω^{2s}/2`, the Hausdorff–Young trace
//! constant, the strip energy inequality, and the `m → 0` continuation to
//! `(−Δ)^s u = f(x, u)`.
//!
//! # Nontriviality floor
//!
//! For a critical point `u` of the normalized functional, `J(u) = ½∫(f u − 2F)`,
//! and `|f t − 2F| ≤ (p + 3) C_{1/4} |t|^{p+1} + |t|²` follows from the two
//! growth bounds at `ε = 1/4`. Hölder on the torus gives
//! `|u|²_{L²} ≤ T^{N(p−1)/(p+1)} |u|²_{L^{p+1}}`, so `2K₁ ≤ 2α_m` forces
//! `X = |u|_{L^{p+1}}` above the positive root of
//! `T^{N(p−1)/(p+1)} X² + (p + 3) C_{1/4} X^{p+1} = 2K₁`.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extension::{make_profile, profile_mass_below, profile_slope_energy, ExtensionField};
use crate::functional::Functional;
use crate::hypotheses::{fit_b_a, fit_c_epsilon};
use crate::linking::{
    build_geometry, c_bar, minmax_search, refine_with, MinMaxResult, SolverConfig,
};
use crate::nonlinearity::Nonlinearity;
use crate::params::{Normalization, ProblemParams};
use crate::special::gamma;
use crate::torus::FourierField;

/// Range used when fitting `C_ε` and `B_A` for the level bounds.
pub const FIT_T_MAX: f64 = 1e8;

/// `Σ_{k ∈ ℤ^N, k ≠ 0} |k|^{−a}`: a direct sum over `|k| ≤ R` plus the
/// integral bound of the remainder.
pub fn lattice_sum(dim: usize, a: f64) -> f64 {
    if dim == 1 {
        let r = 10_000usize;
        let head: f64 = (1..=r).rev().map(|n| (n as f64).powf(-a)).sum();
        return 2.0 * head + 2.0 * (r as f64).powf(1.0 - a) / (a - 1.0);
    }
    let r: i64 = match dim {
        2 => 200,
        3 => 40,
        n => ((3e5f64).powf(1.0 / n as f64) / 2.0).floor().max(3.0) as i64,
    };
    let rf = r as f64;
    let side = (2 * r + 1) as usize;
    let total = side.pow(dim as u32);
    let mut head = 0.0;
    let mut k = vec![0i64; dim];
    for idx in 0..total {
        let mut rem = idx;
        for ki in k.iter_mut() {
            *ki = (rem % side) as i64 - r;
            rem /= side;
        }
        let q: i64 = k.iter().map(|v| v * v).sum();
        if q == 0 || q as f64 > rf * rf {
            continue;
        }
        head += (q as f64).powf(-0.5 * a);
    }
    // Every lattice point outside the ball owns a unit cube in |x| ≥ R − h,
    // on which |k|^{-a} ≤ (|x| − h)^{-a}.
    let h = 0.5 * (dim as f64).sqrt();
    let sphere = 2.0 * PI.powf(0.5 * dim as f64) / gamma(0.5 * dim as f64);
    let base = rf - 2.0 * h;
    let mut tail = 0.0;
    let mut binom = 1.0;
    for j in 0..dim {
        tail += binom * h.powi((dim - 1 - j) as i32) * base.powf(j as f64 - a + 1.0) / (a - j as f64 - 1.0);
        binom = binom * (dim - 1 - j) as f64 / (j + 1) as f64;
    }
    head + sphere * tail
}

/// Constant `C''` with `|u|_{L^q} ≤ C'' √κ |u|_H` for zero-mean `u`, from
/// Hausdorff–Young and Hölder against `Σ |k|^{−2sq'/(2−q')}`.
///
/// `kappa` is the factor in front of the energy (`κ_s`, or 1 when normalized).
pub fn hy_constant(params: &ProblemParams, q: f64, kappa: f64) -> Result<f64> {
    let n = params.dim as f64;
    let s = params.order;
    if !(q > 2.0) {
        return Err(Error::DivergentSum {
            q,
            exponent: f64::NAN,
            dim: params.dim,
        });
    }
    let qp = q / (q - 1.0);
    let a = 2.0 * s * qp / (2.0 - qp);
    if a <= n {
        return Err(Error::DivergentSum {
            q,
            exponent: a,
            dim: params.dim,
        });
    }
    let sum = lattice_sum(params.dim, a);
    let vol_factor = params.volume().powf(-0.5).powf(2.0 / qp - 1.0);
    Ok(vol_factor * params.omega().powf(-s) / kappa.sqrt() * sum.powf((2.0 - qp) / (2.0 * qp)))
}

/// Constants of the level bracket `K₁ ≤ α_m ≤ K₂` for `0 < m < m₀`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ContinuationBounds {
    pub m0: f64,
    pub k1: f64,
    pub k2: f64,
    pub b: f64,
    pub epsilon: f64,
    pub c_epsilon: f64,
    /// `C''` for `q = p + 1` with `κ = 1`.
    pub cpp: f64,
    pub a: f64,
    pub b_a: f64,
    /// `κ` in front of the functional the bounds refer to.
    pub kappa: f64,
}

/// `ε = ω^{2s}/8`, so `b = 1/4 − ε/ω^{2s} = 1/8`.
///
/// `K₁` needs `m^{2s} ≤ ω^{2s}/2` so that `½ − (m^{2s}/2 + ε)/ω^{2s} ≥ b`;
/// [`run_continuation`] enforces this on the schedule.
pub fn bounds(params: &ProblemParams, nl: &Nonlinearity, normalization: Normalization) -> Result<ContinuationBounds> {
    let s = params.order;
    let w2s = params.omega().powf(2.0 * s);
    let m0 = 0.5 * w2s;
    let kappa = match normalization {
        Normalization::Explicit => make_profile(s)?.kappa(),
        Normalization::Normalized => 1.0,
    };
    let p = nl.growth();
    let epsilon = w2s / 8.0;
    let b = 0.25 - epsilon / w2s;
    let c_epsilon = fit_c_epsilon(nl, epsilon, FIT_T_MAX);
    let cpp = hy_constant(params, p + 1.0, 1.0)?;
    let cb = c_epsilon * cpp.powf(p + 1.0);
    let k1_norm = if cb > 0.0 {
        0.5 * b * (b / (2.0 * cb)).powf(2.0 / (p - 1.0))
    } else {
        f64::INFINITY
    };
    let at_m0 = params.with_mass(m0)?;
    let a = c_bar(&at_m0);
    let b_a = fit_b_a(nl, a, FIT_T_MAX).unwrap_or(f64::INFINITY);
    Ok(ContinuationBounds {
        m0,
        k1: kappa * k1_norm,
        k2: kappa * b_a * params.volume(),
        b,
        epsilon,
        c_epsilon,
        cpp,
        a,
        b_a,
        kappa,
    })
}

/// Positive root of `T^{N(p−1)/(p+1)} X² + (p + 3) C_{1/4} X^{p+1} = 2K₁`
/// with `K₁` in normalized units.
pub fn nontriviality_floor(params: &ProblemParams, nl: &Nonlinearity, k1_normalized: f64) -> f64 {
    let p = nl.growth();
    let holder = params.volume().powf((p - 1.0) / (p + 1.0));
    let c = (p + 3.0) * fit_c_epsilon(nl, 0.25, FIT_T_MAX);
    let g = |x: f64| holder * x * x + c * x.powf(p + 1.0) - 2.0 * k1_normalized;
    let mut hi = 1.0;
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Both sides of the strip inequality
/// `∫_0^δ ξ^{1−2s}|v|² ≤ δ^{2−2s}/(1−s) |v(·,0)|² + δ²/(2s) ‖∂_ξ v‖²`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StripReport {
    pub delta: f64,
    pub strip_mass: f64,
    pub trace_term: f64,
    pub slope_term: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Per-mode evaluation of the strip inequality for the Bessel extension of
/// `v.trace`. With `S(a) = ∫_0^a η^{1−2s} θ²` and `D = ∫ η^{1−2s} θ'²`, mode
/// `k` contributes `λ^{2s−2} S(λδ)` on the left and `λ^{2s} D` to the slope
/// energy.
pub fn strip_bound_check(v: &ExtensionField, delta: f64) -> StripReport {
    let s = v.profile.order();
    let slope = profile_slope_energy(&v.profile, s);
    let lam = v.lambdas();
    // Modes share λ along lattice shells; integrate once per shell.
    let mut shells = lam.clone();
    shells.sort_by(f64::total_cmp);
    shells.dedup();
    let shell_mass = crate::parallel::map(&shells, |&l| {
        if l == 0.0 {
            delta.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s)
        } else {
            l.powf(2.0 * s - 2.0) * profile_mass_below(&v.profile, s, l * delta)
        }
    });
    let mut strip_mass = 0.0;
    let mut trace = 0.0;
    let mut slope_energy = 0.0;
    for (c, &l) in v.trace.coeffs().iter().zip(&lam) {
        let mass = shell_mass[shells.binary_search_by(|x| x.total_cmp(&l)).expect("shell present")];
        let c2 = c.norm_sqr();
        strip_mass += c2 * mass;
        trace += c2;
        slope_energy += c2 * l.powf(2.0 * s) * slope;
    }
    let trace_term = delta.powf(2.0 - 2.0 * s) / (1.0 - s) * trace;
    let slope_term = delta * delta / (2.0 * s) * slope_energy;
    let slack = trace_term + slope_term - strip_mass;
    StripReport {
        delta,
        strip_mass,
        trace_term,
        slope_term,
        slack,
        holds: slack >= -1e-12 * (trace_term + slope_term),
    }
}

/// Checks along the run that hold for every `v_m` with trace `u`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormBounds {
    /// `‖∇v‖² ≤ ‖v‖²`.
    pub gradient_energy: f64,
    pub energy: f64,
    /// `[u]_H ≤ κ_s^{−1/2} ‖v‖`.
    pub seminorm: f64,
    pub seminorm_bound: f64,
    /// `κ_s (2|u|²_{L²} − 2B₁T^N) ≤ ‖v‖²`.
    pub l2_lhs: f64,
    pub holds: bool,
}

fn norm_bounds(u: &FourierField, nl: &Nonlinearity) -> Result<NormBounds> {
    let p = u.params();
    let s = p.order;
    let profile = make_profile(s)?;
    let kappa = profile.kappa();
    let energy = kappa * u.hs_norm_sq();
    // ‖∇v‖² drops the m² v² term of the extension energy.
    let mass_part = if p.mass > 0.0 {
        let lam_part: f64 = u
            .coeffs()
            .iter()
            .zip(u.k_squared())
            .map(|(c, q)| {
                let l2 = p.omega().powi(2) * q + p.mass * p.mass;
                c.norm_sqr() * p.mass * p.mass * l2.powf(s - 1.0)
            })
            .sum();
        lam_part * (profile.energy_integral() - profile_slope_energy(&profile, s))
    } else {
        0.0
    };
    let gradient_energy = energy - mass_part;
    let seminorm = u.seminorm();
    let seminorm_bound = (energy / kappa).sqrt();
    let b1 = fit_b_a(nl, 1.0, FIT_T_MAX).unwrap_or(f64::INFINITY);
    let l2 = u.l2_norm();
    let l2_lhs = kappa * (2.0 * l2 * l2 - 2.0 * b1 * p.volume());
    let tol = 1e-10 * (1.0 + energy);
    Ok(NormBounds {
        gradient_energy,
        energy,
        seminorm,
        seminorm_bound,
        l2_lhs,
        holds: gradient_energy <= energy + tol && seminorm <= seminorm_bound + tol && l2_lhs <= energy + tol,
    })
}

/// One step of the schedule.
#[derive(Debug, Clone, Serialize)]
pub struct ContinuationStep {
    pub mass: f64,
    pub alpha: f64,
    pub residual: f64,
    pub iterations: usize,
    pub l2_norm: f64,
    pub lp_norm: f64,
    pub norms: NormBounds,
    #[serde(skip)]
    pub result: MinMaxResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationReport {
    pub label: String,
    pub schedule: Vec<f64>,
    pub bounds: ContinuationBounds,
    pub steps: Vec<ContinuationStep>,
    /// Limit field at `m = 0`.
    #[serde(skip)]
    pub limit: FourierField,
    /// `‖(ω²|k|²)^s c_k − f̂_k‖` in the `(ω²|k|²+1)^s` dual norm.
    pub limit_residual: f64,
    pub limit_level: f64,
    pub limit_lp_norm: f64,
    pub floor: f64,
}

impl ContinuationReport {
    pub fn alphas(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.alpha).collect()
    }

    /// JSON with the limit field embedded.
    pub fn to_json_value(&self) -> Result<serde_json::Value> {
        let mut v = serde_json::to_value(self)?;
        v["limit_field"] = self.limit.to_json_value()?;
        Ok(v)
    }

    /// Columns `m, alpha, residual, l2_norm, lp_norm`; the last row is the limit.
    pub fn write_summary_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["m", "alpha", "residual", "l2_norm", "lp_norm"])?;
        for s in &self.steps {
            out.write_record([s.mass, s.alpha, s.residual, s.l2_norm, s.lp_norm].map(|x| format!("{x:.12e}")))?;
        }
        out.write_record(
            [0.0, self.limit_level, self.limit_residual, self.limit.l2_norm(), self.limit_lp_norm]
                .map(|x| format!("{x:.12e}")),
        )?;
        out.flush()?;
        Ok(())
    }
}

/// Options for [`run_continuation`].
#[derive(Debug, Clone)]
pub struct ContinuationConfig {
    pub solver: SolverConfig,
    /// Slack on `[K₁, K₂]`.
    pub level_tol: f64,
    /// Tolerance on the weighted residual of the limit equation.
    pub limit_tol: f64,
    pub warm_start: bool,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            level_tol: 1e-8,
            limit_tol: 1e-5,
            warm_start: true,
        }
    }
}

/// `m = 1/2, 1/4, …, 2^{−levels}` scaled by `m₀`'s value at `ω = 1`.
pub fn default_schedule(levels: u32) -> Vec<f64> {
    (1..=levels).map(|j| 0.5f64.powi(j as i32)).collect()
}

/// Solves along a decreasing schedule of masses, then passes to `m = 0` by a
/// Newton solve warm-started from the last solution.
pub fn run_continuation(
    template: &ProblemParams,
    nl: &Nonlinearity,
    schedule: &[f64],
    cfg: &ContinuationConfig,
) -> Result<ContinuationReport> {
    let s = template.order;
    let w2s = template.omega().powf(2.0 * s);
    let m0 = 0.5 * w2s;
    if schedule.is_empty() {
        return Err(Error::InvalidParams("empty continuation schedule".into()));
    }
    for (i, &m) in schedule.iter().enumerate() {
        if !(m > 0.0 && m <= m0 && m.powf(2.0 * s) <= m0) {
            return Err(Error::InvalidParams(format!(
                "schedule value m = {m} outside (0, m0 = {m0}]"
            )));
        }
        if i > 0 && m >= schedule[i - 1] {
            return Err(Error::InvalidParams("schedule must be strictly decreasing".into()));
        }
    }
    let bounds = bounds(template, nl, Normalization::Explicit)?;
    let p = nl.growth();
    let mut steps = Vec::with_capacity(schedule.len());
    let mut previous: Option<FourierField> = None;
    for &m in schedule {
        let params = template.with_mass(m)?;
        let f = Functional::new(params, nl, Normalization::Explicit)?;
        let geom = build_geometry(&f)?;
        let start = if cfg.warm_start { previous.as_ref() } else { None };
        let result = match start {
            Some(u) => {
                let u = u.with_params(params)?;
                let mut r = refine_with(&f, &u, &cfg.solver, Some(geom.b_lower), None)?;
                if !r.converged {
                    r = minmax_search(&f, &geom, &cfg.solver)?;
                }
                r
            }
            None => minmax_search(&f, &geom, &cfg.solver)?,
        };
        if result.alpha < bounds.k1 - cfg.level_tol || result.alpha > bounds.k2 + cfg.level_tol {
            return Err(Error::LevelOutOfBounds {
                mass: m,
                alpha: result.alpha,
                k1: bounds.k1,
                k2: bounds.k2,
            });
        }
        let u = &result.candidate;
        steps.push(ContinuationStep {
            mass: m,
            alpha: result.alpha,
            residual: result.residual,
            iterations: result.iterations,
            l2_norm: u.l2_norm(),
            lp_norm: f.lq_norm(u, p + 1.0)?,
            norms: norm_bounds(u, nl)?,
            result: result.clone(),
        });
        previous = Some(result.candidate);
    }

    let limit_params = template.with_mass(0.0)?;
    let f0 = Functional::new(limit_params, nl, Normalization::Explicit)?;
    let last = previous.expect("nonempty schedule").with_params(limit_params)?;
    let limit = refine_with(&f0, &last, &cfg.solver, None, None)?;
    let u0 = limit.candidate;
    let g = f0.gradient(&u0)?;
    let weights: Vec<f64> = u0
        .k_squared()
        .iter()
        .map(|&q| (limit_params.omega().powi(2) * q + 1.0).powf(s))
        .collect();
    let limit_residual = f0.weighted_dual(&g, &weights);
    let limit_lp_norm = f0.lq_norm(&u0, p + 1.0)?;
    let floor = nontriviality_floor(template, nl, bounds.k1 / bounds.kappa);
    if limit_lp_norm < floor {
        return Err(Error::TrivialLimit {
            norm: limit_lp_norm,
            floor,
        });
    }
    Ok(ContinuationReport {
        label: nl.label().to_string(),
        schedule: schedule.to_vec(),
        bounds,
        steps,
        limit_level: f0.value(&u0)?,
        limit: u0,
        limit_residual,
        limit_lp_norm,
        floor,
    })
}

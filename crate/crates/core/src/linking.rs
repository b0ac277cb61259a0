//! Linking geometry and the min-max search.
//!
//! On the trace side `Y` is the line of constants and `Z` the zero-mean
//! fields. For a fixed direction `ẑ ∈ Z` the set `M` is the half-disc
//! `{y e_y + t ẑ : t ≥ 0, y² + t² ≤ ρ²}` (energy units), and `M₀` is its
//! boundary: the diameter on `Y` and the rim.
//!
//! The level `inf_γ max_M J∘γ` is approximated by a local min-max: the peak of
//! `J` over the half-plane spanned by `e_y` and `ẑ` is found on a polar mesh
//! and polished by 2-D Newton, then `ẑ` descends along the `Z`-part of the
//! Riesz gradient. Every accepted step lowers the peak, so the max-over-path
//! level is nonincreasing. The final peak is handed to a Newton solve of
//! `J'(u) = 0`.

use std::io::Write;

use nalgebra::{DVector, Matrix2, SymmetricEigen, Vector2};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::continuation::{hy_constant, FIT_T_MAX};
use crate::error::{Error, Result};
use crate::extension::{make_profile, ExtensionField};
use crate::functional::{from_real, to_real, Functional};
use crate::hypotheses::{fit_b_a, fit_c_epsilon};
use crate::nonlinearity::Nonlinearity;
use crate::params::{Normalization, ProblemParams};
use crate::quad::unit_interval_singular;
use crate::random::{random_field, rng, FieldSpec};
use crate::special::beta;
use crate::torus::{FourierField, GridField};

/// Splits `u` into its mean mode (in `Y`) and zero-mean remainder (in `Z`).
pub fn split(u: &FourierField) -> (FourierField, FourierField) {
    let zero = u.zero_index();
    let mut y = vec![Complex64::new(0.0, 0.0); u.len()];
    y[zero] = u.coeffs()[zero];
    let mut z = u.coeffs().to_vec();
    z[zero] = Complex64::new(0.0, 0.0);
    let p = *u.params();
    (
        FourierField::from_coeffs(p, y).expect("shape"),
        FourierField::from_coeffs(p, z).expect("shape"),
    )
}

/// `C_m = 1 − m^{2s}/(ω² + m²)^s`, the infimum over `Z` of
/// `(|u|²_H − m^{2s}|u|²_{L²}) / |u|²_H`.
pub fn coercivity_constant(params: &ProblemParams) -> f64 {
    1.0 - params.mass_power() / params.symbol(1.0)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoercivityCheck {
    pub closed_form: f64,
    /// Smallest Rayleigh quotient over the random samples.
    pub sampled_min: f64,
    /// The best sample after power iteration towards the lowest quotient.
    pub polished: f64,
    pub samples: usize,
}

fn rayleigh(u: &FourierField) -> f64 {
    u.shifted_form() / u.hs_norm_sq()
}

/// Samples the Rayleigh quotient of `C_m` over random zero-mean fields.
pub fn coercivity_check(params: &ProblemParams, samples: usize, seed: u64) -> CoercivityCheck {
    let mut g = rng(seed);
    let fields: Vec<FourierField> = (0..samples)
        .map(|_| {
            let spec = FieldSpec {
                decay: g.random_range(0.0..3.0),
                zero_mean: true,
                ..FieldSpec::default()
            };
            random_field(*params, spec, &mut g)
        })
        .collect();
    let quotients = crate::parallel::map(&fields, rayleigh);
    let (best, sampled_min) = quotients
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &q)| if q < acc.1 { (i, q) } else { acc });
    // Powers of the diagonal m^{2s}/symbol concentrate on |k| = 1.
    let ratio = fields[best].k_squared();
    let ratio: Vec<f64> = ratio.iter().map(|&q| params.mass_power() / params.symbol(q)).collect();
    let mut u = fields[best].clone();
    for _ in 0..2000 {
        let c: Vec<Complex64> = u.coeffs().iter().zip(&ratio).map(|(c, r)| c * r).collect();
        let next = FourierField::from_coeffs(*params, c).expect("shape");
        let n = next.hs_norm();
        if !(n > 0.0) {
            break;
        }
        u = next.scale(1.0 / n);
    }
    CoercivityCheck {
        closed_form: coercivity_constant(params),
        sampled_min,
        polished: rayleigh(&u).min(sampled_min),
        samples,
    }
}

/// Constants relating the energy of `w = Π sin(ωx_i)/(ξ+1)` to its trace:
/// `‖w‖² = (C₂ + m² C₃) |w(·,0)|²` and `C₁ = C₂`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EinsteinConstants {
    /// `∫₀^∞ ξ^{1−2s}(1+ξ)^{−2} = B(2−2s, 2s)`.
    pub i2: f64,
    /// `∫₀^∞ ξ^{1−2s}(1+ξ)^{−4} = B(2−2s, 2+2s)`.
    pub i4: f64,
    pub i2_quadrature: f64,
    pub i4_quadrature: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

pub fn einstein_constants(params: &ProblemParams) -> EinsteinConstants {
    let s = params.order;
    let i2 = beta(2.0 - 2.0 * s, 2.0 * s);
    let i4 = beta(2.0 - 2.0 * s, 2.0 + 2.0 * s);
    // Split at ξ = 1 and map the outer half with ξ = 1/η.
    let tol = 1e-13;
    let i2_quadrature = unit_interval_singular(&|x: f64| x.powf(1.0 - 2.0 * s) / (1.0 + x).powi(2), tol)
        + unit_interval_singular(&|x: f64| x.powf(2.0 * s - 1.0) / (1.0 + x).powi(2), tol);
    let i4_quadrature = unit_interval_singular(&|x: f64| x.powf(1.0 - 2.0 * s) / (1.0 + x).powi(4), tol)
        + unit_interval_singular(&|x: f64| x.powf(2.0 * s + 1.0) / (1.0 + x).powi(4), tol);
    let n = params.dim as f64;
    let c2 = n * params.omega().powi(2) * i2 + i4;
    EinsteinConstants {
        i2,
        i4,
        i2_quadrature,
        i4_quadrature,
        c1: c2,
        c2,
        c3: i2,
    }
}

/// `C̄(m, s)`: an upper bound for `‖v‖²/|v(·,0)|²_{L²}` on `Y ⊕ ℝ w`.
///
/// The cylinder form `max(m^{2s}, 1) max(1, C₂ + m² C₃)` is raised, if
/// needed, to the trace-side ratio `max(m^{2s}, (Nω² + m²)^s)`.
pub fn c_bar(params: &ProblemParams) -> f64 {
    let e = einstein_constants(params);
    let m = params.mass;
    let cylinder = params.mass_power().max(1.0) * (e.c2 + m * m * e.c3).max(1.0);
    let trace = params.mass_power().max(params.symbol(params.dim as f64));
    cylinder.max(trace)
}

#[derive(Debug, Clone, Serialize)]
pub struct LinkingGeometry {
    /// Radius of the sphere `N_r ⊂ Z`.
    pub r: f64,
    /// Radius of the half-disc `M`.
    pub rho: f64,
    /// `r w/‖w‖`.
    #[serde(skip)]
    pub z: FourierField,
    /// `Π sin(ω x_i)`.
    #[serde(skip)]
    pub w_trace: FourierField,
    /// Unit-energy constant.
    #[serde(skip)]
    pub e_y: FourierField,
    pub c_m: f64,
    pub epsilon: f64,
    pub c_epsilon: f64,
    /// Trace constant `|u|_{L^{p+1}} ≤ C'' ‖u‖` on `Z`.
    pub cpp: f64,
    /// `b_m`: the analytic lower bound of `J` on `N_r`.
    pub b_lower: f64,
    pub einstein: EinsteinConstants,
    pub c_bar: f64,
    pub a: f64,
    pub b_a: Option<f64>,
    /// False when `B_A` is unavailable and `ρ` is a fallback.
    pub rho_certified: bool,
    pub kappa: f64,
}

impl LinkingGeometry {
    /// `y e_y + t ẑ` with `ẑ = z/r`.
    pub fn point(&self, y: f64, t: f64) -> FourierField {
        self.e_y.scale(y).axpy(t / self.r, &self.z)
    }
}

const FALLBACK_RHO: f64 = 4.0;

/// Builds `N_r`, `M` and `M₀` from the fitted constants of `f`.
///
/// With `λ_Z = (ω² + m²)^s`, `J ≥ (C_m/2 − ε/λ_Z) r² − κ C_ε (C'' r)^{p+1}`
/// on `N_r`; `ε = C_m λ_Z/4` and `r` maximizes the bound (capped at ½).
/// `ρ` doubles the zero of `(½ − A/C̄)ρ² + κ B_A T^N` with `A = C̄`.
pub fn build_geometry(f: &Functional) -> Result<LinkingGeometry> {
    let params = *f.params();
    if params.mass <= 0.0 {
        return Err(Error::InvalidParams("linking geometry needs m > 0".into()));
    }
    if params.cutoff == 0 {
        return Err(Error::InvalidParams("linking geometry needs K >= 1".into()));
    }
    let nl = f.nonlinearity();
    let kappa = f.kappa();
    let p = nl.growth();
    let c_m = coercivity_constant(&params);
    let lam_z = params.symbol(1.0);
    let epsilon = 0.25 * c_m * lam_z;
    let c_epsilon = fit_c_epsilon(nl, epsilon, FIT_T_MAX);
    let cpp = hy_constant(&params, p + 1.0, kappa)?;
    let a2 = 0.5 * c_m - epsilon / lam_z;
    let cp = kappa * c_epsilon * cpp.powf(p + 1.0);
    let r_star = if cp > 0.0 {
        (2.0 * a2 / ((p + 1.0) * cp)).powf(1.0 / (p - 1.0))
    } else {
        f64::INFINITY
    };
    let r = r_star.min(0.5);
    let b_lower = a2 * r * r - cp * r.powf(p + 1.0);
    if !(b_lower > 0.0) {
        return Err(Error::GeometryInfeasible(format!(
            "lower bound {b_lower:.3e} on N_r is not positive (C_eps = {c_epsilon:.3e}, C'' = {cpp:.3e})"
        )));
    }

    let omega = params.omega();
    // Sampled, then cleaned to its exact support |k_i| = 1.
    let sampled = GridField::from_fn(params, |x| x.iter().map(|&xi| (omega * xi).sin()).product()).to_fourier();
    let support: Vec<Complex64> = (0..sampled.len())
        .map(|i| {
            if sampled.mode(i).iter().all(|k| k.abs() == 1) {
                sampled.coeffs()[i]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let w_trace = FourierField::from_coeffs(params, support)?.symmetrize();
    let z = w_trace.scale(r / f.energy_norm(&w_trace));
    let zero = vec![0; params.dim];
    let c0 = 1.0 / (kappa * params.mass_power()).sqrt();
    let e_y = FourierField::single_mode(params, &zero, Complex64::new(c0, 0.0))?;

    let einstein = einstein_constants(&params);
    let cb = c_bar(&params);
    let a = cb;
    let b_a = fit_b_a(nl, a, FIT_T_MAX);
    let (rho, rho_certified) = match b_a {
        Some(b) => {
            let zero_crossing = (kappa * b * params.volume() / (a / cb - 0.5)).sqrt();
            ((2.0 * zero_crossing).max(2.0), true)
        }
        None => (FALLBACK_RHO, false),
    };
    Ok(LinkingGeometry {
        r,
        rho,
        z,
        w_trace,
        e_y,
        c_m,
        epsilon,
        c_epsilon,
        cpp,
        b_lower,
        einstein,
        c_bar: cb,
        a,
        b_a,
        rho_certified,
        kappa,
    })
}

/// Extremes of `J` on sampled points of `Y`, `N_r` and `M₀`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GeometrySamples {
    pub samples: usize,
    pub y_max: f64,
    pub n_r_min: f64,
    pub m0_max: f64,
    pub b_lower: f64,
}

/// Draws `samples` points from each of `Y`, `N_r` and `M₀`. The draws are
/// sequential from one seeded stream; the evaluations run in parallel.
pub fn sample_geometry(
    f: &Functional,
    geom: &LinkingGeometry,
    samples: usize,
    seed: u64,
) -> Result<GeometrySamples> {
    let params = *f.params();
    let mut g = rng(seed);
    let rho = geom.rho;
    let mut pts = Vec::with_capacity(3 * samples);
    for _ in 0..samples {
        pts.push(geom.point(g.random_range(-2.0 * rho..=2.0 * rho), 0.0));
    }
    for _ in 0..samples {
        let spec = FieldSpec {
            decay: g.random_range(0.0..3.0),
            zero_mean: true,
            ..FieldSpec::default()
        };
        let u = random_field(params, spec, &mut g);
        pts.push(u.scale(geom.r / f.energy_norm(&u)));
    }
    for i in 0..samples {
        if i % 2 == 0 {
            let phi = g.random_range(0.0..=std::f64::consts::PI);
            pts.push(geom.point(rho * phi.cos(), rho * phi.sin()));
        } else {
            pts.push(geom.point(g.random_range(-rho..=rho), 0.0));
        }
    }
    let values = crate::parallel::map(&pts, |u| f.value(u));
    let mut vals = Vec::with_capacity(values.len());
    for v in values {
        vals.push(v?);
    }
    let fold_max = |xs: &[f64]| xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let fold_min = |xs: &[f64]| xs.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(GeometrySamples {
        samples,
        y_max: fold_max(&vals[..samples]),
        n_r_min: fold_min(&vals[samples..2 * samples]),
        m0_max: fold_max(&vals[2 * samples..]),
        b_lower: geom.b_lower,
    })
}

/// Knobs of [`minmax_search`] and [`refine`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    /// Stop `refine` when the Cerami measure falls below this.
    pub cerami_tol: f64,
    /// Hand over to `refine` when `(1 + ‖v‖)‖J'(v)|_Z‖_*` falls below this.
    pub path_tol: f64,
    pub max_iterations: usize,
    pub refine_iterations: usize,
    pub trivial_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            radial_nodes: 40,
            angular_nodes: 40,
            cerami_tol: 1e-8,
            path_tol: 1e-5,
            max_iterations: 500,
            refine_iterations: 50,
            trivial_floor: 1e-8,
        }
    }
}

/// One line of the solver trace.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub phase: &'static str,
    pub iteration: usize,
    pub level: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinMaxResult {
    #[serde(skip)]
    pub candidate: FourierField,
    pub alpha: f64,
    /// Cerami measure `(1 + ‖u‖)‖J'(u)‖_*` at the candidate.
    pub residual: f64,
    /// `(iteration, peak level)` of the path descent.
    pub path_history: Vec<(usize, f64)>,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
    /// Path steps plus Newton steps.
    pub iterations: usize,
    /// `b_m` when known.
    pub lower: Option<f64>,
    /// Peak of `J` over the initial `M` when known.
    pub upper: Option<f64>,
    /// No interior peak above the `M₀` values: there is no linking level.
    pub degenerate: bool,
}

impl MinMaxResult {
    pub fn to_json_value(&self) -> Result<serde_json::Value> {
        let mut v = serde_json::to_value(self)?;
        v["candidate"] = self.candidate.to_json_value()?;
        Ok(v)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_json_value()?)?)
    }

    /// Columns `phase, iteration, level, residual`.
    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["phase", "iteration", "level", "residual"])?;
        for row in &self.trace {
            out.write_record([
                row.phase.to_string(),
                row.iteration.to_string(),
                format!("{:.16e}", row.level),
                format!("{:.16e}", row.residual),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Dual norm used for stopping: the functional's own, except at `m = 0`
/// where the mean mode is weighted by `(ω²|k|² + 1)^s`.
fn residual_norm(f: &Functional, g: &FourierField) -> f64 {
    let p = f.params();
    if p.mass > 0.0 {
        f.dual_norm(g)
    } else {
        let w2 = p.omega().powi(2);
        let weights: Vec<f64> = g.k_squared().iter().map(|&q| (w2 * q + 1.0).powf(p.order)).collect();
        f.weighted_dual(g, &weights)
    }
}

fn cerami(f: &Functional, u: &FourierField) -> Result<(f64, f64, FourierField)> {
    let level = f.value(u)?;
    let g = f.gradient(u)?;
    let measure = (1.0 + f.energy_norm(u)) * residual_norm(f, &g);
    Ok((level, measure, g))
}

/// Peak of `J` on the half-plane `{y e_y + t ẑ : t ≥ 0}`.
#[derive(Debug, Clone, Copy)]
struct Peak {
    y: f64,
    t: f64,
    level: f64,
}

struct Plane<'a> {
    f: &'a Functional,
    e_y: &'a FourierField,
    zhat: FourierField,
}

impl Plane<'_> {
    fn point(&self, y: f64, t: f64) -> FourierField {
        self.e_y.scale(y).axpy(t, &self.zhat)
    }

    fn value(&self, y: f64, t: f64) -> Result<f64> {
        self.f.value(&self.point(y, t))
    }

    /// Newton ascent in `(y, t)`, falling back to gradient ascent where the
    /// 2×2 Hessian is not negative definite.
    fn polish(&self, start: Peak) -> Result<Peak> {
        let mut cur = start;
        for _ in 0..60 {
            let u = self.point(cur.y, cur.t);
            let g = self.f.gradient(&u)?;
            let grad = Vector2::new(self.f.pairing(&g, self.e_y), self.f.pairing(&g, &self.zhat));
            if grad.norm() <= 1e-14 * (1.0 + cur.level.abs()) {
                break;
            }
            let hy = self.f.hessian_apply(&u, self.e_y)?;
            let hz = self.f.hessian_apply(&u, &self.zhat)?;
            let h = Matrix2::new(
                self.f.pairing(&hy, self.e_y),
                self.f.pairing(&hy, &self.zhat),
                self.f.pairing(&hz, self.e_y),
                self.f.pairing(&hz, &self.zhat),
            );
            let h = (h + h.transpose()) * 0.5;
            let newton = (h[(0, 0)] < 0.0 && h.determinant() > 0.0)
                .then(|| h.try_inverse().map(|inv| -(inv * grad)))
                .flatten();
            let step = newton.unwrap_or_else(|| grad / h.norm().max(1.0));
            let mut sigma = 1.0;
            let mut moved = false;
            for _ in 0..40 {
                let y = cur.y + sigma * step[0];
                let t = (cur.t + sigma * step[1]).max(0.0);
                let level = self.value(y, t)?;
                if level > cur.level {
                    cur = Peak { y, t, level };
                    moved = true;
                    break;
                }
                sigma *= 0.5;
            }
            if !moved {
                break;
            }
        }
        Ok(cur)
    }
}

/// Mesh maximum with ties broken towards the lowest `(|y|, t)`.
fn better(a: &(f64, f64, f64), b: &(f64, f64, f64)) -> bool {
    if a.2 != b.2 {
        return a.2 > b.2;
    }
    (a.0.abs(), a.1) < (b.0.abs(), b.1)
}

/// Min-max search over paths through `M`, finished by [`refine`].
pub fn minmax_search(f: &Functional, geom: &LinkingGeometry, cfg: &SolverConfig) -> Result<MinMaxResult> {
    let nr = cfg.radial_nodes.max(2);
    let na = cfg.angular_nodes.max(2);
    let rho = geom.rho;
    let plane = Plane {
        f,
        e_y: &geom.e_y,
        zhat: geom.z.scale(1.0 / geom.r),
    };
    let nodes: Vec<(usize, usize)> = (0..=nr).flat_map(|i| (0..=na).map(move |j| (i, j))).collect();
    let evaluated = crate::parallel::map(&nodes, |&(i, j)| {
        let radius = rho * (i as f64 / nr as f64).powi(3);
        let phi = std::f64::consts::PI * j as f64 / na as f64;
        let (y, t) = (radius * phi.cos(), radius * phi.sin().max(0.0));
        plane.value(y, t).map(|v| (y, t, v))
    });
    let mut interior: Option<(f64, f64, f64)> = None;
    let mut m0_max = f64::NEG_INFINITY;
    for (&(i, j), v) in nodes.iter().zip(evaluated) {
        let v = v?;
        if i == nr || j == 0 || j == na || i == 0 {
            m0_max = m0_max.max(v.2);
        } else if interior.as_ref().is_none_or(|best| better(&v, best)) {
            interior = Some(v);
        }
    }
    let interior = interior.expect("mesh has interior nodes");
    if interior.2 <= m0_max {
        let mut out = refine_with(f, &geom.z, cfg, Some(geom.b_lower), Some(interior.2.max(m0_max)));
        if let Ok(r) = out.as_mut() {
            r.degenerate = true;
            r.converged = false;
        }
        if let Err(Error::ConvergedToTrivial(r)) = out.as_mut() {
            r.degenerate = true;
        }
        return out;
    }
    let upper = interior.2;
    let mut peak = plane.polish(Peak {
        y: interior.0,
        t: interior.1,
        level: interior.2,
    })?;
    let mut zhat = plane.zhat.clone();
    let mut history = vec![(0usize, peak.level)];
    let mut trace = Vec::new();
    let mut sigma = 1.0;
    let mut iterations = 0;
    for it in 1..=cfg.max_iterations {
        iterations = it;
        let plane_now = Plane {
            f,
            e_y: &geom.e_y,
            zhat: zhat.clone(),
        };
        let v = plane_now.point(peak.y, peak.t);
        let g = f.gradient(&v)?;
        let (_, dz) = split(&f.riesz(&g));
        let dn2 = f.pairing(&g, &dz).max(0.0);
        let measure = (1.0 + f.energy_norm(&v)) * dn2.sqrt();
        trace.push(TraceRow {
            phase: "path",
            iteration: it,
            level: peak.level,
            residual: measure,
        });
        if measure < cfg.path_tol {
            break;
        }
        let mut accepted = false;
        while sigma > 1e-14 {
            let moved = zhat.axpy(-sigma, &dz);
            let moved = moved.scale(1.0 / f.energy_norm(&moved));
            let trial = Plane {
                f,
                e_y: &geom.e_y,
                zhat: moved.clone(),
            };
            let start = Peak {
                y: peak.y,
                t: peak.t,
                level: trial.value(peak.y, peak.t)?,
            };
            let next = trial.polish(start)?;
            if next.level < peak.level - 1e-4 * sigma * peak.t * dn2 {
                zhat = moved;
                peak = next;
                sigma *= 2.0;
                accepted = true;
                break;
            }
            sigma *= 0.5;
        }
        history.push((it, peak.level));
        if !accepted {
            break;
        }
    }
    let start = Plane {
        f,
        e_y: &geom.e_y,
        zhat,
    }
    .point(peak.y, peak.t);
    let finish = refine_with(f, &start, cfg, Some(geom.b_lower), Some(upper));
    let attach = |r: &mut MinMaxResult| {
        r.path_history = history.clone();
        let mut rows = trace.clone();
        rows.append(&mut r.trace);
        r.trace = rows;
        r.iterations += iterations;
    };
    match finish {
        Ok(mut r) => {
            attach(&mut r);
            Ok(r)
        }
        Err(Error::MaxIterations(mut r)) | Err(Error::StagnationWithoutConvergence(mut r)) => {
            attach(&mut r);
            Err(Error::StagnationWithoutConvergence(r))
        }
        Err(Error::ConvergedToTrivial(mut r)) => {
            attach(&mut r);
            Err(Error::ConvergedToTrivial(r))
        }
        Err(e) => Err(e),
    }
}

/// Newton iteration on `J'(u) = 0` from `candidate`.
pub fn refine(f: &Functional, candidate: &FourierField, cfg: &SolverConfig) -> Result<MinMaxResult> {
    refine_with(f, candidate, cfg, None, None)
}

/// [`refine`] with the level bracket recorded in the result. Convergence
/// requires the Cerami measure below `cfg.cerami_tol` and, when `lower` is
/// given, `α ≥ lower − tol`.
///
/// Steps use the pseudo-inverse of the Hessian (eigenvalues below `1e-10`
/// of the largest are dropped) with backtracking on the dual norm of `J'`.
pub fn refine_with(
    f: &Functional,
    candidate: &FourierField,
    cfg: &SolverConfig,
    lower: Option<f64>,
    upper: Option<f64>,
) -> Result<MinMaxResult> {
    let params = *f.params();
    let tol = cfg.cerami_tol;
    let mut u = candidate.symmetrize();
    let mut trace = Vec::new();
    let make = |u: FourierField, level: f64, residual: f64, trace: Vec<TraceRow>, iterations: usize| {
        let converged = residual < tol && lower.is_none_or(|b| level >= b - tol);
        MinMaxResult {
            candidate: u,
            alpha: level,
            residual,
            path_history: Vec::new(),
            trace,
            converged,
            iterations,
            lower,
            upper,
            degenerate: false,
        }
    };
    let (mut level, mut measure, mut g) = cerami(f, &u)?;
    for it in 0..=cfg.refine_iterations {
        trace.push(TraceRow {
            phase: "newton",
            iteration: it,
            level,
            residual: measure,
        });
        if u.hs_norm() < cfg.trivial_floor {
            return Err(Error::ConvergedToTrivial(Box::new(make(u, level, measure, trace, it))));
        }
        if measure < tol {
            return Ok(make(u, level, measure, trace, it));
        }
        if it == cfg.refine_iterations {
            break;
        }
        let h = f.hessian(&u)?;
        let eig = SymmetricEigen::new(h);
        let cutoff = 1e-10 * eig.eigenvalues.amax();
        let grad = to_real(&g);
        let mut step = DVector::zeros(grad.len());
        for (i, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam.abs() > cutoff {
                let v = eig.eigenvectors.column(i);
                step -= v * (v.dot(&grad) / lam);
            }
        }
        let dir = from_real(params, &step);
        let merit = residual_norm(f, &g);
        let mut sigma = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let trial = u.axpy(sigma, &dir).symmetrize();
            let (l, m, gt) = cerami(f, &trial)?;
            if residual_norm(f, &gt) < merit {
                u = trial;
                level = l;
                measure = m;
                g = gt;
                moved = true;
                break;
            }
            sigma *= 0.5;
        }
        if !moved {
            return Err(Error::StagnationWithoutConvergence(Box::new(make(
                u, level, measure, trace, it,
            ))));
        }
    }
    let n = cfg.refine_iterations;
    Err(Error::MaxIterations(Box::new(make(u, level, measure, trace, n))))
}

/// Weak-equation residual through the extension:
/// `‖DtN u − κ_s m^{2s} u − κ_s f̂(u)‖ / ‖κ_s f̂(u)‖`, with the DtN map
/// extrapolated from `probes`.
pub fn weak_form_residual(u: &FourierField, nl: &Nonlinearity, probes: &[f64], tol: f64) -> Result<f64> {
    let params = *u.params();
    let kappa = make_profile(params.order)?.kappa();
    let dtn = ExtensionField::new(u.clone())?.dtn_apply(probes, tol)?;
    let f = Functional::new(params, nl, Normalization::Explicit)?;
    let rhs = f.nonlinear_term(u)?.scale(kappa);
    let res = dtn.sub(&u.scale(kappa * params.mass_power())).sub(&rhs);
    Ok(res.l2_norm() / rhs.l2_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::builtin_nonlinearity;
    use approx::assert_relative_eq;

    fn params() -> ProblemParams {
        ProblemParams::new(1, 2.0 * std::f64::consts::PI, 0.5, 1.0, 8, 32).unwrap()
    }

    #[test]
    fn split_is_a_projection() {
        let p = params();
        let u = random_field(p, FieldSpec::default(), &mut rng(1));
        let (y, z) = split(&u);
        assert_eq!(y.add(&z).coeffs(), u.coeffs());
        assert_eq!(z.mean(), 0.0);
        let (yy, yz) = split(&y);
        assert_eq!(yy.coeffs(), y.coeffs());
        assert_eq!(yz.hs_norm(), 0.0);
    }

    #[test]
    fn coercivity_closed_form() {
        assert_relative_eq!(coercivity_constant(&params()), 1.0 - 0.5f64.sqrt(), max_relative = 1e-15);
        let c = coercivity_check(&params(), 200, 4);
        assert!(c.sampled_min >= c.closed_form - 1e-12);
        assert!((c.polished - c.closed_form).abs() < 1e-6);
    }

    #[test]
    fn einstein_integrals() {
        for s in [0.2, 0.5, 0.8] {
            let p = ProblemParams::new(2, 3.0, s, 1.0, 2, 8).unwrap();
            let e = einstein_constants(&p);
            assert_relative_eq!(e.i2, e.i2_quadrature, max_relative = 1e-10);
            assert_relative_eq!(e.i4, e.i4_quadrature, max_relative = 1e-10);
        }
        let e = einstein_constants(&params());
        assert_relative_eq!(e.i2, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn geometry_invariants() {
        let p = params();
        let nl = builtin_nonlinearity("log_superlinear", &p).unwrap();
        let f = Functional::new(p, &nl, Normalization::Explicit).unwrap();
        let g = build_geometry(&f).unwrap();
        assert!(g.rho > 1.0 && 1.0 > g.r && g.r > 0.0);
        assert_relative_eq!(f.energy_norm(&g.z), g.r, max_relative = 1e-10);
        assert!(g.z.mean().abs() < 1e-14);
        assert_relative_eq!(f.energy_norm(&g.e_y), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn zero_nonlinearity_is_degenerate() {
        let p = params();
        let nl = builtin_nonlinearity("zero", &p).unwrap();
        let f = Functional::new(p, &nl, Normalization::Explicit).unwrap();
        let g = build_geometry(&f).unwrap();
        match minmax_search(&f, &g, &SolverConfig::default()) {
            Err(Error::ConvergedToTrivial(r)) => assert!(r.degenerate),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn refine_at_origin_returns_immediately() {
        let p = params();
        let nl = builtin_nonlinearity("zero", &p).unwrap();
        let f = Functional::new(p, &nl, Normalization::Explicit).unwrap();
        match refine(&f, &FourierField::zeros(p), &SolverConfig::default()) {
            Err(Error::ConvergedToTrivial(r)) => {
                assert_eq!(r.residual, 0.0);
                assert_eq!(r.iterations, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}

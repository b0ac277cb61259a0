//! Sampled checks of the structural hypotheses on `f`, the Ambrosetti–
//! Rabinowitz test, and fitted constants of the growth bounds
//! `|F| ≤ ε t² + C_ε |t|^{p+1}`, `|f| ≤ 2ε|t| + (p+1) C_ε |t|^p` and
//! `F ≥ A t² − B_A`.
//!
//! Verdicts mean "holds on the sample", never more.

use serde::Serialize;

use crate::nonlinearity::Nonlinearity;
use crate::params::ProblemParams;
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// A sample point where an inequality `lhs ≤ rhs` fails (or, for the AR
/// scan, where `μF ≤ ft` fails for the stated `μ`).
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub x: Vec<f64>,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
    pub witnesses: Vec<Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArCheck {
    pub verdict: Verdict,
    /// `inf f t / F` over sampled `|t| ≥ R` when the check passes.
    pub mu: Option<f64>,
    pub r: Option<f64>,
    /// Fitted `lim_{t→∞} f t / F`.
    pub limit_estimate: f64,
    /// `(t, f t / F)` along the scan.
    pub ratios: Vec<(f64, f64)>,
    pub witnesses: Vec<Witness>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EpsilonConstant {
    pub epsilon: f64,
    pub c_epsilon: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LowerBoundConstant {
    pub a: f64,
    /// `sup_t (A t² − F)`; `None` when the supremum is not attained on the
    /// scanned range.
    pub b_a: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub label: String,
    pub checks: Vec<Check>,
    pub ar: ArCheck,
    pub c_epsilon: Vec<EpsilonConstant>,
    pub b_a: Vec<LowerBoundConstant>,
}

impl HypothesisReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// True when every structural check (not AR) passed.
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.verdict == Verdict::Pass)
    }

    pub fn to_json(&self) -> crate::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SamplerConfig {
    /// Uniform `t` samples on `[−t_max, t_max]`.
    pub t_max: f64,
    pub t_count: usize,
    /// Points per axis of the `x` sample grid.
    pub x_per_axis: usize,
    pub theta_count: usize,
    pub epsilons: Vec<f64>,
    pub a_values: Vec<f64>,
    /// Range `[t_lo, t_hi]` of the AR ratio scan.
    pub ar_range: (f64, f64),
    pub ar_threshold: f64,
    /// Upper end of the `t` range used for constant fits.
    pub fit_t_max: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            t_max: 100.0,
            t_count: 401,
            x_per_axis: 8,
            theta_count: 11,
            epsilons: vec![0.25, 0.1],
            a_values: vec![1.0],
            ar_range: (10.0, 1e8),
            ar_threshold: 0.01,
            fit_t_max: 1e8,
        }
    }
}

fn x_samples(params: &ProblemParams, per_axis: usize) -> Vec<Vec<f64>> {
    let n = per_axis.max(1);
    let total = n.pow(params.dim as u32);
    let h = params.period / n as f64;
    let mut ix = vec![0usize; params.dim];
    (0..total)
        .map(|i| {
            crate::spectral::unravel(i, n, params.dim, &mut ix);
            ix.iter().map(|&a| (a as f64 + 0.37) * h).collect()
        })
        .collect()
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn verdict_from(witnesses: &[Witness]) -> Verdict {
    if witnesses.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn check(name: &str, detail: String, mut witnesses: Vec<Witness>) -> Check {
    witnesses.truncate(8);
    Check {
        name: name.into(),
        verdict: verdict_from(&witnesses),
        detail,
        witnesses,
    }
}

/// Runs every check on the sample described by `cfg`.
pub fn check_hypotheses(
    nl: &Nonlinearity,
    params: &ProblemParams,
    cfg: &SamplerConfig,
) -> HypothesisReport {
    let xs = x_samples(params, cfg.x_per_axis);
    let ts: Vec<f64> = (0..cfg.t_count)
        .map(|i| -cfg.t_max + 2.0 * cfg.t_max * i as f64 / (cfg.t_count - 1) as f64)
        .collect();
    let rel = |v: f64| 1e-12 * (1.0 + v.abs());

    // (f1) periodicity in each coordinate direction.
    let f1: Vec<Witness> = crate::parallel::map(&xs, |x| {
        let mut out = Vec::new();
        for a in 0..params.dim {
            let mut y = x.clone();
            y[a] += params.period;
            for &t in &ts {
                let (u, v) = (nl.f(x, t), nl.f(&y, t));
                if (u - v).abs() > rel(u) {
                    out.push(Witness {
                        x: x.clone(),
                        t,
                        lhs: v,
                        rhs: u,
                        note: format!("f(x + T e_{a}, t) != f(x, t)"),
                    });
                }
            }
        }
        out
    })
    .concat();

    // (f2) continuity: increments over a tiny step stay proportional to it.
    let h = 1e-7;
    let f2: Vec<Witness> = crate::parallel::map(&xs, |x| {
        ts.iter()
            .filter_map(|&t| {
                let jump = (nl.f(x, t + h) - nl.f(x, t)).abs();
                let slope = (nl.f(x, t + 1e-3) - nl.f(x, t)).abs() / 1e-3;
                let bound = 10.0 * h * (1.0 + slope) + rel(nl.f(x, t));
                (jump > bound).then(|| Witness {
                    x: x.clone(),
                    t,
                    lhs: jump,
                    rhs: bound,
                    note: format!("|f(x, t + {h:e}) - f(x, t)|"),
                })
            })
            .collect::<Vec<_>>()
    })
    .concat();

    // (f3) f(x,t)/t → 0: |f/t| must decrease along t = ±10^{-j}.
    let small: Vec<f64> = (1..=8).map(|j| 10f64.powi(-j)).collect();
    let f3: Vec<Witness> = crate::parallel::map(&xs, |x| {
        let mut out = Vec::new();
        for sign in [1.0, -1.0] {
            let r: Vec<f64> = small.iter().map(|&t| (nl.f(x, sign * t) / t).abs()).collect();
            for j in 1..r.len() {
                if r[j] > r[j - 1] + 1e-300 {
                    out.push(Witness {
                        x: x.clone(),
                        t: sign * small[j],
                        lhs: r[j],
                        rhs: r[j - 1],
                        note: "|f/t| not decreasing as t -> 0".into(),
                    });
                }
            }
            if r[0] > 0.0 && r[r.len() - 1] > 0.1 * r[0] {
                out.push(Witness {
                    x: x.clone(),
                    t: sign * small[small.len() - 1],
                    lhs: r[r.len() - 1],
                    rhs: 0.1 * r[0],
                    note: "|f/t| does not decay".into(),
                });
            }
        }
        out
    })
    .concat();

    // (f4) growth: fitted C against the declared one, and subcritical p.
    let p = nl.growth();
    let crit = params.critical_exponent() - 1.0;
    let wide: Vec<f64> = {
        let mut v = log_grid(1e-6, cfg.fit_t_max, 600);
        let neg: Vec<f64> = v.iter().map(|t| -t).collect();
        v.extend(neg);
        v.extend(ts.iter().copied());
        v
    };
    let fitted_c = crate::parallel::map(&xs, |x| {
        wide.iter()
            .map(|&t| nl.f(x, t).abs() / (1.0 + t.abs().powf(p)))
            .fold(0.0, f64::max)
    })
    .into_iter()
    .fold(0.0, f64::max);
    let mut f4 = Vec::new();
    if !(p < crit) {
        f4.push(Witness {
            x: vec![],
            t: f64::NAN,
            lhs: p,
            rhs: crit,
            note: "p must lie below 2N/(N-2s) - 1".into(),
        });
    }
    if fitted_c > nl.growth_constant() * (1.0 + 1e-12) {
        f4.push(Witness {
            x: vec![],
            t: f64::NAN,
            lhs: fitted_c,
            rhs: nl.growth_constant(),
            note: "sup |f|/(1+|t|^p) exceeds declared C".into(),
        });
    }

    // (f5) F/t² increasing without bound along t = ±10^j.
    let big: Vec<f64> = (1..=8).map(|j| 10f64.powi(j)).collect();
    let f5: Vec<Witness> = crate::parallel::map(&xs, |x| {
        let mut out = Vec::new();
        for sign in [1.0, -1.0] {
            let r: Vec<f64> = big.iter().map(|&t| nl.big_f(x, sign * t) / (t * t)).collect();
            for j in 1..r.len() {
                if !(r[j] > r[j - 1]) {
                    out.push(Witness {
                        x: x.clone(),
                        t: sign * big[j],
                        lhs: r[j],
                        rhs: r[j - 1],
                        note: "F/t^2 not increasing".into(),
                    });
                }
            }
            if !(r[r.len() - 1] >= 2.0 * r[0].max(0.0)) || r[r.len() - 1] <= 0.0 {
                out.push(Witness {
                    x: x.clone(),
                    t: sign * big[big.len() - 1],
                    lhs: r[r.len() - 1],
                    rhs: 2.0 * r[0],
                    note: "F/t^2 does not grow".into(),
                });
            }
        }
        out
    })
    .concat();

    // (f6) G(x, θt) ≤ γ G(x, t).
    let gamma = nl.gamma();
    let thetas: Vec<f64> = (0..cfg.theta_count)
        .map(|i| i as f64 / (cfg.theta_count - 1) as f64)
        .collect();
    let f6: Vec<Witness> = crate::parallel::map(&xs, |x| {
        let mut out = Vec::new();
        for &t in &ts {
            let g = gamma * nl.big_g(x, t);
            for &th in &thetas {
                let lhs = nl.big_g(x, th * t);
                if lhs > g + rel(g) {
                    out.push(Witness {
                        x: x.clone(),
                        t,
                        lhs,
                        rhs: g,
                        note: format!("G(x, {th} t) > gamma G(x, t)"),
                    });
                }
            }
        }
        out
    })
    .concat();

    let sign_check = |name: &str, h: &(dyn Fn(&[f64], f64) -> f64 + Sync)| {
        let w: Vec<Witness> = crate::parallel::map(&xs, |x| {
            ts.iter()
                .filter_map(|&t| {
                    let v = h(x, t);
                    (v < -rel(v)).then(|| Witness {
                        x: x.clone(),
                        t,
                        lhs: v,
                        rhs: 0.0,
                        note: format!("{name} negative"),
                    })
                })
                .collect::<Vec<_>>()
        })
        .concat();
        check(&format!("{name}>=0"), format!("{name} >= 0 on samples"), w)
    };

    let checks = vec![
        check("f1", "T-periodicity in x".into(), f1),
        check("f2", format!("continuity, step {h:e}"), f2),
        check("f3", "f(x,t)/t -> 0 as t -> 0".into(), f3),
        check(
            "f4",
            format!("p = {p}, fitted C = {fitted_c:.6}, declared C = {}", nl.growth_constant()),
            f4,
        ),
        check("f5", "F/t^2 -> infinity".into(), f5),
        check("f6", format!("G(x, theta t) <= {gamma} G(x, t)"), f6),
        sign_check("F", &|x, t| nl.big_f(x, t)),
        sign_check("G", &|x, t| nl.big_g(x, t)),
    ];

    HypothesisReport {
        label: nl.label().to_string(),
        checks,
        ar: ar_check(nl, &xs, cfg),
        c_epsilon: cfg
            .epsilons
            .iter()
            .map(|&e| EpsilonConstant {
                epsilon: e,
                c_epsilon: fit_c_epsilon(nl, e, cfg.fit_t_max),
            })
            .collect(),
        b_a: cfg
            .a_values
            .iter()
            .map(|&a| LowerBoundConstant {
                a,
                b_a: fit_b_a(nl, a, cfg.fit_t_max),
            })
            .collect(),
    }
}

/// Scans `f t / F` on `[t_lo, t_hi]`. A limit of 2 means no `(μ, R)` with
/// `μ > 2` can exist; otherwise `μ` is the sampled infimum over `|t| ≥ 1`.
fn ar_check(nl: &Nonlinearity, xs: &[Vec<f64>], cfg: &SamplerConfig) -> ArCheck {
    let (lo, hi) = cfg.ar_range;
    let grid = log_grid(lo, hi, 200);
    let ratio = |x: &[f64], t: f64| {
        let big = nl.big_f(x, t);
        if big > 0.0 {
            nl.f(x, t) * t / big
        } else {
            f64::NAN
        }
    };
    // Worst case over x at each t.
    let ratios: Vec<(f64, f64)> = grid
        .iter()
        .map(|&t| {
            let r = xs.iter().map(|x| ratio(x, t)).fold(f64::INFINITY, f64::min);
            (t, r)
        })
        .collect();
    if ratios.iter().any(|(_, r)| !r.is_finite()) {
        return ArCheck {
            verdict: Verdict::Inconclusive,
            mu: None,
            r: None,
            limit_estimate: f64::NAN,
            ratios,
            witnesses: vec![],
        };
    }
    // Least squares r ≈ L + c / ln t over the upper half of the scan.
    let tail = &ratios[ratios.len() / 2..];
    let n = tail.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(t, r) in tail {
        let u = 1.0 / t.ln();
        sx += u;
        sy += r;
        sxx += u * u;
        sxy += u * r;
    }
    let denom = n * sxx - sx * sx;
    let slope = if denom.abs() > 1e-300 {
        (n * sxy - sx * sy) / denom
    } else {
        0.0
    };
    let limit = (sy - slope * sx) / n;

    if limit <= 2.0 + cfg.ar_threshold {
        // For a few candidate μ > 2, the first sampled t where μF > f t.
        let x0 = &xs[0];
        let witnesses = [3.0, 2.5, 2.2, 2.1, 2.05]
            .iter()
            .filter_map(|&mu| {
                grid.iter().find_map(|&t| {
                    let lhs = mu * nl.big_f(x0, t);
                    let rhs = nl.f(x0, t) * t;
                    (lhs > rhs).then(|| Witness {
                        x: x0.clone(),
                        t,
                        lhs,
                        rhs,
                        note: format!("mu = {mu}: mu F(x,t) > f(x,t) t"),
                    })
                })
            })
            .collect();
        return ArCheck {
            verdict: Verdict::Fail,
            mu: None,
            r: None,
            limit_estimate: limit,
            ratios,
            witnesses,
        };
    }

    let r0 = 1.0;
    let mut probe = log_grid(r0, hi, 400);
    let neg: Vec<f64> = probe.iter().map(|t| -t).collect();
    probe.extend(neg);
    let mu = xs
        .iter()
        .flat_map(|x| probe.iter().map(move |&t| ratio(x, t)))
        .fold(f64::INFINITY, f64::min);
    let verdict = if mu > 2.0 {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    ArCheck {
        verdict,
        mu: Some(mu),
        r: Some(r0),
        limit_estimate: limit,
        ratios,
        witnesses: vec![],
    }
}

/// Smallest `C_ε` with both `|F| ≤ ε t² + C_ε |t|^{p+1}` and
/// `|f| ≤ 2ε|t| + (p+1) C_ε |t|^p` on sampled `t ∈ [1e-6, t_max]` (both signs).
pub fn fit_c_epsilon(nl: &Nonlinearity, eps: f64, t_max: f64) -> f64 {
    let p = nl.growth();
    let mut ts = log_grid(1e-6, t_max, 2000);
    let neg: Vec<f64> = ts.iter().map(|t| -t).collect();
    ts.extend(neg);
    // f = a(x) φ(t): the worst x has the largest a.
    let amax = nl.modulation_range().1;
    let mut c: f64 = 0.0;
    for &t in &ts {
        let a = t.abs();
        let cf = (amax * nl.big_phi(t).abs() - eps * a * a) / a.powf(p + 1.0);
        let cd = (amax * nl.phi(t).abs() - 2.0 * eps * a) / ((p + 1.0) * a.powf(p));
        c = c.max(cf).max(cd);
    }
    c
}

/// `B_A = sup_{x,t} (A t² − F(x, t))`, or `None` when the supremum sits at
/// the end of the scanned range `|t| ≤ t_max`.
pub fn fit_b_a(nl: &Nonlinearity, a: f64, t_max: f64) -> Option<f64> {
    // F = a(x) Φ(t) with Φ ≥ 0: the worst x has the smallest a.
    let amin = nl.modulation_range().0;
    let mut best: f64 = 0.0;
    for sign in [1.0, -1.0] {
        let g = |u: f64| {
            // u = ln(1 + |t|)
            let t = sign * u.exp_m1();
            a * t * t - amin * nl.big_phi(t)
        };
        let hi = t_max.ln_1p();
        let (u, v) = quad::scan_max(g, 0.0, hi, 4000);
        if u >= hi * (1.0 - 1e-9) {
            return None;
        }
        best = best.max(v);
    }
    Some(best)
}

//! The twelve acceptance criteria, one line each. Exits nonzero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use fracperiodic::continuation::{default_schedule, run_continuation, strip_bound_check, ContinuationConfig};
use fracperiodic::cylinder::{convergence_study, ModeProblem};
use fracperiodic::extension::{
    extrapolate_conormal, make_profile, profile_energy, trace_inequality_check, BumpedProfile, ExponentialProfile,
    ExtensionField, MasterProfile, DEFAULT_PROBES,
};
use fracperiodic::functional::Functional;
use fracperiodic::hypotheses::{check_hypotheses, SamplerConfig, Verdict};
use fracperiodic::linking::{build_geometry, minmax_search, sample_geometry, weak_form_residual, SolverConfig};
use fracperiodic::nonlinearity::builtin_nonlinearity;
use fracperiodic::random::{random_field, rng, FieldSpec};
use fracperiodic::{Normalization, ProblemParams, Result};

const SEED: u64 = 20240611;
const LABELS: [&str; 4] = ["log_superlinear", "pure_power(3)", "modulated_power(3)", "zero"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn solve_params() -> ProblemParams {
    ProblemParams::new(1, 2.0 * PI, 0.5, 1.0, 32, 128).unwrap()
}

fn kappa_consistency() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for s in [0.25, 0.5, 0.75] {
        let prof = make_profile(s)?;
        let k = prof.kappa();
        let energy = profile_energy(&prof, s);
        let dtn = extrapolate_conormal(|x| prof.conormal(x), s, &DEFAULT_PROBES, 1e-6)?;
        worst = worst.max(((energy - k) / k).abs()).max(((dtn - k) / k).abs());
    }
    outcome(worst < 1e-6, format!("max relative disagreement {worst:.2e}"))
}

fn half_order_closed_form() -> Result<Outcome> {
    let prof = make_profile(0.5)?;
    let worst = (0..=20_000)
        .map(|i| {
            let x = 20.0 * i as f64 / 20_000.0;
            (prof.theta(x) - (-x).exp()).abs()
        })
        .fold(0.0, f64::max);
    outcome(worst < 1e-10, format!("max |theta - e^-xi| = {worst:.2e}"))
}

fn cylinder_recovery() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut monotone = true;
    for s in [0.25, 0.5, 0.75] {
        let kappa = make_profile(s)?.kappa();
        for lambda in [1.0, 2.0, 5.0] {
            let mp = ModeProblem::standard(lambda, s, 256)?;
            let reference = kappa * lambda.powf(2.0 * s);
            let rows = convergence_study(&mp, &[64, 128, 256, 512], reference)?;
            monotone &= rows.windows(2).all(|w| w[1].error < w[0].error);
            worst = worst.max(rows[2].error / reference);
        }
    }
    outcome(
        worst < 0.02 && monotone,
        format!("max relative error at J=256 {worst:.2e}, monotone decay {monotone}"),
    )
}

fn trace_minimality() -> Result<Outcome> {
    let orders = [0.25, 0.5, 0.75];
    let profiles: Vec<_> = orders.iter().map(|&s| make_profile(s)).collect::<Result<_>>()?;
    let mut g = rng(SEED);
    let mut pure_gap: f64 = 0.0;
    let mut perturbed_gap = f64::INFINITY;
    let mut violated = false;
    for i in 0..200 {
        let which = i % 3;
        let s = orders[which];
        let prof = &profiles[which];
        let dim = if s > 0.5 { 2 } else { 1 + i % 2 };
        let p = ProblemParams::new(dim, 2.0 * PI, s, 1.0, 6, 16)?;
        let u = random_field(p, FieldSpec::default(), &mut g);
        let kappa = prof.kappa();
        let scale = kappa * u.hs_norm_sq();
        let pure = trace_inequality_check(&u, prof, kappa, 1e-8);
        pure_gap = pure_gap.max(pure.gap.abs() / scale);
        violated |= pure.gap < -1e-8 * scale;
        let bumped = BumpedProfile {
            base: *prof,
            amplitude: 0.1,
        };
        let competitor: &dyn MasterProfile = if s == 0.5 { &bumped } else { &ExponentialProfile };
        let other = trace_inequality_check(&u, competitor, kappa, 1e-8);
        perturbed_gap = perturbed_gap.min(other.gap / scale);
        violated |= !other.holds;
    }
    outcome(
        !violated && pure_gap < 1e-8 && perturbed_gap > 1e-4,
        format!("pure relative gap {pure_gap:.2e}, smallest perturbed relative gap {perturbed_gap:.2e}"),
    )
}

fn gradient_order() -> Result<Outcome> {
    let p = ProblemParams::new(1, 2.0 * PI, 0.5, 1.0, 8, 32)?;
    let eps = [1e-2, 5e-3, 2.5e-3];
    let mut min_order = f64::INFINITY;
    let mut exact = 0usize;
    let mut g = rng(SEED + 5);
    for label in LABELS {
        let nl = builtin_nonlinearity(label, &p)?;
        let f = Functional::new(p, &nl, Normalization::Explicit)?;
        for _ in 0..20 {
            let u = random_field(p, FieldSpec::default(), &mut g);
            let h = random_field(p, FieldSpec::default(), &mut g);
            let dj = f.pairing(&f.gradient(&u)?, &h);
            let mut errs = Vec::new();
            for e in eps {
                let fd = (f.value(&u.axpy(e, &h))? - f.value(&u.axpy(-e, &h))?) / (2.0 * e);
                errs.push((fd - dj).abs());
            }
            // Quadratic functionals are differentiated exactly by central differences.
            if errs.iter().all(|&e| e < 1e-10 * (1.0 + dj.abs())) {
                exact += 1;
                continue;
            }
            for w in errs.windows(2) {
                min_order = min_order.min((w[0] / w[1]).log2());
            }
        }
    }
    outcome(
        min_order >= 1.9,
        format!("minimum observed order {min_order:.3} ({exact} exact quadratic cases)"),
    )
}

fn g_identity() -> Result<Outcome> {
    let p = ProblemParams::new(1, 2.0 * PI, 0.5, 1.0, 16, 64)?;
    let mut g = rng(SEED + 6);
    let mut worst: f64 = 0.0;
    for label in LABELS {
        let nl = builtin_nonlinearity(label, &p)?;
        let f = Functional::new(p, &nl, Normalization::Explicit)?;
        for _ in 0..20 {
            let u = random_field(p, FieldSpec::default(), &mut g);
            let lhs = 2.0 * f.value(&u)? - f.pairing(&f.gradient(&u)?, &u);
            let norm2 = f.energy_norm(&u).powi(2);
            worst = worst.max((lhs - f.g_integral(&u)?).abs() / (1.0 + norm2));
        }
    }
    outcome(worst < 1e-8, format!("max |2J - <J'(u),u> - k int G| / (1+|u|^2) = {worst:.2e}"))
}

fn hypothesis_suite() -> Result<Outcome> {
    let p = solve_params();
    let cfg = SamplerConfig::default();
    let log = check_hypotheses(&builtin_nonlinearity("log_superlinear", &p)?, &p, &cfg);
    let log_ok = log.checks.iter().all(|c| c.verdict == Verdict::Pass)
        && log.ar.verdict == Verdict::Fail
        && !log.ar.witnesses.is_empty()
        && (log.ar.limit_estimate - 2.0).abs() < 0.05;
    let pow = check_hypotheses(&builtin_nonlinearity("pure_power(3)", &p)?, &p, &cfg);
    let mu = pow.ar.mu.unwrap_or(f64::NAN);
    let r = pow.ar.r.unwrap_or(f64::NAN);
    let pow_ok = pow.ar.verdict == Verdict::Pass && (mu - 4.0).abs() < 1e-9 && r == 1.0;
    outcome(
        log_ok && pow_ok,
        format!(
            "log: checks pass {}, AR limit {:.4} with {} witnesses; power: mu = {mu}, R = {r}",
            log.checks.iter().all(|c| c.verdict == Verdict::Pass),
            log.ar.limit_estimate,
            log.ar.witnesses.len()
        ),
    )
}

fn linking_geometry() -> Result<Outcome> {
    let p = solve_params();
    let nl = builtin_nonlinearity("log_superlinear", &p)?;
    let f = Functional::new(p, &nl, Normalization::Explicit)?;
    let geom = build_geometry(&f)?;
    let s = sample_geometry(&f, &geom, 1000, SEED)?;
    let pass = s.y_max <= 1e-10 && s.n_r_min >= s.b_lower - 1e-10 && s.b_lower > 0.0 && s.m0_max <= 1e-8;
    outcome(
        pass,
        format!(
            "max J on Y {:.3e}, min J on N_r {:.4e} (b_m {:.4e}), max J on M0 {:.3e}",
            s.y_max, s.n_r_min, s.b_lower, s.m0_max
        ),
    )
}

fn solve_once() -> Result<(String, f64, f64, f64, f64, f64, bool)> {
    let p = solve_params();
    let nl = builtin_nonlinearity("log_superlinear", &p)?;
    let f = Functional::new(p, &nl, Normalization::Explicit)?;
    let geom = build_geometry(&f)?;
    let r = minmax_search(&f, &geom, &SolverConfig::default())?;
    let weak = weak_form_residual(&r.candidate, &nl, &DEFAULT_PROBES, 1e-6)?;
    Ok((
        r.candidate.to_json_string()?,
        r.residual,
        r.alpha,
        geom.b_lower,
        r.candidate.hs_norm(),
        weak,
        r.converged,
    ))
}

fn solve() -> Result<Outcome> {
    let (_, residual, alpha, b, norm, weak, converged) = solve_once()?;
    outcome(
        converged && residual < 1e-6 && alpha >= b && norm > 1e-3 && weak < 1e-4,
        format!("alpha {alpha:.8}, b_m {b:.4e}, Cerami {residual:.2e}, |u|_H {norm:.4}, DtN residual {weak:.2e}"),
    )
}

fn continuation() -> Result<Outcome> {
    let p = solve_params();
    let nl = builtin_nonlinearity("log_superlinear", &p)?;
    let rep = run_continuation(&p, &nl, &default_schedule(6), &ContinuationConfig::default())?;
    let tol = 1e-8;
    let inside = rep
        .alphas()
        .iter()
        .all(|&a| a >= rep.bounds.k1 - tol && a <= rep.bounds.k2 + tol);
    outcome(
        inside && rep.limit_residual < 1e-5 && rep.limit_lp_norm >= rep.floor,
        format!(
            "alpha_m in [{:.4e}, {:.4e}]: {inside}; limit residual {:.2e}; |u0|_L3 {:.4} >= floor {:.4}",
            rep.bounds.k1, rep.bounds.k2, rep.limit_residual, rep.limit_lp_norm, rep.floor
        ),
    )
}

fn strip_inequality() -> Result<Outcome> {
    let mut g = rng(SEED + 11);
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    for i in 0..50 {
        let s = [0.25, 0.5, 0.75][i % 3];
        let p = if s > 0.5 {
            ProblemParams::new(2, 2.0 * PI, s, 1.0, 4, 16)?
        } else {
            ProblemParams::new(1, 2.0 * PI, s, 1.0, 8, 32)?
        };
        let v = ExtensionField::new(random_field(p, FieldSpec::default(), &mut g))?;
        for delta in [0.1, 1.0, 10.0] {
            let rep = strip_bound_check(&v, delta);
            violations += usize::from(!rep.holds);
            min_slack = min_slack.min(rep.slack);
        }
    }
    outcome(violations == 0, format!("{violations} violations, smallest slack {min_slack:.3e}"))
}

fn determinism() -> Result<Outcome> {
    let a = solve_once()?.0;
    let b = solve_once()?.0;
    outcome(a == b, format!("solution JSON identical across runs: {}", a == b))
}

type Criterion = (&'static str, fn() -> Result<Outcome>, Duration);

fn main() -> ExitCode {
    let s = Duration::from_secs;
    let criteria: [Criterion; 12] = [
        ("kappa three-way consistency", kappa_consistency, s(5)),
        ("closed form at s = 1/2", half_order_closed_form, s(1)),
        ("finite-element DtN recovery", cylinder_recovery, s(30)),
        ("trace inequality and minimality", trace_minimality, s(10)),
        ("gradient correctness", gradient_order, s(10)),
        ("G-identity", g_identity, s(5)),
        ("hypothesis suite", hypothesis_suite, s(5)),
        ("linking geometry", linking_geometry, s(10)),
        ("min-max solve", solve, s(300)),
        ("continuation to m = 0", continuation, s(1800)),
        ("strip inequality", strip_inequality, s(10)),
        ("determinism", determinism, s(600)),
    ];
    let mut failures = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match res {
            Ok(o) => (o.pass && elapsed <= *limit, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failures += usize::from(!pass);
        println!(
            "criterion {:>2} [{}] {name}: {detail} ({:.2} s, limit {} s)",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failures == 0 {
        println!("acceptance: all 12 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criteria fail");
        ExitCode::FAILURE
    }
}

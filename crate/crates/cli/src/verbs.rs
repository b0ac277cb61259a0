use std::fmt::Write as _;
use std::io::Write as _;

use fracperiodic::continuation::{bounds, run_continuation, strip_bound_check, ContinuationConfig};
use fracperiodic::cylinder::{convergence_study, write_convergence_csv, ModeProblem};
use fracperiodic::extension::{
    extrapolate_conormal, make_profile, profile_energy, trace_inequality_check, BumpedProfile, ExponentialProfile,
    ExtensionField, MasterProfile, DEFAULT_PROBES,
};
use fracperiodic::functional::Functional;
use fracperiodic::hypotheses::{check_hypotheses, SamplerConfig};
use fracperiodic::linking::{build_geometry, coercivity_constant, minmax_search, sample_geometry, weak_form_residual};
use fracperiodic::nonlinearity::{builtin_nonlinearity, Nonlinearity};
use fracperiodic::random::{random_field, rng, FieldSpec};
use fracperiodic::{Error, Normalization};
use serde_json::{json, Value};
use thiserror::Error;

use crate::artifacts::Artifacts;
use crate::config::LoadedConfig;

/// How a verb ended. Ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok,
    Violation,
    NonConvergence,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Violation => 3,
            Status::NonConvergence => 4,
        }
    }
}

/// Failures that stop a verb without producing a verdict.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("{verb}: {source}")]
    Module {
        verb: &'static str,
        #[source]
        source: Error,
    },
    #[error("{verb}: cannot write artifacts: {source}")]
    Io {
        verb: &'static str,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug)]
pub struct Outcome {
    pub verb: &'static str,
    pub status: Status,
    pub lines: Vec<String>,
}

/// Maps a solver or check error to a verdict; `None` for errors that are
/// not verdicts at all (I/O, malformed input).
fn verdict_of(e: &Error) -> Option<Status> {
    match e {
        Error::ConvergedToTrivial(_) | Error::StagnationWithoutConvergence(_) | Error::MaxIterations(_) => {
            Some(Status::NonConvergence)
        }
        Error::LevelOutOfBounds { .. }
        | Error::TrivialLimit { .. }
        | Error::ProbeTooCoarse { .. }
        | Error::GeometryInfeasible(_) => Some(Status::Violation),
        _ => None,
    }
}

struct Ctx<'a> {
    verb: &'static str,
    cfg: &'a LoadedConfig,
    art: &'a mut Artifacts,
    status: Status,
    lines: Vec<String>,
}

impl<'a> Ctx<'a> {
    fn new(verb: &'static str, cfg: &'a LoadedConfig, art: &'a mut Artifacts) -> Self {
        Self {
            verb,
            cfg,
            art,
            status: Status::Ok,
            lines: Vec::new(),
        }
    }

    fn m<T>(&self, r: fracperiodic::Result<T>) -> Result<T, RunError> {
        r.map_err(|source| RunError::Module { verb: self.verb, source })
    }

    fn io<T>(&self, r: std::io::Result<T>) -> Result<T, RunError> {
        r.map_err(|source| RunError::Io { verb: self.verb, source })
    }

    fn json(&mut self, name: &str, body: Value) -> Result<(), RunError> {
        let r = self.art.json(name, body);
        self.io(r)
    }

    fn csv<F>(&mut self, name: &str, fill: F) -> Result<(), RunError>
    where
        F: FnOnce(&mut Vec<u8>) -> fracperiodic::Result<()>,
    {
        let r = self.art.csv(name, fill);
        self.m(r)
    }

    fn check(&mut self, pass: bool, what: String) {
        if !pass {
            self.status = self.status.max(Status::Violation);
        }
        self.lines.push(format!("[{}] {what}", if pass { "ok" } else { "FAIL" }));
    }

    fn note(&mut self, what: String) {
        self.lines.push(what);
    }

    fn finish(self) -> Outcome {
        Outcome {
            verb: self.verb,
            status: self.status,
            lines: self.lines,
        }
    }

    fn nonlinearity(&self) -> Result<Nonlinearity, RunError> {
        self.m(builtin_nonlinearity(&self.cfg.config.nonlinearity.label, &self.cfg.params))
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

/// `κ_s` three ways, the profile table, and the finite-element cylinder study.
pub fn verify_kernel(cfg: &LoadedConfig, art: &mut Artifacts) -> Result<Outcome, RunError> {
    let mut cx = Ctx::new("verify-kernel", cfg, art);
    let s = cfg.params.order;
    let tol = cfg.config.checks.dtn_tol;
    let prof = cx.m(make_profile(s))?;
    let kappa = prof.kappa();
    let energy = profile_energy(&prof, s);
    let dtn = cx.m(extrapolate_conormal(|x| prof.conormal(x), s, &DEFAULT_PROBES, tol))?;
    let rel = |v: f64| ((v - kappa) / kappa).abs();
    let worst = rel(energy).max(rel(dtn));
    cx.check(
        worst < 1e-6,
        format!("kappa_s = {kappa:.15} (energy {energy:.15}, DtN {dtn:.15}), disagreement {worst:.2e}"),
    );
    let closed = if s == 0.5 {
        let err = (0..=20_000)
            .map(|i| {
                let x = 20.0 * i as f64 / 20_000.0;
                (prof.theta(x) - (-x).exp()).abs()
            })
            .fold(0.0, f64::max);
        cx.check(err < 1e-10, format!("closed form at s = 1/2: max |theta - e^-xi| = {err:.2e}"));
        Some(err)
    } else {
        None
    };
    cx.csv("kappa.csv", |w| {
        writeln!(w, "method,value,relative_error")?;
        writeln!(w, "closed_form,{kappa:.16e},0")?;
        writeln!(w, "energy_integral,{energy:.16e},{:.6e}", rel(energy))?;
        writeln!(w, "dtn_extrapolation,{dtn:.16e},{:.6e}", rel(dtn))?;
        Ok(())
    })?;
    let xs: Vec<f64> = (0..=400).map(|i| 0.05 * i as f64).collect();
    cx.csv("profile.csv", |w| prof.write_table(w, &xs))?;

    let mut rows = Vec::new();
    let mut worst_fe: f64 = 0.0;
    let mut monotone = true;
    for lambda in [1.0, 2.0, 5.0] {
        let mp = cx.m(ModeProblem::standard(lambda, s, 256))?;
        let reference = kappa * lambda.powf(2.0 * s);
        let study = cx.m(convergence_study(&mp, &[64, 128, 256, 512], reference))?;
        monotone &= study.windows(2).all(|w| w[1].error < w[0].error);
        worst_fe = worst_fe.max(study[2].error / reference);
        rows.extend(study);
    }
    cx.check(
        worst_fe < 0.02 && monotone,
        format!("finite-element DtN: relative error {worst_fe:.2e} at J = 256, monotone {monotone}"),
    );
    cx.csv("cylinder.csv", |w| write_convergence_csv(w, &rows))?;
    cx.json(
        "kernel.json",
        json!({
            "order": s,
            "kappa": kappa,
            "energy_integral": energy,
            "dtn_extrapolation": dtn,
            "max_relative_disagreement": worst,
            "closed_form_error": closed,
            "cylinder_relative_error": worst_fe,
            "cylinder_monotone": monotone,
            "cylinder": to_value(&rows),
        }),
    )?;
    Ok(cx.finish())
}

/// Trace inequality, DtN map and strip inequality on seeded random traces.
pub fn verify_dtn(cfg: &LoadedConfig, art: &mut Artifacts) -> Result<Outcome, RunError> {
    let mut cx = Ctx::new("verify-dtn", cfg, art);
    let p = cfg.params;
    let checks = &cfg.config.checks;
    let prof = cx.m(make_profile(p.order))?;
    let kappa = prof.kappa();
    let bumped = BumpedProfile {
        base: prof,
        amplitude: 0.1,
    };
    // At s = 1/2 the exponential profile is the minimizer itself.
    let competitor: &dyn MasterProfile = if p.order == 0.5 { &bumped } else { &ExponentialProfile };
    let spec = FieldSpec {
        zero_mean: p.mass == 0.0,
        ..FieldSpec::default()
    };
    let mut g = rng(cfg.config.output.seed);
    let mut table = String::from("field,pure_gap,competitor_gap,dtn_error,strip_slack\n");
    let (mut pure_worst, mut comp_min, mut dtn_worst, mut slack_min) = (0.0f64, f64::INFINITY, 0.0f64, f64::INFINITY);
    let mut strip_violations = 0usize;
    for i in 0..checks.fields {
        let u = random_field(p, spec, &mut g);
        let scale = kappa * u.hs_norm_sq();
        if scale == 0.0 {
            continue;
        }
        let pure = trace_inequality_check(&u, &prof, kappa, 1e-8).gap / scale;
        let comp = trace_inequality_check(&u, competitor, kappa, 1e-8).gap / scale;
        let v = ExtensionField::with_profile(u.clone(), prof);
        let dtn = cx.m(v.dtn_apply(&DEFAULT_PROBES, checks.dtn_tol))?;
        let expected = u.apply_operator(false).scale(kappa);
        let dtn_err = dtn.sub(&expected).l2_norm() / expected.l2_norm();
        let mut slack = f64::INFINITY;
        for &delta in &checks.deltas {
            let rep = strip_bound_check(&v, delta);
            strip_violations += usize::from(!rep.holds);
            slack = slack.min(rep.slack);
        }
        pure_worst = pure_worst.max(pure.abs());
        comp_min = comp_min.min(comp);
        dtn_worst = dtn_worst.max(dtn_err);
        slack_min = slack_min.min(slack);
        let _ = writeln!(table, "{i},{pure:.6e},{comp:.6e},{dtn_err:.6e},{slack:.6e}");
    }
    cx.check(pure_worst < 1e-8, format!("minimal extension attains the trace bound: gap {pure_worst:.2e}"));
    cx.check(comp_min > 0.0, format!("competitor extensions cost more: smallest gap {comp_min:.3e}"));
    cx.check(
        dtn_worst < checks.dtn_tol,
        format!("DtN map equals kappa_s (-Laplace + m^2)^s: relative error {dtn_worst:.2e}"),
    );
    cx.check(
        strip_violations == 0,
        format!("strip inequality: {strip_violations} violations, smallest slack {slack_min:.3e}"),
    );
    cx.csv("dtn.csv", |w| {
        w.extend_from_slice(table.as_bytes());
        Ok(())
    })?;
    cx.json(
        "dtn.json",
        json!({
            "fields": checks.fields,
            "deltas": checks.deltas,
            "kappa": kappa,
            "max_pure_gap": pure_worst,
            "min_competitor_gap": comp_min,
            "max_dtn_error": dtn_worst,
            "strip_violations": strip_violations,
            "min_strip_slack": slack_min,
        }),
    )?;
    Ok(cx.finish())
}

/// Sampled structural hypotheses on the configured nonlinearity.
pub fn check_hypotheses_verb(cfg: &LoadedConfig, art: &mut Artifacts) -> Result<Outcome, RunError> {
    let mut cx = Ctx::new("check-hypotheses", cfg, art);
    let nl = cx.nonlinearity()?;
    let report = check_hypotheses(&nl, &cfg.params, &SamplerConfig::default());
    for c in &report.checks {
        cx.check(
            c.verdict == fracperiodic::hypotheses::Verdict::Pass,
            format!("{}: {}", c.name, c.detail),
        );
    }
    let ar = &report.ar;
    cx.note(format!(
        "Ambrosetti-Rabinowitz: {:?}, limit of f t / F about {:.4}",
        ar.verdict, ar.limit_estimate
    ));
    cx.json("hypotheses.json", to_value(&report))?;
    Ok(cx.finish())
}

/// Linking geometry, min-max search, and the weak-form residual.
pub fn solve(cfg: &LoadedConfig, art: &mut Artifacts) -> Result<Outcome, RunError> {
    let mut cx = Ctx::new("solve", cfg, art);
    let nl = cx.nonlinearity()?;
    let f = cx.m(Functional::new(cfg.params, &nl, cfg.normalization()))?;
    let geom = cx.m(build_geometry(&f))?;
    let samples = cx.m(sample_geometry(&f, &geom, cfg.config.checks.samples, cfg.config.output.seed))?;
    cx.check(
        samples.y_max <= 1e-10 && samples.m0_max <= 1e-8 && samples.n_r_min >= samples.b_lower - 1e-10,
        format!(
            "linking geometry: max J on Y {:.3e}, min J on N_r {:.4e} >= b_m {:.4e}, max J on M0 {:.3e}",
            samples.y_max, samples.n_r_min, samples.b_lower, samples.m0_max
        ),
    );
    if !geom.rho_certified {
        cx.note(format!("rho = {} is a fallback: B_A is unavailable", geom.rho));
    }
    let mut gjson = to_value(&geom);
    gjson["samples"] = to_value(&samples);
    cx.json("geometry.json", gjson)?;

    let result = match minmax_search(&f, &geom, &cfg.config.solver) {
        Ok(r) => r,
        Err(e) => {
            let Some(status) = verdict_of(&e) else {
                return Err(RunError::Module { verb: cx.verb, source: e });
            };
            let mut body = json!({ "error": e.to_string() });
            if let Error::ConvergedToTrivial(r) | Error::StagnationWithoutConvergence(r) | Error::MaxIterations(r) = &e {
                body = cx.m(r.to_json_value())?;
                body["error"] = json!(e.to_string());
                cx.csv("trace.csv", |w| r.write_trace_csv(w))?;
            }
            cx.json("solution.json", body)?;
            cx.status = cx.status.max(status);
            cx.lines.push(format!("[FAIL] {e}"));
            return Ok(cx.finish());
        }
    };
    let weak = cx.m(weak_form_residual(&result.candidate, &nl, &DEFAULT_PROBES, cfg.config.checks.dtn_tol))?;
    let norm = result.candidate.hs_norm();
    cx.check(
        result.converged && result.alpha >= geom.b_lower,
        format!(
            "critical point at level alpha = {:.10} >= b_m = {:.4e}, Cerami measure {:.2e}, |u|_H = {norm:.4}",
            result.alpha, geom.b_lower, result.residual
        ),
    );
    cx.check(
        weak < cfg.config.checks.weak_tol,
        format!("weak form through the DtN map: residual {weak:.2e}"),
    );
    let mut body = cx.m(result.to_json_value())?;
    body["weak_residual"] = json!(weak);
    cx.json("solution.json", body)?;
    cx.csv("trace.csv", |w| result.write_trace_csv(w))?;
    Ok(cx.finish())
}

/// Solutions along the mass schedule and the `m → 0` limit.
pub fn continue_verb(cfg: &LoadedConfig, art: &mut Artifacts) -> Result<Outcome, RunError> {
    let mut cx = Ctx::new("continue", cfg, art);
    let nl = cx.nonlinearity()?;
    let c = &cfg.config.continuation;
    let ccfg = ContinuationConfig {
        solver: cfg.config.solver,
        level_tol: c.level_tol,
        limit_tol: c.limit_tol,
        warm_start: c.warm_start,
    };
    let report = match run_continuation(&cfg.params, &nl, &c.schedule, &ccfg) {
        Ok(r) => r,
        Err(e) => {
            let Some(status) = verdict_of(&e) else {
                return Err(RunError::Module { verb: cx.verb, source: e });
            };
            cx.json("continuation.json", json!({ "error": e.to_string() }))?;
            cx.status = cx.status.max(status);
            cx.lines.push(format!("[FAIL] {e}"));
            return Ok(cx.finish());
        }
    };
    let b = &report.bounds;
    let tol = c.level_tol;
    for st in &report.steps {
        cx.check(
            st.alpha >= b.k1 - tol && st.alpha <= b.k2 + tol,
            format!("m = {:<10} alpha = {:.10} in [{:.4e}, {:.4e}]", st.mass, st.alpha, b.k1, b.k2),
        );
    }
    cx.check(
        report.limit_residual < c.limit_tol,
        format!("limit equation residual {:.2e}", report.limit_residual),
    );
    cx.check(
        report.limit_lp_norm >= report.floor,
        format!("limit is nontrivial: |u0|_Lp {:.4} >= floor {:.4}", report.limit_lp_norm, report.floor),
    );
    for (i, st) in report.steps.iter().enumerate() {
        let field = cx.m(st.result.candidate.to_json_value())?;
        cx.json(&format!("fields/step_{i:02}.json"), json!({ "mass": st.mass, "field": field }))?;
    }
    let body = cx.m(report.to_json_value())?;
    cx.json("continuation.json", body)?;
    cx.csv("summary.csv", |w| report.write_summary_csv(w))?;
    Ok(cx.finish())
}

fn push(out: &mut String, name: &str, value: String) {
    let _ = writeln!(out, "{name:<28} {value}");
}

/// Derived constants of the configuration, without solving anything.
pub fn describe(cfg: &LoadedConfig) -> String {
    let p = cfg.params;
    let s = p.order;
    let mut out = String::new();
    push(&mut out, "config", cfg.path.display().to_string());
    push(&mut out, "config hash", cfg.hash());
    push(&mut out, "N, T, s, m", format!("{}, {}, {}, {}", p.dim, p.period, s, p.mass));
    push(&mut out, "omega", format!("{}", p.omega()));
    match make_profile(s) {
        Ok(prof) => push(&mut out, "kappa_s", format!("{}", prof.kappa())),
        Err(e) => push(&mut out, "kappa_s", format!("unavailable ({e})")),
    }
    push(&mut out, "C_m", format!("{}", coercivity_constant(&p)));
    push(&mut out, "m0 = omega^(2s)/2", format!("{}", 0.5 * p.omega().powf(2.0 * s)));
    let nl = match builtin_nonlinearity(&cfg.config.nonlinearity.label, &p) {
        Ok(nl) => nl,
        Err(e) => {
            push(&mut out, "nonlinearity", format!("unavailable ({e})"));
            return out;
        }
    };
    push(&mut out, "nonlinearity", format!("{} (p = {})", nl.label(), nl.growth()));
    let geom = Functional::new(p, &nl, cfg.normalization()).and_then(|f| build_geometry(&f));
    match geom {
        Ok(g) => {
            push(&mut out, "r", format!("{}", g.r));
            let note = if g.rho_certified { "" } else { " (fallback, B_A unavailable)" };
            push(&mut out, "rho", format!("{}{note}", g.rho));
            push(&mut out, "b_m", format!("{}", g.b_lower));
        }
        Err(e) => push(&mut out, "r, rho", format!("unavailable ({e})")),
    }
    match bounds(&p, &nl, Normalization::Explicit) {
        Ok(b) => {
            push(&mut out, "K1", format!("{}", b.k1));
            push(&mut out, "K2", format!("{}", b.k2));
        }
        Err(e) => push(&mut out, "K1, K2", format!("unavailable ({e})")),
    }
    let sched: Vec<String> = cfg.config.continuation.schedule.iter().map(|m| m.to_string()).collect();
    push(&mut out, "schedule", sched.join(", "));
    push(&mut out, "output", cfg.config.output.dir.display().to_string());
    push(&mut out, "seed", cfg.config.output.seed.to_string());
    out
}

use std::f64::consts::PI;

use fracperiodic::cylinder::{convergence_study, dtn_symbol, secant_symbol, solve_mode, write_convergence_csv, ModeProblem};
use fracperiodic::extension::{make_profile, ExtensionField};
use fracperiodic::hypotheses::{check_hypotheses, SamplerConfig, Verdict};
use fracperiodic::nonlinearity::builtin_nonlinearity;
use fracperiodic::{FourierField, ProblemParams};

#[test]
fn cylinder_order_two_on_graded_mesh() {
    let s = 0.3;
    let lambda: f64 = 2.0;
    let reference = make_profile(s).unwrap().kappa() * lambda.powf(2.0 * s);
    let mp = ModeProblem::standard(lambda, s, 64).unwrap();
    let rows = convergence_study(&mp, &[64, 128, 256], reference).unwrap();
    assert!(rows[1..].iter().all(|r| r.observed_order > 1.8));
    let mut out = Vec::new();
    write_convergence_csv(&mut out, &rows).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 4);
}

#[test]
fn flux_and_secant_agree() {
    let mp = ModeProblem::standard(1.0, 0.6, 512).unwrap();
    let w = solve_mode(&mp).unwrap();
    let flux = dtn_symbol(&mp, &w).unwrap();
    let secant = secant_symbol(&mp, &w, 1e-2).unwrap();
    assert!((flux - secant).abs() / flux < 1e-2);
}

#[test]
fn profile_table_is_csv() {
    let prof = make_profile(0.5).unwrap();
    let mut out = Vec::new();
    prof.write_table(&mut out, &[0.0, 0.5, 1.0]).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("xi,theta,theta_prime"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn extension_energy_equals_kappa_times_norm() {
    let p = ProblemParams::new(2, 2.0 * PI, 0.35, 0.8, 3, 12).unwrap();
    let u = FourierField::cosine_mode(p, &[1, 2], 0.4).unwrap();
    let v = ExtensionField::new(u.clone()).unwrap();
    let e = v.extension_energy().unwrap();
    let want = make_profile(0.35).unwrap().kappa() * u.hs_norm_sq();
    assert!((e - want).abs() < 1e-9 * want);
}

#[test]
fn hypothesis_report_serializes() {
    let p = ProblemParams::new(2, 3.0, 0.5, 1.0, 4, 16).unwrap();
    let nl = builtin_nonlinearity("modulated_power(2.5)", &p).unwrap();
    let rep = check_hypotheses(&nl, &p, &SamplerConfig::default());
    assert!(rep.all_pass());
    // p = 3 is critical at N = 2, s = 1/2.
    let critical = builtin_nonlinearity("modulated_power(3)", &p).unwrap();
    let rep_c = check_hypotheses(&critical, &p, &SamplerConfig::default());
    assert_eq!(rep_c.check("f4").unwrap().verdict, Verdict::Fail);
    assert_eq!(rep.ar.verdict, Verdict::Pass);
    let v: serde_json::Value = serde_json::from_str(&rep.to_json().unwrap()).unwrap();
    assert_eq!(v["label"], "modulated_power(2.5)");
}

//! Randomized properties of fields, the functional and the extension.

use std::f64::consts::PI;

use fracperiodic::extension::{make_profile, ExtensionField, DEFAULT_PROBES};
use fracperiodic::functional::Functional;
use fracperiodic::nonlinearity::builtin_nonlinearity;
use fracperiodic::random::{random_field, rng, FieldSpec};
use fracperiodic::{FourierField, Normalization, ProblemParams};
use proptest::prelude::*;

fn params(dim: usize, s: f64, m: f64) -> ProblemParams {
    let dim = if 2.0 * s > dim as f64 { 2 } else { dim };
    let cutoff = if dim == 1 { 8 } else { 3 };
    ProblemParams::new(dim, 2.0 * PI, s, m, cutoff, 4 * cutoff).unwrap()
}

fn field(p: ProblemParams, seed: u64, zero_mean: bool) -> FourierField {
    let spec = FieldSpec {
        zero_mean,
        ..FieldSpec::default()
    };
    random_field(p, spec, &mut rng(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval(dim in 1usize..3, s in 0.1f64..0.9, seed in any::<u64>()) {
        let p = params(dim, s, 1.0);
        let u = field(p, seed, false);
        let grid = u.to_grid().unwrap();
        let l2 = grid.lq_norm(2.0).unwrap();
        prop_assert!((l2 - u.l2_norm()).abs() <= 1e-12 * (1.0 + l2));
    }

    #[test]
    fn grid_roundtrip(dim in 1usize..3, seed in any::<u64>()) {
        let p = params(dim, 0.5, 1.0);
        let u = field(p, seed, false);
        let back = u.to_grid().unwrap().to_fourier();
        for (a, b) in back.coeffs().iter().zip(u.coeffs()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn operator_is_linear(s in 0.1f64..0.9, m in 0.0f64..3.0, a in -3.0f64..3.0, seed in any::<u64>()) {
        let p = params(1, s, m);
        let u = field(p, seed, m == 0.0);
        let v = field(p, seed.wrapping_add(1), m == 0.0);
        for shift in [false, true] {
            let lhs = u.axpy(a, &v).apply_operator(shift);
            let rhs = u.apply_operator(shift).axpy(a, &v.apply_operator(shift));
            for (x, y) in lhs.coeffs().iter().zip(rhs.coeffs()) {
                prop_assert!((x - y).norm() <= 1e-12 * (1.0 + x.norm()));
            }
        }
    }

    #[test]
    fn shifted_form_is_nonnegative(s in 0.1f64..0.9, m in 0.0f64..3.0, seed in any::<u64>()) {
        let p = params(1, s, m);
        let u = field(p, seed, false);
        let q = u.shifted_form();
        let gap = u.hs_norm_sq() - p.mass_power() * u.l2_norm().powi(2);
        prop_assert!(q >= 0.0);
        prop_assert!((q - gap).abs() <= 1e-12 * (1.0 + u.hs_norm_sq()));
        let c = FourierField::constant(p, 0.7).unwrap();
        prop_assert!(c.shifted_form() == 0.0);
    }

    #[test]
    fn json_roundtrip_is_exact(dim in 1usize..3, seed in any::<u64>()) {
        let p = params(dim, 0.4, 0.5);
        let u = field(p, seed, false);
        let back = FourierField::from_json_str(&u.to_json_string().unwrap()).unwrap();
        prop_assert_eq!(back.coeffs(), u.coeffs());
        prop_assert_eq!(back.params(), u.params());
    }

    #[test]
    fn constant_levels_are_nonpositive(c in -5.0f64..5.0) {
        let p = params(1, 0.5, 1.0);
        for label in ["log_superlinear", "pure_power(3)", "modulated_power(2.5)", "zero"] {
            let nl = builtin_nonlinearity(label, &p).unwrap();
            let f = Functional::new(p, &nl, Normalization::Explicit).unwrap();
            prop_assert!(f.value(&FourierField::constant(p, c).unwrap()).unwrap() <= 0.0);
        }
    }

    #[test]
    fn dtn_matches_the_multiplier(s in 0.15f64..0.85, m in 0.2f64..2.0, seed in any::<u64>()) {
        let p = params(1, s, m);
        let u = field(p, seed, false);
        let kappa = make_profile(s).unwrap().kappa();
        let dtn = ExtensionField::new(u.clone()).unwrap().dtn_apply(&DEFAULT_PROBES, 1e-6).unwrap();
        let want = u.apply_operator(false).scale(kappa);
        for (a, b) in dtn.coeffs().iter().zip(want.coeffs()) {
            prop_assert!((a - b).norm() <= 1e-6 * (1e-12 + b.norm()));
        }
    }
}

#[test]
fn cerami_of_single_mode_linear_problem() {
    let p = params(1, 0.5, 1.0);
    let nl = builtin_nonlinearity("zero", &p).unwrap();
    let f = Functional::new(p, &nl, Normalization::Explicit).unwrap();
    let (level, cerami) = f.cerami_measure(&FourierField::zeros(p)).unwrap();
    assert_eq!((level, cerami), (0.0, 0.0));
    let c = 0.3;
    let u = FourierField::single_mode(p, &[2], num_complex::Complex64::new(c, 0.0)).unwrap()
        .symmetrize();
    let (_, cerami) = f.cerami_measure(&u).unwrap();
    // Both ±2 modes carry c/2 after symmetrization.
    let sym = p.symbol(4.0);
    let shift = p.shifted_symbol(4.0);
    let amp2 = 2.0 * (c / 2.0f64).powi(2);
    let norm = (sym * amp2).sqrt();
    let dual = (shift * shift * amp2 / sym).sqrt();
    assert!((cerami - (1.0 + norm) * dual).abs() < 1e-14);
}

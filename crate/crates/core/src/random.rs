//! Seeded random test fields.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::params::ProblemParams;
use crate::torus::FourierField;

/// Deterministic generator used for every randomized check.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape of a random field's spectrum.
#[derive(Debug, Clone, Copy)]
pub struct FieldSpec {
    /// Amplitudes decay like `(1 + |k|²)^{-decay/2}`.
    pub decay: f64,
    /// Overall scale of the coefficients.
    pub amplitude: f64,
    /// Only modes with `|k|∞ ≤ max_mode` are populated (capped at `K`).
    pub max_mode: usize,
    pub zero_mean: bool,
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self {
            decay: 2.0,
            amplitude: 1.0,
            max_mode: usize::MAX,
            zero_mean: false,
        }
    }
}

/// Random real field: Gaussian coefficients on half the lattice, mirrored to
/// enforce `c_{-k} = conj(c_k)`.
pub fn random_field<R: Rng>(params: ProblemParams, spec: FieldSpec, rng: &mut R) -> FourierField {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); params.num_modes()];
    let n = coeffs.len();
    let zero = (n - 1) / 2;
    let k2 = crate::torus::k_squared_table(&params);
    let cap = spec.max_mode.min(params.cutoff) as i64;
    for i in zero..n {
        let k = crate::torus::mode_of(&params, i);
        let inside = k.iter().all(|v| v.abs() <= cap);
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        if !inside || (i == zero && spec.zero_mean) {
            continue;
        }
        let scale = spec.amplitude * (1.0 + k2[i]).powf(-0.5 * spec.decay);
        if i == zero {
            coeffs[i] = Complex64::new(re * scale, 0.0);
        } else {
            let c = Complex64::new(re, im) * (scale / std::f64::consts::SQRT_2);
            coeffs[i] = c;
            coeffs[n - 1 - i] = c.conj();
        }
    }
    FourierField::from_coeffs(params, coeffs).expect("shape is correct by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_fields_are_real_and_reproducible() {
        let p = ProblemParams::new(2, 2.0, 0.5, 1.0, 4, 12).unwrap();
        let spec = FieldSpec {
            zero_mean: true,
            ..Default::default()
        };
        let a = random_field(p, spec, &mut rng(7));
        let b = random_field(p, spec, &mut rng(7));
        assert_eq!(a, b);
        assert!(a.is_hermitian());
        assert_eq!(a.mean(), 0.0);
        assert!(a.l2_norm() > 0.0);
    }

    #[test]
    fn max_mode_restricts_support() {
        let p = ProblemParams::new(1, 2.0, 0.5, 1.0, 8, 32).unwrap();
        let spec = FieldSpec {
            max_mode: 2,
            ..Default::default()
        };
        let a = random_field(p, spec, &mut rng(1));
        for i in 0..a.len() {
            if a.mode(i)[0].abs() > 2 {
                assert_eq!(a.coeffs()[i].norm(), 0.0);
            }
        }
    }
}

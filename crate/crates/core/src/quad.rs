//! Gauss–Legendre quadrature, adaptive refinement and small 1-D search helpers.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Computes the `n`-point rule by Newton iteration on `P_n`.
    pub fn compute(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + h * x);
        }
        acc * h
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (c + h * x, w * h))
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared rule of order `n`, computed once per process.
pub fn gauss(n: usize) -> &'static GaussRule {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static GaussRule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry(n)
        .or_insert_with(|| Box::leak(Box::new(GaussRule::compute(n))))
}

/// Adaptive Gauss–Legendre: compares 10- and 20-point rules and bisects.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    adaptive_inner(f, a, b, tol, 0)
}

fn adaptive_inner<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let coarse = gauss(10).integrate(a, b, f);
    let fine = gauss(20).integrate(a, b, f);
    if (fine - coarse).abs() <= tol * fine.abs().max(1e-300) || depth >= 40 {
        return fine;
    }
    let mid = 0.5 * (a + b);
    adaptive_inner(f, a, mid, tol, depth + 1) + adaptive_inner(f, mid, b, tol, depth + 1)
}

/// Integral over `[0, ∞)` of an integrand that behaves like a sum of power
/// laws near zero and decays at infinity.
///
/// The range `[δ, Ξ]` is split into dyadic panels handled by [`adaptive`];
/// `head(δ)` supplies the analytic contribution of `[0, δ]` and `tail(Ξ)` that
/// of `[Ξ, ∞)`.
pub fn half_line<F, H, T>(f: &F, head: H, tail: T, cutoff: f64, levels: u32, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
    T: Fn(f64) -> f64,
{
    let mut acc = 0.0;
    let mut hi = cutoff;
    for _ in 0..levels {
        let lo = 0.5 * hi;
        acc += adaptive(f, lo, hi, tol);
        hi = lo;
    }
    acc + head(hi) + tail(cutoff)
}

/// `∫₀^δ g` for an integrand behaving like a power law near zero, with the
/// exponent read off from `g(δ)` and `g(δ/2)`.
pub fn power_head<G: Fn(f64) -> f64>(g: &G, delta: f64) -> f64 {
    let a = g(delta);
    let b = g(0.5 * delta);
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    let expo = (a / b).log2();
    if expo <= -1.0 {
        return f64::INFINITY;
    }
    a * delta / (expo + 1.0)
}

/// `∫₀¹ g` for `g` with an integrable power-law singularity at zero.
pub fn unit_interval_singular<G: Fn(f64) -> f64>(g: &G, tol: f64) -> f64 {
    half_line(g, |d| power_head(g, d), |_| 0.0, 1.0, 60, tol)
}

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol * (1.0 + a.abs() + b.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Maximum of `f` on `[a, b]`: coarse scan of `n` points followed by a golden
/// polish around the best sample.
pub fn scan_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> (f64, f64) {
    let n = n.max(3);
    let h = (b - a) / (n - 1) as f64;
    let mut best = (a, f(a));
    for i in 1..n {
        let x = a + h * i as f64;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let lo = (best.0 - h).max(a);
    let hi = (best.0 + h).min(b);
    let polished = golden_max(&f, lo, hi, 1e-13);
    if polished.1 > best.1 {
        polished
    } else {
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rules_integrate_polynomials_exactly() {
        for n in [1usize, 2, 5, 10, 20, 33] {
            let rule = gauss(n);
            let wsum: f64 = rule.weights.iter().sum();
            assert_relative_eq!(wsum, 2.0, epsilon = 1e-14);
            let deg = 2 * n - 1;
            let got = rule.integrate(0.0, 1.0, |x| x.powi(deg as i32));
            assert_relative_eq!(got, 1.0 / (deg as f64 + 1.0), epsilon = 1e-14);
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let got = adaptive(&|x: f64| x.powf(-0.5), 1e-12, 1.0, 1e-13);
        assert_relative_eq!(got, 2.0 - 2e-6, epsilon = 1e-10);
    }

    #[test]
    fn half_line_exponential_with_power() {
        // ∫₀^∞ x^{-1/2} e^{-x} dx = √π
        let f = |x: f64| x.powf(-0.5) * (-x).exp();
        let got = half_line(&f, |d| 2.0 * d.sqrt(), |_| 0.0, 60.0, 60, 1e-13);
        assert_relative_eq!(got, std::f64::consts::PI.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn scan_finds_interior_max() {
        let (x, v) = scan_max(|x| -(x - 0.3).powi(2) + 2.0, -1.0, 1.0, 21);
        assert_relative_eq!(x, 0.3, epsilon = 1e-6);
        assert_relative_eq!(v, 2.0, epsilon = 1e-12);
    }
}

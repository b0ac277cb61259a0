//! Fourier and grid representations of T-periodic fields on `(0, T)^N`.
//!
//! Coefficients follow the orthonormal convention
//! `u(x) = Σ_k c_k e^{iωk·x} / √(T^N)`, so `Σ|c_k|²` is the `L²` norm squared
//! and `Σ (ω²|k|² + m²)^s |c_k|²` is `|u|²_H`.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::spectral::{fft_nd, ravel, unravel, Direction};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Truncated Fourier series with `|k|∞ ≤ K`, stored densely in row-major
/// order of the shifted indices `k_i + K` (axis 0 slowest).
#[derive(Debug, Clone, PartialEq)]
pub struct FourierField {
    params: ProblemParams,
    coeffs: Vec<Complex64>,
    hermitian: bool,
}

/// Real samples on the uniform grid `x_j = jT/M`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    params: ProblemParams,
    values: Vec<f64>,
}

impl FourierField {
    pub fn zeros(params: ProblemParams) -> Self {
        Self {
            params,
            coeffs: vec![ZERO; params.num_modes()],
            hermitian: true,
        }
    }

    /// Wraps a dense coefficient vector; the Hermitian flag is detected.
    pub fn from_coeffs(params: ProblemParams, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != params.num_modes() {
            return Err(Error::Shape(format!(
                "expected {} coefficients, got {}",
                params.num_modes(),
                coeffs.len()
            )));
        }
        let mut f = Self {
            params,
            coeffs,
            hermitian: false,
        };
        f.hermitian = f.detect_hermitian();
        Ok(f)
    }

    /// Builds a field from sparse `(k, c_k)` entries.
    pub fn from_entries<I>(params: ProblemParams, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i64>, Complex64)>,
    {
        let mut coeffs = vec![ZERO; params.num_modes()];
        for (k, c) in entries {
            let i = index_of(&params, &k).ok_or_else(|| {
                Error::Shape(format!("mode {k:?} outside |k|∞ <= {}", params.cutoff))
            })?;
            coeffs[i] += c;
        }
        Self::from_coeffs(params, coeffs)
    }

    /// The single mode `c e^{iωk·x}/√(T^N)`; not Hermitian unless `k = 0`
    /// and `c` is real.
    pub fn single_mode(params: ProblemParams, k: &[i64], c: Complex64) -> Result<Self> {
        Self::from_entries(params, [(k.to_vec(), c)])
    }

    /// Real cosine mode `a cos(ωk·x)`, i.e. `c_{±k} = a√(T^N)/2`.
    pub fn cosine_mode(params: ProblemParams, k: &[i64], amplitude: f64) -> Result<Self> {
        let c = Complex64::new(amplitude * params.volume().sqrt() / 2.0, 0.0);
        let neg: Vec<i64> = k.iter().map(|v| -v).collect();
        if k.iter().all(|&v| v == 0) {
            return Self::constant(params, amplitude);
        }
        Self::from_entries(params, [(k.to_vec(), c), (neg, c)])
    }

    /// The constant function `value`, i.e. `c_0 = value·√(T^N)`.
    pub fn constant(params: ProblemParams, value: f64) -> Result<Self> {
        let zero = vec![0; params.dim];
        Self::single_mode(params, &zero, Complex64::new(value * params.volume().sqrt(), 0.0))
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Same coefficients under different problem data (mass, order). The
    /// cutoff must match; use [`FourierField::resample`] to change it.
    pub fn with_params(&self, params: ProblemParams) -> Result<Self> {
        if params.dim != self.params.dim || params.cutoff != self.params.cutoff {
            return Err(Error::Shape("dimension or cutoff differ".into()));
        }
        Ok(Self {
            params,
            coeffs: self.coeffs.clone(),
            hermitian: self.hermitian,
        })
    }

    /// Embeds into (or truncates to) the lattice of `params`.
    pub fn resample(&self, params: ProblemParams) -> Result<Self> {
        if params.dim != self.params.dim {
            return Err(Error::Shape("dimension differs".into()));
        }
        let mut out = vec![ZERO; params.num_modes()];
        let kmax = params.cutoff as i64;
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = self.mode(i);
            if k.iter().all(|v| v.abs() <= kmax) {
                out[index_of(&params, &k).unwrap()] = *c;
            }
        }
        Self::from_coeffs(params, out)
    }

    /// Multi-index `k` of the `i`-th stored coefficient.
    pub fn mode(&self, i: usize) -> Vec<i64> {
        mode_of(&self.params, i)
    }

    /// `|k|²` of every stored coefficient, in storage order.
    pub fn k_squared(&self) -> Vec<f64> {
        k_squared_table(&self.params)
    }

    /// Flat index of the constant mode.
    pub fn zero_index(&self) -> usize {
        (self.coeffs.len() - 1) / 2
    }

    /// Flat index of `-k` given the flat index of `k`.
    pub fn mirror_index(&self, i: usize) -> usize {
        self.coeffs.len() - 1 - i
    }

    pub fn get(&self, k: &[i64]) -> Complex64 {
        index_of(&self.params, k).map_or(ZERO, |i| self.coeffs[i])
    }

    fn detect_hermitian(&self) -> bool {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let tol = 1e-12 * (1.0 + scale);
        (0..self.coeffs.len()).all(|i| {
            let j = self.mirror_index(i);
            (self.coeffs[j] - self.coeffs[i].conj()).norm() <= tol
        })
    }

    /// Projects onto real fields: `c_k ← (c_k + conj(c_{-k}))/2`.
    pub fn symmetrize(&self) -> Self {
        let n = self.coeffs.len();
        let coeffs = (0..n)
            .map(|i| 0.5 * (self.coeffs[i] + self.coeffs[n - 1 - i].conj()))
            .collect();
        Self {
            params: self.params,
            coeffs,
            hermitian: true,
        }
    }

    /// Elementwise map over `(|k|², c_k)`; the Hermitian flag is kept when
    /// `f` is real-linear with real factors depending only on `|k|²`.
    fn map_radial<F: Fn(f64, Complex64) -> Complex64>(&self, f: F) -> Self {
        let k2 = self.k_squared();
        let coeffs = self
            .coeffs
            .iter()
            .zip(&k2)
            .map(|(c, &q)| f(q, *c))
            .collect();
        Self {
            params: self.params,
            coeffs,
            hermitian: self.hermitian,
        }
    }

    /// Applies `(-Δ + m²)^s`, or `(-Δ + m²)^s - m^{2s}` when `shift` is set.
    pub fn apply_operator(&self, shift: bool) -> Self {
        let p = self.params;
        self.map_radial(|q, c| {
            c * if shift {
                p.shifted_symbol(q)
            } else {
                p.symbol(q)
            }
        })
    }

    /// Multiplies mode `k` by `g(|k|²)`.
    pub fn apply_multiplier<F: Fn(f64) -> f64>(&self, g: F) -> Self {
        self.map_radial(|q, c| c * g(q))
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map_radial(|_, c| c * a)
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x + y * a)
            .collect();
        Self {
            params: self.params,
            coeffs,
            hermitian: self.hermitian && other.hermitian,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-1.0, other)
    }

    /// Real `L²` pairing `Re Σ c_k conj(d_k)`.
    pub fn dot(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    /// `Σ w(|k|²) |c_k|²`.
    pub fn weighted_norm_sq<F: Fn(f64) -> f64>(&self, w: F) -> f64 {
        self.coeffs
            .iter()
            .zip(self.k_squared())
            .map(|(c, q)| w(q) * c.norm_sqr())
            .sum()
    }

    /// `|u|_H = √(Σ (ω²|k|² + m²)^s |c_k|²)`.
    pub fn hs_norm(&self) -> f64 {
        self.hs_norm_sq().sqrt()
    }

    pub fn hs_norm_sq(&self) -> f64 {
        let p = self.params;
        self.weighted_norm_sq(|q| p.symbol(q))
    }

    /// Quadratic form of the shifted operator, `Σ [(ω²|k|²+m²)^s − m^{2s}] |c_k|²`.
    pub fn shifted_form(&self) -> f64 {
        let p = self.params;
        self.weighted_norm_sq(|q| p.shifted_symbol(q))
    }

    /// `L²(0,T)^N` norm, `√(Σ|c_k|²)`.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Gagliardo-type seminorm `√(Σ ω^{2s} |k|^{2s} |c_k|²)`.
    pub fn seminorm(&self) -> f64 {
        let p = self.params;
        let w2s = p.omega().powf(2.0 * p.order);
        self.weighted_norm_sq(|q| w2s * q.powf(p.order)).sqrt()
    }

    /// Mean value `T^{-N} ∫ u = c_0 / √(T^N)`.
    pub fn mean(&self) -> f64 {
        self.coeffs[self.zero_index()].re / self.params.volume().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Complex samples of the series on an `m^N` grid, `m ≥ 2K + 1`.
    pub fn to_grid_complex(&self, m: usize) -> Result<Vec<Complex64>> {
        let p = &self.params;
        let kk = p.cutoff;
        if m < 2 * kk + 1 {
            return Err(Error::Shape(format!("grid {m} cannot hold cutoff {kk}")));
        }
        let dim = p.dim;
        let mut buf = vec![ZERO; m.pow(dim as u32)];
        let per_axis = p.modes_per_axis();
        let mut ix = vec![0usize; dim];
        let mut gx = vec![0usize; dim];
        let norm = 1.0 / p.volume().sqrt();
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == ZERO {
                continue;
            }
            unravel(i, per_axis, dim, &mut ix);
            for a in 0..dim {
                let k = ix[a] as i64 - kk as i64;
                gx[a] = k.rem_euclid(m as i64) as usize;
            }
            buf[ravel(&gx, m)] = c * norm;
        }
        fft_nd(&mut buf, m, dim, Direction::Inverse);
        Ok(buf)
    }

    /// Real samples on an `m^N` grid; requires Hermitian symmetry.
    pub fn sample(&self, m: usize) -> Result<Vec<f64>> {
        if !self.hermitian {
            return Err(Error::NonHermitian);
        }
        Ok(self.to_grid_complex(m)?.into_iter().map(|z| z.re).collect())
    }

    /// Evaluates on the grid of `params` (`M` points per axis).
    pub fn to_grid(&self) -> Result<GridField> {
        let values = self.sample(self.params.grid)?;
        Ok(GridField {
            params: self.params,
            values,
        })
    }

    /// Coefficients `|k|∞ ≤ K` of the trigonometric interpolant of real
    /// samples on an `m^N` grid (trapezoidal rule). The result is projected
    /// onto Hermitian fields.
    pub fn analyze(params: ProblemParams, values: &[f64], m: usize) -> Result<Self> {
        let dim = params.dim;
        if values.len() != m.pow(dim as u32) {
            return Err(Error::Shape(format!(
                "expected {} samples, got {}",
                m.pow(dim as u32),
                values.len()
            )));
        }
        if m < 2 * params.cutoff + 1 {
            return Err(Error::Shape(format!(
                "grid {m} cannot resolve cutoff {}",
                params.cutoff
            )));
        }
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_nd(&mut buf, m, dim, Direction::Forward);
        let cell = (params.period / m as f64).powi(dim as i32);
        let norm = cell / params.volume().sqrt();
        let kk = params.cutoff as i64;
        let per_axis = params.modes_per_axis();
        let mut ix = vec![0usize; dim];
        let mut gx = vec![0usize; dim];
        let coeffs = (0..params.num_modes())
            .map(|i| {
                unravel(i, per_axis, dim, &mut ix);
                for a in 0..dim {
                    gx[a] = (ix[a] as i64 - kk).rem_euclid(m as i64) as usize;
                }
                buf[ravel(&gx, m)] * norm
            })
            .collect();
        let raw = Self {
            params,
            coeffs,
            hermitian: false,
        };
        Ok(raw.symmetrize())
    }

    pub fn to_json_value(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(FieldRecord::from(self))?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&FieldRecord::from(self))?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let rec: FieldRecord = serde_json::from_str(s)?;
        rec.into_field()
    }

    pub fn write_json<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_json_string()?.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_json<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut s = String::new();
        std::fs::File::open(path)?.read_to_string(&mut s)?;
        Self::from_json_str(&s)
    }
}

/// Flat index of mode `k`, if inside the cutoff.
pub fn index_of(params: &ProblemParams, k: &[i64]) -> Option<usize> {
    if k.len() != params.dim {
        return None;
    }
    let kk = params.cutoff as i64;
    let per_axis = params.modes_per_axis();
    let mut idx = 0usize;
    for &v in k {
        if v.abs() > kk {
            return None;
        }
        idx = idx * per_axis + (v + kk) as usize;
    }
    Some(idx)
}

pub fn mode_of(params: &ProblemParams, i: usize) -> Vec<i64> {
    let mut ix = vec![0usize; params.dim];
    unravel(i, params.modes_per_axis(), params.dim, &mut ix);
    ix.iter().map(|&a| a as i64 - params.cutoff as i64).collect()
}

pub fn k_squared_table(params: &ProblemParams) -> Vec<f64> {
    let per_axis = params.modes_per_axis();
    let kk = params.cutoff as i64;
    let mut ix = vec![0usize; params.dim];
    (0..params.num_modes())
        .map(|i| {
            unravel(i, per_axis, params.dim, &mut ix);
            ix.iter()
                .map(|&a| {
                    let k = (a as i64 - kk) as f64;
                    k * k
                })
                .sum()
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct EntryRecord {
    k: Vec<i64>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
#[allow(non_snake_case)]
struct FieldRecord {
    N: usize,
    T: f64,
    s: f64,
    m: f64,
    K: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    M: Option<usize>,
    entries: Vec<EntryRecord>,
}

impl From<&FourierField> for FieldRecord {
    fn from(f: &FourierField) -> Self {
        let p = f.params;
        let entries = f
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != ZERO)
            .map(|(i, c)| EntryRecord {
                k: f.mode(i),
                re: c.re,
                im: c.im,
            })
            .collect();
        Self {
            N: p.dim,
            T: p.period,
            s: p.order,
            m: p.mass,
            K: p.cutoff,
            M: Some(p.grid),
            entries,
        }
    }
}

impl FieldRecord {
    fn into_field(self) -> Result<FourierField> {
        let grid = self.M.unwrap_or(2 * self.K + 2);
        let params = ProblemParams::new(self.N, self.T, self.s, self.m, self.K, grid)?;
        FourierField::from_entries(
            params,
            self.entries
                .into_iter()
                .map(|e| (e.k, Complex64::new(e.re, e.im))),
        )
    }
}

impl GridField {
    pub fn new(params: ProblemParams, values: Vec<f64>) -> Result<Self> {
        if values.len() != params.num_grid_points() {
            return Err(Error::Shape(format!(
                "expected {} grid values, got {}",
                params.num_grid_points(),
                values.len()
            )));
        }
        Ok(Self { params, values })
    }

    /// Samples `g` at the grid points `x_j = jT/M`.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(params: ProblemParams, g: F) -> Self {
        let m = params.grid;
        let h = params.period / m as f64;
        let mut ix = vec![0usize; params.dim];
        let mut x = vec![0.0; params.dim];
        let values = (0..params.num_grid_points())
            .map(|i| {
                unravel(i, m, params.dim, &mut ix);
                for (xa, &a) in x.iter_mut().zip(&ix) {
                    *xa = a as f64 * h;
                }
                g(&x)
            })
            .collect();
        Self { params, values }
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Coordinates of grid point `i`.
    pub fn point(&self, i: usize) -> Vec<f64> {
        let mut ix = vec![0usize; self.params.dim];
        unravel(i, self.params.grid, self.params.dim, &mut ix);
        let h = self.params.period / self.params.grid as f64;
        ix.iter().map(|&a| a as f64 * h).collect()
    }

    pub fn to_fourier(&self) -> FourierField {
        FourierField::analyze(self.params, &self.values, self.params.grid)
            .expect("grid invariants guarantee a valid transform")
    }

    /// Trapezoidal `∫ g` over the torus.
    pub fn integral(&self) -> f64 {
        let cell = (self.params.period / self.params.grid as f64).powi(self.params.dim as i32);
        self.values.iter().sum::<f64>() * cell
    }

    /// `(∫ |g|^q)^{1/q}` by the trapezoidal rule.
    pub fn lq_norm(&self, q: f64) -> Result<f64> {
        lq_norm(&self.params, &self.values, self.params.grid, q)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with columns `i0, …, i{N-1}, value`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (0..self.params.dim).map(|a| format!("i{a}")).collect();
        header.push("value".into());
        wtr.write_record(&header)?;
        let mut ix = vec![0usize; self.params.dim];
        for (i, v) in self.values.iter().enumerate() {
            unravel(i, self.params.grid, self.params.dim, &mut ix);
            let mut row: Vec<String> = ix.iter().map(|a| a.to_string()).collect();
            row.push(format!("{v:e}"));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(params: ProblemParams, r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut values = vec![f64::NAN; params.num_grid_points()];
        let mut ix = vec![0usize; params.dim];
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != params.dim + 1 {
                return Err(Error::Shape(format!("row has {} columns", rec.len())));
            }
            for (a, slot) in ix.iter_mut().enumerate() {
                *slot = rec[a]
                    .trim()
                    .parse()
                    .map_err(|_| Error::Shape(format!("bad index `{}`", &rec[a])))?;
                if *slot >= params.grid {
                    return Err(Error::Shape(format!("index {slot} out of range")));
                }
            }
            values[ravel(&ix, params.grid)] = rec[params.dim]
                .trim()
                .parse()
                .map_err(|_| Error::Shape(format!("bad value `{}`", &rec[params.dim])))?;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Shape("missing grid points".into()));
        }
        Self::new(params, values)
    }
}

/// `(∫ |g|^q)^{1/q}` for real samples on an `m^N` grid of the torus.
pub fn lq_norm(params: &ProblemParams, values: &[f64], m: usize, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::InvalidExponent(q));
    }
    let cell = (params.period / m as f64).powi(params.dim as i32);
    let s: f64 = values.iter().map(|v| v.abs().powf(q)).sum();
    Ok((s * cell).powf(1.0 / q))
}

//! Multi-dimensional FFTs on row-major `M^N` arrays (axis 0 slowest).

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `X_k = Σ_j x_j e^{-2πi jk/M}`
    Forward,
    /// `x_j = Σ_k X_k e^{+2πi jk/M}` (unnormalized)
    Inverse,
}

fn plan(m: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        match dir {
            Direction::Forward => p.plan_fft_forward(m),
            Direction::Inverse => p.plan_fft_inverse(m),
        }
    })
}

/// In-place unnormalized DFT along every axis of an `m^dim` array.
pub fn fft_nd(data: &mut [Complex64], m: usize, dim: usize, dir: Direction) {
    assert_eq!(data.len(), m.pow(dim as u32), "array is not m^dim");
    let fft = plan(m, dir);
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..dim {
        let stride = m.pow((dim - 1 - axis) as u32);
        let block = stride * m;
        for outer in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                if stride == 1 {
                    fft.process_with_scratch(&mut data[base..base + m], &mut scratch);
                    continue;
                }
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}

/// Decomposes a flat row-major index into per-axis indices in `0..m`.
pub fn unravel(mut idx: usize, m: usize, dim: usize, out: &mut [usize]) {
    for a in (0..dim).rev() {
        out[a] = idx % m;
        idx /= m;
    }
}

/// Flattens per-axis indices (row-major).
pub fn ravel(ix: &[usize], m: usize) -> usize {
    ix.iter().fold(0, |acc, &i| acc * m + i)
}

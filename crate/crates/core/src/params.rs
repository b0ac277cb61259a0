use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Problem data shared by every field: dimension `N`, period `T`, order `s`,
/// mass `m`, Fourier cutoff `K` (per axis, `|k|∞ ≤ K`) and grid size `M`.
///
/// `ω = 2π/T` is always derived from the period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub dim: usize,
    pub period: f64,
    pub order: f64,
    pub mass: f64,
    pub cutoff: usize,
    pub grid: usize,
}

/// Whether `κ_s` appears explicitly in the functional or is set to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    Explicit,
    Normalized,
}

impl ProblemParams {
    pub fn new(
        dim: usize,
        period: f64,
        order: f64,
        mass: f64,
        cutoff: usize,
        grid: usize,
    ) -> Result<Self> {
        let p = Self {
            dim,
            period,
            order,
            mass,
            cutoff,
            grid,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.dim == 0 {
            return bad("dimension N must be positive".into());
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            return bad(format!("period T = {} must be positive", self.period));
        }
        if !(self.order > 0.0 && self.order < 1.0) {
            return bad(format!("order s = {} must lie in (0, 1)", self.order));
        }
        // N = 2s is admitted: the critical exponent is then infinite.
        if (self.dim as f64) < 2.0 * self.order {
            return bad(format!("need N >= 2s, got N = {}, s = {}", self.dim, self.order));
        }
        if !(self.mass.is_finite() && self.mass >= 0.0) {
            return bad(format!("mass m = {} must be nonnegative", self.mass));
        }
        if self.cutoff == 0 {
            return bad("cutoff K must be positive".into());
        }
        if self.grid < 2 * self.cutoff + 2 {
            return bad(format!(
                "grid M = {} must be at least 2K + 2 = {}",
                self.grid,
                2 * self.cutoff + 2
            ));
        }
        Ok(())
    }

    pub fn with_mass(&self, mass: f64) -> Result<Self> {
        let mut p = *self;
        p.mass = mass;
        p.validate()?;
        Ok(p)
    }

    pub fn with_grid(&self, cutoff: usize, grid: usize) -> Result<Self> {
        let mut p = *self;
        p.cutoff = cutoff;
        p.grid = grid;
        p.validate()?;
        Ok(p)
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// `T^N`, the measure of the torus.
    pub fn volume(&self) -> f64 {
        self.period.powi(self.dim as i32)
    }

    pub fn modes_per_axis(&self) -> usize {
        2 * self.cutoff + 1
    }

    pub fn num_modes(&self) -> usize {
        self.modes_per_axis().pow(self.dim as u32)
    }

    pub fn num_grid_points(&self) -> usize {
        self.grid.pow(self.dim as u32)
    }

    /// Fractional critical exponent `2N/(N - 2s)`; infinite when `N = 2s`.
    pub fn critical_exponent(&self) -> f64 {
        let n = self.dim as f64;
        let gap = n - 2.0 * self.order;
        if gap <= 0.0 {
            f64::INFINITY
        } else {
            2.0 * n / gap
        }
    }

    /// `m^{2s}`.
    pub fn mass_power(&self) -> f64 {
        self.mass.powf(2.0 * self.order)
    }

    /// Multiplier `(ω²|k|² + m²)^s` for a mode with `|k|² = k2`.
    pub fn symbol(&self, k2: f64) -> f64 {
        let w = self.omega();
        (w * w * k2 + self.mass * self.mass).powf(self.order)
    }

    /// Shifted multiplier `(ω²|k|² + m²)^s - m^{2s}`, exactly zero at `k = 0`.
    pub fn shifted_symbol(&self, k2: f64) -> f64 {
        if k2 == 0.0 {
            0.0
        } else {
            self.symbol(k2) - self.mass_power()
        }
    }

    /// Grid size used for pointwise nonlinear terms: `⌈(p + 1) M / 2⌉`,
    /// never smaller than `M`.
    pub fn padded_grid(&self, growth: f64) -> usize {
        let padded = ((growth + 1.0) * self.grid as f64 / 2.0).ceil() as usize;
        padded.max(self.grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ProblemParams {
        ProblemParams::new(1, 2.0 * PI, 0.5, 1.0, 8, 32).unwrap()
    }

    #[test]
    fn omega_is_derived_from_period() {
        let p = base();
        assert!((p.omega() - 1.0).abs() < 1e-15);
        let q = ProblemParams::new(2, 1.0, 0.3, 0.0, 4, 10).unwrap();
        assert!((q.omega() - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid() {
        assert!(ProblemParams::new(1, 1.0, 0.5, 1.0, 8, 17).is_err());
        assert!(ProblemParams::new(1, 1.0, 1.0, 1.0, 8, 32).is_err());
        assert!(ProblemParams::new(1, 1.0, 0.6, 1.0, 8, 32).is_err());
        assert!(ProblemParams::new(1, -1.0, 0.5, 1.0, 8, 32).is_err());
        assert!(ProblemParams::new(1, 1.0, 0.5, -0.1, 8, 32).is_err());
        assert!(ProblemParams::new(0, 1.0, 0.5, 1.0, 8, 32).is_err());
    }

    #[test]
    fn shifted_symbol_vanishes_on_constants() {
        let p = ProblemParams::new(1, 3.0, 0.37, 0.71, 8, 32).unwrap();
        assert_eq!(p.shifted_symbol(0.0), 0.0);
        assert!(p.shifted_symbol(1.0) > 0.0);
    }

    #[test]
    fn critical_exponent_infinite_at_borderline() {
        assert!(base().critical_exponent().is_infinite());
        let p = ProblemParams::new(3, 1.0, 0.5, 1.0, 2, 6).unwrap();
        assert!((p.critical_exponent() - 3.0).abs() < 1e-15);
    }
}

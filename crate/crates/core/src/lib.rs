//! Spectral toolkit for T-periodic solutions of
//! `[(-Δ + m²)^s - m^{2s}] u = f(x, u)` on the torus `(0, T)^N`.
//!
//! The crate is organised bottom-up:
//!
//! - [`torus`]: Fourier fields on the torus, the multiplier operator and its norms.
//! - [`extension`]: the Bessel-kernel extension to the half-cylinder, `κ_s`,
//!   extension energies and the Dirichlet-to-Neumann map.
//! - [`cylinder`]: an independent finite-element check of the extension that
//!   never touches Bessel functions.
//! - [`nonlinearity`], [`hypotheses`], [`functional`]: the nonlinear term, its
//!   sampled hypothesis checks, and the energy functional with its gradient.
//! - [`linking`]: the linking geometry and the min-max critical point search.
//! - [`continuation`]: uniform level bounds and the `m → 0` limit.
//!
//! Data-parallel loops go through [`parallel`], which uses rayon when the
//! `parallel` feature is enabled (the default) and plain iterators otherwise.

pub mod continuation;
pub mod cylinder;
pub mod error;
pub mod extension;
pub mod functional;
pub mod hypotheses;
pub mod linking;
pub mod nonlinearity;
pub mod parallel;
pub mod params;
pub mod quad;
pub mod random;
pub mod special;
pub mod spectral;
pub mod torus;

pub use error::{Error, Result};
pub use params::{Normalization, ProblemParams};
pub use torus::{FourierField, GridField};

/// Crate version, embedded in emitted artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Simulation-aided physics-informed inversion of a nonlinear forward model.
//!
//! The crate trains a dense network `ψ(y, θ)` that maps a satellite
//! ground-track image `y` back to the orbital elements `(e, i, ω)` that
//! produced it. Training mixes two kinds of data:
//!
//! * observed images with unknown parameters, which only contribute the
//!   reconstruction term `‖y - f(ψ(y))‖²` through the differentiable forward
//!   operator `f`;
//! * simulated pairs `(x, f(x))`, which contribute the λ-weighted hybrid of
//!   the reconstruction term and the supervised term `‖ψ(y) - x‖²`.
//!
//! Modules:
//!
//! * [`autodiff`]: reverse-mode tape over dense matrices.
//! * [`orbit`]: Kepler propagation, Earth-fixed ground track, Gaussian splat
//!   rasterization and the forward-mode Jacobian of the whole operator.
//! * [`mlp`]: the inverter network with range-constrained output heads.
//! * [`trainer`]: losses, Adam, training loop, evaluation, λ cross-validation.
//! * [`datagen`]: seeded dataset synthesis, binary dataset/checkpoint files,
//!   PGM export.
//! * [`bench`]: experiment configuration, the `N_o × N_s` sweep and the
//!   command implementations behind the `simpinn` binary.

pub mod autodiff;
pub mod bench;
pub mod datagen;
mod error;
pub mod mlp;
pub mod orbit;
pub mod trainer;

pub use error::{Error, Result};

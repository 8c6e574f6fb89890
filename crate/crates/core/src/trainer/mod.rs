//! Losses, optimization, evaluation and λ selection.
//!
//! Simulated pairs contribute the hybrid loss
//! `λ·mse(y, f(ψ(y))) + (1-λ)·mse(ψ(y), x)`; observed images contribute only
//! `λ·mse(y, f(ψ(y)))`. With no simulated data this is plain PINN training.

mod adam;
mod cv;
mod eval;
mod loss;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use cv::{cross_validate_lambda, CvRow};
pub use eval::{evaluate, Inverter};
pub use loss::{batch_loss, loss_labeled, loss_unlabeled, BatchItem, LossGraph};
pub use train::{train, train_with_state, TrainOutcome};

use crate::error::{Error, Result};
use crate::mlp::MlpArchitecture;
use crate::orbit::{OrbitalElements, PhysicsConstants, SensorImage};

/// A simulated pair `(x, f(x))`, noise-free.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub x: OrbitalElements,
    pub y: SensorImage,
}

/// A noisy observation. `x_hidden` is kept for test-time metrics only.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservedSample {
    pub y: SensorImage,
    pub x_hidden: OrbitalElements,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lambda: f64,
    pub n_observed: usize,
    pub n_simulated: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Observation noise in image-intensity units; `None` selects 1% of the
    /// mean non-zero clean pixel intensity.
    pub noise_sigma: Option<f64>,
    pub physics: PhysicsConstants,
    pub arch: MlpArchitecture,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let physics = PhysicsConstants::default();
        let arch = MlpArchitecture::paper_default();
        TrainConfig {
            lambda: 0.5,
            n_observed: 0,
            n_simulated: 0,
            epochs: 200,
            batch_size: 64,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            noise_sigma: None,
            physics,
            arch,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::Config(format!(
                "lambda must lie in (0, 1), got {}",
                self.lambda
            )));
        }
        if self.n_observed + self.n_simulated == 0 {
            return Err(Error::Config(
                "at least one observed or simulated sample is required".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0)
            || !(0.0..1.0).contains(&self.adam_beta1)
            || !(0.0..1.0).contains(&self.adam_beta2)
            || !(self.adam_eps > 0.0)
        {
            return Err(Error::Config("invalid optimizer settings".into()));
        }
        if let Some(s) = self.noise_sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("noise_sigma must be >= 0, got {s}")));
            }
        }
        self.physics.validate()?;
        self.arch.validate()?;
        if self.arch.input_dim != self.physics.pixel_count() {
            return Err(Error::Config(format!(
                "network input {} does not match {}x{} images",
                self.arch.input_dim, self.physics.width, self.physics.height
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunMetrics {
    pub mse_e: f64,
    pub mse_i: f64,
    pub mse_omega: f64,
    /// Per-pixel mean squared reconstruction error.
    pub mse_reconstruction: f64,
    pub loss_history: Vec<f64>,
}

impl RunMetrics {
    /// Sum of the three per-parameter errors.
    pub fn total_param_mse(&self) -> f64 {
        self.mse_e + self.mse_i + self.mse_omega
    }
}

//! Seeded dataset synthesis and persistence.

mod format;
mod pgm;
pub mod rng;

pub use format::{
    load_checkpoint, load_checkpoint_for, load_dataset, save_checkpoint, save_dataset, Checkpoint,
    Dataset, CHECKPOINT_MAGIC, DATASET_HEADER_LEN, DATASET_MAGIC, FORMAT_VERSION,
};
pub use pgm::{side_by_side, write_pgm, SEPARATOR_WIDTH};

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::Result;
use crate::orbit::{render, OrbitalElements, PhysicsConstants, SensorImage};
use crate::trainer::{LabeledSample, ObservedSample};
use rng::{stream, Namespace};

/// Which pool a draw belongs to; each has its own seed namespace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pool {
    Labeled,
    Observed,
    Test,
}

impl Pool {
    fn elements(self) -> Namespace {
        match self {
            Pool::Labeled => Namespace::Labeled,
            Pool::Observed => Namespace::Observed,
            Pool::Test => Namespace::Test,
        }
    }

    fn noise(self) -> Namespace {
        match self {
            Pool::Test => Namespace::TestNoise,
            _ => Namespace::ObservedNoise,
        }
    }
}

fn draw_elements(seed: u64, ns: Namespace, k: u64, e_max: f64) -> OrbitalElements {
    let mut r = stream(seed, ns, k);
    let e = e_max * r.gen::<f64>();
    let i = TAU * r.gen::<f64>();
    let omega = TAU * r.gen::<f64>();
    OrbitalElements::new(e, i, omega).expect("uniform draws are valid elements")
}

/// `e ~ U[0, e_max)`, `i, ω ~ U[0, 2π)`; element `k` depends only on
/// `(seed, k)`.
pub fn sample_elements(seed: u64, n: usize, e_max: f64) -> Vec<OrbitalElements> {
    sample_pool_elements(Pool::Labeled, seed, n, e_max)
}

pub fn sample_pool_elements(pool: Pool, seed: u64, n: usize, e_max: f64) -> Vec<OrbitalElements> {
    (0..n as u64)
        .map(|k| draw_elements(seed, pool.elements(), k, e_max))
        .collect()
}

/// Noise-free simulated pairs `(x, f(x))`.
pub fn make_labeled(seed: u64, n: usize, physics: &PhysicsConstants) -> Result<Vec<LabeledSample>> {
    sample_elements(seed, n, physics.e_max)
        .into_par_iter()
        .map(|x| Ok(LabeledSample { y: render(&x, physics)?, x }))
        .collect()
}

fn make_noisy(
    pool: Pool,
    seed: u64,
    n: usize,
    physics: &PhysicsConstants,
    noise_sigma: f64,
) -> Result<Vec<ObservedSample>> {
    sample_pool_elements(pool, seed, n, physics.e_max)
        .into_par_iter()
        .enumerate()
        .map(|(k, x)| {
            let clean = render(&x, physics)?;
            let y = add_noise(&clean, noise_sigma, &mut stream(seed, pool.noise(), k as u64));
            Ok(ObservedSample { y, x_hidden: x })
        })
        .collect()
}

/// `y = max(f(x) + ε, 0)` with `ε ~ N(0, σ²)` per pixel.
pub fn add_noise<R: Rng>(clean: &SensorImage, sigma: f64, rng: &mut R) -> SensorImage {
    if sigma == 0.0 {
        return clean.clone();
    }
    let px = clean
        .pixels()
        .iter()
        .map(|&p| {
            let z: f64 = StandardNormal.sample(rng);
            (p + sigma * z).max(0.0)
        })
        .collect();
    SensorImage::from_pixels(clean.width(), clean.height(), px).expect("clamped pixels are valid")
}

/// Training observations `f(x) + ε` with hidden ground truth.
pub fn make_observed(
    seed: u64,
    n: usize,
    physics: &PhysicsConstants,
    noise_sigma: f64,
) -> Result<Vec<ObservedSample>> {
    make_noisy(Pool::Observed, seed, n, physics, noise_sigma)
}

/// Held-out test observations, drawn from their own namespace.
pub fn make_test(
    seed: u64,
    n: usize,
    physics: &PhysicsConstants,
    noise_sigma: f64,
) -> Result<Vec<ObservedSample>> {
    make_noisy(Pool::Test, seed, n, physics, noise_sigma)
}

/// Number of calibration renders behind [`default_noise_sigma`].
pub const CALIBRATION_RENDERS: usize = 64;

/// 1% of the mean non-zero pixel intensity of clean renders. The
/// calibration draws use a fixed seed, so the result depends only on the
/// physics.
pub fn default_noise_sigma(physics: &PhysicsConstants) -> Result<f64> {
    let xs: Vec<OrbitalElements> = (0..CALIBRATION_RENDERS as u64)
        .map(|k| draw_elements(0, Namespace::Calibration, k, physics.e_max))
        .collect();
    let images = xs
        .par_iter()
        .map(|x| render(x, physics))
        .collect::<Result<Vec<_>>>()?;
    let (sum, count) = images
        .iter()
        .flat_map(|im| im.pixels().iter())
        .filter(|&&p| p > 0.0)
        .fold((0.0, 0usize), |(s, c), &p| (s + p, c + 1));
    Ok(if count == 0 { 0.0 } else { 0.01 * sum / count as f64 })
}

use rayon::prelude::*;

use super::{ObservedSample, RunMetrics};
use crate::error::{Error, Result};
use crate::mlp::{predict, MlpParams};
use crate::orbit::{render, OrbitalElements, PhysicsConstants, SensorImage};

/// Anything that maps observations to element estimates.
pub trait Inverter {
    fn invert(&self, images: &[&SensorImage]) -> Result<Vec<[f64; 3]>>;
}

impl Inverter for MlpParams {
    fn invert(&self, images: &[&SensorImage]) -> Result<Vec<[f64; 3]>> {
        // bounded batches keep the tape small on large test sets
        let mut out = Vec::with_capacity(images.len());
        for chunk in images.chunks(256) {
            out.extend(predict(self, chunk)?);
        }
        Ok(out)
    }
}

/// Per-parameter and reconstruction MSE over a test set of observations.
pub fn evaluate<I: Inverter + ?Sized>(
    inverter: &I,
    test: &[ObservedSample],
    physics: &PhysicsConstants,
) -> Result<RunMetrics> {
    if test.is_empty() {
        return Err(Error::Contract("evaluation on an empty test set".into()));
    }
    let images: Vec<&SensorImage> = test.iter().map(|s| &s.y).collect();
    let predictions = inverter.invert(&images)?;
    if predictions.len() != test.len() {
        return Err(Error::Contract(format!(
            "inverter returned {} predictions for {} images",
            predictions.len(),
            test.len()
        )));
    }
    let per_sample = test
        .par_iter()
        .zip(&predictions)
        .map(|(s, &x_hat)| {
            let truth = s.x_hidden.as_array();
            let sq = [
                (x_hat[0] - truth[0]).powi(2),
                (x_hat[1] - truth[1]).powi(2),
                (x_hat[2] - truth[2]).powi(2),
            ];
            let recon = render(&OrbitalElements::from_array(x_hat)?, physics)?;
            if recon.len() != s.y.len() {
                return Err(Error::dim("evaluate", "test image size differs from physics"));
            }
            let pixel_mse = recon
                .pixels()
                .iter()
                .zip(s.y.pixels())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / s.y.len() as f64;
            Ok((sq, pixel_mse))
        })
        .collect::<Result<Vec<_>>>()?;

    let n = test.len() as f64;
    let mut m = RunMetrics::default();
    for (sq, recon) in per_sample {
        m.mse_e += sq[0];
        m.mse_i += sq[1];
        m.mse_omega += sq[2];
        m.mse_reconstruction += recon;
    }
    m.mse_e /= n;
    m.mse_i /= n;
    m.mse_omega /= n;
    m.mse_reconstruction /= n;
    Ok(m)
}

use rand::seq::SliceRandom;

use super::eval::evaluate;
use super::train::train;
use super::{LabeledSample, ObservedSample, RunMetrics, TrainConfig};
use crate::datagen::rng::{stream, Namespace};
use crate::error::{Error, Result};

/// Fraction of the labeled pool held out for scoring.
pub const HOLDOUT_FRACTION: f64 = 0.2;

#[derive(Clone, Debug, PartialEq)]
pub struct CvRow {
    pub lambda: f64,
    /// Errors on the held-out simulated pairs.
    pub metrics: RunMetrics,
}

/// Pick λ by training once per grid value on 80% of the labeled pool (plus
/// every observation) and scoring total parameter MSE on the remaining 20%.
/// Ties go to the smaller λ.
pub fn cross_validate_lambda(
    base: &TrainConfig,
    labeled: &[LabeledSample],
    observed: &[ObservedSample],
    grid: &[f64],
) -> Result<(f64, Vec<CvRow>)> {
    if grid.is_empty() {
        return Err(Error::Contract("empty lambda grid".into()));
    }
    if let Some(l) = grid.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(Error::Contract(format!("lambda {l} outside (0, 1)")));
    }
    if labeled.len() < 5 {
        return Err(Error::Contract(format!(
            "cross-validation needs at least 5 labeled samples, got {}",
            labeled.len()
        )));
    }
    let mut idx: Vec<usize> = (0..labeled.len()).collect();
    idx.shuffle(&mut stream(base.seed, Namespace::CvSplit, 0));
    let n_hold = ((labeled.len() as f64 * HOLDOUT_FRACTION).round() as usize).max(1);
    let (hold, fit) = idx.split_at(n_hold);
    let mut fit = fit.to_vec();
    fit.sort_unstable();
    let train_pool: Vec<LabeledSample> = fit.iter().map(|&k| labeled[k].clone()).collect();
    let mut hold = hold.to_vec();
    hold.sort_unstable();
    let holdout: Vec<ObservedSample> = hold
        .iter()
        .map(|&k| ObservedSample {
            y: labeled[k].y.clone(),
            x_hidden: labeled[k].x,
        })
        .collect();

    let mut rows = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let cfg = TrainConfig {
            lambda,
            n_simulated: train_pool.len(),
            n_observed: observed.len(),
            ..base.clone()
        };
        let (params, _) = train(&cfg, &train_pool, observed)?;
        let metrics = evaluate(&params, &holdout, &cfg.physics)?;
        rows.push(CvRow { lambda, metrics });
    }
    Ok((select_lambda(&rows), rows))
}

pub(crate) fn select_lambda(rows: &[CvRow]) -> f64 {
    let mut best = &rows[0];
    for r in &rows[1..] {
        let (s, b) = (r.metrics.total_param_mse(), best.metrics.total_param_mse());
        if s < b || (s == b && r.lambda < best.lambda) {
            best = r;
        }
    }
    best.lambda
}

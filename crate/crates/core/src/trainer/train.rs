use rand::seq::SliceRandom;

use super::adam::AdamState;
use super::eval::evaluate;
use super::loss::{batch_loss, BatchItem};
use super::{LabeledSample, ObservedSample, RunMetrics, TrainConfig};
use crate::autodiff::Tape;
use crate::datagen::rng::{stream, Namespace};
use crate::error::{Error, Result};
use crate::mlp::{init, MlpParams};

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: MlpParams,
    pub adam: AdamState,
    /// Errors of the final network on the training pools (observations are
    /// scored against their hidden parameters), plus the loss history.
    pub metrics: RunMetrics,
}

/// Train from a fresh initialization; see [`train_with_state`].
pub fn train(
    config: &TrainConfig,
    labeled: &[LabeledSample],
    observed: &[ObservedSample],
) -> Result<(MlpParams, RunMetrics)> {
    train_with_state(config, labeled, observed).map(|o| (o.params, o.metrics))
}

/// Mini-batch Adam over the shuffled union of both pools.
///
/// Each epoch is one pass in a seeded order; `loss_history[k]` is the mean
/// per-sample loss of epoch `k`. Deterministic given `config.seed`.
pub fn train_with_state(
    config: &TrainConfig,
    labeled: &[LabeledSample],
    observed: &[ObservedSample],
) -> Result<TrainOutcome> {
    config.validate()?;
    if labeled.len() != config.n_simulated || observed.len() != config.n_observed {
        return Err(Error::Contract(format!(
            "pool sizes ({} simulated, {} observed) differ from config ({}, {})",
            labeled.len(),
            observed.len(),
            config.n_simulated,
            config.n_observed
        )));
    }
    let mut params = init(&config.arch, config.seed, config.physics.e_max)?;
    let mut adam = AdamState::new(&params);
    let adam_cfg = config.adam();

    let items: Vec<BatchItem<'_>> = labeled
        .iter()
        .map(|s| BatchItem {
            y: &s.y,
            target: Some(&s.x),
        })
        .chain(observed.iter().map(|s| BatchItem {
            y: &s.y,
            target: None,
        }))
        .collect();

    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut loss_history = Vec::with_capacity(config.epochs);
    let mut batch: Vec<BatchItem<'_>> = Vec::with_capacity(config.batch_size);
    for epoch in 0..config.epochs {
        order.sort_unstable();
        order.shuffle(&mut stream(config.seed, Namespace::Shuffle, epoch as u64));
        let mut epoch_sum = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            batch.clear();
            batch.extend(chunk.iter().map(|&k| items[k]));
            let mut tape = Tape::new();
            let net = params.bind(&mut tape, true)?;
            let loss = batch_loss(
                &mut tape,
                &net,
                config.arch.input_dim,
                &batch,
                config.lambda,
                &config.physics,
            )
            .map_err(|e| match e {
                Error::Numeric(m) | Error::Domain(m) => {
                    Error::Numeric(format!("epoch {epoch}, batch {b}: {m}"))
                }
                other => other,
            })?;
            let value = tape.scalar(loss);
            if !value.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss {value} at epoch {epoch}, batch {b}"
                )));
            }
            tape.backward(loss)?;
            let grads = net.grads(&tape);
            adam.update(&mut params, &grads, &adam_cfg)?;
            epoch_sum += value * chunk.len() as f64;
        }
        loss_history.push(epoch_sum / items.len() as f64);
    }

    let train_view: Vec<ObservedSample> = labeled
        .iter()
        .map(|s| ObservedSample {
            y: s.y.clone(),
            x_hidden: s.x,
        })
        .chain(observed.iter().cloned())
        .collect();
    let mut metrics = evaluate(&params, &train_view, &config.physics)?;
    metrics.loss_history = loss_history;
    Ok(TrainOutcome {
        params,
        adam,
        metrics,
    })
}

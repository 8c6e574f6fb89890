use rayon::prelude::*;

use super::LabeledSample;
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::mlp::{forward, input_batch, BoundMlp, MlpParams};
use crate::orbit::{render_jacobian, OrbitalElements, PhysicsConstants, RenderJacobian, SensorImage};

/// A loss node together with the parameter variables it depends on.
#[derive(Clone, Debug)]
pub struct LossGraph {
    pub loss: Var,
    pub net: BoundMlp,
}

/// One training sample as seen by the loss: supervised when `target` is set.
#[derive(Clone, Copy, Debug)]
pub struct BatchItem<'a> {
    pub y: &'a SensorImage,
    pub target: Option<&'a OrbitalElements>,
}

fn column_values(tape: &Tape, x_hat: Var, j: usize) -> [f64; 3] {
    let (_, b) = tape.shape(x_hat);
    let d = tape.value(x_hat);
    [d[j], d[b + j], d[2 * b + j]]
}

fn render_prediction(x: [f64; 3], physics: &PhysicsConstants) -> Result<RenderJacobian> {
    let elements = OrbitalElements::from_array(x)?;
    render_jacobian(&elements, physics)
}

/// `mse(y, f(x̂))` with `f` spliced in through its Jacobian.
fn reconstruction_term(
    tape: &mut Tape,
    x_col: Var,
    y: &SensorImage,
    rendered: RenderJacobian,
) -> Result<Var> {
    if rendered.image.len() != y.len() {
        return Err(Error::dim(
            "reconstruction",
            format!("{} rendered pixels vs {} observed", rendered.image.len(), y.len()),
        ));
    }
    let predicted = tape.inject_external_vjp(
        x_col,
        rendered.image.pixels().to_vec(),
        rendered.jacobian,
    )?;
    let observed = tape.constant(y.len(), 1, y.pixels().to_vec())?;
    tape.mse(observed, predicted)
}

/// `λ·recon + (1-λ)·param`.
fn hybrid_term(
    tape: &mut Tape,
    x_col: Var,
    recon: Var,
    target: &OrbitalElements,
    lambda: f64,
) -> Result<Var> {
    let truth = tape.constant(3, 1, target.as_array().to_vec())?;
    let param = tape.mse(x_col, truth)?;
    let a = tape.scale(recon, lambda);
    let b = tape.scale(param, 1.0 - lambda);
    tape.add(a, b)
}

fn single_prediction(
    tape: &mut Tape,
    params: &MlpParams,
    y: &SensorImage,
    physics: &PhysicsConstants,
) -> Result<(Var, BoundMlp, RenderJacobian)> {
    let net = params.bind(tape, true)?;
    let input = input_batch(tape, &[y], params.arch.input_dim)?;
    let x_hat = forward(tape, &net, input)?;
    let rendered = render_prediction(column_values(tape, x_hat, 0), physics)?;
    Ok((x_hat, net, rendered))
}

/// Hybrid loss of one simulated pair.
pub fn loss_labeled(
    tape: &mut Tape,
    params: &MlpParams,
    sample: &LabeledSample,
    lambda: f64,
    physics: &PhysicsConstants,
) -> Result<LossGraph> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Contract(format!("lambda {lambda} outside [0, 1]")));
    }
    let (x_hat, net, rendered) = single_prediction(tape, params, &sample.y, physics)?;
    let recon = reconstruction_term(tape, x_hat, &sample.y, rendered)?;
    let loss = hybrid_term(tape, x_hat, recon, &sample.x, lambda)?;
    Ok(LossGraph { loss, net })
}

/// Reconstruction-only (PINN) loss of one observation.
pub fn loss_unlabeled(
    tape: &mut Tape,
    params: &MlpParams,
    y: &SensorImage,
    physics: &PhysicsConstants,
) -> Result<LossGraph> {
    let (x_hat, net, rendered) = single_prediction(tape, params, y, physics)?;
    let loss = reconstruction_term(tape, x_hat, y, rendered)?;
    Ok(LossGraph { loss, net })
}

/// Mean per-sample loss over a mixed mini-batch.
///
/// Supervised items use the hybrid loss; unsupervised items contribute
/// `λ·recon`. Forward renders run in parallel; tape construction and the
/// final sum follow sample order, so the result is deterministic.
pub fn batch_loss(
    tape: &mut Tape,
    net: &BoundMlp,
    input_dim: usize,
    items: &[BatchItem<'_>],
    lambda: f64,
    physics: &PhysicsConstants,
) -> Result<Var> {
    if items.is_empty() {
        return Err(Error::Contract("empty batch".into()));
    }
    let images: Vec<&SensorImage> = items.iter().map(|it| it.y).collect();
    let input = input_batch(tape, &images, input_dim)?;
    let x_hat = forward(tape, net, input)?;
    let predictions: Vec<[f64; 3]> = (0..items.len())
        .map(|j| column_values(tape, x_hat, j))
        .collect();
    let rendered = predictions
        .par_iter()
        .map(|&x| render_prediction(x, physics))
        .collect::<Result<Vec<_>>>()?;

    let mut total: Option<Var> = None;
    for (j, (item, rj)) in items.iter().zip(rendered).enumerate() {
        let col = tape.column(x_hat, j)?;
        let recon = reconstruction_term(tape, col, item.y, rj)?;
        let term = match item.target {
            Some(x) => hybrid_term(tape, col, recon, x, lambda)?,
            None => tape.scale(recon, lambda),
        };
        total = Some(match total {
            None => term,
            Some(acc) => tape.add(acc, term)?,
        });
    }
    let total = total.expect("non-empty batch");
    Ok(tape.scale(total, 1.0 / items.len() as f64))
}

//! Dense ReLU inverter `ψ(y, θ)`: flattened image to orbital elements.
//!
//! Hidden layers are affine + ReLU; the last layer is affine followed by a
//! sigmoid head scaled to `(e_max, 2π, 2π)`, so every output is a valid set
//! of elements.

use std::f64::consts::TAU;

use rand_distr::{Distribution, StandardNormal};

use crate::autodiff::{Tape, Var};
use crate::datagen::rng::{stream, Namespace};
use crate::error::{Error, Result};
use crate::orbit::SensorImage;

pub const OUTPUT_DIM: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MlpArchitecture {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
}

impl MlpArchitecture {
    pub fn new(input_dim: usize, hidden_dims: Vec<usize>) -> Self {
        MlpArchitecture {
            input_dim,
            hidden_dims,
            output_dim: OUTPUT_DIM,
        }
    }

    /// 64×64 input, five hidden layers of 784 units.
    pub fn paper_default() -> Self {
        Self::new(64 * 64, vec![784; 5])
    }

    /// `(out, in)` for every affine layer.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 2);
        dims.push(self.input_dim);
        dims.extend(&self.hidden_dims);
        dims.push(self.output_dim);
        dims.windows(2).map(|w| (w[1], w[0])).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layer_shapes().iter().map(|(o, i)| o * i + o).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dims.contains(&0) {
            return Err(Error::Config("layer widths must be non-zero".into()));
        }
        if self.output_dim != OUTPUT_DIM {
            return Err(Error::Config(format!(
                "output dimension must be {OUTPUT_DIM}, got {}",
                self.output_dim
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// Row-major `out × in`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub arch: MlpArchitecture,
    pub layers: Vec<Layer>,
    /// Output scale of the sigmoid heads: `(e_max, 2π, 2π)`.
    pub head_ranges: [f64; 3],
}

pub fn head_ranges(e_max: f64) -> [f64; 3] {
    [e_max, TAU, TAU]
}

/// He-normal weights (`std = √(2/fan_in)`) and zero biases.
pub fn init(arch: &MlpArchitecture, seed: u64, e_max: f64) -> Result<MlpParams> {
    arch.validate()?;
    let layers = arch
        .layer_shapes()
        .into_iter()
        .enumerate()
        .map(|(k, (out, inp))| {
            let std = (2.0 / inp as f64).sqrt();
            let mut rng = stream(seed, Namespace::Init, k as u64);
            let weights = (0..out * inp)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    std * z
                })
                .collect();
            Layer {
                weights,
                biases: vec![0.0; out],
            }
        })
        .collect();
    Ok(MlpParams {
        arch: arch.clone(),
        layers,
        head_ranges: head_ranges(e_max),
    })
}

impl MlpParams {
    /// All-zero network: predicts the centre of every head range.
    pub fn zeros(arch: &MlpArchitecture, e_max: f64) -> Self {
        let layers = arch
            .layer_shapes()
            .into_iter()
            .map(|(o, i)| Layer {
                weights: vec![0.0; o * i],
                biases: vec![0.0; o],
            })
            .collect();
        MlpParams {
            arch: arch.clone(),
            layers,
            head_ranges: head_ranges(e_max),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Parameter tensors in checkpoint order: `w0, b0, w1, b1, ...`.
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.biases.as_slice()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weights, &mut l.biases])
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Check that layer shapes chain per the architecture.
    pub fn validate(&self) -> Result<()> {
        let shapes = self.arch.layer_shapes();
        if shapes.len() != self.layers.len() {
            return Err(Error::Architecture(format!(
                "{} layers for an architecture with {}",
                self.layers.len(),
                shapes.len()
            )));
        }
        for (k, ((o, i), l)) in shapes.iter().zip(&self.layers).enumerate() {
            if l.weights.len() != o * i || l.biases.len() != *o {
                return Err(Error::Architecture(format!(
                    "layer {k}: expected {o}x{i} weights and {o} biases"
                )));
            }
        }
        Ok(())
    }

    /// Register the parameters on a tape, as trainable leaves or constants.
    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> Result<BoundMlp> {
        let layers = self
            .arch
            .layer_shapes()
            .into_iter()
            .zip(&self.layers)
            .map(|((o, i), l)| {
                let (w, b) = if trainable {
                    (
                        tape.param(o, i, l.weights.clone())?,
                        tape.param(o, 1, l.biases.clone())?,
                    )
                } else {
                    (
                        tape.constant(o, i, l.weights.clone())?,
                        tape.constant(o, 1, l.biases.clone())?,
                    )
                };
                Ok((w, b))
            })
            .collect::<Result<_>>()?;
        Ok(BoundMlp {
            layers,
            head_ranges: self.head_ranges,
            input_dim: self.arch.input_dim,
        })
    }
}

/// Network parameters living on a particular tape.
#[derive(Clone, Debug)]
pub struct BoundMlp {
    pub layers: Vec<(Var, Var)>,
    pub head_ranges: [f64; 3],
    input_dim: usize,
}

impl BoundMlp {
    /// Tape variables in checkpoint order.
    pub fn vars(&self) -> Vec<Var> {
        self.layers.iter().flat_map(|&(w, b)| [w, b]).collect()
    }

    /// Gradients of the last backward pass, zeros for unreached tensors.
    pub fn grads(&self, tape: &Tape) -> Vec<Vec<f64>> {
        self.vars().into_iter().map(|v| tape.grad_or_zeros(v)).collect()
    }
}

/// Pack images column-wise into a `pixels × batch` matrix.
pub fn images_to_columns(images: &[&SensorImage]) -> Vec<f64> {
    let batch = images.len();
    let n = images.first().map_or(0, |im| im.len());
    let mut out = vec![0.0; n * batch];
    for (j, im) in images.iter().enumerate() {
        for (p, &v) in im.pixels().iter().enumerate() {
            out[p * batch + j] = v;
        }
    }
    out
}

/// Push a batch of images through the network. `input` is `input_dim × B`;
/// the result is the `3 × B` matrix of decoded elements.
pub fn forward(tape: &mut Tape, net: &BoundMlp, input: Var) -> Result<Var> {
    let (rows, _) = tape.shape(input);
    if rows != net.input_dim {
        return Err(Error::Contract(format!(
            "input has {rows} pixels, network expects {}",
            net.input_dim
        )));
    }
    let mut h = input;
    let last = net.layers.len() - 1;
    for (k, &(w, b)) in net.layers.iter().enumerate() {
        h = tape.affine(w, h, b)?;
        if k < last {
            h = tape.relu(h);
        }
    }
    let s = tape.sigmoid(h);
    tape.scale_rows(s, &net.head_ranges)
}

/// Add a batch of images to the tape as a constant input matrix.
pub fn input_batch(tape: &mut Tape, images: &[&SensorImage], input_dim: usize) -> Result<Var> {
    if let Some(bad) = images.iter().find(|im| im.len() != input_dim) {
        return Err(Error::Contract(format!(
            "image has {} pixels, network expects {input_dim}",
            bad.len()
        )));
    }
    tape.constant(input_dim, images.len(), images_to_columns(images))
}

/// `ψ(y, θ)` for one image, with trainable parameters bound on `tape`.
pub fn forward_image(
    tape: &mut Tape,
    params: &MlpParams,
    y: &SensorImage,
) -> Result<(Var, BoundMlp)> {
    let net = params.bind(tape, true)?;
    let input = input_batch(tape, &[y], params.arch.input_dim)?;
    let out = forward(tape, &net, input)?;
    Ok((out, net))
}

/// Inference without gradient tracking.
pub fn predict(params: &MlpParams, images: &[&SensorImage]) -> Result<Vec<[f64; 3]>> {
    if images.is_empty() {
        return Ok(Vec::new());
    }
    let mut tape = Tape::new();
    let net = params.bind(&mut tape, false)?;
    let input = input_batch(&mut tape, images, params.arch.input_dim)?;
    let out = forward(&mut tape, &net, input)?;
    let data = tape.value(out);
    let b = images.len();
    Ok((0..b)
        .map(|j| [data[j], data[b + j], data[2 * b + j]])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::OrbitalElements;
    use std::f64::consts::PI;

    fn toy_arch() -> MlpArchitecture {
        MlpArchitecture::new(16, vec![8, 4])
    }

    fn image(seed: u64) -> SensorImage {
        let px = (0..16)
            .map(|k| ((k as f64 + 1.0) * (seed as f64 + 0.3)).sin().abs())
            .collect();
        SensorImage::from_pixels(4, 4, px).unwrap()
    }

    #[test]
    fn paper_default_parameter_count() {
        let arch = MlpArchitecture::paper_default();
        let expected = 4096 * 784 + 784 + 4 * (784 * 784 + 784) + 784 * 3 + 3;
        assert_eq!(arch.param_count(), expected);
        assert_eq!(MlpParams::zeros(&arch, 0.95).param_count(), expected);
    }

    #[test]
    fn init_is_deterministic() {
        let a = init(&toy_arch(), 11, 0.95).unwrap();
        let b = init(&toy_arch(), 11, 0.95).unwrap();
        assert_eq!(a, b);
        let c = init(&toy_arch(), 12, 0.95).unwrap();
        assert_ne!(a, c);
        assert!(a.layers.iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn he_normal_standard_deviation() {
        let arch = MlpArchitecture::new(512, vec![256, 256]);
        let p = init(&arch, 3, 0.95).unwrap();
        for ((_, fan_in), layer) in arch.layer_shapes().iter().zip(&p.layers) {
            if *fan_in < 256 || layer.weights.len() < 1000 {
                continue;
            }
            let n = layer.weights.len() as f64;
            let mean = layer.weights.iter().sum::<f64>() / n;
            let var = layer.weights.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let target = (2.0 / *fan_in as f64).sqrt();
            assert!((var.sqrt() / target - 1.0).abs() < 0.1);
        }
    }

    #[test]
    fn degenerate_architecture_has_one_layer() {
        let arch = MlpArchitecture::new(16, vec![]);
        assert_eq!(arch.layer_shapes(), vec![(3, 16)]);
        let p = init(&arch, 0, 0.95).unwrap();
        assert_eq!(p.layers.len(), 1);
        assert_eq!(p.layers[0].weights.len(), 48);
        let out = predict(&p, &[&image(1)]).unwrap();
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn zero_params_predict_range_centres() {
        let p = MlpParams::zeros(&toy_arch(), 0.95);
        for s in 0..3 {
            let x = predict(&p, &[&image(s)]).unwrap()[0];
            assert_eq!(x, [0.475, PI, PI]);
        }
    }

    #[test]
    fn dimension_mismatch_is_a_contract_error() {
        let p = init(&toy_arch(), 0, 0.95).unwrap();
        let wrong = SensorImage::zeros(5, 5);
        let mut tape = Tape::new();
        assert!(matches!(
            forward_image(&mut tape, &p, &wrong),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn batched_and_single_predictions_agree() {
        let p = init(&toy_arch(), 5, 0.95).unwrap();
        let imgs: Vec<SensorImage> = (0..5).map(image).collect();
        let refs: Vec<&SensorImage> = imgs.iter().collect();
        let batch = predict(&p, &refs).unwrap();
        for (im, b) in imgs.iter().zip(&batch) {
            let single = predict(&p, &[im]).unwrap()[0];
            for k in 0..3 {
                assert!((single[k] - b[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn outputs_are_valid_elements() {
        let arch = MlpArchitecture::new(16, vec![8]);
        for seed in 0..20 {
            let mut p = init(&arch, seed, 0.95).unwrap();
            for l in &mut p.layers {
                for w in &mut l.weights {
                    *w *= 10.0;
                }
            }
            let x = predict(&p, &[&image(seed)]).unwrap()[0];
            assert!(x[0] >= 0.0 && x[0] <= 0.95);
            assert!(x[1] >= 0.0 && x[1] <= TAU && x[2] >= 0.0 && x[2] <= TAU);
            OrbitalElements::from_array(x).unwrap();
        }
    }
}

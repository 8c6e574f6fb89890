//! Finite-difference oracles shared by the integration suites.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use simpinn::autodiff::Tape;
use simpinn::mlp::{init, MlpArchitecture, MlpParams};
use simpinn::orbit::{render, render_jacobian, solve_kepler, OrbitalElements, PhysicsConstants};
use simpinn::trainer::{loss_labeled, loss_unlabeled, LabeledSample};
use simpinn::orbit::SensorImage;

pub const FD_STEP: f64 = 1e-6;

pub fn rel_l2(analytic: &[f64], reference: &[f64]) -> f64 {
    let num: f64 = analytic
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let den: f64 = reference.iter().map(|b| b * b).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// 16×16 images, hidden [32, 16].
pub fn toy_setup() -> (PhysicsConstants, MlpParams) {
    let physics = PhysicsConstants {
        width: 16,
        height: 16,
        n_samples: 64,
        ..PhysicsConstants::default()
    };
    let arch = MlpArchitecture::new(physics.pixel_count(), vec![32, 16]);
    let params = init(&arch, 11, physics.e_max).unwrap();
    (physics, params)
}

#[derive(Clone, Copy, Debug)]
pub enum LossKind {
    Labeled { lambda: f64 },
    Unlabeled,
}

fn loss_value(
    params: &MlpParams,
    kind: LossKind,
    sample: &LabeledSample,
    y_obs: &SensorImage,
    physics: &PhysicsConstants,
) -> (f64, Vec<Vec<f64>>) {
    let mut tape = Tape::new();
    let graph = match kind {
        LossKind::Labeled { lambda } => loss_labeled(&mut tape, params, sample, lambda, physics),
        LossKind::Unlabeled => loss_unlabeled(&mut tape, params, y_obs, physics),
    }
    .unwrap();
    let v = tape.scalar(graph.loss);
    tape.backward(graph.loss).unwrap();
    (v, graph.net.grads(&tape))
}

/// Relative L2 error between backprop gradients and central differences over
/// every network parameter.
pub fn loss_gradient_error(
    params: &MlpParams,
    kind: LossKind,
    sample: &LabeledSample,
    y_obs: &SensorImage,
    physics: &PhysicsConstants,
) -> f64 {
    let (_, grads) = loss_value(params, kind, sample, y_obs, physics);
    let analytic: Vec<f64> = grads.concat();
    let mut fd = Vec::with_capacity(analytic.len());
    let mut p = params.clone();
    let sizes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
    for (t, &n) in sizes.iter().enumerate() {
        for k in 0..n {
            let orig = p.tensors()[t][k];
            p.tensors_mut()[t][k] = orig + FD_STEP;
            let up = loss_value(&p, kind, sample, y_obs, physics).0;
            p.tensors_mut()[t][k] = orig - FD_STEP;
            let down = loss_value(&p, kind, sample, y_obs, physics).0;
            p.tensors_mut()[t][k] = orig;
            fd.push((up - down) / (2.0 * FD_STEP));
        }
    }
    rel_l2(&analytic, &fd)
}

/// Worst per-column relative L2 error of `render_jacobian` against central
/// differences of `render`.
pub fn jacobian_error(x: &OrbitalElements, physics: &PhysicsConstants) -> f64 {
    let jac = render_jacobian(x, physics).unwrap();
    let base = x.as_array();
    (0..3)
        .map(|k| {
            let mut up = base;
            let mut down = base;
            up[k] += FD_STEP;
            down[k] -= FD_STEP;
            let ru = render(&OrbitalElements::from_array(up).unwrap(), physics).unwrap();
            let rd = render(&OrbitalElements::from_array(down).unwrap(), physics).unwrap();
            let fd: Vec<f64> = ru
                .pixels()
                .iter()
                .zip(rd.pixels())
                .map(|(a, b)| (a - b) / (up[k] - down[k]))
                .collect();
            rel_l2(&jac.column(k), &fd)
        })
        .fold(0.0, f64::max)
}

/// Elements drawn away from the domain edges so central differences stay
/// inside it.
pub fn random_elements(n: usize, seed: u64, e_max: f64) -> Vec<OrbitalElements> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let e = rng.gen_range(0.01..e_max - 0.01);
            let i = rng.gen_range(0.0..TAU);
            let w = rng.gen_range(0.0..TAU);
            OrbitalElements::new(e, i, w).unwrap()
        })
        .collect()
}

/// Worst residual and worst partial-derivative error of the Kepler solver
/// over `M ∈ {0, 0.1, …} ⊂ [0, 2π]`, `e ∈ {0, 0.05, …, 0.95}`.
pub fn kepler_grid_errors() -> (f64, f64) {
    let h = FD_STEP;
    let e_grid: Vec<f64> = (0..20).map(|k| k as f64 / 20.0).collect();
    let m_grid: Vec<f64> = (0..).map(|k| k as f64 / 10.0).take_while(|m| *m <= TAU).collect();
    let ea = |m: f64, e: f64| solve_kepler(m, e).unwrap().eccentric_anomaly;
    // differences of E across the 0/2π seam are unwrapped
    let unwrap = |d: f64| {
        if d > PI {
            d - TAU
        } else if d < -PI {
            d + TAU
        } else {
            d
        }
    };
    let mut worst_res: f64 = 0.0;
    let mut worst_partial: f64 = 0.0;
    for &e in &e_grid {
        for &m in &m_grid {
            let s = solve_kepler(m, e).unwrap();
            let big_e = s.eccentric_anomaly;
            let res = (big_e - e * big_e.sin() - m.rem_euclid(TAU)).abs();
            worst_res = worst_res.max(res);

            let fd_m = unwrap(ea(m + h, e) - ea(m - h, e)) / (2.0 * h);
            // one-sided second-order stencils at the ends of the e range
            let fd_e = if e - h < 0.0 {
                unwrap(4.0 * unwrap(ea(m, e + h) - big_e) - unwrap(ea(m, e + 2.0 * h) - big_e)) / (2.0 * h)
            } else if e + h > 0.95 {
                unwrap(4.0 * unwrap(big_e - ea(m, e - h)) - unwrap(big_e - ea(m, e - 2.0 * h))) / (2.0 * h)
            } else {
                unwrap(ea(m, e + h) - ea(m, e - h)) / (2.0 * h)
            };
            worst_partial = worst_partial
                .max((s.de_dm - fd_m).abs())
                .max((s.de_de - fd_e).abs());
        }
    }
    (worst_res, worst_partial)
}

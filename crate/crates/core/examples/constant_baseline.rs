//! Score an inverter that ignores its input. Its per-parameter errors are
//! the variances of the uniform prior the elements are drawn from.
//!
//!     cargo run --release --example constant_baseline

use std::f64::consts::{PI, TAU};

use simpinn::datagen::make_test;
use simpinn::orbit::{PhysicsConstants, SensorImage};
use simpinn::trainer::{evaluate, Inverter};

struct PriorMean {
    e_max: f64,
}

impl Inverter for PriorMean {
    fn invert(&self, images: &[&SensorImage]) -> simpinn::Result<Vec<[f64; 3]>> {
        Ok(vec![[self.e_max / 2.0, PI, PI]; images.len()])
    }
}

fn main() -> simpinn::Result<()> {
    let physics = PhysicsConstants { width: 16, height: 16, n_samples: 32, ..PhysicsConstants::default() };
    let test = make_test(0, 5000, &physics, 1e-4)?;
    let m = evaluate(&PriorMean { e_max: physics.e_max }, &test, &physics)?;
    println!("measured     e {:.5}  i {:.4}  omega {:.4}", m.mse_e, m.mse_i, m.mse_omega);
    println!(
        "prior var.   e {:.5}  i {:.4}  omega {:.4}",
        physics.e_max * physics.e_max / 12.0,
        TAU * TAU / 12.0,
        TAU * TAU / 12.0
    );
    println!("reconstruction MSE of the constant guess: {:.3e}", m.mse_reconstruction);
    Ok(())
}

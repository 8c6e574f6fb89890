//! Cross-validate the hybrid-loss weight λ on a hold-out split of the
//! simulated pool.
//!
//!     cargo run --release --example lambda_cv

use simpinn::datagen::{default_noise_sigma, make_labeled, make_observed};
use simpinn::mlp::MlpArchitecture;
use simpinn::orbit::PhysicsConstants;
use simpinn::trainer::{cross_validate_lambda, TrainConfig};

fn main() -> simpinn::Result<()> {
    let physics = PhysicsConstants { width: 16, height: 16, n_samples: 48, ..PhysicsConstants::default() };
    let noise = default_noise_sigma(&physics)?;
    let base = TrainConfig {
        n_observed: 100,
        n_simulated: 200,
        epochs: 15,
        noise_sigma: Some(noise),
        physics: physics.clone(),
        arch: MlpArchitecture::new(physics.pixel_count(), vec![32, 32]),
        ..TrainConfig::default()
    };
    let labeled = make_labeled(1, base.n_simulated, &physics)?;
    let observed = make_observed(1, base.n_observed, &physics, noise)?;
    let (best, rows) = cross_validate_lambda(&base, &labeled, &observed, &[0.1, 0.5, 0.9])?;
    for r in &rows {
        println!(
            "lambda {:.1}: hold-out parameter MSE {:.4}, reconstruction {:.3e}",
            r.lambda,
            r.metrics.total_param_mse(),
            r.metrics.mse_reconstruction
        );
    }
    println!("chosen lambda = {best}");
    Ok(())
}

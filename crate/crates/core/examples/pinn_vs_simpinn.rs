//! Train the same network with observations only (PINN) and with added
//! simulated pairs (SimPINN), then compare test errors.
//!
//!     cargo run --release --example pinn_vs_simpinn -- [n_observed] [n_simulated] [epochs]

use simpinn::datagen::{default_noise_sigma, make_labeled, make_observed, make_test};
use simpinn::mlp::MlpArchitecture;
use simpinn::orbit::PhysicsConstants;
use simpinn::trainer::{evaluate, train, TrainConfig};

fn main() -> simpinn::Result<()> {
    let arg = |k: usize, default: usize| {
        std::env::args().nth(k).and_then(|s| s.parse().ok()).unwrap_or(default)
    };
    let (n_o, n_s, epochs) = (arg(1, 300), arg(2, 300), arg(3, 40));
    let physics = PhysicsConstants { width: 24, height: 24, n_samples: 64, ..PhysicsConstants::default() };
    let noise = default_noise_sigma(&physics)?;
    let test = make_test(0, 200, &physics, noise)?;
    let observed = make_observed(0, n_o, &physics, noise)?;
    let simulated = make_labeled(0, n_s, &physics)?;

    for (label, n_sim) in [("PINN", 0), ("SimPINN", n_s)] {
        let cfg = TrainConfig {
            n_observed: n_o,
            n_simulated: n_sim,
            epochs,
            noise_sigma: Some(noise),
            physics: physics.clone(),
            arch: MlpArchitecture::new(physics.pixel_count(), vec![64, 64]),
            ..TrainConfig::default()
        };
        let (params, fit) = train(&cfg, &simulated[..n_sim], &observed)?;
        let m = evaluate(&params, &test, &physics)?;
        println!(
            "{label:<8} N_o={n_o} N_s={n_sim}: final loss {:.3e}; test MSE e {:.4} i {:.4} omega {:.4} recon {:.3e}",
            fit.loss_history.last().copied().unwrap_or(f64::NAN),
            m.mse_e,
            m.mse_i,
            m.mse_omega,
            m.mse_reconstruction
        );
    }
    Ok(())
}

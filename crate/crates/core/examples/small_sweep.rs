//! Run a miniature N_o × N_s sweep and print its per-metric markdown tables.
//!
//!     cargo run --release --example small_sweep -- [output_dir]

use simpinn::bench::{run_sweep, ExperimentConfig, SweepOutputs};

fn main() -> simpinn::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "simpinn-small-sweep".into());
    let overrides: Vec<(String, String)> = [
        ("width", "16"),
        ("height", "16"),
        ("n_samples", "48"),
        ("hidden_dims", "32, 32"),
        ("epochs", "10"),
        ("n_test", "100"),
        ("n_observed_grid", "0, 100"),
        ("n_simulated_grid", "0, 100, 300"),
        ("seeds", "0, 1"),
    ]
    .iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();
    let cfg = ExperimentConfig::resolve(None, &overrides)?;
    let outputs = SweepOutputs::new(std::path::Path::new(&out));
    let report = run_sweep(&cfg, &outputs)?;
    println!("{}", report.markdown_all());
    println!("{} cells; CSV at {}", report.rows.len(), outputs.csv.display());
    Ok(())
}

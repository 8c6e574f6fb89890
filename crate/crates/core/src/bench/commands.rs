//! The operations behind each `simpinn` subcommand.
//!
//! Every command writes the effective configuration as `config.cfg` next to
//! its outputs and returns a short human-readable summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::sweep::{method_label, resolve_noise, run_sweep, SweepOutputs};
use crate::datagen::{
    load_checkpoint_for, load_dataset, make_labeled, make_observed, make_test, save_checkpoint,
    save_dataset, side_by_side, Dataset,
};
use crate::error::{Error, Result};
use crate::mlp::predict;
use crate::orbit::{render, OrbitalElements, PhysicsConstants};
use crate::trainer::{
    cross_validate_lambda, evaluate, train_with_state, ObservedSample, RunMetrics, TrainConfig,
};

/// Explicit file locations; anything left `None` falls back to the paths
/// derived from the configuration.
#[derive(Clone, Debug, Default)]
pub struct Paths {
    pub labeled: Option<PathBuf>,
    pub observed: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn physics_fingerprint(p: &PhysicsConstants) -> String {
    format!(
        "a={} mu={} omega_earth={} t_span={} n_samples={} sigma_splat={} width={} height={} intensity_law={} e_max={}",
        p.a,
        p.mu,
        p.omega_earth,
        p.t_span,
        p.n_samples,
        p.sigma_splat,
        p.width,
        p.height,
        p.intensity_law.as_str(),
        p.e_max
    )
}

fn content_name(pool: &str, seed: u64, n: usize, noise: Option<f64>, physics: &PhysicsConstants) -> String {
    let mut h = Sha256::new();
    h.update(format!(
        "simpinn-dataset-v1\npool={pool}\nseed={seed}\nn={n}\nnoise={}\n{}\n",
        noise.map_or("none".into(), |s| format!("{:016x}", s.to_bits())),
        physics_fingerprint(physics)
    ));
    let digest = h.finalize();
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    format!("{pool}-{hex}.spnd")
}

/// The three dataset files `gen` writes for a configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetPaths {
    pub labeled: PathBuf,
    pub observed: PathBuf,
    pub test: PathBuf,
}

pub fn dataset_paths(cfg: &ExperimentConfig, noise: f64) -> DatasetPaths {
    let dir = cfg.output_dir.join("data");
    let t = &cfg.train;
    DatasetPaths {
        labeled: dir.join(content_name("labeled", t.seed, t.n_simulated, None, &t.physics)),
        observed: dir.join(content_name("observed", t.seed, t.n_observed, Some(noise), &t.physics)),
        test: dir.join(content_name("test", t.seed, cfg.n_test, Some(noise), &t.physics)),
    }
}

/// Directory of a single training run.
pub fn run_dir(cfg: &ExperimentConfig) -> PathBuf {
    let t = &cfg.train;
    cfg.output_dir.join("runs").join(format!(
        "{}_no{}_ns{}_seed{}",
        method_label(t.n_simulated),
        t.n_observed,
        t.n_simulated,
        t.seed
    ))
}

fn observed_dataset(width: usize, height: usize, pool: Vec<ObservedSample>) -> Dataset {
    Dataset {
        observed: pool,
        ..Dataset::empty(width, height)
    }
}

/// Write the labeled, observed and test pools; files already present and
/// intact are left alone.
pub fn cmd_gen(cfg: &ExperimentConfig) -> Result<String> {
    cfg.validate()?;
    let t = &cfg.train;
    let p = &t.physics;
    let noise = resolve_noise(cfg)?;
    let paths = dataset_paths(cfg, noise);
    let dir = cfg.output_dir.join("data");
    create_dir(&dir)?;
    cfg.write_dump(&dir)?;

    let mut out = String::new();
    let jobs: [(&Path, &str); 3] = [
        (&paths.labeled, "labeled"),
        (&paths.observed, "observed"),
        (&paths.test, "test"),
    ];
    for (path, pool) in jobs {
        if path.exists() && load_dataset(path).is_ok() {
            writeln!(out, "{pool}: {} up to date", path.display()).unwrap();
            continue;
        }
        let d = match pool {
            "labeled" => Dataset {
                labeled: make_labeled(t.seed, t.n_simulated, p)?,
                ..Dataset::empty(p.width, p.height)
            },
            "observed" => observed_dataset(p.width, p.height, make_observed(t.seed, t.n_observed, p, noise)?),
            _ => observed_dataset(p.width, p.height, make_test(t.seed, cfg.n_test, p, noise)?),
        };
        save_dataset(path, &d)?;
        writeln!(out, "{pool}: wrote {}", path.display()).unwrap();
    }
    Ok(out)
}

fn load_pools(cfg: &ExperimentConfig, paths: &Paths) -> Result<(Dataset, Dataset, Dataset)> {
    let noise = resolve_noise(cfg)?;
    let derived = dataset_paths(cfg, noise);
    let pick = |p: &Option<PathBuf>, d: PathBuf| p.clone().unwrap_or(d);
    let labeled = load_dataset(pick(&paths.labeled, derived.labeled))?;
    let observed = load_dataset(pick(&paths.observed, derived.observed))?;
    let test = load_dataset(pick(&paths.test, derived.test))?;
    let p = &cfg.train.physics;
    for d in [&labeled, &observed, &test] {
        if (d.width, d.height) != (p.width, p.height) {
            return Err(Error::Config(format!(
                "dataset images are {}x{}, config expects {}x{}",
                d.width, d.height, p.width, p.height
            )));
        }
    }
    Ok((labeled, observed, test))
}

fn metrics_csv(cfg: &TrainConfig, m: &RunMetrics) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "method",
        "n_observed",
        "n_simulated",
        "seed",
        "lambda",
        "epochs",
        "mse_e",
        "mse_i",
        "mse_omega",
        "mse_param_total",
        "mse_reconstruction",
        "final_loss",
    ])?;
    w.write_record([
        method_label(cfg.n_simulated).to_string(),
        cfg.n_observed.to_string(),
        cfg.n_simulated.to_string(),
        cfg.seed.to_string(),
        cfg.lambda.to_string(),
        cfg.epochs.to_string(),
        m.mse_e.to_string(),
        m.mse_i.to_string(),
        m.mse_omega.to_string(),
        m.total_param_mse().to_string(),
        m.mse_reconstruction.to_string(),
        m.loss_history.last().map_or(String::new(), f64::to_string),
    ])?;
    let bytes = w.into_inner().map_err(|e| Error::Numeric(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn summary(label: &str, m: &RunMetrics) -> String {
    format!(
        "{label}\n  eccentricity      {:.6e}\n  inclination       {:.6e}\n  arg. periapsis    {:.6e}\n  reconstruction    {:.6e}\n",
        m.mse_e, m.mse_i, m.mse_omega, m.mse_reconstruction
    )
}

/// Train on the generated pools, then write the checkpoint and test metrics.
pub fn cmd_train(cfg: &ExperimentConfig, paths: &Paths) -> Result<String> {
    cfg.validate()?;
    let t = &cfg.train;
    let (labeled, observed, test) = load_pools(cfg, paths)?;
    if labeled.labeled.len() != t.n_simulated || observed.observed.len() != t.n_observed {
        return Err(Error::Config(format!(
            "datasets hold {} simulated and {} observed samples, config asks for {} and {}",
            labeled.labeled.len(),
            observed.observed.len(),
            t.n_simulated,
            t.n_observed
        )));
    }
    let outcome = train_with_state(t, &labeled.labeled, &observed.observed)?;
    let mut metrics = evaluate(&outcome.params, &test.observed, &t.physics)?;
    metrics.loss_history = outcome.metrics.loss_history;

    let dir = run_dir(cfg);
    create_dir(&dir)?;
    cfg.write_dump(&dir)?;
    let ck = paths.checkpoint.clone().unwrap_or_else(|| dir.join("checkpoint.spnc"));
    save_checkpoint(&ck, &outcome.params, Some(&outcome.adam))?;
    write(&dir.join("metrics.csv"), &metrics_csv(t, &metrics)?)?;
    let mut loss = String::from("epoch,loss\n");
    for (k, l) in metrics.loss_history.iter().enumerate() {
        writeln!(loss, "{k},{l}").unwrap();
    }
    write(&dir.join("loss.csv"), &loss)?;
    Ok(format!(
        "{}checkpoint: {}\n",
        summary(
            &format!(
                "{} (N_o = {}, N_s = {}, seed {}) test errors:",
                method_label(t.n_simulated),
                t.n_observed,
                t.n_simulated,
                t.seed
            ),
            &metrics
        ),
        ck.display()
    ))
}

fn checkpoint_path(cfg: &ExperimentConfig, paths: &Paths) -> PathBuf {
    paths
        .checkpoint
        .clone()
        .unwrap_or_else(|| run_dir(cfg).join("checkpoint.spnc"))
}

fn test_set(cfg: &ExperimentConfig, paths: &Paths) -> Result<Dataset> {
    let path = match &paths.test {
        Some(p) => p.clone(),
        None => dataset_paths(cfg, resolve_noise(cfg)?).test,
    };
    let d = load_dataset(path)?;
    let p = &cfg.train.physics;
    if (d.width, d.height) != (p.width, p.height) {
        return Err(Error::Config(format!(
            "test images are {}x{}, config expects {}x{}",
            d.width, d.height, p.width, p.height
        )));
    }
    Ok(d)
}

/// Score a checkpoint on the test pool.
pub fn cmd_eval(cfg: &ExperimentConfig, paths: &Paths) -> Result<String> {
    cfg.validate()?;
    let ck_path = checkpoint_path(cfg, paths);
    let ck = load_checkpoint_for(&ck_path, &cfg.train.arch)?;
    let test = test_set(cfg, paths)?;
    let m = evaluate(&ck.params, &test.observed, &cfg.train.physics)?;
    let dir = cfg.output_dir.join("eval");
    create_dir(&dir)?;
    cfg.write_dump(&dir)?;
    write(&dir.join("metrics.csv"), &metrics_csv(&cfg.train, &m)?)?;
    Ok(summary(&format!("{} on {} test observations:", ck_path.display(), test.observed.len()), &m))
}

/// Side-by-side `observation | render(ψ(y))` images for the first
/// `render_count` test observations, plus per-sample errors.
pub fn cmd_render(cfg: &ExperimentConfig, paths: &Paths) -> Result<String> {
    cfg.validate()?;
    let k = cfg.render_count;
    let ck = load_checkpoint_for(checkpoint_path(cfg, paths), &cfg.train.arch)?;
    let test = test_set(cfg, paths)?;
    if k > test.observed.len() {
        return Err(Error::Config(format!(
            "render_count {k} exceeds the {} test observations",
            test.observed.len()
        )));
    }
    let dir = cfg.output_dir.join("gallery");
    create_dir(&dir)?;
    cfg.write_dump(&dir)?;
    let samples = &test.observed[..k];
    let images: Vec<_> = samples.iter().map(|s| &s.y).collect();
    let preds = predict(&ck.params, &images)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "index", "file", "e", "i", "omega", "e_hat", "i_hat", "omega_hat", "param_mse", "recon_mse",
    ])?;
    for (j, (s, x_hat)) in samples.iter().zip(&preds).enumerate() {
        let recon = render(&OrbitalElements::from_array(*x_hat)?, &cfg.train.physics)?;
        let file = format!("sample_{j:04}.pgm");
        side_by_side(&s.y, &recon, dir.join(&file))?;
        let x = s.x_hidden.as_array();
        let param = (0..3).map(|d| (x_hat[d] - x[d]).powi(2)).sum::<f64>() / 3.0;
        let pix = recon
            .pixels()
            .iter()
            .zip(s.y.pixels())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / recon.len() as f64;
        w.write_record([
            j.to_string(),
            file,
            x[0].to_string(),
            x[1].to_string(),
            x[2].to_string(),
            x_hat[0].to_string(),
            x_hat[1].to_string(),
            x_hat[2].to_string(),
            param.to_string(),
            pix.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Numeric(e.to_string()))?;
    write(&dir.join("errors.csv"), &String::from_utf8(bytes).expect("utf-8"))?;
    Ok(format!("wrote {k} gallery images to {}\n", dir.display()))
}

/// Run every sweep cell and write the CSV and markdown report.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<String> {
    let out = SweepOutputs::new(&cfg.output_dir.join("sweep"));
    let report = run_sweep(cfg, &out)?;
    let failed = report.rows.iter().filter(|r| r.outcome.is_err()).count();
    Ok(format!(
        "{}\n{} cells ({} failed)\nresults: {}\ntables: {}\n",
        report.markdown_all(),
        report.rows.len(),
        failed,
        out.csv.display(),
        out.markdown.display()
    ))
}

/// Choose λ on a hold-out split of freshly generated pools.
pub fn cmd_lambda_cv(cfg: &ExperimentConfig) -> Result<String> {
    cfg.validate()?;
    let t = &cfg.train;
    let noise = resolve_noise(cfg)?;
    let labeled = make_labeled(t.seed, t.n_simulated, &t.physics)?;
    let observed = make_observed(t.seed, t.n_observed, &t.physics, noise)?;
    let (best, rows) = cross_validate_lambda(t, &labeled, &observed, &cfg.lambda_grid)?;

    let dir = cfg.output_dir.join("lambda_cv");
    create_dir(&dir)?;
    cfg.write_dump(&dir)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["lambda", "mse_e", "mse_i", "mse_omega", "mse_param_total", "mse_reconstruction"])?;
    let mut table = String::from("| lambda | holdout parameter MSE | reconstruction MSE |\n|---|---|---|\n");
    for r in &rows {
        let m = &r.metrics;
        w.write_record([
            r.lambda.to_string(),
            m.mse_e.to_string(),
            m.mse_i.to_string(),
            m.mse_omega.to_string(),
            m.total_param_mse().to_string(),
            m.mse_reconstruction.to_string(),
        ])?;
        let mark = if r.lambda == best { " (chosen)" } else { "" };
        writeln!(
            table,
            "| {}{mark} | {:.6e} | {:.6e} |",
            r.lambda,
            m.total_param_mse(),
            m.mse_reconstruction
        )
        .unwrap();
    }
    let bytes = w.into_inner().map_err(|e| Error::Numeric(e.to_string()))?;
    write(&dir.join("lambda_cv.csv"), &String::from_utf8(bytes).expect("utf-8"))?;
    Ok(format!("{table}\nchosen lambda = {best}\n"))
}

//! Line-based `key = value` experiment configuration.
//!
//! A file starts from a profile (`desk` unless it sets `profile`), then
//! applies its keys in order. CLI overrides are applied the same way on top.
//! [`ExperimentConfig::dump`] writes every key, so re-parsing a dump
//! reproduces the configuration exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mlp::MlpArchitecture;
use crate::orbit::PhysicsConstants;
use crate::trainer::TrainConfig;

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_ENV: &str = "SIMPINN_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// 32×32 images, three hidden layers of 128, grids up to 2000.
    Desk,
    /// 64×64 images, five hidden layers of 784, grids up to 40000. Hours of
    /// compute per cell.
    Paper,
}

impl Profile {
    pub fn as_str(self) -> &'static str {
        match self {
            Profile::Desk => "desk",
            Profile::Paper => "paper",
        }
    }
}

impl FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::Config(format!("unknown profile {other:?} (desk, paper)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub profile: Profile,
    pub train: TrainConfig,
    pub n_test: usize,
    pub n_observed_grid: Vec<usize>,
    pub n_simulated_grid: Vec<usize>,
    pub seeds: Vec<u64>,
    pub lambda_grid: Vec<f64>,
    /// Number of gallery images written by `render`.
    pub render_count: usize,
    /// Concurrent sweep cells; 0 lets the thread pool decide.
    pub workers: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::profile(Profile::Desk)
    }
}

/// Every accepted key, in dump order.
pub const KEYS: &[&str] = &[
    "profile",
    "lambda",
    "n_observed",
    "n_simulated",
    "epochs",
    "batch_size",
    "learning_rate",
    "adam_beta1",
    "adam_beta2",
    "adam_eps",
    "seed",
    "noise_sigma",
    "hidden_dims",
    "a",
    "mu",
    "omega_earth",
    "t_span",
    "n_samples",
    "sigma_splat",
    "width",
    "height",
    "intensity_law",
    "e_max",
    "n_test",
    "n_observed_grid",
    "n_simulated_grid",
    "seeds",
    "lambda_grid",
    "render_count",
    "workers",
    "output_dir",
];

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| scalar(key, s))
        .collect()
}

fn scalar<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    pub fn profile(profile: Profile) -> Self {
        match profile {
            Profile::Desk => {
                let physics = PhysicsConstants {
                    width: 32,
                    height: 32,
                    n_samples: 128,
                    ..PhysicsConstants::default()
                };
                ExperimentConfig {
                    profile,
                    train: TrainConfig {
                        n_observed: 2000,
                        n_simulated: 2000,
                        arch: MlpArchitecture::new(physics.pixel_count(), vec![128; 3]),
                        physics,
                        ..TrainConfig::default()
                    },
                    n_test: 500,
                    n_observed_grid: vec![0, 500, 2000],
                    n_simulated_grid: vec![0, 500, 2000],
                    seeds: vec![0, 1, 2],
                    lambda_grid: vec![0.1, 0.3, 0.5, 0.7, 0.9],
                    render_count: 8,
                    workers: 0,
                    output_dir: PathBuf::from("simpinn-out"),
                }
            }
            Profile::Paper => ExperimentConfig {
                profile,
                train: TrainConfig {
                    n_observed: 40_000,
                    n_simulated: 40_000,
                    ..TrainConfig::default()
                },
                n_test: 2000,
                n_observed_grid: vec![0, 1000, 10_000, 20_000, 40_000],
                n_simulated_grid: vec![0, 1000, 10_000, 20_000, 40_000],
                seeds: vec![0],
                lambda_grid: vec![0.1, 0.3, 0.5, 0.7, 0.9],
                render_count: 8,
                workers: 0,
                output_dir: PathBuf::from("simpinn-out"),
            },
        }
    }

    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let t = &mut self.train;
        let p = &mut t.physics;
        match key {
            "profile" => {
                let prof: Profile = value.trim().parse()?;
                if prof != self.profile {
                    return Err(Error::Config(
                        "profile must be the first setting (it resets every other key)".into(),
                    ));
                }
            }
            "lambda" => t.lambda = scalar(key, value)?,
            "n_observed" => t.n_observed = scalar(key, value)?,
            "n_simulated" => t.n_simulated = scalar(key, value)?,
            "epochs" => t.epochs = scalar(key, value)?,
            "batch_size" => t.batch_size = scalar(key, value)?,
            "learning_rate" => t.learning_rate = scalar(key, value)?,
            "adam_beta1" => t.adam_beta1 = scalar(key, value)?,
            "adam_beta2" => t.adam_beta2 = scalar(key, value)?,
            "adam_eps" => t.adam_eps = scalar(key, value)?,
            "seed" => t.seed = scalar(key, value)?,
            "noise_sigma" => {
                t.noise_sigma = match value.trim() {
                    "auto" => None,
                    v => Some(scalar(key, v)?),
                }
            }
            "hidden_dims" => t.arch.hidden_dims = list(key, value)?,
            "a" => p.a = scalar(key, value)?,
            "mu" => p.mu = scalar(key, value)?,
            "omega_earth" => p.omega_earth = scalar(key, value)?,
            "t_span" => p.t_span = scalar(key, value)?,
            "n_samples" => p.n_samples = scalar(key, value)?,
            "sigma_splat" => p.sigma_splat = scalar(key, value)?,
            "width" => p.width = scalar(key, value)?,
            "height" => p.height = scalar(key, value)?,
            "intensity_law" => p.intensity_law = value.trim().parse()?,
            "e_max" => p.e_max = scalar(key, value)?,
            "n_test" => self.n_test = scalar(key, value)?,
            "n_observed_grid" => self.n_observed_grid = list(key, value)?,
            "n_simulated_grid" => self.n_simulated_grid = list(key, value)?,
            "seeds" => self.seeds = list(key, value)?,
            "lambda_grid" => self.lambda_grid = list(key, value)?,
            "render_count" => self.render_count = scalar(key, value)?,
            "workers" => self.workers = scalar(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value.trim()),
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        // the network input always follows the image size
        self.train.arch.input_dim = self.train.physics.pixel_count();
        Ok(())
    }

    /// Parse config text. Blank lines and `#` comments are ignored; an
    /// optional `profile` line must come before any other key.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut cfg = match pairs.first() {
            Some((k, v)) if k == "profile" => Self::profile(v.parse()?),
            _ => Self::default(),
        };
        for (k, v) in &pairs {
            cfg.set(k, v)
                .map_err(|e| Error::Config(format!("{k}: {}", e.to_string().trim_start_matches("config error: "))))?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Every key in fixed order; floats use shortest round-trip formatting.
    pub fn dump(&self) -> String {
        let t = &self.train;
        let p = &t.physics;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
        kv("profile", self.profile.as_str().into());
        kv("lambda", t.lambda.to_string());
        kv("n_observed", t.n_observed.to_string());
        kv("n_simulated", t.n_simulated.to_string());
        kv("epochs", t.epochs.to_string());
        kv("batch_size", t.batch_size.to_string());
        kv("learning_rate", t.learning_rate.to_string());
        kv("adam_beta1", t.adam_beta1.to_string());
        kv("adam_beta2", t.adam_beta2.to_string());
        kv("adam_eps", t.adam_eps.to_string());
        kv("seed", t.seed.to_string());
        kv(
            "noise_sigma",
            t.noise_sigma.map_or("auto".into(), |s| s.to_string()),
        );
        kv("hidden_dims", join(&t.arch.hidden_dims));
        kv("a", p.a.to_string());
        kv("mu", p.mu.to_string());
        kv("omega_earth", p.omega_earth.to_string());
        kv("t_span", p.t_span.to_string());
        kv("n_samples", p.n_samples.to_string());
        kv("sigma_splat", p.sigma_splat.to_string());
        kv("width", p.width.to_string());
        kv("height", p.height.to_string());
        kv("intensity_law", p.intensity_law.as_str().into());
        kv("e_max", p.e_max.to_string());
        kv("n_test", self.n_test.to_string());
        kv("n_observed_grid", join(&self.n_observed_grid));
        kv("n_simulated_grid", join(&self.n_simulated_grid));
        kv("seeds", join(&self.seeds));
        kv("lambda_grid", join(&self.lambda_grid));
        kv("render_count", self.render_count.to_string());
        kv("workers", self.workers.to_string());
        kv("output_dir", self.output_dir.display().to_string());
        out
    }

    /// Write the effective configuration to `dir/config.cfg`.
    pub fn write_dump(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("config.cfg");
        fs::write(&path, self.dump()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// Apply `SIMPINN_OUT` if it is set and non-empty.
    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUTPUT_ENV).filter(|v| !v.is_empty()) {
            self.output_dir = PathBuf::from(dir);
        }
    }

    /// Build a config the way the CLI does: profile, then file, then the
    /// environment, then `overrides` in order.
    pub fn resolve(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let profile_flag = overrides.iter().rev().find(|(k, _)| k == "profile");
        let mut cfg = match file {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        if let Some((_, v)) = profile_flag {
            let prof: Profile = v.parse()?;
            if file.is_some() && prof != cfg.profile {
                return Err(Error::Config(
                    "--profile conflicts with the profile of the config file".into(),
                ));
            }
            if file.is_none() {
                cfg = Self::profile(prof);
            }
        }
        cfg.apply_env();
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Checks shared by every command.
    pub fn validate(&self) -> Result<()> {
        // sample counts are checked by the commands that train
        let probe = TrainConfig {
            n_observed: self.train.n_observed.max(1),
            ..self.train.clone()
        };
        probe.validate()?;
        if let Some(l) = self.lambda_grid.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
            return Err(Error::Config(format!("lambda_grid entry {l} outside (0, 1)")));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        Ok(())
    }

    /// Checks specific to the sweep.
    pub fn validate_sweep(&self) -> Result<()> {
        self.validate()?;
        if self.n_observed_grid.is_empty() || self.n_simulated_grid.is_empty() {
            return Err(Error::Config("sweep grids must not be empty".into()));
        }
        if self.n_test == 0 {
            return Err(Error::Config("n_test must be positive for a sweep".into()));
        }
        Ok(())
    }

    /// Training config for one sweep cell.
    pub fn cell(&self, n_observed: usize, n_simulated: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            n_observed,
            n_simulated,
            seed,
            ..self.train.clone()
        }
    }
}

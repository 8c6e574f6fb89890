//! The `N_o × N_s` grid: one independent, seeded training run per cell.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

use super::config::ExperimentConfig;
use crate::datagen::{default_noise_sigma, make_labeled, make_observed, make_test};
use crate::error::{Error, Result};
use crate::trainer::{evaluate, train, ObservedSample, RunMetrics};

/// `"pinn"` for the reconstruction-only row (`N_s = 0`), else `"simpinn"`.
pub fn method_label(n_simulated: usize) -> &'static str {
    if n_simulated == 0 {
        "pinn"
    } else {
        "simpinn"
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub n_observed: usize,
    pub n_simulated: usize,
    pub seed: u64,
}

impl CellKey {
    fn file_name(&self) -> String {
        format!("no{}_ns{}_seed{}.csv", self.n_observed, self.n_simulated, self.seed)
    }
}

/// Every cell of the grid in report order, minus the double-zero cell.
pub fn cells(cfg: &ExperimentConfig) -> Vec<CellKey> {
    let mut out = Vec::new();
    for &seed in &cfg.seeds {
        for &n_simulated in &cfg.n_simulated_grid {
            for &n_observed in &cfg.n_observed_grid {
                if n_observed + n_simulated > 0 {
                    out.push(CellKey {
                        n_observed,
                        n_simulated,
                        seed,
                    });
                }
            }
        }
    }
    out
}

/// Noise level used for every pool of a configuration.
pub fn resolve_noise(cfg: &ExperimentConfig) -> Result<f64> {
    match cfg.train.noise_sigma {
        Some(s) => Ok(s),
        None => default_noise_sigma(&cfg.train.physics),
    }
}

/// Held-out test observations for one seed.
pub fn test_pool(cfg: &ExperimentConfig, seed: u64, noise_sigma: f64) -> Result<Vec<ObservedSample>> {
    make_test(seed, cfg.n_test, &cfg.train.physics, noise_sigma)
}

/// Generate the cell's pools, train, and score on `test`.
pub fn run_cell(
    cfg: &ExperimentConfig,
    key: CellKey,
    test: &[ObservedSample],
    noise_sigma: f64,
) -> Result<RunMetrics> {
    let tc = cfg.cell(key.n_observed, key.n_simulated, key.seed);
    let labeled = make_labeled(key.seed, key.n_simulated, &tc.physics)?;
    let observed = make_observed(key.seed, key.n_observed, &tc.physics, noise_sigma)?;
    let (params, train_metrics) = train(&tc, &labeled, &observed)?;
    let mut m = evaluate(&params, test, &tc.physics)?;
    m.loss_history = train_metrics.loss_history;
    Ok(m)
}

/// One row of the sweep CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct CellRow {
    pub key: CellKey,
    pub outcome: std::result::Result<CellMetrics, String>,
}

/// The persisted subset of [`RunMetrics`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellMetrics {
    pub mse_e: f64,
    pub mse_i: f64,
    pub mse_omega: f64,
    pub mse_reconstruction: f64,
    pub final_loss: f64,
}

impl CellMetrics {
    fn from_run(m: &RunMetrics) -> Self {
        CellMetrics {
            mse_e: m.mse_e,
            mse_i: m.mse_i,
            mse_omega: m.mse_omega,
            mse_reconstruction: m.mse_reconstruction,
            final_loss: m.loss_history.last().copied().unwrap_or(f64::NAN),
        }
    }

    pub fn total_param_mse(&self) -> f64 {
        self.mse_e + self.mse_i + self.mse_omega
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Eccentricity,
    Inclination,
    ArgPeriapsis,
    Reconstruction,
    /// Sum of the three parameter errors; not tabulated.
    TotalParam,
}

impl Metric {
    pub const TABLES: [Metric; 4] = [
        Metric::Eccentricity,
        Metric::Inclination,
        Metric::ArgPeriapsis,
        Metric::Reconstruction,
    ];

    pub fn column(self) -> &'static str {
        match self {
            Metric::Eccentricity => "mse_e",
            Metric::Inclination => "mse_i",
            Metric::ArgPeriapsis => "mse_omega",
            Metric::Reconstruction => "mse_reconstruction",
            Metric::TotalParam => "mse_param_total",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Metric::Eccentricity => "Eccentricity MSE",
            Metric::Inclination => "Inclination MSE",
            Metric::ArgPeriapsis => "Argument of periapsis MSE",
            Metric::Reconstruction => "Reconstruction MSE (per pixel)",
            Metric::TotalParam => "Total parameter MSE",
        }
    }

    pub fn get(self, m: &CellMetrics) -> f64 {
        match self {
            Metric::Eccentricity => m.mse_e,
            Metric::Inclination => m.mse_i,
            Metric::ArgPeriapsis => m.mse_omega,
            Metric::Reconstruction => m.mse_reconstruction,
            Metric::TotalParam => m.total_param_mse(),
        }
    }
}

pub const CSV_HEADER: [&str; 12] = [
    "n_observed",
    "n_simulated",
    "seed",
    "method",
    "status",
    "mse_e",
    "mse_i",
    "mse_omega",
    "mse_param_total",
    "mse_reconstruction",
    "final_loss",
    "error",
];

impl CellRow {
    fn record(&self) -> Vec<String> {
        let k = &self.key;
        let mut r = vec![
            k.n_observed.to_string(),
            k.n_simulated.to_string(),
            k.seed.to_string(),
            method_label(k.n_simulated).to_string(),
        ];
        match &self.outcome {
            Ok(m) => {
                r.push("ok".into());
                for v in [
                    m.mse_e,
                    m.mse_i,
                    m.mse_omega,
                    m.total_param_mse(),
                    m.mse_reconstruction,
                    m.final_loss,
                ] {
                    r.push(v.to_string());
                }
                r.push(String::new());
            }
            Err(e) => {
                r.push("failed".into());
                r.extend(std::iter::repeat_n(String::new(), 6));
                r.push(e.clone());
            }
        }
        r
    }

    fn from_record(rec: &csv::StringRecord, path: &Path) -> Result<Self> {
        let bad = |d: &str| Error::Malformed {
            path: path.into(),
            detail: d.into(),
        };
        if rec.len() != CSV_HEADER.len() {
            return Err(bad("wrong column count"));
        }
        let num = |i: usize| -> Result<f64> { rec[i].parse().map_err(|_| bad("bad number")) };
        let key = CellKey {
            n_observed: rec[0].parse().map_err(|_| bad("bad n_observed"))?,
            n_simulated: rec[1].parse().map_err(|_| bad("bad n_simulated"))?,
            seed: rec[2].parse().map_err(|_| bad("bad seed"))?,
        };
        let outcome = match &rec[4] {
            "ok" => Ok(CellMetrics {
                mse_e: num(5)?,
                mse_i: num(6)?,
                mse_omega: num(7)?,
                mse_reconstruction: num(9)?,
                final_loss: num(10)?,
            }),
            _ => Err(rec[11].to_string()),
        };
        Ok(CellRow { key, outcome })
    }
}

fn csv_string(rows: &[CellRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Numeric(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn read_manifest(path: &Path) -> Result<CellRow> {
    let mut r = csv::Reader::from_path(path)?;
    let rec = r.records().next().ok_or_else(|| Error::Truncated {
        path: path.into(),
        detail: "empty manifest".into(),
    })??;
    CellRow::from_record(&rec, path)
}

/// All cell rows of a sweep, in [`cells`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub n_observed_grid: Vec<usize>,
    pub n_simulated_grid: Vec<usize>,
    pub rows: Vec<CellRow>,
}

impl SweepReport {
    pub fn to_csv(&self) -> Result<String> {
        csv_string(&self.rows)
    }

    /// Median over seeds of the successful runs of one cell.
    pub fn median(&self, n_observed: usize, n_simulated: usize, metric: Metric) -> Option<f64> {
        let mut v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.key.n_observed == n_observed && r.key.n_simulated == n_simulated)
            .filter_map(|r| r.outcome.as_ref().ok().map(|m| metric.get(m)))
            .collect();
        median(&mut v)
    }

    /// Table with `N_s` rows and `N_o` columns of per-cell medians; the
    /// smallest entry is bold.
    pub fn markdown(&self, metric: Metric) -> String {
        let mut grid: BTreeMap<(usize, usize), Option<f64>> = BTreeMap::new();
        for &s in &self.n_simulated_grid {
            for &o in &self.n_observed_grid {
                if o + s > 0 {
                    grid.insert((s, o), self.median(o, s, metric));
                }
            }
        }
        let best = grid
            .values()
            .flatten()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::INFINITY, f64::min);
        let mut out = String::new();
        writeln!(out, "### {} (median over seeds)\n", metric.title()).unwrap();
        write!(out, "| N_s \\ N_o |").unwrap();
        for o in &self.n_observed_grid {
            write!(out, " {o} |").unwrap();
        }
        out.push('\n');
        out.push_str("|---|");
        for _ in &self.n_observed_grid {
            out.push_str("---|");
        }
        out.push('\n');
        for &s in &self.n_simulated_grid {
            write!(out, "| {s} |").unwrap();
            for &o in &self.n_observed_grid {
                let cell = match grid.get(&(s, o)) {
                    None => "-".to_string(),
                    Some(None) => "failed".to_string(),
                    Some(Some(v)) if *v == best => format!("**{v:.4e}**"),
                    Some(Some(v)) => format!("{v:.4e}"),
                };
                write!(out, " {cell} |").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn markdown_all(&self) -> String {
        Metric::TABLES
            .iter()
            .map(|&m| self.markdown(m))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Median of a slice (mean of the middle pair for even lengths).
pub fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

struct Log(Mutex<std::fs::File>);

impl Log {
    fn open(path: &Path) -> Result<Self> {
        let f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(Log(Mutex::new(f)))
    }

    fn line(&self, msg: &str) {
        let ts = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut f = self.0.lock().expect("log lock");
        // the log is diagnostic only; a failed write must not abort the sweep
        let _ = writeln!(f, "[{ts}] {msg}");
    }
}

/// Paths written by [`run_sweep`].
#[derive(Clone, Debug)]
pub struct SweepOutputs {
    pub dir: PathBuf,
    pub csv: PathBuf,
    pub markdown: PathBuf,
    pub log: PathBuf,
}

impl SweepOutputs {
    pub fn new(dir: &Path) -> Self {
        SweepOutputs {
            dir: dir.to_path_buf(),
            csv: dir.join("results.csv"),
            markdown: dir.join("tables.md"),
            log: dir.join("sweep.log"),
        }
    }

    fn manifest_dir(&self) -> PathBuf {
        self.dir.join("cells")
    }
}

/// Run every cell not already in the manifest directory, then write the CSV
/// and markdown report. Failed cells are recorded and retried on the next
/// run; completed cells are never recomputed.
pub fn run_sweep(cfg: &ExperimentConfig, out: &SweepOutputs) -> Result<SweepReport> {
    cfg.validate_sweep()?;
    let manifests = out.manifest_dir();
    fs::create_dir_all(&manifests).map_err(|e| Error::io(&manifests, e))?;
    cfg.write_dump(&out.dir)?;
    let log = Log::open(&out.log)?;
    let noise = resolve_noise(cfg)?;
    let keys = cells(cfg);
    log.line(&format!("sweep start: {} cells, noise_sigma {noise}", keys.len()));

    let mut done: BTreeMap<CellKey, CellRow> = BTreeMap::new();
    for k in &keys {
        let path = manifests.join(k.file_name());
        if path.exists() {
            match read_manifest(&path) {
                Ok(row) if row.key == *k && row.outcome.is_ok() => {
                    done.insert(*k, row);
                }
                _ => log.line(&format!("ignoring stale manifest {}", path.display())),
            }
        }
    }
    let todo: Vec<CellKey> = keys.iter().filter(|k| !done.contains_key(k)).copied().collect();
    log.line(&format!("{} cells cached, {} to run", done.len(), todo.len()));

    let mut test_pools: BTreeMap<u64, std::result::Result<Vec<ObservedSample>, String>> = BTreeMap::new();
    for k in &todo {
        test_pools
            .entry(k.seed)
            .or_insert_with(|| test_pool(cfg, k.seed, noise).map_err(|e| e.to_string()));
    }

    let run_one = |k: &CellKey| -> CellRow {
        log.line(&format!("start {k:?}"));
        let outcome = match &test_pools[&k.seed] {
            Ok(test) => run_cell(cfg, *k, test, noise)
                .map(|m| CellMetrics::from_run(&m))
                .map_err(|e| format!("error[{}]: {e}", e.code())),
            Err(e) => Err(format!("test pool: {e}")),
        };
        let row = CellRow { key: *k, outcome };
        match &row.outcome {
            Ok(m) => {
                log.line(&format!("done {k:?}: total param mse {}", m.total_param_mse()));
                let path = manifests.join(k.file_name());
                if let Err(e) = csv_string(std::slice::from_ref(&row))
                    .and_then(|s| fs::write(&path, s).map_err(|e| Error::io(&path, e)))
                {
                    log.line(&format!("manifest write failed: {e}"));
                }
            }
            Err(e) => log.line(&format!("failed {k:?}: {e}")),
        }
        row
    };
    let fresh: Vec<CellRow> = if cfg.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        pool.install(|| todo.par_iter().map(run_one).collect())
    } else {
        todo.par_iter().map(run_one).collect()
    };
    for row in fresh {
        done.insert(row.key, row);
    }

    let report = SweepReport {
        n_observed_grid: cfg.n_observed_grid.clone(),
        n_simulated_grid: cfg.n_simulated_grid.clone(),
        rows: keys.iter().map(|k| done[k].clone()).collect(),
    };
    fs::write(&out.csv, report.to_csv()?).map_err(|e| Error::io(&out.csv, e))?;
    fs::write(&out.markdown, report.markdown_all()).map_err(|e| Error::io(&out.markdown, e))?;
    log.line("sweep end");
    Ok(report)
}

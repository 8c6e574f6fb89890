use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use simpinn::bench::{run_dir, ExperimentConfig};
use simpinn::datagen::{load_checkpoint, load_dataset};
use simpinn::mlp::init;

const BIN: &str = env!("CARGO_BIN_EXE_simpinn");

/// Flags for a configuration small enough to train in well under a second.
fn tiny(out: &Path) -> Vec<String> {
    [
        ("width", "8"),
        ("height", "8"),
        ("n_samples", "16"),
        ("hidden_dims", "8"),
        ("n_observed", "4"),
        ("n_simulated", "4"),
        ("n_test", "4"),
        ("epochs", "2"),
        ("batch_size", "4"),
        ("render_count", "2"),
        ("n_observed_grid", "0, 4"),
        ("n_simulated_grid", "0, 4"),
        ("seeds", "0"),
        ("lambda_grid", "0.3, 0.7"),
    ]
    .iter()
    .flat_map(|(k, v)| [format!("--{k}"), v.to_string()])
    .chain(["--output_dir".into(), out.display().to_string()])
    .collect()
}

fn run(cmd: &str, args: &[String]) -> Output {
    Command::new(BIN)
        .arg(cmd)
        .args(args)
        .env_remove("SIMPINN_OUT")
        .output()
        .unwrap()
}

fn with(mut args: Vec<String>, extra: &[(&str, &str)]) -> Vec<String> {
    for (k, v) in extra {
        args.push(format!("--{k}"));
        args.push(v.to_string());
    }
    args
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_line(o: &Output) -> String {
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    err
}

fn config_of(args: &[String]) -> ExperimentConfig {
    let pairs: Vec<(String, String)> = args
        .chunks(2)
        .map(|p| (p[0].trim_start_matches("--").to_string(), p[1].clone()))
        .collect();
    ExperimentConfig::resolve(None, &pairs).unwrap()
}

fn data_files(out: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(out.join("data"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "spnd"))
        .collect();
    v.sort();
    v
}

#[test]
fn gen_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let args = tiny(dir.path());
    let first = stdout(&run("gen", &args));
    assert_eq!(first.matches("wrote").count(), 3, "{first}");
    let bytes: Vec<Vec<u8>> = data_files(dir.path()).iter().map(|p| fs::read(p).unwrap()).collect();
    let second = stdout(&run("gen", &args));
    assert_eq!(second.matches("up to date").count(), 3, "{second}");
    let again: Vec<Vec<u8>> = data_files(dir.path()).iter().map(|p| fs::read(p).unwrap()).collect();
    assert_eq!(bytes, again);
}

#[test]
fn gen_with_no_observations_writes_an_empty_pool() {
    let dir = tempfile::tempdir().unwrap();
    let args = with(tiny(dir.path()), &[("n_observed", "0")]);
    stdout(&run("gen", &args));
    let observed = data_files(dir.path())
        .into_iter()
        .find(|p| p.file_name().unwrap().to_string_lossy().starts_with("observed"))
        .unwrap();
    let d = load_dataset(observed).unwrap();
    assert!(d.observed.is_empty() && d.labeled.is_empty());
}

#[test]
fn zero_epochs_checkpoint_equals_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let args = with(tiny(dir.path()), &[("epochs", "0"), ("n_simulated", "0")]);
    stdout(&run("gen", &args));
    let out = stdout(&run("train", &args));
    assert!(out.starts_with("pinn "), "{out}");
    let cfg = config_of(&args);
    let ck = load_checkpoint(run_dir(&cfg).join("checkpoint.spnc")).unwrap();
    let expected = init(&cfg.train.arch, cfg.train.seed, cfg.train.physics.e_max).unwrap();
    assert_eq!(ck.params, expected);
    let metrics = fs::read_to_string(run_dir(&cfg).join("metrics.csv")).unwrap();
    assert!(metrics.lines().nth(1).unwrap().starts_with("pinn,4,0,0,"), "{metrics}");
}

#[test]
fn train_eval_render_and_dump_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let args = tiny(dir.path());
    stdout(&run("gen", &args));
    let out = stdout(&run("train", &args));
    assert!(out.starts_with("simpinn "), "{out}");
    for word in ["eccentricity", "inclination", "arg. periapsis", "reconstruction"] {
        assert!(out.contains(word), "{out}");
    }
    let cfg = config_of(&args);
    let run = run_dir(&cfg);
    let metrics = fs::read(run.join("metrics.csv")).unwrap();
    assert_eq!(fs::read_to_string(run.join("loss.csv")).unwrap().lines().count(), 3);

    // rerunning from the dumped config reproduces the metrics
    let dump = run.join("config.cfg");
    stdout(&self::run("train", &["--config".into(), dump.display().to_string()]));
    assert_eq!(fs::read(run.join("metrics.csv")).unwrap(), metrics);

    stdout(&self::run("eval", &args));
    let eval = fs::read_to_string(dir.path().join("eval/metrics.csv")).unwrap();
    assert_eq!(eval.lines().count(), 2);

    stdout(&self::run("render", &args));
    let gallery = dir.path().join("gallery");
    let rows = fs::read_to_string(gallery.join("errors.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows, 2);
    let pgm = fs::read_to_string(gallery.join("sample_0001.pgm")).unwrap();
    assert!(pgm.starts_with("P2\n18 8\n65535\n"), "{}", &pgm[..20]);
}

#[test]
fn render_with_zero_count_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let args = with(tiny(dir.path()), &[("epochs", "0"), ("render_count", "0")]);
    stdout(&run("gen", &args));
    stdout(&run("train", &args));
    stdout(&run("render", &args));
    let gallery = dir.path().join("gallery");
    let csv = fs::read_to_string(gallery.join("errors.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    let pgms = fs::read_dir(&gallery)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "pgm"))
        .count();
    assert_eq!(pgms, 0);
}

#[test]
fn error_paths_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let args = tiny(dir.path());

    let bad_flag = run("gen", &with(args.clone(), &[("bogus", "1")]));
    assert_eq!(bad_flag.status.code(), Some(2));
    assert!(error_line(&bad_flag).starts_with("error[CONFIG]: "));

    let bad_value = run("gen", &with(args.clone(), &[("lambda", "1.5")]));
    assert_eq!(bad_value.status.code(), Some(2));

    let unknown = run("frobnicate", &args);
    assert_eq!(unknown.status.code(), Some(2));

    // training before generating: the dataset files are missing
    let missing = run("train", &args);
    assert_eq!(missing.status.code(), Some(5));
    assert!(error_line(&missing).starts_with("error[IO]: "));

    stdout(&run("gen", &args));
    let corrupt = data_files(dir.path())[0].clone();
    let mut bytes = fs::read(&corrupt).unwrap();
    let last = bytes.len() - 5;
    bytes[last] ^= 0xff;
    fs::write(&corrupt, bytes).unwrap();
    let data = run("train", &args);
    assert_eq!(data.status.code(), Some(3));
    assert!(error_line(&data).starts_with("error[DATA]: "));

    // a runaway step size drives the network to non-finite outputs
    stdout(&run("gen", &args));
    let numeric = run("train", &with(args.clone(), &[("learning_rate", "1e308")]));
    assert_eq!(numeric.status.code(), Some(4), "{}", String::from_utf8_lossy(&numeric.stderr));
    assert!(error_line(&numeric).starts_with("error[NUMERIC]: "));
}

#[test]
fn counts_must_match_the_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let args = tiny(dir.path());
    stdout(&run("gen", &args));
    let cfg = config_of(&args);
    let paths = simpinn::bench::dataset_paths(&cfg, simpinn::bench::resolve_noise(&cfg).unwrap());
    let mismatched = with(
        with(args, &[("n_simulated", "3")]),
        &[("labeled", paths.labeled.to_str().unwrap())],
    );
    let o = run("train", &mismatched);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_resumes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = tiny(dir.path());
    let out = stdout(&run("sweep", &args));
    assert!(out.contains("3 cells (0 failed)"), "{out}");
    let sweep = dir.path().join("sweep");
    let csv = fs::read(sweep.join("results.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&csv).lines().count(), 4);
    let tables = fs::read_to_string(sweep.join("tables.md")).unwrap();
    assert!(tables.contains("| N_s \\ N_o | 0 | 4 |"), "{tables}");

    // every cell cached: nothing recomputed, identical bytes
    stdout(&run("sweep", &args));
    let log = fs::read_to_string(sweep.join("sweep.log")).unwrap();
    assert!(log.contains("3 cells cached, 0 to run"), "{log}");
    assert_eq!(fs::read(sweep.join("results.csv")).unwrap(), csv);

    // an interrupted sweep only reruns the missing cell
    let manifests = sweep.join("cells");
    let victim = fs::read_dir(&manifests).unwrap().next().unwrap().unwrap().path();
    fs::remove_file(victim).unwrap();
    stdout(&run("sweep", &args));
    let log = fs::read_to_string(sweep.join("sweep.log")).unwrap();
    assert!(log.contains("2 cells cached, 1 to run"), "{log}");
    assert_eq!(fs::read(sweep.join("results.csv")).unwrap(), csv);

    // a fresh directory reproduces the CSV from scratch
    let other = tempfile::tempdir().unwrap();
    stdout(&run("sweep", &tiny(other.path())));
    assert_eq!(fs::read(other.path().join("sweep/results.csv")).unwrap(), csv);
}

#[test]
fn lambda_cv_reports_a_choice() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout(&run("lambda-cv", &with(tiny(dir.path()), &[("n_simulated", "8")])));
    assert!(out.contains("chosen lambda = "), "{out}");
    assert_eq!(out.matches("(chosen)").count(), 1, "{out}");
    let csv = fs::read_to_string(dir.path().join("lambda_cv/lambda_cv.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn output_env_overrides_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.cfg");
    let in_file = dir.path().join("from-file");
    let from_env = dir.path().join("from-env");
    fs::write(
        &file,
        format!(
            "profile = desk\nwidth = 8\nheight = 8\nn_samples = 16\nn_observed = 2\nn_simulated = 2\nn_test = 2\noutput_dir = {}\n",
            in_file.display()
        ),
    )
    .unwrap();
    let o = Command::new(BIN)
        .args(["gen", "--config", file.to_str().unwrap()])
        .env("SIMPINN_OUT", &from_env)
        .output()
        .unwrap();
    stdout(&o);
    assert!(from_env.join("data/config.cfg").exists());
    assert!(!in_file.exists());

    // an explicit flag still wins over the environment
    let flag = dir.path().join("from-flag");
    let o = Command::new(BIN)
        .args(["gen", "--config", file.to_str().unwrap(), "--output-dir", flag.to_str().unwrap()])
        .env("SIMPINN_OUT", &from_env)
        .output()
        .unwrap();
    stdout(&o);
    assert!(flag.join("data/config.cfg").exists());
}

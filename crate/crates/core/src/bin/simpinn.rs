//! `simpinn <command> [--config FILE] [--key value ...]`
//!
//! Commands: gen, train, eval, sweep, render, lambda-cv. Every config key is
//! also a flag (`--epochs 50`, `--hidden_dims 64,64`); flags override the
//! file, and `SIMPINN_OUT` overrides `output_dir` from the file.

use std::path::PathBuf;
use std::process::ExitCode;

use simpinn::bench::{
    cmd_eval, cmd_gen, cmd_lambda_cv, cmd_render, cmd_sweep, cmd_train, ExperimentConfig, Paths,
    KEYS,
};
use simpinn::Error;

const USAGE: &str = "usage: simpinn <gen|train|eval|sweep|render|lambda-cv> [--config FILE] [--labeled FILE] [--observed FILE] [--test FILE] [--checkpoint FILE] [--<key> VALUE ...]";

struct Args {
    command: String,
    config: Option<PathBuf>,
    paths: Paths,
    overrides: Vec<(String, String)>,
}

fn parse_args(mut argv: impl Iterator<Item = String>) -> Result<Args, Error> {
    let command = argv
        .next()
        .ok_or_else(|| Error::Config(format!("missing command\n{USAGE}")))?;
    let mut args = Args {
        command,
        config: None,
        paths: Paths::default(),
        overrides: Vec::new(),
    };
    while let Some(flag) = argv.next() {
        let name = flag
            .strip_prefix("--")
            .ok_or_else(|| Error::Config(format!("unexpected argument {flag:?}")))?;
        let (name, value) = match name.split_once('=') {
            Some((n, v)) => (n.to_string(), v.to_string()),
            None => {
                let v = argv
                    .next()
                    .ok_or_else(|| Error::Config(format!("--{name} needs a value")))?;
                (name.to_string(), v)
            }
        };
        let key = name.replace('-', "_");
        match key.as_str() {
            "config" => args.config = Some(value.into()),
            "labeled" => args.paths.labeled = Some(value.into()),
            "observed" => args.paths.observed = Some(value.into()),
            "test" => args.paths.test = Some(value.into()),
            "checkpoint" => args.paths.checkpoint = Some(value.into()),
            k if KEYS.contains(&k) => args.overrides.push((key, value)),
            _ => return Err(Error::Config(format!("unknown flag --{name}"))),
        }
    }
    Ok(args)
}

fn run() -> Result<String, Error> {
    let args = parse_args(std::env::args().skip(1))?;
    if matches!(args.command.as_str(), "help" | "--help" | "-h") {
        return Ok(format!("{USAGE}\n"));
    }
    let cfg = ExperimentConfig::resolve(args.config.as_deref(), &args.overrides)?;
    match args.command.as_str() {
        "gen" => cmd_gen(&cfg),
        "train" => cmd_train(&cfg, &args.paths),
        "eval" => cmd_eval(&cfg, &args.paths),
        "sweep" => cmd_sweep(&cfg),
        "render" => cmd_render(&cfg, &args.paths),
        "lambda-cv" => cmd_lambda_cv(&cfg),
        other => Err(Error::Config(format!("unknown command {other:?}\n{USAGE}"))),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

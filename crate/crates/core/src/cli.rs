//! Command-line front end shared by the `gpbf` binary and the tests.
//!
//! ```text
//! gpbf <select|simulate|audit|misspec> --config PATH [--out DIR]
//!      [--set key=value]... [--threads N] [--seed S]
//! ```
//!
//! The config is a JSON document (see [`crate::config`]); `--set` edits a
//! dotted key of the resolved document before validation, and `--seed`
//! is shorthand for `--set seed=S`. `--threads` falls back to the
//! `GPBF_THREADS` environment variable and then to all cores.
//!
//! Files written to `--out` (default `.`):
//!
//! | command    | files |
//! |------------|-------|
//! | `simulate` | `trajectories.csv`, `summary.csv`, `config.json` |
//! | `select`   | the `simulate` files plus `selection.json` |
//! | `misspec`  | `misspec.csv`, `misspec_ranking.csv`, `config.json` |
//! | `audit`    | `audit.csv`, `audit.json`, `config.json` |
//!
//! `audit` takes `--cand 1,3` (repeatable, `{}` for the empty subset) and
//! defaults to every configured candidate. It audits on the covariates of
//! replicate 0 unless `--data` names a dataset CSV: a header row, `y` in the
//! first column and `x1..xp` after it.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 I/O error. On failure a JSON object with `error`, `class`, `message`
//! and `exit_code` is printed to stderr.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::{split_override, ExperimentConfig};
use crate::error::{Error, ErrorClass, Result};
use crate::model::{Dataset, SubsetMask};
use crate::report;
use crate::sim::{run_audit, run_misspec, run_trajectories};

#[derive(Debug, Clone, Parser)]
#[command(name = "gpbf", version, about = "Bayes factor consistency experiments for GP covariate selection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Run the experiment and report the selected subset.
    Select(CommonArgs),
    /// Write log Bayes factor trajectories and decay summaries.
    Simulate(CommonArgs),
    /// Audit assumptions A1-A4 for candidate subsets.
    Audit(AuditArgs),
    /// Pairwise integrated Bayes factors among wrong subsets.
    Misspec(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Override a config key, e.g. `--set ar1.rho=0.3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, env = "GPBF_THREADS")]
    pub threads: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Candidate subset such as `1,3`.
    #[arg(long = "cand")]
    pub cands: Vec<String>,
    #[arg(long)]
    pub data: Option<PathBuf>,
}

impl Cli {
    pub fn common(&self) -> &CommonArgs {
        match &self.command {
            Command::Select(c) | Command::Simulate(c) | Command::Misspec(c) => c,
            Command::Audit(a) => &a.common,
        }
    }
}

/// Parses `1,3`, `{1,3}` or `{}`.
pub fn parse_subset(text: &str) -> Result<SubsetMask> {
    let inner = text.trim().trim_start_matches('{').trim_end_matches('}');
    let indices = inner
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::InvalidSubset(format!("`{text}` is not a list of indices")))
        })
        .collect::<Result<Vec<_>>>()?;
    SubsetMask::new(indices)
}

/// Loads the config with `--set` and `--seed` applied.
pub fn load_config(args: &CommonArgs) -> Result<ExperimentConfig> {
    let mut overrides = args
        .overrides
        .iter()
        .map(|s| split_override(s))
        .collect::<Result<Vec<_>>>()?;
    if let Some(seed) = args.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    ExperimentConfig::from_path(&args.config, &overrides)
}

/// Runs one command and returns the files it wrote.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let common = cli.common();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = common.threads {
        if t == 0 {
            return Err(Error::validation("threads", "must be at least 1"));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: &Cli) -> Result<Vec<PathBuf>> {
    let common = cli.common();
    let cfg = load_config(common)?;
    let out = &common.out;
    std::fs::create_dir_all(out)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, f: &dyn Fn(&mut dyn std::io::Write) -> Result<()>| -> Result<()> {
        let path = out.join(name);
        report::to_file(&path, |w| f(w))?;
        written.push(path);
        Ok(())
    };
    emit("config.json", &|w| {
        writeln!(w, "{}", cfg.to_json_string())?;
        Ok(())
    })?;
    match &cli.command {
        Command::Simulate(_) | Command::Select(_) => {
            let sim = run_trajectories(&cfg)?;
            emit("trajectories.csv", &|w| report::write_trajectories(&sim, w))?;
            emit("summary.csv", &|w| report::write_summary(&sim, w))?;
            if matches!(cli.command, Command::Select(_)) {
                emit("selection.json", &|w| report::write_selection(&sim, w))?;
                println!("selected {}", sim.selected()?);
            }
        }
        Command::Misspec(_) => {
            let m = run_misspec(&cfg)?;
            emit("misspec.csv", &|w| report::write_misspec(&m, w))?;
            emit("misspec_ranking.csv", &|w| report::write_misspec_ranking(&m, w))?;
        }
        Command::Audit(a) => {
            let cands = if a.cands.is_empty() {
                cfg.candidate_list()
            } else {
                a.cands.iter().map(|c| parse_subset(c)).collect::<Result<_>>()?
            };
            let reports = match &a.data {
                Some(path) => audit_on_file(&cfg, path, &cands)?,
                None => run_audit(&cfg, &cands)?,
            };
            emit("audit.csv", &|w| report::write_audit_csv(&reports, w))?;
            emit("audit.json", &|w| report::write_audit_json(&reports, w))?;
            for r in &reports {
                println!("{} {}", r.subset, report::audit_label(r));
            }
        }
    }
    Ok(written)
}

fn audit_on_file(cfg: &ExperimentConfig, path: &Path, cands: &[SubsetMask]) -> Result<Vec<crate::audit::AuditReport>> {
    let data = Dataset::from_csv_path(path)?;
    if data.p() != cfg.p {
        return Err(Error::validation(
            "p",
            format!("dataset has {} covariates, config declares {}", data.p(), cfg.p),
        ));
    }
    let spec = cfg.model_spec();
    cands
        .iter()
        .map(|s| {
            s.check_within(cfg.p)?;
            crate::audit::audit(&spec, &data, s, &cfg.s0, &cfg.n_grid, &cfg.audit)
        })
        .collect()
}

/// Machine-readable description of a failure.
pub fn error_json(e: &Error) -> serde_json::Value {
    let class = match e.class() {
        ErrorClass::Config => "config",
        ErrorClass::Numerical => "numerical",
        ErrorClass::Io => "io",
    };
    json!({
        "error": e.kind(),
        "class": class,
        "message": e.to_string(),
        "exit_code": e.exit_code(),
    })
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            e.exit_code()
        }
    }
}

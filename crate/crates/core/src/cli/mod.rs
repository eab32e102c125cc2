//! Command-line front end.
//!
//! Parameters are merged in order: the JSON file given by `--config`, then
//! explicit flags, then `--set key=value` overrides. Exit codes: 0 success,
//! 2 configuration or validation error, 3 computation error or a failed
//! check.

mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

pub use commands::{cmd_dirichlet, cmd_gen, cmd_measure, cmd_scan, Report};
pub use config::{ExperimentConfig, FamilySpec, Format, PRECISIONS};

use crate::error::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Lib(#[from] Error),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(e) if e.is_configuration() => 2,
            CliError::Config(_) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "lacuna",
    version,
    about = "Sequences generated by lacunary moduli"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List s_1..s_n as `n,s_n`.
    Gen(Flags),
    /// Tabulate L(θ) and optional averages over a set of angles.
    Scan(Flags),
    /// Wiener averages of the coefficients of the θ(η) measure.
    Measure(Flags),
    /// Dirichlet rows L(m_{j_n} θ) for a thm6 point.
    Dirichlet(Flags),
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// JSON file with configuration keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a configuration key (value parsed as JSON when possible).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// geometric:B, factorial:O, explicit:a,b,c or a JSON object.
    #[arg(long)]
    pub family: Option<String>,
    /// Number of elements to list.
    #[arg(long = "n")]
    pub n: Option<u64>,
    /// Values of N, comma separated.
    #[arg(long = "N", value_delimiter = ',')]
    pub big_n: Vec<u64>,
    /// Angles such as 1/3, 0.25 or dyadic:<hex>/2^<bits>, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub angles: Vec<String>,
    /// Add the grid i/Q, 0 <= i < Q.
    #[arg(long)]
    pub grid: Option<u64>,
    /// Add θ(η) for every word of length K.
    #[arg(long)]
    pub eta_all: bool,
    /// prop5 or thm6.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Binary word, e.g. 1111.
    #[arg(long)]
    pub eta: Option<String>,
    #[arg(long)]
    pub nmax: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo sample count; requires --seed.
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub tail_tol: Option<f64>,
    /// Working precision in bits: 24, 53, 128, 256 or 512.
    #[arg(long)]
    pub precision: Option<u32>,
    /// Verification window past the last selected index.
    #[arg(long)]
    pub window: Option<usize>,
    /// Recompute every average by blocks and compare.
    #[arg(long)]
    pub check_blocks: bool,
    /// Worker threads (default: RAYON_NUM_THREADS or the core count).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, conflicts_with = "csv")]
    pub json: bool,
    #[arg(long)]
    pub csv: bool,
}

impl Flags {
    fn to_map(&self) -> Map<String, Value> {
        let mut m = Map::new();
        let mut put = |k: &str, v: Value| {
            m.insert(k.to_string(), v);
        };
        if let Some(f) = &self.family {
            // A JSON object descriptor is passed through as an object.
            let v = serde_json::from_str::<Value>(f)
                .ok()
                .filter(Value::is_object)
                .unwrap_or_else(|| Value::String(f.clone()));
            put("family", v);
        }
        if let Some(n) = self.n {
            put("n", n.into());
        }
        if !self.big_n.is_empty() {
            put("N", self.big_n.clone().into());
        }
        if !self.angles.is_empty() {
            put("angles", self.angles.clone().into());
        }
        if let Some(q) = self.grid {
            put("grid", q.into());
        }
        if self.eta_all {
            put("eta_all", true.into());
        }
        if let Some(mode) = &self.mode {
            put("mode", mode.to_ascii_lowercase().into());
        }
        if let Some(k) = self.k {
            put("K", k.into());
        }
        if let Some(eta) = &self.eta {
            put("eta", eta.clone().into());
        }
        if let Some(n) = self.nmax {
            put("nmax", n.into());
        }
        if let Some(s) = self.seed {
            put("seed", s.into());
        }
        if let Some(s) = self.samples {
            put("samples", s.into());
        }
        if let Some(k) = self.k_max {
            put("k_max", k.into());
        }
        if let Some(t) = self.tail_tol {
            put("tail_tol", t.into());
        }
        if let Some(p) = self.precision {
            put("precision", p.into());
        }
        if let Some(w) = self.window {
            put("window", w.into());
        }
        if self.check_blocks {
            put("check_blocks", true.into());
        }
        if let Some(t) = self.threads {
            put("threads", t.into());
        }
        if let Some(o) = &self.output {
            put("output", o.to_string_lossy().into_owned().into());
        }
        if self.json {
            put("format", "json".into());
        } else if self.csv {
            put("format", "csv".into());
        }
        m
    }

    /// Merge the config file, the flags and the `--set` overrides.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut merged = Map::new();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(obj)) => config::overlay(&mut merged, obj),
                Ok(_) => {
                    return Err(CliError::Config(
                        "config file must hold a JSON object".into(),
                    ))
                }
                Err(e) => return Err(CliError::Config(format!("bad config file: {e}"))),
            }
        }
        config::overlay(&mut merged, self.to_map());
        for s in &self.set {
            let (k, v) = config::parse_assignment(s)?;
            merged.insert(k, v);
        }
        config::from_value(Value::Object(merged))
    }
}

type Runner = fn(&ExperimentConfig) -> Result<Report, CliError>;

fn execute(command: &Command) -> Result<(Report, Option<PathBuf>), CliError> {
    let (flags, run): (&Flags, Runner) = match command {
        Command::Gen(f) => (f, cmd_gen),
        Command::Scan(f) => (f, cmd_scan),
        Command::Measure(f) => (f, cmd_measure),
        Command::Dirichlet(f) => (f, cmd_dirichlet),
    };
    let cfg = flags.resolve()?;
    let report = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(|| run(&cfg))?,
        None => run(&cfg)?,
    };
    Ok((report, cfg.output.clone()))
}

fn emit(text: &str, output: Option<&PathBuf>) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Parse `args`, run the command and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    // A failed check still writes its table before exiting with code 3.
    let result = execute(&cli.command).and_then(|(report, output)| {
        emit(&report.text, output.as_ref())?;
        match report.failure {
            Some(msg) => Err(CliError::Check(msg)),
            None => Ok(()),
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

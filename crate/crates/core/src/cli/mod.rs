//! The `purify` command-line harness.
//!
//! Settings come from flags, then an optional `key = value` config file, then
//! defaults. Every command renders its whole output before writing it once,
//! to `--output` or stdout.

mod commands;
mod verify;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::error::Error;
use crate::protocols::ProtocolKind;

pub use commands::run;
pub use verify::{verify_suite, Check, VerifyReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_SYNTHESIS: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Simulate,
    Compare,
    Optimize,
    Speedup,
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    Mf,
    Swap,
    Optimal,
}

impl From<ProtocolArg> for ProtocolKind {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::Mf => ProtocolKind::Mf,
            ProtocolArg::Swap => ProtocolKind::Swap,
            ProtocolArg::Optimal => ProtocolKind::Optimal,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub dim: usize,
    pub mu: f64,
    pub protocol: ProtocolKind,
    pub samples: usize,
    pub trials: usize,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        Self {
            command,
            dim: 2,
            mu: 1.0,
            protocol: ProtocolKind::Mf,
            samples: 200,
            trials: 2000,
            seed: 42,
            output_path: None,
            format: Format::Csv,
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.dim < 2 {
            return Err(CliError::usage(format!("dim: N = {} must be at least 2", self.dim)));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(CliError::usage(format!("mu: {} must be a positive number", self.mu)));
        }
        if self.samples < 2 {
            return Err(CliError::usage(format!("samples: {} must be at least 2", self.samples)));
        }
        if self.trials < 1 {
            return Err(CliError::usage("trials: must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Parser, Debug)]
#[command(name = "purify", about = "Time-optimal purification protocols under a bounded Hamiltonian spread")]
struct Flags {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, value_enum)]
    protocol: Option<ProtocolArg>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// File of `key = value` lines; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Synthesis(Error),
    VerifyFailed(usize),
    Internal(Error),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Internal(Error::InvalidArgument(_)) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Synthesis(_) | CliError::Internal(Error::SynthesisFailure { .. }) => EXIT_SYNTHESIS,
            CliError::VerifyFailed(_) => EXIT_VERIFY_FAILED,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Synthesis(e) | CliError::Internal(e) => write!(f, "{e}"),
            CliError::VerifyFailed(n) => write!(f, "verification failed: {n} check(s) did not pass"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::SynthesisFailure { .. } => CliError::Synthesis(e),
            other => CliError::Internal(other),
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, CliError> {
    raw.parse()
        .map_err(|_| CliError::usage(format!("{key}: cannot parse '{raw}'")))
}

fn parse_enum<T: ValueEnum>(key: &str, raw: &str) -> Result<T, CliError> {
    T::from_str(raw, true).map_err(|_| CliError::usage(format!("{key}: unknown value '{raw}'")))
}

fn apply_config_file(cfg: &mut RunConfig, path: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::usage(format!("config line {}: expected key = value", lineno + 1)));
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "dim" => cfg.dim = parse_value(key, value)?,
            "mu" => cfg.mu = parse_value(key, value)?,
            "protocol" => cfg.protocol = parse_enum::<ProtocolArg>(key, value)?.into(),
            "samples" => cfg.samples = parse_value(key, value)?,
            "trials" => cfg.trials = parse_value(key, value)?,
            "seed" => cfg.seed = parse_value(key, value)?,
            "output" => cfg.output_path = Some(PathBuf::from(value)),
            "format" => cfg.format = parse_enum(key, value)?,
            other => return Err(CliError::usage(format!("unknown config key '{other}'"))),
        }
    }
    Ok(())
}

/// Builds a validated [`RunConfig`]. `argv[0]` is the program name.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let flags = Flags::try_parse_from(argv).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut cfg = RunConfig::defaults(flags.command);
    if let Some(path) = &flags.config {
        apply_config_file(&mut cfg, path)?;
    }
    if let Some(v) = flags.dim {
        cfg.dim = v;
    }
    if let Some(v) = flags.mu {
        cfg.mu = v;
    }
    if let Some(v) = flags.protocol {
        cfg.protocol = v.into();
    }
    if let Some(v) = flags.samples {
        cfg.samples = v;
    }
    if let Some(v) = flags.trials {
        cfg.trials = v;
    }
    if let Some(v) = flags.seed {
        cfg.seed = v;
    }
    if let Some(v) = flags.output {
        cfg.output_path = Some(v);
    }
    if let Some(v) = flags.format {
        cfg.format = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses, runs and reports; returns the process exit status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    if let Err(e) = Flags::try_parse_from(&args) {
        use clap::error::ErrorKind;
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            print!("{e}");
            return EXIT_OK;
        }
    }
    let result = parse_config(args).and_then(|cfg| run(&cfg));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("purify: {e}");
            e.exit_code()
        }
    }
}

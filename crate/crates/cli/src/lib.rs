//! `dqd` command-line tool: JSON configs in, CSV/JSON/SVG artifacts plus a run report out.
//!
//! Exit codes: 0 on success, 1 when a model rejects the request or fails, 2 for
//! malformed configuration or command-line usage.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod config;
mod error;
pub mod io;
pub mod plot;
pub mod report;

pub use error::CliError;

use commands::Ctx;
use io::Outputs;
use report::{RunReport, Versions};

/// File name of the run report written into the output directory.
pub const REPORT_FILE: &str = "run_report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dqd", version, about = "Photon detection with a cavity-coupled double quantum dot")]
pub struct Cli {
    /// JSON configuration; the built-in default is used when omitted (not for calibrate/fit).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// RNG seed; overrides a seed given in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Format of the primary numeric output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Complex reflection S11 over a detuning × drive-frequency grid.
    Spectrum,
    /// Eigenlevels and transitions of the truncated Rabi or Jaynes–Cummings Hamiltonian.
    Eigen,
    /// Detector efficiency breakdown at one operating point.
    Efficiency,
    /// Matched-rate efficiency map over two parameters.
    Sweep,
    /// Input-loss calibration from an ac Stark power sweep.
    Calibrate,
    /// Least-squares fit of reflection spectra.
    Fit,
    /// Efficiency from the Lindblad master-equation steady state.
    Oracle,
    /// Synthetic spectra or Stark sweeps with seeded noise.
    Synth,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Eigen => "eigen",
            Command::Efficiency => "efficiency",
            Command::Sweep => "sweep",
            Command::Calibrate => "calibrate",
            Command::Fit => "fit",
            Command::Oracle => "oracle",
            Command::Synth => "synth",
        }
    }
}

fn dispatch(command: Command, ctx: &mut Ctx) -> Result<serde_json::Value, CliError> {
    match command {
        Command::Spectrum => commands::spectrum(ctx),
        Command::Eigen => commands::eigen(ctx),
        Command::Efficiency => commands::efficiency(ctx),
        Command::Sweep => commands::sweep(ctx),
        Command::Calibrate => commands::calibrate(ctx),
        Command::Fit => commands::fit(ctx),
        Command::Oracle => commands::oracle(ctx),
        Command::Synth => commands::synth(ctx),
    }
}

fn execute(cli: &Cli, ctx: &mut Ctx) -> Result<serde_json::Value, CliError> {
    std::fs::create_dir_all(&cli.out).map_err(|e| CliError::Io(format!("{}: {e}", cli.out.display())))?;
    match cli.threads {
        None => dispatch(cli.command, ctx),
        Some(0) => Err(CliError::Config("--threads: must be ≥ 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(cli.command, ctx))
        }
    }
}

/// Runs the tool on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout())
}

/// Like [`run`], with the JSON summary of a successful run written to `stdout`.
pub fn run_with<I, T>(args: I, stdout: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let start = Instant::now();
    let mut ctx = Ctx {
        config_path: cli.config.clone(),
        seed_flag: cli.seed,
        format: cli.format,
        out: Outputs::new(&cli.out),
        seed: cli.seed.unwrap_or(0),
        config_sha256: None,
        warnings: Vec::new(),
    };
    let outcome = execute(&cli, &mut ctx);
    let exit_code = outcome.as_ref().map_or_else(CliError::exit_code, |_| 0);
    let report = RunReport {
        command: cli.command.name().into(),
        status: if exit_code == 0 { "ok" } else { "error" }.into(),
        exit_code,
        config_path: cli.config.as_ref().map(|p| p.display().to_string()),
        config_sha256: ctx.config_sha256.clone(),
        seed: ctx.seed,
        threads: cli.threads,
        format: cli.format.name().into(),
        versions: Versions::current(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: ctx.out.written().iter().map(|p| p.display().to_string()).collect(),
        warnings: ctx.warnings.clone(),
        summary: outcome.as_ref().cloned().unwrap_or(serde_json::Value::Null),
        error: outcome.as_ref().err().map(ToString::to_string),
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    match &outcome {
        Ok(summary) => {
            let text = serde_json::to_string_pretty(summary).unwrap_or_default();
            let _ = writeln!(stdout, "{text}");
        }
        Err(e) => eprintln!("error: {e}"),
    }
    let report_path = cli.out.join(REPORT_FILE);
    let written = serde_json::to_vec_pretty(&report)
        .map_err(|e| e.to_string())
        .and_then(|mut bytes| {
            bytes.push(b'\n');
            io::write_atomic(&report_path, &bytes).map_err(|e| e.to_string())
        });
    if let Err(e) = written {
        eprintln!("error: could not write {}: {e}", report_path.display());
        return exit_code.max(1);
    }
    exit_code
}

//! `bubble-fts` command-line front end.
//!
//! Exit status: 0 on success, 1 on usage or input errors, 2 on internal errors.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use config::{FileConfig, GridArgs};
use std::ffi::OsString;
use std::path::PathBuf;

pub use commands::{ExitMarket, ExitPopulation};

#[derive(Debug, Parser)]
#[command(name = "bubble-fts", version, about = "Finite-time-singularity bubble diagnostics")]
struct Cli {
    /// TOML file with default values for any long flag (snake_case keys).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default 1).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sliding-window scan of a price series; writes alarms as JSON.
    Scan(ScanArgs),
    /// Simulates a bubble path; writes CSV plus a JSON sidecar.
    Simulate(SimulateArgs),
    /// Calibrates a single window.
    Calibrate(CalibrateArgs),
    /// Monte Carlo Dickey-Fuller critical values.
    CriticalValues(CriticalValuesArgs),
    /// Optimal exit dates for a population of arbitrageurs.
    ExitTimes(ExitTimesArgs),
    /// Summarises an alarms file into clusters.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// `date,close` CSV file or http(s) URL.
    #[arg(long)]
    input: Option<String>,
    /// Keep observations on or after this date.
    #[arg(long)]
    from: Option<String>,
    /// Keep observations on or before this date.
    #[arg(long)]
    to: Option<String>,
}

#[derive(Debug, Args)]
struct TableArgs {
    /// Critical-value table (JSON) to use instead of the shipped one.
    #[arg(long)]
    table: Option<String>,
    /// Significance level; a table is simulated if it differs from the shipped one.
    #[arg(long)]
    level: Option<f64>,
    /// Replications when a table has to be simulated.
    #[arg(long)]
    reps: Option<usize>,
    /// Seed when a table has to be simulated.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// fts-price or fts-momentum.
    #[arg(long)]
    model: Option<String>,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    window_length: Option<usize>,
    #[arg(long)]
    step: Option<usize>,
    #[command(flatten)]
    table: TableArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Alarms JSON (stdout when absent).
    #[arg(long)]
    out: Option<String>,
    /// CSV `date,log_price,alarm_level` for plotting.
    #[arg(long)]
    plot_data: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    /// Initial price (model 1).
    #[arg(long)]
    p0: Option<f64>,
    /// Terminal log-price (model 2).
    #[arg(long)]
    a: Option<f64>,
    /// Initial momentum (model 2).
    #[arg(long)]
    x0: Option<f64>,
    /// OU mean-reversion rate.
    #[arg(long)]
    alpha: Option<f64>,
    /// OU diffusion amplitude s = σ/μ.
    #[arg(long)]
    noise_scale: Option<f64>,
    #[arg(long)]
    t0_value: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV `t,price[,momentum],tc` where tc is the critical-time path T_c + OU term (stdout when absent).
    #[arg(long)]
    out: Option<String>,
    /// JSON sidecar; defaults to `<out>.json`.
    #[arg(long)]
    sidecar: Option<String>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long)]
    model: Option<String>,
    #[command(flatten)]
    input: InputArgs,
    /// Last day of the window (the last observation on or before it).
    #[arg(long)]
    end: Option<String>,
    #[arg(long)]
    window_length: Option<usize>,
    #[command(flatten)]
    table: TableArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Result JSON (stdout when absent).
    #[arg(long)]
    out: Option<String>,
    /// CSV `t,T_tilde,residual` of the best point's transform.
    #[arg(long)]
    series_out: Option<String>,
}

#[derive(Debug, Args)]
struct CriticalValuesArgs {
    /// Series length; repeat for several.
    #[arg(long, num_args = 1..)]
    length: Vec<usize>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON result (stdout when absent).
    #[arg(long)]
    out: Option<String>,
    /// Also write a table loadable by `scan --table`.
    #[arg(long)]
    table_out: Option<String>,
}

#[derive(Debug, Args)]
struct ExitTimesArgs {
    /// JSON `{market, agents}`.
    #[arg(long)]
    input: Option<String>,
    /// CSV `agent_id,t_exit,residual` (stdout when absent).
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Alarms JSON written by `scan`.
    #[arg(long)]
    alarms: Option<String>,
    /// text, json or csv.
    #[arg(long)]
    format: Option<String>,
    /// Largest gap in trading days between chained alarms.
    #[arg(long)]
    max_gap: Option<usize>,
    #[arg(long)]
    out: Option<String>,
}

/// How a command failed, mapped onto the exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, files or parameters: status 1.
    Input(anyhow::Error),
    /// Anything else: status 2.
    Internal(anyhow::Error),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => 1,
            Failure::Internal(_) => 2,
        }
    }
}

pub(crate) type CmdResult = Result<(), Failure>;

pub(crate) fn input_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Input(e.into())
}

pub(crate) fn internal_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Internal(e.into())
}

/// Parses `args` (program name first) and runs the subcommand; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(f) => {
            let err = match &f {
                Failure::Input(e) | Failure::Internal(e) => e,
            };
            eprintln!("error: {err:#}");
            f.code()
        }
    }
}

fn dispatch(cli: Cli) -> CmdResult {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p).map_err(input_err)?,
        None => FileConfig::default(),
    };
    let jobs = cli.jobs.or(file.jobs).unwrap_or(1);
    if jobs == 0 {
        return Err(input_err(anyhow::anyhow!("--jobs must be at least 1")));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(internal_err)?;
    pool.install(|| match cli.command {
        Command::Scan(a) => commands::scan(a, &file),
        Command::Simulate(a) => commands::simulate(a, &file),
        Command::Calibrate(a) => commands::calibrate(a, &file),
        Command::CriticalValues(a) => commands::critical_values(a, &file),
        Command::ExitTimes(a) => commands::exit_times(a, &file),
        Command::Report(a) => commands::report(a, &file),
    })
}

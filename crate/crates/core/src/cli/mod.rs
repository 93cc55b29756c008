//! Command-line front end.
//!
//! Exit codes: 0 success, 2 infeasible design problem, 3 invalid
//! configuration or arguments, 4 solver, audit or simulation failure.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cmd_bounds, cmd_design, cmd_report, cmd_simulate, cmd_sweep, Options, ResultBundle};
pub use config::{Metric, RunConfig};

use crate::error::Error;
use crate::sdp::SdpStatus;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_FAILURE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "covertlqr", version, about = "Observability-aware LQR design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one designer and write design.json.
    Design(Common),
    /// Run both designers and the bounds over the lambda grid; write sweep.csv.
    Sweep(Common),
    /// Evaluate the lower bounds over the lambda grid; write bounds.csv.
    Bounds(Common),
    /// Simulate the nominal and designed gains against the adversary observer.
    Simulate(Common),
    /// Print Gramian traces and eigenvalues for the nominal and designed gains.
    Report(Common),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    metric: Option<Metric>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Design file to simulate or report; repeatable. `simulate` defaults to
    /// `<out>/design.json`.
    #[arg(long = "design")]
    designs: Vec<PathBuf>,
}

pub fn exit_code(err: &Error) -> i32 {
    let infeasible = |s: &SdpStatus| matches!(s, SdpStatus::Infeasible | SdpStatus::Unbounded);
    match err {
        Error::Config(_) | Error::Dimension(_) | Error::Json(_) => EXIT_CONFIG,
        Error::Solver { status, .. } | Error::CcpAborted { status, .. } if infeasible(status) => EXIT_INFEASIBLE,
        _ => EXIT_FAILURE,
    }
}

type CommandFn = fn(&RunConfig, &Options) -> crate::Result<ResultBundle>;

fn init_logging() {
    let env = env_logger::Env::new().filter_or("COVERTLQR_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses `args` (program name first), runs the command, prints its summary
/// and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    init_logging();
    let (common, cmd): (&Common, CommandFn) = match &cli.command {
        Command::Design(c) => (c, cmd_design),
        Command::Sweep(c) => (c, cmd_sweep),
        Command::Bounds(c) => (c, cmd_bounds),
        Command::Simulate(c) => (c, cmd_simulate),
        Command::Report(c) => (c, cmd_report),
    };
    let opts = Options {
        metric: common.metric,
        jobs: common.jobs,
        out: common.out.clone(),
        seed: common.seed,
        designs: common.designs.clone(),
    };
    let result = RunConfig::load(&common.config).and_then(|cfg| cmd(&cfg, &opts));
    match result {
        Ok(bundle) => {
            print!("{}", bundle.summary);
            for f in &bundle.files {
                log::info!("wrote {}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

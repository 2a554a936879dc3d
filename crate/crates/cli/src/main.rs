//! Batch experiment runner for the wall-system toolkit.
//!
//! Exit codes: 0 all assertions pass, 1 failure, 2 inconclusive, 64 usage.

mod config;
mod report;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_config_file, resolve, Overrides, Suite};
use report::exit_code;
use suites::{run_simulate, run_suite, Observable, SimProcess};

const EX_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "dysonwall",
    about = "Verification suites and sample generation for reflected and non-colliding Brownian systems with a wall",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Master seed for all trajectory streams
    #[arg(long)]
    seed: Option<u64>,
    /// Stack depth / free-system particle count
    #[arg(long)]
    n: Option<usize>,
    /// Wall-system particle count (where it differs from the pairing default)
    #[arg(long)]
    m: Option<usize>,
    /// Time horizon
    #[arg(long)]
    t: Option<f64>,
    /// Grid steps over [0, t]
    #[arg(long)]
    steps: Option<usize>,
    /// Trajectories / Monte Carlo budget / lattice count, per suite
    #[arg(long)]
    samples: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory for manifest, samples and summary
    #[arg(long)]
    out: Option<PathBuf>,
    /// Multiplier applied to the suite's tolerance thresholds
    #[arg(long)]
    tol_scale: Option<f64>,
    /// key=value config file; explicit flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
}

impl CommonOpts {
    fn overrides(&self) -> Result<Overrides, String> {
        let flags = Overrides {
            n: self.n,
            m: self.m,
            t_end: self.t,
            steps: self.steps,
            samples: self.samples,
            seed: self.seed,
            tol_scale: self.tol_scale,
            workers: self.workers,
            out: self.out.clone(),
        };
        Ok(match &self.config {
            Some(path) => flags.or(parse_config_file(path)?),
            None => flags,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one ensemble and write its samples
    Simulate {
        /// Process to simulate: z | y | sde-a | sde-c | sde-d
        #[arg(long, default_value = "z")]
        process: String,
        /// Observable: terminal | sup
        #[arg(long, default_value = "terminal")]
        observable: String,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run a verification suite
    Verify {
        /// theorem1 | prop2 | prop5 | prop3-density | prop4-intertwining | volume | oracle-check
        #[arg(long)]
        suite: String,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Recursion vs ordered-tuple oracle equality on random lattices
    OracleCheck {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Monte Carlo cone volumes against the chamber weight
    Volume {
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn init_workers(workers: Option<usize>) {
    if let Some(w) = workers {
        // Results are worker-invariant by construction; failure to resize an
        // already-initialized pool only affects wall-clock time.
        let _ = dysonwall::ensemble::configure_workers(w);
    }
}

fn run() -> Result<i32, (u8, String)> {
    let cli = Cli::try_parse().map_err(|e| (EX_USAGE, e.to_string()))?;
    let usage = |e: String| (EX_USAGE, e);

    match cli.command {
        Command::Simulate {
            process,
            observable,
            common,
        } => {
            let proc = SimProcess::parse(&process).map_err(usage)?;
            let obs = Observable::parse(&observable).map_err(usage)?;
            let over = common.overrides().map_err(usage)?;
            let cfg = config::simulate_config(over).map_err(usage)?;
            init_workers(cfg.workers);
            run_simulate(&cfg, proc, obs)
                .map(exit_code)
                .map_err(|e| (1, e))
        }
        Command::Verify { suite, common } => {
            let suite = Suite::parse(&suite).map_err(usage)?;
            let over = common.overrides().map_err(usage)?;
            let cfg = resolve(suite, over).map_err(usage)?;
            init_workers(cfg.workers);
            run_suite(&cfg).map(exit_code).map_err(|e| (1, e))
        }
        Command::OracleCheck { common } => {
            let over = common.overrides().map_err(usage)?;
            let cfg = resolve(Suite::OracleCheck, over).map_err(usage)?;
            init_workers(cfg.workers);
            run_suite(&cfg).map(exit_code).map_err(|e| (1, e))
        }
        Command::Volume { common } => {
            let over = common.overrides().map_err(usage)?;
            let cfg = resolve(Suite::Volume, over).map_err(usage)?;
            init_workers(cfg.workers);
            run_suite(&cfg).map(exit_code).map_err(|e| (1, e))
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err((code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}

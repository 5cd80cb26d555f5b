#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{CmdError, EXIT_USAGE};
use config::{parse_grid, RunConfig};
use geonflow::oracle::VerifyScope;

#[derive(Parser, Debug)]
#[command(
    name = "geonflow",
    version,
    about = "Weighted normal flows of tori in the Horowitz-Myers geon"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct RunArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides out.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Skip the floor and convexity checks on the initial data.
    #[arg(long)]
    allow_unsafe: bool,
    /// Grid size, e.g. 128x128.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<[usize; 2]>,
    #[arg(long)]
    t_end: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one flow and write diagnostics, the final surface and a Q report.
    Simulate(RunArgs),
    /// Compare closed forms against the finite-difference oracles.
    Verify {
        #[arg(value_enum)]
        scope: Scope,
        /// Directory for the JSON report; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, hide = true)]
        inject_sign_fault: bool,
    },
    /// Run a Cartesian grid of overrides over a template configuration.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// key=v1|v2|..., repeatable.
        #[arg(long, required = true)]
        vary: Vec<String>,
    },
    /// Closed-form Q, H and mass for a coordinate torus.
    TorusExact {
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Comma-separated torus periods.
        #[arg(long, value_delimiter = ',')]
        periods: Option<Vec<f64>>,
        #[arg(long)]
        phi: Option<f64>,
        #[arg(long)]
        s: Option<f64>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Scope {
    Curvature,
    Static,
    SurfaceForms,
    All,
}

impl From<Scope> for VerifyScope {
    fn from(s: Scope) -> Self {
        match s {
            Scope::Curvature => VerifyScope::Curvature,
            Scope::Static => VerifyScope::Static,
            Scope::SurfaceForms => VerifyScope::SurfaceForms,
            Scope::All => VerifyScope::All,
        }
    }
}

fn load(args: &RunArgs) -> Result<RunConfig, CmdError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CmdError::Usage(format!("{}: {e}", args.config.display())))?;
    let mut cfg = RunConfig::parse(&text)
        .map_err(|e| CmdError::Usage(format!("{}: {e}", args.config.display())))?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(g) = args.grid {
        cfg.grid = g;
    }
    if let Some(t) = args.t_end {
        cfg.flow.t_end = t;
    }
    cfg.validate()
        .map_err(|e| CmdError::Usage(format!("{}: {e}", args.config.display())))?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<u8, CmdError> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = load(&args)?;
            commands::simulate(&cfg, args.out, args.allow_unsafe)
        }
        Command::Verify {
            scope,
            out,
            seed,
            inject_sign_fault,
        } => commands::verify_cmd(scope.into(), out, seed, inject_sign_fault),
        Command::Sweep { run, vary } => {
            let cfg = load(&run)?;
            commands::sweep(&cfg, &vary, run.out, run.allow_unsafe)
        }
        Command::TorusExact { n, periods, phi, s } => commands::torus_exact(n, periods, phi, s),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

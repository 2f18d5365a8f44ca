//! `tefree`: transmission eigenvalue experiments on the disk.
//!
//! Exit codes: 0 on success, 2 when the configuration or an input file is
//! rejected, 3 when the numerics fail (sentinel modes, overflow, no
//! convergence).

mod commands;
mod config;
mod svg;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "tefree", version, about = "Transmission eigenvalue experiments on the disk")]
struct Cli {
    /// Output directory (overrides `outputs.dir`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for the power-iteration start vector
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues of the disk inside the scan rectangle
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Region membership and envelope exponents of an eigenvalue file
    Regions {
        /// CSV written by `solve`
        #[arg(long)]
        eigs: PathBuf,
        /// Config supplying the region list
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Boundary symbol against the exact Dirichlet-to-Neumann map
    DtnCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Eikonal, transport and phase-bound residual tables
    ParametrixCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Counting functions against their Weyl asymptotics
    Count {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn invalid(message: String) -> Self {
        Failure { code: 2, message }
    }

    pub fn numeric(message: String) -> Self {
        Failure { code: 3, message }
    }

    pub fn io(e: impl std::fmt::Display) -> Self {
        Failure { code: 2, message: e.to_string() }
    }
}

impl From<tefree::Error> for Failure {
    fn from(e: tefree::Error) -> Self {
        use tefree::Error::*;
        match e {
            InvalidInput(_) | ConditionViolated(..) | ZoneMismatch(_) | FrequencyOutOfRange { .. } => {
                Failure::invalid(e.to_string())
            }
            _ => Failure::numeric(e.to_string()),
        }
    }
}

pub struct Context {
    pub out: PathBuf,
    pub json: bool,
    pub svg: bool,
    pub seed: Option<u64>,
}

impl Context {
    fn new(cli_out: &Option<PathBuf>, cfg: Option<&RunConfig>, seed: Option<u64>) -> Result<Self, Failure> {
        let out = cli_out
            .clone()
            .or_else(|| cfg.and_then(|c| c.outputs.dir.as_ref().map(PathBuf::from)))
            .unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&out).map_err(|e| Failure::io(format!("{}: {e}", out.display())))?;
        let (json, svg) = cfg.map(|c| (c.outputs.json, c.outputs.svg)).unwrap_or((true, true));
        Ok(Context { out, json, svg, seed })
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::invalid("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::invalid(e.to_string()))?;
    }
    match &cli.command {
        Command::Solve { config } => {
            let cfg = RunConfig::load(config)?;
            commands::solve(&cfg, &Context::new(&cli.out, Some(&cfg), cli.seed)?)
        }
        Command::Regions { eigs, config } => {
            let cfg = config.as_deref().map(RunConfig::load).transpose()?;
            commands::regions(eigs, cfg.as_ref(), &Context::new(&cli.out, cfg.as_ref(), cli.seed)?)
        }
        Command::DtnCheck { config } => {
            let cfg = RunConfig::load(config)?;
            commands::dtn_check(&cfg, &Context::new(&cli.out, Some(&cfg), cli.seed)?)
        }
        Command::ParametrixCheck { config } => {
            let cfg = RunConfig::load(config)?;
            commands::parametrix_check(&cfg, &Context::new(&cli.out, Some(&cfg), cli.seed)?)
        }
        Command::Count { config } => {
            let cfg = RunConfig::load(config)?;
            commands::count(&cfg, &Context::new(&cli.out, Some(&cfg), cli.seed)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

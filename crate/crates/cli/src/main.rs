//! `dnaniso`: configuration-driven runs of the solver and its checks.
//!
//! Exit codes: 0 all requested checks passed, 1 a check failed, 2 invalid
//! input or failed precondition audit, 3 solver failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::output::RunDir;

#[derive(Debug)]
pub enum Failure {
    Check(String),
    Input(String),
    Solver(String),
}

impl Failure {
    pub fn from_core(e: dnaniso::Error) -> Self {
        use dnaniso::Error::*;
        match e {
            NonFinite(_) | InvalidParameter(_) | OutOfDomain { .. } | UnsupportedDimension(_)
            | Audit(_) | Expr(_) => Failure::Input(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Check(m) | Failure::Input(m) | Failure::Solver(m) => m,
        }
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Input(_) => 2,
            Failure::Solver(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "dnaniso", version, about = "Galerkin solver and verification runs for doubly nonlinear anisotropic equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve over the ε schedule and write trajectories and checks.
    Solve,
    /// Check the comparison principle for `[problem_v]`/`[problem_w]` or a
    /// seeded family.
    Compare,
    /// Sweep the elementary inequalities.
    Lemmas {
        #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 1.0, 2.0, 3.0])]
        alphas: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Mode-refinement study against a manufactured solution.
    Mms,
    /// Sample the structure conditions and comparison preconditions.
    Audit {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Compare => "compare",
            Command::Lemmas { .. } => "lemmas",
            Command::Mms => "mms",
            Command::Audit { .. } => "audit",
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Input(format!("--threads: {e}")))?;
    }
    let name = cli.command.name();
    let loaded = match (&cli.command, &cli.config) {
        (Command::Lemmas { .. }, None) => None,
        (_, Some(path)) => Some(config::load(path)?),
        (_, None) => return Err(Failure::Input(format!("{name} needs --config PATH"))),
    };
    let cfg = loaded.as_ref().map(|l| l.0.clone()).unwrap_or_default();
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(name));
    let mut meta = vec![
        ("tool".to_string(), format!("dnaniso {}", env!("CARGO_PKG_VERSION"))),
        ("command".to_string(), name.to_string()),
        ("seed".to_string(), cli.seed.to_string()),
    ];
    if let Some(path) = &cli.config {
        meta.push(("config".to_string(), path.display().to_string()));
    }
    let out = RunDir::create(&dir, meta, cli.verbose || cfg.output.verbose)?;
    if let Some((_, text)) = &loaded {
        out.echo_config(text)?;
    }

    match cli.command {
        Command::Solve => commands::solve(&cfg, &out),
        Command::Compare => commands::compare(&cfg, &out, cli.seed),
        Command::Lemmas { alphas, samples } => commands::lemmas(&alphas, samples, cli.seed, &out),
        Command::Mms => commands::mms(&cfg, &out),
        Command::Audit { samples } => commands::audit(&cfg, samples, cli.seed, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("dnaniso: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

//! `rdlab` experiment runner.

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::{InitialSection, MeshKind, MeshSection, ProblemKind, ProblemSection, Profile, RunConfig, SchemeSection, TimeSection};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

const AUDIT_FAILED: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "rdlab", version, about = "Residual distribution experiments")]
struct Cli {
    /// Exit with status 3 when an audit fails.
    #[arg(long, global = true)]
    strict: bool,
    /// Overrides the configured random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment described by a TOML file.
    Run { config: PathBuf },
    /// Upwind Burgers finite-volume lab.
    Burgers1d {
        #[arg(long, default_value = "cons")]
        scheme: String,
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        tend: f64,
        #[arg(long, default_value_t = 0.9)]
        cfl: f64,
        /// Snapshot every this many steps (0: first and last only).
        #[arg(long, default_value_t = 0)]
        every: usize,
        /// `riemann` (1 | 0 at x = 0.5 on [0, 2]) or `cosine` (periodic unit interval).
        #[arg(long, default_value = "riemann")]
        profile: String,
    },
    /// Recover finite-volume edge fluxes from a residual dump.
    Recover { dump: PathBuf },
    /// Audit a stored state; always exits 3 on failure.
    Audit {
        state: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
}

fn burgers_config(scheme: String, n: usize, tend: f64, cfl: f64, every: usize, profile: &str) -> Result<RunConfig, CliError> {
    let (profile, x1, periodic) = match profile {
        "riemann" => (Profile::Riemann, 2.0, false),
        "cosine" => (Profile::Cosine, 1.0, true),
        p => return Err(CliError::Config(format!("unknown profile `{p}`"))),
    };
    let cfg = RunConfig {
        problem: ProblemSection { kind: ProblemKind::Burgers1d, seed: 0 },
        law: Default::default(),
        mesh: MeshSection { kind: MeshKind::Interval, nx: n, x1, periodic, ..Default::default() },
        initial: InitialSection { profile, left: vec![1.0], right: vec![0.0], split: 0.5, ..Default::default() },
        scheme: SchemeSection { kind: scheme, ..Default::default() },
        time: TimeSection { t_end: tend, cfl, snapshot_every: every, ..Default::default() },
        corrections: Default::default(),
        audit: Default::default(),
        output: Default::default(),
    };
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    let out_or = |dir: &str| cli.out.clone().unwrap_or_else(|| PathBuf::from(dir));
    match cli.command {
        Command::Run { ref config } => {
            let text = std::fs::read_to_string(config)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config.display())))?;
            let mut cfg = RunConfig::parse(&text).map_err(CliError::Config)?;
            if let Some(s) = cli.seed {
                cfg.problem.seed = s;
            }
            run::run_config(&cfg, &out_or(&cfg.output.dir), "run")
        }
        Command::Burgers1d { ref scheme, n, tend, cfl, every, ref profile } => {
            let mut cfg = burgers_config(scheme.clone(), n, tend, cfl, every, profile)?;
            cfg.problem.seed = cli.seed.unwrap_or(0);
            run::run_config(&cfg, &out_or("out"), "burgers1d")
        }
        Command::Recover { ref dump } => run::recover(dump, &out_or("out"), cli.seed.unwrap_or(0)),
        Command::Audit { ref state, ref config } => run::audit(state, config, &out_or("out"), cli.seed),
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
    let strict = cli.strict || matches!(cli.command, Command::Audit { .. });
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) if strict => ExitCode::from(AUDIT_FAILED),
        Ok(false) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

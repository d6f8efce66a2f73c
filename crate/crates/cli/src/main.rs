mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use commands::Status;
use config::{Format, RunConfig};
use output::{Emitter, RunManifest};

/// Overrides the output directory of the config file (but not `--out`).
const OUT_ENV: &str = "CUSP_SOLITON_OUT";

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_RANGE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "cusp-soliton",
    version,
    about = "Reproducible runs for the cusped expanding soliton"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Time parameter; repeat to replace the configured t grid
    #[arg(long = "t", global = true, allow_hyphen_values = true)]
    t: Vec<f64>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Separatrix samples, isoclines and barrier certificates
    Separatrix,
    /// Curvature table and soliton-equation residuals
    Curvature,
    /// Ratio checks at both ends
    Asymptotics,
    /// Crossings, Ψ scans, threshold brackets and pointwise histories
    Evolve,
    /// Exact blow-up sequences at infinity
    Blowup,
    /// Every command into one directory
    All,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Separatrix => "separatrix",
            Command::Curvature => "curvature",
            Command::Asymptotics => "asymptotics",
            Command::Evolve => "evolve",
            Command::Blowup => "blowup",
            Command::All => "all",
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, config::ConfigError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        cfg.out_dir = PathBuf::from(dir);
    }
    if let Some(dir) = &cli.out {
        cfg.out_dir = dir.clone();
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if !cli.t.is_empty() {
        cfg.t_grid = cli.t.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cmd: Command, cfg: &RunConfig, em: &mut Emitter, quiet: bool) -> anyhow::Result<Status> {
    let say = |m: &str| {
        if !quiet {
            eprintln!("{m}");
        }
    };
    say("shooting separatrix");
    let sep = commands::shoot(cfg)?;
    let mut status = Status::Complete;
    let steps: &[Command] = match cmd {
        Command::All => &[
            Command::Separatrix,
            Command::Curvature,
            Command::Asymptotics,
            Command::Evolve,
            Command::Blowup,
        ],
        _ => std::slice::from_ref(&cmd),
    };
    for &step in steps {
        say(step.name());
        let s = match step {
            Command::Separatrix => commands::separatrix(cfg, &sep, em)?,
            Command::Curvature => commands::curvature(cfg, &sep, em)?,
            Command::Asymptotics => commands::asymptotics(cfg, &sep, em)?,
            Command::Evolve => commands::evolve(cfg, &sep, em)?,
            Command::Blowup => commands::blowup(&sep, em)?,
            Command::All => unreachable!(),
        };
        status = status.and(s);
    }
    Ok(status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let started = Instant::now();
    let mut em = match Emitter::new(&cfg.out_dir, cfg.format) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let result = run(cli.command, &cfg, &mut em, cli.quiet);
    let (status, code) = match &result {
        Ok(Status::Complete) => ("complete", ExitCode::SUCCESS),
        Ok(Status::RangeInsufficient) => ("range_insufficient", ExitCode::from(EXIT_RANGE)),
        Err(_) => ("numeric_failure", ExitCode::from(EXIT_NUMERIC)),
    };
    let manifest = RunManifest {
        command: cli.command.name(),
        config: cfg.snapshot(),
        library_version: cusp_soliton::VERSION,
        wall_time_s: started.elapsed().as_secs_f64(),
        status,
        files: em.files(),
    };
    let path = em.dir().join("manifest.json");
    let written = serde_json::to_string_pretty(&manifest)
        .map_err(anyhow::Error::from)
        .and_then(|s| Ok(std::fs::write(&path, s + "\n")?));
    if let Err(e) = written {
        eprintln!("cannot write {}: {e:#}", path.display());
        return ExitCode::from(EXIT_NUMERIC);
    }
    match result {
        Err(e) => eprintln!("error: {e:#}"),
        Ok(Status::RangeInsufficient) => {
            eprintln!("warning: probe radii exceed the computed range; see asymptotics.json")
        }
        Ok(Status::Complete) if !cli.quiet => {
            eprintln!("wrote {} files to {}", em.files().len(), em.dir().display())
        }
        Ok(Status::Complete) => {}
    }
    code
}

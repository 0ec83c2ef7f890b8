use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thinbeam_lab::{runs, ExperimentConfig, LabError, RawConfig, RunManifest};

#[derive(Parser)]
#[command(name = "thinbeam", version, about = "Thin elastic strips, their elastica limit and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stationary point of the strip energy at `strip.h`.
    SolveStrip(Common),
    /// The limit elastica.
    SolveElastica(Common),
    /// Strip solve at `strip.h` followed by the rotation/strain/stress diagnostics.
    Diagnose(Common),
    /// Sweep over `study.h` against the elastica limit.
    Converge(Common),
    /// Lipschitz truncation sweep over seeded rough fields, or of `truncation.input`.
    Truncate(Seeded),
    /// Structural checks of the stored-energy density.
    EnergyCheck(Seeded),
}

#[derive(Args)]
struct Common {
    /// Configuration file; defaults apply to absent keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Seeded {
    #[command(flatten)]
    common: Common,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(common: &Common, seed: Option<u64>) -> Result<(ExperimentConfig, PathBuf), LabError> {
    let mut raw = match &common.config {
        Some(p) => RawConfig::load(p)?,
        None => RawConfig::default(),
    };
    if let Some(s) = seed {
        raw.set("run.seed", s);
    }
    let cfg = ExperimentConfig::from_raw(&raw)?;
    let out = common
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| Path::new("out").to_path_buf());
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<RunManifest, LabError> {
    type Runner = fn(&ExperimentConfig, &Path) -> Result<RunManifest, LabError>;
    let (common, seed, runner): (&Common, Option<u64>, Runner) = match &cli.command {
        Command::SolveStrip(c) => (c, None, runs::run_solve_strip),
        Command::SolveElastica(c) => (c, None, runs::run_solve_elastica),
        Command::Diagnose(c) => (c, None, runs::run_diagnose),
        Command::Converge(c) => (c, None, runs::run_convergence),
        Command::Truncate(s) => (&s.common, s.seed, runs::run_truncation_demo),
        Command::EnergyCheck(s) => (&s.common, s.seed, runs::run_energy_check),
    };
    let (cfg, out) = load(common, seed)?;
    runner(&cfg, &out)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(m) => {
            for r in &m.runs {
                println!("{:<16} {:<7} {:>9.3}s  {}", r.name, r.status, r.seconds, r.detail);
            }
            match &m.failure {
                None => ExitCode::SUCCESS,
                Some(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

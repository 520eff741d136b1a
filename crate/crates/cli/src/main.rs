//! `gravicollapse <subcommand> --config <file> [--seed S] [--out DIR]`
//!
//! Exit status: 0 on success, 2 for configuration problems, 3 for numerical
//! or output failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gravicollapse::scenarios::{
    emit_report, parse_config, run_scenario, ScenarioError, ScenarioKind,
};

#[derive(Parser)]
#[command(
    name = "gravicollapse",
    version,
    about = "Gravity-related collapse simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Dump U(d) and its asymptotes.
    Kernel(Common),
    /// Sweep the decoherence time over balls and separations.
    Tg(Common),
    /// Schrödinger–Newton evolution.
    SneEvolve(Common),
    /// Schrödinger–Newton ground state.
    SneGround(Common),
    /// Relax into the frictional pointer state.
    FrsneRelax(Common),
    /// Deterministic master-equation evolution.
    Vnne(Common),
    /// Stochastic trajectory ensemble.
    Unravel(Common),
    /// Cat-state collapse experiment.
    Cat(Common),
    /// Pointer-state formation with an SNE comparison run.
    PointerRelax(Common),
    /// Unit system and characteristic scales.
    Units(Common),
}

impl Command {
    fn split(self) -> (ScenarioKind, Common) {
        match self {
            Command::Kernel(c) => (ScenarioKind::KernelDump, c),
            Command::Tg(c) => (ScenarioKind::TgSweep, c),
            Command::SneEvolve(c) => (ScenarioKind::SneEvolve, c),
            Command::SneGround(c) => (ScenarioKind::SneGround, c),
            Command::FrsneRelax(c) => (ScenarioKind::FrsneRelax, c),
            Command::Vnne(c) => (ScenarioKind::Vnne, c),
            Command::Unravel(c) => (ScenarioKind::UnravelEnsemble, c),
            Command::Cat(c) => (ScenarioKind::CatCollapse, c),
            Command::PointerRelax(c) => (ScenarioKind::PointerRelax, c),
            Command::Units(c) => (ScenarioKind::Units, c),
        }
    }
}

fn run(kind: ScenarioKind, args: Common) -> Result<(), ScenarioError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        ScenarioError::Config(format!("cannot read {}: {e}", args.config.display()))
    })?;
    let mut cfg = parse_config(&text)?;
    match cfg.scenario {
        Some(k) if k != kind => {
            return Err(ScenarioError::Config(format!(
                "config selects scenario `{}` but the subcommand runs `{}`",
                k.name(),
                kind.name()
            )))
        }
        _ => cfg.scenario = Some(kind),
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = args.out {
        cfg.output_dir = o.to_string_lossy().into_owned();
    }
    log::info!("running {} (config hash {})", kind.name(), cfg.hash());
    let report = run_scenario(&cfg)?;
    let dir = PathBuf::from(&cfg.output_dir);
    let written = emit_report(&report, &dir)?;
    log::info!("wrote {} files under {}", written.len(), dir.display());
    println!(
        "{}",
        serde_json::to_string_pretty(&report.metrics).expect("metrics serialise")
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let (kind, args) = Cli::parse().command.split();
    match run(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

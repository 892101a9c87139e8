use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use raman_core::model::ModelKind;

use raman_harness::config::{load_config, ConfigError, RunKind, ScenarioConfig};
use raman_harness::output::emit_outputs;
use raman_harness::run::{run_scenario, HarnessError};
use raman_harness::scenarios;

#[derive(Parser)]
#[command(name = "raman-sr", version, about = "Superradiant Raman scattering simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Photon number and collective spin of a single pulse.
    Pulse(RunArgs),
    /// A parameter sweep of pulse or steady-state metrics.
    Sweep(RunArgs),
    /// Steady state under incoherent pumping.
    Steady(RunArgs),
    /// Emission spectrum at the steady state.
    Spectrum(RunArgs),
    /// Symbolic equations and closure against exact density matrices.
    OracleCheck(RunArgs),
    /// Lists the shipped scenarios.
    ListScenarios,
}

#[derive(Args)]
struct RunArgs {
    /// Shipped scenario to start from.
    #[arg(long)]
    scenario: Option<String>,
    /// TOML file overriding the scenario.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Model, overriding scenario and file.
    #[arg(long)]
    model: Option<ModelKind>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps; all cores by default.
    #[arg(long)]
    threads: Option<usize>,
}

fn resolve(kind: RunKind, args: &RunArgs) -> Result<ScenarioConfig, ConfigError> {
    let base = match &args.scenario {
        Some(name) => scenarios::find(name).ok_or_else(|| ConfigError::UnknownScenario(name.clone()))?.config,
        None => ScenarioConfig::new(kind.name(), ModelKind::Full, kind),
    };
    let mut cfg = match &args.config {
        Some(path) => load_config(path, Some(&base))?,
        None => base,
    };
    if let Some(m) = args.model {
        cfg.model = m;
    }
    if cfg.kind != kind {
        return Err(ConfigError::Invalid(format!("scenario `{}` is a {} run, not {kind}", cfg.name, cfg.kind)));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(kind: RunKind, args: &RunArgs) -> ExitCode {
    let cfg = match resolve(kind, args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let start = Instant::now();
    let out = match run_scenario(&cfg) {
        Ok(o) => o,
        Err(HarnessError::Config(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let record = match emit_outputs(&args.out, &cfg, &out, start.elapsed().as_secs_f64()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    for f in &record.outputs {
        println!("{}/{} ({} rows, sha256 {})", args.out.display(), f.file, f.rows, f.sha256);
    }
    for f in &record.failures {
        eprintln!("point {} ({:e}) failed: {}", f.index, f.value, f.error);
    }
    if cfg.kind == RunKind::OracleCheck {
        for row in &out.tables[0].rows {
            println!("{}: {} (threshold {}) {}", row[0], row[1], row[2], if row[3] == "true" { "pass" } else { "FAIL" });
        }
    }
    if record.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Pulse(a) => (RunKind::Pulse, a),
        Command::Sweep(a) => (RunKind::Sweep, a),
        Command::Steady(a) => (RunKind::Steady, a),
        Command::Spectrum(a) => (RunKind::Spectrum, a),
        Command::OracleCheck(a) => (RunKind::OracleCheck, a),
        Command::ListScenarios => {
            for s in scenarios::all() {
                println!("{:<6} {:<9} {:<13} {}", s.config.name, s.config.model, s.config.kind, s.description);
            }
            return ExitCode::SUCCESS;
        }
    };
    execute(kind, args)
}

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use wqnet_cli::config::{load_config, preset, preset_names, ExperimentKind, Mode, RunConfig};
use wqnet_cli::runner::execute;

/// Simulator for atom networks coupled through a waveguide: delay-delta
/// noise kernels, Itô tables, Markovianity classification, master-equation
/// integration and homodyne filtering trajectories.
#[derive(Parser)]
#[command(name = "wqnet", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the network as Markovian or non-Markovian, with a witness.
    Classify(RunArgs),
    /// Print channel kernels, commutators, the Itô table and coefficients.
    Kernels(RunArgs),
    /// Integrate the unconditional master equation; writes a CSV series.
    Simulate(RunArgs),
    /// Run homodyne-conditioned trajectories; writes ensemble CSV tables.
    Filter(RunArgs),
    /// Check multi-point vs single-point coupling equivalence.
    Equivalence(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Built-in scenario: fig2a, fig2b, fig3a, fig3b, single-decay.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// TOML configuration file (see README for the schema).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for CSV/JSON outputs; omit to print only.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Base RNG seed for trajectory ensembles.
    #[arg(long)]
    seed: Option<u64>,
    /// Ensemble size M.
    #[arg(long)]
    trajectories: Option<usize>,
    /// Grid step, μs.
    #[arg(long)]
    dt: Option<f64>,
    /// End time, μs.
    #[arg(long)]
    t_end: Option<f64>,
    /// Worker threads for ensembles.
    #[arg(long)]
    workers: Option<usize>,
    /// Coefficient handling: delayed terms switch on at their delay
    /// (activated) or are active from t = 0 (instant-on).
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Split the coherent exchange into the Hamiltonian explicitly.
    #[arg(long)]
    exchange: bool,
    /// Reject filter steps whose minimum eigenvalue dips below -1e-3.
    #[arg(long)]
    strict_positivity: bool,
    /// Also write one CSV per trajectory (filter runs).
    #[arg(long)]
    emit_trajectories: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Activated,
    InstantOn,
}

fn build_config(args: &RunArgs, experiment: ExperimentKind) -> Result<(RunConfig, String)> {
    let (mut config, label) = match (&args.preset, &args.config) {
        (Some(name), None) => {
            let p = preset(name)?;
            (p.config, p.name.to_string())
        }
        (None, Some(path)) => {
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".to_string());
            (load_config(path)?, label)
        }
        (None, None) => {
            bail!("pass --preset <name> or --config <file>; presets: {}", preset_names().join(", "))
        }
        (Some(_), Some(_)) => unreachable!("clap forbids both"),
    };
    config.experiment = experiment;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(m) = args.trajectories {
        config.trajectories = m;
    }
    if let Some(dt) = args.dt {
        config.dt = dt;
    }
    if let Some(t_end) = args.t_end {
        config.t_end = t_end;
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }
    if let Some(mode) = args.mode {
        config.mode = match mode {
            ModeArg::Activated => Mode::Activated,
            ModeArg::InstantOn => Mode::InstantOn,
        };
    }
    if args.exchange {
        config.exchange = true;
    }
    if args.strict_positivity {
        config.strict_positivity = true;
    }
    Ok((config, label))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (args, experiment) = match &cli.command {
        Command::Classify(a) => (a, ExperimentKind::Classify),
        Command::Kernels(a) => (a, ExperimentKind::Kernels),
        Command::Simulate(a) => (a, ExperimentKind::Simulate),
        Command::Filter(a) => (a, ExperimentKind::Filter),
        Command::Equivalence(a) => (a, ExperimentKind::Equivalence),
    };
    let (config, label) = build_config(args, experiment)?;
    let output = execute(&config, args.out_dir.as_deref(), &label, args.emit_trajectories)?;
    print!("{}", output.text);
    for file in &output.files {
        eprintln!("wrote {}", file.display());
    }
    Ok(())
}

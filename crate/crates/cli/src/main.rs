use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use stabheap::analysis::ReportDoc;
use stabheap::experiments::{self, ExperimentConfig, Implementation, Predicate, Report};
use stabheap::fault::{generate, GenMode, StateGenSpec};
use stabheap::history::StepBound;
use stabheap::{check_legitimacy, snapshot, BalanceParams};

#[derive(Parser)]
#[command(
    name = "stabheap",
    about = "Experiments on a self-stabilizing binary heap"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random operations from an empty heap against a sorted multiset.
    Differential(Common),
    /// Run one of the four convergence experiments.
    Lemma {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
        which: u8,
        #[command(flatten)]
        common: Common,
    },
    /// Record histories from arbitrary states and check a predicate.
    History {
        predicate: PredicateArg,
        #[arg(long = "impl", value_enum, default_value = "stabilizing")]
        implementation: ImplArg,
        #[command(flatten)]
        common: Common,
    },
    /// Largest visit counts per operation across capacities.
    Steps {
        #[arg(long, value_delimiter = ',', default_value = "15,255,4095,65535")]
        capacities: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
    #[command(subcommand)]
    Snapshot(SnapshotCommand),
}

#[derive(Subcommand)]
enum SnapshotCommand {
    /// Generate a state and print its snapshot.
    Dump {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 15)]
        capacity: usize,
        #[arg(long, value_enum, default_value = "arbitrary")]
        mode: ModeArg,
        /// Item count for `legitimate` and `corrupt` modes.
        #[arg(long, default_value_t = 0)]
        items: usize,
        /// Random field edits for `corrupt` mode.
        #[arg(long, default_value_t = 1)]
        faults: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Read a snapshot and print its analysis report.
    Load {
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PredicateArg {
    Availability,
    Stabilization,
}

#[derive(Clone, Copy, ValueEnum)]
enum ImplArg {
    Stabilizing,
    AlwaysFail,
    Reset,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Legitimate,
    Arbitrary,
    Corrupt,
}

#[derive(Clone, Copy, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    #[default]
    Csv,
    Text,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    capacity: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    ops: Option<usize>,
    /// Probability that an operation is an insert.
    #[arg(long)]
    op_mix: Option<f64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file with any of the above plus `params` and `bound`.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Contents of a `--config` file. Command-line flags win over it.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    seed: Option<u64>,
    capacity: Option<usize>,
    trials: Option<usize>,
    ops: Option<usize>,
    op_mix: Option<f64>,
    params: Option<BalanceParams>,
    bound: Option<StepBound>,
    format: Option<Format>,
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> anyhow::Result<(ExperimentConfig, Format, Option<PathBuf>)> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                toml::from_str::<ConfigFile>(&text)
                    .with_context(|| format!("parsing {}", path.display()))?
            }
            None => ConfigFile::default(),
        };
        let d = ExperimentConfig::default();
        let cfg = ExperimentConfig {
            seed: self.seed.or(file.seed).unwrap_or(d.seed),
            capacity: self.capacity.or(file.capacity).unwrap_or(d.capacity),
            trials: self.trials.or(file.trials).unwrap_or(d.trials),
            ops: self.ops.or(file.ops).unwrap_or(d.ops),
            insert_prob: self.op_mix.or(file.op_mix).unwrap_or(d.insert_prob),
            params: file.params.unwrap_or(d.params),
            bound: file.bound.unwrap_or(d.bound),
        };
        if cfg.capacity == 0 {
            bail!("capacity must be positive");
        }
        if !(0.0..=1.0).contains(&cfg.insert_prob) {
            bail!("op mix must be a probability, got {}", cfg.insert_prob);
        }
        let format = self.format.or(file.format).unwrap_or_default();
        Ok((cfg, format, self.out.clone().or(file.out)))
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_report(
    common: &Common,
    run: impl FnOnce(&ExperimentConfig) -> Report,
) -> anyhow::Result<bool> {
    let (cfg, format, out) = common.resolve()?;
    let report = run(&cfg);
    let text = match format {
        Format::Csv => report.to_csv(),
        Format::Text => report.to_text(),
    };
    emit(&text, out.as_ref())?;
    if !report.passed() {
        eprintln!("{}: {} failure(s)", report.name, report.failures);
    }
    Ok(report.passed())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Differential(common) => run_report(&common, experiments::differential),
        Command::Lemma { which, common } => run_report(&common, |cfg| match which {
            1 => experiments::single_op_contract(cfg),
            2 => experiments::scan_repair(cfg),
            3 => experiments::field_repair(cfg),
            _ => experiments::convergence(cfg),
        }),
        Command::History {
            predicate,
            implementation,
            common,
        } => {
            let predicate = match predicate {
                PredicateArg::Availability => Predicate::Availability,
                PredicateArg::Stabilization => Predicate::Stabilization,
            };
            let implementation = match implementation {
                ImplArg::Stabilizing => Implementation::Stabilizing,
                ImplArg::AlwaysFail => Implementation::AlwaysFail,
                ImplArg::Reset => Implementation::Reset,
            };
            run_report(&common, |cfg| {
                experiments::history_report(cfg, predicate, implementation)
            })
        }
        Command::Steps { capacities, common } => {
            if capacities.contains(&0) {
                bail!("capacities must be positive");
            }
            run_report(&common, |cfg| experiments::steps_report(cfg, &capacities))
        }
        Command::Snapshot(SnapshotCommand::Dump {
            seed,
            capacity,
            mode,
            items,
            faults,
            out,
        }) => {
            let mode = match mode {
                ModeArg::Legitimate => GenMode::Legitimate { items },
                ModeArg::Arbitrary => GenMode::Arbitrary,
                ModeArg::Corrupt => GenMode::CorruptLegitimate { items, faults },
            };
            let state = generate(&StateGenSpec {
                seed,
                capacity,
                mode,
            })?;
            emit(&(snapshot::snapshot_pretty(&state) + "\n"), out.as_ref())?;
            Ok(true)
        }
        Command::Snapshot(SnapshotCommand::Load { path, out }) => {
            let text =
                fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let state = snapshot::restore(&text)?;
            let report = check_legitimacy(&state, &BalanceParams::default());
            let doc = serde_json::to_string_pretty(&ReportDoc::from(&report))?;
            emit(&(doc + "\n"), out.as_ref())?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use gsm_gas::bench::ratio::{parse_range, ratio_table, write_ratio_csv};
use gsm_gas::bench::{run_experiment, validate, Backend, ExperimentConfig, Level};

#[derive(Parser)]
#[command(
    name = "gsm-gas",
    version,
    about = "Grover adaptive search for GSM detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Paper,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Structured,
    Statevector,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo detection experiment.
    Run {
        /// Key-value configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Start from a named preset instead of the defaults.
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        /// Output directory for trace.csv, trials.csv and summary.json.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Tabulate the Grover to classical query-count ratio.
    Ratio {
        #[arg(long, default_value = "16")]
        ntx: usize,
        /// Active antenna counts, e.g. `1..8` or `1,2,4`.
        #[arg(long, default_value = "1..8")]
        k: String,
        /// Constellation sizes.
        #[arg(long, default_value = "2,4,16")]
        l: String,
        /// CSV file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in self checks.
    Validate {
        #[arg(long, value_enum, default_value = "fast")]
        level: LevelArg,
    },
}

enum Failure {
    Validation,
    Config(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(e)
    }
}

fn build_config(
    config: Option<PathBuf>,
    preset: Option<Preset>,
    seed: Option<u64>,
    trials: Option<usize>,
    backend: Option<BackendArg>,
) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match (&config, preset) {
        (Some(path), _) => ExperimentConfig::from_file(path)
            .with_context(|| format!("reading {}", path.display()))?,
        (None, Some(Preset::Paper)) => ExperimentConfig::paper(),
        (None, None) => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(b) = backend {
        cfg.backend = match b {
            BackendArg::Structured => Backend::Structured,
            BackendArg::Statevector => Backend::Statevector,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            config,
            preset,
            seed,
            trials,
            backend,
            out,
        } => {
            let cfg = build_config(config, preset, seed, trials, backend)?;
            let summary = run_experiment(&cfg).map_err(anyhow::Error::from)?;
            summary
                .write_outputs(&out)
                .with_context(|| format!("writing to {}", out.display()))?;
            let a = &summary.aggregates;
            println!(
                "{} trials, optimum reached in {}, decision matches in {}",
                a.trials, a.optimum_found, a.decision_matches
            );
            if let (Some(q), Some(c)) = (a.mean_qcqd_to_optimum, a.mean_qccd_to_optimum) {
                println!("mean QCQD to optimum {q:.1}, mean QCCD to optimum {c:.2}");
            }
            println!("outputs in {}", out.display());
        }
        Command::Ratio { ntx, k, l, out } => {
            let ks = parse_range(&k).map_err(anyhow::Error::from)?;
            let ls = parse_range(&l).map_err(anyhow::Error::from)?;
            let rows = ratio_table(ntx, &ks, &ls).map_err(anyhow::Error::from)?;
            let written = match out {
                Some(path) => {
                    let mut w = BufWriter::new(
                        File::create(&path)
                            .with_context(|| format!("creating {}", path.display()))?,
                    );
                    write_ratio_csv(&mut w, &rows).and_then(|_| w.flush())
                }
                None => write_ratio_csv(&mut std::io::stdout().lock(), &rows),
            };
            written.context("writing ratio table")?;
        }
        Command::Validate { level } => {
            let level = match level {
                LevelArg::Fast => Level::Fast,
                LevelArg::Full => Level::Full,
            };
            let report = validate(level).map_err(anyhow::Error::from)?;
            print!("{report}");
            if !report.passed() {
                return Err(Failure::Validation);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mfbandit::config::SeedRange;
use mfbandit::harness::{run_experiment, summarize};
use mfbandit::{ExperimentConfig, Method, Preset};
use mfbandit_cli::{diagnose, final_table, read_runs, run_rows, summarize_rows, write_outputs, write_paired, write_summary};

#[derive(Parser)]
#[command(name = "mfb", version, about = "Two-fidelity bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// TOML experiment file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Registered preset name.
    #[arg(long)]
    preset: Option<String>,
}

impl Source {
    fn load(&self) -> Result<ExperimentConfig> {
        match (&self.config, &self.preset) {
            (Some(path), _) => {
                ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))
            }
            (None, Some(name)) => Ok(name.parse::<Preset>()?.config()),
            (None, None) => bail!("one of --config or --preset is required"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every (seed, method) pair and write runs.csv, summary.csv, paired.csv.
    Run {
        #[command(flatten)]
        source: Source,
        /// Seed range `a..b` (end exclusive).
        #[arg(long)]
        seeds: Option<SeedRange>,
        /// Comma-separated method names.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = all cores); MFB_JOBS takes precedence.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Show a registered preset.
    Preset {
        name: Option<String>,
        /// Print the preset as TOML.
        #[arg(long)]
        print: bool,
    },
    /// Report arm classes, bounds and certification costs for one instance.
    Diagnose {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Dyadic resolutions in the certification-cost table.
        #[arg(long, default_value_t = 6)]
        phases: u32,
    },
    /// Recompute summary.csv and paired.csv from a runs.csv.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        /// Output directory; defaults to the directory of the input.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { source, seeds, methods, out, jobs } => {
            let mut config = source.load()?;
            if let Some(s) = seeds {
                config.run.seeds = s;
            }
            if let Some(m) = methods {
                config.run.methods = m;
            }
            if let Some(o) = out {
                config.run.out = o;
            }
            if let Some(j) = jobs {
                config.run.jobs = j;
            }
            if let Ok(j) = std::env::var("MFB_JOBS") {
                config.run.jobs = j.trim().parse().context("MFB_JOBS must be a non-negative integer")?;
            }
            config.validate()?;
            let records = run_experiment(&config)?;
            let stats = summarize(&records);
            let files = write_outputs(&config.run.out, &run_rows(&records), &stats)?;
            print!("{}", final_table(&stats));
            log::info!("wrote {}", files.runs.display());
        }
        Command::Preset { name, print } => match name {
            None => {
                for p in Preset::ALL {
                    println!("{}", p);
                }
            }
            Some(name) => {
                let config = name.parse::<Preset>()?.config();
                if print {
                    print!("{}", config.to_toml_string()?);
                } else {
                    println!(
                        "{}: {} arms, costs ({}, {}), gamma {}, S0 {}, budget {}, seeds {}",
                        name,
                        config.num_arms(),
                        config.costs.low,
                        config.costs.high,
                        config.algorithm.gamma,
                        config.algorithm.s0,
                        config.budget.total,
                        config.run.seeds
                    );
                }
            }
        },
        Command::Diagnose { source, seed, phases } => {
            let config = source.load()?;
            print!("{}", diagnose(&config, seed, phases)?);
        }
        Command::Summarize { input, out } => {
            let rows = read_runs(&input)?;
            let stats = summarize_rows(&rows);
            let dir = out
                .or_else(|| input.parent().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir)?;
            write_summary(&dir.join("summary.csv"), &stats)?;
            write_paired(&dir.join("paired.csv"), &stats)?;
            print!("{}", final_table(&stats));
        }
    }
    Ok(())
}

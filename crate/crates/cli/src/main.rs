use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use felsim_core::harness::{runner::run_scenario_seed, scenarios, write_csv};
use felsim_core::{HarnessError, MetricsTable, ScenarioConfig};
use log::{error, info};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "felsim", version, about = "Fog-enabled edge learning over CCN: scenario simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every arm of a scenario config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "felsim-out")]
        out: PathBuf,
        /// Worker threads for independent replications.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run a built-in scenario over seeds 1..=n.
    Scenario {
        #[arg(value_enum)]
        which: Which,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value = "felsim-out")]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Parse and check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    A,
    B,
    C,
}

fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FELSIM_LOG", "error"))
        .target(env_logger::Target::Stderr)
        .format_timestamp(None)
        .init();
}

fn run_seeds(cfg: &ScenarioConfig, seeds: &[u64], jobs: Option<usize>) -> Result<MetricsTable, HarnessError> {
    let work = || {
        seeds
            .par_iter()
            .map(|&s| {
                info!("scenario {} seed {s}: start", cfg.name);
                let t = run_scenario_seed(cfg, s);
                info!("scenario {} seed {s}: done", cfg.name);
                t
            })
            .collect::<Result<Vec<_>, _>>()
    };
    let tables = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(work)?,
        None => work()?,
    };
    let mut merged = MetricsTable::default();
    for t in tables {
        merged.extend(t);
    }
    merged.sort();
    Ok(merged)
}

fn summarize(table: &MetricsTable) {
    let mut by_scheme: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for r in &table.rows {
        let e = by_scheme.entry(r.scheme.as_str()).or_default();
        e.0 += r.latency_ms;
        e.1 += 1;
    }
    for (scheme, (sum, n)) in by_scheme {
        println!("{scheme}: {n} requests, mean latency {:.3} ms", sum as f64 / n as f64);
    }
}

fn emit(table: &MetricsTable, out: &Path) -> Result<(), ExitCode> {
    if let Err(e) = write_csv(table, out) {
        error!("cannot write {}: {e}", out.display());
        return Err(ExitCode::from(1));
    }
    summarize(table);
    println!("wrote {}", out.display());
    Ok(())
}

fn fail(e: HarnessError) -> ExitCode {
    error!("{e}");
    eprintln!("felsim: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match ScenarioConfig::from_file(&config) {
            Ok(cfg) => {
                println!(
                    "{}: ok ({} requesters, {} arms)",
                    config.display(),
                    cfg.requesters.len(),
                    cfg.arms.len()
                );
                ExitCode::SUCCESS
            }
            Err(e) => fail(e.into()),
        },
        Command::Run {
            config,
            seed,
            out,
            jobs,
        } => {
            let mut cfg = match ScenarioConfig::from_file(&config) {
                Ok(c) => c,
                Err(e) => return fail(e.into()),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            match run_seeds(&cfg, &[cfg.seed], jobs) {
                Ok(t) => emit(&t, &out).err().unwrap_or(ExitCode::SUCCESS),
                Err(e) => fail(e),
            }
        }
        Command::Scenario {
            which,
            seeds,
            out,
            jobs,
        } => {
            let build = match which {
                Which::A => scenarios::scenario_a,
                Which::B => scenarios::scenario_b,
                Which::C => scenarios::scenario_c,
            };
            let cfg = build(1);
            let list: Vec<u64> = (1..=seeds).collect();
            match run_seeds(&cfg, &list, jobs) {
                Ok(t) => emit(&t, &out).err().unwrap_or(ExitCode::SUCCESS),
                Err(e) => fail(e),
            }
        }
    }
}

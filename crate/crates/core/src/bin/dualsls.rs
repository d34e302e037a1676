use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dualsls::harness::{self, ExperimentConfig};
use dualsls::Error;

#[derive(Parser)]
#[command(name = "dualsls", version, about = "Closed-loop identification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo study described by a config file or preset name.
    Run {
        #[arg(long)]
        config: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Median errors against data length.
    Sweep {
        #[arg(long)]
        config: String,
        #[arg(long, value_delimiter = ',', required = true)]
        lengths: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Five-number summaries of a results file.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// List built-in configurations, or print one as TOML.
    Presets {
        #[arg(long)]
        show: Option<String>,
    },
}

fn load(source: &str) -> Result<ExperimentConfig, Error> {
    match harness::preset(source) {
        Some(c) if !std::path::Path::new(source).exists() => Ok(c),
        _ => ExperimentConfig::load(source.as_ref()),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::LengthTooShort { .. } => 2,
        Error::UnstableLoop { .. } | Error::IllPosedLoop | Error::UnstableNoiseFilter => 3,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Run { config, trials, seed, out } => {
            let mut cfg = load(&config)?;
            if let Some(t) = trials {
                cfg.estimation.trials = t;
            }
            if let Some(s) = seed {
                cfg.estimation.seed = s;
            }
            let rows = harness::run_monte_carlo(&cfg)?;
            let out = out.or(cfg.output.results.clone()).unwrap_or_else(|| "results.csv".into());
            harness::write_results(&rows, &out)?;
            let mut failures: BTreeMap<(&str, &str, &str), usize> = BTreeMap::new();
            for r in rows.iter().filter(|r| r.failed()) {
                let msg = r.error.as_deref().unwrap_or("failed");
                *failures.entry((r.method.as_str(), r.nominal.as_str(), msg)).or_default() += 1;
            }
            for ((method, nominal, msg), n) in &failures {
                eprintln!("{method}/{nominal}: {n} failed: {msg}");
            }
            let failed: usize = failures.values().sum();
            eprintln!("wrote {} rows to {} ({failed} failed)", rows.len(), out.display());
            Ok(if failed == 0 { 0 } else { 4 })
        }
        Command::Sweep { config, lengths, out, trials } => {
            let mut cfg = load(&config)?;
            if let Some(t) = trials {
                cfg.estimation.trials = t;
            }
            let rows = harness::convergence_sweep(&cfg, &lengths)?;
            harness::write_sweep(&rows, &out)?;
            eprintln!("wrote {} rows to {}", rows.len(), out.display());
            Ok(if rows.iter().any(|r| r.failures > 0) { 4 } else { 0 })
        }
        Command::Summarize { input, out } => {
            let stats = harness::summarize(&input, &out)?;
            for s in &stats {
                println!(
                    "{:<11} {:<13} median err1 {:>12.4} err2 {:>12.4} stable {}/{}",
                    s.method, s.nominal, s.err1.median, s.err2.median, s.stable, s.trials
                );
            }
            Ok(0)
        }
        Command::Presets { show } => {
            match show {
                Some(name) => {
                    let cfg = harness::preset(&name).ok_or_else(|| Error::Config(format!("no preset `{name}`")))?;
                    print!("{}", cfg.to_toml_string()?);
                }
                None => {
                    for p in harness::presets() {
                        println!("{:<18} {}", p.name, p.description);
                    }
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

//! A short Monte Carlo study on the benchmark preset with five-number
//! summaries per method and nominal plant.

use dualsls::harness::{preset, run_monte_carlo, summarize_rows, write_results};
use dualsls::Result;

fn main() -> Result<()> {
    let mut config = preset("benchmark").expect("built-in preset");
    config.estimation.trials = 10;
    let rows = run_monte_carlo(&config)?;
    println!("{} rows from {} trials", rows.len(), config.estimation.trials);

    println!("{:<11} {:<13} {:>6} {:>12} {:>12} {:>8}", "method", "nominal", "failed", "med err1", "med err2", "stable");
    for s in summarize_rows(&rows) {
        println!(
            "{:<11} {:<13} {:>6} {:>12.1} {:>12.1} {:>5}/{}",
            s.method, s.nominal, s.failures, s.err1.median, s.err2.median, s.stable, s.trials
        );
    }

    let path = std::env::temp_dir().join("dualsls-example-results.csv");
    write_results(&rows, &path)?;
    println!("results written to {}", path.display());
    Ok(())
}

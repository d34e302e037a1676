//! Median plant error against data length.

use dualsls::harness::{convergence_sweep, preset};
use dualsls::Result;

fn main() -> Result<()> {
    let mut config = preset("benchmark").expect("built-in preset");
    config.estimation.trials = 10;
    let rows = convergence_sweep(&config, &[511, 1022, 2555, 5110, 10220])?;
    println!("{:>6} {:<11} {:<10} {:>12}", "length", "method", "nominal", "median err1");
    for r in rows.iter().filter(|r| r.nominal == "zero") {
        println!("{:>6} {:<11} {:<10} {:>12.1}", r.length, r.method, r.nominal, r.median_err1);
    }
    Ok(())
}

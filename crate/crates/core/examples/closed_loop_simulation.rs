//! Simulates the benchmark loop once, checks it against the state-space
//! simulator and writes the dataset with its JSON sidecar.

use dualsls::closed_loop::{simulate_loop, simulate_loop_state_space, validate_loop};
use dualsls::harness::{preset, PURPOSE_PRIMARY};
use dualsls::Result;

fn main() -> Result<()> {
    let config = preset("benchmark").expect("built-in preset");
    let loop_config = config.loop_config(0, PURPOSE_PRIMARY)?;

    let report = validate_loop(&loop_config)?;
    println!("characteristic polynomial: {:?}", report.characteristic.coeffs());
    println!("closed-loop spectral radius: {:.4}", report.stability.spectral_radius());

    let data = simulate_loop(&loop_config)?;
    let check = simulate_loop_state_space(&loop_config)?;
    let gap = data
        .y
        .samples()
        .iter()
        .zip(check.y.samples())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("{} samples, dataset hash {}", data.len(), data.hash());
    println!("filtering vs state-space simulation, max |dy| = {gap:.2e}");
    println!("y variance {:.2}, ubar variance {:.2}", data.y.variance(), data.ubar.variance());

    let dir = std::env::temp_dir().join("dualsls-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("benchmark_trial0.csv");
    data.write(&path, &loop_config)?;
    println!("wrote {0} and {0}.json", path.display());
    Ok(())
}

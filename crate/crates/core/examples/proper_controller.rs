//! Identification under a controller with direct feedthrough, and how the
//! FIR horizon limits accuracy when the closed loop decays slowly.

use dualsls::closed_loop::simulate_loop;
use dualsls::estimator::{estimate_dual_params, recover_plant_freqresp};
use dualsls::harness::{preset, PURPOSE_PRIMARY};
use dualsls::metrics::freq_grid;
use dualsls::Result;

fn main() -> Result<()> {
    let mut config = preset("benchmark_proper").expect("built-in preset");
    config.excitation.sigma = 0.0;
    let g = config.plant_tf()?;
    let k = config.controller_tf()?;
    println!("controller feedthrough D_k = {}", k.feedthrough());
    let data = simulate_loop(&config.loop_config(0, PURPOSE_PRIMARY)?)?;
    let grid = freq_grid(512)?;

    for horizon in [15, 25, 40, 60] {
        let est = estimate_dual_params(&data, &k.to_ss()?, horizon)?;
        let resp = recover_plant_freqresp(&est, &grid)?;
        let mut worst: f64 = 0.0;
        for (w, v) in grid.iter().zip(resp.scalars()) {
            let truth = g.eval_unit(*w)?;
            worst = worst.max((v - truth).norm() / truth.norm());
        }
        println!("T = {horizon:>2}: max relative error {worst:.2e}");
    }
    Ok(())
}

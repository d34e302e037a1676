//! Estimates with two similar controller realizations give the same plant.

use dualsls::closed_loop::simulate_loop;
use dualsls::estimator::{estimate_dual_params, expected_param_transform, transform_realization};
use dualsls::harness::{preset, PURPOSE_PRIMARY};
use dualsls::subspace::Block;
use dualsls::Result;
use nalgebra::DMatrix;

fn main() -> Result<()> {
    let config = preset("benchmark").expect("built-in preset");
    let k = config.controller_tf()?.to_ss()?;
    let data = simulate_loop(&config.loop_config(0, PURPOSE_PRIMARY)?)?;

    let t = DMatrix::from_row_slice(2, 2, &[1.3, -0.4, 0.7, 0.9]);
    let (k_t, cond) = transform_realization(&k, &t)?;
    println!("similarity transform condition number {cond:.2}");

    let base = estimate_dual_params(&data, &k, 15)?;
    let moved = estimate_dual_params(&data, &k_t, 15)?;
    let mapped = expected_param_transform(&moved.params, &t)?;

    let l_gap = base
        .params
        .l_scalars()
        .iter()
        .zip(moved.params.l_scalars())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let r_gap = (1..=16)
        .map(|d| (mapped.tap(Block::R, d).unwrap() - base.params.tap(Block::R, d).unwrap()).amax())
        .fold(0.0, f64::max);
    println!("max |L - L'| = {l_gap:.2e}");
    println!("max |R - T R' T^-1| = {r_gap:.2e}");
    Ok(())
}

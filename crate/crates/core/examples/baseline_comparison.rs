//! Dual-Youla and coprime-factor baselines next to the dual system-level
//! estimate on one shared dataset.

use dualsls::baselines::{coprime_estimate, coprime_factorize, dual_youla_estimate, Subject};
use dualsls::closed_loop::simulate_loop;
use dualsls::estimator::estimate_dual_params;
use dualsls::harness::{preset, PURPOSE_PRIMARY};
use dualsls::lti::{Evaluable, RationalTF};
use dualsls::metrics::{err1, err2, freq_grid};
use dualsls::Result;

fn report(name: &str, g: &RationalTF, k: &RationalTF, ghat: &impl Evaluable, grid: &[f64]) -> Result<()> {
    println!("  {name:<12} err1 {:>10.2}  err2 {:>10.2}", err1(g, ghat, grid)?, err2(g, ghat, k, grid)?);
    Ok(())
}

fn main() -> Result<()> {
    let config = preset("benchmark").expect("built-in preset");
    let g = config.plant_tf()?;
    let k = config.controller_tf()?;
    let grid = freq_grid(config.grid_size())?;
    let data = simulate_loop(&config.loop_config(0, PURPOSE_PRIMARY)?)?;
    let horizon = config.estimation.horizon;
    let k_factors = coprime_factorize(&k, Subject::Controller)?;

    let dslp = estimate_dual_params(&data, &k.to_ss()?, horizon)?;
    let g0 = RationalTF::zero();
    let g0_factors = coprime_factorize(&g0, Subject::Plant)?;
    let dy = dual_youla_estimate(&data, &k_factors, &g0_factors, horizon)?;
    let cp = coprime_estimate(&data, &k, &g0_factors, horizon)?;

    println!("nominal G0 = 0, T = {horizon}, {} samples", data.len());
    report("dslp", &g, &k, &dslp, &grid)?;
    report("dual_youla", &g, &k, &dy, &grid)?;
    report("coprime", &g, &k, &cp, &grid)?;

    let g0 = RationalTF::from_descending(&[-1.0], &[1.0, 0.5])?;
    let g0_factors = coprime_factorize(&g0, Subject::Plant)?;
    println!("nominal G0 = -1/(z + 0.5):");
    match dual_youla_estimate(&data, &k_factors, &g0_factors, horizon) {
        Ok(est) => report("dual_youla", &g, &k, &est, &grid)?,
        Err(e) => println!("  dual_youla   rejected: {e}"),
    }
    match coprime_estimate(&data, &k, &g0_factors, horizon) {
        Ok(est) => report("coprime", &g, &k, &est, &grid)?,
        Err(e) => println!("  coprime      rejected: {e}"),
    }
    Ok(())
}

//! Polynomials, transfer functions, state-space realizations and simulation
//! for the benchmark plant.

use dualsls::lti::{Polynomial, RationalTF};
use dualsls::Result;

fn main() -> Result<()> {
    let den = Polynomial::from_descending(&[1.0, -1.6, 0.89]);
    let s_den = &den * &Polynomial::from_descending(&[1.0, -0.75]);
    println!("(z^2 - 1.6z + 0.89)(z - 0.75) ascending coeffs: {:?}", s_den.coeffs());
    for root in s_den.roots()? {
        println!("  root {:.4} {:+.4}j  |z| = {:.4}", root.re, root.im, root.norm());
    }

    let g = RationalTF::from_descending(&[1.0, 0.0, 0.0], &[1.0, -1.6, 0.89])?;
    let stability = g.is_stable()?;
    println!("G stable: {} (spectral radius {:.4})", stability.stable, stability.spectral_radius());

    for omega in [0.0, 0.5, std::f64::consts::PI] {
        let v = g.eval_unit(omega)?;
        println!("G(e^j{omega:.2}) = {:.4} {:+.4}j", v.re, v.im);
    }

    let ss = g.to_ss()?;
    println!("realization: {} states, D = {}", ss.n_states(), ss.d[(0, 0)]);
    let step = vec![1.0; 12];
    let by_tf = g.simulate(&step)?;
    let by_ss = ss.simulate_siso(&step)?;
    let gap = by_tf.iter().zip(&by_ss).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("step response (first 6): {:?}", &by_tf[..6]);
    println!("transfer function vs state space, max gap {gap:.2e}");

    let k = RationalTF::from_descending(&[-1.0, 0.8], &[1.0, 0.0, 0.0])?;
    let lk = g.feedback(&k)?;
    println!("(1 - GK)^-1 G impulse taps: {:?}", lk.impulse_response(6)?);
    Ok(())
}

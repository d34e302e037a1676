//! The affine subspace of FIR dual parameters for the benchmark controller:
//! feasibility, the exact closed-loop responses and constraint residuals.

use dualsls::lti::RationalTF;
use dualsls::subspace::{build_affine_constraints, check_feasibility, true_dual_params, verify_params, Block};
use dualsls::Result;
use nalgebra::DMatrix;

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().map(|v| v + 0.0).collect()).collect()
}

fn main() -> Result<()> {
    let g = RationalTF::from_descending(&[1.0, 0.0, 0.0], &[1.0, -1.6, 0.89])?;
    let k = RationalTF::from_descending(&[-1.0, 0.8], &[1.0, 0.0, 0.0])?.to_ss()?;
    println!("controller realization A_k rows: {:?}", rows(&k.a));

    for horizon in [1, 5, 15] {
        let system = build_affine_constraints(&k.a, &k.b, &k.c, horizon)?;
        let report = check_feasibility(&k.a, &k.b, &k.c, horizon)?;
        println!(
            "T = {horizon:>2}: {} equations, {} unknowns, feasible {}, residual {:.1e}, free parameters {}",
            system.nrows(),
            system.ncols(),
            report.feasible,
            report.residual,
            report.null_dim
        );
    }

    let exact = true_dual_params(&g, &k, 15)?;
    println!("L taps of the exact response: {:?}", &exact.l_scalars()[..6]);
    println!("R[1] rows: {:?}", rows(exact.tap(Block::R, 1).expect("delay 1")));
    let report = verify_params(&exact, &k.a, &k.b, &k.c, 1e-8)?;
    println!(
        "truncated exact response: max residual {:.2e} (left {:.2e}, right {:.2e})",
        report.max_abs, report.left, report.right
    );
    Ok(())
}

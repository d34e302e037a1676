mod common;

use common::{benchmark_controller, benchmark_plant, small_gain_controller, stable_tf};
use dualsls::closed_loop::{simulate_loop, LoopConfig, SignalSpec};
use dualsls::estimator::{estimate_dual_params, expected_param_transform, realize_plant_ss, recover_plant_freqresp, transform_realization};
use dualsls::lti::RationalTF;
use dualsls::metrics::{closed_loop_stable, freq_grid};
use dualsls::signals::{PrbsSpec, RngStream};
use dualsls::subspace::{check_feasibility, verify_params, Block};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn noise_filter() -> RationalTF {
    RationalTF::from_descending(&[1.0, -1.56, 1.045, -0.3338], &[1.0, -2.35, 2.09, -0.6675]).unwrap()
}

fn dataset(k: &RationalTF, sigma: f64, seed: u64, periods: usize) -> dualsls::closed_loop::LoopDataset {
    simulate_loop(&LoopConfig {
        plant: benchmark_plant(),
        controller: k.clone(),
        noise_filter: noise_filter(),
        r1: SignalSpec::Zero,
        r2: SignalSpec::Prbs(PrbsSpec::new(9, 10.0, periods)),
        length: 511 * periods,
        sigma,
        rng: RngStream::new(seed, 1),
        r1_sign: 1.0,
    })
    .unwrap()
}

fn well_conditioned() -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0..1.0f64, 4).prop_filter_map("ill-conditioned", |v| {
        let t = DMatrix::from_row_slice(2, 2, &v) + DMatrix::identity(2, 2) * 1.5;
        let s = t.singular_values();
        (s[1] > 0.0 && s[0] / s[1] < 20.0).then_some(t)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn estimates_satisfy_constraints_and_stabilize(seed in any::<u64>(), sigma in 0.0..4.0f64, horizon in 4usize..25) {
        let k = benchmark_controller();
        let k_ss = k.to_ss().unwrap();
        let est = estimate_dual_params(&dataset(&k, sigma, seed, 2), &k_ss, horizon).unwrap();
        prop_assert!(est.constraint_residual <= 1e-8);
        let check = verify_params(&est.params, &k_ss.a, &k_ss.b, &k_ss.c, 1e-8).unwrap();
        prop_assert!(check.within_tol, "residual {}", check.max_abs);
        let ghat = realize_plant_ss(&est).unwrap();
        let (stable, rho) = closed_loop_stable(&ghat, &k_ss).unwrap();
        prop_assert!(stable, "spectral radius {rho}");
    }

    #[test]
    fn random_controllers_keep_the_guarantee((k, seed) in (stable_tf(3, false), any::<u64>())) {
        let k = small_gain_controller(&benchmark_plant(), &k);
        let k_ss = k.to_ss().unwrap();
        prop_assume!(k_ss.n_states() > 0);
        let strict = k_ss.strictly_proper_part();
        prop_assume!(check_feasibility(&strict.a, &strict.b, &strict.c, 15).unwrap().feasible);
        let est = estimate_dual_params(&dataset(&k, 1.0, seed, 2), &k_ss, 15).unwrap();
        prop_assert!(est.constraint_residual <= 1e-8);
        let (stable, rho) = closed_loop_stable(&realize_plant_ss(&est).unwrap(), &k_ss).unwrap();
        prop_assert!(stable, "spectral radius {rho}");
    }

    #[test]
    fn l_taps_ignore_the_controller_coordinates(t in well_conditioned(), seed in any::<u64>()) {
        let k = benchmark_controller().to_ss().unwrap();
        let data = dataset(&benchmark_controller(), 2.0, seed, 2);
        let (k_t, _) = transform_realization(&k, &t).unwrap();
        let base = estimate_dual_params(&data, &k, 15).unwrap();
        let moved = estimate_dual_params(&data, &k_t, 15).unwrap();
        let gap = common::max_gap(&base.params.l_scalars(), &moved.params.l_scalars());
        prop_assert!(gap <= 1e-8, "L gap {gap}");
        let mapped = expected_param_transform(&moved.params, &t).unwrap();
        for d in 1..=16 {
            let diff = (mapped.tap(Block::R, d).unwrap() - base.params.tap(Block::R, d).unwrap()).amax();
            prop_assert!(diff <= 1e-6, "R gap {diff} at delay {d}");
        }
    }
}

#[test]
fn noiseless_error_follows_the_truncation_floor() {
    let k = benchmark_controller();
    let k_ss = k.to_ss().unwrap();
    let g = benchmark_plant();
    let data = dataset(&k, 0.0, 0, 10);
    let grid = freq_grid(512).unwrap();
    for horizon in 6..=24 {
        let est = estimate_dual_params(&data, &k_ss, horizon).unwrap();
        let resp = recover_plant_freqresp(&est, &grid).unwrap();
        let worst = grid
            .iter()
            .zip(resp.scalars())
            .map(|(w, v)| {
                let truth = g.eval_unit(*w).unwrap();
                (v - truth).norm() / truth.norm()
            })
            .fold(0.0, f64::max);
        // The closed-loop pole at 0.3 is double, so the tail decays like
        // (T + 1) 0.3^T rather than 0.3^T.
        let bound = f64::max(1e-5, 200.0 * (horizon + 1) as f64 * 0.3f64.powi(horizon as i32));
        assert!(worst <= bound, "T = {horizon}: {worst:e} > {bound:e}");
    }
}

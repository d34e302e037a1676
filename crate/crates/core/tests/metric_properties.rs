mod common;

use common::{small_gain_controller, stable_tf};
use dualsls::lti::{tf_combine, tf_is_stable, Interconnection};
use dualsls::metrics::{closed_loop_stable, err1, err2, freq_grid};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn errors_do_not_depend_on_grid_order(
        g in stable_tf(3, true),
        ghat in stable_tf(3, true),
        k in stable_tf(2, false),
        seed in any::<u64>(),
    ) {
        let k = small_gain_controller(&g, &k);
        let grid = freq_grid(64).unwrap();
        let mut shuffled = grid.clone();
        let mut state = seed | 1;
        for i in (1..shuffled.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            shuffled.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let zero_ref = grid.iter().any(|&w| g.eval_unit(w).unwrap().norm() < 1e-9);
        prop_assume!(!zero_ref);
        let a = err1(&g, &ghat, &grid).unwrap();
        let b = err1(&g, &ghat, &shuffled).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        if let (Ok(a), Ok(b)) = (err2(&g, &ghat, &k, &grid), err2(&g, &ghat, &k, &shuffled)) {
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn constant_relative_error_scales_with_grid_size(g in stable_tf(3, true), c in 0.001..0.5f64, n in 2usize..400) {
        let grid = freq_grid(n).unwrap();
        prop_assume!(grid.iter().all(|&w| g.eval_unit(w).unwrap().norm() > 1e-9));
        let e = err1(&g, &g.scale(1.0 + c), &grid).unwrap();
        let expect = 100.0 * c * n as f64;
        prop_assert!((e - expect).abs() <= 1e-9 * expect);
    }

    #[test]
    fn state_space_and_polynomial_stability_agree(g in stable_tf(3, true), k in stable_tf(3, false), gain in 0.1..4.0f64) {
        let k = small_gain_controller(&g, &k).scale(gain * 2.0);
        let (ss_stable, rho) = closed_loop_stable(&g.to_ss().unwrap(), &k.to_ss().unwrap()).unwrap();
        prop_assume!((rho - 1.0).abs() > 1e-6);
        let cl = tf_combine(Interconnection::Feedback, &g, &k).unwrap();
        let report = tf_is_stable(&cl).unwrap();
        prop_assert_eq!(ss_stable, report.stable, "radius {} vs {}", rho, report.spectral_radius());
        prop_assert!((rho - report.spectral_radius()).abs() <= 1e-6 * (1.0 + rho));
    }
}

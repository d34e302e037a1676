#![allow(dead_code)]

use dualsls::lti::{Polynomial, RationalTF};
use num_complex::Complex64;
use proptest::prelude::*;

/// Roots inside the disk of radius `max_mod`; complex roots come in
/// conjugate pairs so the polynomial is real.
pub fn stable_roots(max_degree: usize, max_mod: f64) -> impl Strategy<Value = Vec<Complex64>> {
    let real = (-max_mod..max_mod).prop_map(|x| vec![Complex64::new(x, 0.0)]);
    let pair = (0.05..max_mod, 0.1..std::f64::consts::PI - 0.1).prop_map(|(r, a)| {
        let z = Complex64::from_polar(r, a);
        vec![z, z.conj()]
    });
    prop::collection::vec(prop_oneof![real, pair], 1..=max_degree).prop_map(move |groups| {
        let mut roots: Vec<Complex64> = groups.into_iter().flatten().collect();
        roots.truncate(max_degree.max(1));
        if roots.last().is_some_and(|r| r.im > 0.0) {
            roots.pop();
        }
        if roots.is_empty() {
            roots.push(Complex64::new(0.5, 0.0));
        }
        roots
    })
}

/// Stable proper transfer function with denominator degree `1..=max_degree`.
pub fn stable_tf(max_degree: usize, strictly_proper: bool) -> impl Strategy<Value = RationalTF> {
    (stable_roots(max_degree, 0.9), prop::collection::vec(-2.0..2.0f64, max_degree + 1)).prop_map(
        move |(roots, num)| {
            let den = Polynomial::from_roots(&roots);
            let n = den.degree().unwrap();
            let keep = if strictly_proper { n } else { n + 1 };
            let mut num: Vec<f64> = num.into_iter().take(keep).collect();
            if num.iter().all(|c| c.abs() < 1e-3) {
                num[0] = 1.0;
            }
            RationalTF::new(Polynomial::new(num), den).unwrap()
        },
    )
}

pub fn unit_point(omega: f64) -> Complex64 {
    Complex64::from_polar(1.0, omega)
}

pub fn benchmark_plant() -> RationalTF {
    RationalTF::from_descending(&[1.0, 0.0, 0.0], &[1.0, -1.6, 0.89]).unwrap()
}

pub fn benchmark_controller() -> RationalTF {
    RationalTF::from_descending(&[-1.0, 0.8], &[1.0, 0.0, 0.0]).unwrap()
}

pub fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn peak_gain(tf: &RationalTF) -> f64 {
    (0..=256)
        .map(|i| tf.eval(unit_point(i as f64 * std::f64::consts::PI / 256.0)).unwrap().norm())
        .fold(0.0, f64::max)
}

/// Rescales `k` so that `|G K| < 1/2` on the unit circle, which makes the
/// loop stable by the small-gain theorem.
pub fn small_gain_controller(g: &RationalTF, k: &RationalTF) -> RationalTF {
    k.scale(0.5 / (peak_gain(g) * peak_gain(k) * 1.1))
}

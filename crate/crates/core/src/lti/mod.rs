//! Discrete-time LTI primitives.
//!
//! Polynomials are stored with coefficients in **ascending** powers of `z`:
//! `coeffs[k]` multiplies `z^k`. Textbooks usually write them descending, so
//! `z^2 - 1.6z + 0.89` is `Polynomial::new(vec![0.89, -1.6, 1.0])`, or
//! equivalently `Polynomial::from_descending(&[1.0, -1.6, 0.89])`.
//!
//! Rational arithmetic never cancels common factors on its own; a pole that
//! cancels against a zero is still reported by the stability checks. Call
//! [`RationalTF::reduce`] to cancel explicitly.
//!
//! Frequency responses are evaluated at `z = e^{j omega}`.

mod freq;
mod poly;
mod ss;
mod tf;

pub use freq::{Evaluable, FrequencyResponse};
pub use poly::Polynomial;
pub use ss::{ss_eigenvalues, StateSpaceModel};
pub use tf::{tf_combine, Interconnection, RationalTF, StabilityReport, POLE_HIT_TOL, STABILITY_TOL};

use num_complex::Complex64;

use crate::error::Result;

/// Product of two polynomials.
pub fn poly_mul(p: &Polynomial, q: &Polynomial) -> Polynomial {
    p * q
}

/// Roots via companion-matrix eigenvalues, sorted by (real, imaginary).
pub fn poly_roots(p: &Polynomial) -> Result<Vec<Complex64>> {
    p.roots()
}

pub fn tf_eval(tf: &RationalTF, z: Complex64) -> Result<Complex64> {
    tf.eval(z)
}

pub fn tf_is_stable(tf: &RationalTF) -> Result<StabilityReport> {
    tf.is_stable()
}

pub fn tf_to_ss(tf: &RationalTF) -> Result<StateSpaceModel> {
    tf.to_ss()
}

pub fn tf_simulate(tf: &RationalTF, input: &[f64]) -> Result<Vec<f64>> {
    tf.simulate(input)
}

//! Frequency-domain error metrics and closed-loop stability certification.
//!
//! Both errors are percentage sums over the grid (not averages):
//!
//! ```text
//! err1 = sum_i 100 |G(w_i) - Ghat(w_i)| / |G(w_i)|
//! err2 = sum_i 100 |Lk(w_i) - Lk_hat(w_i)| / |Lk(w_i)|,   Lk = (I - G K)^-1 G
//! ```
//!
//! Matrix values use the spectral norm. Sums are pairwise so the result does
//! not depend on evaluation order.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::lti::{Evaluable, StateSpaceModel, STABILITY_TOL};

/// Reference values below this magnitude make a relative error undefined.
pub const ZERO_REFERENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub err1: f64,
    pub err2: f64,
    pub cl_stable: bool,
    pub spectral_radius: f64,
    pub grid_size: usize,
}

impl MetricReport {
    pub fn err1_mean(&self) -> f64 {
        self.err1 / self.grid_size as f64
    }

    pub fn err2_mean(&self) -> f64 {
        self.err2 / self.grid_size as f64
    }
}

/// `n` equally spaced frequencies on `[0, pi]`, both ends included.
pub fn freq_grid(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    let step = std::f64::consts::PI / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
    grid[n - 1] = std::f64::consts::PI;
    Ok(grid)
}

fn percent_sum<F>(grid: &[f64], mut term: F) -> Result<f64>
where
    F: FnMut(f64, Complex64) -> Result<f64>,
{
    let terms = grid
        .iter()
        .map(|&w| term(w, Complex64::from_polar(1.0, w)))
        .collect::<Result<Vec<_>>>()?;
    Ok(linalg::pairwise_sum(&terms))
}

fn relative(reference: &DMatrix<Complex64>, estimate: &DMatrix<Complex64>, omega: f64) -> Result<f64> {
    if reference.shape() != estimate.shape() {
        return Err(Error::DimensionMismatch("reference and estimate shapes differ".into()));
    }
    let denom = linalg::spectral_norm(reference);
    if !(denom >= ZERO_REFERENCE_TOL) {
        return Err(Error::ZeroReferenceValue { omega });
    }
    Ok(100.0 * linalg::spectral_norm(&(estimate - reference)) / denom)
}

pub fn err1(g: &impl Evaluable, ghat: &impl Evaluable, grid: &[f64]) -> Result<f64> {
    percent_sum(grid, |w, z| relative(&g.eval_at(z)?, &ghat.eval_at(z)?, w))
}

/// `(I - G K)^-1 G` at one point.
pub fn closed_loop_map(g: &DMatrix<Complex64>, k: &DMatrix<Complex64>, omega: f64) -> Result<DMatrix<Complex64>> {
    let p = g.nrows();
    let sys = DMatrix::<Complex64>::identity(p, p) - g * k;
    if !(linalg::complex_condition(&sys) <= 1e12) {
        return Err(Error::SingularClosedLoop { omega });
    }
    linalg::complex_solve(&sys, g).ok_or(Error::SingularClosedLoop { omega })
}

pub fn err2(g: &impl Evaluable, ghat: &impl Evaluable, k: &impl Evaluable, grid: &[f64]) -> Result<f64> {
    percent_sum(grid, |w, z| {
        let kz = k.eval_at(z)?;
        let l = closed_loop_map(&g.eval_at(z)?, &kz, w)?;
        let lhat = closed_loop_map(&ghat.eval_at(z)?, &kz, w)?;
        relative(&l, &lhat, w)
    })
}

/// Spectral radius of the positive-feedback interconnection and whether it
/// is below `1 - 1e-9`.
pub fn closed_loop_stable(ghat: &StateSpaceModel, k: &StateSpaceModel) -> Result<(bool, f64)> {
    let a = StateSpaceModel::positive_feedback_matrix(ghat, k)?;
    let rho = linalg::spectral_radius(&a)?;
    Ok((rho < 1.0 - STABILITY_TOL, rho))
}

/// All metrics for one estimate.
pub fn evaluate(
    g: &impl Evaluable,
    ghat: &impl Evaluable,
    ghat_ss: &StateSpaceModel,
    k: &impl Evaluable,
    k_ss: &StateSpaceModel,
    grid: &[f64],
) -> Result<MetricReport> {
    let (cl_stable, spectral_radius) = closed_loop_stable(ghat_ss, k_ss)?;
    Ok(MetricReport {
        err1: err1(g, ghat, grid)?,
        err2: err2(g, ghat, k, grid)?,
        cl_stable,
        spectral_radius,
        grid_size: grid.len(),
    })
}

//! Dense linear-algebra helpers shared by the LTI primitives and the estimators.
//!
//! Eigenvalues come from nalgebra's real Schur decomposition after a
//! Parlett-Reinsch balancing pass. Least-squares problems are solved through
//! the SVD so that rank deficiency is detected and resolved by the
//! minimum-norm solution.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Balances `a` in place by diagonal similarity with powers of two.
pub fn balance(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    if n < 2 {
        return;
    }
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut g = r / RADIX;
            let mut f = 1.0;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= g;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// Sorts complex numbers by real part, then imaginary part.
pub fn sort_complex(values: &mut [Complex64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Eigenvalues of a square matrix, sorted by (real, imaginary).
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "eigenvalues need a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![Complex64::new(a[(0, 0)], 0.0)]);
    }
    let mut work = a.clone();
    balance(&mut work);
    let schur = Schur::try_new(work, f64::EPSILON, 100_000).ok_or(Error::EigenDecomposition)?;
    let mut values: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    // Real Schur blocks of real eigenvalues can leave tiny imaginary dust.
    for v in values.iter_mut() {
        if v.im.abs() <= 1e-300 {
            v.im = 0.0;
        }
    }
    sort_complex(&mut values);
    Ok(values)
}

/// Largest eigenvalue modulus of a square matrix (0 for an empty matrix).
pub fn spectral_radius(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Default relative rank tolerance: `max(rows, cols) * eps`.
pub fn default_rank_tol(rows: usize, cols: usize) -> f64 {
    rows.max(cols).max(1) as f64 * f64::EPSILON
}

/// Minimum-norm least-squares solution of `a x ≈ b`.
///
/// Singular values below `rel_tol * sigma_max` are treated as zero. Returns the
/// solution and the numerical rank.
pub fn min_norm_lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> (DVector<f64>, usize) {
    let cols = a.ncols();
    if cols == 0 || a.nrows() == 0 {
        return (DVector::zeros(cols), 0);
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = rel_tol * sigma_max;
    let mut x = DVector::zeros(cols);
    let mut rank = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            let coef = u.column(k).dot(b) / s;
            x.axpy(coef, &v_t.row(k).transpose(), 1.0);
        }
    }
    (x, rank)
}

/// Particular solution and orthonormal null-space basis of `e x = f`.
#[derive(Debug, Clone)]
pub struct AffineSolution {
    /// Minimum-norm least-squares solution of `e x ≈ f`.
    pub particular: DVector<f64>,
    /// Columns span the null space of `e`.
    pub null_basis: DMatrix<f64>,
    pub rank: usize,
    /// `max |e x_p - f|`.
    pub residual: f64,
}

/// Rank-revealing decomposition of an (possibly redundant) equality system.
pub fn affine_solution(e: &DMatrix<f64>, f: &DVector<f64>, rel_tol: f64) -> AffineSolution {
    let (rows, cols) = e.shape();
    // nalgebra computes a thin SVD; pad with zero rows so V is square.
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(e);
        p
    } else {
        e.clone()
    };
    let mut f_padded = DVector::zeros(padded.nrows());
    f_padded.rows_mut(0, rows).copy_from(f);

    let svd = padded.svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = rel_tol * sigma_max;

    let mut particular = DVector::zeros(cols);
    let mut null_rows = Vec::new();
    let mut rank = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            let coef = u.column(k).dot(&f_padded) / s;
            particular.axpy(coef, &v_t.row(k).transpose(), 1.0);
        } else {
            null_rows.push(k);
        }
    }
    let mut null_basis = DMatrix::zeros(cols, null_rows.len());
    for (j, &k) in null_rows.iter().enumerate() {
        null_basis.set_column(j, &v_t.row(k).transpose());
    }
    let residual = (e * &particular - f).amax();
    AffineSolution {
        particular,
        null_basis,
        rank,
        residual,
    }
}

/// Solves `a x = b` for a complex square matrix, returning `None` when singular.
pub fn complex_solve(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
) -> Option<DMatrix<Complex64>> {
    a.clone().lu().solve(b)
}

/// 1-norm condition estimate of a small complex matrix (exact inverse based).
pub fn complex_condition(a: &DMatrix<Complex64>) -> f64 {
    let norm1 = |m: &DMatrix<Complex64>| {
        (0..m.ncols())
            .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    match a.clone().try_inverse() {
        Some(inv) => norm1(a) * norm1(&inv),
        None => f64::INFINITY,
    }
}

/// Largest singular value of a complex matrix (modulus for 1x1).
pub fn spectral_norm(a: &DMatrix<Complex64>) -> f64 {
    if a.nrows() == 1 && a.ncols() == 1 {
        return a[(0, 0)].norm();
    }
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Pairwise summation; result is independent of how callers chunk the work.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

//! Constrained least-squares estimation of the dual FIR parameters and plant
//! recovery.
//!
//! The closed-loop output satisfies `y = L r + noise`, where `L` is the
//! dual response from the composite reference to the output. The estimator
//! minimizes `||y - Phi(r) L||^2` over parameter sets in the affine subspace of
//! [`crate::subspace`], using null-space elimination:
//!
//! 1. `theta = theta_p + Z w`, with `Z` an orthonormal basis of `null(E)`;
//! 2. a thin QR of `Phi` reduces the tall regression to `T + 1` rows;
//! 3. the reduced problem is solved by SVD, minimum-norm when rank deficient.
//!
//! A controller with feedthrough `D_k` is handled by estimating against its
//! strictly proper part `K~`. The closed-loop map is unchanged, because
//! `G (1 - K G)^-1 = Gc (1 - K~ Gc)^-1` with `Gc = G (1 - D_k G)^-1`, so the
//! data needs no preprocessing. Recovery undoes the substitution with
//! `G = Gc (1 + D_k Gc)^-1`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::closed_loop::LoopDataset;
use crate::error::{Error, Result};
use crate::linalg;
use crate::lti::{Evaluable, FrequencyResponse, StateSpaceModel};
use crate::signals::toeplitz_regressor;
use crate::subspace::{self, Block, FirParams, FEASIBILITY_TOL};

/// Hard bound on `max |E theta - f|` for a returned estimate.
pub const CONSTRAINT_TOL: f64 = 1e-8;
/// Condition number beyond which `R(e^{jw})` is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;
/// Relative singular-value cutoff for the rank decisions.
pub const RANK_TOL: f64 = 1e-10;
/// Largest constraint residual accepted by [`realize_plant_ss`].
pub const REALIZATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct DualSlsEstimate {
    pub params: FirParams,
    /// Strictly proper controller realization the constraints were built from.
    pub controller: StateSpaceModel,
    /// Controller feedthrough, set aside for recovery.
    pub d_k: DMatrix<f64>,
    /// `||y - Phi L||_2`.
    pub fit_residual: f64,
    /// `max |E theta - f|`.
    pub constraint_residual: f64,
    /// Free dimensions of the constraint set.
    pub null_dim: usize,
    /// True when the reduced regression lost rank and the minimum-norm
    /// solution was taken.
    pub rank_deficient: bool,
}

pub fn estimate_dual_params(dataset: &LoopDataset, k: &StateSpaceModel, horizon: usize) -> Result<DualSlsEstimate> {
    if k.n_inputs() != 1 || k.n_outputs() != 1 {
        return Err(Error::DimensionMismatch("closed-loop data is scalar; controller must be SISO".into()));
    }
    if horizon < 1 || dataset.len() <= horizon {
        return Err(Error::LengthTooShort {
            length: dataset.len(),
            horizon,
        });
    }
    let kp = k.strictly_proper_part();
    let sys = subspace::build_affine_constraints(&kp.a, &kp.b, &kp.c, horizon)?;
    let e = sys.to_dense();
    let sol = linalg::affine_solution(&e, &sys.rhs, RANK_TOL);
    let particular_residual = (&e * &sol.particular - &sys.rhs).norm();
    if particular_residual > FEASIBILITY_TOL * (1.0 + sys.rhs.norm()) {
        return Err(Error::InfeasibleConstraints {
            residual: particular_residual,
        });
    }

    let phi = toeplitz_regressor(&dataset.r, horizon)?;
    let y = DVector::from_column_slice(dataset.y.samples());
    let l_idx = sys.layout.l_indices();
    let sl_z = sol.null_basis.rows(l_idx.start, l_idx.len()).into_owned();
    let l_p = sol.particular.rows(l_idx.start, l_idx.len()).into_owned();

    let qr = phi.clone().qr();
    let q = qr.q();
    let r_phi = qr.r();
    let c = q.transpose() * &y;
    let a_red = &r_phi * &sl_z;
    let b_red = c - &r_phi * &l_p;
    let (w, rank) = linalg::min_norm_lstsq(&a_red, &b_red, RANK_TOL);
    let (_, rank_free) = linalg::min_norm_lstsq(&sl_z, &DVector::zeros(sl_z.nrows()), RANK_TOL);

    let theta = &sol.particular + &sol.null_basis * w;
    let constraint_residual = sys.residual(&theta).amax();
    if !(constraint_residual <= CONSTRAINT_TOL) {
        return Err(Error::InfeasibleConstraints {
            residual: constraint_residual,
        });
    }
    let params = FirParams::unpack(sys.layout.dims, &theta)?;
    let l_hat = theta.rows(l_idx.start, l_idx.len());
    let fit_residual = (y - &phi * l_hat).norm();

    Ok(DualSlsEstimate {
        params,
        controller: kp,
        d_k: k.d.clone(),
        fit_residual,
        constraint_residual,
        null_dim: sol.null_basis.ncols(),
        rank_deficient: rank < rank_free,
    })
}

fn complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

impl DualSlsEstimate {
    /// `L - M R^-1 N` at `z`, before the feedthrough correction.
    pub fn eval_dual_plant(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        let p = &self.params;
        let r = p.eval_block(Block::R, z);
        let cond = linalg::complex_condition(&r);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::SingularRk {
                omega: z.arg(),
                condition: cond,
            });
        }
        let rn = linalg::complex_solve(&r, &p.eval_block(Block::N, z)).ok_or(Error::SingularRk {
            omega: z.arg(),
            condition: f64::INFINITY,
        })?;
        Ok(p.eval_block(Block::L, z) - p.eval_block(Block::M, z) * rn)
    }
}

impl Evaluable for DualSlsEstimate {
    fn eval_at(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        let gc = self.eval_dual_plant(z)?;
        if self.d_k.iter().all(|&v| v == 0.0) {
            return Ok(gc);
        }
        let p = gc.ncols();
        let w = DMatrix::<Complex64>::identity(p, p) + complex(&self.d_k) * &gc;
        if !(linalg::complex_condition(&w) <= MAX_CONDITION) {
            return Err(Error::SingularCorrection { omega: z.arg() });
        }
        let inv = linalg::complex_solve(&w, &DMatrix::identity(p, p)).ok_or(Error::SingularCorrection { omega: z.arg() })?;
        Ok(gc * inv)
    }
}

/// Pointwise plant estimate on `omegas`.
pub fn recover_plant_freqresp(est: &DualSlsEstimate, omegas: &[f64]) -> Result<FrequencyResponse> {
    est.frequency_response(omegas)
}

/// State-space realization of the plant estimate.
///
/// The state holds the last `T` inputs and the last `T + 1` values of the
/// internal signal `phi = R^-1 N v`, which obeys
/// `R[1] phi[t] = sum_d N[d] v[t+1-d] - sum_{d>=2} R[d] phi[t+1-d]`. The
/// output is `L v - M phi`. A nonzero `D_k` closes `v = u - D_k y` around it.
pub fn realize_plant_ss(est: &DualSlsEstimate) -> Result<StateSpaceModel> {
    if !(est.constraint_residual <= REALIZATION_TOL) {
        return Err(Error::ConstraintResidualTooLarge {
            residual: est.constraint_residual,
        });
    }
    let p = &est.params;
    let t = p.horizon();
    let dims = p.dims;
    let (n, ny, nu) = (dims.states, dims.inputs, dims.outputs);
    let r1_inv = p.r[0].clone().try_inverse().ok_or(Error::IllPosedRealization)?;

    let v_off = |i: usize| (i - 1) * nu; // v[t-i], i = 1..=T
    let phi_off = |i: usize| t * nu + (i - 1) * n; // phi[t-i], i = 1..=T+1
    let nx = t * nu + (t + 1) * n;

    // phi[t] = P x + Q v
    let mut pm = DMatrix::zeros(n, nx);
    for i in 1..=t {
        pm.view_mut((0, v_off(i)), (n, nu)).copy_from(&(&r1_inv * &p.n[i]));
        pm.view_mut((0, phi_off(i)), (n, n)).copy_from(&(-&r1_inv * &p.r[i]));
    }
    let qm = &r1_inv * &p.n[0];

    let mut a = DMatrix::zeros(nx, nx);
    let mut b = DMatrix::zeros(nx, nu);
    let mut c = DMatrix::zeros(ny, nx);
    let d = p.l[0].clone();
    if t >= 1 {
        b.view_mut((v_off(1), 0), (nu, nu)).fill_with_identity();
    }
    for i in 2..=t {
        a.view_mut((v_off(i), v_off(i - 1)), (nu, nu)).fill_with_identity();
    }
    a.view_mut((phi_off(1), 0), (n, nx)).copy_from(&pm);
    b.view_mut((phi_off(1), 0), (n, nu)).copy_from(&qm);
    for i in 2..=t + 1 {
        a.view_mut((phi_off(i), phi_off(i - 1)), (n, n)).fill_with_identity();
    }
    for i in 1..=t {
        c.view_mut((0, v_off(i)), (ny, nu)).copy_from(&p.l[i]);
    }
    for i in 1..=t + 1 {
        c.view_mut((0, phi_off(i)), (ny, n)).copy_from(&(-&p.m[i - 1]));
    }
    let gc = StateSpaceModel::new(a, b, c, d)?;
    if est.d_k.iter().all(|&v| v == 0.0) {
        Ok(gc)
    } else {
        gc.output_feedback(&est.d_k)
    }
}

/// Controller realization in new coordinates `xi = T xi_new`, with the
/// condition number of `T`.
pub fn transform_realization(k: &StateSpaceModel, t: &DMatrix<f64>) -> Result<(StateSpaceModel, f64)> {
    let model = k.similarity(t)?;
    let sv = t.singular_values();
    let cond = sv.max() / sv.min();
    Ok((model, cond))
}

/// Maps parameters estimated on `transform_realization(K, T)` back to the
/// coordinates of `K`: `(T R T^-1, M T^-1, T N, L)`.
pub fn expected_param_transform(params: &FirParams, t: &DMatrix<f64>) -> Result<FirParams> {
    let n = params.dims.states;
    if t.nrows() != n || t.ncols() != n {
        return Err(Error::DimensionMismatch("transform must match the state dimension".into()));
    }
    let t_inv = t.clone().try_inverse().ok_or(Error::SingularTransform)?;
    Ok(FirParams {
        dims: params.dims,
        r: params.r.iter().map(|x| t * x * &t_inv).collect(),
        m: params.m.iter().map(|x| x * &t_inv).collect(),
        n: params.n.iter().map(|x| t * x).collect(),
        l: params.l.clone(),
    })
}

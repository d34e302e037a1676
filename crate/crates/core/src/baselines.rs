//! Dual-Youla and coprime-factor identification baselines.
//!
//! Both work with stable coprime factors obtained by dividing numerator and
//! denominator by `z^deg(den)`: `G0 = N0 / D0` and `K = X0 / Y0`.
//!
//! Under the loop convention `ubar = K y + r`, the plants stabilized by `K`
//! are `G(R) = (N0 + R Y0) / (D0 + R X0)` for stable `R`, and
//! `beta = D0 y - N0 ubar` obeys `beta = R (Y0 r) + (D0 + R X0) S e`.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::closed_loop::{validate_pair, LoopDataset};
use crate::error::{Error, Result};
use crate::linalg;
use crate::lti::{Evaluable, Polynomial, RationalTF};
use crate::signals::{toeplitz_regressor, Signal};
use nalgebra::DMatrix;

const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    Plant,
    Controller,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoprimeFactors {
    pub numerator: RationalTF,
    pub denominator: RationalTF,
    pub subject: Subject,
}

impl CoprimeFactors {
    /// `numerator / denominator`.
    pub fn ratio(&self) -> Result<RationalTF> {
        Ok(self.numerator.series(&self.denominator.reciprocal()?).cancel_origin())
    }
}

/// Divides numerator and denominator by `z^deg(den)`.
pub fn coprime_factorize(tf: &RationalTF, subject: Subject) -> Result<CoprimeFactors> {
    if !tf.is_proper() {
        return Err(Error::ImproperTransferFunction {
            num_degree: tf.num().degree().unwrap_or(0),
            den_degree: tf.den().degree().unwrap_or(0),
        });
    }
    let d = tf.den().degree().unwrap_or(0);
    let over = |p: &Polynomial| RationalTF::new(p.clone(), Polynomial::monomial(d)).map(|f| f.cancel_origin());
    Ok(CoprimeFactors {
        numerator: over(tf.num())?,
        denominator: over(tf.den())?,
        subject,
    })
}

fn filter(tf: &RationalTF, x: &[f64], name: &str) -> Result<Signal> {
    Signal::new(name, tf.simulate(x)?)
}

/// Least-squares FIR fit `target ≈ Phi(regressor) taps`.
fn fir_fit(regressor: &Signal, target: &Signal, horizon: usize) -> Result<(Vec<f64>, f64, bool)> {
    if regressor.len() <= horizon {
        return Err(Error::LengthTooShort {
            length: regressor.len(),
            horizon,
        });
    }
    let phi = toeplitz_regressor(regressor, horizon)?;
    let y = DVector::from_column_slice(target.samples());
    let qr = phi.clone().qr();
    let rhs = qr.q().transpose() * &y;
    let (taps, rank) = linalg::min_norm_lstsq(&qr.r(), &rhs, RANK_TOL);
    let residual = (y - &phi * &taps).norm();
    Ok((taps.as_slice().to_vec(), residual, rank < horizon + 1))
}

/// `sum_i taps[i] z^-i` as `P(z) / z^T`.
fn fir_tf(taps: &[f64]) -> RationalTF {
    RationalTF::fir(taps)
}

#[derive(Debug, Clone, Serialize)]
pub struct DualYoulaEstimate {
    pub ghat: RationalTF,
    /// Youla parameter taps at delays `0..=T`.
    pub r_taps: Vec<f64>,
    pub fit_residual: f64,
    pub rank_deficient: bool,
}

/// Filtered signals `(beta, alpha) = (D0 y - N0 ubar, Y0 r)`.
pub fn dual_youla_regression(dataset: &LoopDataset, k: &CoprimeFactors, g0: &CoprimeFactors) -> Result<(Signal, Signal)> {
    let d0y = filter(&g0.denominator, dataset.y.samples(), "d0y")?;
    let n0u = filter(&g0.numerator, dataset.ubar.samples(), "n0u")?;
    let beta = d0y.samples().iter().zip(n0u.samples()).map(|(a, b)| a - b).collect();
    let alpha = filter(&k.denominator, dataset.r.samples(), "alpha")?;
    Ok((Signal::new("beta", beta)?, alpha))
}

pub fn dual_youla_estimate(
    dataset: &LoopDataset,
    k: &CoprimeFactors,
    g0: &CoprimeFactors,
    horizon: usize,
) -> Result<DualYoulaEstimate> {
    let g0_tf = g0.ratio()?;
    let k_tf = k.ratio()?;
    match validate_pair(&g0_tf, &k_tf) {
        Err(Error::UnstableLoop { poles }) => return Err(Error::NominalNotStabilized { poles }),
        Err(Error::IllPosedLoop) => return Err(Error::NominalNotStabilized { poles: Vec::new() }),
        Err(e) => return Err(e),
        Ok(_) => {}
    }
    let (beta, alpha) = dual_youla_regression(dataset, k, g0)?;
    let (r_taps, fit_residual, rank_deficient) = fir_fit(&alpha, &beta, horizon)?;
    let r = fir_tf(&r_taps);
    let num = g0.numerator.parallel(&r.series(&k.denominator)).cancel_origin();
    let den = g0.denominator.parallel(&r.series(&k.numerator)).cancel_origin();
    let ghat = num.series(&den.reciprocal()?).cancel_origin();
    Ok(DualYoulaEstimate {
        ghat,
        r_taps,
        fit_residual,
        rank_deficient,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CoprimeEstimate {
    pub ghat: RationalTF,
    /// Numerator-factor taps at delays `0..=T`.
    pub n_taps: Vec<f64>,
    /// Denominator-factor taps at delays `0..=T`.
    pub d_taps: Vec<f64>,
    /// `sqrt(|y - N x|^2 + |ubar - D x|^2)`.
    pub fit_residual: f64,
    pub rank_deficient: bool,
}

/// The prefilter `(D0 - K N0)^-1`, checked for stability.
pub fn coprime_prefilter(k: &RationalTF, g0: &CoprimeFactors) -> Result<RationalTF> {
    let f = g0.denominator.parallel(&k.series(&g0.numerator).neg()).cancel_origin();
    let inv = f.reciprocal().map_err(|_| Error::UnstableFilter)?.cancel_origin();
    if !inv.is_proper() || !inv.is_stable()?.stable {
        return Err(Error::UnstableFilter);
    }
    Ok(inv)
}

pub fn coprime_estimate(dataset: &LoopDataset, k: &RationalTF, g0: &CoprimeFactors, horizon: usize) -> Result<CoprimeEstimate> {
    let prefilter = coprime_prefilter(k, g0)?;
    let x = filter(&prefilter, dataset.r.samples(), "x")?;
    let (n_taps, res_n, def_n) = fir_fit(&x, &dataset.y, horizon)?;
    let (d_taps, res_d, def_d) = fir_fit(&x, &dataset.ubar, horizon)?;
    let ghat = RationalTF::new(
        Polynomial::new(n_taps.iter().rev().copied().collect()),
        Polynomial::new(d_taps.iter().rev().copied().collect()),
    )
    .map_err(|_| Error::RankDeficientRegressor {
        rank: 0,
        cols: horizon + 1,
    })?
    .cancel_origin();
    Ok(CoprimeEstimate {
        ghat,
        n_taps,
        d_taps,
        fit_residual: res_n.hypot(res_d),
        rank_deficient: def_n || def_d,
    })
}

impl Evaluable for DualYoulaEstimate {
    fn eval_at(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        self.ghat.eval_at(z)
    }
}

impl Evaluable for CoprimeEstimate {
    fn eval_at(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        self.ghat.eval_at(z)
    }
}

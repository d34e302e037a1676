use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::poly::Polynomial;
use super::ss::StateSpaceModel;
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Pole modulus margin used for every stability decision.
pub const STABILITY_TOL: f64 = 1e-9;

/// Relative tolerance below which `|den(z)|` counts as a pole hit.
pub const POLE_HIT_TOL: f64 = 1e-12;

/// SISO discrete-time rational transfer function `num(z) / den(z)`.
///
/// Numerator and denominator are kept exactly as built: no common factors are
/// cancelled implicitly. Use [`RationalTF::reduce`] to cancel on purpose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTf", into = "RawTf")]
pub struct RationalTF {
    num: Polynomial,
    den: Polynomial,
}

#[derive(Serialize, Deserialize)]
struct RawTf {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl TryFrom<RawTf> for RationalTF {
    type Error = Error;
    fn try_from(raw: RawTf) -> Result<Self> {
        RationalTF::new(Polynomial::new(raw.num), Polynomial::new(raw.den))
    }
}

impl From<RationalTF> for RawTf {
    fn from(tf: RationalTF) -> Self {
        RawTf {
            num: tf.num.into(),
            den: tf.den.into(),
        }
    }
}

/// Poles of a denominator and whether all of them lie inside the margin.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub stable: bool,
    pub poles: Vec<Complex64>,
    pub moduli: Vec<f64>,
}

impl StabilityReport {
    pub fn from_poles(poles: Vec<Complex64>) -> Self {
        let moduli: Vec<f64> = poles.iter().map(|p| p.norm()).collect();
        let stable = moduli.iter().all(|&m| m < 1.0 - STABILITY_TOL);
        StabilityReport {
            stable,
            poles,
            moduli,
        }
    }

    pub fn spectral_radius(&self) -> f64 {
        self.moduli.iter().cloned().fold(0.0, f64::max)
    }

    pub fn unstable_poles(&self) -> Vec<Complex64> {
        self.poles
            .iter()
            .zip(&self.moduli)
            .filter(|(_, &m)| m >= 1.0 - STABILITY_TOL)
            .map(|(p, _)| *p)
            .collect()
    }
}

/// How two transfer functions are combined by [`tf_combine`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interconnection {
    Series,
    Parallel,
    /// Positive feedback `a / (1 - a b)`.
    Feedback,
}

impl RationalTF {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(RationalTF { num, den })
    }

    /// Builds from ascending coefficient slices.
    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        RationalTF::new(Polynomial::new(num.to_vec()), Polynomial::new(den.to_vec()))
    }

    /// Builds from descending coefficient slices (`[1, -1.6, 0.89]` is `z^2 - 1.6z + 0.89`).
    pub fn from_descending(num: &[f64], den: &[f64]) -> Result<Self> {
        RationalTF::new(Polynomial::from_descending(num), Polynomial::from_descending(den))
    }

    pub fn constant(c: f64) -> Self {
        RationalTF {
            num: Polynomial::constant(c),
            den: Polynomial::one(),
        }
    }

    pub fn zero() -> Self {
        RationalTF::constant(0.0)
    }

    pub fn one() -> Self {
        RationalTF::constant(1.0)
    }

    /// `z^-k`.
    pub fn delay(k: usize) -> Self {
        RationalTF {
            num: Polynomial::one(),
            den: Polynomial::monomial(k),
        }
    }

    /// FIR filter `sum_d taps[d] z^-d`.
    pub fn fir(taps: &[f64]) -> Self {
        if taps.is_empty() {
            return RationalTF::zero();
        }
        let order = taps.len() - 1;
        RationalTF {
            num: Polynomial::new(taps.iter().rev().copied().collect()),
            den: Polynomial::monomial(order),
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_proper(&self) -> bool {
        self.num.is_zero() || self.num.deg0() <= self.den.deg0()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.num.is_zero() || self.num.deg0() < self.den.deg0()
    }

    pub(crate) fn require_proper(&self) -> Result<()> {
        if self.is_proper() {
            Ok(())
        } else {
            Err(Error::ImproperTransferFunction {
                num_degree: self.num.deg0(),
                den_degree: self.den.deg0(),
            })
        }
    }

    /// Value at infinity (the feedthrough) of a proper transfer function.
    pub fn feedthrough(&self) -> f64 {
        if self.num.is_zero() || self.num.deg0() < self.den.deg0() {
            0.0
        } else {
            self.num.coeff(self.den.deg0()) / self.den.leading()
        }
    }

    /// Horner evaluation of `num(z) / den(z)`.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let d = self.den.eval(z);
        let scale = self.den.norm_inf().max(1.0) * z.norm().max(1.0).powi(self.den.deg0() as i32);
        if d.norm() < POLE_HIT_TOL * scale {
            return Err(Error::PoleOnEvaluationPoint {
                magnitude: d.norm(),
            });
        }
        Ok(self.num.eval(z) / d)
    }

    /// Evaluates on the unit circle at `z = e^{j omega}`.
    pub fn eval_unit(&self, omega: f64) -> Result<Complex64> {
        self.eval(Complex64::from_polar(1.0, omega))
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        match self.den.degree() {
            Some(0) => Ok(Vec::new()),
            _ => self.den.roots(),
        }
    }

    /// Stability of the stored denominator; common factors are not cancelled.
    pub fn is_stable(&self) -> Result<StabilityReport> {
        Ok(StabilityReport::from_poles(self.poles()?))
    }

    /// Zero-initial-condition direct-form filtering of `input`.
    pub fn simulate(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.require_proper()?;
        let n = self.den.deg0();
        let a = self.den.coeffs();
        let lead = a[n];
        let b: Vec<f64> = (0..=n).map(|k| self.num.coeff(k)).collect();
        let mut y = vec![0.0; input.len()];
        for t in 0..input.len() {
            let mut acc = 0.0;
            for (k, &bk) in b.iter().enumerate() {
                let lag = n - k;
                if bk != 0.0 && lag <= t {
                    acc += bk * input[t - lag];
                }
            }
            for (k, &ak) in a.iter().enumerate().take(n) {
                let lag = n - k;
                if ak != 0.0 && lag <= t {
                    acc -= ak * y[t - lag];
                }
            }
            y[t] = acc / lead;
        }
        Ok(y)
    }

    /// First `len` samples of the impulse response.
    pub fn impulse_response(&self, len: usize) -> Result<Vec<f64>> {
        let mut u = vec![0.0; len];
        if len > 0 {
            u[0] = 1.0;
        }
        self.simulate(&u)
    }

    pub fn series(&self, other: &RationalTF) -> RationalTF {
        RationalTF {
            num: &self.num * &other.num,
            den: &self.den * &other.den,
        }
    }

    pub fn parallel(&self, other: &RationalTF) -> RationalTF {
        RationalTF {
            num: &(&self.num * &other.den) + &(&other.num * &self.den),
            den: &self.den * &other.den,
        }
    }

    /// Positive feedback `self / (1 - self * other)`.
    ///
    /// Computed as `a_n b_d / (a_d b_d - a_n b_n)`.
    pub fn feedback(&self, other: &RationalTF) -> Result<RationalTF> {
        let num = &self.num * &other.den;
        let den = &(&self.den * &other.den) - &(&self.num * &other.num);
        if den.is_zero() {
            return Err(Error::AlgebraicLoop);
        }
        if self.is_proper() && other.is_proper() {
            let expected = self.den.deg0() + other.den.deg0();
            let scale = (self.den.leading() * other.den.leading()).abs();
            if den.coeff(expected).abs() <= 1e-12 * scale {
                return Err(Error::AlgebraicLoop);
            }
        }
        Ok(RationalTF { num, den })
    }

    /// Cancels the common factor `z^k` of numerator and denominator.
    ///
    /// Only exact zeros at the origin are removed, so this is safe for the FIR
    /// ratios the baselines build, whose denominators are powers of `z`.
    pub fn cancel_origin(&self) -> RationalTF {
        let low = |p: &Polynomial| p.coeffs().iter().take_while(|&&c| c == 0.0).count();
        if self.num.is_zero() {
            return RationalTF::zero();
        }
        let k = low(&self.num).min(low(&self.den));
        RationalTF {
            num: Polynomial::new(self.num.coeffs()[k..].to_vec()),
            den: Polynomial::new(self.den.coeffs()[k..].to_vec()),
        }
    }

    /// `1 / self`; fails for the zero transfer function.
    pub fn reciprocal(&self) -> Result<RationalTF> {
        RationalTF::new(self.den.clone(), self.num.clone())
    }

    pub fn scale(&self, s: f64) -> RationalTF {
        RationalTF {
            num: self.num.scale(s),
            den: self.den.clone(),
        }
    }

    pub fn neg(&self) -> RationalTF {
        self.scale(-1.0)
    }

    /// Splits a proper transfer function into `(D, strictly proper remainder)`.
    pub fn split_feedthrough(&self) -> Result<(f64, RationalTF)> {
        self.require_proper()?;
        let d = self.feedthrough();
        let rest = &self.num - &self.den.scale(d);
        // The leading coefficient cancels exactly in exact arithmetic.
        let n = self.den.deg0();
        let mut c = rest.coeffs().to_vec();
        c.truncate(n);
        Ok((
            d,
            RationalTF {
                num: Polynomial::new(c),
                den: self.den.clone(),
            },
        ))
    }

    /// Cancels numerator/denominator root pairs closer than `tol`.
    pub fn reduce(&self, tol: f64) -> Result<RationalTF> {
        if self.num.is_zero() {
            return Ok(RationalTF::zero());
        }
        let mut zeros = match self.num.degree() {
            Some(0) => Vec::new(),
            _ => self.num.roots()?,
        };
        let mut poles = self.poles()?;
        let mut kept_poles = Vec::new();
        for p in poles.drain(..) {
            if let Some(idx) = zeros.iter().position(|z| (z - p).norm() <= tol) {
                zeros.remove(idx);
            } else {
                kept_poles.push(p);
            }
        }
        let gain = self.num.leading() / self.den.leading();
        RationalTF::new(
            Polynomial::from_roots(&zeros).scale(gain),
            Polynomial::from_roots(&kept_poles),
        )
    }

    /// Controllable canonical realization.
    pub fn to_ss(&self) -> Result<StateSpaceModel> {
        self.require_proper()?;
        let n = self.den.deg0();
        let lead = self.den.leading();
        let d = self.feedthrough();
        let mut a = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, 1);
        let mut c = DMatrix::zeros(1, n);
        if n > 0 {
            for i in 0..n - 1 {
                a[(i, i + 1)] = 1.0;
            }
            for j in 0..n {
                a[(n - 1, j)] = -self.den.coeff(j) / lead;
                c[(0, j)] = (self.num.coeff(j) - d * self.den.coeff(j)) / lead;
            }
            b[(n - 1, 0)] = 1.0;
        }
        let dm = DMatrix::from_element(1, 1, d);
        StateSpaceModel::new(a, b, c, dm)
    }
}

/// Series, parallel, or positive-feedback combination of two transfer functions.
pub fn tf_combine(op: Interconnection, a: &RationalTF, b: &RationalTF) -> Result<RationalTF> {
    match op {
        Interconnection::Series => Ok(a.series(b)),
        Interconnection::Parallel => Ok(a.parallel(b)),
        Interconnection::Feedback => a.feedback(b),
    }
}

impl fmt::Display for RationalTF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{RationalTF, StateSpaceModel};
use crate::error::{Error, Result};

/// Sampled frequency response on `z = e^{j omega}`, `omega` in `[0, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    omegas: Vec<f64>,
    values: Vec<DMatrix<Complex64>>,
}

impl FrequencyResponse {
    pub fn new(omegas: Vec<f64>, values: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if omegas.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} frequencies but {} values",
                omegas.len(),
                values.len()
            )));
        }
        if omegas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::DimensionMismatch("frequencies must be strictly increasing".into()));
        }
        Ok(FrequencyResponse { omegas, values })
    }

    /// SISO response from scalar values.
    pub fn from_scalars(omegas: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        let values = values.into_iter().map(|v| DMatrix::from_element(1, 1, v)).collect();
        FrequencyResponse::new(omegas, values)
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn values(&self) -> &[DMatrix<Complex64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// Scalar values of a SISO response.
    pub fn scalars(&self) -> Vec<Complex64> {
        self.values.iter().map(|m| m[(0, 0)]).collect()
    }
}

/// Anything that can be evaluated on the unit circle.
pub trait Evaluable {
    fn eval_at(&self, z: Complex64) -> Result<DMatrix<Complex64>>;

    fn frequency_response(&self, omegas: &[f64]) -> Result<FrequencyResponse> {
        let values = omegas
            .iter()
            .map(|&w| self.eval_at(Complex64::from_polar(1.0, w)))
            .collect::<Result<Vec<_>>>()?;
        FrequencyResponse::new(omegas.to_vec(), values)
    }
}

impl Evaluable for RationalTF {
    fn eval_at(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        Ok(DMatrix::from_element(1, 1, self.eval(z)?))
    }
}

impl Evaluable for StateSpaceModel {
    fn eval_at(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        self.eval(z)
    }
}

impl Evaluable for FrequencyResponse {
    /// Looks up a stored grid point; only exact grid frequencies are available.
    fn eval_at(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        let w = z.arg();
        self.omegas
            .iter()
            .position(|&o| (o - w).abs() <= 1e-12)
            .map(|i| self.values[i].clone())
            .ok_or(Error::GridMismatch)
    }

    fn frequency_response(&self, omegas: &[f64]) -> Result<FrequencyResponse> {
        if omegas.len() == self.omegas.len() && omegas.iter().zip(&self.omegas).all(|(a, b)| (a - b).abs() <= 1e-12) {
            Ok(self.clone())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

impl<T: Evaluable + ?Sized> Evaluable for &T {
    fn eval_at(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        (**self).eval_at(z)
    }

    fn frequency_response(&self, omegas: &[f64]) -> Result<FrequencyResponse> {
        (**self).frequency_response(omegas)
    }
}

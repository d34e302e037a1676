use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Discrete-time state-space model `x+ = A x + B u`, `y = C x + D u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpaceModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl StateSpaceModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!("A is {}x{}", a.nrows(), a.ncols())));
        }
        if b.nrows() != n {
            return Err(Error::DimensionMismatch(format!("B has {} rows, A has {n}", b.nrows())));
        }
        if c.ncols() != n {
            return Err(Error::DimensionMismatch(format!("C has {} cols, A has {n}", c.ncols())));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        Ok(StateSpaceModel { a, b, c, d })
    }

    /// Memoryless gain `y = D u`.
    pub fn static_gain(d: DMatrix<f64>) -> Self {
        let (p, m) = d.shape();
        StateSpaceModel {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, m),
            c: DMatrix::zeros(p, 0),
            d,
        }
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.d.iter().all(|&v| v == 0.0)
    }

    /// Copy with `D = 0`.
    pub fn strictly_proper_part(&self) -> StateSpaceModel {
        StateSpaceModel {
            d: DMatrix::zeros(self.d.nrows(), self.d.ncols()),
            ..self.clone()
        }
    }

    /// `C (zI - A)^-1 B + D`.
    pub fn eval(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        let n = self.n_states();
        let d = self.d.map(|v| Complex64::new(v, 0.0));
        if n == 0 {
            return Ok(d);
        }
        let mut zi_a = self.a.map(|v| Complex64::new(-v, 0.0));
        for i in 0..n {
            zi_a[(i, i)] += z;
        }
        let b = self.b.map(|v| Complex64::new(v, 0.0));
        let x = linalg::complex_solve(&zi_a, &b).ok_or(Error::PoleOnEvaluationPoint { magnitude: 0.0 })?;
        let c = self.c.map(|v| Complex64::new(v, 0.0));
        Ok(c * x + d)
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        linalg::eigenvalues(&self.a)
    }

    /// Zero-initial-state response to a sequence of input vectors.
    pub fn simulate(&self, inputs: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        let mut x = DVector::zeros(self.n_states());
        let mut out = Vec::with_capacity(inputs.len());
        for u in inputs {
            if u.len() != self.n_inputs() {
                return Err(Error::DimensionMismatch(format!(
                    "input of length {} for a model with {} inputs",
                    u.len(),
                    self.n_inputs()
                )));
            }
            out.push(&self.c * &x + &self.d * u);
            x = &self.a * &x + &self.b * u;
        }
        Ok(out)
    }

    /// SISO convenience wrapper around [`StateSpaceModel::simulate`].
    pub fn simulate_siso(&self, input: &[f64]) -> Result<Vec<f64>> {
        if self.n_inputs() != 1 || self.n_outputs() != 1 {
            return Err(Error::DimensionMismatch("model is not SISO".into()));
        }
        let u: Vec<DVector<f64>> = input.iter().map(|&v| DVector::from_element(1, v)).collect();
        Ok(self.simulate(&u)?.into_iter().map(|y| y[0]).collect())
    }

    /// Realization in new coordinates `x = T x_new`: `(T^-1 A T, T^-1 B, C T, D)`.
    pub fn similarity(&self, t: &DMatrix<f64>) -> Result<StateSpaceModel> {
        if t.nrows() != self.n_states() || t.ncols() != self.n_states() {
            return Err(Error::DimensionMismatch("transform must match the state dimension".into()));
        }
        let t_inv = t.clone().try_inverse().ok_or(Error::SingularTransform)?;
        Ok(StateSpaceModel {
            a: &t_inv * &self.a * t,
            b: &t_inv * &self.b,
            c: &self.c * t,
            d: self.d.clone(),
        })
    }

    /// Closes `u = v - gain * y` around the model: returns the map `v -> y`.
    ///
    /// Used for `G (I + D_k G)^-1`-type corrections. Fails when `I + D gain`
    /// is singular.
    pub fn output_feedback(&self, gain: &DMatrix<f64>) -> Result<StateSpaceModel> {
        let p = self.n_outputs();
        let m = self.n_inputs();
        if gain.nrows() != m || gain.ncols() != p {
            return Err(Error::DimensionMismatch("feedback gain shape".into()));
        }
        // y = C x + D (v - F y)  =>  (I + D F) y = C x + D v
        let w = (DMatrix::identity(p, p) + &self.d * gain)
            .try_inverse()
            .ok_or(Error::IllPosedRealization)?;
        let c = &w * &self.c;
        let d = &w * &self.d;
        // u = v - F y
        let a = &self.a - &self.b * gain * &c;
        let b = &self.b * (DMatrix::identity(m, m) - gain * &d);
        StateSpaceModel::new(a, b, c, d)
    }

    /// State matrix of the positive-feedback loop `u_g = K y_g`, `u_k = y_g`.
    ///
    /// States are stacked `[x_g; x_k]`.
    pub fn positive_feedback_matrix(g: &StateSpaceModel, k: &StateSpaceModel) -> Result<DMatrix<f64>> {
        if g.n_outputs() != k.n_inputs() || g.n_inputs() != k.n_outputs() {
            return Err(Error::DimensionMismatch("plant/controller interconnection".into()));
        }
        let m = g.n_inputs();
        let e = (DMatrix::identity(m, m) - &k.d * &g.d)
            .try_inverse()
            .ok_or(Error::IllPosedInterconnection)?;
        let ng = g.n_states();
        let nk = k.n_states();
        // u = E (C_k x_k + D_k C_g x_g);  y = C_g x_g + D_g u
        let u_xg = &e * &k.d * &g.c;
        let u_xk = &e * &k.c;
        let y_xg = &g.c + &g.d * &u_xg;
        let y_xk = &g.d * &u_xk;
        let mut a = DMatrix::zeros(ng + nk, ng + nk);
        a.view_mut((0, 0), (ng, ng)).copy_from(&(&g.a + &g.b * &u_xg));
        a.view_mut((0, ng), (ng, nk)).copy_from(&(&g.b * &u_xk));
        a.view_mut((ng, 0), (nk, ng)).copy_from(&(&k.b * &y_xg));
        a.view_mut((ng, ng), (nk, nk)).copy_from(&(&k.a + &k.b * &y_xk));
        Ok(a)
    }
}

/// Eigenvalues of `A`, sorted by (real, imaginary).
pub fn ss_eigenvalues(ss: &StateSpaceModel) -> Result<Vec<Complex64>> {
    ss.eigenvalues()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_examples() {
        let zero = StateSpaceModel::new(DMatrix::zeros(2, 2), DMatrix::zeros(2, 1), DMatrix::zeros(1, 2), DMatrix::zeros(1, 1)).unwrap();
        assert!(ss_eigenvalues(&zero).unwrap().iter().all(|z| z.norm() == 0.0));

        let nil = StateSpaceModel::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            DMatrix::zeros(2, 1),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert!(ss_eigenvalues(&nil).unwrap().iter().all(|z| z.norm() < 1e-12));

        let diag = StateSpaceModel::new(
            DMatrix::from_row_slice(2, 2, &[0.75, 0.0, 0.0, 0.3]),
            DMatrix::zeros(2, 1),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let ev = ss_eigenvalues(&diag).unwrap();
        assert!((ev[0].re - 0.3).abs() < 1e-15 && (ev[1].re - 0.75).abs() < 1e-15);
    }

    #[test]
    fn dimension_checks() {
        let r = StateSpaceModel::new(DMatrix::zeros(2, 2), DMatrix::zeros(3, 1), DMatrix::zeros(1, 2), DMatrix::zeros(1, 1));
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn similarity_preserves_response() {
        let ss = StateSpaceModel::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[0.8, -1.0]),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let t = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.5, 3.0]);
        let s2 = ss.similarity(&t).unwrap();
        let z = Complex64::new(0.3, 0.9);
        assert!((ss.eval(z).unwrap()[(0, 0)] - s2.eval(z).unwrap()[(0, 0)]).norm() < 1e-13);
        assert_eq!(ss.similarity(&DMatrix::zeros(2, 2)), Err(Error::SingularTransform));
    }

    #[test]
    fn output_feedback_matches_scalar_formula() {
        // g = 0.5 + 1/(z - 0.2), closed with u = v - 0.4 y  =>  g / (1 + 0.4 g)
        let ss = StateSpaceModel::new(
            DMatrix::from_element(1, 1, 0.2),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 0.5),
        )
        .unwrap();
        let cl = ss.output_feedback(&DMatrix::from_element(1, 1, 0.4)).unwrap();
        let z = Complex64::from_polar(1.0, 0.7);
        let g = ss.eval(z).unwrap()[(0, 0)];
        let expected = g / (1.0 + 0.4 * g);
        assert!((cl.eval(z).unwrap()[(0, 0)] - expected).norm() < 1e-13);
    }
}

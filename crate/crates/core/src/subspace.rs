//! FIR system-level parameters and the affine subspace they must satisfy.
//!
//! For a realization `(A, B, C)` with `n` states, `B: n x m` and `C: p x n`,
//! the four responses are FIR:
//!
//! ```text
//! R = sum_{d=1}^{T+1} R[d] z^-d    (n x n)
//! M = sum_{d=1}^{T+1} M[d] z^-d    (m x n)
//! N = sum_{d=1}^{T+1} N[d] z^-d    (n x p)
//! L = sum_{d=0}^{T}   L[d] z^-d    (m x p)
//! ```
//!
//! Taps are stored by delay: `r[i]` is `R[i + 1]`, while `l[i]` is `L[i]`.
//! Writing `R = sum_{i=0}^{T} z^{-i-1} R_i` maps `R_i` to delay `i + 1`.
//!
//! The constraints
//!
//! ```text
//! [zI - A  -B] [R N; M L] = [I 0]       [R N; M L] [zI - A; -C] = [I; 0]
//! ```
//!
//! are expanded coefficient by coefficient for `z^0 .. z^-(T+1)`, with every
//! tap outside its stored range taken as zero. One scalar equation is emitted
//! per matrix entry per coefficient; dependent rows are kept.
//!
//! The builder only sees `(A, B, C)`, so it serves the controller-side (dual)
//! parameterization and the plant-side one alike.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::lti::{RationalTF, StateSpaceModel, STABILITY_TOL};

/// Feasibility threshold: `||E theta - f|| <= FEASIBILITY_TOL * (1 + ||f||)`.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// Which of the four parameter blocks a coordinate belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Block {
    R,
    M,
    N,
    L,
}

/// Dimensions and horizon of a parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub horizon: usize,
    pub states: usize,
    /// Columns of `B`.
    pub inputs: usize,
    /// Rows of `C`.
    pub outputs: usize,
}

impl Dims {
    pub fn of(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, horizon: usize) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || c.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A {}x{}, B {}x{}, C {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        Ok(Dims {
            horizon,
            states: n,
            inputs: b.ncols(),
            outputs: c.nrows(),
        })
    }

    /// `(rows, cols)` of one tap of `block`.
    pub fn tap_shape(&self, block: Block) -> (usize, usize) {
        let (n, m, p) = (self.states, self.inputs, self.outputs);
        match block {
            Block::R => (n, n),
            Block::M => (m, n),
            Block::N => (n, p),
            Block::L => (m, p),
        }
    }

    /// Stored delays of `block`.
    pub fn delays(&self, block: Block) -> std::ops::RangeInclusive<usize> {
        match block {
            Block::L => 0..=self.horizon,
            _ => 1..=self.horizon + 1,
        }
    }
}

/// Maps `(block, delay, row, col)` to a coordinate of the stacked vector.
///
/// Blocks are stacked `R, M, N, L`; within a block, taps by increasing delay;
/// within a tap, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub dims: Dims,
}

impl Layout {
    const ORDER: [Block; 4] = [Block::R, Block::M, Block::N, Block::L];

    fn block_len(&self, block: Block) -> usize {
        let (r, c) = self.dims.tap_shape(block);
        r * c * (self.dims.horizon + 1)
    }

    fn block_offset(&self, block: Block) -> usize {
        Self::ORDER
            .iter()
            .take_while(|&&b| b != block)
            .map(|&b| self.block_len(b))
            .sum()
    }

    pub fn len(&self) -> usize {
        Self::ORDER.iter().map(|&b| self.block_len(b)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate of an entry; `None` when the delay is not stored.
    pub fn index(&self, block: Block, delay: usize, row: usize, col: usize) -> Option<usize> {
        let delays = self.dims.delays(block);
        if !delays.contains(&delay) {
            return None;
        }
        let (r, c) = self.dims.tap_shape(block);
        debug_assert!(row < r && col < c);
        let tap = delay - delays.start();
        Some(self.block_offset(block) + tap * r * c + row * c + col)
    }

    /// Coordinates of every `L` entry, in stacking order.
    pub fn l_indices(&self) -> std::ops::Range<usize> {
        let start = self.block_offset(Block::L);
        start..start + self.block_len(Block::L)
    }
}

/// FIR taps of `{R, M, N, L}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirParams {
    pub dims: Dims,
    /// `R[1] ..= R[T+1]`.
    pub r: Vec<DMatrix<f64>>,
    /// `M[1] ..= M[T+1]`.
    pub m: Vec<DMatrix<f64>>,
    /// `N[1] ..= N[T+1]`.
    pub n: Vec<DMatrix<f64>>,
    /// `L[0] ..= L[T]`.
    pub l: Vec<DMatrix<f64>>,
}

impl FirParams {
    pub fn zeros(dims: Dims) -> Self {
        let taps = |b: Block| {
            let (r, c) = dims.tap_shape(b);
            vec![DMatrix::zeros(r, c); dims.horizon + 1]
        };
        FirParams {
            dims,
            r: taps(Block::R),
            m: taps(Block::M),
            n: taps(Block::N),
            l: taps(Block::L),
        }
    }

    pub fn horizon(&self) -> usize {
        self.dims.horizon
    }

    pub fn layout(&self) -> Layout {
        Layout { dims: self.dims }
    }

    fn taps(&self, block: Block) -> &[DMatrix<f64>] {
        match block {
            Block::R => &self.r,
            Block::M => &self.m,
            Block::N => &self.n,
            Block::L => &self.l,
        }
    }

    fn taps_mut(&mut self, block: Block) -> &mut [DMatrix<f64>] {
        match block {
            Block::R => &mut self.r,
            Block::M => &mut self.m,
            Block::N => &mut self.n,
            Block::L => &mut self.l,
        }
    }

    /// Tap of `block` at `delay`, or `None` outside the stored range.
    pub fn tap(&self, block: Block, delay: usize) -> Option<&DMatrix<f64>> {
        let delays = self.dims.delays(block);
        if delays.contains(&delay) {
            Some(&self.taps(block)[delay - delays.start()])
        } else {
            None
        }
    }

    pub fn pack(&self) -> DVector<f64> {
        let layout = self.layout();
        let mut theta = DVector::zeros(layout.len());
        for block in Layout::ORDER {
            let first = *self.dims.delays(block).start();
            for (i, tap) in self.taps(block).iter().enumerate() {
                for row in 0..tap.nrows() {
                    for col in 0..tap.ncols() {
                        let idx = layout.index(block, first + i, row, col).expect("stored delay");
                        theta[idx] = tap[(row, col)];
                    }
                }
            }
        }
        theta
    }

    pub fn unpack(dims: Dims, theta: &DVector<f64>) -> Result<Self> {
        let layout = Layout { dims };
        if theta.len() != layout.len() {
            return Err(Error::DimensionMismatch(format!(
                "parameter vector has {} entries, layout needs {}",
                theta.len(),
                layout.len()
            )));
        }
        let mut p = FirParams::zeros(dims);
        for block in Layout::ORDER {
            let first = *dims.delays(block).start();
            for (i, tap) in p.taps_mut(block).iter_mut().enumerate() {
                for row in 0..tap.nrows() {
                    for col in 0..tap.ncols() {
                        tap[(row, col)] = theta[layout.index(block, first + i, row, col).expect("stored delay")];
                    }
                }
            }
        }
        Ok(p)
    }

    /// Evaluates one block's FIR transfer matrix at `z`.
    pub fn eval_block(&self, block: Block, z: Complex64) -> DMatrix<Complex64> {
        let (r, c) = self.dims.tap_shape(block);
        let first = *self.dims.delays(block).start();
        let zinv = z.inv();
        let mut acc = DMatrix::<Complex64>::zeros(r, c);
        let mut w = zinv.powu(first as u32);
        for tap in self.taps(block) {
            acc += tap.map(|v| Complex64::new(v, 0.0)) * w;
            w *= zinv;
        }
        acc
    }

    /// Scalar `L` taps of a SISO parameter set.
    pub fn l_scalars(&self) -> Vec<f64> {
        self.l.iter().map(|t| t[(0, 0)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        Layout::ORDER
            .iter()
            .all(|&b| self.taps(b).iter().all(|t| t.iter().all(|v| v.is_finite())))
    }
}

#[derive(Serialize, Deserialize)]
struct FirParamsJson {
    horizon: usize,
    states: usize,
    inputs: usize,
    outputs: usize,
    r: Vec<Vec<f64>>,
    m: Vec<Vec<f64>>,
    n: Vec<Vec<f64>>,
    l: Vec<Vec<f64>>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl Serialize for FirParams {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let conv = |taps: &[DMatrix<f64>]| taps.iter().map(row_major).collect();
        FirParamsJson {
            horizon: self.dims.horizon,
            states: self.dims.states,
            inputs: self.dims.inputs,
            outputs: self.dims.outputs,
            r: conv(&self.r),
            m: conv(&self.m),
            n: conv(&self.n),
            l: conv(&self.l),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FirParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = FirParamsJson::deserialize(d)?;
        let dims = Dims {
            horizon: raw.horizon,
            states: raw.states,
            inputs: raw.inputs,
            outputs: raw.outputs,
        };
        let conv = |block: Block, taps: Vec<Vec<f64>>| -> std::result::Result<Vec<DMatrix<f64>>, D::Error> {
            let (r, c) = dims.tap_shape(block);
            if taps.len() != dims.horizon + 1 {
                return Err(D::Error::custom(format!("{block:?}: expected {} taps", dims.horizon + 1)));
            }
            taps.into_iter()
                .map(|t| {
                    if t.len() != r * c {
                        Err(D::Error::custom(format!("{block:?}: tap needs {} entries", r * c)))
                    } else {
                        Ok(DMatrix::from_row_slice(r, c, &t))
                    }
                })
                .collect()
        };
        Ok(FirParams {
            dims,
            r: conv(Block::R, raw.r)?,
            m: conv(Block::M, raw.m)?,
            n: conv(Block::N, raw.n)?,
            l: conv(Block::L, raw.l)?,
        })
    }
}

/// Constraint family a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// `[zI - A, -B] [R N; M L] = [I 0]`.
    Left,
    /// `[R N; M L] [zI - A; -C] = [I; 0]`.
    Right,
}

/// Sparse linear system `E theta = f` in coordinate form.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSystem {
    pub layout: Layout,
    /// `(row, col, value)` triplets; duplicates are summed.
    pub entries: Vec<(usize, usize, f64)>,
    pub rhs: DVector<f64>,
    pub families: Vec<Family>,
}

impl AffineSystem {
    pub fn nrows(&self) -> usize {
        self.rhs.len()
    }

    pub fn ncols(&self) -> usize {
        self.layout.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut e = DMatrix::zeros(self.nrows(), self.ncols());
        for &(r, c, v) in &self.entries {
            e[(r, c)] += v;
        }
        e
    }

    /// `E theta - f`.
    pub fn residual(&self, theta: &DVector<f64>) -> DVector<f64> {
        let mut res = -self.rhs.clone();
        for &(r, c, v) in &self.entries {
            res[r] += v * theta[c];
        }
        res
    }
}

struct RowBuilder<'a> {
    layout: &'a Layout,
    entries: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
    families: Vec<Family>,
    row: Vec<(usize, f64)>,
}

impl RowBuilder<'_> {
    fn term(&mut self, block: Block, delay: usize, row: usize, col: usize, coef: f64) {
        if coef == 0.0 {
            return;
        }
        if let Some(idx) = self.layout.index(block, delay, row, col) {
            self.row.push((idx, coef));
        }
    }

    fn finish(&mut self, rhs: f64, family: Family) {
        let r = self.rhs.len();
        self.entries.extend(self.row.drain(..).map(|(c, v)| (r, c, v)));
        self.rhs.push(rhs);
        self.families.push(family);
    }
}

/// Builds the coefficient-matching equations for horizon `horizon`.
pub fn build_affine_constraints(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    horizon: usize,
) -> Result<AffineSystem> {
    if horizon < 1 {
        return Err(Error::DimensionMismatch("horizon must be at least 1".into()));
    }
    let dims = Dims::of(a, b, c, horizon)?;
    let layout = Layout { dims };
    let (n, m, p) = (dims.states, dims.inputs, dims.outputs);
    let mut rb = RowBuilder {
        layout: &layout,
        entries: Vec::new(),
        rhs: Vec::new(),
        families: Vec::new(),
        row: Vec::new(),
    };
    let eye = |k: usize, i: usize, j: usize| if k == 0 && i == j { 1.0 } else { 0.0 };

    for k in 0..=horizon + 1 {
        // Left family, coefficient of z^-k.
        // R[k+1] - A R[k] - B M[k] = delta_k0 I
        for i in 0..n {
            for j in 0..n {
                rb.term(Block::R, k + 1, i, j, 1.0);
                if k >= 1 {
                    for l in 0..n {
                        rb.term(Block::R, k, l, j, -a[(i, l)]);
                    }
                    for l in 0..m {
                        rb.term(Block::M, k, l, j, -b[(i, l)]);
                    }
                }
                rb.finish(eye(k, i, j), Family::Left);
            }
        }
        // N[k+1] - A N[k] - B L[k] = 0
        for i in 0..n {
            for j in 0..p {
                rb.term(Block::N, k + 1, i, j, 1.0);
                if k >= 1 {
                    for l in 0..n {
                        rb.term(Block::N, k, l, j, -a[(i, l)]);
                    }
                }
                for l in 0..m {
                    rb.term(Block::L, k, l, j, -b[(i, l)]);
                }
                rb.finish(0.0, Family::Left);
            }
        }
        // Right family.
        // R[k+1] - R[k] A - N[k] C = delta_k0 I
        for i in 0..n {
            for j in 0..n {
                rb.term(Block::R, k + 1, i, j, 1.0);
                if k >= 1 {
                    for l in 0..n {
                        rb.term(Block::R, k, i, l, -a[(l, j)]);
                    }
                    for l in 0..p {
                        rb.term(Block::N, k, i, l, -c[(l, j)]);
                    }
                }
                rb.finish(eye(k, i, j), Family::Right);
            }
        }
        // M[k+1] - M[k] A - L[k] C = 0
        for i in 0..m {
            for j in 0..n {
                rb.term(Block::M, k + 1, i, j, 1.0);
                if k >= 1 {
                    for l in 0..n {
                        rb.term(Block::M, k, i, l, -a[(l, j)]);
                    }
                }
                for l in 0..p {
                    rb.term(Block::L, k, i, l, -c[(l, j)]);
                }
                rb.finish(0.0, Family::Right);
            }
        }
    }
    let RowBuilder {
        entries, rhs, families, ..
    } = rb;
    Ok(AffineSystem {
        layout,
        entries,
        rhs: DVector::from_vec(rhs),
        families,
    })
}

/// Outcome of [`check_feasibility`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// `||E theta_ls - f||_2` for the least-squares solution.
    pub residual: f64,
    pub rank: usize,
    pub unknowns: usize,
    /// Dimension of the null space of `E` (free parameters).
    pub null_dim: usize,
}

pub fn check_feasibility(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, horizon: usize) -> Result<FeasibilityReport> {
    let sys = build_affine_constraints(a, b, c, horizon)?;
    let e = sys.to_dense();
    let sol = linalg::affine_solution(&e, &sys.rhs, linalg::default_rank_tol(e.nrows(), e.ncols()));
    let residual = (&e * &sol.particular - &sys.rhs).norm();
    Ok(FeasibilityReport {
        feasible: residual <= FEASIBILITY_TOL * (1.0 + sys.rhs.norm()),
        residual,
        rank: sol.rank,
        unknowns: e.ncols(),
        null_dim: e.ncols() - sol.rank,
    })
}

/// Constraint residuals of a parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// `max |E theta - f|` over all rows.
    pub max_abs: f64,
    pub left: f64,
    pub right: f64,
    pub within_tol: bool,
}

pub fn verify_params(
    params: &FirParams,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    tol: f64,
) -> Result<ResidualReport> {
    let dims = Dims::of(a, b, c, params.horizon())?;
    if dims != params.dims {
        return Err(Error::DimensionMismatch(format!(
            "params {:?} vs realization {:?}",
            params.dims, dims
        )));
    }
    let sys = build_affine_constraints(a, b, c, params.horizon())?;
    let res = sys.residual(&params.pack());
    let (mut left, mut right) = (0.0f64, 0.0f64);
    for (v, fam) in res.iter().zip(&sys.families) {
        match fam {
            Family::Left => left = left.max(v.abs()),
            Family::Right => right = right.max(v.abs()),
        }
    }
    let max_abs = left.max(right);
    Ok(ResidualReport {
        max_abs,
        left,
        right,
        within_tol: max_abs <= tol,
    })
}

/// Exact dual responses of the loop `(G, K)`, truncated to the FIR layout.
///
/// The controller state `xi` and plant output `ybar` respond to the
/// disturbances `delta_xi` (on the controller state) and `delta_ubar` (on the
/// controller output):
///
/// ```text
/// xi+  = A_k xi + B_k ybar + delta_xi
/// ubar = C_k xi + delta_ubar
/// ybar = Gc ubar
/// ```
///
/// For a controller with feedthrough `D_k` the strictly proper part is used
/// together with `Gc = G (1 - D_k G)^-1`, so that `L` still equals
/// `(1 - G K)^-1 G`. Taps come from simulating impulses; they are a test
/// oracle and need not satisfy the FIR terminal constraints.
pub fn true_dual_params(g: &RationalTF, k: &StateSpaceModel, horizon: usize) -> Result<FirParams> {
    if k.n_inputs() != 1 || k.n_outputs() != 1 {
        return Err(Error::DimensionMismatch("true_dual_params expects a SISO controller".into()));
    }
    let dk = k.d[(0, 0)];
    let gc = if dk != 0.0 {
        RationalTF::new(g.num().clone(), g.den() - &g.num().scale(dk))?
    } else {
        g.clone()
    };
    let gs = gc.to_ss()?;
    let dims = Dims::of(&k.a, &k.b, &k.c, horizon)?;
    let n = dims.states;
    let ng = gs.n_states();
    let dg = gs.d[(0, 0)];

    // Stacked state [xi; x_g]; with ubar = C_k xi + du and ybar = C_g x_g + D_g ubar.
    let cg = &gs.c;
    let mut a_cl = DMatrix::zeros(n + ng, n + ng);
    a_cl.view_mut((0, 0), (n, n)).copy_from(&(&k.a + &k.b * dg * &k.c));
    a_cl.view_mut((0, n), (n, ng)).copy_from(&(&k.b * cg));
    a_cl.view_mut((n, 0), (ng, n)).copy_from(&(&gs.b * &k.c));
    a_cl.view_mut((n, n), (ng, ng)).copy_from(&gs.a);
    let rho = linalg::spectral_radius(&a_cl)?;
    if rho >= 1.0 - STABILITY_TOL {
        let poles = linalg::eigenvalues(&a_cl)?;
        return Err(Error::UnstableLoop {
            poles: crate::error::pole_list(&poles.into_iter().filter(|p| p.norm() >= 1.0 - STABILITY_TOL).collect::<Vec<_>>()),
        });
    }
    // Inputs: delta_xi enters xi+ directly; delta_ubar enters through ubar.
    let mut b_xi = DMatrix::zeros(n + ng, n);
    b_xi.view_mut((0, 0), (n, n)).fill_with_identity();
    let mut b_u = DMatrix::zeros(n + ng, 1);
    b_u.view_mut((0, 0), (n, 1)).copy_from(&(&k.b * dg));
    b_u.view_mut((n, 0), (ng, 1)).copy_from(&gs.b);
    // Outputs: xi and ybar.
    let mut c_y = DMatrix::zeros(1, n + ng);
    c_y.view_mut((0, 0), (1, n)).copy_from(&(&k.c * dg));
    c_y.view_mut((0, n), (1, ng)).copy_from(cg);

    let mut params = FirParams::zeros(dims);
    // Responses to delta_xi impulse: state after t steps is A^(t-1) b_xi.
    let mut x = b_xi.clone();
    for d in 1..=horizon + 1 {
        params.r[d - 1] = x.rows(0, n).into_owned();
        params.m[d - 1] = &c_y * &x;
        x = &a_cl * x;
    }
    // Responses to delta_ubar impulse.
    params.l[0] = DMatrix::from_element(1, 1, dg);
    let mut x = b_u.clone();
    for d in 1..=horizon + 1 {
        params.n[d - 1] = x.rows(0, n).into_owned();
        if d <= horizon {
            params.l[d] = &c_y * &x;
        }
        x = &a_cl * x;
    }
    Ok(params)
}

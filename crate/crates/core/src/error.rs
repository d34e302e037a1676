use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("polynomial is identically zero")]
    ZeroPolynomial,
    #[error("polynomial has degree zero and no roots")]
    ConstantPolynomial,
    #[error("denominator polynomial is zero")]
    ZeroDenominator,
    #[error("transfer function has a pole at the evaluation point (|den| = {magnitude:e})")]
    PoleOnEvaluationPoint { magnitude: f64 },
    #[error("transfer function is improper: deg(num) = {num_degree} > deg(den) = {den_degree}")]
    ImproperTransferFunction {
        num_degree: usize,
        den_degree: usize,
    },
    #[error("feedback interconnection is not well posed (algebraic loop)")]
    AlgebraicLoop,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("eigenvalue iteration failed to converge")]
    EigenDecomposition,

    #[error("signal `{name}` contains a non-finite sample at index {index}")]
    NonFiniteSample { name: String, index: usize },
    #[error("LFSR initial state is all zeros")]
    ZeroInitialState,
    #[error("LFSR period {period} is shorter than the maximal length {expected}")]
    NonMaximalLength { period: usize, expected: usize },
    #[error("invalid LFSR specification: {0}")]
    InvalidLfsr(String),
    #[error("noise standard deviation must be non-negative, got {0}")]
    NegativeSigma(f64),
    #[error("signal is empty or too short for the requested horizon")]
    EmptySignal,
    #[error("signal lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("closed loop is unstable; offending poles: {poles:?}")]
    UnstableLoop { poles: Vec<(f64, f64)> },
    #[error("closed loop is ill posed (1 - G(inf) K(inf) = 0)")]
    IllPosedLoop,
    #[error("noise filter S must be proper and stable")]
    UnstableNoiseFilter,

    #[error("no parameters satisfy the affine constraints (residual {residual:e})")]
    InfeasibleConstraints { residual: f64 },
    #[error("R(e^jw) is singular at w = {omega} (condition estimate {condition:e})")]
    SingularRk { omega: f64, condition: f64 },
    #[error("I + D_k G is singular at w = {omega}")]
    SingularCorrection { omega: f64 },
    #[error("realization interconnection is not well posed")]
    IllPosedRealization,
    #[error("similarity transform is singular")]
    SingularTransform,
    #[error("constraint residual {residual:e} exceeds the realization bound")]
    ConstraintResidualTooLarge { residual: f64 },

    #[error("nominal plant is not stabilized by the controller; poles: {poles:?}")]
    NominalNotStabilized { poles: Vec<(f64, f64)> },
    #[error("prefilter (D0 - K N0)^-1 is unstable")]
    UnstableFilter,
    #[error("least-squares regressor is rank deficient (rank {rank} of {cols})")]
    RankDeficientRegressor { rank: usize, cols: usize },

    #[error("frequency grid needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("reference response is (numerically) zero at w = {omega}")]
    ZeroReferenceValue { omega: f64 },
    #[error("closed loop I - G K is singular at w = {omega}")]
    SingularClosedLoop { omega: f64 },
    #[error("interconnection is ill posed (I - D_G D_K singular)")]
    IllPosedInterconnection,
    #[error("frequency grids differ")]
    GridMismatch,

    #[error("configuration error: {0}")]
    Config(String),
    #[error("data length {length} must exceed the horizon {horizon}")]
    LengthTooShort { length: usize, horizon: usize },
    #[error("malformed results: {0}")]
    MalformedResults(String),
    #[error("I/O error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn pole_list(poles: &[num_complex::Complex64]) -> Vec<(f64, f64)> {
    poles.iter().map(|p| (p.re, p.im)).collect()
}

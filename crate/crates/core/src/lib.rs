pub mod baselines;
pub mod closed_loop;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod linalg;
pub mod lti;
pub mod metrics;
pub mod signals;
pub mod subspace;

pub use error::{Error, Result};

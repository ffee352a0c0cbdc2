use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in {context}")]
    Parse {
        context: String,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("mesh too coarse: {samples} samples, need at least {required}")]
    MeshTooCoarse { samples: usize, required: usize },
    #[error("non-finite field value at t = {t}: y = {y:?}")]
    NonFinite { t: f64, y: Vec<f64> },
    #[error("Simpson's rule needs an odd number of samples, got {0}")]
    EvenSampleCount(usize),
    #[error("irregular Lagrangian at t = {t}, x = {x:?}, dx = {dx:?}, z = {z}: velocity Hessian condition estimate {condition:e}")]
    IrregularLagrangian {
        t: f64,
        x: Vec<f64>,
        dx: Vec<f64>,
        z: f64,
        condition: f64,
    },
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("singular finite-difference Jacobian at v = {v:?}")]
    SingularJacobian { v: Vec<f64> },
    #[error("the Lagrangian depends on z; the classical equation does not apply")]
    NotClassical,
    #[error("family `{family}`: {reason}")]
    InvalidFamily { family: String, reason: String },
    #[error("family `{family}`: time rate d𝒯/dt = {rate} is not positive at t = {t} (s = {s})")]
    NonInvertibleTime { family: String, s: f64, t: f64, rate: f64 },
    #[error("family `{family}`: dT/dt varies by {variation:e}, so no constant drift ξ exists")]
    DriftUndefined { family: String, variation: f64 },
    #[error("family `{family}` moves z (max |Z| = {max_z:e}); the z-free quantity does not apply")]
    ZGeneratorNonZero { family: String, max_z: f64 },
    #[error("I/O error")]
    Io(#[from] std::io::Error),
    #[error("CSV error")]
    Csv(#[from] csv::Error),
    #[error("JSON error")]
    Json(#[from] serde_json::Error),
}

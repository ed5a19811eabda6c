use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration key failed validation.
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: String, reason: String },

    #[error("stability guard violated: dt * max(gamma_l, gamma_r, gamma, |delta|) = {product:.3e} >= 0.1")]
    StabilityGuard { product: f64 },

    #[error("steady state is not unique: {dimension} eigenvalues of the Liouvillian below {tolerance:e}")]
    NonUniqueSteadyState { dimension: usize, tolerance: f64 },

    #[error("steady state residual {residual:.3e} exceeds {tolerance:e}")]
    SteadyStateResidual { residual: f64, tolerance: f64 },

    #[error("non-finite density matrix element at step {step}")]
    NonFinite { step: usize },

    #[error("positivity violated at t = {time}: minimum eigenvalue {min_eigenvalue:.3e}")]
    Positivity { time: f64, min_eigenvalue: f64 },

    #[error("jump projection has zero trace (rho_cc = {rho_cc})")]
    ZeroTraceProjection { rho_cc: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("{failed} of {total} trajectories invalid (limit {limit})")]
    TooManyInvalid {
        failed: usize,
        total: usize,
        limit: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error class: 2 config, 3 numerical,
    /// 4 insufficient estimator data. I/O failures map to 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid { .. } | Error::StabilityGuard { .. } => 2,
            Error::InsufficientData(_) => 4,
            Error::Io { .. } => 1,
            _ => 3,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, OscError>;

/// Every failure the library can report.
///
/// The variants fall into three families that the CLI maps onto exit codes:
/// configuration problems, numerical failures (resonance, singular systems,
/// solver non-convergence) and I/O.
#[derive(Debug, Error)]
pub enum OscError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("resonant step: {0}")]
    ResonantStep(String),

    #[error("resonant forcing: {0}")]
    ResonantForcing(String),

    #[error("matrix is singular or ill-conditioned (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("system is not underdamped: omega0^2 - gamma^2 = {discriminant:.6e}")]
    NotUnderdamped { discriminant: f64 },

    #[error("velocity not recoverable from positions at this step (|sin(omega eps)| = {sin:.3e})")]
    VelocityNotRecoverable { sin: f64 },

    #[error("orbit unbound at step {step}: u = {u:.6e}")]
    OrbitUnbound { step: usize, u: f64 },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<OscError>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl OscError {
    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            e @ OscError::AtStep { .. } => e,
            e => OscError::AtStep {
                step,
                source: Box::new(e),
            },
        }
    }

    /// Innermost error with any step annotation removed.
    pub fn root(&self) -> &OscError {
        match self {
            OscError::AtStep { source, .. } => source.root(),
            e => e,
        }
    }

    /// Process exit code: 2 config, 3 numerical, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            OscError::Config(_)
            | OscError::DimensionMismatch { .. }
            | OscError::Domain(_)
            | OscError::NotUnderdamped { .. } => 2,
            OscError::Io { .. } => 4,
            _ => 3,
        }
    }
}

//! Error type shared by every module.

use thiserror::Error;

/// Failures reported by the library. Each variant maps onto a CLI exit code
/// through [`Error::exit_code`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("collision approach: |q| = {distance:e} fell below the floor {floor:e}")]
    CollisionApproach { distance: f64, floor: f64 },

    #[error("chart mismatch: {0}")]
    ChartMismatch(String),

    #[error("Jacobi constant {c} is not below the critical value -3/2")]
    AboveCritical { c: f64 },

    #[error("Jacobi constant {c} is not generic: {reason} (k = {k}, l = {l})")]
    NonGeneric { c: f64, k: u64, l: u64, reason: String },

    #[error("energy {energy} is resonant for cover {cover}: (k, l) = ({k}, {l})")]
    ResonantEnergy { energy: f64, cover: u32, k: u64, l: u64 },

    #[error("degenerate crossing at t = {time}: {detail}")]
    DegenerateCrossing { time: f64, detail: String },

    #[error("symplecticity defect {defect:e} exceeds {tolerance:e}")]
    NotSymplectic { defect: f64, tolerance: f64 },

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("verification failed: {0}")]
    Verification(String),
}

impl Error {
    /// Exit code used by the command line tool: 1 for bad arguments,
    /// 2 for domain and numerical failures, 3 for failed verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 1,
            Error::Verification(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

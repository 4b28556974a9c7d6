use num_complex::Complex64;
use thiserror::Error;

use crate::bethe::Parity;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parity mismatch: kbar={kbar} is incompatible with level n={n}")]
    ParityMismatch { kbar: i64, n: usize },

    #[error("Newton solver did not converge for n={n} at g={g} (last k={last_k}, |residual|={residual:e})")]
    NonConvergence {
        n: usize,
        g: Complex64,
        last_k: Complex64,
        residual: f64,
    },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("corrector diverged on segment {segment} at g={g}")]
    CorrectorDiverged { segment: usize, g: Complex64 },

    #[error("continuation aborted near a branch point at g={g}")]
    NearBranchPoint { g: Complex64 },

    #[error("exceptional point search for n={n} failed: {reason}")]
    EpSearch { n: usize, reason: String, history: Vec<(Complex64, Complex64)> },

    #[error("{failures} of {total} exceptional point searches failed ({parity:?} family)")]
    EpEnumeration {
        parity: Parity,
        total: usize,
        failures: usize,
        errors: Vec<Error>,
    },

    #[error("singular at an exceptional point: {0}")]
    Singular(String),

    #[error("quadrature did not converge: estimated error {estimate:e} exceeds {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("transport step underflow at t={t} (g={g})")]
    StepUnderflow { t: f64, g: Complex64 },

    #[error("conjugation symmetry violated for n={n} at g={g}")]
    Symmetry { n: usize, g: Complex64 },

    #[error("invalid truncation: {0}")]
    Truncation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

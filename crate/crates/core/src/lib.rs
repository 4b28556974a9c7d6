//! Quasi-momentum Riemann surfaces, exceptional points and eigenspace holonomy
//! of two bosons on a ring with a complexified contact coupling `g`.
//!
//! The crate is organised bottom-up:
//!
//! * [`bethe`] solves the two-body Bethe equations at real coupling.
//! * [`continuation`] continues quasi-momenta along contours in the complex
//!   `g`-plane and assembles Riemann sheets.
//! * [`exceptional`] locates the square-root branch points where two levels
//!   coalesce.
//! * [`eigensystem`] builds right/left eigenfunctions and evaluates the gauge
//!   connection by quadrature.
//! * [`holonomy`] holds the closed-form connection, matrix transport along
//!   contours and the analytic holonomy matrices.
//! * [`cycles`] compares the real adiabatic cycle with complex contours that
//!   enclose exceptional points.
//! * [`io`] provides run configuration and export formats.

pub mod bethe;
pub mod continuation;
pub mod cycles;
pub mod eigensystem;
mod error;
pub mod exceptional;
pub mod holonomy;
pub mod io;
pub mod quadrature;

pub use num_complex::Complex64;

pub use bethe::{
    bethe_residual, energy, j_function, solve_k_real, BetheState, EnergyLevel, JValue, Parity,
    SolverConfig,
};
pub use continuation::{
    build_sheet, conjugation_symmetry_check, continue_along, sheet_state, ComplexPath,
    ContinuationConfig, ContinuationTrace, GridSpec, RiemannSheet, TraceStatus, TrackedLevel,
};
pub use cycles::{contour_permutation, hermitian_cycle, n_ep_contour, CycleResult, CycleStatus};
pub use eigensystem::{normalization_pt, overlap_connection_oracle, OracleConfig};
pub use error::{Error, Result};
pub use io::{ExportRecord, RunConfig};
pub use exceptional::{enumerate_eps, find_ep, local_expansion, ExceptionalPoint};
pub use holonomy::{
    d_function, d_function_at, gauge_connection, m_chain_analytic, m_n_analytic, transport, HolonomyMatrix,
    Ordering, TransportConfig, TruncationSpec,
};

/// Dense complex matrix used for connections and holonomies.
pub type CMatrix = nalgebra::DMatrix<Complex64>;

/// Largest entry modulus of a complex matrix.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

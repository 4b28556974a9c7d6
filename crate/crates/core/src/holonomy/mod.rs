//! Gauge connection, matrix transport and analytic holonomy matrices for one
//! parity family of levels.

mod analytic;
mod connection;
mod contours;
mod transport;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bethe::Parity;
use crate::continuation::{ComplexPath, ContinuationConfig, TrackedLevel};
use crate::error::{Error, Result};

pub use analytic::{d_sign, m_chain_analytic, m_n_analytic, m_product};
pub use connection::{connection_from_levels, d_function, d_function_at, d_function_trig, gauge_connection};
pub use contours::{chain_contour, ep_circle, ep_keyhole, KeyholeSpec};
pub use transport::{initial_levels, transport, transport_from, transport_with};

/// Retained levels `n_b, n_b + 2, …` of one parity family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationSpec {
    pub parity: Parity,
    pub n_levels: usize,
}

impl TruncationSpec {
    pub fn new(parity: Parity, n_levels: usize) -> Result<Self> {
        if n_levels < 2 {
            return Err(Error::Truncation(format!(
                "at least two levels are needed, got {n_levels}"
            )));
        }
        Ok(Self { parity, n_levels })
    }

    pub fn levels(&self) -> Vec<usize> {
        (0..self.n_levels).map(|i| self.parity.level(i)).collect()
    }

    pub fn slot_of(&self, n: usize) -> Option<usize> {
        if n < self.parity.ground() || crate::bethe::Parity::of(n) != self.parity {
            return None;
        }
        let slot = (n - self.parity.ground()) / 2;
        (slot < self.n_levels).then_some(slot)
    }

    pub fn top_level(&self) -> usize {
        self.parity.level(self.n_levels - 1)
    }
}

/// Order of the factors in the transport equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Ordering {
    /// `dU/dt = -i U A g'`: later path elements multiply on the right.
    #[default]
    AntiPathOrdered,
    /// `dU/dt = -i A U g'`.
    PathOrdered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportConfig {
    pub rtol: f64,
    pub atol: f64,
    pub ordering: Ordering,
    pub max_steps: usize,
    /// Smallest step in the per-segment parameter `t ∈ [0, 1]`.
    pub min_step: f64,
    /// Warn when the integrated coupling of the top level exceeds this.
    pub leakage_warn: f64,
    /// Corrector settings for the co-continued levels.
    pub continuation: ContinuationConfig,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            ordering: Ordering::AntiPathOrdered,
            max_steps: 2_000_000,
            min_step: 1e-14,
            leakage_warn: 0.5,
            continuation: ContinuationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransportDiagnostics {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// `∫ |A_{top,·}| |dg|` along the path.
    pub leakage: f64,
    /// Co-continued levels at the end of the path, in truncation order.
    pub final_levels: Vec<TrackedLevel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolonomyMatrix {
    pub truncation: TruncationSpec,
    pub matrix: DMatrix<Complex64>,
    /// Transported contour; `None` for closed-form matrices.
    pub contour: Option<ComplexPath>,
    pub ordering: Ordering,
    pub diagnostics: Option<TransportDiagnostics>,
    pub warnings: Vec<String>,
}

impl HolonomyMatrix {
    pub fn levels(&self) -> Vec<usize> {
        self.truncation.levels()
    }

    /// Entry `(row level, column level)`.
    pub fn entry(&self, row: usize, col: usize) -> Option<Complex64> {
        Some(self.matrix[(self.truncation.slot_of(row)?, self.truncation.slot_of(col)?)])
    }

    pub fn max_abs_diff(&self, other: &DMatrix<Complex64>) -> f64 {
        crate::max_abs(&(&self.matrix - other))
    }
}

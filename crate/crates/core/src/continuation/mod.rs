//! Predictor-corrector continuation of `k_n(g)` in the complex coupling plane.
//!
//! Each step predicts with `dk/dg = (2k/π) / r` and corrects with Newton on the
//! pole-free residual. Alongside `k` the tracker carries a continuous branch of
//! `sqrt(r)`, `r = k² + g² + 2g/π`, which the holonomy module needs for the
//! sign of the connection.

mod path;
mod sheet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bethe::{self, BetheState, Parity};
use crate::error::{Error, Result};

pub use path::ComplexPath;
pub(crate) use path::arc_points;
pub use sheet::{
    build_sheet, conjugation_symmetry_check, sheet_state, CutSegment, GridSpec, RiemannSheet,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationConfig {
    pub residual_tol: f64,
    /// Newton iterations allowed per corrector.
    pub max_corrector: usize,
    /// Steps are refused while `|∂J/∂k|` is below this value.
    pub proximity: f64,
    pub max_steps: usize,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-12,
            max_corrector: 5,
            proximity: 1e-4,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceStatus {
    Completed,
    AbortedNearBranchPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub g: Complex64,
    pub k: Complex64,
    pub residual: f64,
    pub sqrt_r: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationTrace {
    pub start: BetheState,
    pub samples: Vec<TraceSample>,
    pub status: TraceStatus,
    /// Sample index reached at each waypoint (only waypoints actually reached).
    pub waypoint_samples: Vec<usize>,
}

impl ContinuationTrace {
    pub fn last(&self) -> &TraceSample {
        self.samples.last().expect("trace always holds the start sample")
    }

    pub fn final_state(&self) -> BetheState {
        let s = self.last();
        BetheState::new(self.start.n, s.g, s.k)
    }

    pub fn completed(&self) -> bool {
        self.status == TraceStatus::Completed
    }

    /// Level state (with `sqrt r`) at the last sample.
    pub fn final_level(&self) -> TrackedLevel {
        let s = self.last();
        TrackedLevel {
            state: BetheState::new(self.start.n, s.g, s.k),
            sqrt_r: s.sqrt_r,
        }
    }
}

/// A point on a branch together with the continued square root of `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackedLevel {
    pub state: BetheState,
    pub sqrt_r: Complex64,
}

impl TrackedLevel {
    /// Real-axis anchor: `sqrt r > 0` where `r > 0`, `-i sqrt|r|` inside the bound regions.
    pub fn on_real_axis(n: usize, g: f64) -> Result<Self> {
        let state = bethe::solve_k_real(n, g)?;
        Ok(Self {
            sqrt_r: real_axis_sqrt_r(state.g, state.k),
            state,
        })
    }

    pub fn g(&self) -> Complex64 {
        self.state.g
    }

    pub fn k(&self) -> Complex64 {
        self.state.k
    }

    pub fn n(&self) -> usize {
        self.state.n
    }

    pub fn parity(&self) -> Parity {
        self.state.parity
    }
}

pub(crate) fn real_axis_sqrt_r(g: Complex64, k: Complex64) -> Complex64 {
    let r = bethe::branch_discriminant(g, k).re;
    if r >= 0.0 {
        Complex64::new(r.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, -(-r).sqrt())
    }
}

/// Sign of `sqrt(r_new)` closest to the previous root.
pub(crate) fn continue_sqrt(prev: Complex64, r_new: Complex64) -> Complex64 {
    let s = r_new.sqrt();
    if (s - prev).norm() <= (s + prev).norm() {
        s
    } else {
        -s
    }
}

/// Step-control parameters shared by traces and the holonomy frame tracker.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepParams {
    pub max_step: f64,
    pub min_step: f64,
    pub shrink: f64,
    pub grow: f64,
}

impl From<&ComplexPath> for StepParams {
    fn from(p: &ComplexPath) -> Self {
        Self {
            max_step: p.max_step,
            min_step: p.min_step,
            shrink: p.shrink,
            grow: p.grow,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Walk {
    Reached,
    NearBranchPoint,
    Diverged,
    Exhausted,
}

/// Continue `level` along the straight segment to `target`. `h` carries the
/// current step length between calls; `on_accept` sees every accepted point.
pub(crate) fn walk_segment(
    level: &mut TrackedLevel,
    target: Complex64,
    h: &mut f64,
    params: &StepParams,
    cfg: &ContinuationConfig,
    mut on_accept: impl FnMut(&TrackedLevel, f64),
) -> Walk {
    let parity = level.parity();
    let mut steps = 0usize;
    loop {
        let remaining = target - level.g();
        let dist = remaining.norm();
        if dist == 0.0 {
            return Walk::Reached;
        }
        steps += 1;
        if steps > cfg.max_steps {
            return Walk::Exhausted;
        }
        let limited = *h >= dist;
        let hh = if limited { dist } else { *h };
        let g_next = if limited {
            target
        } else {
            level.g() + remaining * (hh / dist)
        };
        let (g, k) = (level.g(), level.k());
        let kp = k + bethe::predictor(g, k) * (g_next - g);
        let out = bethe::newton(parity, g_next, kp, cfg.residual_tol, cfg.max_corrector, None);

        let mut near = false;
        let mut accepted = false;
        if out.converged && out.k.is_finite() {
            let drift = (out.k - kp).norm();
            let moved = (kp - k).norm();
            let r_old = level.sqrt_r * level.sqrt_r;
            let r_new = bethe::branch_discriminant(g_next, out.k);
            let r_ok = (r_new - r_old).norm() <= 0.5 * r_old.norm();
            near = bethe::j_dk(g_next, out.k).norm() < cfg.proximity;
            if drift <= 0.2 * moved + 1e-7 * k.norm().max(1.0) && r_ok && !near {
                level.state = BetheState::new(level.n(), g_next, out.k);
                level.sqrt_r = continue_sqrt(level.sqrt_r, r_new);
                on_accept(level, out.residual);
                accepted = true;
                if !limited && out.iterations <= 2 {
                    *h = (*h * params.grow).min(params.max_step);
                }
            }
        }
        if !accepted {
            *h = hh * params.shrink;
            if *h < params.min_step {
                // Near g = k = 0 the derivative of J stays finite while r -> 0.
                let here = bethe::j_dk(level.g(), level.k()).norm();
                let r = level.sqrt_r.norm_sqr();
                return if near || here < 100.0 * cfg.proximity || r < 1e-6 {
                    Walk::NearBranchPoint
                } else {
                    Walk::Diverged
                };
            }
        }
    }
}

/// Continue a tracked level along `path`, recording every accepted point.
pub fn continue_tracked(
    start: TrackedLevel,
    path: &ComplexPath,
    cfg: &ContinuationConfig,
) -> Result<ContinuationTrace> {
    path.validate()?;
    let scale = start.g().norm().max(1.0);
    if (path.start() - start.g()).norm() > 1e-12 * scale {
        return Err(Error::InvalidPath(format!(
            "path starts at {} but the state sits at {}",
            path.start(),
            start.g()
        )));
    }
    let residual = start.state.residual().norm();
    if residual > 1e2 * cfg.residual_tol * bethe::residual_scale(start.g(), start.k()) {
        return Err(Error::NonConvergence {
            n: start.n(),
            g: start.g(),
            last_k: start.k(),
            residual,
        });
    }
    let mut samples = vec![TraceSample {
        g: start.g(),
        k: start.k(),
        residual,
        sqrt_r: start.sqrt_r,
    }];
    let mut waypoint_samples = vec![0];
    let params = StepParams::from(path);
    let mut level = start;
    let mut h = params.max_step;
    for (seg, (_, b)) in path.segments().enumerate() {
        let walk = walk_segment(&mut level, b, &mut h, &params, cfg, |lv, res| {
            samples.push(TraceSample {
                g: lv.g(),
                k: lv.k(),
                residual: res,
                sqrt_r: lv.sqrt_r,
            })
        });
        match walk {
            Walk::Reached => waypoint_samples.push(samples.len() - 1),
            Walk::NearBranchPoint => {
                return Ok(ContinuationTrace {
                    start: start.state,
                    samples,
                    status: TraceStatus::AbortedNearBranchPoint,
                    waypoint_samples,
                })
            }
            Walk::Diverged | Walk::Exhausted => {
                return Err(Error::CorrectorDiverged {
                    segment: seg,
                    g: level.g(),
                })
            }
        }
    }
    Ok(ContinuationTrace {
        start: start.state,
        samples,
        status: TraceStatus::Completed,
        waypoint_samples,
    })
}

/// Continue `start` along `path`. The `sqrt r` branch is seeded from the
/// principal root; use [`continue_tracked`] to control it.
pub fn continue_along(start: BetheState, path: &ComplexPath) -> Result<ContinuationTrace> {
    let sqrt_r = if start.g.im == 0.0 && start.k.im * start.k.re == 0.0 {
        real_axis_sqrt_r(start.g, start.k)
    } else {
        bethe::branch_discriminant(start.g, start.k).sqrt()
    };
    continue_tracked(
        TrackedLevel { state: start, sqrt_r },
        path,
        &ContinuationConfig::default(),
    )
}

//! Loops around exceptional points based on the real axis.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::continuation::{arc_points, ComplexPath};
use crate::error::{Error, Result};
use crate::exceptional::ExceptionalPoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyholeSpec {
    /// Radius of the loop around the EP.
    pub radius: f64,
    pub segments: usize,
    /// Radius of the lower half-circle that steps around the real branch point.
    pub dodge: f64,
}

impl Default for KeyholeSpec {
    fn default() -> Self {
        Self {
            radius: 1e-3,
            segments: 64,
            dodge: 0.1,
        }
    }
}

pub const MIN_LOOP_RADIUS: f64 = 1e-4;

/// Clockwise circle around the EP starting from its top point `g_ep + iρ`.
pub fn ep_circle(ep: &ExceptionalPoint, radius: f64, segments: usize) -> Result<ComplexPath> {
    if radius < MIN_LOOP_RADIUS {
        return Err(Error::InvalidPath(format!(
            "loop radius {radius:e} is below {MIN_LOOP_RADIUS:e}"
        )));
    }
    ComplexPath::circle(ep.g_ep, radius, FRAC_PI_2, true, segments)
}

/// Closed path from real `g0`: along the real axis to `Re g_ep` (stepping
/// below the family's real branch point), straight down to the loop, once
/// clockwise around the EP, then back the same way.
pub fn ep_keyhole(g0: f64, ep: &ExceptionalPoint, spec: &KeyholeSpec) -> Result<ComplexPath> {
    let xb = ep.parity.real_branch_point();
    let xt = ep.g_ep.re;
    if (g0 - xb).abs() <= spec.dodge {
        return Err(Error::InvalidPath(format!(
            "base point {g0} lies within {} of the real branch point {xb}",
            spec.dodge
        )));
    }
    if (xt - xb).abs() <= spec.dodge {
        return Err(Error::InvalidPath(format!(
            "Re g_ep = {xt} lies within {} of the real branch point {xb}",
            spec.dodge
        )));
    }
    let mut pts = vec![Complex64::new(g0, 0.0)];
    if (g0 - xb) * (xt - xb) < 0.0 {
        // Enter the dodge on the side of g0 and sweep through -π/2.
        let (start, sweep) = if g0 > xb { (0.0, -PI) } else { (-PI, PI) };
        let arc = arc_points(Complex64::new(xb, 0.0), spec.dodge, start, sweep, 16)?;
        pts.extend(arc.into_iter().map(|z| if z.im.abs() < 1e-15 { Complex64::new(z.re, 0.0) } else { z }));
    }
    pts.push(Complex64::new(xt, 0.0));
    let top = ep.g_ep + Complex64::new(0.0, spec.radius);
    pts.push(top);
    pts.dedup_by(|a, b| (*a - *b).norm() < 1e-14);
    let leg_in = ComplexPath::new(pts)?;
    let circle = ep_circle(ep, spec.radius, spec.segments)?;
    leg_in.then(&circle)?.then(&leg_in.reversed())
}

/// Keyholes around each EP in order, all based at `g0`.
pub fn chain_contour(g0: f64, eps: &[ExceptionalPoint], spec: &KeyholeSpec) -> Result<ComplexPath> {
    let mut path = ComplexPath::point(Complex64::new(g0, 0.0));
    for ep in eps {
        let k = ep_keyhole(g0, ep, spec)?;
        path = if path.waypoints.len() == 1 { k } else { path.then(&k)? };
    }
    Ok(path)
}

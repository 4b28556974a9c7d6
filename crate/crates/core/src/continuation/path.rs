use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-linear contour in the complex coupling plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexPath {
    pub waypoints: Vec<Complex64>,
    pub max_step: f64,
    pub min_step: f64,
    pub shrink: f64,
    pub grow: f64,
}

impl ComplexPath {
    pub const DEFAULT_MAX_STEP: f64 = 0.05;
    pub const DEFAULT_MIN_STEP: f64 = 1e-12;

    pub fn new(waypoints: Vec<Complex64>) -> Result<Self> {
        let path = Self {
            waypoints,
            max_step: Self::DEFAULT_MAX_STEP,
            min_step: Self::DEFAULT_MIN_STEP,
            shrink: 0.5,
            grow: 1.5,
        };
        path.validate()?;
        Ok(path)
    }

    /// A path that never leaves `g`.
    pub fn point(g: Complex64) -> Self {
        Self::new(vec![g]).expect("single point is a valid path")
    }

    pub fn with_steps(mut self, max_step: f64, min_step: f64) -> Result<Self> {
        self.max_step = max_step;
        self.min_step = min_step;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.waypoints.is_empty() {
            return Err(Error::InvalidPath("no waypoints".into()));
        }
        if let Some(bad) = self.waypoints.iter().find(|z| !z.is_finite()) {
            return Err(Error::InvalidPath(format!("non-finite waypoint {bad}")));
        }
        for (i, w) in self.waypoints.windows(2).enumerate() {
            if w[0] == w[1] {
                return Err(Error::InvalidPath(format!(
                    "waypoints {i} and {} coincide at {}",
                    i + 1,
                    w[0]
                )));
            }
        }
        if !(self.max_step > 0.0 && self.min_step > 0.0 && self.min_step <= self.max_step) {
            return Err(Error::InvalidPath(format!(
                "need 0 < min_step <= max_step, got {} and {}",
                self.min_step, self.max_step
            )));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0 && self.grow > 1.0) {
            return Err(Error::InvalidPath("need 0 < shrink < 1 < grow".into()));
        }
        Ok(())
    }

    /// Closed polygon approximating a circle, starting and ending at
    /// `center + radius * exp(i start_angle)`.
    pub fn circle(
        center: Complex64,
        radius: f64,
        start_angle: f64,
        clockwise: bool,
        segments: usize,
    ) -> Result<Self> {
        let mut pts = arc_points(center, radius, start_angle, if clockwise { -TAU } else { TAU }, segments)?;
        // Close exactly.
        let first = pts[0];
        *pts.last_mut().unwrap() = first;
        Self::new(pts)
    }

    pub fn start(&self) -> Complex64 {
        self.waypoints[0]
    }

    pub fn end(&self) -> Complex64 {
        *self.waypoints.last().unwrap()
    }

    pub fn is_closed(&self) -> bool {
        let scale = self.start().norm().max(1.0);
        (self.start() - self.end()).norm() <= 1e-12 * scale
    }

    pub fn segment_count(&self) -> usize {
        self.waypoints.len() - 1
    }

    pub fn segments(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        self.waypoints.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| (b - a).norm()).sum()
    }

    /// Traverse `self`, then `other`. The junction point must agree.
    pub fn then(&self, other: &ComplexPath) -> Result<Self> {
        let scale = self.end().norm().max(1.0);
        if (self.end() - other.start()).norm() > 1e-12 * scale {
            return Err(Error::InvalidPath(format!(
                "cannot join path ending at {} to path starting at {}",
                self.end(),
                other.start()
            )));
        }
        let mut pts = self.waypoints.clone();
        pts.extend_from_slice(&other.waypoints[1..]);
        let mut out = self.clone();
        out.waypoints = pts;
        out.max_step = self.max_step.min(other.max_step);
        out.min_step = self.min_step.min(other.min_step);
        out.validate()?;
        Ok(out)
    }

    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        out.waypoints.reverse();
        out
    }

    /// Winding number of the closed path around `z`.
    pub fn winding_number(&self, z: Complex64) -> i64 {
        let total: f64 = self
            .segments()
            .map(|(a, b)| ((b - z) / (a - z)).arg())
            .sum();
        (total / TAU).round() as i64
    }

    /// Smallest distance from the path to `z`.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        if self.waypoints.len() == 1 {
            return (self.start() - z).norm();
        }
        self.segments()
            .map(|(a, b)| {
                let ab = b - a;
                let t = ((z - a) * ab.conj()).re / ab.norm_sqr();
                let p = a + ab * t.clamp(0.0, 1.0);
                (z - p).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// `segments + 1` points on the arc from `start_angle` sweeping `sweep` radians.
pub(crate) fn arc_points(
    center: Complex64,
    radius: f64,
    start_angle: f64,
    sweep: f64,
    segments: usize,
) -> Result<Vec<Complex64>> {
    if !(radius > 0.0) || segments < 3 {
        return Err(Error::InvalidPath(format!(
            "arc needs radius > 0 and >= 3 segments, got {radius} and {segments}"
        )));
    }
    Ok((0..=segments)
        .map(|j| {
            let th = start_angle + sweep * j as f64 / segments as f64;
            center + Complex64::from_polar(radius, th)
        })
        .collect())
}

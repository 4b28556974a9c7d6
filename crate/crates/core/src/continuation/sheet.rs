//! Riemann sheets built column by column: every column is anchored on the real
//! axis and continued parallel to the imaginary axis.

use std::f64::consts::{FRAC_2_PI, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    continue_tracked, walk_segment, ComplexPath, ContinuationConfig, StepParams,
    TraceStatus, TrackedLevel, Walk,
};
use crate::bethe::{self, BetheState, Parity};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            re_min: -8.0,
            re_max: 2.0,
            im_min: -5.0,
            im_max: 5.0,
            n_re: 201,
            n_im: 201,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.re_min, self.re_max, self.im_min, self.im_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.re_min >= self.re_max || self.im_min >= self.im_max {
            return Err(Error::Domain(format!("degenerate grid window {self:?}")));
        }
        if self.n_re < 2 || self.n_im < 2 {
            return Err(Error::Domain("grid needs at least 2x2 points".into()));
        }
        if self.im_min > 0.0 || self.im_max < 0.0 {
            return Err(Error::Domain(
                "grid window must intersect the real axis".into(),
            ));
        }
        Ok(())
    }

    pub fn re(&self, j: usize) -> f64 {
        lattice(self.re_min, self.re_max, self.n_re, j)
    }

    pub fn im(&self, i: usize) -> f64 {
        lattice(self.im_min, self.im_max, self.n_im, i)
    }

    pub fn g(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.re(j), self.im(i))
    }
}

fn lattice(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    let v = lo + (hi - lo) * i as f64 / (n - 1) as f64;
    if v.abs() <= 1e-12 * (hi - lo) {
        0.0
    } else {
        v
    }
}

/// Vertical branch cut between (or on) grid columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutSegment {
    pub re: f64,
    pub im_lo: f64,
    pub im_hi: f64,
}

impl CutSegment {
    pub fn in_lower_half(&self) -> bool {
        self.im_hi < 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ColumnStatus {
    Complete,
    /// Vertical continuation stopped at a branch point on the column.
    Incomplete { abort_g: Complex64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiemannSheet {
    pub n: usize,
    pub grid: GridSpec,
    /// Row-major `k` values, `None` where a column was not completed.
    pub k: Vec<Option<Complex64>>,
    pub sqrt_r: Vec<Option<Complex64>>,
    pub columns: Vec<ColumnStatus>,
    pub cut_segments: Vec<CutSegment>,
}

impl RiemannSheet {
    pub fn k_at(&self, i: usize, j: usize) -> Option<Complex64> {
        self.k[i * self.grid.n_re + j]
    }

    pub fn level_at(&self, i: usize, j: usize) -> Option<TrackedLevel> {
        let idx = i * self.grid.n_re + j;
        Some(TrackedLevel {
            state: BetheState::new(self.n, self.grid.g(i, j), self.k[idx]?),
            sqrt_r: self.sqrt_r[idx]?,
        })
    }

    pub fn lower_cuts(&self) -> Vec<CutSegment> {
        self.cut_segments
            .iter()
            .copied()
            .filter(CutSegment::in_lower_half)
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.columns.iter().all(|c| *c == ColumnStatus::Complete)
    }
}

/// `k_n` is real-analytic except at `g = 0` (level 0) and `g = -2/π` (level 1).
fn real_branch_point(n: usize) -> Option<f64> {
    match n {
        0 => Some(0.0),
        1 => Some(-FRAC_2_PI),
        _ => None,
    }
}

/// Start of the vertical leg through `Re g = x`, heading to `Im g` of sign `dir`.
fn column_base(n: usize, x: f64, dir: f64) -> Result<TrackedLevel> {
    match real_branch_point(n) {
        Some(xb) if xb == x => {
            // k² ≈ c (g - xb) next to the branch point; the principal root is
            // the limit taken from Re g > xb.
            let c = if n == 0 { 2.0 / PI } else { 6.0 / PI };
            let g1 = Complex64::new(x, dir * 1e-6);
            let seed = (c * (g1 - xb)).sqrt();
            let parity = Parity::of(n);
            let out = bethe::newton(parity, g1, seed, 1e-13, 50, None);
            if !out.converged {
                return Err(Error::NonConvergence {
                    n,
                    g: g1,
                    last_k: out.k,
                    residual: out.residual,
                });
            }
            Ok(TrackedLevel {
                state: BetheState::new(n, g1, out.k),
                sqrt_r: bethe::branch_discriminant(g1, out.k).sqrt(),
            })
        }
        _ => TrackedLevel::on_real_axis(n, x),
    }
}

/// `k_n(g)` on the sheet: the real-axis value at `Re g`, continued vertically.
pub fn sheet_state(n: usize, g: Complex64) -> Result<TrackedLevel> {
    if !g.is_finite() {
        return Err(Error::Domain(format!("coupling must be finite, got {g}")));
    }
    if g.im == 0.0 {
        return TrackedLevel::on_real_axis(n, g.re);
    }
    let base = column_base(n, g.re, g.im.signum())?;
    if base.g() == g {
        return Ok(base);
    }
    let path = ComplexPath::new(vec![base.g(), g])?;
    let trace = continue_tracked(base, &path, &ContinuationConfig::default())?;
    match trace.status {
        TraceStatus::Completed => Ok(trace.final_level()),
        TraceStatus::AbortedNearBranchPoint => Err(Error::NearBranchPoint { g: trace.last().g }),
    }
}

/// Sign `s` with `conj(k_n(conj g)) = s k_n(g)`.
pub fn conjugation_symmetry_check(n: usize, g: Complex64) -> Result<i8> {
    let k = sheet_state(n, g)?.k();
    let kc = sheet_state(n, g.conj())?.k().conj();
    let tol = 1e-8 * k.norm().max(1.0);
    if (kc - k).norm() < tol {
        Ok(1)
    } else if (kc + k).norm() < tol {
        Ok(-1)
    } else {
        Err(Error::Symmetry { n, g })
    }
}

struct Column {
    k: Vec<Option<Complex64>>,
    sqrt_r: Vec<Option<Complex64>>,
    status: ColumnStatus,
}

fn build_column(n: usize, grid: &GridSpec, j: usize) -> Result<Column> {
    let x = grid.re(j);
    let mut k = vec![None; grid.n_im];
    let mut sqrt_r = vec![None; grid.n_im];
    let mut status = ColumnStatus::Complete;

    let rows_up: Vec<usize> = (0..grid.n_im).filter(|&i| grid.im(i) >= 0.0).collect();
    let mut rows_down: Vec<usize> = (0..grid.n_im).filter(|&i| grid.im(i) < 0.0).collect();
    rows_down.reverse();

    if let Some(i0) = rows_up.first().copied().filter(|&i| grid.im(i) == 0.0) {
        let lv = TrackedLevel::on_real_axis(n, x)?;
        k[i0] = Some(lv.k());
        sqrt_r[i0] = Some(lv.sqrt_r);
    }
    for (rows, dir) in [(&rows_up, 1.0), (&rows_down, -1.0)] {
        let rows: Vec<usize> = rows.iter().copied().filter(|&i| grid.im(i) != 0.0).collect();
        if rows.is_empty() {
            continue;
        }
        let base = column_base(n, x, dir)?;
        let mut pts = vec![base.g()];
        pts.extend(rows.iter().map(|&i| grid.g(i, j)));
        pts.dedup();
        let offset = pts.len() - rows.len();
        let path = ComplexPath::new(pts)?;
        let trace = continue_tracked(base, &path, &ContinuationConfig::default())?;
        for (w, &sample) in trace.waypoint_samples.iter().enumerate().skip(offset) {
            let s = trace.samples[sample];
            let i = rows[w - offset];
            k[i] = Some(s.k);
            sqrt_r[i] = Some(s.sqrt_r);
        }
        if trace.status == TraceStatus::AbortedNearBranchPoint {
            status = ColumnStatus::Incomplete {
                abort_g: trace.last().g,
            };
        }
    }
    Ok(Column { k, sqrt_r, status })
}

/// Does continuing from cell `(i, j)` to `(i, j + 1)` land on the stored value?
fn horizontally_continuous(sheet: &RiemannSheet, i: usize, j: usize) -> bool {
    let (Some(mut from), Some(to)) = (sheet.level_at(i, j), sheet.level_at(i, j + 1)) else {
        return true;
    };
    let params = StepParams {
        max_step: 0.02,
        min_step: 1e-12,
        shrink: 0.5,
        grow: 1.5,
    };
    let mut h = params.max_step;
    let walk = walk_segment(
        &mut from,
        to.g(),
        &mut h,
        &params,
        &ContinuationConfig::default(),
        |_, _| {},
    );
    walk == Walk::Reached && (from.k() - to.k()).norm() <= 1e-6 * to.k().norm().max(1.0)
}

pub fn build_sheet(n: usize, grid: &GridSpec) -> Result<RiemannSheet> {
    grid.validate()?;
    let columns: Vec<Column> = (0..grid.n_re)
        .into_par_iter()
        .map(|j| build_column(n, grid, j))
        .collect::<Result<_>>()?;

    let mut sheet = RiemannSheet {
        n,
        grid: grid.clone(),
        k: vec![None; grid.n_re * grid.n_im],
        sqrt_r: vec![None; grid.n_re * grid.n_im],
        columns: columns.iter().map(|c| c.status).collect(),
        cut_segments: Vec::new(),
    };
    for (j, col) in columns.iter().enumerate() {
        for i in 0..grid.n_im {
            sheet.k[i * grid.n_re + j] = col.k[i];
            sheet.sqrt_r[i * grid.n_re + j] = col.sqrt_r[i];
        }
    }

    let branch_x = real_branch_point(n);
    let mut cuts: Vec<CutSegment> = (0..grid.n_re - 1)
        .into_par_iter()
        .flat_map_iter(|j| {
            let (x0, x1) = (grid.re(j), grid.re(j + 1));
            let broken: Vec<usize> = (0..grid.n_im)
                .filter(|&i| {
                    // The real row passes through the level's own real branch
                    // point, which is not a cut.
                    let skip = grid.im(i) == 0.0
                        && branch_x.is_some_and(|xb| x0 <= xb && xb <= x1);
                    !skip && !horizontally_continuous(&sheet, i, j)
                })
                .collect();
            runs(&broken)
                .into_iter()
                .map(|(a, b)| CutSegment {
                    re: 0.5 * (x0 + x1),
                    im_lo: grid.im(a),
                    im_hi: grid.im(b),
                })
                .collect::<Vec<_>>()
        })
        .collect();
    for (j, status) in sheet.columns.iter().enumerate() {
        if let ColumnStatus::Incomplete { abort_g } = *status {
            let (lo, hi) = if abort_g.im < 0.0 {
                (grid.im_min, abort_g.im)
            } else {
                (abort_g.im, grid.im_max)
            };
            cuts.push(CutSegment {
                re: grid.re(j),
                im_lo: lo,
                im_hi: hi,
            });
        }
    }
    cuts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im_lo.total_cmp(&b.im_lo)));
    sheet.cut_segments = cuts;
    Ok(sheet)
}

/// Maximal runs of consecutive indices.
fn runs(idx: &[usize]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &i in idx {
        match out.last_mut() {
            Some((_, end)) if *end + 1 == i => *end = i,
            _ => out.push((i, i)),
        }
    }
    out
}

//! The real adiabatic cycle through `g = ±∞` and complex contours that emulate
//! it by enclosing the first few exceptional points.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bethe::{self, energy, Parity, SolverConfig};
use crate::continuation::ComplexPath;
use crate::eigensystem::{overlap, Eigenfunction};
use crate::error::{Error, Result};
use crate::exceptional::enumerate_eps;
use crate::holonomy::{chain_contour, transport_with, HolonomyMatrix, KeyholeSpec, TransportConfig, TruncationSpec};
use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CycleStatus {
    Complete,
    /// Some column of the holonomy had no dominant entry.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelMap {
    pub from: usize,
    pub to: usize,
    pub phase: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleResult {
    pub g0: f64,
    pub parity: Parity,
    pub kbar: i64,
    /// Retained levels in truncation order.
    pub levels: Vec<usize>,
    pub permutation: Vec<LevelMap>,
    /// Levels mapped outside the retained window.
    pub exits_window: Vec<usize>,
    pub energies_before: Vec<Complex64>,
    pub energies_after: Vec<Complex64>,
    pub status: CycleStatus,
}

impl CycleResult {
    pub fn target_of(&self, n: usize) -> Option<usize> {
        self.permutation.iter().find(|m| m.from == n).map(|m| m.to)
    }

    pub fn phase_of(&self, n: usize) -> Option<Complex64> {
        self.permutation.iter().find(|m| m.from == n).map(|m| m.phase)
    }

    /// Nontrivial cycles of the permutation, each starting at its smallest level.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = Vec::new();
        let mut out = Vec::new();
        let mut from: Vec<usize> = self.permutation.iter().map(|m| m.from).collect();
        from.sort_unstable();
        for start in from {
            if seen.contains(&start) {
                continue;
            }
            let mut cyc = vec![start];
            seen.push(start);
            let mut cur = start;
            while let Some(next) = self.target_of(cur) {
                if next == start || seen.contains(&next) {
                    break;
                }
                cyc.push(next);
                seen.push(next);
                cur = next;
            }
            if cyc.len() > 1 && self.target_of(cur) == Some(start) {
                out.push(cyc);
            }
        }
        out
    }
}

fn default_kbar(parity: Parity) -> i64 {
    parity.ground() as i64
}

/// Adiabatic `g0 → +∞`, sudden flip to `-∞` holding the state, adiabatic back
/// to `g0`. The flip identifies `E(k̄, n, +∞)` with the level at `-∞` of equal
/// energy, evaluated at the large-coupling proxy.
pub fn hermitian_cycle(g0: f64, trunc: &TruncationSpec) -> Result<CycleResult> {
    hermitian_cycle_with(g0, trunc, default_kbar(trunc.parity), &SolverConfig::default())
}

pub fn hermitian_cycle_with(
    g0: f64,
    trunc: &TruncationSpec,
    kbar: i64,
    cfg: &SolverConfig,
) -> Result<CycleResult> {
    let parity = trunc.parity;
    if !g0.is_finite() {
        return Err(Error::Domain(format!("g0 must be finite, got {g0}")));
    }
    if g0 == parity.real_branch_point() {
        return Err(Error::Domain(format!(
            "g0 = {g0} is the real branch point of the {} family",
            parity.name()
        )));
    }
    if Parity::of_kbar(kbar) != parity {
        return Err(Error::ParityMismatch {
            kbar,
            n: parity.ground(),
        });
    }
    let p = cfg.proxy_infinity;
    let levels = trunc.levels();
    // Candidates at -∞ reach two slots beyond the window.
    // Bound levels at -∞ have energies of order -P² and never match.
    let candidates: Vec<usize> = (0..trunc.n_levels + 2)
        .map(|i| parity.level(i))
        .filter(|&m| !bethe::is_bound(m, -p))
        .collect();
    let rule = GaussLegendre::new(256);

    let mut at_minus = Vec::with_capacity(candidates.len());
    for &m in &candidates {
        at_minus.push(bethe::solve_k_real_with(m, -p, cfg)?);
    }
    let mut permutation = Vec::new();
    let mut exits_window = Vec::new();
    let mut energies_before = Vec::new();
    let mut energies_after = Vec::new();
    for &n in &levels {
        let before = energy(kbar, &bethe::solve_k_real_with(n, g0, cfg)?)?.energy;
        let up = bethe::solve_k_real_with(n, p, cfg)?;
        let e_up = energy(kbar, &up)?.energy;
        let (best, _) = at_minus
            .iter()
            .enumerate()
            .map(|(i, s)| (i, (energy(kbar, s).map(|e| e.energy).unwrap_or_default() - e_up).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("candidate list is non-empty");
        let down = at_minus[best];
        let m = down.n;
        // The state is held fixed across the flip; its phase relative to the
        // level at -∞ is the overlap of the two eigenfunctions.
        let gp = Complex64::new(p, 0.0);
        let gm = Complex64::new(-p, 0.0);
        let right = Eigenfunction::right(n, gp, kbar, up.k)?;
        let left = Eigenfunction::left(m, gm, kbar, down.k, down.k)?;
        let ov = overlap(&rule, &left, &right);
        let phase = ov / ov.norm();
        let after = energy(kbar, &bethe::solve_k_real_with(m, g0, cfg)?)?.energy;
        if trunc.slot_of(m).is_none() {
            exits_window.push(n);
        }
        permutation.push(LevelMap { from: n, to: m, phase });
        energies_before.push(before);
        energies_after.push(after);
    }
    Ok(CycleResult {
        g0,
        parity,
        kbar,
        levels,
        permutation,
        exits_window,
        energies_before,
        energies_after,
        status: CycleStatus::Complete,
    })
}

/// Closed contour based at `g0` enclosing the first `n_eps` exceptional points
/// of the family once each, clockwise, as a chain of keyholes.
pub fn n_ep_contour(g0: f64, n_eps: usize, parity: Parity) -> Result<ComplexPath> {
    n_ep_contour_with(g0, n_eps, parity, &KeyholeSpec { radius: 1e-2, ..KeyholeSpec::default() })
}

pub fn n_ep_contour_with(g0: f64, n_eps: usize, parity: Parity, spec: &KeyholeSpec) -> Result<ComplexPath> {
    if n_eps == 0 {
        return Ok(ComplexPath::point(Complex64::new(g0, 0.0)));
    }
    let eps = enumerate_eps(parity, parity.level(n_eps))?;
    // Every EP needs room for its loop well away from its neighbours.
    for w in eps.windows(2) {
        let gap = (w[1].g_ep - w[0].g_ep).norm();
        if gap < 10.0 * spec.radius {
            return Err(Error::InvalidPath(format!(
                "EPs n={} and n={} are {gap:e} apart, too close for loops of radius {}",
                w[0].n, w[1].n, spec.radius
            )));
        }
    }
    chain_contour(g0, &eps, spec)
}

/// Dominant-entry threshold for reading a permutation off a holonomy matrix.
pub const DOMINANCE: f64 = 0.9;

/// Read a permutation with phases off a holonomy matrix: column `j` maps the
/// level in slot `j` to the row of its dominant entry.
pub fn permutation_from_holonomy(h: &HolonomyMatrix) -> (Vec<LevelMap>, CycleStatus) {
    let levels = h.levels();
    let nl = levels.len();
    let mut maps = Vec::with_capacity(nl);
    let mut status = CycleStatus::Complete;
    let mut used = vec![false; nl];
    for j in 0..nl {
        let col = h.matrix.column(j);
        let (i, z) = col
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(i, z)| (i, *z))
            .expect("non-empty column");
        if z.norm() < DOMINANCE || used[i] {
            status = CycleStatus::Inconclusive;
        }
        used[i] = true;
        maps.push(LevelMap {
            from: levels[j],
            to: levels[i],
            phase: z / z.norm(),
        });
    }
    (maps, status)
}

/// Transport around a closed path and extract the induced permutation.
pub fn contour_permutation(path: &ComplexPath, trunc: &TruncationSpec) -> Result<(CycleResult, HolonomyMatrix)> {
    contour_permutation_with(path, trunc, &TransportConfig::default())
}

pub fn contour_permutation_with(
    path: &ComplexPath,
    trunc: &TruncationSpec,
    cfg: &TransportConfig,
) -> Result<(CycleResult, HolonomyMatrix)> {
    if !path.is_closed() {
        return Err(Error::InvalidPath("contour is not closed".into()));
    }
    let h = transport_with(path, trunc, cfg)?;
    let (permutation, status) = permutation_from_holonomy(&h);
    let kbar = default_kbar(trunc.parity);
    let kb2 = (kbar * kbar) as f64;
    let start = crate::holonomy::initial_levels(path.start(), trunc)?;
    let end = &h.diagnostics.as_ref().expect("transport records diagnostics").final_levels;
    let e = |k: Complex64| (k * k + kb2) * 0.5;
    let result = CycleResult {
        g0: path.start().re,
        parity: trunc.parity,
        kbar,
        levels: trunc.levels(),
        permutation,
        exits_window: Vec::new(),
        energies_before: start.iter().map(|l| e(l.k())).collect(),
        energies_after: end.iter().map(|l| e(l.k())).collect(),
        status,
    };
    Ok((result, h))
}

/// Argument distance between two unit phases, in `[0, π]`.
pub fn phase_distance(a: Complex64, b: Complex64) -> f64 {
    let d = (a / b).arg().abs();
    d.min(TAU - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_cycle_shifts_by_two() {
        let t = TruncationSpec::new(Parity::Even, 4).unwrap();
        let r = hermitian_cycle(1.0, &t).unwrap();
        for m in &r.permutation {
            assert_eq!(m.to, m.from + 2);
            assert!((m.phase.norm() - 1.0).abs() < 1e-12);
        }
        assert_eq!(r.exits_window, vec![6]);
        assert!(r.energies_after[0].re > r.energies_before[0].re);
    }

    #[test]
    fn branch_point_base_rejected() {
        let t = TruncationSpec::new(Parity::Odd, 3).unwrap();
        assert!(hermitian_cycle(-std::f64::consts::FRAC_2_PI, &t).is_err());
    }

    #[test]
    fn zero_ep_contour_is_trivial() {
        let p = n_ep_contour(1.0, 0, Parity::Even).unwrap();
        let t = TruncationSpec::new(Parity::Even, 4).unwrap();
        let (r, _) = contour_permutation(&p, &t).unwrap();
        assert!(r.permutation.iter().all(|m| m.from == m.to));
        assert!(r.cycles().is_empty());
    }

    #[test]
    fn cycles_of_a_shift() {
        let r = CycleResult {
            g0: 1.0,
            parity: Parity::Even,
            kbar: 0,
            levels: vec![0, 2, 4, 6],
            permutation: vec![
                LevelMap { from: 0, to: 2, phase: Complex64::new(1.0, 0.0) },
                LevelMap { from: 2, to: 4, phase: Complex64::new(1.0, 0.0) },
                LevelMap { from: 4, to: 0, phase: Complex64::new(1.0, 0.0) },
                LevelMap { from: 6, to: 6, phase: Complex64::new(1.0, 0.0) },
            ],
            exits_window: vec![],
            energies_before: vec![],
            energies_after: vec![],
            status: CycleStatus::Complete,
        };
        assert_eq!(r.cycles(), vec![vec![0, 2, 4]]);
    }
}

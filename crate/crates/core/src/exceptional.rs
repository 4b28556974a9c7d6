//! Exceptional points: square-root branch points where the ground level of a
//! parity family coalesces with one excited level.
//!
//! An EP solves the Bethe residual together with `r = k² + g² + 2g/π = 0`.
//! Both are entire, so a plain two-dimensional complex Newton applies.

use std::f64::consts::{FRAC_2_PI, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bethe::{self, Parity};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalPoint {
    pub n: usize,
    pub n_b: usize,
    pub g_ep: Complex64,
    pub k_ep: Complex64,
    pub parity: Parity,
}

impl ExceptionalPoint {
    pub fn residuals(&self) -> (f64, f64) {
        let (f, e) = ep_residual(self.parity, self.g_ep, self.k_ep);
        (f.norm(), e.norm())
    }
}

pub fn ep_residual(parity: Parity, g: Complex64, k: Complex64) -> (Complex64, Complex64) {
    (
        bethe::bethe_residual(parity, g, k),
        bethe::branch_discriminant(g, k),
    )
}

#[derive(Debug, Clone)]
struct NewtonRun {
    g: Complex64,
    k: Complex64,
    converged: bool,
    history: Vec<(Complex64, Complex64)>,
}

const EP_TOL: f64 = 1e-13;

fn ep_newton(parity: Parity, g0: Complex64, k0: Complex64, max_iter: usize) -> NewtonRun {
    let (mut g, mut k) = (g0, k0);
    let mut history = vec![(g, k)];
    for _ in 0..max_iter {
        let (f, e) = ep_residual(parity, g, k);
        let scale = g.norm().max(1.0);
        if f.norm() <= EP_TOL * scale && e.norm() <= EP_TOL * scale * scale {
            return NewtonRun {
                g,
                k,
                converged: true,
                history,
            };
        }
        let fg = bethe::residual_dg(parity, g, k);
        let fk = bethe::residual_dk(parity, g, k);
        let eg = 2.0 * g + FRAC_2_PI;
        let ek = 2.0 * k;
        let det = fg * ek - fk * eg;
        if det.norm() == 0.0 || !det.is_finite() {
            break;
        }
        let mut dg = (f * ek - fk * e) / det;
        let mut dk = (fg * e - f * eg) / det;
        let m = (dg.norm_sqr() + dk.norm_sqr()).sqrt();
        if m > 0.5 {
            dg *= 0.5 / m;
            dk *= 0.5 / m;
        }
        g -= dg;
        k -= dk;
        history.push((g, k));
        if !(g.is_finite() && k.is_finite()) {
            break;
        }
        if m <= 1e-15 * scale {
            let (f, e) = ep_residual(parity, g, k);
            let converged = f.norm() < 1e-11 * scale && e.norm() < 1e-11 * scale * scale;
            return NewtonRun {
                g,
                k,
                converged,
                history,
            };
        }
    }
    NewtonRun {
        g,
        k,
        converged: false,
        history,
    }
}

/// Label of a converged root: the excited level it belongs to, if any.
///
/// With `k` normalised to `Re k > 0`, the EP of level `n` has `Re k ∈ (n-1, n)`.
/// Roots on the real axis are the real branch points, not EPs.
fn label(parity: Parity, g: Complex64, k: Complex64) -> Option<(usize, Complex64)> {
    if g.im.abs() < 1e-6 || g.im > 0.0 {
        return None;
    }
    let k = if k.re < 0.0 { -k } else { k };
    let n = k.re.ceil();
    if !(n >= 2.0) || n - k.re < 1e-9 || k.re - (n - 1.0) < 1e-9 {
        return None;
    }
    let n = n as usize;
    (Parity::of(n) == parity).then_some((n, k))
}

/// Multi-start seeds: a square lattice clipped to a disc around `center`.
fn lattice_seeds(center: Complex64, radius: f64, per_side: usize) -> Vec<Complex64> {
    let mut out = Vec::new();
    for a in 0..per_side {
        for b in 0..per_side {
            let x = -radius + 2.0 * radius * (a as f64 + 0.5) / per_side as f64;
            let y = -radius + 2.0 * radius * (b as f64 + 0.5) / per_side as f64;
            let z = Complex64::new(x, y);
            if z.norm() <= radius {
                out.push(center + z);
            }
        }
    }
    out
}

/// `k` on the branch condition, taking the root with `Re k >= 0`.
fn branch_k(g: Complex64) -> Complex64 {
    let k = (-g * (g + FRAC_2_PI)).sqrt();
    if k.re < 0.0 {
        -k
    } else {
        k
    }
}

pub const SEARCH_RADIUS: f64 = 2.0;

/// Locate the EP of excited level `n` (lower half plane).
pub fn find_ep(n: usize) -> Result<ExceptionalPoint> {
    find_ep_with(n, SEARCH_RADIUS, 20)
}

/// Newton from the seed `g = -i(n-1)` plus a multi-start sweep over a
/// `per_side × per_side` lattice in the disc of `radius` around the seed.
pub fn find_ep_with(n: usize, radius: f64, per_side: usize) -> Result<ExceptionalPoint> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "exceptional points exist for n > 1, got n={n}"
        )));
    }
    let parity = Parity::of(n);
    let seed = Complex64::new(0.0, -((n - 1) as f64));
    let plain = ep_newton(parity, seed, Complex64::new((n - 1) as f64, 0.0), 100);

    let mut roots: Vec<(Complex64, Complex64)> = Vec::new();
    let mut push = |g: Complex64, k: Complex64| {
        if !roots.iter().any(|(h, _)| (*h - g).norm() < 1e-8) {
            roots.push((g, k));
        }
    };
    if plain.converged {
        if let Some((m, k)) = label(parity, plain.g, plain.k) {
            if m == n {
                push(plain.g, k);
            }
        }
    }
    let sweep: Vec<(Complex64, Complex64)> = lattice_seeds(seed, radius, per_side)
        .into_par_iter()
        .filter_map(|g0| {
            let run = ep_newton(parity, g0, branch_k(g0), 100);
            if !run.converged {
                return None;
            }
            match label(parity, run.g, run.k) {
                Some((m, k)) if m == n => Some((run.g, k)),
                _ => None,
            }
        })
        .collect();
    for (g, k) in sweep {
        push(g, k);
    }

    match roots.len() {
        1 => {
            let (g_ep, k_ep) = roots[0];
            Ok(ExceptionalPoint {
                n,
                n_b: parity.ground(),
                g_ep,
                k_ep,
                parity,
            })
        }
        0 => {
            let reason = if plain.converged && plain.g.im.abs() < 1e-6 {
                "seeded Newton converged to a real branch point, not an EP; no labelled root in the window"
            } else {
                "no root with the level label in the search window"
            };
            Err(Error::EpSearch {
                n,
                reason: reason.into(),
                history: plain.history,
            })
        }
        _ => Err(Error::EpSearch {
            n,
            reason: format!("{} distinct roots carry the same label", roots.len()),
            history: roots,
        }),
    }
}

/// Re-run Newton from a stored point.
pub fn repolish(ep: &ExceptionalPoint) -> Result<ExceptionalPoint> {
    let run = ep_newton(ep.parity, ep.g_ep, ep.k_ep, 50);
    if !run.converged {
        return Err(Error::EpSearch {
            n: ep.n,
            reason: "re-polish did not converge".into(),
            history: run.history,
        });
    }
    Ok(ExceptionalPoint {
        g_ep: run.g,
        k_ep: run.k,
        ..*ep
    })
}

/// EPs of every excited level of `parity` with `1 < n <= n_max`, sorted by `n`.
pub fn enumerate_eps(parity: Parity, n_max: usize) -> Result<Vec<ExceptionalPoint>> {
    if n_max < 2 {
        return Err(Error::Domain(format!("n_max must exceed 1, got {n_max}")));
    }
    let levels: Vec<usize> = (2..=n_max).filter(|&n| Parity::of(n) == parity).collect();
    let results: Vec<Result<ExceptionalPoint>> = levels.par_iter().map(|&n| find_ep(n)).collect();
    let total = results.len();
    let mut eps = Vec::new();
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(ep) => eps.push(ep),
            Err(e) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        return Err(Error::EpEnumeration {
            parity,
            total,
            failures: errors.len(),
            errors,
        });
    }
    eps.sort_by_key(|e| e.n);
    Ok(eps)
}

/// Series coefficients of `k(g)`: `G = dk/dg` and the square-root coefficient
/// `G2 = -2 ∂_g J / ∂²_k J`, which equals `2/π` at every EP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorCoefficients {
    pub g1: Complex64,
    pub g2: Complex64,
}

pub fn predictor_coefficients(g: Complex64, k: Complex64) -> PredictorCoefficients {
    PredictorCoefficients {
        g1: bethe::predictor(g, k),
        g2: -2.0 * bethe::j_dg(g, k) / bethe::j_dkk(g, k),
    }
}

/// Largest `|ε|` accepted by [`local_expansion`].
pub const MAX_EXPANSION_EPS: f64 = 1e-2;

/// `sqrt` with its cut hanging down from the origin: `-π/2 < Arg ε <= 3π/2`.
pub fn ep_sqrt(z: Complex64) -> Complex64 {
    let mut arg = z.arg();
    if arg <= -PI / 2.0 {
        arg += 2.0 * PI;
    }
    Complex64::from_polar(z.norm().sqrt(), 0.5 * arg)
}

/// Leading-order branches at `g_ep + ε`: `(k_minus, k_plus) = k_ep ∓ sqrt(2ε/π)`.
/// `k_minus` follows the ground level, `k_plus` the excited one.
pub fn local_expansion(ep: &ExceptionalPoint, epsilon: Complex64) -> Result<(Complex64, Complex64)> {
    if !(epsilon.norm() <= MAX_EXPANSION_EPS) {
        return Err(Error::Domain(format!(
            "|epsilon| = {:e} exceeds {MAX_EXPANSION_EPS:e}",
            epsilon.norm()
        )));
    }
    let root = ep_sqrt(epsilon * FRAC_2_PI);
    Ok((ep.k_ep - root, ep.k_ep + root))
}

/// Exact branch values at `g_ep + ε`, polished from the local expansion.
pub fn branches_near(ep: &ExceptionalPoint, epsilon: Complex64) -> Result<(Complex64, Complex64)> {
    let (km, kp) = local_expansion(ep, epsilon)?;
    let g = ep.g_ep + epsilon;
    let polish = |k0: Complex64| {
        let out = bethe::newton(ep.parity, g, k0, 1e-14, 50, Some(0.25 * epsilon.norm().sqrt()));
        if out.converged || out.residual < 1e-12 {
            Ok(out.k)
        } else {
            Err(Error::NonConvergence {
                n: ep.n,
                g,
                last_k: out.k,
                residual: out.residual,
            })
        }
    };
    Ok((polish(km)?, polish(kp)?))
}

/// Exponent `α` of `|k(g_ep + ε) - k_ep| ∝ |ε|^α` from a least-squares fit in
/// log-log coordinates over the given magnitudes, along direction `phase`.
pub fn branch_exponent(ep: &ExceptionalPoint, magnitudes: &[f64], phase: f64) -> Result<f64> {
    if magnitudes.len() < 2 {
        return Err(Error::Domain("need at least two magnitudes".into()));
    }
    let mut pts = Vec::with_capacity(magnitudes.len());
    for &m in magnitudes {
        let eps = Complex64::from_polar(m, phase);
        let (_, kp) = branches_near(ep, eps)?;
        pts.push((m.ln(), (kp - ep.k_ep).norm().ln()));
    }
    let nf = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn residual_examples() {
        let (f, e) = ep_residual(Parity::Even, c(0.0, 0.0), c(0.0, 0.0));
        assert_eq!(f.norm(), 0.0);
        assert_eq!(e, c(0.0, 0.0));
        let (f, e) = ep_residual(Parity::Odd, c(-FRAC_2_PI, 0.0), c(0.0, 0.0));
        assert!(f.norm() < 1e-16 && e.norm() < 1e-16);
    }

    #[test]
    fn label_rule() {
        assert_eq!(label(Parity::Even, c(-1.0, -1.3), c(1.34, -0.7)).map(|l| l.0), Some(2));
        assert_eq!(label(Parity::Even, c(-1.0, -1.3), c(-1.34, 0.7)).map(|l| l.0), Some(2));
        assert!(label(Parity::Even, c(0.0, 0.0), c(0.0, 0.0)).is_none());
        assert!(label(Parity::Odd, c(-1.0, -1.3), c(1.34, -0.7)).is_none());
        assert!(label(Parity::Even, c(-1.0, 1.3), c(1.34, 0.7)).is_none());
    }

    #[test]
    fn n2_point() {
        let ep = find_ep(2).unwrap();
        assert_eq!(ep.n_b, 0);
        assert!(ep.g_ep.re < 0.0 && ep.g_ep.im < 0.0);
        let (f, e) = ep.residuals();
        assert!(f < 1e-10 && e < 1e-10);
        let golden = c(-1.0508117859606443, -1.3114249263512967);
        assert!((ep.g_ep - golden).norm() < 1e-12);
    }

    #[test]
    fn rejects_low_levels() {
        assert!(find_ep(1).is_err());
        assert!(enumerate_eps(Parity::Even, 1).is_err());
    }

    #[test]
    fn g2_is_two_over_pi() {
        let ep = find_ep(3).unwrap();
        let pc = predictor_coefficients(ep.g_ep, ep.k_ep);
        assert!((pc.g2 - c(FRAC_2_PI, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn expansion_limits() {
        let ep = find_ep(2).unwrap();
        let (a, b) = local_expansion(&ep, c(0.0, 0.0)).unwrap();
        assert_eq!(a, ep.k_ep);
        assert_eq!(b, ep.k_ep);
        assert!(local_expansion(&ep, c(0.1, 0.0)).is_err());
    }

    #[test]
    fn ep_sqrt_branch() {
        // Arg -π/2 belongs to the far side of the cut.
        let z = ep_sqrt(c(0.0, -1.0));
        assert!((z - Complex64::from_polar(1.0, 0.75 * PI)).norm() < 1e-15);
        assert!((ep_sqrt(c(-4.0, 0.0)) - c(0.0, 2.0)).norm() < 1e-15);
        assert!((ep_sqrt(c(4.0, 0.0)) - c(2.0, 0.0)).norm() < 1e-15);
    }
}

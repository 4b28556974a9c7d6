//! Right and left eigenfunctions and a quadrature evaluation of the gauge
//! connection `A_{mn} = i <ψ^L_m | ∂_g ψ_n>`.
//!
//! Relative coordinate `x ∈ [0, 2π]`. Even levels carry
//! `a(k) cos(k(x - π)/2) / sqrt(2π)`, odd levels `sin`. The constants
//! `a(k) = sqrt(2) (1 ± sin(πk)/(πk))^{-1/2}` fix the parallel-transport gauge
//! with the free prefactors set to 1.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bethe::{self, Parity};
use crate::continuation::{conjugation_symmetry_check, sheet_state};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// `sin(z)/z`, continuous through `z = 0`.
pub fn sinc(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        1.0 - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// `z^{-1/2}` with the cut along the positive imaginary axis, so negative
/// reals take `Arg z = -π`.
pub(crate) fn inv_sqrt_lower(z: Complex64) -> Complex64 {
    let mut arg = z.arg();
    if arg > PI / 2.0 {
        arg -= 2.0 * PI;
    }
    Complex64::from_polar(z.norm().powf(-0.5), -0.5 * arg)
}

/// `1 + sinc(πk)` (even) or `1 - sinc(πk)` (odd).
pub(crate) fn norm_denominator(parity: Parity, k: Complex64) -> Complex64 {
    let s = sinc(k * PI);
    match parity {
        Parity::Even => 1.0 + s,
        Parity::Odd => 1.0 - s,
    }
}

pub fn normalization_pt(parity: Parity, k: Complex64) -> Result<Complex64> {
    let d = norm_denominator(parity, k);
    if d.norm() < 1e-12 {
        return Err(Error::Singular(format!(
            "normalisation denominator vanishes at k={k} ({})",
            parity.name()
        )));
    }
    Ok(std::f64::consts::SQRT_2 * inv_sqrt_lower(d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Right,
    Left,
}

/// Relative-coordinate part of an eigenfunction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenfunction {
    pub n: usize,
    pub g: Complex64,
    pub kbar: i64,
    pub side: Side,
    /// `k_n(g)` for the right side, `k_n(g*)` for the left side.
    pub k: Complex64,
    pub normalization: Complex64,
}

impl Eigenfunction {
    pub fn right(n: usize, g: Complex64, kbar: i64, k: Complex64) -> Result<Self> {
        check_kbar(kbar, n)?;
        Ok(Self {
            n,
            g,
            kbar,
            side: Side::Right,
            k,
            normalization: normalization_pt(Parity::of(n), k)?,
        })
    }

    /// Left eigenfunction built from `k̃ = k_n(g*)`. With `conj(k̃) = s k`, its
    /// normalisation is `conj(a(k)) σ`, `σ = 1` (even) or `s` (odd).
    pub fn left(n: usize, g: Complex64, kbar: i64, k: Complex64, k_tilde: Complex64) -> Result<Self> {
        check_kbar(kbar, n)?;
        let tol = 1e-8 * k.norm().max(1.0);
        let s = if (k_tilde.conj() - k).norm() < tol {
            1.0
        } else if (k_tilde.conj() + k).norm() < tol {
            -1.0
        } else {
            return Err(Error::Symmetry { n, g });
        };
        let parity = Parity::of(n);
        let sigma = match parity {
            Parity::Even => 1.0,
            Parity::Odd => s,
        };
        Ok(Self {
            n,
            g,
            kbar,
            side: Side::Left,
            k: k_tilde,
            normalization: normalization_pt(parity, k)?.conj() * sigma,
        })
    }

    /// Relative part at `x`.
    pub fn eval(&self, x: f64) -> Complex64 {
        let arg = self.k * (0.5 * (x - PI));
        let f = match Parity::of(self.n) {
            Parity::Even => arg.cos(),
            Parity::Odd => arg.sin(),
        };
        self.normalization * f / TAU.sqrt()
    }
}

fn check_kbar(kbar: i64, n: usize) -> Result<()> {
    if Parity::of_kbar(kbar) != Parity::of(n) {
        return Err(Error::ParityMismatch { kbar, n });
    }
    Ok(())
}

/// Centre-of-mass overlap of plane waves on the ring: a Kronecker delta.
fn com_overlap(kbar_left: i64, kbar_right: i64) -> f64 {
    if kbar_left == kbar_right {
        1.0
    } else {
        0.0
    }
}

/// Bilinear overlap `<ψ^L | φ>` of relative parts by quadrature on `[0, 2π]`.
pub fn overlap(rule: &GaussLegendre, left: &Eigenfunction, right: &Eigenfunction) -> Complex64 {
    let rel = rule.integrate_complex(0.0, TAU, |x| left.eval(x).conj() * right.eval(x));
    rel * com_overlap(left.kbar, right.kbar)
}

/// Right and left eigenfunctions of levels `ns` at `g`, on the sheet.
pub fn eigenpairs(ns: &[usize], g: Complex64, kbar: i64) -> Result<Vec<(Eigenfunction, Eigenfunction)>> {
    ns.iter()
        .map(|&n| {
            let k = sheet_state(n, g)?.k();
            let kt = if g.im == 0.0 {
                conjugation_symmetry_check(n, g)?;
                sheet_state(n, g)?.k()
            } else {
                sheet_state(n, g.conj())?.k()
            };
            Ok((
                Eigenfunction::right(n, g, kbar, k)?,
                Eigenfunction::left(n, g, kbar, k, kt)?,
            ))
        })
        .collect()
}

/// `<ψ^L_m | ψ_n>` for the given levels.
pub fn biorthonormality(ns: &[usize], g: Complex64, kbar: i64, nodes: usize) -> Result<DMatrix<Complex64>> {
    let rule = GaussLegendre::new(nodes);
    let pairs = eigenpairs(ns, g, kbar)?;
    Ok(DMatrix::from_fn(ns.len(), ns.len(), |m, n| {
        overlap(&rule, &pairs[m].1, &pairs[n].0)
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub nodes: usize,
    /// Coarse rule used for the quadrature error estimate.
    pub check_nodes: usize,
    pub dg: f64,
    pub richardson: bool,
    pub quadrature_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            nodes: 256,
            check_nodes: 128,
            dg: 1e-5,
            richardson: true,
            quadrature_tol: 1e-9,
        }
    }
}

/// Right eigenfunction of level `n` at `g + h`, polished from `(g, k)`.
fn shifted_right(n: usize, g: Complex64, k: Complex64, h: Complex64, kbar: i64) -> Result<Eigenfunction> {
    let parity = Parity::of(n);
    let gh = g + h;
    let kp = k + bethe::predictor(g, k) * h;
    let out = bethe::newton(parity, gh, kp, 1e-15, 20, None);
    if !(out.converged || out.residual < 1e-13 * gh.norm().max(1.0)) {
        return Err(Error::NonConvergence {
            n,
            g: gh,
            last_k: out.k,
            residual: out.residual,
        });
    }
    Eigenfunction::right(n, gh, kbar, out.k)
}

/// Gauge connection of one parity family at `g` by quadrature of
/// `i <ψ^L_m(g) | ∂_g ψ_n(g)>`, with `∂_g` taken by central differences.
pub fn overlap_connection_oracle(
    parity: Parity,
    n_levels: usize,
    g: Complex64,
    kbar: i64,
    cfg: &OracleConfig,
) -> Result<DMatrix<Complex64>> {
    if Parity::of_kbar(kbar) != parity {
        return Err(Error::ParityMismatch {
            kbar,
            n: parity.ground(),
        });
    }
    if !(cfg.dg > 0.0) || cfg.nodes < 2 || cfg.check_nodes < 2 {
        return Err(Error::Config("oracle needs dg > 0 and >= 2 nodes".into()));
    }
    let ns: Vec<usize> = (0..n_levels).map(|i| parity.level(i)).collect();
    let pairs = eigenpairs(&ns, g, kbar)?;
    let h = Complex64::new(cfg.dg, 0.0);

    // Derivative sample points per level: (±h) and (±2h) for Richardson.
    let shifts: Vec<Vec<(Complex64, Eigenfunction)>> = pairs
        .par_iter()
        .map(|(right, _)| {
            let mut v = Vec::new();
            let steps: &[f64] = if cfg.richardson { &[1.0, -1.0, 2.0, -2.0] } else { &[1.0, -1.0] };
            for &s in steps {
                v.push((h * s, shifted_right(right.n, g, right.k, h * s, kbar)?));
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;

    let entry = |rule: &GaussLegendre, m: usize, n: usize| -> Complex64 {
        let left = &pairs[m].1;
        let sh = &shifts[n];
        let d1 = (overlap(rule, left, &sh[0].1) - overlap(rule, left, &sh[1].1)) / (2.0 * h);
        let d = if cfg.richardson {
            let d2 = (overlap(rule, left, &sh[2].1) - overlap(rule, left, &sh[3].1)) / (4.0 * h);
            (4.0 * d1 - d2) / 3.0
        } else {
            d1
        };
        Complex64::i() * d
    };
    let fine = GaussLegendre::new(cfg.nodes);
    let coarse = GaussLegendre::new(cfg.check_nodes);
    let nl = ns.len();
    let cells: Vec<(Complex64, f64)> = (0..nl * nl)
        .into_par_iter()
        .map(|idx| {
            let (m, n) = (idx / nl, idx % nl);
            let a = entry(&fine, m, n);
            let b = entry(&coarse, m, n);
            (a, (a - b).norm())
        })
        .collect();
    let estimate = cells.iter().map(|c| c.1).fold(0.0, f64::max);
    if estimate > cfg.quadrature_tol {
        return Err(Error::Quadrature {
            estimate,
            tolerance: cfg.quadrature_tol,
        });
    }
    Ok(DMatrix::from_fn(nl, nl, |m, n| cells[m * nl + n].0))
}

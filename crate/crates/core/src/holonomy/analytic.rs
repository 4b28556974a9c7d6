use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{HolonomyMatrix, Ordering, TruncationSpec};
use crate::bethe::Parity;
use crate::error::{Error, Result};

/// `d_n = (-1)^⌊n/2⌋`.
pub fn d_sign(n: usize) -> f64 {
    if (n / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn analytic(trunc: &TruncationSpec, matrix: DMatrix<Complex64>) -> HolonomyMatrix {
    HolonomyMatrix {
        truncation: *trunc,
        matrix,
        contour: None,
        ordering: Ordering::AntiPathOrdered,
        diagnostics: None,
        warnings: Vec::new(),
    }
}

fn check_excited(n: usize, trunc: &TruncationSpec) -> Result<usize> {
    if n < 2 || Parity::of(n) != trunc.parity {
        return Err(Error::Truncation(format!(
            "level {n} is not an excited level of the {} family",
            trunc.parity.name()
        )));
    }
    trunc.slot_of(n).ok_or_else(|| {
        Error::Truncation(format!(
            "level {n} lies outside the {} retained levels",
            trunc.n_levels
        ))
    })
}

/// Holonomy of a clockwise loop around `g^(n)`: the ground slot and `n` swap
/// with signs `M[n_b][n] = d_n`, `M[n][n_b] = -d_n`; spectators stay put.
pub fn m_n_analytic(n: usize, trunc: &TruncationSpec) -> Result<HolonomyMatrix> {
    let slot = check_excited(n, trunc)?;
    let mut m = DMatrix::identity(trunc.n_levels, trunc.n_levels);
    let d = Complex64::new(d_sign(n), 0.0);
    m[(0, 0)] = Complex64::new(0.0, 0.0);
    m[(slot, slot)] = Complex64::new(0.0, 0.0);
    m[(0, slot)] = d;
    m[(slot, 0)] = -d;
    Ok(analytic(trunc, m))
}

/// Holonomy of the chain of loops around the first `m` excited levels, in
/// closed form. Column `n_b` moves to the first excited level, each excited
/// level moves to the next one, and the last returns to the ground slot.
/// For the even family the phases are `+1` along the shift and `(-1)^m` on
/// the return.
pub fn m_chain_analytic(m: usize, trunc: &TruncationSpec) -> Result<HolonomyMatrix> {
    if m == 0 {
        return Ok(analytic(trunc, DMatrix::identity(trunc.n_levels, trunc.n_levels)));
    }
    let top = trunc.parity.level(m);
    check_excited(top, trunc)?;
    let e = |i: usize| trunc.parity.level(i);
    let mut mat = DMatrix::identity(trunc.n_levels, trunc.n_levels);
    for i in 0..=m {
        mat[(i, i)] = Complex64::new(0.0, 0.0);
    }
    mat[(1, 0)] = Complex64::new(-d_sign(e(1)), 0.0);
    for i in 1..m {
        mat[(i + 1, i)] = Complex64::new(-d_sign(e(i)) * d_sign(e(i + 1)), 0.0);
    }
    mat[(0, m)] = Complex64::new(d_sign(e(m)), 0.0);
    Ok(analytic(trunc, mat))
}

/// Explicit product `M^(ns[last]) ⋯ M^(ns[0])` of single-loop matrices.
pub fn m_product(ns: &[usize], trunc: &TruncationSpec) -> Result<HolonomyMatrix> {
    let mut acc = DMatrix::identity(trunc.n_levels, trunc.n_levels);
    for &n in ns {
        acc = m_n_analytic(n, trunc)?.matrix * acc;
    }
    Ok(analytic(trunc, acc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn signs() {
        let d: Vec<f64> = (0..8).map(d_sign).collect();
        assert_eq!(d, vec![1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn single_loops() {
        let t = TruncationSpec::new(Parity::Even, 4).unwrap();
        let m2 = m_n_analytic(2, &t).unwrap();
        assert_eq!(m2.entry(0, 2), Some(re(-1.0)));
        assert_eq!(m2.entry(2, 0), Some(re(1.0)));
        assert_eq!(m2.entry(4, 4), Some(re(1.0)));
        let m4 = m_n_analytic(4, &t).unwrap();
        assert_eq!(m4.entry(0, 4), Some(re(1.0)));
        assert_eq!(m4.entry(4, 0), Some(re(-1.0)));
        assert_eq!(m4.entry(2, 2), Some(re(1.0)));
        let m6 = m_n_analytic(6, &t).unwrap();
        assert_eq!(m6.entry(0, 6), Some(re(-1.0)));
        assert_eq!(m6.entry(6, 0), Some(re(1.0)));
        assert!(m_n_analytic(8, &t).is_err());
        assert!(m_n_analytic(3, &t).is_err());
        assert!(m_n_analytic(0, &t).is_err());
    }

    #[test]
    fn chain_equals_product() {
        for parity in [Parity::Even, Parity::Odd] {
            let t = TruncationSpec::new(parity, 8).unwrap();
            for m in 1..=5 {
                let ns: Vec<usize> = (1..=m).map(|i| parity.level(i)).collect();
                let closed = m_chain_analytic(m, &t).unwrap();
                let prod = m_product(&ns, &t).unwrap();
                assert_eq!(closed.matrix, prod.matrix, "{parity:?} m={m}");
            }
        }
    }

    #[test]
    fn chain_return_phase() {
        let t = TruncationSpec::new(Parity::Even, 8).unwrap();
        for m in 1..=5 {
            let c = m_chain_analytic(m, &t).unwrap();
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(c.entry(0, 2 * m), Some(re(sign)));
            for j in 0..m {
                assert_eq!(c.entry(2 * j + 2, 2 * j), Some(re(1.0)));
            }
        }
        assert_eq!(
            m_chain_analytic(1, &t).unwrap().matrix,
            m_n_analytic(2, &t).unwrap().matrix
        );
    }
}

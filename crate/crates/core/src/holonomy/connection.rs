use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{d_sign, TruncationSpec};
use crate::bethe::{self, Parity};
use crate::continuation::{real_axis_sqrt_r, sheet_state, TrackedLevel};
use crate::eigensystem::{inv_sqrt_lower, norm_denominator};
use crate::error::{Error, Result};

/// `D_n = d_n k / sqrt(r)` with the continued root carried by the level.
pub fn d_function(level: &TrackedLevel) -> Result<Complex64> {
    let r = bethe::branch_discriminant(level.g(), level.k());
    if r.norm() < 1e-14 * level.g().norm().max(1.0) || level.sqrt_r.norm() == 0.0 {
        return Err(Error::Singular(format!(
            "D_{} at g={} sits on an exceptional point",
            level.n(),
            level.g()
        )));
    }
    Ok(d_sign(level.n()) * level.k() / level.sqrt_r)
}

/// `D_n` at an arbitrary point `(g, k)`, not necessarily on shell. The root
/// is the principal one, except that negative real `r` gives `-i sqrt|r|`.
pub fn d_function_at(n: usize, g: Complex64, k: Complex64) -> Result<Complex64> {
    let r = bethe::branch_discriminant(g, k);
    if r.norm() < 1e-14 * g.norm().max(1.0) {
        return Err(Error::Singular(format!("D_{n} at g={g}, k={k}: r vanishes")));
    }
    let s = if r.im == 0.0 { real_axis_sqrt_r(g, k) } else { r.sqrt() };
    Ok(d_sign(n) * k / s)
}

/// The same quantity from the normalisation constants:
/// `(1 ± sin(πk)/(πk))^{-1/2}` times `cos(πk/2)` (even) or `sin(πk/2)` (odd).
pub fn d_function_trig(n: usize, k: Complex64) -> Complex64 {
    let parity = Parity::of(n);
    let x = k * (0.5 * PI);
    let f = match parity {
        Parity::Even => x.cos(),
        Parity::Odd => x.sin(),
    };
    inv_sqrt_lower(norm_denominator(parity, k)) * f
}

/// `A_{mn} = -i (4/π) D_m D_n / (k_m² - k_n²)` with a vanishing diagonal.
pub fn connection_from_levels(levels: &[TrackedLevel]) -> Result<DMatrix<Complex64>> {
    let d: Vec<Complex64> = levels.iter().map(d_function).collect::<Result<_>>()?;
    let k2: Vec<Complex64> = levels.iter().map(|l| l.k() * l.k()).collect();
    let nl = levels.len();
    let mut a = DMatrix::zeros(nl, nl);
    let pref = Complex64::new(0.0, -4.0 / PI);
    for m in 0..nl {
        for n in (m + 1)..nl {
            let den = k2[m] - k2[n];
            if den.norm() < 1e-10 {
                return Err(Error::Singular(format!(
                    "levels {} and {} coalesce at g={}",
                    levels[m].n(),
                    levels[n].n(),
                    levels[m].g()
                )));
            }
            let v = pref * d[m] * d[n] / den;
            a[(m, n)] = v;
            a[(n, m)] = -v;
        }
    }
    Ok(a)
}

/// Connection at `g` with every retained level taken on its sheet.
pub fn gauge_connection(g: Complex64, trunc: &TruncationSpec) -> Result<DMatrix<Complex64>> {
    let levels: Vec<TrackedLevel> = trunc
        .levels()
        .into_iter()
        .map(|n| sheet_state(n, g))
        .collect::<Result<_>>()?;
    connection_from_levels(&levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bethe::solve_k_real;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn closed_form_matches_trig_form_on_real_axis() {
        for (n, g) in [(0, 0.3), (0, 2.0), (2, 1.0), (3, -0.2), (5, 4.0), (0, -0.7), (1, -1.5)] {
            let lv = TrackedLevel::on_real_axis(n, g).unwrap();
            let a = d_function(&lv).unwrap();
            let b = d_function_trig(n, lv.k());
            assert!((a - b).norm() < 1e-10, "n={n} g={g}: {a} vs {b}");
        }
    }

    #[test]
    fn d_vanishes_with_k() {
        for k in [1e-3, 1e-6, 1e-9] {
            let d = d_function_at(0, c(1.0, 0.0), c(k, 0.0)).unwrap();
            assert!(d.norm() < 2.0 * k, "k={k}: {d}");
        }
        let lv = TrackedLevel::on_real_axis(2, 1.0).unwrap();
        let a = d_function(&lv).unwrap();
        let b = d_function_at(2, lv.g(), lv.k()).unwrap();
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn connection_structure() {
        let trunc = TruncationSpec::new(Parity::Even, 6).unwrap();
        let a = gauge_connection(c(1.0, 0.0), &trunc).unwrap();
        for i in 0..6 {
            assert_eq!(a[(i, i)], c(0.0, 0.0));
        }
        assert!(crate::max_abs(&(&a + a.transpose())) < 1e-15);
        assert!(crate::max_abs(&(&a - a.adjoint())) < 1e-12);
        let k2 = solve_k_real(2, 1.0).unwrap().k;
        assert!(k2.im == 0.0);
    }

    #[test]
    fn singular_at_branch_point() {
        let lv = TrackedLevel::on_real_axis(1, -std::f64::consts::FRAC_2_PI).unwrap();
        assert!(d_function(&lv).is_err());
    }
}

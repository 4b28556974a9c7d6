use llep_core::bethe::Parity;
use llep_core::cycles::{contour_permutation, hermitian_cycle, n_ep_contour, phase_distance, CycleStatus};
use llep_core::{ComplexPath, Error, TruncationSpec};
use num_complex::Complex64;

#[test]
fn hermitian_cycle_shifts_both_families() {
    for parity in [Parity::Even, Parity::Odd] {
        let trunc = TruncationSpec::new(parity, 6).unwrap();
        let cyc = hermitian_cycle(1.0, &trunc).unwrap();
        assert_eq!(cyc.status, CycleStatus::Complete);
        for m in &cyc.permutation {
            assert_eq!(m.to, m.from + 2);
            assert!((m.phase.norm() - 1.0).abs() < 1e-12);
        }
        // Only the top level is sent outside the window.
        assert_eq!(cyc.exits_window, vec![trunc.top_level()]);
        for (b, a) in cyc.energies_before.iter().zip(&cyc.energies_after) {
            assert!(a.re > b.re);
        }
    }
}

#[test]
fn hermitian_cycle_rejects_the_branch_point() {
    let trunc = TruncationSpec::new(Parity::Odd, 4).unwrap();
    assert!(matches!(
        hermitian_cycle(-std::f64::consts::FRAC_2_PI, &trunc),
        Err(Error::Domain(_))
    ));
}

#[test]
fn n_ep_contours_cycle_the_first_levels() {
    let trunc = TruncationSpec::new(Parity::Even, 10).unwrap();
    for n_eps in 1..=3 {
        let path = n_ep_contour(1.0, n_eps, Parity::Even).unwrap();
        let (res, _) = contour_permutation(&path, &trunc).unwrap();
        assert_eq!(res.status, CycleStatus::Complete);
        let top = 2 * n_eps;
        for n in (0..top).step_by(2) {
            assert_eq!(res.target_of(n), Some(n + 2), "N={n_eps}");
        }
        assert_eq!(res.target_of(top), Some(0));
        let sign = if n_eps % 2 == 0 { 1.0 } else { -1.0 };
        assert!(phase_distance(res.phase_of(top).unwrap(), Complex64::new(sign, 0.0)) < 1e-6);
        for n in (top + 2)..20 {
            if let Some(t) = res.target_of(n) {
                assert_eq!(t, n);
            }
        }
        assert_eq!(res.cycles().iter().filter(|c| c.len() > 1).count(), 1);
    }
}

#[test]
fn empty_contour_is_identity() {
    let trunc = TruncationSpec::new(Parity::Odd, 6).unwrap();
    let path = n_ep_contour(1.0, 0, Parity::Odd).unwrap();
    let (res, h) = contour_permutation(&path, &trunc).unwrap();
    assert!(res.permutation.iter().all(|m| m.to == m.from));
    assert_eq!(h.max_abs_diff(&llep_core::CMatrix::identity(6, 6)), 0.0);
}

#[test]
fn open_path_is_not_a_contour() {
    let trunc = TruncationSpec::new(Parity::Even, 4).unwrap();
    let path = ComplexPath::new(vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)]).unwrap();
    assert!(matches!(contour_permutation(&path, &trunc), Err(Error::InvalidPath(_))));
}

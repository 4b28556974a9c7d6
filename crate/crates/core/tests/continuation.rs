use std::f64::consts::PI;

use llep_core::bethe::{solve_k_real, Parity};
use llep_core::continuation::continue_tracked;
use llep_core::exceptional::{branches_near, enumerate_eps, ep_residual, find_ep, local_expansion};
use llep_core::holonomy::{ep_keyhole, KeyholeSpec};
use llep_core::{continue_along, ComplexPath, ContinuationConfig, Error, TraceStatus, TrackedLevel};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Small fixed steps along a straight line with Newton on `tan(πk/2) - g/k`.
fn dense_even(g0: Complex64, k0: Complex64, g1: Complex64, steps: usize) -> Complex64 {
    let f = |g: Complex64, k: Complex64| (k * (PI / 2.0)).tan() - g / k;
    let df = |g: Complex64, k: Complex64| {
        let s = (k * (PI / 2.0)).cos();
        (PI / 2.0) / (s * s) + g / (k * k)
    };
    let mut k = k0;
    for i in 1..=steps {
        let g = g0 + (g1 - g0) * (i as f64 / steps as f64);
        for _ in 0..20 {
            let dk = f(g, k) / df(g, k);
            k -= dk;
            if dk.norm() < 1e-15 {
                break;
            }
        }
    }
    k
}

#[test]
fn straight_continuation_matches_dense_oracle() {
    for n in [2, 4] {
        let s = solve_k_real(n, 1.0).unwrap();
        let path = ComplexPath::new(vec![c(1.0, 0.0), c(1.0, -2.0)]).unwrap();
        let trace = continue_along(s, &path).unwrap();
        assert!(trace.completed());
        let want = dense_even(c(1.0, 0.0), s.k, c(1.0, -2.0), 20_000);
        assert!((trace.last().k - want).norm() < 1e-9, "n={n}: {} vs {want}", trace.last().k);
        assert!(trace.samples.iter().all(|p| p.residual < 1e-10));
    }
}

#[test]
fn loop_around_first_ep_swaps_ground_and_second_level() {
    let ep = find_ep(2).unwrap();
    let path = ep_keyhole(1.0, &ep, &KeyholeSpec::default()).unwrap();
    let k: Vec<Complex64> = [0, 2, 4].iter().map(|&n| solve_k_real(n, 1.0).unwrap().k).collect();
    let end = |n: usize, p: &ComplexPath| continue_along(solve_k_real(n, 1.0).unwrap(), p).unwrap().last().k;
    assert!((end(0, &path) - k[1]).norm() < 1e-9);
    assert!((end(2, &path) - k[0]).norm() < 1e-9);
    assert!((end(4, &path) - k[2]).norm() < 1e-9);
    let twice = path.then(&path).unwrap();
    assert!((end(0, &twice) - k[0]).norm() < 1e-9);
    assert!((end(2, &twice) - k[1]).norm() < 1e-9);
}

#[test]
fn odd_family_loop_swaps_one_and_three() {
    let ep = find_ep(3).unwrap();
    assert_eq!(ep.n_b, 1);
    let path = ep_keyhole(1.0, &ep, &KeyholeSpec::default()).unwrap();
    let k3 = solve_k_real(3, 1.0).unwrap().k;
    let t = continue_along(solve_k_real(1, 1.0).unwrap(), &path).unwrap();
    assert!((t.last().k - k3).norm() < 1e-9, "{}", t.last().k);
}

#[test]
fn waypoints_are_recorded_in_order() {
    let path = ComplexPath::new(vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 1.0), c(1.0, 1.0)]).unwrap();
    let t = continue_along(solve_k_real(2, 1.0).unwrap(), &path).unwrap();
    assert_eq!(t.waypoint_samples.len(), 4);
    assert!(t.waypoint_samples.windows(2).all(|w| w[0] < w[1]));
    for (i, &s) in t.waypoint_samples.iter().enumerate() {
        assert!((t.samples[s].g - path.waypoints[i]).norm() < 1e-12);
    }
}

#[test]
fn path_through_an_ep_aborts() {
    let ep = find_ep(2).unwrap();
    let start = c(ep.g_ep.re, 0.0);
    let path = ComplexPath::new(vec![c(1.0, 0.0), start, ep.g_ep, ep.g_ep - c(0.0, 1.0)]).unwrap();
    let level = TrackedLevel::on_real_axis(0, 1.0).unwrap();
    match continue_tracked(level, &path, &ContinuationConfig::default()) {
        Ok(t) => assert_eq!(t.status, TraceStatus::AbortedNearBranchPoint),
        Err(e) => assert!(matches!(e, Error::NearBranchPoint { .. }), "{e}"),
    }
}

#[test]
fn misplaced_path_is_rejected() {
    let path = ComplexPath::new(vec![c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
    assert!(matches!(
        continue_along(solve_k_real(2, 1.0).unwrap(), &path),
        Err(Error::InvalidPath(_))
    ));
}

#[test]
fn catalog_is_ordered_and_mirrored() {
    for (parity, nb) in [(Parity::Even, 0), (Parity::Odd, 1)] {
        let eps = enumerate_eps(parity, 9).unwrap();
        assert_eq!(eps.len(), 4);
        for (i, ep) in eps.iter().enumerate() {
            assert_eq!(ep.n, nb + 2 * (i + 1));
            assert_eq!(ep.n_b, nb);
            assert!(ep.g_ep.im < 0.0);
            let (f, e) = ep_residual(parity, ep.g_ep.conj(), ep.k_ep.conj());
            assert!(f.norm() < 1e-10 && e.norm() < 1e-10);
        }
        let im: Vec<f64> = eps.iter().map(|e| e.g_ep.im).collect();
        assert!(im.windows(2).all(|w| w[1] < w[0]), "{im:?}");
    }
}

#[test]
fn first_ep_reference_values() {
    let ep = find_ep(2).unwrap();
    assert!((ep.g_ep - c(-1.0508117859606443, -1.3114249263512967)).norm() < 1e-10);
    assert!((ep.k_ep - c(1.3408460914489664, -0.7164291681895896)).norm() < 1e-10);
}

#[test]
fn local_expansion_tracks_exact_branches() {
    for n in [2, 3, 4, 6] {
        let ep = find_ep(n).unwrap();
        for phase in [0.0, 1.0, 2.5, -1.2] {
            for mag in [1e-3, 1e-4, 1e-5] {
                let eps = Complex64::from_polar(mag, phase);
                let (am, ap) = local_expansion(&ep, eps).unwrap();
                let (em, ep_) = branches_near(&ep, eps).unwrap();
                let err = (am - em).norm().max((ap - ep_).norm());
                // Next term in the series is linear in ε.
                assert!(err < 10.0 * mag, "n={n} |ε|={mag} phase={phase}: {err:e}");
            }
        }
    }
    let ep = find_ep(2).unwrap();
    assert!(local_expansion(&ep, c(0.1, 0.0)).is_err());
}

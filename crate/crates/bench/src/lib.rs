//! Shared inputs for the benchmarks, built once outside the timed loops.

use llep_core::exceptional::find_ep;
use llep_core::holonomy::{ep_keyhole, KeyholeSpec};
use llep_core::{ComplexPath, Parity, Result, TruncationSpec};

/// Keyhole around the EP of level `n`, based at `g = 1`.
pub fn keyhole(n: usize) -> Result<ComplexPath> {
    let ep = find_ep(n)?;
    ep_keyhole(1.0, &ep, &KeyholeSpec::default())
}

pub fn truncation(parity: Parity, n_levels: usize) -> TruncationSpec {
    TruncationSpec::new(parity, n_levels).expect("at least two levels")
}

/// Couplings spread over both signs, avoiding the real branch points.
pub fn real_couplings(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| -9.7 + 19.3 * i as f64 / count.max(1) as f64)
        .filter(|g| g.abs() > 1e-3 && (g + std::f64::consts::FRAC_2_PI).abs() > 1e-3)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        assert!(keyhole(2).unwrap().is_closed());
        assert_eq!(truncation(Parity::Odd, 3).levels(), vec![1, 3, 5]);
        assert!(real_couplings(50).len() >= 48);
    }
}

//! Banded random matrix: `E_i^0 = i` on the diagonal and independent
//! standard normal couplings inside a band of half-width `b`.
//!
//! `V` has zero diagonal, `v_ij ~ N(0, 1)` for `1 <= |i - j| <= b`, and
//! exact zeros outside the band. Entries are drawn row by row in a fixed
//! order from a counter-based stream, so a given seed always reproduces
//! the same matrix bit for bit.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{finish_model, BasisLabel, ModelKind, ModelSystem};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::seeds;

/// Build a banded random system of dimension `d_h` and band half-width `b`.
///
/// The unperturbed energies are already ascending (`E_k^0 = k + 1` at slot
/// `k`), so the basis needs no reordering.
pub fn build_wbrm(d_h: usize, b: usize, seed: u64) -> Result<ModelSystem> {
    if d_h < 2 {
        return Err(Error::InvalidInput(format!("dimension must be >= 2, got {d_h}")));
    }
    if b == 0 || b >= d_h {
        return Err(Error::InvalidInput(format!(
            "band half-width must satisfy 1 <= b <= d_h - 1, got b={b} with d_h={d_h}"
        )));
    }
    super::check_dense_dim(d_h)?;

    let mut rng = seeds::rng(seed);
    let mut v = SymMatrix::zeros(d_h)?;
    for i in 0..d_h {
        for j in (i + 1)..=(i + b).min(d_h - 1) {
            let x: f64 = rng.sample(StandardNormal);
            v.set_sym(i, j, x);
        }
    }

    let energies: Vec<f64> = (1..=d_h).map(|i| i as f64).collect();
    let labels: Vec<BasisLabel> = (1..=d_h).map(|index| BasisLabel::Wbrm { index }).collect();
    let tie = |l: &BasisLabel| match *l {
        BasisLabel::Wbrm { index } => (index as i64, 0),
        _ => unreachable!(),
    };
    let mut m = finish_model(ModelKind::Wbrm, energies, labels, v, tie, true, Some(seed))?;
    // Report the declared half-width, not the measured one; they coincide
    // unless a draw lands on exact zero.
    m.bandwidth = Some(b);
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_zero_band_filled_outside_empty() {
        let m = build_wbrm(60, 7, 11).unwrap();
        for i in 0..60 {
            assert_eq!(m.v_matrix.get(i, i), 0.0);
            for j in 0..60 {
                if i.abs_diff(j) > 7 {
                    assert_eq!(m.v_matrix.get(i, j), 0.0);
                }
            }
        }
        // Inside the band a standard normal draw is never exactly zero.
        for i in 0..60usize {
            for j in (i + 1)..=(i + 7).min(59) {
                assert_ne!(m.v_matrix.get(i, j), 0.0);
            }
        }
        assert_eq!(m.bandwidth, Some(7));
        assert_eq!(m.seed, Some(11));
    }

    #[test]
    fn unperturbed_energies_count_from_one() {
        let m = build_wbrm(25, 4, 5).unwrap();
        for k in 0..25 {
            assert_eq!(m.unperturbed_energies[k], (k + 1) as f64);
            assert_eq!(m.basis_labels[k], BasisLabel::Wbrm { index: k + 1 });
        }
    }

    #[test]
    fn band_entries_have_unit_variance() {
        // Fixed seed, so the sample mean is a deterministic number; 500*10
        // band entries put the expected deviation well inside 0.05.
        let m = build_wbrm(500, 10, 424242).unwrap();
        let mut sum_sq = 0.0;
        let mut count = 0usize;
        for i in 0..500usize {
            for j in (i + 1)..=(i + 10).min(499) {
                sum_sq += m.v_matrix.get(i, j).powi(2);
                count += 1;
            }
        }
        let mean_sq = sum_sq / count as f64;
        assert!((mean_sq - 1.0).abs() < 0.05, "band mean square {mean_sq}");
    }

    #[test]
    fn different_seeds_differ() {
        let a = build_wbrm(20, 3, 1).unwrap();
        let b = build_wbrm(20, 3, 2).unwrap();
        assert_ne!(a.v_matrix, b.v_matrix);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(build_wbrm(1, 1, 0).is_err());
        assert!(build_wbrm(10, 0, 0).is_err());
        assert!(build_wbrm(10, 10, 0).is_err());
    }
}

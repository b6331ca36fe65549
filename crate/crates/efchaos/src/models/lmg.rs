//! Three-orbital collective fermion model in the symmetric (bosonized)
//! representation.
//!
//! `Omega` particles occupy three collective orbitals with single-particle
//! energies `0, eps1, eps2`. Pair-moving operators `K_rs` (which shift one
//! particle from orbital `s` to orbital `r`) enter the perturbation through
//! four Hermitian combinations:
//!
//! ```text
//! V = mu1 (K10 K10 + h.c.) + mu2 (K20 K20 + h.c.)
//!   + mu3 (K21 K20 + h.c.) + mu4 (K12 K10 + h.c.)
//! ```
//!
//! In the symmetric sector the orbitals behave as three bosonic modes with
//! fixed total occupation `n0 + n1 + n2 = Omega`, so
//! `<n_r+1, n_s-1| K_rs |n_r, n_s> = sqrt((n_r+1) n_s)` and a state is
//! labeled by `(n1, n2)` alone.

use std::collections::HashMap;

use super::{finish_model, BasisLabel, ModelKind, ModelSystem};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Build the three-orbital model with `Omega` particles.
///
/// Basis states are sorted by `E^0 = eps1 n1 + eps2 n2`, ties broken by
/// `(n1, n2)` lexicographically. The dimension is
/// `(Omega+1)(Omega+2)/2`.
pub fn build_lmg(omega: u32, eps1: f64, eps2: f64, mu: [f64; 4]) -> Result<ModelSystem> {
    if omega == 0 {
        return Err(Error::InvalidInput("particle number Omega must be >= 1".into()));
    }
    if ![eps1, eps2].iter().all(|x| x.is_finite()) || !mu.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidInput("model parameters must be finite".into()));
    }

    let d = (omega as usize + 1) * (omega as usize + 2) / 2;
    super::check_dense_dim(d)?;
    let mut labels = Vec::with_capacity(d);
    for n1 in 0..=omega {
        for n2 in 0..=(omega - n1) {
            labels.push(BasisLabel::Lmg3 { n1, n2 });
        }
    }
    debug_assert_eq!(labels.len(), d);
    let index: HashMap<(u32, u32), usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| match *l {
            BasisLabel::Lmg3 { n1, n2 } => ((n1, n2), i),
            _ => unreachable!(),
        })
        .collect();

    let energies: Vec<f64> = labels
        .iter()
        .map(|l| match *l {
            BasisLabel::Lmg3 { n1, n2 } => eps1 * f64::from(n1) + eps2 * f64::from(n2),
            _ => unreachable!(),
        })
        .collect();

    // The four raising channels, as shifts of (n1, n2) with their squared
    // amplitudes. Each Hermitian conjugate is the reverse direction, which
    // `add_sym` fills; no two channels share a shift or have opposite
    // shifts, so every off-diagonal entry is written exactly once.
    //   mu1: K10 K10   (n1 += 2)          amp^2 = n0 (n0-1)(n1+1)(n1+2)
    //   mu2: K20 K20   (n2 += 2)          amp^2 = n0 (n0-1)(n2+1)(n2+2)
    //   mu3: K21 K20   (n1 -= 1, n2 += 2) amp^2 = n0 n1 (n2+1)(n2+2)
    //   mu4: K12 K10   (n1 += 2, n2 -= 1) amp^2 = n0 n2 (n1+1)(n1+2)
    let mut v = SymMatrix::zeros(d)?;
    for (s, l) in labels.iter().enumerate() {
        let (n1, n2) = match *l {
            BasisLabel::Lmg3 { n1, n2 } => (n1, n2),
            _ => unreachable!(),
        };
        let n0 = omega - n1 - n2;
        let (f0, f1, f2) = (u64::from(n0), u64::from(n1), u64::from(n2));
        let channels: [(i64, i64, u64, f64); 4] = [
            (2, 0, f0 * f0.saturating_sub(1) * (f1 + 1) * (f1 + 2), mu[0]),
            (0, 2, f0 * f0.saturating_sub(1) * (f2 + 1) * (f2 + 2), mu[1]),
            (-1, 2, f0 * f1 * (f2 + 1) * (f2 + 2), mu[2]),
            (2, -1, f0 * f2 * (f1 + 1) * (f1 + 2), mu[3]),
        ];
        for (dn1, dn2, amp2, strength) in channels {
            if amp2 == 0 {
                continue;
            }
            let t1 = u32::try_from(i64::from(n1) + dn1).expect("nonzero amplitude in range");
            let t2 = u32::try_from(i64::from(n2) + dn2).expect("nonzero amplitude in range");
            let t = index[&(t1, t2)];
            v.add_sym(s, t, strength * (amp2 as f64).sqrt());
        }
    }

    let tie = |l: &BasisLabel| match *l {
        BasisLabel::Lmg3 { n1, n2 } => (i64::from(n1), i64::from(n2)),
        _ => unreachable!(),
    };
    finish_model(ModelKind::Lmg3, energies, labels, v, tie, true, None)
}

//! Single-mode boson coupled to `N` two-level atoms (a spin `j = N/2`).
//!
//! ```text
//! H0 = omega0 Jz + omega a'a
//! V  = (a' + a)(J+ + J-) / sqrt(2j)
//! ```
//!
//! The boson space is truncated at `n_max` quanta. Atomic projections are
//! tracked as `2m` in integers so that odd `N` stays exact.

use super::{finish_model, BasisLabel, ModelKind, ModelSystem};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Build the atom-field model for `n_atoms` atoms and a boson cutoff of
/// `n_max` quanta.
///
/// Basis states are sorted by `E^0 = omega0 m + omega n`; ties are broken
/// by `m` ascending, then `n` ascending. The dimension is
/// `(n_max + 1)(n_atoms + 1)`.
pub fn build_dicke(n_atoms: u32, n_max: u32, omega0: f64, omega: f64) -> Result<ModelSystem> {
    if n_atoms == 0 {
        return Err(Error::InvalidInput("atom count must be >= 1".into()));
    }
    if !omega0.is_finite() || !omega.is_finite() {
        return Err(Error::InvalidInput("model parameters must be finite".into()));
    }

    let n_states = (n_max + 1) as usize;
    let m_states = (n_atoms + 1) as usize;
    let d = n_states * m_states;
    super::check_dense_dim(d)?;
    // Index layout before sorting: n major, twice_m minor.
    let idx = |n: u32, twice_m: i32| -> usize {
        let m_slot = ((twice_m + n_atoms as i32) / 2) as usize;
        n as usize * m_states + m_slot
    };

    let mut labels = Vec::with_capacity(d);
    let mut energies = Vec::with_capacity(d);
    for n in 0..=n_max {
        let mut twice_m = -(n_atoms as i32);
        while twice_m <= n_atoms as i32 {
            labels.push(BasisLabel::Dicke { n, twice_m });
            energies.push(omega0 * 0.5 * f64::from(twice_m) + omega * f64::from(n));
            twice_m += 2;
        }
    }

    // j(j+1) - m(m +- 1) in quarter units: (N(N+2) - tm(tm +- 2)) / 4.
    let jj4 = i64::from(n_atoms) * (i64::from(n_atoms) + 2);
    let prefactor = 1.0 / f64::from(n_atoms).sqrt();
    let mut v = SymMatrix::zeros(d)?;
    for n in 0..n_max {
        let boson = f64::from(n + 1).sqrt();
        let mut twice_m = -(n_atoms as i32);
        while twice_m <= n_atoms as i32 {
            let s = idx(n, twice_m);
            // Raising channels a'J+ and a'J-; the conjugates are the
            // mirrored entries. The two shifts (+1, +2) and (+1, -2) and
            // their negatives are all distinct, so each off-diagonal entry
            // is written exactly once. At the multiplet edges the ladder
            // amplitude vanishes exactly (tm(tm +- 2) reaches N(N+2)).
            for dm in [2i64, -2] {
                let tm = i64::from(twice_m);
                let amp4 = jj4 - tm * (tm + dm);
                debug_assert!(amp4 >= 0, "spin ladder left the multiplet");
                if amp4 <= 0 {
                    continue;
                }
                let spin = ((amp4 as f64) * 0.25).sqrt();
                let t = idx(n + 1, (tm + dm) as i32);
                v.add_sym(s, t, prefactor * boson * spin);
            }
            twice_m += 2;
        }
    }

    let tie = |l: &BasisLabel| match *l {
        BasisLabel::Dicke { n, twice_m } => (i64::from(twice_m), i64::from(n)),
        _ => unreachable!(),
    };
    finish_model(ModelKind::Dicke, energies, labels, v, tie, true, None)
}

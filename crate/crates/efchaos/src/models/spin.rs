//! Spin-1/2 chains with a single-site field defect.
//!
//! Both chains use Pauli matrices (eigenvalues +-1) and number sites from
//! 1; bit `i` of a basis pattern holds site `i + 1`, set meaning up.
//!
//! Defect XXZ chain, restricted to one total-magnetization sector:
//!
//! ```text
//! H0 = mu_d sz[d] + mu sum_{i=1}^{N-1} sz[i] sz[i+1]
//! V  = sum_{i=1}^{N-1} (sx[i] sx[i+1] + sy[i] sy[i+1])
//! ```
//!
//! Defect Ising chain on the full `2^N` space:
//!
//! ```text
//! H0 = mu_d sz[d] + Jz sum_i sz[i] sz[i+1]    (ring closed by default)
//! V  = g sum_{i=1}^{N-1} sx[i]
//! ```

use std::collections::HashMap;

use super::{finish_model, BasisLabel, ModelKind, ModelSystem};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Whether the Ising `sz sz` sum wraps around from site `N` to site 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsingBoundary {
    /// Ring: the bond sum includes `sz[N] sz[1]`.
    Periodic,
    /// Open chain: bonds run from site 1 to site `N-1` only.
    Open,
}

/// `sz` eigenvalue (+-1) of 0-based site `bit` in `pattern`, as an integer.
#[inline]
fn sz(pattern: u64, bit: u32) -> i64 {
    if (pattern >> bit) & 1 == 1 {
        1
    } else {
        -1
    }
}

fn check_sites(n_sites: u32, defect_site: u32, max_sites: u32) -> Result<()> {
    if !(2..=max_sites).contains(&n_sites) {
        return Err(Error::InvalidInput(format!(
            "site count must be in 2..={max_sites}, got {n_sites}"
        )));
    }
    if defect_site == 0 || defect_site > n_sites {
        return Err(Error::InvalidInput(format!(
            "defect site must be in 1..={n_sites}, got {defect_site}"
        )));
    }
    Ok(())
}

/// Build the defect XXZ chain in the sector with total `2 Sz = twice_sz`.
///
/// The boundary is open for both `H0` and `V`. States are sorted by the
/// `H0` diagonal, ties broken by bit pattern value.
pub fn build_defect_xxz(
    n_sites: u32,
    defect_site: u32,
    mu_defect: f64,
    mu_coupling: f64,
    twice_sz: i32,
) -> Result<ModelSystem> {
    check_sites(n_sites, defect_site, 24)?;
    if !mu_defect.is_finite() || !mu_coupling.is_finite() {
        return Err(Error::InvalidInput("model parameters must be finite".into()));
    }
    let n = n_sites as i32;
    if (n + twice_sz) % 2 != 0 || twice_sz.abs() > n {
        return Err(Error::InvalidInput(format!(
            "magnetization 2Sz={twice_sz} is not reachable with {n_sites} spin-1/2 sites"
        )));
    }
    let n_up = ((n + twice_sz) / 2) as u32;

    let patterns: Vec<u64> =
        (0u64..(1 << n_sites)).filter(|p| p.count_ones() == n_up).collect();
    let d = patterns.len();
    super::check_dense_dim(d)?;
    let index: HashMap<u64, usize> =
        patterns.iter().enumerate().map(|(i, &p)| (p, i)).collect();

    let defect_bit = defect_site - 1;
    let energies: Vec<f64> = patterns
        .iter()
        .map(|&p| {
            let bonds: i64 = (0..n_sites - 1).map(|i| sz(p, i) * sz(p, i + 1)).sum();
            mu_defect * sz(p, defect_bit) as f64 + mu_coupling * bonds as f64
        })
        .collect();
    let labels: Vec<BasisLabel> =
        patterns.iter().map(|&p| BasisLabel::Spins { pattern: p }).collect();

    // sx sx + sy sy swaps an antiparallel neighbor pair with amplitude 2.
    // Writing only the "up-down to down-up" direction covers each pair
    // once; `add_sym` supplies the conjugate.
    let mut v = SymMatrix::zeros(d)?;
    for (s, &p) in patterns.iter().enumerate() {
        for i in 0..n_sites - 1 {
            let up_here = (p >> i) & 1 == 1;
            let up_next = (p >> (i + 1)) & 1 == 1;
            if up_here && !up_next {
                let t = index[&(p ^ (0b11 << i))];
                v.add_sym(s, t, 2.0);
            }
        }
    }

    let tie = |l: &BasisLabel| match *l {
        BasisLabel::Spins { pattern } => (pattern as i64, 0),
        _ => unreachable!(),
    };
    finish_model(ModelKind::DefectXxz, energies, labels, v, tie, false, None)
}

/// Build the defect Ising chain on the full `2^n_sites` space.
///
/// The transverse perturbation acts on sites 1 through `N-1` with strength
/// `transverse`. States are sorted by the `H0` diagonal, ties broken by
/// bit pattern value.
pub fn build_defect_ising(
    n_sites: u32,
    defect_site: u32,
    mu_defect: f64,
    j_z: f64,
    transverse: f64,
    boundary: IsingBoundary,
) -> Result<ModelSystem> {
    check_sites(n_sites, defect_site, 13)?;
    if ![mu_defect, j_z, transverse].iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidInput("model parameters must be finite".into()));
    }

    let d = 1usize << n_sites;
    super::check_dense_dim(d)?;
    let defect_bit = defect_site - 1;
    let mut energies = Vec::with_capacity(d);
    let mut labels = Vec::with_capacity(d);
    for p in 0..d as u64 {
        let mut bonds: i64 = (0..n_sites - 1).map(|i| sz(p, i) * sz(p, i + 1)).sum();
        if boundary == IsingBoundary::Periodic {
            bonds += sz(p, n_sites - 1) * sz(p, 0);
        }
        energies.push(mu_defect * sz(p, defect_bit) as f64 + j_z * bonds as f64);
        labels.push(BasisLabel::Spins { pattern: p });
    }

    // Single-site flips; writing only the "up to down" direction covers
    // each pair once.
    let mut v = SymMatrix::zeros(d)?;
    for p in 0..d as u64 {
        for i in 0..n_sites - 1 {
            if (p >> i) & 1 == 1 {
                let t = (p ^ (1 << i)) as usize;
                v.add_sym(p as usize, t, transverse);
            }
        }
    }

    let tie = |l: &BasisLabel| match *l {
        BasisLabel::Spins { pattern } => (pattern as i64, 0),
        _ => unreachable!(),
    };
    finish_model(ModelKind::DefectIsing, energies, labels, v, tie, false, None)
}

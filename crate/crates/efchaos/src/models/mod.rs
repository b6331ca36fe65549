//! The five Hamiltonian families: `H(lambda) = H0 + lambda V` with a
//! diagonal `H0` in the chosen basis and a sparse symmetric perturbation.
//!
//! Couplings are always quoted as the rescaled `lambda'`, related to the
//! physical coupling by `lambda = a * lambda'` with a per-model constant
//! `a` chosen so that every model's spacing statistics sit closest to the
//! Wigner distribution near `lambda' = 1`.

mod dicke;
mod lmg;
mod spin;
mod wbrm;

pub use dicke::build_dicke;
pub use lmg::build_lmg;
pub use spin::{build_defect_ising, build_defect_xxz, IsingBoundary};
pub use wbrm::build_wbrm;

use crate::error::{Error, Result};
use crate::linalg::{self, SpectralSolution, SymMatrix};

/// Largest basis size a builder will materialize. Dense storage and the
/// cubic eigensolver make larger spaces impractical on one node.
pub const MAX_DENSE_DIM: usize = 8192;

/// Reject basis sizes past [`MAX_DENSE_DIM`] before allocating anything.
pub(crate) fn check_dense_dim(d: usize) -> Result<()> {
    if d > MAX_DENSE_DIM {
        return Err(Error::InvalidInput(format!(
            "basis size {d} exceeds the dense-storage limit {MAX_DENSE_DIM}"
        )));
    }
    Ok(())
}

/// Which of the five families a system belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Three-orbital collective fermion model, `Omega` particles.
    Lmg3,
    /// Single bosonic mode coupled to `N` two-level atoms.
    Dicke,
    /// Banded random matrix: diagonal `E_i = i` plus a Gaussian band.
    Wbrm,
    /// Spin-1/2 XXZ chain with a field defect on one site, fixed-`S_z` sector.
    DefectXxz,
    /// Ising chain with a field defect and a transverse perturbation.
    DefectIsing,
}

impl ModelKind {
    /// Stable lowercase name used in configs, CSV provenance, and cache keys.
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Lmg3 => "lmg3",
            ModelKind::Dicke => "dicke",
            ModelKind::Wbrm => "wbrm",
            ModelKind::DefectXxz => "defect_xxz",
            ModelKind::DefectIsing => "defect_ising",
        }
    }

    /// The rescaling constant `a` (`lambda = a * lambda'`) for this family:
    /// 0.8, 1.3, 2.0, 1.2, 0.6 for LMG, Dicke, WBRM, defect XXZ, defect
    /// Ising respectively.
    pub fn lambda_scale(&self) -> f64 {
        match self {
            ModelKind::Lmg3 => 0.8,
            ModelKind::Dicke => 1.3,
            ModelKind::Wbrm => 2.0,
            ModelKind::DefectXxz => 1.2,
            ModelKind::DefectIsing => 0.6,
        }
    }
}

/// Identity of one basis state, model specific.
///
/// Labels map bijectively to basis indices after the energy sort, and the
/// label's own `H0` energy equals `unperturbed_energies` at that index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisLabel {
    /// Orbital occupations `(n1, n2)`; orbital 0 holds the rest.
    Lmg3 {
        /// Occupation of orbital 1.
        n1: u32,
        /// Occupation of orbital 2.
        n2: u32,
    },
    /// Boson number and atomic `J_z` quantum number (doubled to stay exact
    /// for odd atom counts).
    Dicke {
        /// Boson occupation `n`.
        n: u32,
        /// `2m` where `m` is the `J_z` eigenvalue.
        twice_m: i32,
    },
    /// Plain basis index (unperturbed energies are `i = index + 1`).
    Wbrm {
        /// 1-based unperturbed index.
        index: usize,
    },
    /// Spin configuration; bit `i` set means site `i+1` points up.
    Spins {
        /// Bit pattern over `N` sites.
        pattern: u64,
    },
}

/// One of the five models: basis, diagonal `H0`, sparse symmetric `V`, and
/// the family's rescaling constant.
#[derive(Debug, Clone)]
pub struct ModelSystem {
    /// Family tag.
    pub name: ModelKind,
    /// Hilbert-space dimension.
    pub d_h: usize,
    /// `E_k^0`, ascending: the diagonal of `H0` in the sorted basis.
    pub unperturbed_energies: Vec<f64>,
    /// The perturbation `V`, exactly symmetric.
    pub v_matrix: SymMatrix,
    /// Rescaling constant `a` of the family.
    pub lambda_scale: f64,
    /// Index-space band bound: `V[i][j] = 0` whenever `|i-j| > b`. Present
    /// for the banded families (LMG, Dicke, WBRM), absent for the chains.
    pub bandwidth: Option<usize>,
    /// Per-state labels in basis order.
    pub basis_labels: Vec<BasisLabel>,
    /// RNG seed (WBRM only).
    pub seed: Option<u64>,
}

/// An assembled Hamiltonian `H = H0 + a * lambda' * V` with its coupling.
#[derive(Debug, Clone)]
pub struct Assembled {
    /// Dense symmetric Hamiltonian.
    pub matrix: SymMatrix,
    /// Physical coupling `a * lambda'`.
    pub lambda_effective: f64,
}

impl ModelSystem {
    /// Check the structural invariants shared by every builder output.
    /// Builders call this before returning; it is cheap relative to
    /// construction.
    fn validate(&self) -> Result<()> {
        if self.d_h == 0
            || self.unperturbed_energies.len() != self.d_h
            || self.v_matrix.dim() != self.d_h
            || self.basis_labels.len() != self.d_h
        {
            return Err(Error::InvalidInput(format!(
                "inconsistent model dimensions for {}",
                self.name.as_str()
            )));
        }
        if self.unperturbed_energies.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput("unperturbed energies not ascending".into()));
        }
        if let Some(b) = self.bandwidth {
            for i in 0..self.d_h {
                for j in 0..self.d_h {
                    if i.abs_diff(j) > b && self.v_matrix.get(i, j) != 0.0 {
                        return Err(Error::InvalidInput(format!(
                            "V violates band bound {b} at ({i},{j})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Assemble `H = diag(E^0) + a * lambda' * V`.
    pub fn assemble(&self, lambda_prime: f64) -> Result<Assembled> {
        if !(lambda_prime >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "lambda' must be >= 0, got {lambda_prime}"
            )));
        }
        let lambda_eff = self.lambda_scale * lambda_prime;
        let d = self.d_h;
        let mut m = SymMatrix::zeros(d)?;
        for i in 0..d {
            for j in 0..=i {
                let v = lambda_eff * self.v_matrix.get(i, j);
                let v = if i == j { v + self.unperturbed_energies[i] } else { v };
                m.set_sym(i, j, v);
            }
        }
        Ok(Assembled { matrix: m, lambda_effective: lambda_eff })
    }

    /// Diagonalize at the given coupling: full components plus metadata.
    pub fn solve(&self, lambda_prime: f64) -> Result<SpectralSolution> {
        let assembled = self.assemble(lambda_prime)?;
        let r = linalg::eigh(&assembled.matrix)?;
        Ok(SpectralSolution {
            lambda_effective: assembled.lambda_effective,
            energies: r.values,
            components: r.vectors,
            unperturbed_energies: self.unperturbed_energies.clone(),
        })
    }

    /// Eigenvalues only at the given coupling; about half the cost of
    /// [`ModelSystem::solve`].
    pub fn solve_values(&self, lambda_prime: f64) -> Result<Vec<f64>> {
        let assembled = self.assemble(lambda_prime)?;
        linalg::eigvalsh(&assembled.matrix)
    }

    /// Canonical parameter string used for cache keys and provenance.
    /// Covers everything the spectra depend on: family, dimensions, basis
    /// parameters, couplings, and seed.
    pub fn cache_identity(&self) -> String {
        let mut s = format!("model={};d_h={};a={:.17e}", self.name.as_str(), self.d_h, self.lambda_scale);
        if let Some(b) = self.bandwidth {
            s.push_str(&format!(";b={b}"));
        }
        if let Some(seed) = self.seed {
            s.push_str(&format!(";seed={seed}"));
        }
        // The full E^0 sequence and a V checksum pin the numeric content
        // without serializing the whole matrix.
        let mut h = 0u64;
        for &e in &self.unperturbed_energies {
            h = h.rotate_left(13) ^ e.to_bits();
        }
        s.push_str(&format!(";e0={h:016x}"));
        let mut hv = 0u64;
        for i in 0..self.d_h {
            for &v in self.v_matrix.row(i) {
                hv = hv.rotate_left(7) ^ v.to_bits();
            }
        }
        s.push_str(&format!(";v={hv:016x}"));
        s
    }
}

/// Standard parameter sets for the five families.
///
/// These are the configurations every scan and comparison in this crate
/// refers to unless a config overrides them:
///
/// * three-orbital model: `Omega = 40`, `eps = (0, 1.1, 1.61)`,
///   `mu = (0.039, 0.044, 0.048, 0.041)`, dimension 861;
/// * atom-field model: `N = 40`, `n_max = 40`, `omega0 = omega = 1`,
///   dimension 1681;
/// * banded random matrix: `d_H = 1000`, `b = 10`;
/// * defect XXZ chain: `N = 12`, defect on site 5 with `mu_d = 1.11`,
///   `mu = 0.5`, sector `2 Sz = -4`, dimension 495;
/// * defect Ising chain: `N = 10`, defect on site 5 with `mu_d = 1.11`,
///   `Jz = 1`, unit transverse strength, ring closed, dimension 1024.
///
/// `seed` feeds only the random family; the others ignore it.
pub fn build_default(kind: ModelKind, seed: u64) -> Result<ModelSystem> {
    match kind {
        ModelKind::Lmg3 => build_lmg(40, 1.1, 1.61, [0.039, 0.044, 0.048, 0.041]),
        ModelKind::Dicke => build_dicke(40, 40, 1.0, 1.0),
        ModelKind::Wbrm => build_wbrm(1000, 10, seed),
        ModelKind::DefectXxz => build_defect_xxz(12, 5, 1.11, 0.5, -4),
        ModelKind::DefectIsing => build_defect_ising(10, 5, 1.11, 1.0, 1.0, IsingBoundary::Periodic),
    }
}

/// Sort basis states by energy with a model-specific tie break, returning
/// the permuted (energies, labels) and the permutation applied.
///
/// `tie_key` must be a strict total order on labels; exact energy ties fall
/// back to it so rebuilds are bitwise reproducible.
pub(crate) fn sort_basis(
    energies: Vec<f64>,
    labels: Vec<BasisLabel>,
    tie_key: impl Fn(&BasisLabel) -> (i64, i64),
) -> (Vec<f64>, Vec<BasisLabel>, Vec<usize>) {
    let mut order: Vec<usize> = (0..energies.len()).collect();
    order.sort_by(|&a, &b| {
        energies[a]
            .partial_cmp(&energies[b])
            .expect("finite energies")
            .then_with(|| tie_key(&labels[a]).cmp(&tie_key(&labels[b])))
    });
    let sorted_e: Vec<f64> = order.iter().map(|&i| energies[i]).collect();
    let sorted_l: Vec<BasisLabel> = order.iter().map(|&i| labels[i]).collect();
    (sorted_e, sorted_l, order)
}

/// Band bound of a symmetric matrix: largest `|i-j|` over nonzero entries.
pub(crate) fn computed_bandwidth(v: &SymMatrix) -> usize {
    let d = v.dim();
    let mut b = 0usize;
    for i in 0..d {
        let row = v.row(i);
        for (j, &x) in row.iter().enumerate() {
            if x != 0.0 {
                b = b.max(i.abs_diff(j));
            }
        }
    }
    b
}

/// Shared final assembly for builders: sort, permute `V`, compute the band
/// bound if requested, validate.
#[allow(clippy::too_many_arguments)]
pub(crate) fn finish_model(
    name: ModelKind,
    energies: Vec<f64>,
    labels: Vec<BasisLabel>,
    v_unsorted: SymMatrix,
    tie_key: impl Fn(&BasisLabel) -> (i64, i64),
    banded: bool,
    seed: Option<u64>,
) -> Result<ModelSystem> {
    let d = energies.len();
    let (sorted_e, sorted_l, order) = sort_basis(energies, labels, tie_key);
    let mut v = SymMatrix::zeros(d)?;
    for i in 0..d {
        for j in 0..=i {
            let x = v_unsorted.get(order[i], order[j]);
            if x != 0.0 {
                v.set_sym(i, j, x);
            }
        }
    }
    let bandwidth = banded.then(|| computed_bandwidth(&v));
    let m = ModelSystem {
        name,
        d_h: d,
        unperturbed_energies: sorted_e,
        v_matrix: v,
        lambda_scale: name.lambda_scale(),
        bandwidth,
        basis_labels: sorted_l,
        seed,
    };
    m.validate()?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assemble_at_zero_is_diagonal() {
        let m = build_wbrm(12, 3, 42).unwrap();
        let a = m.assemble(0.0).unwrap();
        assert_eq!(a.lambda_effective, 0.0);
        for i in 0..12 {
            for j in 0..12 {
                let want = if i == j { (i + 1) as f64 } else { 0.0 };
                assert_eq!(a.matrix.get(i, j), want);
            }
        }
    }

    #[test]
    fn assemble_applies_family_scale() {
        // WBRM: a = 2, so lambda' = 1 doubles V.
        let m = build_wbrm(10, 2, 7).unwrap();
        let a = m.assemble(1.0).unwrap();
        assert_eq!(a.lambda_effective, 2.0);
        for i in 0..10 {
            for j in 0..10 {
                if i != j {
                    assert_eq!(a.matrix.get(i, j), 2.0 * m.v_matrix.get(i, j));
                }
            }
        }
        // LMG: a = 0.8.
        let lmg = build_lmg(3, 1.1, 1.61, [0.039, 0.044, 0.048, 0.041]).unwrap();
        let a = lmg.assemble(1.0).unwrap();
        assert!((a.lambda_effective - 0.8).abs() < 1e-15);
    }

    #[test]
    fn assemble_rejects_negative_coupling() {
        let m = build_wbrm(8, 2, 1).unwrap();
        assert!(m.assemble(-0.1).is_err());
    }

    #[test]
    fn solve_at_zero_matches_unperturbed() {
        let m = build_wbrm(16, 4, 3).unwrap();
        let sol = m.solve(0.0).unwrap();
        for k in 0..16 {
            assert!((sol.energies[k] - m.unperturbed_energies[k]).abs() < 1e-12);
            assert!((sol.component(k, k).abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_rebuild_is_bitwise_identical() {
        let a = build_wbrm(30, 5, 99).unwrap();
        let b = build_wbrm(30, 5, 99).unwrap();
        assert_eq!(a.v_matrix, b.v_matrix);
        assert_eq!(a.unperturbed_energies, b.unperturbed_energies);
        let l1 = build_lmg(6, 1.1, 1.61, [0.039, 0.044, 0.048, 0.041]).unwrap();
        let l2 = build_lmg(6, 1.1, 1.61, [0.039, 0.044, 0.048, 0.041]).unwrap();
        assert_eq!(l1.v_matrix, l2.v_matrix);
    }
}

//! Dense matrices, symmetric eigendecomposition, and spectral solutions.
//!
//! Everything downstream works in the unperturbed basis: a Hamiltonian is a
//! real symmetric matrix, its eigenvectors are rows of a component matrix
//! `C` with `C[alpha][k] = <k|alpha>`, and eigenvalues come out ascending
//! with a deterministic global sign per eigenvector.

use crate::error::{Error, Result};
use crate::lapack;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Build from a function of (row, column).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Wrap an existing row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "buffer length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry accessor.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Entry mutator.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// Row `i` as a contiguous slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Mutable row access.
    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Underlying row-major buffer.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Largest absolute entry (0 for an empty matrix).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }
}

/// Real symmetric matrix; symmetry is exact by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    mat: Mat,
}

impl SymMatrix {
    /// Zero symmetric matrix.
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("symmetric matrix dimension must be >= 1".into()));
        }
        Ok(SymMatrix { dim, mat: Mat::zeros(dim, dim) })
    }

    /// Build from a generator evaluated on the lower triangle (`i >= j`)
    /// and mirrored, so `entries[i][j] == entries[j][i]` holds exactly.
    pub fn from_lower(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut s = SymMatrix::zeros(dim)?;
        for i in 0..dim {
            for j in 0..=i {
                let v = f(i, j);
                s.mat.set(i, j, v);
                s.mat.set(j, i, v);
            }
        }
        Ok(s)
    }

    /// Validate an existing matrix for exact symmetry and adopt it.
    pub fn try_from_mat(mat: Mat) -> Result<Self> {
        if mat.rows() != mat.cols() || mat.rows() == 0 {
            return Err(Error::InvalidInput(format!(
                "symmetric matrix must be square and nonempty, got {}x{}",
                mat.rows(),
                mat.cols()
            )));
        }
        for i in 0..mat.rows() {
            for j in 0..i {
                if mat.get(i, j).to_bits() != mat.get(j, i).to_bits() {
                    return Err(Error::InvalidInput(format!(
                        "matrix not exactly symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let dim = mat.rows();
        Ok(SymMatrix { dim, mat })
    }

    /// Matrix dimension `d_H`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry accessor.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat.get(i, j)
    }

    /// Set the symmetric pair `(i,j)` and `(j,i)` to the same value.
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.mat.set(i, j, v);
        self.mat.set(j, i, v);
    }

    /// Add `v` to the symmetric pair; the diagonal is touched once.
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        let cur = self.mat.get(i, j);
        self.mat.set(i, j, cur + v);
        if i != j {
            self.mat.set(j, i, cur + v);
        }
    }

    /// Dense view.
    pub fn as_mat(&self) -> &Mat {
        &self.mat
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.mat.max_abs()
    }

    /// Row `i` as a contiguous slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        self.mat.row(i)
    }
}

/// Eigendecomposition of a symmetric matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors, one per row of `vectors`.
#[derive(Debug, Clone)]
pub struct EighResult {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Row `k` is the eigenvector of `values[k]`, sign-fixed.
    pub vectors: Mat,
}

/// Dense symmetric eigendecomposition.
///
/// Eigenvalues come back ascending. Each eigenvector's global sign is fixed
/// deterministically: the component of largest magnitude is made positive,
/// ties broken by the lowest index. The convention exists purely so that
/// repeated runs and cached results are bitwise comparable; all downstream
/// statistics are sign-symmetric.
pub fn eigh(h: &SymMatrix) -> Result<EighResult> {
    if !h.as_mat().as_slice().iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let n = h.dim();
    let mut buf = h.as_mat().as_slice().to_vec();
    let (values, vecs) = lapack::syevd(&mut buf, n, true)?;
    let mut vectors = Mat::from_vec(n, n, vecs.expect("syevd with vectors=true returns them"))?;
    for k in 0..n {
        fix_sign(vectors.row_mut(k));
    }
    // Cheap sanity pass: unit norms catch layout or convergence bugs at
    // O(d^2); the full residual/orthogonality contract is checked by
    // `verify_solution` in tests.
    for k in 0..n {
        let s: f64 = vectors.row(k).iter().map(|c| c * c).sum();
        if (s - 1.0).abs() > 1e-8 {
            return Err(Error::Numerical(format!(
                "eigenvector {k} has squared norm {s:.3e} after dsyevd (n={n})"
            )));
        }
    }
    Ok(EighResult { values, vectors })
}

/// Eigenvalues only, ascending. Roughly half the cost of [`eigh`]; used
/// where spectra are pooled without component statistics.
pub fn eigvalsh(h: &SymMatrix) -> Result<Vec<f64>> {
    if !h.as_mat().as_slice().iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let n = h.dim();
    let mut buf = h.as_mat().as_slice().to_vec();
    let (values, _) = lapack::syevd(&mut buf, n, false)?;
    Ok(values)
}

/// Make the largest-magnitude component positive; ties break to the lowest
/// index (strict `>` while scanning keeps the first maximum).
fn fix_sign(v: &mut [f64]) {
    let mut idx = 0usize;
    let mut best = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Full spectral data for one assembled Hamiltonian `H = H0 + lambda_eff V`.
#[derive(Debug, Clone)]
pub struct SpectralSolution {
    /// Physical coupling `a * lambda'` the Hamiltonian was assembled with.
    pub lambda_effective: f64,
    /// Eigenvalues `E_alpha`, ascending.
    pub energies: Vec<f64>,
    /// Component matrix: `components[alpha][k] = <k|alpha>`, row per state.
    pub components: Mat,
    /// Unperturbed energies `E_k^0`, ascending, indexing the basis.
    pub unperturbed_energies: Vec<f64>,
}

impl SpectralSolution {
    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Component `C[alpha][k]`.
    #[inline]
    pub fn component(&self, alpha: usize, k: usize) -> f64 {
        self.components.get(alpha, k)
    }

    /// Eigenvector `alpha` in the unperturbed basis.
    #[inline]
    pub fn eigenvector(&self, alpha: usize) -> &[f64] {
        self.components.row(alpha)
    }
}

/// Verify the eigensolver contract on a solution: unit norms and pairwise
/// orthogonality to 1e-10, residual `max|H c - E c| <= 1e-9 max|H|`.
///
/// Cubic cost; meant for tests and acceptance checks, not hot paths.
pub fn verify_solution(h: &SymMatrix, sol: &SpectralSolution) -> Result<()> {
    let n = h.dim();
    if sol.dim() != n {
        return Err(Error::InvalidInput("solution/matrix dimension mismatch".into()));
    }
    let max_h = h.max_abs();
    let mut worst_residual = 0.0f64;
    let mut hc = vec![0.0; n];
    for alpha in 0..n {
        let c = sol.eigenvector(alpha);
        for i in 0..n {
            let row = h.row(i);
            let mut acc = 0.0;
            for j in 0..n {
                acc += row[j] * c[j];
            }
            hc[i] = acc;
        }
        let e = sol.energies[alpha];
        for i in 0..n {
            worst_residual = worst_residual.max((hc[i] - e * c[i]).abs());
        }
    }
    if worst_residual > 1e-9 * max_h.max(1e-300) {
        return Err(Error::Numerical(format!(
            "residual {worst_residual:.3e} exceeds 1e-9 * max|H| = {:.3e}",
            1e-9 * max_h
        )));
    }
    let mut worst_ortho = 0.0f64;
    for a in 0..n {
        let ca = sol.eigenvector(a);
        for b in a..n {
            let cb = sol.eigenvector(b);
            let dot: f64 = ca.iter().zip(cb).map(|(x, y)| x * y).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst_ortho = worst_ortho.max((dot - target).abs());
        }
    }
    if worst_ortho > 1e-10 {
        return Err(Error::Numerical(format!(
            "orthonormality defect {worst_ortho:.3e} exceeds 1e-10"
        )));
    }
    Ok(())
}

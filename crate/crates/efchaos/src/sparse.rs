//! Compressed sparse row view of a symmetric matrix.
//!
//! Perturbation matrices are sparse (banded or few-per-row), and the window
//! search applies them thousands of times per eigenstate; matvecs against a
//! CSR view cost O(nnz) instead of O(d^2).

use crate::linalg::SymMatrix;

/// CSR matrix over `f64`, square.
#[derive(Debug, Clone)]
pub struct Csr {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl Csr {
    /// Extract all nonzero entries of a symmetric matrix.
    pub fn from_sym(m: &SymMatrix) -> Self {
        let dim = m.dim();
        let mut indptr = Vec::with_capacity(dim + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for i in 0..dim {
            let row = m.row(i);
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    indices.push(j);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Csr { dim, indptr, indices, data }
    }

    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored nonzeros.
    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for i in 0..self.dim {
            let lo = self.indptr[i];
            let hi = self.indptr[i + 1];
            let mut acc = 0.0;
            for t in lo..hi {
                acc += self.data[t] * x[self.indices[t]];
            }
            y[i] = acc;
        }
    }

    /// Column indices of the nonzeros in row `i` (the graph neighbors of
    /// basis state `i` under the matrix's sparsity pattern).
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[self.indptr[i]..self.indptr[i + 1]]
    }
}

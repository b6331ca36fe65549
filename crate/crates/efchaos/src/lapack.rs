//! Thin safe wrappers over the three LAPACK routines the crate needs.
//!
//! Dense symmetric eigendecomposition (`dsyevd`) carries the whole
//! diagonalization workload; `dgeev` and `zgesv` only ever see the small
//! matrices of the window-operator analysis, never full Hamiltonians.
//! Linking is against the system OpenBLAS, which bundles LAPACK.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::os::raw::c_char;

extern "C" {
    fn dsyevd_(
        jobz: *const c_char,
        uplo: *const c_char,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        w: *mut f64,
        work: *mut f64,
        lwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );

    fn dgeev_(
        jobvl: *const c_char,
        jobvr: *const c_char,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        wr: *mut f64,
        wi: *mut f64,
        vl: *mut f64,
        ldvl: *const i32,
        vr: *mut f64,
        ldvr: *const i32,
        work: *mut f64,
        lwork: *const i32,
        info: *mut i32,
    );

    fn zgesv_(
        n: *const i32,
        nrhs: *const i32,
        a: *mut Complex64,
        lda: *const i32,
        ipiv: *mut i32,
        b: *mut Complex64,
        ldb: *const i32,
        info: *mut i32,
    );
}

fn as_i32(n: usize, what: &str) -> Result<i32> {
    i32::try_from(n).map_err(|_| Error::InvalidInput(format!("{what} = {n} exceeds LAPACK index range")))
}

/// Eigenvalues (ascending) and optionally eigenvectors of a symmetric
/// matrix given as a dense `n * n` buffer.
///
/// The buffer layout may be either row- or column-major since the input is
/// symmetric; it is overwritten. When `vectors` is true the returned matrix
/// holds eigenvector `k` contiguously at `[k*n .. (k+1)*n]`, paired with the
/// `k`-th eigenvalue.
pub fn syevd(a: &mut [f64], n: usize, vectors: bool) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    if a.len() != n * n {
        return Err(Error::InvalidInput(format!(
            "syevd buffer length {} does not match dimension {n}",
            a.len()
        )));
    }
    let nn = as_i32(n, "matrix dimension")?;
    let jobz = if vectors { b'V' } else { b'N' } as c_char;
    let uplo = b'L' as c_char;
    let mut w = vec![0.0f64; n];
    let mut info: i32 = 0;

    // Workspace query, then the real call.
    let mut wkopt = 0.0f64;
    let mut iwkopt = 0i32;
    let query = -1i32;
    unsafe {
        dsyevd_(
            &jobz,
            &uplo,
            &nn,
            a.as_mut_ptr(),
            &nn,
            w.as_mut_ptr(),
            &mut wkopt,
            &query,
            &mut iwkopt,
            &query,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Numerical(format!("dsyevd workspace query failed: info={info}, n={n}")));
    }
    let lwork = wkopt as i32;
    let liwork = iwkopt;
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        dsyevd_(
            &jobz,
            &uplo,
            &nn,
            a.as_mut_ptr(),
            &nn,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        let max_abs = a.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        return Err(Error::Numerical(format!(
            "dsyevd failed to converge: info={info}, n={n}, max|entry|≈{max_abs:.3e}"
        )));
    }
    let vecs = if vectors { Some(a.to_vec()) } else { None };
    Ok((w, vecs))
}

/// Eigenvalues and right eigenvectors of a small general real matrix.
///
/// `a` is row-major `n * n` and is consumed. Returns per-eigenvalue complex
/// values plus the right eigenvector matrix in complex form, column `k`
/// holding the eigenvector of eigenvalue `k` (LAPACK's packed conjugate
/// pairs are expanded). Intended for window-operator analysis only; guarded
/// to small `n` by callers.
pub fn geev(a: &[f64], n: usize) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if a.len() != n * n {
        return Err(Error::InvalidInput(format!(
            "geev buffer length {} does not match dimension {n}",
            a.len()
        )));
    }
    let nn = as_i32(n, "matrix dimension")?;
    // LAPACK is column-major: feed the transpose so "right" eigenvectors
    // are right eigenvectors of the row-major input.
    let mut at = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            at[j * n + i] = a[i * n + j];
        }
    }
    let jobvl = b'N' as c_char;
    let jobvr = b'V' as c_char;
    let mut wr = vec![0.0f64; n];
    let mut wi = vec![0.0f64; n];
    let mut vr = vec![0.0f64; n * n];
    let mut info: i32 = 0;
    let mut wkopt = 0.0f64;
    let query = -1i32;
    let one = 1i32;
    unsafe {
        dgeev_(
            &jobvl,
            &jobvr,
            &nn,
            at.as_mut_ptr(),
            &nn,
            wr.as_mut_ptr(),
            wi.as_mut_ptr(),
            std::ptr::null_mut(),
            &one,
            vr.as_mut_ptr(),
            &nn,
            &mut wkopt,
            &query,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Numerical(format!("dgeev workspace query failed: info={info}, n={n}")));
    }
    let lwork = wkopt as i32;
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    unsafe {
        dgeev_(
            &jobvl,
            &jobvr,
            &nn,
            at.as_mut_ptr(),
            &nn,
            wr.as_mut_ptr(),
            wi.as_mut_ptr(),
            std::ptr::null_mut(),
            &one,
            vr.as_mut_ptr(),
            &nn,
            work.as_mut_ptr(),
            &lwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Numerical(format!("dgeev failed to converge: info={info}, n={n}")));
    }

    let values: Vec<Complex64> = wr.iter().zip(&wi).map(|(&re, &im)| Complex64::new(re, im)).collect();
    // Expand LAPACK's packed real representation: a conjugate pair (k, k+1)
    // stores re in column k and im in column k+1.
    let mut vectors = vec![Complex64::new(0.0, 0.0); n * n];
    let mut k = 0;
    while k < n {
        if wi[k] != 0.0 && k + 1 < n {
            for i in 0..n {
                let re = vr[k * n + i];
                let im = vr[(k + 1) * n + i];
                vectors[k * n + i] = Complex64::new(re, im);
                vectors[(k + 1) * n + i] = Complex64::new(re, -im);
            }
            k += 2;
        } else {
            for i in 0..n {
                vectors[k * n + i] = Complex64::new(vr[k * n + i], 0.0);
            }
            k += 1;
        }
    }
    Ok((values, vectors))
}

/// Solve the complex linear system `A x = b` for a small dense matrix.
///
/// `a` holds column `k` of `A` at `[k*n .. (k+1)*n]` (the layout [`geev`]
/// returns) and is consumed; `b` is overwritten with the solution.
pub fn zgesv(a: &mut [Complex64], b: &mut [Complex64], n: usize) -> Result<()> {
    if a.len() != n * n || b.len() != n {
        return Err(Error::InvalidInput(format!(
            "zgesv shape mismatch: a={}, b={}, n={n}",
            a.len(),
            b.len()
        )));
    }
    let nn = as_i32(n, "matrix dimension")?;
    let one = 1i32;
    let mut ipiv = vec![0i32; n];
    let mut info: i32 = 0;
    unsafe {
        zgesv_(&nn, &one, a.as_mut_ptr(), &nn, ipiv.as_mut_ptr(), b.as_mut_ptr(), &nn, &mut info);
    }
    if info != 0 {
        return Err(Error::Numerical(format!("zgesv failed: info={info}, n={n} (singular eigenvector matrix)")));
    }
    Ok(())
}

//! Spectral-radius estimation for non-symmetric linear maps.
//!
//! The window search asks one question of a non-symmetric operator: is its
//! largest eigenvalue magnitude below 1? For small maps the answer is
//! computed exactly from a dense eigendecomposition. For large maps a full
//! decomposition costs O(d^3) per window, so the radius is estimated from
//! the growth rate of `||T^n phi||`, which needs only matvecs. Because the
//! estimate averages norm growth rather than forming a Rayleigh quotient,
//! dominant complex-conjugate pairs are handled for free.

use crate::error::{Error, Result};
use crate::lapack;
use crate::seeds;
use rand::Rng;

/// Maps of at most this ambient dimension are resolved exactly by a dense
/// eigendecomposition instead of iteration.
const EXACT_DIM_LIMIT: usize = 64;
/// Minimum iterations before a stability stop is allowed.
const MIN_ITER: usize = 24;
/// The stop condition must hold this many consecutive iterations. A
/// dominant complex pair makes the running estimate oscillate, and the
/// difference against a checkpoint crosses zero twice per beat; demanding
/// persistence filters those crossings out.
const CONSECUTIVE_OK: usize = 4;

/// Per-start iteration state carried between evaluations.
///
/// The window search evaluates radii of maps that differ by a single basis
/// index; the dominant directions barely move between evaluations, so
/// reusing the converged vectors as start vectors (with a little fresh
/// noise mixed in) cuts the iteration count severalfold.
#[derive(Debug, Clone, Default)]
pub struct RadiusState {
    finals: Vec<Vec<f64>>,
}

/// Estimate the spectral radius of a linear map.
///
/// `apply` computes `y = T x` for length-`dim` vectors and must be
/// deterministic. For `dim` up to 64 the map is assembled densely and its
/// radius computed exactly. Above that, the estimate is the geometric
/// growth rate of the iterate norm over the trailing half of the history,
/// maximized over `n_starts` independent seeded random start vectors;
/// iteration stops when the estimate agrees with the one computed from
/// half as much history to within `tol`, so that slowly fading transients
/// cannot trigger a premature stop. `max_iter` caps the per-start
/// iteration count.
///
/// Overflow cannot occur: iterates are renormalized each step. If the map
/// itself produces non-finite values the running estimate is returned when
/// it already certifies divergence (> 1), otherwise an error is raised.
pub fn spectral_radius(
    apply: impl Fn(&[f64], &mut [f64]),
    dim: usize,
    tol: f64,
    max_iter: usize,
    n_starts: usize,
    seed: u64,
) -> Result<f64> {
    let (rho, _) = radius_with_state(&apply, dim, tol, max_iter, n_starts, seed, None)?;
    Ok(rho)
}

/// [`spectral_radius`] variant that accepts and returns warm-start state.
pub(crate) fn radius_with_state(
    apply: &impl Fn(&[f64], &mut [f64]),
    dim: usize,
    tol: f64,
    max_iter: usize,
    n_starts: usize,
    seed: u64,
    warm: Option<&RadiusState>,
) -> Result<(f64, RadiusState)> {
    if dim == 0 {
        return Err(Error::InvalidInput("spectral_radius needs dim >= 1".into()));
    }
    if n_starts == 0 || max_iter == 0 {
        return Err(Error::InvalidInput(
            "spectral_radius needs n_starts >= 1 and max_iter >= 1".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("spectral_radius needs tol > 0".into()));
    }
    if dim <= EXACT_DIM_LIMIT {
        return Ok((exact_radius(apply, dim)?, RadiusState::default()));
    }
    let mut best = 0.0f64;
    let mut finals = Vec::with_capacity(n_starts);
    for s in 0..n_starts {
        let mut x = random_unit(dim, seeds::derive(seed, &[s as u64]));
        if let Some(state) = warm {
            if let Some(w) = state.finals.get(s) {
                if w.len() == dim {
                    // 5% fresh noise keeps the start from being trapped
                    // orthogonal to a newly dominant direction.
                    for (xi, wi) in x.iter_mut().zip(w) {
                        *xi = 0.95 * wi + 0.05 * *xi;
                    }
                    if !normalize(&mut x) {
                        x = random_unit(dim, seeds::derive(seed, &[s as u64, 1]));
                    }
                }
            }
        }
        let (rho, vec) = iterate_one(apply, x, tol, max_iter)?;
        best = best.max(rho);
        finals.push(vec);
    }
    Ok((best, RadiusState { finals }))
}

/// Assemble the map column by column and take the largest eigenvalue
/// magnitude. Exact up to the dense solver's own accuracy.
fn exact_radius(apply: &impl Fn(&[f64], &mut [f64]), dim: usize) -> Result<f64> {
    let mut a = vec![0.0f64; dim * dim];
    let mut e = vec![0.0f64; dim];
    let mut col = vec![0.0f64; dim];
    for j in 0..dim {
        e[j] = 1.0;
        apply(&e, &mut col);
        e[j] = 0.0;
        for i in 0..dim {
            if !col[i].is_finite() {
                return Err(Error::Numerical(format!(
                    "map produced a non-finite entry at ({i},{j})"
                )));
            }
            a[i * dim + j] = col[i];
        }
    }
    let (values, _) = lapack::geev(&a, dim)?;
    Ok(values.iter().map(|z| z.norm()).fold(0.0f64, f64::max))
}

/// Run one norm-growth iteration to stability; returns the estimate and
/// the final (normalized) iterate.
///
/// With `P_k` the accumulated log of the norm growth after `k` steps, the
/// running estimate is `exp((P_k - P_{k/2}) / (k - k/2))`. The stop rule
/// compares the estimate at `k` against the ones at `k/2` and `2k/3`:
/// the checkpoint lags grow with `k`, so transients decaying slower than
/// the windows cannot satisfy it, and the two lags plus the persistence
/// requirement keep a beating complex pair from aliasing through.
fn iterate_one(
    apply: &impl Fn(&[f64], &mut [f64]),
    mut x: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, Vec<f64>)> {
    let dim = x.len();
    let mut y = vec![0.0f64; dim];
    // prefix[k] is the log of the total norm growth over the first k steps.
    let mut prefix: Vec<f64> = Vec::with_capacity(max_iter.min(4096) + 1);
    prefix.push(0.0);
    let estimate = |prefix: &[f64], k: usize| -> f64 {
        debug_assert!(k >= 1 && k < prefix.len());
        let h = (k / 2).max(1);
        ((prefix[k] - prefix[k - h]) / h as f64).exp()
    };
    let mut streak = 0usize;
    for k in 1..=max_iter {
        apply(&x, &mut y);
        let n = norm(&y);
        if !n.is_finite() {
            if k > 1 {
                let est = estimate(&prefix, k - 1);
                if est > 1.0 {
                    // Good enough for the contraction test: divergence is
                    // already certified.
                    return Ok((est, x));
                }
            }
            return Err(Error::Numerical(format!(
                "non-finite iterate in power iteration at step {k}"
            )));
        }
        if n == 0.0 {
            // Exact annihilation: the start lies in a nilpotent subspace.
            return Ok((0.0, x));
        }
        prefix.push(prefix[k - 1] + n.ln());
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / n;
        }
        if k >= MIN_ITER {
            let now = estimate(&prefix, k);
            let half = estimate(&prefix, k / 2);
            let third = estimate(&prefix, 2 * k / 3);
            let scale = tol * now.max(1e-300);
            if (now - half).abs() <= scale && (now - third).abs() <= scale {
                streak += 1;
                if streak >= CONSECUTIVE_OK {
                    return Ok((now, x));
                }
            } else {
                streak = 0;
            }
        }
    }
    Ok((estimate(&prefix, max_iter), x))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) -> bool {
    let n = norm(v);
    if n == 0.0 || !n.is_finite() {
        return false;
    }
    for x in v.iter_mut() {
        *x /= n;
    }
    true
}

fn random_unit(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeds::rng(seed);
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if normalize(&mut v) {
            return v;
        }
    }
}

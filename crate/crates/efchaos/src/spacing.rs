//! Nearest-level-spacing statistics.
//!
//! Spectra are compared against the Wigner surmise through the cumulative
//! spacing distribution: select a stretch of levels from the middle of
//! the spectrum, unfold the gaps against a local mean so the density of
//! states drops out, build the empirical cumulative curve `I(s)`, and
//! integrate `|I - I_W|` to get the deviation `Δ_p`. A chaotic spectrum
//! drives `Δ_p` toward zero; an uncorrelated one keeps it near the
//! Poisson value 0.338.

use std::ops::Range;

use crate::error::{Error, Result};

/// Default number of gaps in the local unfolding window.
pub const DEFAULT_UNFOLD_WINDOW: usize = 30;
/// Default cumulative-curve grid: 0 to 4 in steps of 0.01.
pub const DEFAULT_S_MAX: f64 = 4.0;
/// Default cumulative-curve grid step.
pub const DEFAULT_S_STEP: f64 = 0.01;

/// Unfolded spacings with unit mean.
#[derive(Debug, Clone)]
pub struct SpacingSet {
    /// The unfolded spacings, strictly positive, mean exactly 1.
    pub spacings: Vec<f64>,
    /// Range of eigenvalue indices the gaps came from.
    pub source: Range<usize>,
    /// Exact degeneracies found and set aside: they carry no unfolding
    /// information and would collapse the local means.
    pub zero_count: usize,
}

/// An empirical cumulative distribution sampled on a grid.
#[derive(Debug, Clone)]
pub struct CumulativeCurve {
    /// Increasing grid of spacing values, starting at 0.
    pub s_grid: Vec<f64>,
    /// Fraction of spacings at or below each grid point; nondecreasing,
    /// in [0, 1].
    pub values: Vec<f64>,
}

/// The `count` consecutive indices centered on the middle of a spectrum
/// of `d` levels: `start = d/2 - count/2` with integer division.
pub fn select_middle(d: usize, count: usize) -> Result<Range<usize>> {
    if count == 0 || count > d {
        return Err(Error::InvalidInput(format!(
            "cannot select {count} middle levels out of {d}"
        )));
    }
    let start = d / 2 - count / 2;
    Ok(start..start + count)
}

/// Unfold the gaps of `energies[indices]` by a sliding local mean.
///
/// Each raw gap is divided by the mean of the `window` gaps nearest to it
/// (a centered block, clipped at the ends of the range), and the whole
/// set is rescaled to mean exactly 1 at the end. Exact zero gaps are set
/// aside first and reported in `zero_count`.
pub fn unfold_spacings(
    energies: &[f64],
    indices: Range<usize>,
    window: usize,
) -> Result<SpacingSet> {
    if indices.end > energies.len() || indices.start >= indices.end {
        return Err(Error::InvalidInput(format!(
            "index range {indices:?} out of bounds for {} levels",
            energies.len()
        )));
    }
    if window == 0 {
        return Err(Error::InvalidInput("unfolding window must be positive".into()));
    }
    let levels = &energies[indices.clone()];
    let mut zero_count = 0usize;
    let mut gaps = Vec::with_capacity(levels.len().saturating_sub(1));
    for pair in levels.windows(2) {
        let g = pair[1] - pair[0];
        if g < 0.0 {
            return Err(Error::InvalidInput("energies must be sorted ascending".into()));
        }
        if g == 0.0 {
            zero_count += 1;
        } else {
            gaps.push(g);
        }
    }
    if gaps.len() < window + 1 {
        return Err(Error::InvalidInput(format!(
            "unfolding needs more than {window} positive gaps, got {}",
            gaps.len()
        )));
    }
    let n = gaps.len();
    let mut spacings = Vec::with_capacity(n);
    for i in 0..n {
        // Centered block of `window` gaps around gap i, clipped in range.
        let lo = i.saturating_sub(window / 2).min(n - window);
        let local: f64 = gaps[lo..lo + window].iter().sum::<f64>() / window as f64;
        spacings.push(gaps[i] / local);
    }
    let mean = spacings.iter().sum::<f64>() / n as f64;
    for s in spacings.iter_mut() {
        *s /= mean;
    }
    Ok(SpacingSet { spacings, source: indices, zero_count })
}

/// The Wigner surmise density `p_W(s) = (π s / 2) exp(-π s² / 4)`.
///
/// # Panics
///
/// On negative `s`: the density is only defined for spacings.
pub fn wigner_p(s: f64) -> f64 {
    assert!(s >= 0.0, "spacing must be nonnegative, got {s}");
    let pi = std::f64::consts::PI;
    0.5 * pi * s * (-0.25 * pi * s * s).exp()
}

/// The cumulative Wigner surmise `I_W(s) = 1 - exp(-π s² / 4)`.
///
/// # Panics
///
/// On negative `s`.
pub fn wigner_i(s: f64) -> f64 {
    assert!(s >= 0.0, "spacing must be nonnegative, got {s}");
    1.0 - (-0.25 * std::f64::consts::PI * s * s).exp()
}

/// The default grid for cumulative curves.
pub fn default_s_grid() -> Vec<f64> {
    s_grid(DEFAULT_S_MAX, DEFAULT_S_STEP)
}

/// A uniform grid 0, step, ..., s_max (inclusive, within rounding).
pub fn s_grid(s_max: f64, step: f64) -> Vec<f64> {
    let n = (s_max / step).round() as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

/// Empirical cumulative distribution of a spacing set on a grid.
pub fn cumulative_i(set: &SpacingSet, grid: &[f64]) -> Result<CumulativeCurve> {
    if set.spacings.is_empty() {
        return Err(Error::InvalidInput("cumulative curve needs spacings".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("grid must be strictly increasing".into()));
    }
    let mut sorted = set.spacings.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("spacings are finite"));
    let n = sorted.len() as f64;
    let values = grid
        .iter()
        .map(|&s| sorted.partition_point(|x| *x <= s) as f64 / n)
        .collect();
    Ok(CumulativeCurve { s_grid: grid.to_vec(), values })
}

/// Deviation of a cumulative curve from the Wigner surmise:
/// `Δ_p = ∫ |I(s) - I_W(s)| ds` by the trapezoid rule over the grid.
pub fn delta_p(curve: &CumulativeCurve) -> f64 {
    let diff: Vec<f64> =
        curve.s_grid.iter().zip(&curve.values).map(|(&s, &v)| (v - wigner_i(s)).abs()).collect();
    let mut acc = 0.0;
    for i in 1..diff.len() {
        acc += 0.5 * (diff[i] + diff[i - 1]) * (curve.s_grid[i] - curve.s_grid[i - 1]);
    }
    acc
}

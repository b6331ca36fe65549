//! Eigenfunction-component statistics.
//!
//! For a batch of eigenfunctions the module computes the average shape
//! `Π(ε) = <|C_{αk}|²>` as a function of the energy offset
//! `ε = E_k^0 - E_α`, pools components from chosen parts (nonperturbative
//! window, perturbative tail, or everything), normalizes the pooled set,
//! and measures how far the component distribution `f(x)` sits from the
//! Gaussian expected for fully chaotic states. A second distribution
//! `g(x)` applies the shape-removing rescaling `C̃ = C/√Π(ε)` first, so
//! the overall energy profile of the eigenfunctions stops masking the
//! fluctuation statistics.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::gbwpt::NptRegion;
use crate::histogram::{l1_deviation, simpson, Histogram};
use crate::linalg::SpectralSolution;
use crate::models::{ModelKind, ModelSystem};

/// Default histogram bin count for `f(x)` and `g(x)`.
pub const DEFAULT_X_BINS: usize = 40;
/// Default histogram range for `f(x)` and `g(x)`.
pub const DEFAULT_X_RANGE: (f64, f64) = (-4.0, 4.0);
/// Default bin count for the average shape `Π(ε)`.
pub const DEFAULT_SHAPE_BINS: usize = 101;
/// Default minimum per-bin occupancy for the rescaling to trust `Π`.
pub const DEFAULT_C_MIN: u64 = 10;
/// Default number of eigenfunctions pooled for component distributions.
pub const DEFAULT_EF_COUNT: usize = 300;
/// Default number of eigenfunctions averaged for `Π(ε)`.
pub const DEFAULT_SHAPE_EF_COUNT: usize = 50;

/// The Gaussian component distribution of fully chaotic states,
/// `exp(-x²/2)/√(2π)`: the reference for both `f` and `g`.
pub fn f_goe(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Reference mass of [`f_goe`] outside `range`, by quadrature.
pub fn f_goe_tail_mass(range: (f64, f64)) -> f64 {
    (1.0 - simpson(f_goe, range.0, range.1, 4096)).max(0.0)
}

/// Average eigenfunction shape: mean squared component per ε-bin.
#[derive(Debug, Clone)]
pub struct AvgShape {
    /// Equal-width bin edges over the observed ε range, `n_bins + 1`.
    pub epsilon_edges: Vec<f64>,
    /// Mean `|C|²` among the samples in each bin, `0` for empty bins.
    pub pi_values: Vec<f64>,
    /// Samples per bin; empty bins are the flagged ones.
    pub counts: Vec<u64>,
    /// Number of eigenfunctions averaged.
    pub ef_count: usize,
}

impl AvgShape {
    /// Bin index of an offset, or `None` outside the covered range.
    pub fn bin_of(&self, eps: f64) -> Option<usize> {
        let lo = self.epsilon_edges[0];
        let hi = *self.epsilon_edges.last().expect("edges nonempty");
        if !(eps >= lo && eps <= hi) {
            return None;
        }
        let n = self.pi_values.len();
        let w = (hi - lo) / n as f64;
        Some((((eps - lo) / w) as usize).min(n - 1))
    }

    /// Bin centers, for CSV emission.
    pub fn centers(&self) -> Vec<f64> {
        self.epsilon_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// `Σ_bins Π·count / ef_count`: 1 when every eigenfunction involved
    /// has unit norm (completeness of the basis expansion).
    pub fn completeness(&self) -> f64 {
        let total: f64 =
            self.pi_values.iter().zip(&self.counts).map(|(p, c)| p * *c as f64).sum();
        total / self.ef_count as f64
    }
}

/// Which part of the partitioned eigenfunctions to pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    /// Only the nonperturbative windows, `k ∈ [k1, k2]`.
    Npt,
    /// Only the perturbative tails (shoulders included unless the
    /// collection call moves them to the window side).
    Pt,
    /// Every component.
    All,
}

impl Part {
    /// Stable lowercase name, used in configs and provenance output.
    pub fn as_str(self) -> &'static str {
        match self {
            Part::Npt => "npt",
            Part::Pt => "pt",
            Part::All => "all",
        }
    }
}

/// Classification of one component relative to its region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartTag {
    /// Inside the nonperturbative window.
    Npt,
    /// In the perturbative tail proper.
    Pt,
    /// In a band shoulder: outside the window but within one band width.
    Shoulder,
}

/// One pooled component with its provenance.
#[derive(Debug, Clone, Copy)]
pub struct ComponentSample {
    /// The component value (or its rescaled variant).
    pub value: f64,
    /// Eigenstate index.
    pub alpha: usize,
    /// Basis index.
    pub k: usize,
    /// Which part of the eigenfunction it came from.
    pub part: PartTag,
}

/// Result of comparing a pooled component (or spacing) histogram against
/// its reference density.
#[derive(Debug, Clone)]
pub struct DeviationResult {
    /// The binned empirical density.
    pub histogram: Histogram,
    /// L1 deviation from the reference, out-of-range mass included.
    pub deviation: f64,
    /// Pooled sample count `M`.
    pub sample_count: usize,
    /// Samples dropped before pooling (only the rescaled variant drops
    /// any; zero for the plain distribution).
    pub excluded_count: usize,
}

/// Average the squared components of the chosen eigenfunctions into
/// equal-width bins of `ε = E_k^0 - E_α`.
///
/// Every `(α, k)` pair contributes, so each eigenfunction deposits total
/// mass 1 and `completeness()` stays at 1 regardless of the coupling.
pub fn average_shape(
    sol: &SpectralSolution,
    ef_indices: &[usize],
    n_bins: usize,
) -> Result<AvgShape> {
    let d = sol.dim();
    if ef_indices.is_empty() || n_bins == 0 {
        return Err(Error::InvalidInput("shape average needs eigenfunctions and bins".into()));
    }
    if let Some(&bad) = ef_indices.iter().find(|&&a| a >= d) {
        return Err(Error::InvalidInput(format!("eigenstate index {bad} out of range")));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &alpha in ef_indices {
        let e_alpha = sol.energies[alpha];
        for k in 0..d {
            let eps = sol.unperturbed_energies[k] - e_alpha;
            lo = lo.min(eps);
            hi = hi.max(eps);
        }
    }
    if lo == hi {
        // Degenerate spread; give the single point a real bin.
        lo -= 0.5;
        hi += 0.5;
    }
    let w = (hi - lo) / n_bins as f64;
    let mut sums = vec![0.0f64; n_bins];
    let mut counts = vec![0u64; n_bins];
    for &alpha in ef_indices {
        let e_alpha = sol.energies[alpha];
        let row = sol.eigenvector(alpha);
        for k in 0..d {
            let eps = sol.unperturbed_energies[k] - e_alpha;
            let b = (((eps - lo) / w) as usize).min(n_bins - 1);
            sums[b] += row[k] * row[k];
            counts[b] += 1;
        }
    }
    let pi_values = sums
        .iter()
        .zip(&counts)
        .map(|(s, c)| if *c > 0 { s / *c as f64 } else { 0.0 })
        .collect();
    let epsilon_edges = (0..=n_bins).map(|b| lo + b as f64 * w).collect();
    Ok(AvgShape { epsilon_edges, pi_values, counts, ef_count: ef_indices.len() })
}

fn classify(region: &NptRegion, k: usize) -> PartTag {
    if region.contains(k) {
        return PartTag::Npt;
    }
    let in_shoulder = |iv: Option<(usize, usize)>| iv.is_some_and(|(a, b)| k >= a && k <= b);
    if in_shoulder(region.shoulder_lo) || in_shoulder(region.shoulder_hi) {
        PartTag::Shoulder
    } else {
        PartTag::Pt
    }
}

/// Pool components of the chosen eigenfunctions, tagged by part.
///
/// `regions` must contain the window of every requested eigenfunction.
/// Shoulders count as perturbative for selection unless
/// `include_shoulders` pulls them into the window side; the tags always
/// record the three-way classification.
pub fn collect_components(
    sol: &SpectralSolution,
    regions: &[NptRegion],
    ef_indices: &[usize],
    part: Part,
    include_shoulders: bool,
) -> Result<Vec<ComponentSample>> {
    let d = sol.dim();
    let by_alpha: HashMap<usize, &NptRegion> = regions.iter().map(|r| (r.alpha, r)).collect();
    let mut out = Vec::new();
    for &alpha in ef_indices {
        if alpha >= d {
            return Err(Error::InvalidInput(format!("eigenstate index {alpha} out of range")));
        }
        let region = by_alpha.get(&alpha).ok_or_else(|| {
            Error::InvalidInput(format!("no window was computed for eigenstate {alpha}"))
        })?;
        let row = sol.eigenvector(alpha);
        for (k, &value) in row.iter().enumerate() {
            let tag = classify(region, k);
            let selected = match part {
                Part::All => true,
                Part::Npt => {
                    tag == PartTag::Npt || (include_shoulders && tag == PartTag::Shoulder)
                }
                Part::Pt => {
                    tag == PartTag::Pt || (!include_shoulders && tag == PartTag::Shoulder)
                }
            };
            if selected {
                out.push(ComponentSample { value, alpha, k, part: tag });
            }
        }
    }
    Ok(out)
}

/// Normalize a pooled component set to unit mean square:
/// `x_i = C_i / rms(C)`, so that `Σ x² / M = 1` exactly.
///
/// This is the normalization under which the unit-variance Gaussian is
/// the correct chaotic reference for the resulting distribution.
pub fn normalize_components(samples: &[ComponentSample]) -> Result<Vec<f64>> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "component normalization needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let ss: f64 = samples.iter().map(|s| s.value * s.value).sum();
    if ss == 0.0 {
        return Err(Error::InvalidInput("all pooled components are zero".into()));
    }
    let rms = (ss / samples.len() as f64).sqrt();
    Ok(samples.iter().map(|s| s.value / rms).collect())
}

/// Histogram a normalized component set and measure its L1 deviation
/// from the chaotic Gaussian reference.
pub fn distribution_f(
    x: &[f64],
    n_bins: usize,
    range: (f64, f64),
) -> Result<DeviationResult> {
    let histogram = Histogram::from_samples(x, n_bins, range)?;
    let deviation = l1_deviation(&histogram, f_goe, f_goe_tail_mass(range));
    Ok(DeviationResult { deviation, sample_count: histogram.sample_count, excluded_count: 0, histogram })
}

/// Divide each sample by `√Π` at its ε-bin, dropping samples whose bin
/// is too thin to trust (`counts < c_min`, `Π = 0`, or ε outside the
/// shape's range). Returns the surviving rescaled samples and the number
/// dropped.
pub fn rescale_components(
    samples: &[ComponentSample],
    sol: &SpectralSolution,
    shape: &AvgShape,
    c_min: u64,
) -> Result<(Vec<ComponentSample>, usize)> {
    let mut kept = Vec::with_capacity(samples.len());
    let mut excluded = 0usize;
    for s in samples {
        let eps = sol.unperturbed_energies[s.k] - sol.energies[s.alpha];
        let rescaled = shape.bin_of(eps).and_then(|b| {
            if shape.counts[b] < c_min || shape.pi_values[b] <= 0.0 {
                None
            } else {
                Some(s.value / shape.pi_values[b].sqrt())
            }
        });
        match rescaled {
            Some(value) => kept.push(ComponentSample { value, ..*s }),
            None => excluded += 1,
        }
    }
    if excluded * 2 > samples.len() {
        return Err(Error::InvalidInput(format!(
            "rescaling excluded {excluded} of {} samples; the shape's bins are too thin \
             (raise the shape sample count or lower the bin count)",
            samples.len()
        )));
    }
    Ok((kept, excluded))
}

/// The rescaled component distribution `g(x)`: rescale by the average
/// shape, normalize, histogram, and compare against the Gaussian.
pub fn rescale_and_distribution_g(
    samples: &[ComponentSample],
    sol: &SpectralSolution,
    shape: &AvgShape,
    c_min: u64,
    n_bins: usize,
    range: (f64, f64),
) -> Result<DeviationResult> {
    let (kept, excluded) = rescale_components(samples, sol, shape, c_min)?;
    let x = normalize_components(&kept)?;
    let mut res = distribution_f(&x, n_bins, range)?;
    res.excluded_count = excluded;
    Ok(res)
}

/// Golden-rule width of the band model's local spectral density:
/// `Γ = 2π λ_eff² · mean(v²)` over the band entries (the mean level
/// spacing is 1 by construction, so the density of states drops out).
pub fn gamma_wbrm(model: &ModelSystem, lambda_eff: f64) -> Result<f64> {
    if model.name != ModelKind::Wbrm {
        return Err(Error::InvalidInput(format!(
            "the golden-rule width is defined for the band random-matrix model, got {}",
            model.name.as_str()
        )));
    }
    let b = model
        .bandwidth
        .ok_or_else(|| Error::InvalidInput("band model lacks a band bound".into()))?;
    let d = model.d_h;
    let mut sum = 0.0f64;
    let mut count = 0u64;
    for i in 0..d {
        let row = model.v_matrix.row(i);
        for (j, &v) in row.iter().enumerate().take((i + b + 1).min(d)).skip(i + 1) {
            debug_assert!(j > i && j - i <= b);
            sum += v * v;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InvalidInput("band is empty".into()));
    }
    Ok(2.0 * std::f64::consts::PI * lambda_eff * lambda_eff * (sum / count as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbwpt::find_npt_region;
    use crate::linalg::Mat;
    use crate::models::build_wbrm;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn all_indices(d: usize) -> Vec<usize> {
        (0..d).collect()
    }

    fn regions_for(
        model: &crate::models::ModelSystem,
        sol: &SpectralSolution,
        ef: &[usize],
    ) -> Vec<NptRegion> {
        ef.iter().map(|&a| find_npt_region(model, sol, a, 1e-3).unwrap()).collect()
    }

    #[test]
    fn zero_coupling_shape_concentrates_at_zero_offset() {
        let model = build_wbrm(40, 5, 11).unwrap();
        let sol = model.solve(0.0).unwrap();
        let shape = average_shape(&sol, &all_indices(40), 21).unwrap();
        let zero_bin = shape.bin_of(0.0).unwrap();
        for (b, pi) in shape.pi_values.iter().enumerate() {
            if b == zero_bin {
                assert!(*pi > 0.0);
            } else {
                assert!(*pi < 1e-16, "bin {b} holds stray mass {pi}");
            }
        }
        assert!((shape.completeness() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn shape_completeness_holds_with_coupling() {
        let model = build_wbrm(60, 6, 3).unwrap();
        let sol = model.solve(0.7).unwrap();
        let shape = average_shape(&sol, &(20..40).collect::<Vec<_>>(), 31).unwrap();
        assert!((shape.completeness() - 1.0).abs() < 1e-8);
        assert!(shape.pi_values.iter().all(|p| *p >= 0.0));
    }

    #[test]
    fn parts_partition_every_component_exactly() {
        let model = build_wbrm(20, 3, 77).unwrap();
        let sol = model.solve(0.5).unwrap();
        let ef: Vec<usize> = (5..15).collect();
        let regions = regions_for(&model, &sol, &ef);
        for include in [false, true] {
            let npt = collect_components(&sol, &regions, &ef, Part::Npt, include).unwrap();
            let pt = collect_components(&sol, &regions, &ef, Part::Pt, include).unwrap();
            let all = collect_components(&sol, &regions, &ef, Part::All, include).unwrap();
            assert_eq!(all.len(), 10 * 20);
            assert_eq!(npt.len() + pt.len(), all.len());
        }
        // Tags agree with the window bounds.
        let by_alpha: HashMap<usize, &NptRegion> =
            regions.iter().map(|r| (r.alpha, r)).collect();
        let all = collect_components(&sol, &regions, &ef, Part::All, false).unwrap();
        for s in &all {
            let r = by_alpha[&s.alpha];
            assert_eq!(s.part == PartTag::Npt, r.contains(s.k));
        }
    }

    #[test]
    fn zero_coupling_windows_pool_one_component_each() {
        let model = build_wbrm(20, 3, 77).unwrap();
        let sol = model.solve(0.0).unwrap();
        let ef: Vec<usize> = (5..15).collect();
        let regions = regions_for(&model, &sol, &ef);
        let npt = collect_components(&sol, &regions, &ef, Part::Npt, false).unwrap();
        assert_eq!(npt.len(), 10);
        for s in &npt {
            assert_eq!(s.alpha, s.k);
            assert!((s.value.abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shoulders_move_between_parts_with_the_switch() {
        let model = build_wbrm(30, 4, 13).unwrap();
        let sol = model.solve(0.6).unwrap();
        let ef: Vec<usize> = (10..20).collect();
        let regions = regions_for(&model, &sol, &ef);
        let all = collect_components(&sol, &regions, &ef, Part::All, false).unwrap();
        let n_shoulder = all.iter().filter(|s| s.part == PartTag::Shoulder).count();
        assert!(n_shoulder > 0, "band model must produce shoulder samples");
        let npt_excl = collect_components(&sol, &regions, &ef, Part::Npt, false).unwrap();
        let npt_incl = collect_components(&sol, &regions, &ef, Part::Npt, true).unwrap();
        assert_eq!(npt_incl.len() - npt_excl.len(), n_shoulder);
        assert!(npt_excl.iter().all(|s| s.part == PartTag::Npt));
    }

    #[test]
    fn partitioned_mass_sums_to_unit_norm() {
        let model = build_wbrm(30, 4, 21).unwrap();
        let sol = model.solve(0.6).unwrap();
        let ef: Vec<usize> = (8..22).collect();
        let regions = regions_for(&model, &sol, &ef);
        let npt = collect_components(&sol, &regions, &ef, Part::Npt, false).unwrap();
        let pt = collect_components(&sol, &regions, &ef, Part::Pt, false).unwrap();
        let mut mass: HashMap<usize, f64> = HashMap::new();
        for s in npt.iter().chain(&pt) {
            *mass.entry(s.alpha).or_insert(0.0) += s.value * s.value;
        }
        for &alpha in &ef {
            assert!((mass[&alpha] - 1.0).abs() < 1e-10, "alpha {alpha}: {}", mass[&alpha]);
        }
    }

    fn raw_samples(values: &[f64]) -> Vec<ComponentSample> {
        values
            .iter()
            .enumerate()
            .map(|(k, &value)| ComponentSample { value, alpha: 0, k, part: PartTag::Npt })
            .collect()
    }

    #[test]
    fn normalization_fixes_the_mean_square_exactly() {
        let pair = raw_samples(&[0.3, -0.3]);
        assert_eq!(normalize_components(&pair).unwrap(), vec![1.0, -1.0]);

        let mut rng = crate::seeds::rng(42);
        let vals: Vec<f64> =
            (0..5000).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal) + 0.5).collect();
        let x = normalize_components(&raw_samples(&vals)).unwrap();
        let mean_sq = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((mean_sq - 1.0).abs() < 1e-12);

        assert!(normalize_components(&raw_samples(&[1.0])).is_err());
        assert!(normalize_components(&raw_samples(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn gaussian_reference_has_the_right_peak() {
        assert!((f_goe(0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
        // Symmetric, unit mass.
        assert_eq!(f_goe(1.3), f_goe(-1.3));
        assert!((simpson(f_goe, -10.0, 10.0, 8192) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn synthetic_gaussian_components_sit_close_to_the_reference() {
        let mut rng = crate::seeds::rng(7);
        let vals: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        let x = normalize_components(&raw_samples(&vals)).unwrap();
        let res = distribution_f(&x, DEFAULT_X_BINS, DEFAULT_X_RANGE).unwrap();
        assert!(res.deviation < 0.02, "deviation {}", res.deviation);
        assert_eq!(res.excluded_count, 0);
        // No sign bias in the pooled samples.
        let mean: f64 = x.iter().sum::<f64>() / x.len() as f64;
        assert!(mean.abs() < 5.0 / (x.len() as f64).sqrt());
    }

    /// Synthetic square solution: `n` fake eigenfunctions with components
    /// drawn at ε-dependent scale, all energies centered so that
    /// ε(α, k) = k - center.
    fn synthetic_solution(n: usize, scale: impl Fn(f64) -> f64, seed: u64) -> SpectralSolution {
        let mut rng = crate::seeds::rng(seed);
        let center = n as f64 / 2.0;
        let mut components = Mat::zeros(n, n);
        for a in 0..n {
            for k in 0..n {
                let eps = k as f64 - center;
                let g: f64 = rng.sample(StandardNormal);
                components.set(a, k, scale(eps) * g);
            }
        }
        SpectralSolution {
            lambda_effective: 1.0,
            energies: vec![center; n],
            components,
            unperturbed_energies: (0..n).map(|k| k as f64).collect(),
        }
    }

    #[test]
    fn rescaling_by_a_flat_shape_changes_nothing() {
        let sol = synthetic_solution(120, |_| 1.0, 5);
        let ef: Vec<usize> = (0..120).collect();
        let samples: Vec<ComponentSample> = ef
            .iter()
            .flat_map(|&alpha| {
                sol.eigenvector(alpha).iter().enumerate().map(move |(k, &value)| {
                    ComponentSample { value, alpha, k, part: PartTag::Npt }
                })
            })
            .collect();
        let x = normalize_components(&samples).unwrap();
        let f = distribution_f(&x, DEFAULT_X_BINS, DEFAULT_X_RANGE).unwrap();
        // A constant shape divides every sample by the same number, which
        // the normalization absorbs.
        let flat = AvgShape {
            epsilon_edges: vec![-70.0, 0.0, 70.0],
            pi_values: vec![0.7, 0.7],
            counts: vec![1000, 1000],
            ef_count: 120,
        };
        let g = rescale_and_distribution_g(
            &samples,
            &sol,
            &flat,
            DEFAULT_C_MIN,
            DEFAULT_X_BINS,
            DEFAULT_X_RANGE,
        )
        .unwrap();
        assert_eq!(g.excluded_count, 0);
        assert!((g.deviation - f.deviation).abs() < 1e-12);
        for (dg, df) in g.histogram.density.iter().zip(&f.histogram.density) {
            assert!((dg - df).abs() < 1e-12);
        }
    }

    #[test]
    fn rescaling_flattens_the_second_moment_across_bins() {
        // Components with a strong ε-dependent envelope; the empirical
        // shape must remove it bin by bin.
        let n = 200;
        let sol = synthetic_solution(n, |eps| 1.0 + 0.9 * (eps / 40.0).sin(), 17);
        let ef: Vec<usize> = (0..n).collect();
        let shape = average_shape(&sol, &ef, 25).unwrap();
        let samples: Vec<ComponentSample> = ef
            .iter()
            .flat_map(|&alpha| {
                sol.eigenvector(alpha).iter().enumerate().map(move |(k, &value)| {
                    ComponentSample { value, alpha, k, part: PartTag::Npt }
                })
            })
            .collect();
        let (kept, excluded) = rescale_components(&samples, &sol, &shape, 50).unwrap();
        assert_eq!(excluded, 0);
        let x = normalize_components(&kept).unwrap();
        // Group x^2 by ε-bin; each bin mean is a chi-square mean with
        // sd sqrt(2/n_b).
        let mut sums = vec![0.0f64; 25];
        let mut counts = vec![0u64; 25];
        for (s, xv) in kept.iter().zip(&x) {
            let eps = sol.unperturbed_energies[s.k] - sol.energies[s.alpha];
            let b = shape.bin_of(eps).unwrap();
            sums[b] += xv * xv;
            counts[b] += 1;
        }
        for b in 0..25 {
            if counts[b] < 100 {
                continue;
            }
            let mean = sums[b] / counts[b] as f64;
            let sd = (2.0 / counts[b] as f64).sqrt();
            assert!(
                (mean - 1.0).abs() < 5.0 * sd,
                "bin {b}: second moment {mean} strays beyond 5 sd ({sd})"
            );
        }
    }

    #[test]
    fn thin_shape_bins_are_excluded_and_reported() {
        let sol = synthetic_solution(40, |_| 1.0, 23);
        let ef: Vec<usize> = (0..40).collect();
        let samples: Vec<ComponentSample> = ef
            .iter()
            .flat_map(|&alpha| {
                sol.eigenvector(alpha).iter().enumerate().map(move |(k, &value)| {
                    ComponentSample { value, alpha, k, part: PartTag::Npt }
                })
            })
            .collect();
        // A shape whose upper half has starving bins: those samples drop.
        let shape = AvgShape {
            epsilon_edges: vec![-40.0, 0.0, 40.0],
            pi_values: vec![1.0, 1.0],
            counts: vec![1000, DEFAULT_C_MIN - 1],
            ef_count: 40,
        };
        let (kept, excluded) = rescale_components(&samples, &sol, &shape, DEFAULT_C_MIN).unwrap();
        assert!(excluded > 0);
        assert_eq!(kept.len() + excluded, samples.len());
        // Starve both bins: over half excluded is a configuration error.
        let starved = AvgShape {
            epsilon_edges: vec![-40.0, 0.0, 40.0],
            pi_values: vec![1.0, 1.0],
            counts: vec![0, 0],
            ef_count: 40,
        };
        assert!(rescale_components(&samples, &sol, &starved, DEFAULT_C_MIN).is_err());
    }

    #[test]
    fn golden_rule_width_follows_the_quadratic_form() {
        let model = build_wbrm(500, 10, 424_242).unwrap();
        assert_eq!(gamma_wbrm(&model, 0.0).unwrap(), 0.0);
        let g1 = gamma_wbrm(&model, 0.7).unwrap();
        let g2 = gamma_wbrm(&model, 1.4).unwrap();
        assert_eq!(g2 / g1, 4.0);
        // Unit-variance band entries put Gamma near 2 pi at unit coupling.
        let g = gamma_wbrm(&model, 1.0).unwrap();
        let two_pi = 2.0 * std::f64::consts::PI;
        assert!((g / two_pi - 1.0).abs() < 0.05, "Gamma/2pi = {}", g / two_pi);

        let chain = crate::models::build_defect_xxz(8, 3, 1.11, 0.5, 0).unwrap();
        assert!(gamma_wbrm(&chain, 1.0).is_err());
    }
}

//! Estimation of the number of spikes (or factors): the edge-scale estimate
//! σ̂_n, the initial bound p̂_0, the growing-threshold iteration and the
//! bulk-mean estimate f̂.

use serde::{Deserialize, Serialize};

use crate::asymptotics::{spike_ci, Interval};
use crate::error::{Result, SpectraError};
use crate::linalg::Matrix;
use crate::sampler::{covariance_of_observations, eigenvalues, SampleSpectrum};
use crate::scalar::{ceil_root, Real};

/// Factor multiplying `σ̂_n n^{-2/3}` in the threshold increment, besides the
/// TW quantile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    LogN,
    Fixed(f64),
}

impl Growth {
    pub fn value(&self, n: usize) -> f64 {
        match *self {
            Growth::LogN => (n as f64).ln(),
            Growth::Fixed(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorOptions {
    /// `p̂_0` uses `λ_{m⌈n^{1/6}⌉}`; 1 gives the unmodified bound.
    pub index_multiplier: usize,
    /// TW1 quantile in the increment (99% by default).
    pub quantile_value: f64,
    pub growth: Growth,
    /// First index retained by σ̂_n; defaults to `⌈n^{1/6}⌉`.
    pub sigma_cut: Option<usize>,
    pub ci_level: f64,
    /// CLT variances σ_i² for the reported intervals; 2 when absent.
    pub spike_variances: Option<Vec<f64>>,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            index_multiplier: 15,
            quantile_value: 2.02,
            growth: Growth::LogN,
            sigma_cut: None,
            ci_level: 0.95,
            spike_variances: None,
        }
    }
}

impl EstimatorOptions {
    pub fn bound_index(&self, n: usize) -> usize {
        self.index_multiplier * ceil_root(n, 6)
    }

    pub fn sigma_index(&self, n: usize) -> usize {
        self.sigma_cut.unwrap_or_else(|| ceil_root(n, 6))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeEstimate<T> {
    /// 1-based index of the sample eigenvalue.
    pub index: usize,
    pub lambda: T,
    pub sigma_sq: T,
    pub ci: Interval<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeInference<T> {
    pub k_hat: usize,
    pub p_end: T,
    pub sigma_hat: T,
    pub z0: T,
    pub p0: T,
    pub increment: T,
    pub iterations: usize,
    pub theta_hats: Vec<SpikeEstimate<T>>,
    /// Absent when `p − K̂ − pK̂/n ≤ 0`.
    pub f_hat: Option<T>,
}

/// Edge-scale estimate from the eigenvalues with 1-based indices
/// `index_cut..=min(p, n)`, with `z0 = λ_{index_cut} + n^{-4/9}`.
/// Returns `(σ̂_n, z0)`.
pub fn sigma_hat<T: Real>(eigenvalues: &[T], n: usize, index_cut: usize) -> Result<(T, T)> {
    let last = eigenvalues.len().min(n);
    if index_cut == 0 || index_cut + 1 > eigenvalues.len() || index_cut > last {
        return Err(SpectraError::Domain(format!(
            "index_cut {index_cut} needs 1 <= index_cut < {} eigenvalues (n = {n})",
            eigenvalues.len()
        )));
    }
    let z0 = eigenvalues[index_cut - 1] + T::of_usize(n).powf(T::lit(-4.0 / 9.0));
    Ok((edge_scale(&eigenvalues[index_cut - 1..last], z0)?, z0))
}

/// `(−A/B³)^{1/3}` with `A`, `B` the means of `(λ − z0)^{-3}` and
/// `(λ − z0)^{-2}`.
fn edge_scale<T: Real>(retained: &[T], z0: T) -> Result<T> {
    let count = T::of_usize(retained.len());
    let (mut a, mut b) = (T::zero(), T::zero());
    for &l in retained {
        let gap = l - z0;
        if !(gap < T::zero()) {
            return Err(SpectraError::Domain(format!(
                "eigenvalue {l} is not below z0 = {z0}; eigenvalues must be descending"
            )));
        }
        let inv2 = T::one() / (gap * gap);
        a += inv2 / gap;
        b += inv2;
    }
    a /= count;
    b /= count;
    if !(b > T::zero()) || !b.is_finite() {
        return Err(SpectraError::Numerical(format!("degenerate second moment {b}")));
    }
    Ok((-a / (b * b * b)).cbrt())
}

/// `λ_{m⌈n^{1/6}⌉} + ln(n) n^{-5/9}`.
pub fn initial_bound<T: Real>(eigenvalues: &[T], n: usize, index_multiplier: usize) -> Result<T> {
    if index_multiplier == 0 || n == 0 {
        return Err(SpectraError::Domain("index_multiplier and n must be positive".into()));
    }
    let index = index_multiplier * ceil_root(n, 6);
    if index > eigenvalues.len() {
        return Err(SpectraError::Domain(format!(
            "initial bound index {index} exceeds the {} eigenvalues",
            eigenvalues.len()
        )));
    }
    let nn = T::of_usize(n);
    Ok(eigenvalues[index - 1] + nn.ln() * nn.powf(T::lit(-5.0 / 9.0)))
}

/// `(tr S − Σ_{i≤k} λ_i) / (p − k − pk/n)`.
pub fn f_hat<T: Real>(eigenvalues: &[T], trace_total: T, k: usize, n: usize) -> Result<T> {
    let p = eigenvalues.len();
    if k > p || n == 0 {
        return Err(SpectraError::Domain(format!("k = {k} exceeds p = {p}")));
    }
    let (pp, kk) = (T::of_usize(p), T::of_usize(k));
    let denominator = pp - kk - pp * kk / T::of_usize(n);
    if !(denominator > T::zero()) {
        return Err(SpectraError::Domain(format!(
            "p − K − pK/n = {denominator} is not positive"
        )));
    }
    let top: T = eigenvalues[..k].iter().copied().sum();
    Ok((trace_total - top) / denominator)
}

pub fn estimate_k<T: Real>(spectrum: &SampleSpectrum<T>, opts: &EstimatorOptions) -> Result<SpikeInference<T>> {
    estimate_k_from_eigenvalues(&spectrum.eigenvalues, spectrum.n, opts)
}

/// Threshold iteration on a descending spectrum. Starting from `p̂_0`, the
/// threshold moves up by `q · growth · σ̂_n n^{-2/3}` while the closed window
/// `[p̂_{m−1}, p̂_m]` holds an eigenvalue; K̂ counts the eigenvalues above the
/// final threshold.
pub fn estimate_k_from_eigenvalues<T: Real>(
    eigenvalues: &[T],
    n: usize,
    opts: &EstimatorOptions,
) -> Result<SpikeInference<T>> {
    const ITERATION_CAP: usize = 1_000_000;
    let p = eigenvalues.len();
    if n < 8 || p < 8 {
        return Err(SpectraError::Domain(format!("need n, p >= 8 (n = {n}, p = {p})")));
    }
    if eigenvalues.windows(2).any(|w| w[1] > w[0]) {
        return Err(SpectraError::Ordering("eigenvalues must be descending".into()));
    }
    if !(eigenvalues[0] > T::zero()) {
        return Err(SpectraError::DegenerateSpectrum(
            "all eigenvalues are zero; the edge scale is undefined".into(),
        ));
    }
    let (sigma, z0) = sigma_hat(eigenvalues, n, opts.sigma_index(n))?;
    let p0 = initial_bound(eigenvalues, n, opts.index_multiplier)?;
    let nn = T::of_usize(n);
    let increment = T::lit(opts.quantile_value * opts.growth.value(n)) * sigma * nn.powf(T::lit(-2.0 / 3.0));
    if !(increment > T::zero()) {
        return Err(SpectraError::Domain(format!(
            "threshold increment {increment} is not positive"
        )));
    }
    let mut threshold = p0;
    let mut iterations = 0;
    loop {
        let upper = threshold + increment;
        let at_least_lower = eigenvalues.partition_point(|&v| v >= threshold);
        let above_upper = eigenvalues.partition_point(|&v| v > upper);
        if at_least_lower == above_upper {
            break;
        }
        threshold = upper;
        iterations += 1;
        if iterations >= ITERATION_CAP {
            return Err(SpectraError::IterationCap(ITERATION_CAP));
        }
    }
    let k_hat = eigenvalues.partition_point(|&v| v > threshold);

    let mut theta_hats = Vec::with_capacity(k_hat);
    for (i, &lambda) in eigenvalues[..k_hat].iter().enumerate() {
        let sigma_sq = opts
            .spike_variances
            .as_ref()
            .and_then(|v| v.get(i).copied())
            .unwrap_or(2.0);
        let sigma_sq = T::lit(sigma_sq);
        theta_hats.push(SpikeEstimate {
            index: i + 1,
            lambda,
            sigma_sq,
            ci: spike_ci(lambda, sigma_sq.sqrt(), n, opts.ci_level)?,
        });
    }
    let trace: T = eigenvalues.iter().copied().sum();
    Ok(SpikeInference {
        k_hat,
        p_end: threshold,
        sigma_hat: sigma,
        z0,
        p0,
        increment,
        iterations,
        theta_hats,
        f_hat: f_hat(eigenvalues, trace, k_hat, n).ok(),
    })
}

/// Estimates the number of factors of the observations `data` (rows are
/// variables, columns are samples).
pub fn count_factors<T: Real>(data: &Matrix<T>, centered: bool, opts: &EstimatorOptions) -> Result<SpikeInference<T>> {
    if data.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(SpectraError::Domain("observations must be finite".into()));
    }
    let cov = covariance_of_observations(data, centered)?;
    let eigs = eigenvalues(&cov)?;
    estimate_k_from_eigenvalues(&eigs, data.cols(), opts)
}

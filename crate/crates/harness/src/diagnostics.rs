//! Repeated eigenvector diagnostics for a fixed population model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spike_spectra::eigcheck::{cross_alignment, report, AlignmentReport};
use spike_spectra::stats::median;
use spike_spectra::{
    derive_seed, draw_data, sample_covariance, spectrum, EntryDistribution, EntryLaw, Matrix64, PopulationCovariance64,
};

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeSummary {
    pub index: usize,
    pub mean_alignment: f64,
    pub min_alignment: f64,
    /// Fraction of replications with `(v_i^T ξ_i)² ≥ 0.99`.
    pub frac_above_099: f64,
    /// Largest `(v_j^T ξ_i)²` over the other spikes `j`, median over replications.
    pub median_cross_alignment: f64,
    pub median_fourth_moment: f64,
    /// Median of `(γ_4 − 3) Σ_j ξ_ij⁴ + 2`.
    pub median_sigma_sq_plugin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub start: usize,
    pub end: usize,
    pub mean_alignment: f64,
    pub frac_above_098: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigcheckSummary {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub reps: usize,
    pub seed: u64,
    pub spikes: Vec<SpikeSummary>,
    pub groups: Vec<GroupSummary>,
    /// Largest completeness error over all replications and spikes.
    pub max_completeness_error: f64,
    pub plugin_outside_conditions: bool,
}

struct Replicate {
    report: AlignmentReport<f64>,
    cross: Vec<f64>,
}

fn fraction(values: impl Iterator<Item = bool>, total: usize) -> f64 {
    values.filter(|&b| b).count() as f64 / total as f64
}

pub fn run_eigcheck(
    model: &PopulationCovariance64,
    n: usize,
    reps: usize,
    seed: u64,
    dist: &EntryDistribution,
    centered: bool,
) -> Result<EigcheckSummary> {
    if reps == 0 || n == 0 {
        return Err(HarnessError::Config("reps and n must be positive".into()));
    }
    let k = model.k();
    let law = EntryLaw::homogeneous(dist.clone());
    let rows = model.u_factor().cols();
    let reps_out: Vec<Replicate> = (0..reps)
        .into_par_iter()
        .map(|rep| -> Result<Replicate> {
            let x: Matrix64 = draw_data(rows, n, &law, derive_seed(seed, rep as u64));
            let spec = spectrum(&sample_covariance(model, &x, centered)?)?;
            let report = report(model, &spec)?;
            let mut cross = Vec::with_capacity(k);
            for i in 1..=k {
                let mut worst: f64 = 0.0;
                for j in (1..=k).filter(|&j| j != i) {
                    worst = worst.max(cross_alignment(model, &spec, j, i)?);
                }
                cross.push(worst);
            }
            Ok(Replicate { report, cross })
        })
        .collect::<Result<Vec<_>>>()?;

    let gamma4 = dist.fourth_moment();
    let spikes = (0..k)
        .map(|i| {
            let align: Vec<f64> = reps_out.iter().map(|r| r.report.per_spike[i].1).collect();
            let fourth: Vec<f64> = reps_out.iter().map(|r| r.report.fourth_moments[i]).collect();
            let plugin: Vec<f64> = fourth.iter().map(|f| (gamma4 - 3.0) * f + 2.0).collect();
            let cross: Vec<f64> = reps_out.iter().map(|r| r.cross[i]).collect();
            SpikeSummary {
                index: i + 1,
                mean_alignment: align.iter().sum::<f64>() / reps as f64,
                min_alignment: align.iter().copied().fold(f64::INFINITY, f64::min),
                frac_above_099: fraction(align.iter().map(|&a| a >= 0.99), reps),
                median_cross_alignment: if k > 1 { median(&cross) } else { 0.0 },
                median_fourth_moment: median(&fourth),
                median_sigma_sq_plugin: median(&plugin),
            }
        })
        .collect();
    let group_count = reps_out.first().map_or(0, |r| r.report.subspaces.len());
    let groups = (0..group_count)
        .map(|g| {
            let values: Vec<f64> = reps_out.iter().map(|r| r.report.subspaces[g].alignment).collect();
            let first = &reps_out[0].report.subspaces[g];
            GroupSummary {
                start: first.start,
                end: first.end,
                mean_alignment: values.iter().sum::<f64>() / reps as f64,
                frac_above_098: fraction(values.iter().map(|&a| a >= 0.98), reps),
            }
        })
        .collect();
    Ok(EigcheckSummary {
        n,
        p: model.p(),
        k,
        reps,
        seed,
        spikes,
        groups,
        max_completeness_error: reps_out.iter().map(|r| r.report.completeness_error).fold(0.0, f64::max),
        plugin_outside_conditions: reps_out[0].report.plugin_outside_conditions,
    })
}

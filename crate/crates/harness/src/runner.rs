use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spike_spectra::asymptotics::BulkOperator;
use spike_spectra::sampler::{eigenvalues, sample_covariance_with_gamma};
use spike_spectra::stats::{ks_distance, mean, normal_cdf, quantile, variance};
use spike_spectra::{
    bulk_edge, clt_variance, count_factors, derive_seed, draw_data, edge_statistic, estimate_k_from_eigenvalues,
    quadratic_form_statistic, spike_ci, spike_limit_closed_form, tw1_cdf, BulkLaw64, EntryDistribution, EntryLaw,
    Matrix64,
};

use crate::config::{CellConfig, ExperimentConfig, Noise, Scenario};
use crate::error::{HarnessError, Result};

/// Largest tolerated fraction of failed replications per cell.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub label: String,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub r: Option<f64>,
    pub noise: Option<Noise>,
    pub dist: String,
    pub spike_index: usize,
    pub seed: u64,
    pub reps: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    /// Fraction of replications with `K̂ = K` (factor_tables).
    pub ratio: Option<f64>,
    /// Kolmogorov–Smirnov distance to the limiting law.
    pub ks: Option<f64>,
    pub q99: Option<f64>,
    /// Fraction of confidence intervals covering θ_i (clt_spike).
    pub coverage: Option<f64>,
    /// Limiting value of the aggregate: σ_i² for table_1_1, θ_i for custom.
    pub analytic: Option<f64>,
    pub reference: Option<f64>,
    pub raw: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub scenario: Scenario,
    pub master_seed: u64,
    pub reps: usize,
    pub cells: Vec<CellResult>,
    pub runtime_secs: f64,
}

impl ExperimentResult {
    pub fn empty(scenario: Scenario) -> Self {
        Self {
            scenario,
            master_seed: 0,
            reps: 0,
            cells: Vec::new(),
            runtime_secs: 0.0,
        }
    }
}

fn dist_name(d: &EntryDistribution) -> String {
    match d {
        EntryDistribution::StandardNormal => "standard_normal".into(),
        EntryDistribution::UniformSym => "uniform_sym".into(),
        EntryDistribution::Rademacher => "rademacher".into(),
        EntryDistribution::CustomTable(_) => "custom_table".into(),
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Everything a replication needs, computed once per cell.
struct CellPlan {
    n: usize,
    p: usize,
    k: usize,
    gamma: Matrix64,
    law: EntryLaw,
    spike: Option<SpikePlan>,
    edge: Option<BulkLaw64>,
    quad: Option<QuadPlan>,
    analytic: Option<f64>,
}

struct SpikePlan {
    mu: f64,
    theta: f64,
    sigma_sq: f64,
}

struct QuadPlan {
    w1: Vec<f64>,
    w2: Option<Vec<f64>>,
    bulk: BulkOperator<f64>,
    theta: f64,
    gamma4: Vec<f64>,
}

fn plan_cell(config: &ExperimentConfig, cell: &CellConfig) -> Result<CellPlan> {
    let dist = cell.dist.clone().unwrap_or_else(|| config.dist.clone());
    let law = EntryLaw::homogeneous(dist);
    let n = cell.n;
    if config.scenario == Scenario::FactorTables {
        if let Some(design) = &cell.factor {
            let gamma = design.gamma(n)?;
            return Ok(CellPlan {
                n,
                p: design.p,
                k: design.factor_count(n),
                gamma,
                law,
                spike: None,
                edge: None,
                quad: None,
                analytic: None,
            });
        }
    }
    let model = cell
        .model
        .as_ref()
        .ok_or_else(|| HarnessError::Config("cell has no model".into()))?
        .build()?;
    let (p, k) = (model.p(), model.k());
    let rows = model.u_factor().cols();
    let gamma4 = law.fourth_moments(rows);
    let mut plan = CellPlan {
        n,
        p,
        k,
        gamma: model.gamma_matrix(),
        law,
        spike: None,
        edge: None,
        quad: None,
        analytic: None,
    };
    let needs_spike = match config.scenario {
        Scenario::Table11 | Scenario::CltSpike | Scenario::CltQuadform => true,
        Scenario::Custom => k > 0,
        Scenario::FactorTables | Scenario::TwEdge => false,
    };
    if cell.spike_index > p {
        return Err(HarnessError::Config(format!(
            "spike_index {} exceeds p = {p}",
            cell.spike_index
        )));
    }
    if needs_spike {
        if cell.spike_index > k {
            return Err(HarnessError::Config(format!(
                "spike_index {} exceeds the {k} spikes of the model",
                cell.spike_index
            )));
        }
        let i = cell.spike_index - 1;
        let mu = model.spikes()[i];
        let theta = spike_limit_closed_form(mu, model.bulk(), n)?.theta;
        let sigma_sq = clt_variance(&model.u_spike_rows(), &gamma4)?.sigma_sq[i];
        plan.spike = Some(SpikePlan { mu, theta, sigma_sq });
        plan.analytic = match config.scenario {
            Scenario::Table11 => Some(sigma_sq),
            Scenario::Custom => Some(theta),
            Scenario::CltQuadform => Some(1.0),
            _ => Some(0.0),
        };
    }
    match config.scenario {
        Scenario::TwEdge => {
            plan.edge = Some(bulk_edge(model.bulk(), n)?);
        }
        Scenario::CltQuadform => {
            let i = cell.spike_index - 1;
            let u = model.u_factor();
            let w2 = if cell.cross {
                if i + 1 >= k {
                    return Err(HarnessError::Config("cross statistic needs a second spike".into()));
                }
                Some(u.row(i + 1).to_vec())
            } else {
                None
            };
            plan.quad = Some(QuadPlan {
                w1: u.row(i).to_vec(),
                w2,
                bulk: BulkOperator::from_model(&model),
                theta: plan.spike.as_ref().map(|s| s.theta).unwrap_or(f64::NAN),
                gamma4,
            });
            if cell.cross {
                plan.analytic = Some(1.0);
            }
        }
        _ => {}
    }
    Ok(plan)
}

struct RepOutcome {
    value: f64,
    covered: Option<bool>,
}

fn replicate(config: &ExperimentConfig, cell: &CellConfig, plan: &CellPlan, seed: u64) -> Result<RepOutcome> {
    let x: Matrix64 = draw_data(plan.gamma.cols(), plan.n, &plan.law, seed);
    let n = plan.n;
    let sqrt_n = (n as f64).sqrt();
    let outcome = |value| RepOutcome { value, covered: None };
    match config.scenario {
        Scenario::CltQuadform => {
            let q = plan.quad.as_ref().expect("planned");
            let stat = quadratic_form_statistic(&q.w1, q.w2.as_deref(), &x, &q.bulk, q.theta, &q.gamma4)?;
            Ok(outcome(stat))
        }
        Scenario::FactorTables if cell.factor.is_some() => {
            let y = plan.gamma.matmul(&x)?;
            let inference = count_factors(&y, config.centered, &config.estimator)?;
            Ok(outcome(inference.k_hat as f64))
        }
        _ => {
            let cov = sample_covariance_with_gamma(&plan.gamma, &x, config.centered)?;
            let eigs = eigenvalues(&cov)?;
            match config.scenario {
                Scenario::FactorTables => {
                    let inference = estimate_k_from_eigenvalues(&eigs, n, &config.estimator)?;
                    Ok(outcome(inference.k_hat as f64))
                }
                Scenario::TwEdge => {
                    let law = plan.edge.as_ref().expect("planned");
                    Ok(outcome(edge_statistic(eigs[plan.k], law, n)))
                }
                Scenario::Table11 => {
                    let s = plan.spike.as_ref().expect("planned");
                    Ok(outcome(sqrt_n * eigs[cell.spike_index - 1] / s.mu))
                }
                Scenario::CltSpike => {
                    let s = plan.spike.as_ref().expect("planned");
                    let lambda = eigs[cell.spike_index - 1];
                    let sigma = s.sigma_sq.sqrt();
                    let ci = spike_ci(lambda, sigma, n, config.estimator.ci_level)?;
                    Ok(RepOutcome {
                        value: sqrt_n * (lambda - s.theta) / (s.theta * sigma),
                        covered: Some(ci.lower <= s.theta && s.theta <= ci.upper),
                    })
                }
                Scenario::Custom => Ok(outcome(eigs[cell.spike_index - 1])),
                Scenario::CltQuadform => unreachable!(),
            }
        }
    }
}

/// Aggregates of one cell computed from its successful replications.
pub struct Aggregates {
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    pub ratio: Option<f64>,
    pub ks: Option<f64>,
    pub q99: Option<f64>,
}

pub fn aggregate(scenario: Scenario, values: &[f64], true_k: usize) -> Aggregates {
    let ks = match scenario {
        Scenario::CltSpike | Scenario::CltQuadform => finite(ks_distance(values, normal_cdf)),
        Scenario::TwEdge => finite(ks_distance(values, tw1_cdf)),
        _ => None,
    };
    let ratio = (scenario == Scenario::FactorTables && !values.is_empty())
        .then(|| values.iter().filter(|&&v| v == true_k as f64).count() as f64 / values.len() as f64);
    Aggregates {
        mean: finite(mean(values)),
        variance: finite(variance(values)),
        ratio,
        ks,
        q99: if scenario == Scenario::TwEdge {
            finite(quantile(values, 0.99))
        } else {
            None
        },
    }
}

fn run_cell(config: &ExperimentConfig, index: usize) -> Result<CellResult> {
    let cell = &config.cells[index];
    let plan = plan_cell(config, cell)?;
    let cell_seed = derive_seed(config.master_seed, index as u64);
    let outcomes: Vec<Result<RepOutcome>> = (0..config.reps)
        .into_par_iter()
        .map(|rep| replicate(config, cell, &plan, derive_seed(cell_seed, rep as u64)))
        .collect();
    let mut values = Vec::with_capacity(config.reps);
    let mut covered = 0usize;
    let mut failures = 0usize;
    let mut first_failure = None;
    for outcome in outcomes {
        match outcome {
            Ok(o) => {
                values.push(o.value);
                covered += usize::from(o.covered == Some(true));
            }
            Err(e) => {
                failures += 1;
                first_failure.get_or_insert_with(|| e.to_string());
            }
        }
    }
    let label = cell.label.clone().unwrap_or_else(|| format!("cell{index}"));
    if failures as f64 > MAX_FAILURE_FRACTION * config.reps as f64 {
        return Err(HarnessError::Run(format!(
            "{label}: {failures} of {} replications failed (first: {})",
            config.reps,
            first_failure.unwrap_or_default()
        )));
    }
    let agg = aggregate(config.scenario, &values, plan.k);
    let dist = cell.dist.as_ref().unwrap_or(&config.dist);
    Ok(CellResult {
        label,
        n: plan.n,
        p: plan.p,
        k: plan.k,
        r: cell.factor.as_ref().map(|f| f.r),
        noise: cell.factor.as_ref().map(|f| f.noise),
        dist: dist_name(dist),
        spike_index: cell.spike_index,
        seed: cell_seed,
        reps: config.reps,
        failures,
        first_failure,
        mean: agg.mean,
        variance: agg.variance,
        ratio: agg.ratio,
        ks: agg.ks,
        q99: agg.q99,
        coverage: (config.scenario == Scenario::CltSpike && !values.is_empty())
            .then(|| covered as f64 / values.len() as f64),
        analytic: plan.analytic,
        reference: cell.reference,
        raw: config.retain_raw.then_some(values),
    })
}

/// Runs every cell of `config` on the current rayon pool.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let start = Instant::now();
    let cells = (0..config.cells.len())
        .map(|i| run_cell(config, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        scenario: config.scenario,
        master_seed: config.master_seed,
        reps: config.reps,
        cells,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

/// Runs on a dedicated pool of `workers` threads (all cores when `None`).
pub fn run_with_workers(config: &ExperimentConfig, workers: Option<usize>) -> Result<ExperimentResult> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::Run(format!("thread pool: {e}")))?;
    pool.install(|| run(config))
}

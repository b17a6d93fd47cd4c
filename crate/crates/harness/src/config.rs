use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use spike_spectra::scalar::ceil_root;
use spike_spectra::{EntryDistribution, EstimatorOptions, Matrix64};

use crate::error::{HarnessError, Result};
use crate::model::ModelSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Variance of `√n λ_i / μ_i`.
    Table11,
    /// Fraction of replications with `K̂ = K` under a factor design.
    FactorTables,
    /// `√n (λ_i − θ_i)/(θ_i σ_i)` against N(0, 1), plus CI coverage of θ_i.
    CltSpike,
    /// Standardised quadratic form against N(0, 1).
    CltQuadform,
    /// `n^{2/3}(λ_{K+1} − γ_+)/σ_n` against TW1.
    TwEdge,
    /// Mean and variance of `λ_i`.
    Custom,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Table11 => "table_1_1",
            Scenario::FactorTables => "factor_tables",
            Scenario::CltSpike => "clt_spike",
            Scenario::CltQuadform => "clt_quadform",
            Scenario::TwEdge => "tw_edge",
            Scenario::Custom => "custom",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    /// `T = I`.
    T1,
    /// `T = diag(1 (p/2 times), 1/√2 (p/2 times))`.
    T2,
}

/// `Y = ΛF + TZ` with `Λ_ii = √(b_i² − 1)`, `b_i = √((5 + i) r) + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorDesign {
    pub p: usize,
    pub r: f64,
    #[serde(default = "default_noise")]
    pub noise: Noise,
    /// Number of factors; `5⌈n^{1/7}⌉ + 1` when absent.
    #[serde(default)]
    pub k: Option<usize>,
}

fn default_noise() -> Noise {
    Noise::T1
}

pub fn default_factor_count(n: usize) -> usize {
    5 * ceil_root(n, 7) + 1
}

impl FactorDesign {
    pub fn factor_count(&self, n: usize) -> usize {
        self.k.unwrap_or_else(|| default_factor_count(n))
    }

    pub fn b(&self, k: usize) -> Vec<f64> {
        (1..=k).map(|i| ((5 + i) as f64 * self.r).sqrt() + 1.0).collect()
    }

    /// `Γ = (Λ | T)`, p×(p+K).
    pub fn gamma(&self, n: usize) -> Result<Matrix64> {
        let k = self.factor_count(n);
        if k > self.p {
            return Err(HarnessError::Config(format!("K = {k} exceeds p = {}", self.p)));
        }
        if !(0.0..=1.0).contains(&self.r) {
            return Err(HarnessError::Config(format!("r = {} outside [0, 1]", self.r)));
        }
        let b = self.b(k);
        let half = self.p / 2;
        Ok(Matrix64::from_fn(self.p, self.p + k, |i, j| {
            if j < k {
                if i == j {
                    (b[i] * b[i] - 1.0).sqrt()
                } else {
                    0.0
                }
            } else if i == j - k {
                match self.noise {
                    Noise::T2 if i >= half => std::f64::consts::FRAC_1_SQRT_2,
                    _ => 1.0,
                }
            } else {
                0.0
            }
        }))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    #[serde(default)]
    pub label: Option<String>,
    pub n: usize,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub factor: Option<FactorDesign>,
    /// Overrides the experiment-wide entry distribution.
    #[serde(default)]
    pub dist: Option<EntryDistribution>,
    /// 1-based spike index used by the spike scenarios.
    #[serde(default = "default_spike_index")]
    pub spike_index: usize,
    /// Quadratic form: use the cross statistic with the next spike direction.
    #[serde(default)]
    pub cross: bool,
    /// Published value to compare with.
    #[serde(default)]
    pub reference: Option<f64>,
}

fn default_spike_index() -> usize {
    1
}

impl CellConfig {
    pub fn model_cell(n: usize, model: ModelSpec) -> Self {
        Self {
            label: None,
            n,
            model: Some(model),
            factor: None,
            dist: None,
            spike_index: 1,
            cross: false,
            reference: None,
        }
    }

    pub fn factor_cell(n: usize, design: FactorDesign) -> Self {
        Self {
            label: None,
            n,
            model: None,
            factor: Some(design),
            dist: None,
            spike_index: 1,
            cross: false,
            reference: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_reference(mut self, value: f64) -> Self {
        self.reference = Some(value);
        self
    }

    pub fn with_dist(mut self, dist: EntryDistribution) -> Self {
        self.dist = Some(dist);
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub json: Option<PathBuf>,
    #[serde(default)]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub cells: Vec<CellConfig>,
    #[serde(default = "default_dist")]
    pub dist: EntryDistribution,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub estimator: EstimatorOptions,
    #[serde(default)]
    pub centered: bool,
    /// Keep the per-replication statistics in the result.
    #[serde(default)]
    pub retain_raw: bool,
    #[serde(default)]
    pub outputs: Outputs,
}

fn default_dist() -> EntryDistribution {
    EntryDistribution::StandardNormal
}

fn default_reps() -> usize {
    500
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario, cells: Vec<CellConfig>) -> Self {
        Self {
            scenario,
            cells,
            dist: default_dist(),
            reps: default_reps(),
            master_seed: 0,
            estimator: EstimatorOptions::default(),
            centered: false,
            retain_raw: false,
            outputs: Outputs::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(HarnessError::Config("reps must be at least 1".into()));
        }
        for (i, cell) in self.cells.iter().enumerate() {
            if cell.n == 0 {
                return Err(HarnessError::Config(format!("cell {i}: n must be positive")));
            }
            match self.scenario {
                Scenario::FactorTables => {
                    if cell.factor.is_none() && cell.model.is_none() {
                        return Err(HarnessError::Config(format!(
                            "cell {i}: factor_tables needs a factor design or a model"
                        )));
                    }
                }
                _ => {
                    if cell.model.is_none() {
                        return Err(HarnessError::Config(format!("cell {i}: scenario needs a model")));
                    }
                }
            }
            if cell.spike_index == 0 {
                return Err(HarnessError::Config(format!("cell {i}: spike_index is 1-based")));
            }
        }
        Ok(())
    }
}

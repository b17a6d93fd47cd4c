//! JSON model specifications.
//!
//! ```json
//! {"kind": "spiked", "spikes": [800, 200],
//!  "bulk": {"distribution": "uniform", "low": 1.0, "high": 2.0, "count": 398, "seed": 7},
//!  "v": {"block": [[0.7071, 0.7071], [0.7071, -0.7071]]}, "u": "v_transpose"}
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use spike_spectra::{
    build_factor_model, build_intraclass, build_spiked_diagonal, Factor, FactorModelSpec, Matrix64,
    PopulationCovariance64,
};

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EigenvalueList {
    Inline(Vec<f64>),
    Random(RandomValues),
    Constant { value: f64, count: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomValues {
    pub distribution: RandomKind,
    pub low: f64,
    pub high: f64,
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomKind {
    Uniform,
}

impl EigenvalueList {
    /// Values sorted non-increasing.
    pub fn values(&self) -> Result<Vec<f64>> {
        let mut values = match self {
            EigenvalueList::Inline(v) => v.clone(),
            EigenvalueList::Constant { value, count } => vec![*value; *count],
            EigenvalueList::Random(r) => {
                if r.low >= r.high || r.low.is_nan() || r.high.is_nan() {
                    return Err(HarnessError::Config(format!(
                        "uniform eigenvalues need low < high ({} >= {})",
                        r.low, r.high
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
                (0..r.count).map(|_| rng.random_range(r.low..r.high)).collect()
            }
        };
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(values)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VSpec {
    Identity,
    /// Orthogonal k×k block placed in the leading corner of the identity.
    Block(Vec<Vec<f64>>),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum USpec {
    Identity,
    /// U = V^T, so Γ is the symmetric square root of Σ.
    VTranspose,
    Matrix(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Spiked {
        spikes: EigenvalueList,
        bulk: EigenvalueList,
        #[serde(default = "identity_v")]
        v: VSpec,
        #[serde(default = "identity_u")]
        u: USpec,
    },
    Intraclass {
        p: usize,
        rho: f64,
    },
    Factor {
        /// p×K loadings, one row per variable.
        loadings: Vec<Vec<f64>>,
        /// p×p noise transform; identity when absent.
        #[serde(default)]
        noise: Option<Vec<Vec<f64>>>,
    },
}

fn identity_v() -> VSpec {
    VSpec::Identity
}

fn identity_u() -> USpec {
    USpec::Identity
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<Matrix64> {
    Matrix64::from_rows(rows).map_err(|e| HarnessError::Config(format!("{what}: {e}")))
}

impl ModelSpec {
    pub fn build(&self) -> Result<PopulationCovariance64> {
        match self {
            ModelSpec::Spiked { spikes, bulk, v, u } => {
                let spikes = spikes.values()?;
                let bulk = bulk.values()?;
                let p = spikes.len() + bulk.len();
                let v_matrix = match v {
                    VSpec::Identity => None,
                    VSpec::Block(block) => {
                        let block = matrix(block, "v block")?;
                        if block.rows() != block.cols() || block.rows() > p {
                            return Err(HarnessError::Config(format!(
                                "v block must be square and at most {p}×{p}"
                            )));
                        }
                        let mut full = Matrix64::identity(p);
                        for i in 0..block.rows() {
                            for j in 0..block.cols() {
                                full[(i, j)] = block[(i, j)];
                            }
                        }
                        Some(full)
                    }
                    VSpec::Matrix(m) => Some(matrix(m, "v")?),
                };
                let u_factor = match u {
                    USpec::Identity => Factor::Identity,
                    USpec::VTranspose => match &v_matrix {
                        Some(m) => Factor::Explicit(m.transpose()),
                        None => Factor::Identity,
                    },
                    USpec::Matrix(m) => Factor::Explicit(matrix(m, "u")?),
                };
                let v_factor = v_matrix.map_or(Factor::Identity, Factor::Explicit);
                Ok(build_spiked_diagonal(&spikes, &bulk, u_factor, v_factor)?)
            }
            ModelSpec::Intraclass { p, rho } => Ok(build_intraclass(*p, *rho)?),
            ModelSpec::Factor { loadings, noise } => {
                let loadings = matrix(loadings, "loadings")?;
                let noise_transform = match noise {
                    Some(t) => matrix(t, "noise")?,
                    None => Matrix64::identity(loadings.rows()),
                };
                Ok(build_factor_model(&FactorModelSpec {
                    loadings,
                    noise_transform,
                })?)
            }
        }
    }
}

/// Spiked model with spikes (800, 200) on a bulk of p−2 draws from U(1, 2).
/// `rotated` mixes the two spike directions with the 2×2 Hadamard block and
/// uses the symmetric square root.
pub fn table_1_1_model(p: usize, rotated: bool, bulk_seed: u64) -> ModelSpec {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ModelSpec::Spiked {
        spikes: EigenvalueList::Inline(vec![800.0, 200.0]),
        bulk: EigenvalueList::Random(RandomValues {
            distribution: RandomKind::Uniform,
            low: 1.0,
            high: 2.0,
            count: p - 2,
            seed: bulk_seed,
        }),
        v: if rotated {
            VSpec::Block(vec![vec![h, h], vec![h, -h]])
        } else {
            VSpec::Identity
        },
        u: if rotated { USpec::VTranspose } else { USpec::Identity },
    }
}

/// A single spike `mu` on a bulk of `p − 1` ones.
pub fn single_spike_model(p: usize, mu: f64) -> ModelSpec {
    ModelSpec::Spiked {
        spikes: EigenvalueList::Inline(vec![mu]),
        bulk: EigenvalueList::Constant {
            value: 1.0,
            count: p - 1,
        },
        v: VSpec::Identity,
        u: USpec::Identity,
    }
}

/// Identity covariance (no spikes).
pub fn null_model(p: usize) -> ModelSpec {
    ModelSpec::Spiked {
        spikes: EigenvalueList::Inline(Vec::new()),
        bulk: EigenvalueList::Constant { value: 1.0, count: p },
        v: VSpec::Identity,
        u: USpec::Identity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_forms() {
        let text = r#"{"kind": "spiked", "spikes": [800, 200],
            "bulk": {"distribution": "uniform", "low": 1.0, "high": 2.0, "count": 8, "seed": 7},
            "v": {"block": [[0.7071067811865476, 0.7071067811865476], [0.7071067811865476, -0.7071067811865476]]},
            "u": "v_transpose"}"#;
        let spec: ModelSpec = serde_json::from_str(text).unwrap();
        let model = spec.build().unwrap();
        assert_eq!(model.p(), 10);
        assert!(model.is_symmetric_root());
        assert!(model.bulk().iter().all(|&v| (1.0..2.0).contains(&v)));

        let spec: ModelSpec = serde_json::from_str(r#"{"kind": "intraclass", "p": 10, "rho": 0.5}"#).unwrap();
        assert!((spec.build().unwrap().spikes()[0] - 5.5).abs() < 1e-12);

        let spec: ModelSpec =
            serde_json::from_str(r#"{"kind": "factor", "loadings": [[1.7320508075688772], [0], [0]]}"#).unwrap();
        assert!((spec.build().unwrap().spikes()[0] - 4.0).abs() < 1e-10);
    }

    #[test]
    fn bulk_draws_are_seeded() {
        let a = table_1_1_model(50, false, 3).build().unwrap();
        let b = table_1_1_model(50, true, 3).build().unwrap();
        assert_eq!(a.bulk(), b.bulk());
        assert_eq!(a.eigenvalues(), b.eigenvalues());
    }

    #[test]
    fn rejects_bad_specs() {
        let spec: ModelSpec = serde_json::from_str(r#"{"kind": "spiked", "spikes": [1], "bulk": [2]}"#).unwrap();
        assert!(spec.build().is_err());
        assert!(serde_json::from_str::<ModelSpec>(r#"{"kind": "banana"}"#).is_err());
    }
}

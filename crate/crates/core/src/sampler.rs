//! Data generation and sample covariance / spectrum formation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::covmodel::PopulationCovariance;
use crate::error::{Result, SpectraError};
use crate::linalg::{symmetric_eigen, symmetric_eigenvalues, Matrix};
use crate::scalar::Real;

/// Finite discrete law given by support points and probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteTable {
    values: Vec<f64>,
    cumulative: Vec<f64>,
    fourth_moment: f64,
}

impl DiscreteTable {
    /// Weights are normalised; the law must be standardised (mean 0,
    /// variance 1) to within 1e-9.
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != weights.len() {
            return Err(SpectraError::Shape(
                "custom table needs matching, nonempty values and weights".into(),
            ));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(SpectraError::Domain("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(SpectraError::Domain("weights sum to zero".into()));
        }
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let moment = |k: i32| -> f64 { values.iter().zip(&probs).map(|(v, p)| p * v.powi(k)).sum() };
        let (mean, second) = (moment(1), moment(2));
        if mean.abs() > 1e-9 || (second - 1.0).abs() > 1e-9 {
            return Err(SpectraError::Domain(format!(
                "custom table must have mean 0 and variance 1 (got {mean}, {second})"
            )));
        }
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self {
            fourth_moment: moment(4),
            values,
            cumulative,
        })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        let idx = self.cumulative.partition_point(|&c| c <= u);
        self.values[idx.min(self.values.len() - 1)]
    }
}

/// Law of the standardised entries `x_ij`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryDistribution {
    StandardNormal,
    /// U(−√3, √3).
    UniformSym,
    Rademacher,
    CustomTable(DiscreteTable),
}

impl EntryDistribution {
    /// γ_4 = E x^4.
    pub fn fourth_moment(&self) -> f64 {
        match self {
            Self::StandardNormal => 3.0,
            Self::UniformSym => 9.0 / 5.0,
            Self::Rademacher => 1.0,
            Self::CustomTable(t) => t.fourth_moment,
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Self::StandardNormal => rng.sample(StandardNormal),
            Self::UniformSym => {
                let half_width = 3f64.sqrt();
                rng.random_range(-half_width..half_width)
            }
            Self::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Self::CustomTable(t) => t.sample(rng),
        }
    }
}

/// Entry laws assigned to consecutive groups of rows of X.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryLaw {
    groups: Vec<(usize, EntryDistribution)>,
    rest: EntryDistribution,
}

impl EntryLaw {
    pub fn homogeneous(dist: EntryDistribution) -> Self {
        Self {
            groups: Vec::new(),
            rest: dist,
        }
    }

    /// The first `groups[0].0` rows follow `groups[0].1`, and so on; rows past
    /// the listed groups follow `rest`.
    pub fn grouped(groups: Vec<(usize, EntryDistribution)>, rest: EntryDistribution) -> Self {
        Self { groups, rest }
    }

    pub fn distribution_of_row(&self, row: usize) -> &EntryDistribution {
        let mut start = 0;
        for (count, dist) in &self.groups {
            if row < start + count {
                return dist;
            }
            start += count;
        }
        &self.rest
    }

    /// Per-row fourth moments γ_{4i}.
    pub fn fourth_moments(&self, rows: usize) -> Vec<f64> {
        (0..rows).map(|r| self.distribution_of_row(r).fourth_moment()).collect()
    }
}

impl From<EntryDistribution> for EntryLaw {
    fn from(dist: EntryDistribution) -> Self {
        Self::homogeneous(dist)
    }
}

/// Seed for replication `index` under `master`: SplitMix64 finaliser applied to
/// `master ^ splitmix(index + 1)`. Distinct indices give distinct streams.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(master ^ mix(index.wrapping_add(1)))
}

/// A rows×cols matrix of independent entries, deterministic given `seed`.
/// Entries are generated row by row.
pub fn draw_data<T: Real>(rows: usize, cols: usize, law: &EntryLaw, seed: u64) -> Matrix<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let dist = law.distribution_of_row(r);
        for _ in 0..cols {
            data.push(T::lit(dist.sample(&mut rng)));
        }
    }
    Matrix::from_vec(rows, cols, data).expect("buffer sized rows*cols")
}

/// A p×p sample covariance with its provenance.
#[derive(Clone, Debug)]
pub struct SampleCovariance<T> {
    pub matrix: Matrix<T>,
    pub n: usize,
    pub centered: bool,
}

/// `(1/n) Y Y^T`, or `(1/n) Y Υ Y^T` with `Υ = I − (1/n)11^T` when centered,
/// for an observed p×n matrix Y.
pub fn covariance_of_observations<T: Real>(y: &Matrix<T>, centered: bool) -> Result<SampleCovariance<T>> {
    let n = y.cols();
    if n == 0 {
        return Err(SpectraError::Shape("data has no columns".into()));
    }
    if y.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(SpectraError::Domain("data contains non-finite values".into()));
    }
    let inv_n = T::one() / T::of_usize(n);
    let matrix = if centered {
        let mut yc = y.clone();
        for i in 0..yc.rows() {
            let row = yc.row_mut(i);
            let mean = row.iter().copied().sum::<T>() * inv_n;
            row.iter_mut().for_each(|v| *v -= mean);
        }
        yc.gram_rows(inv_n)
    } else {
        y.gram_rows(inv_n)
    };
    Ok(SampleCovariance { matrix, n, centered })
}

/// Sample covariance `(1/n) Γ X X^T Γ^T` (or its centered version) for data
/// drawn under a precomputed Γ.
pub fn sample_covariance_with_gamma<T: Real>(
    gamma: &Matrix<T>,
    data: &Matrix<T>,
    centered: bool,
) -> Result<SampleCovariance<T>> {
    if data.rows() != gamma.cols() {
        return Err(SpectraError::Shape(format!(
            "data has {} rows, model needs p+l = {}",
            data.rows(),
            gamma.cols()
        )));
    }
    let y = if gamma.is_square() && gamma.is_diagonal() {
        data.scale_rows(&gamma.diagonal())
    } else {
        gamma.matmul(data)?
    };
    covariance_of_observations(&y, centered)
}

pub fn sample_covariance<T: Real>(
    model: &PopulationCovariance<T>,
    data: &Matrix<T>,
    centered: bool,
) -> Result<SampleCovariance<T>> {
    sample_covariance_with_gamma(&model.gamma_matrix(), data, centered)
}

/// Ordered sample eigenvalues with eigenvectors (columns).
#[derive(Clone, Debug)]
pub struct SampleSpectrum<T> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: Matrix<T>,
    pub n: usize,
    pub p: usize,
    pub centered: bool,
}

impl<T: Real> SampleSpectrum<T> {
    /// Sample eigenvector ξ_i (zero based).
    pub fn eigenvector(&self, i: usize) -> Vec<T> {
        self.eigenvectors.column(i)
    }
}

fn check_symmetric<T: Real>(m: &Matrix<T>) -> Result<()> {
    let tol = T::tol(1e-10) * m.max_abs().max(T::one());
    if !m.is_symmetric(tol) {
        return Err(SpectraError::Shape("covariance matrix is not symmetric".into()));
    }
    Ok(())
}

fn clamp_nonnegative<T: Real>(values: &mut [T]) {
    values.iter_mut().for_each(|v| *v = v.max(T::zero()));
}

/// Full eigendecomposition of a sample covariance, eigenvalues descending and
/// clamped at zero, eigenvectors with their largest component positive.
pub fn spectrum<T: Real>(cov: &SampleCovariance<T>) -> Result<SampleSpectrum<T>> {
    check_symmetric(&cov.matrix)?;
    let eig = symmetric_eigen(&cov.matrix)?;
    let mut eigenvalues = eig.values;
    clamp_nonnegative(&mut eigenvalues);
    Ok(SampleSpectrum {
        eigenvalues,
        eigenvectors: eig.vectors,
        n: cov.n,
        p: cov.matrix.rows(),
        centered: cov.centered,
    })
}

/// Eigenvalues only, descending and clamped at zero.
pub fn eigenvalues<T: Real>(cov: &SampleCovariance<T>) -> Result<Vec<T>> {
    check_symmetric(&cov.matrix)?;
    let mut values = symmetric_eigenvalues(&cov.matrix)?;
    clamp_nonnegative(&mut values);
    Ok(values)
}

/// Reads an observed p×n matrix from CSV text (one variable per row). A
/// leading non-numeric row is treated as a header and skipped.
pub fn parse_observations_csv(text: &str) -> Result<Matrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if rows.is_empty() => continue,
            Err(e) => {
                return Err(SpectraError::Parse(format!("line {}: {e}", lineno + 1)));
            }
        }
    }
    if rows.is_empty() {
        return Err(SpectraError::Parse("no numeric rows".into()));
    }
    Matrix::from_rows(&rows)
}

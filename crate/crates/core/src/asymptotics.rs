//! Deterministic limit objects for divergent spikes: the Stieltjes fixed point
//! `m̃_θ(z)`, the refined spike location θ_i, its Taylor approximation, the
//! CLT variances and the quadratic-form statistic.
//!
//! All integrals against the bulk distribution are empirical averages over
//! the supplied bulk eigenvalues, and the variances are finite-p plug-ins.

use serde::{Deserialize, Serialize};

use crate::covmodel::PopulationCovariance;
use crate::error::{Result, SpectraError};
use crate::linalg::{dot, norm, Cholesky, Matrix};
use crate::scalar::Real;
use crate::stats::normal_quantile;

#[derive(Clone, Copy, Debug)]
pub struct FixedPointOptions {
    pub damping: f64,
    pub max_iter: usize,
    pub step_tol: f64,
    pub residual_tol: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            max_iter: 10_000,
            step_tol: 1e-12,
            residual_tol: 1e-10,
        }
    }
}

/// Right-hand side of the fixed-point equation,
/// `−(z − (1/n) Σ_j μ_j / (θ + m μ_j))^{-1}`.
fn fixed_point_map<T: Real>(bulk: &[T], n: T, theta: T, z: T, m: T) -> T {
    let trace: T = bulk.iter().map(|&mu| mu / (theta + m * mu)).sum();
    -T::one() / (z - trace / n)
}

/// Solves `m = −(z − (1/n) tr((I + mΣ_1/θ)^{-1} Σ_1/θ))^{-1}` for real `z`,
/// where the nonzero eigenvalues of Σ_1 are `bulk`.
pub fn stieltjes_fixed_point<T: Real>(bulk: &[T], n: usize, theta: T, z: T) -> Result<T> {
    stieltjes_fixed_point_with(bulk, n, theta, z, &FixedPointOptions::default())
}

pub fn stieltjes_fixed_point_with<T: Real>(
    bulk: &[T],
    n: usize,
    theta: T,
    z: T,
    opts: &FixedPointOptions,
) -> Result<T> {
    if !(theta > T::zero()) || !(z > T::zero()) || n == 0 {
        return Err(SpectraError::Domain(format!(
            "fixed point needs theta > 0, z > 0, n >= 1 (theta={theta}, z={z}, n={n})"
        )));
    }
    let nn = T::of_usize(n);
    let damping = T::lit(opts.damping);
    let step_tol = T::tol(opts.step_tol);
    let residual_tol = T::tol(opts.residual_tol);
    let mut m = -T::one() / z;
    for _ in 0..opts.max_iter {
        let g = fixed_point_map(bulk, nn, theta, z, m);
        let next = (T::one() - damping) * m + damping * g;
        if !next.is_finite() {
            break;
        }
        let step = (next - m).abs();
        m = next;
        if step <= step_tol {
            let residual = (m - fixed_point_map(bulk, nn, theta, z, m)).abs();
            if residual <= residual_tol {
                return Ok(m);
            }
        }
    }
    Err(SpectraError::FixedPoint(format!(
        "no convergence for theta={theta}, z={z} after {} iterations",
        opts.max_iter
    )))
}

/// Refined limit θ_i of a spiked sample eigenvalue.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SpikeLimit<T> {
    pub theta: T,
    pub mu: T,
    /// The `f · f_i` term of the Taylor expansion of θ/μ.
    pub correction: T,
    /// `|m̃_θ(1) + θ/μ|` evaluated at the returned θ.
    pub residual: T,
}

/// `θ = μ (1 + (1/n) Σ_j μ_j / (μ − μ_j))`, checked against the fixed point.
pub fn spike_limit_closed_form<T: Real>(mu: T, bulk: &[T], n: usize) -> Result<SpikeLimit<T>> {
    if n == 0 {
        return Err(SpectraError::Domain("n must be positive".into()));
    }
    if let Some(&top) = bulk
        .iter()
        .max_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal))
    {
        if !(mu > top) {
            return Err(SpectraError::Domain(format!(
                "spike {mu} not separated from bulk maximum {top}"
            )));
        }
    }
    let nn = T::of_usize(n);
    let integral: T = bulk.iter().map(|&t| t / (mu - t)).sum::<T>() / nn;
    let theta = mu * (T::one() + integral);
    let m = stieltjes_fixed_point(bulk, n, theta, T::one())?;
    let correction = if bulk.is_empty() {
        T::zero()
    } else {
        let t = taylor_terms(mu, bulk, n)?;
        t.f * t.f_i
    };
    Ok(SpikeLimit {
        theta,
        mu,
        correction,
        residual: (m + theta / mu).abs(),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TaylorTerms<T> {
    /// Mean bulk eigenvalue.
    pub f: T,
    /// `(p−K)/(n μ_i)`.
    pub f_i: T,
    /// `μ_i (1 + f f_i)`.
    pub theta_approx: T,
}

pub fn taylor_terms<T: Real>(mu: T, bulk: &[T], n: usize) -> Result<TaylorTerms<T>> {
    if bulk.is_empty() {
        return Err(SpectraError::Domain("Taylor terms need a nonempty bulk (p > K)".into()));
    }
    if n == 0 || !(mu > T::zero()) {
        return Err(SpectraError::Domain("need n >= 1 and mu > 0".into()));
    }
    let count = T::of_usize(bulk.len());
    let f = bulk.iter().copied().sum::<T>() / count;
    let f_i = count / (T::of_usize(n) * mu);
    Ok(TaylorTerms {
        f,
        f_i,
        theta_approx: mu * (T::one() + f * f_i),
    })
}

/// Spike CLT covariance: `σ_i² = Σ_j (γ_4j − 3) u_ij⁴ + 2` on the diagonal and
/// `σ_ij = Σ_s (γ_4s − 3) u_is² u_js²` off it.
#[derive(Clone, Debug)]
pub struct CltVariance<T> {
    pub sigma_sq: Vec<T>,
    pub cross: Matrix<T>,
}

pub fn clt_variance<T: Real>(u_rows: &Matrix<T>, gamma4: &[T]) -> Result<CltVariance<T>> {
    if gamma4.len() != u_rows.cols() {
        return Err(SpectraError::Shape(format!(
            "{} fourth moments for {} columns",
            gamma4.len(),
            u_rows.cols()
        )));
    }
    for i in 0..u_rows.rows() {
        let nrm = norm(u_rows.row(i));
        if (nrm - T::one()).abs() > T::tol(1e-8) {
            return Err(SpectraError::Orthogonality(format!("row {i} has norm {nrm}")));
        }
    }
    let k = u_rows.rows();
    let excess: Vec<T> = gamma4.iter().map(|&g| g - T::lit(3.0)).collect();
    let squares = u_rows.map(|v| v * v);
    let mut cross = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let s: T = squares
                .row(i)
                .iter()
                .zip(squares.row(j))
                .zip(&excess)
                .map(|((&a, &b), &e)| e * a * b)
                .sum();
            let value = if i == j { s + T::lit(2.0) } else { s };
            cross[(i, j)] = value;
            cross[(j, i)] = value;
        }
    }
    Ok(CltVariance {
        sigma_sq: cross.diagonal(),
        cross,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub lower: T,
    pub upper: T,
}

/// Confidence interval for θ_i from inverting `√n (λ_i − θ_i)/θ_i ~ N(0, σ_i²)`:
/// `[λ/(1 + zσ/√n), λ/(1 − zσ/√n)]`, the upper end unbounded when
/// `zσ/√n ≥ 1`.
pub fn spike_ci<T: Real>(lambda: T, sigma: T, n: usize, level: f64) -> Result<Interval<T>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(SpectraError::Domain(format!("level {level} outside (0, 1)")));
    }
    if sigma < T::zero() || !sigma.is_finite() {
        return Err(SpectraError::Domain(format!("sigma must be nonnegative, got {sigma}")));
    }
    if n == 0 {
        return Err(SpectraError::Domain("n must be positive".into()));
    }
    let z = T::lit(normal_quantile((1.0 + level) / 2.0));
    let half = z * sigma / T::of_usize(n).sqrt();
    let upper_den = T::one() - half;
    Ok(Interval {
        lower: lambda / (T::one() + half),
        upper: if upper_den > T::zero() {
            lambda / upper_den
        } else {
            T::infinity()
        },
    })
}

/// Σ_1 = U_2^T Λ_P U_2 kept in factored form.
#[derive(Clone, Debug)]
pub struct BulkOperator<T> {
    u_bulk: Matrix<T>,
    bulk: Vec<T>,
}

impl<T: Real> BulkOperator<T> {
    pub fn new(u_bulk: Matrix<T>, bulk: Vec<T>) -> Result<Self> {
        if u_bulk.rows() != bulk.len() {
            return Err(SpectraError::Shape(format!(
                "{} bulk rows for {} eigenvalues",
                u_bulk.rows(),
                bulk.len()
            )));
        }
        Ok(Self { u_bulk, bulk })
    }

    pub fn from_model(model: &PopulationCovariance<T>) -> Self {
        Self {
            u_bulk: model.u_bulk_rows(),
            bulk: model.bulk().to_vec(),
        }
    }

    /// Σ_1 = 0 acting on `dim` coordinates.
    pub fn zero(dim: usize) -> Self {
        Self {
            u_bulk: Matrix::zeros(0, dim),
            bulk: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.u_bulk.cols()
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.bulk
    }

    /// `Λ_P^{1/2} U_2`, whose Gram matrix is Σ_1.
    pub fn root(&self) -> Matrix<T> {
        let roots: Vec<T> = self.bulk.iter().map(|v| v.sqrt()).collect();
        self.u_bulk.scale_rows(&roots)
    }
}

/// Standardised quadratic form
/// `√n/σ̃_1 (w_1^T X (nI − X^T Σ_1 X/θ)^{-1} X^T w_1 + m̃_θ(1))`, or, when `w2`
/// is given, the cross form `√n/σ̃_12 w_1^T X (nI − X^T Σ_1 X/θ)^{-1} X^T w_2`.
/// `gamma4` holds the fourth moments of the rows of X.
pub fn quadratic_form_statistic<T: Real>(
    w1: &[T],
    w2: Option<&[T]>,
    data: &Matrix<T>,
    bulk: &BulkOperator<T>,
    theta: T,
    gamma4: &[T],
) -> Result<T> {
    let dim = data.rows();
    let n = data.cols();
    if bulk.dim() != dim || w1.len() != dim || gamma4.len() != dim || w2.is_some_and(|w| w.len() != dim) {
        return Err(SpectraError::Shape(format!(
            "vectors, fourth moments and Σ_1 must act on the {dim} rows of X"
        )));
    }
    if !(theta > T::zero()) {
        return Err(SpectraError::Domain("theta must be positive".into()));
    }
    let unit_tol = T::tol(1e-8);
    for w in std::iter::once(w1).chain(w2) {
        if (norm(w) - T::one()).abs() > unit_tol {
            return Err(SpectraError::Domain("w vectors must have unit norm".into()));
        }
        let leak = bulk.u_bulk.mul_vec(w).iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if leak > unit_tol {
            return Err(SpectraError::Domain(format!(
                "w is not orthogonal to the bulk rows of U (max |U_2 w| = {leak})"
            )));
        }
    }
    if let Some(w2) = w2 {
        if dot(w1, w2).abs() > unit_tol {
            return Err(SpectraError::Domain("w_1 and w_2 must be orthogonal".into()));
        }
    }

    let nn = T::of_usize(n);
    let y1 = data.tr_mul_vec(w1);
    let solved = if bulk.eigenvalues().is_empty() {
        y1.iter().map(|&v| v / nn).collect()
    } else {
        // A = nI − B^T B / θ with B = Λ_P^{1/2} U_2 X.
        let b = bulk.root().matmul(data)?;
        let mut a = b.transpose().gram_rows(-T::one() / theta);
        for i in 0..n {
            a[(i, i)] += nn;
        }
        let chol = Cholesky::factor(&a).map_err(|_| {
            SpectraError::Numerical(format!(
                "resolvent singular: theta = {theta} lies inside the scaled bulk spectrum"
            ))
        })?;
        chol.solve(&y1)
    };
    let three = T::lit(3.0);
    match w2 {
        None => {
            let quad = dot(&y1, &solved);
            let m = stieltjes_fixed_point(bulk.eigenvalues(), n, theta, T::one())?;
            let sigma_sq: T = w1.iter().zip(gamma4).map(|(&w, &g)| (g - three) * w.powi(4)).sum::<T>() + T::lit(2.0);
            Ok(nn.sqrt() / sigma_sq.sqrt() * (quad + m))
        }
        Some(w2) => {
            let y2 = data.tr_mul_vec(w2);
            let quad = dot(&y2, &solved);
            let sigma_sq: T = w1
                .iter()
                .zip(w2)
                .zip(gamma4)
                .map(|((&a, &b), &g)| (g - three) * a * a * b * b)
                .sum::<T>()
                + T::one();
            Ok(nn.sqrt() / sigma_sq.sqrt() * quad)
        }
    }
}

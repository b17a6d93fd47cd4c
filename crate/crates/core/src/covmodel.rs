//! Population covariance models in the factored form `Γ = V Λ^{1/2} U`.
//!
//! `Σ = ΓΓ^T` has eigenvalues `spikes ++ bulk`; `V` (p×p) carries the
//! population eigenvectors and `U` (p×(p+l)) the right singular vectors that
//! mix the independent coordinates of the data.

use crate::error::{Result, SpectraError};
use crate::linalg::{symmetric_eigen, symmetric_eigenvalues, Matrix};
use crate::scalar::Real;

/// Max-norm tolerance for `UU^T = I` and `VV^T = I`.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// An orthogonal factor supplied to a model constructor.
#[derive(Clone, Debug)]
pub enum Factor<T> {
    Identity,
    Explicit(Matrix<T>),
}

#[derive(Clone, Debug)]
pub struct PopulationCovariance<T> {
    p: usize,
    l: usize,
    spikes: Vec<T>,
    bulk: Vec<T>,
    u_factor: Matrix<T>,
    v_factor: Matrix<T>,
}

/// Loadings and noise transform of `Y = ΛF + TZ`.
#[derive(Clone, Debug)]
pub struct FactorModelSpec<T> {
    /// p×K loading matrix.
    pub loadings: Matrix<T>,
    /// p×p noise transform.
    pub noise_transform: Matrix<T>,
}

impl<T: Real> PopulationCovariance<T> {
    pub fn p(&self) -> usize {
        self.p
    }

    /// Column excess of Γ: Γ is p×(p+l).
    pub fn l(&self) -> usize {
        self.l
    }

    /// Number of spikes.
    pub fn k(&self) -> usize {
        self.spikes.len()
    }

    pub fn spikes(&self) -> &[T] {
        &self.spikes
    }

    pub fn bulk(&self) -> &[T] {
        &self.bulk
    }

    /// All population eigenvalues, descending.
    pub fn eigenvalues(&self) -> Vec<T> {
        self.spikes.iter().chain(&self.bulk).copied().collect()
    }

    pub fn u_factor(&self) -> &Matrix<T> {
        &self.u_factor
    }

    pub fn v_factor(&self) -> &Matrix<T> {
        &self.v_factor
    }

    /// First K rows of U.
    pub fn u_spike_rows(&self) -> Matrix<T> {
        self.u_factor.row_block(0, self.k())
    }

    /// Remaining p−K rows of U.
    pub fn u_bulk_rows(&self) -> Matrix<T> {
        self.u_factor.row_block(self.k(), self.p)
    }

    /// Population eigenvector `v_i` (column `i` of V, zero based).
    pub fn eigenvector(&self, i: usize) -> Vec<T> {
        self.v_factor.column(i)
    }

    /// True when U = V^T, i.e. Γ is the symmetric square root of Σ. This is
    /// the setting where sample eigenvectors estimate the CLT variance.
    pub fn is_symmetric_root(&self) -> bool {
        self.l == 0 && self.u_factor.max_abs_diff(&self.v_factor.transpose()) <= T::tol(ORTHOGONALITY_TOL)
    }

    /// `Γ = V Λ^{1/2} U`, a p×(p+l) matrix.
    pub fn gamma_matrix(&self) -> Matrix<T> {
        let roots: Vec<T> = self.eigenvalues().iter().map(|v| v.sqrt()).collect();
        let scaled_u = self.u_factor.scale_rows(&roots);
        if self.v_factor.is_identity() {
            return scaled_u;
        }
        self.v_factor.matmul(&scaled_u).expect("V is p×p and U is p×(p+l)")
    }

    /// `Σ = ΓΓ^T`.
    pub fn covariance(&self) -> Matrix<T> {
        if self.v_factor.is_identity() && self.u_factor.is_identity() {
            return Matrix::from_diagonal(&self.eigenvalues());
        }
        self.gamma_matrix().gram_rows(T::one())
    }
}

fn check_nonincreasing<T: Real>(values: &[T], what: &str) -> Result<()> {
    if values.windows(2).any(|w| w[0] < w[1]) {
        return Err(SpectraError::Ordering(format!("{what} must be non-increasing")));
    }
    Ok(())
}

fn check_orthonormal_rows<T: Real>(m: &Matrix<T>, what: &str) -> Result<()> {
    let err = m.row_orthonormality_error();
    if !(err <= T::tol(ORTHOGONALITY_TOL)) {
        return Err(SpectraError::Orthogonality(format!("{what}: max |MM^T - I| = {err}")));
    }
    Ok(())
}

/// Validated model from spike and bulk eigenvalues plus orthogonal factors.
/// Ties are allowed inside each block; the spike block must dominate the bulk.
pub fn build_spiked_diagonal<T: Real>(
    spikes: &[T],
    bulk: &[T],
    u: Factor<T>,
    v: Factor<T>,
) -> Result<PopulationCovariance<T>> {
    let p = spikes.len() + bulk.len();
    if p == 0 {
        return Err(SpectraError::Domain("model needs at least one eigenvalue".into()));
    }
    if spikes.iter().chain(bulk).any(|&x| !(x > T::zero()) || !x.is_finite()) {
        return Err(SpectraError::Domain("eigenvalues must be positive and finite".into()));
    }
    check_nonincreasing(spikes, "spikes")?;
    check_nonincreasing(bulk, "bulk")?;
    if let (Some(&low_spike), Some(&top_bulk)) = (spikes.last(), bulk.first()) {
        if low_spike < top_bulk {
            return Err(SpectraError::Ordering(format!(
                "smallest spike {low_spike} below largest bulk eigenvalue {top_bulk}"
            )));
        }
    }

    let u_factor = match u {
        Factor::Identity => Matrix::identity(p),
        Factor::Explicit(m) => {
            if m.rows() != p || m.cols() < p {
                return Err(SpectraError::Shape(format!(
                    "U must be {p}x(p+l), got {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
            check_orthonormal_rows(&m, "U")?;
            m
        }
    };
    let v_factor = match v {
        Factor::Identity => Matrix::identity(p),
        Factor::Explicit(m) => {
            if m.shape() != (p, p) {
                return Err(SpectraError::Shape(format!(
                    "V must be {p}x{p}, got {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
            check_orthonormal_rows(&m, "V")?;
            m
        }
    };
    Ok(PopulationCovariance {
        p,
        l: u_factor.cols() - p,
        spikes: spikes.to_vec(),
        bulk: bulk.to_vec(),
        u_factor,
        v_factor,
    })
}

/// Orthonormal basis whose first column is `e/√p` and whose remaining
/// columns are the Helmert contrasts.
fn helmert_basis<T: Real>(p: usize) -> Matrix<T> {
    let mut h = Matrix::zeros(p, p);
    let lead = T::one() / T::of_usize(p).sqrt();
    for i in 0..p {
        h[(i, 0)] = lead;
    }
    for k in 1..p {
        let norm = (T::of_usize(k) * T::of_usize(k + 1)).sqrt();
        for i in 0..k {
            h[(i, k)] = T::one() / norm;
        }
        h[(k, k)] = -T::of_usize(k) / norm;
    }
    h
}

/// Intraclass correlation model `Σ = (1−ρ)I + ρee^T` with Γ its symmetric root.
pub fn build_intraclass<T: Real>(p: usize, rho: T) -> Result<PopulationCovariance<T>> {
    if !(rho > T::zero() && rho < T::one()) {
        return Err(SpectraError::Domain(format!("rho must lie in (0, 1), got {rho}")));
    }
    if p < 2 {
        return Err(SpectraError::Domain("intraclass model needs p >= 2".into()));
    }
    let spike = T::of_usize(p) * rho + (T::one() - rho);
    let bulk = vec![T::one() - rho; p - 1];
    let v = helmert_basis::<T>(p);
    let u = v.transpose();
    build_spiked_diagonal(&[spike], &bulk, Factor::Explicit(u), Factor::Explicit(v))
}

/// Factor model `Y = ΛF + TZ` with `Γ = (Λ | T)`, rewritten in the
/// `V Λ^{1/2} U` form through the eigendecomposition of `ΓΓ^T`.
pub fn build_factor_model<T: Real>(spec: &FactorModelSpec<T>) -> Result<PopulationCovariance<T>> {
    let loadings = &spec.loadings;
    let noise = &spec.noise_transform;
    let p = loadings.rows();
    let k = loadings.cols();
    if noise.shape() != (p, p) {
        return Err(SpectraError::Shape(format!(
            "noise transform must be {p}x{p}, got {}x{}",
            noise.rows(),
            noise.cols()
        )));
    }
    if k > p {
        return Err(SpectraError::Rank(format!("{k} factors exceed dimension {p}")));
    }
    if k > 0 {
        let gram = loadings.transpose().gram_rows(T::one());
        let sv = symmetric_eigenvalues(&gram)?;
        let top = sv[0];
        let bottom = sv[k - 1];
        if !(top > T::zero()) || bottom <= top * T::tol(1e-12) {
            return Err(SpectraError::Rank(format!("loadings have numerical rank below {k}")));
        }
    }

    let gamma = Matrix::from_fn(
        p,
        p + k,
        |i, j| {
            if j < k {
                loadings[(i, j)]
            } else {
                noise[(i, j - k)]
            }
        },
    );
    let sigma = gamma.gram_rows(T::one());
    let eig = symmetric_eigen(&sigma)?;
    let floor = eig.values[0] * T::tol(1e-12);
    if eig.values.iter().any(|&v| v <= floor) {
        return Err(SpectraError::Rank("noise transform must be nonsingular".into()));
    }
    // U = D^{-1/2} V^T Γ has orthonormal rows because V^T ΓΓ^T V = D.
    let inv_roots: Vec<T> = eig.values.iter().map(|v| T::one() / v.sqrt()).collect();
    let u = eig.vectors.transpose().matmul(&gamma)?.scale_rows(&inv_roots);
    let spikes = eig.values[..k].to_vec();
    let bulk = eig.values[k..].to_vec();
    build_spiked_diagonal(&spikes, &bulk, Factor::Explicit(u), Factor::Explicit(eig.vectors))
}

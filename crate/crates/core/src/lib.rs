//! Spectral inference for sample covariance matrices whose leading population
//! eigenvalues diverge.
//!
//! The crate covers the population model `Σ = ΓΓ^T` with `Γ = VΛ^{1/2}U`,
//! data generation, the deterministic limits of spiked sample eigenvalues,
//! the Tracy-Widom law of the largest non-spiked eigenvalue, the estimator of
//! the number of spikes and eigenvector diagnostics.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod covmodel;
pub mod eigcheck;
pub mod error;
pub mod linalg;
pub mod sampler;
pub mod scalar;
pub mod spikecount;
pub mod stats;
pub mod twlaw;

pub use asymptotics::{
    clt_variance, quadratic_form_statistic, spike_ci, spike_limit_closed_form, stieltjes_fixed_point, taylor_terms,
    BulkOperator, CltVariance, FixedPointOptions, Interval, SpikeLimit, TaylorTerms,
};
pub use covmodel::{
    build_factor_model, build_intraclass, build_spiked_diagonal, Factor, FactorModelSpec, PopulationCovariance,
};
pub use eigcheck::{
    alignment, completeness, fourth_moment_functional, sigma_sq_plugin, subspace_alignment, AlignmentReport,
};
pub use error::{Result, SpectraError};
pub use linalg::{symmetric_eigen, symmetric_eigenvalues, Matrix, SymmetricEigen};
pub use sampler::{
    derive_seed, draw_data, sample_covariance, spectrum, DiscreteTable, EntryDistribution, EntryLaw, SampleCovariance,
    SampleSpectrum,
};
pub use scalar::Real;
pub use spikecount::{
    count_factors, estimate_k, estimate_k_from_eigenvalues, f_hat, initial_bound, sigma_hat, EstimatorOptions, Growth,
    SpikeInference,
};
pub use twlaw::{bulk_edge, edge_statistic, tw1_cdf, tw1_quantile, BulkLaw, TracyWidom1};

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type PopulationCovariance64 = PopulationCovariance<f64>;
pub type PopulationCovariance32 = PopulationCovariance<f32>;
pub type SampleSpectrum64 = SampleSpectrum<f64>;
pub type SampleSpectrum32 = SampleSpectrum<f32>;
pub type SpikeInference64 = SpikeInference<f64>;
pub type SpikeInference32 = SpikeInference<f32>;
pub type BulkLaw64 = BulkLaw<f64>;

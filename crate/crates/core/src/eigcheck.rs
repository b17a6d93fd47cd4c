//! Diagnostics comparing population eigenvectors `v_i` (columns of V) with
//! sample eigenvectors `ξ_i`. Indices are 1-based, matching the eigenvalue
//! labels λ_1 ≥ λ_2 ≥ ….

use std::ops::RangeInclusive;

use serde::Serialize;

use crate::covmodel::PopulationCovariance;
use crate::error::{Result, SpectraError};
use crate::linalg::dot;
use crate::sampler::SampleSpectrum;
use crate::scalar::Real;

fn check_shapes<T: Real>(model: &PopulationCovariance<T>, spectrum: &SampleSpectrum<T>) -> Result<()> {
    if model.p() != spectrum.p {
        return Err(SpectraError::Shape(format!(
            "model dimension {} differs from spectrum dimension {}",
            model.p(),
            spectrum.p
        )));
    }
    Ok(())
}

fn check_index(i: usize, limit: usize, what: &str) -> Result<()> {
    if i == 0 || i > limit {
        return Err(SpectraError::Domain(format!("{what} index {i} outside 1..={limit}")));
    }
    Ok(())
}

/// `(v_j^T ξ_i)²` for population index `j` and sample index `i`.
pub fn cross_alignment<T: Real>(
    model: &PopulationCovariance<T>,
    spectrum: &SampleSpectrum<T>,
    j: usize,
    i: usize,
) -> Result<T> {
    check_shapes(model, spectrum)?;
    check_index(j, model.p(), "population")?;
    check_index(i, spectrum.p, "sample")?;
    let ip = dot(&model.eigenvector(j - 1), &spectrum.eigenvector(i - 1));
    Ok(ip * ip)
}

/// `(v_i^T ξ_i)²` for a spike index `1 ≤ i ≤ K`.
pub fn alignment<T: Real>(model: &PopulationCovariance<T>, spectrum: &SampleSpectrum<T>, i: usize) -> Result<T> {
    check_index(i, model.k(), "spike")?;
    cross_alignment(model, spectrum, i, i)
}

/// Mean over `k` in `group` of `v_k^T (Σ_{j∈group} ξ_j ξ_j^T) v_k`, the share
/// of the population eigenvectors captured by the matching sample eigenspace.
pub fn subspace_alignment<T: Real>(
    model: &PopulationCovariance<T>,
    spectrum: &SampleSpectrum<T>,
    group: RangeInclusive<usize>,
) -> Result<T> {
    check_shapes(model, spectrum)?;
    if group.is_empty() {
        return Err(SpectraError::Domain("empty eigenvector group".into()));
    }
    let (start, end) = (*group.start(), *group.end());
    check_index(start, model.p(), "group")?;
    check_index(end, model.p(), "group")?;
    let xis: Vec<Vec<T>> = group.clone().map(|j| spectrum.eigenvector(j - 1)).collect();
    let mut total = T::zero();
    for k in group {
        let v = model.eigenvector(k - 1);
        total += xis.iter().map(|xi| dot(&v, xi).powi(2)).sum::<T>();
    }
    Ok(total / T::of_usize(end - start + 1))
}

/// `Σ_j (v_j^T ξ_i)²`, which is 1 for orthonormal V and unit ξ_i.
pub fn completeness<T: Real>(model: &PopulationCovariance<T>, spectrum: &SampleSpectrum<T>, i: usize) -> Result<T> {
    check_shapes(model, spectrum)?;
    check_index(i, spectrum.p, "sample")?;
    let xi = spectrum.eigenvector(i - 1);
    Ok(model.v_factor().tr_mul_vec(&xi).iter().map(|&c| c * c).sum())
}

/// `Σ_j ξ_ij⁴`.
pub fn fourth_moment_functional<T: Real>(spectrum: &SampleSpectrum<T>, i: usize) -> Result<T> {
    check_index(i, spectrum.p, "sample")?;
    Ok(spectrum.eigenvector(i - 1).iter().map(|&c| c.powi(4)).sum())
}

/// Plug-in `σ̂_i² = (γ_4 − 3) Σ_j ξ_ij⁴ + 2`.
pub fn sigma_sq_plugin<T: Real>(spectrum: &SampleSpectrum<T>, i: usize, gamma4: T) -> Result<T> {
    Ok((gamma4 - T::lit(3.0)) * fourth_moment_functional(spectrum, i)? + T::lit(2.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct SubspaceAlignment<T> {
    pub start: usize,
    pub end: usize,
    pub alignment: T,
}

#[derive(Clone, Debug, Serialize)]
pub struct AlignmentReport<T> {
    /// `(i, (v_i^T ξ_i)²)` for each spike.
    pub per_spike: Vec<(usize, T)>,
    /// One entry per run of tied spikes.
    pub subspaces: Vec<SubspaceAlignment<T>>,
    /// `Σ_j ξ_ij⁴` for each spike.
    pub fourth_moments: Vec<T>,
    /// `max_i |Σ_j (v_j^T ξ_i)² − 1|` over the spikes.
    pub completeness_error: T,
    /// Set when U ≠ V^T, where the fourth-moment plug-in does not estimate σ_i².
    pub plugin_outside_conditions: bool,
}

/// Groups of equal spikes as 1-based inclusive ranges.
pub fn tied_groups<T: Real>(spikes: &[T]) -> Vec<RangeInclusive<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=spikes.len() {
        if i == spikes.len() || spikes[i] != spikes[start] {
            groups.push(start + 1..=i);
            start = i;
        }
    }
    groups
}

pub fn report<T: Real>(model: &PopulationCovariance<T>, spectrum: &SampleSpectrum<T>) -> Result<AlignmentReport<T>> {
    let k = model.k();
    let mut per_spike = Vec::with_capacity(k);
    let mut fourth_moments = Vec::with_capacity(k);
    let mut completeness_error = T::zero();
    for i in 1..=k {
        per_spike.push((i, alignment(model, spectrum, i)?));
        fourth_moments.push(fourth_moment_functional(spectrum, i)?);
        completeness_error = completeness_error.max((completeness(model, spectrum, i)? - T::one()).abs());
    }
    let subspaces = tied_groups(model.spikes())
        .into_iter()
        .map(|g| {
            Ok(SubspaceAlignment {
                start: *g.start(),
                end: *g.end(),
                alignment: subspace_alignment(model, spectrum, g)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AlignmentReport {
        per_spike,
        subspaces,
        fourth_moments,
        completeness_error,
        plugin_outside_conditions: !model.is_symmetric_root(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covmodel::{build_intraclass, build_spiked_diagonal, Factor};
    use crate::linalg::Matrix;
    use crate::sampler::{spectrum, SampleCovariance};
    use approx::assert_relative_eq;

    fn population_spectrum(model: &PopulationCovariance<f64>) -> SampleSpectrum<f64> {
        spectrum(&SampleCovariance {
            matrix: model.covariance(),
            n: 1,
            centered: false,
        })
        .unwrap()
    }

    fn rotated_model() -> PopulationCovariance<f64> {
        let h = 0.5f64.sqrt();
        let mut v = Matrix::identity(6);
        v[(0, 0)] = h;
        v[(0, 1)] = h;
        v[(1, 0)] = h;
        v[(1, 1)] = -h;
        build_spiked_diagonal(
            &[50.0, 20.0],
            &[1.9, 1.5, 1.2, 1.0],
            Factor::Explicit(v.transpose()),
            Factor::Explicit(v),
        )
        .unwrap()
    }

    #[test]
    fn population_spectrum_aligns_exactly() {
        let model = rotated_model();
        let spec = population_spectrum(&model);
        for i in 1..=2 {
            assert!((alignment(&model, &spec, i).unwrap() - 1.0).abs() <= 1e-10);
            assert!((completeness(&model, &spec, i).unwrap() - 1.0).abs() <= 1e-10);
        }
        assert!(cross_alignment(&model, &spec, 2, 1).unwrap() <= 1e-10);
        let single = subspace_alignment(&model, &spec, 1..=1).unwrap();
        assert_relative_eq!(single, alignment(&model, &spec, 1).unwrap(), epsilon = 1e-14);
        assert_relative_eq!(subspace_alignment(&model, &spec, 1..=6).unwrap(), 1.0, epsilon = 1e-10);
        let rep = report(&model, &spec).unwrap();
        assert!(!rep.plugin_outside_conditions);
        assert!(rep.completeness_error <= 1e-10);
        // ξ_1 = (1/√2, 1/√2, 0, …)
        assert_relative_eq!(rep.fourth_moments[0], 0.5, epsilon = 1e-10);
        assert_relative_eq!(sigma_sq_plugin(&spec, 1, 1.8).unwrap(), 1.4, epsilon = 1e-10);
    }

    #[test]
    fn sign_invariance() {
        let model = rotated_model();
        let mut spec = population_spectrum(&model);
        let a = alignment(&model, &spec, 1).unwrap();
        for r in 0..6 {
            spec.eigenvectors[(r, 0)] = -spec.eigenvectors[(r, 0)];
        }
        assert_eq!(alignment(&model, &spec, 1).unwrap(), a);
    }

    #[test]
    fn fourth_moment_extremes() {
        let model = build_spiked_diagonal(&[5.0], &[1.0; 3], Factor::Identity, Factor::Identity).unwrap();
        let spec = population_spectrum(&model);
        assert_relative_eq!(fourth_moment_functional(&spec, 1).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(sigma_sq_plugin(&spec, 1, 1.8).unwrap(), 0.8, epsilon = 1e-14);

        let p = 40;
        let intra = build_intraclass(p, 0.5).unwrap();
        let spec = population_spectrum(&intra);
        let f = fourth_moment_functional(&spec, 1).unwrap();
        assert_relative_eq!(f, 1.0 / p as f64, epsilon = 1e-10);
        let s = sigma_sq_plugin(&spec, 1, 1.8).unwrap();
        assert!((s - 2.0).abs() <= 1.2 / p as f64 + 1e-10);
    }

    #[test]
    fn plugin_flag_for_general_v() {
        let h = 0.5f64.sqrt();
        let mut v = Matrix::identity(4);
        v[(0, 0)] = h;
        v[(0, 1)] = h;
        v[(1, 0)] = h;
        v[(1, 1)] = -h;
        let model = build_spiked_diagonal(&[9.0, 4.0], &[1.0, 1.0], Factor::Identity, Factor::Explicit(v)).unwrap();
        let rep = report(&model, &population_spectrum(&model)).unwrap();
        assert!(rep.plugin_outside_conditions);
    }

    #[test]
    fn tied_spike_groups() {
        assert_eq!(tied_groups(&[5.0, 5.0, 3.0]), vec![1..=2, 3..=3]);
        assert!(tied_groups::<f64>(&[]).is_empty());
    }

    #[test]
    fn index_errors() {
        let model = rotated_model();
        let spec = population_spectrum(&model);
        assert!(alignment(&model, &spec, 0).is_err());
        assert!(alignment(&model, &spec, 3).is_err());
        #[allow(clippy::reversed_empty_ranges)]
        let empty = 3..=2;
        assert!(subspace_alignment(&model, &spec, empty).is_err());
    }
}

//! Bulk edge of the non-spiked part and the Tracy-Widom (β = 1) law of the
//! largest non-spiked sample eigenvalue.

use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpectraError};
use crate::scalar::Real;

/// Environment variable naming an alternative two-column `x F(x)` table.
pub const TW1_TABLE_ENV: &str = "SPIKE_SPECTRA_TW1_TABLE";

const EMBEDDED_TABLE: &str = include_str!("../data/tw1_cdf.txt");

/// Deterministic edge data of the bulk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BulkLaw<T> {
    /// Right endpoint γ_+ of the limiting spectral distribution.
    pub gamma_plus: T,
    /// `d = −m(γ_+)`.
    pub d: T,
    /// Tracy-Widom scale, `σ_n³ = d^{-3} (1 + ratio ∫ (λd/(1−λd))³ dF)`.
    pub sigma_n: T,
    pub ratio: T,
}

/// Edge law with `ratio = (p − K)/n = bulk.len()/n`.
pub fn bulk_edge<T: Real>(bulk: &[T], n: usize) -> Result<BulkLaw<T>> {
    if n == 0 {
        return Err(SpectraError::Domain("n must be positive".into()));
    }
    bulk_edge_with_ratio(bulk, T::of_usize(bulk.len()) / T::of_usize(n))
}

/// Locates the stationary point `d` of
/// `z(t) = 1/t + ratio · mean_j μ_j / (1 − μ_j t)` on `(0, 1/max μ)`
/// (the usual `z(m) = −1/m + …` parametrisation with `m = −t`), then returns
/// `γ_+ = z(d)`.
pub fn bulk_edge_with_ratio<T: Real>(bulk: &[T], ratio: T) -> Result<BulkLaw<T>> {
    if bulk.is_empty() {
        return Err(SpectraError::Domain("bulk must be nonempty".into()));
    }
    if bulk.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
        return Err(SpectraError::Domain(
            "bulk eigenvalues must be positive and finite".into(),
        ));
    }
    if !(ratio > T::zero()) || !ratio.is_finite() {
        return Err(SpectraError::Domain(format!("ratio must be positive, got {ratio}")));
    }
    let top = bulk.iter().copied().fold(T::zero(), T::max);
    let count = T::of_usize(bulk.len());
    let slope = |t: T| edge_slope(bulk, ratio, t);
    let margin = T::lit(1e-8);
    let mut lo = margin / top;
    let mut hi = (T::one() - margin) / top;
    if !(slope(lo) < T::zero() && slope(hi) > T::zero()) {
        return Err(SpectraError::Edge(format!(
            "no stationary point of z(t) in ({lo}, {hi})"
        )));
    }
    // z' is increasing on the bracket, so bisect down to adjacent floats
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let d = if slope(hi).abs() < slope(lo).abs() { hi } else { lo };
    let gamma_plus = T::one() / d + ratio * bulk.iter().map(|&l| l / (T::one() - l * d)).sum::<T>() / count;
    let cubes: T = bulk
        .iter()
        .map(|&l| {
            let r = l * d / (T::one() - l * d);
            r * r * r
        })
        .sum::<T>()
        / count;
    let sigma_n = ((T::one() + ratio * cubes) / (d * d * d)).cbrt();
    Ok(BulkLaw {
        gamma_plus,
        d,
        sigma_n,
        ratio,
    })
}

/// `z'(t)` of [`bulk_edge_with_ratio`], exposed for stationarity checks.
pub fn edge_slope<T: Real>(bulk: &[T], ratio: T, t: T) -> T {
    let count = T::of_usize(bulk.len());
    let s: T = bulk
        .iter()
        .map(|&l| {
            let r = l / (T::one() - l * t);
            r * r
        })
        .sum();
    ratio * s / count - T::one() / (t * t)
}

/// `n^{2/3} (λ − γ_+) / σ_n`.
pub fn edge_statistic<T: Real>(lambda: T, law: &BulkLaw<T>, n: usize) -> T {
    T::of_usize(n).powf(T::lit(2.0 / 3.0)) * (lambda - law.gamma_plus) / law.sigma_n
}

/// Tabulated TW1 distribution function with monotone cubic (PCHIP)
/// interpolation between nodes.
#[derive(Clone, Debug)]
pub struct TracyWidom1 {
    x: Vec<f64>,
    f: Vec<f64>,
    slopes: Vec<f64>,
}

impl TracyWidom1 {
    pub fn embedded() -> Self {
        Self::parse(EMBEDDED_TABLE).expect("embedded TW1 table is well formed")
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses whitespace separated `x F(x)` rows; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut x = Vec::new();
        let mut f = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty());
            let mut next = || -> Result<f64> {
                cols.next()
                    .ok_or_else(|| SpectraError::Parse(format!("line {}: expected two columns", lineno + 1)))?
                    .parse::<f64>()
                    .map_err(|e| SpectraError::Parse(format!("line {}: {e}", lineno + 1)))
            };
            x.push(next()?);
            f.push(next()?);
        }
        Self::new(x, f)
    }

    pub fn new(x: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if x.len() < 2 || x.len() != f.len() {
            return Err(SpectraError::Parse("TW1 table needs at least two rows".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SpectraError::Parse("TW1 abscissae must be strictly increasing".into()));
        }
        if f.windows(2).any(|w| w[1] < w[0]) || f.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(SpectraError::Parse("TW1 values must be a nondecreasing CDF".into()));
        }
        let slopes = pchip_slopes(&x, &f);
        Ok(Self { x, f, slopes })
    }

    /// Process-wide table: the file named by [`TW1_TABLE_ENV`] when set,
    /// the embedded table otherwise.
    ///
    /// # Panics
    /// If the override file cannot be read or parsed.
    pub fn global() -> &'static TracyWidom1 {
        static TABLE: OnceLock<TracyWidom1> = OnceLock::new();
        TABLE.get_or_init(|| match std::env::var_os(TW1_TABLE_ENV) {
            Some(path) => {
                Self::from_file(&path).unwrap_or_else(|e| panic!("invalid TW1 table {}: {e}", path.to_string_lossy()))
            }
            None => Self::embedded(),
        })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x.iter().copied().zip(self.f.iter().copied())
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let last = self.x.len() - 1;
        if x.is_nan() {
            return f64::NAN;
        }
        if x <= self.x[0] {
            return if x == self.x[0] { self.f[0] } else { 0.0 };
        }
        if x >= self.x[last] {
            return if x == self.x[last] { self.f[last] } else { 1.0 };
        }
        let k = self.x.partition_point(|&v| v <= x) - 1;
        let h = self.x[k + 1] - self.x[k];
        let s = (x - self.x[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let value = (2.0 * s3 - 3.0 * s2 + 1.0) * self.f[k]
            + (s3 - 2.0 * s2 + s) * h * self.slopes[k]
            + (-2.0 * s3 + 3.0 * s2) * self.f[k + 1]
            + (s3 - s2) * h * self.slopes[k + 1];
        value.clamp(self.f[k], self.f[k + 1])
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(SpectraError::Domain(format!("quantile level {q} outside (0, 1)")));
        }
        let (mut lo, mut hi) = self.support();
        while hi - lo > 1e-9 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Fritsch–Carlson derivative estimates, as in PCHIP.
fn pchip_slopes(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (f[k + 1] - f[k]) / h[k]).collect();
    let mut m = vec![0.0; n];
    if n == 2 {
        m[0] = delta[0];
        m[1] = delta[0];
        return m;
    }
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    m[0] = pchip_end(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = pchip_end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    m
}

fn pchip_end(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

pub fn tw1_cdf(x: f64) -> f64 {
    TracyWidom1::global().cdf(x)
}

pub fn tw1_quantile(q: f64) -> Result<f64> {
    TracyWidom1::global().quantile(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn marchenko_pastur_edge() {
        let law = bulk_edge(&[1.0f64; 400], 400).unwrap();
        assert!((law.gamma_plus - 4.0).abs() <= 1e-9);
        assert!((law.d - 0.5).abs() <= 1e-9);
        assert!((law.sigma_n - 16f64.cbrt()).abs() <= 1e-9);
        assert!(edge_slope(&[1.0; 3], 1.0, law.d).abs() <= 1e-10);
        for c in [0.25f64, 0.5, 2.0] {
            let law = bulk_edge_with_ratio(&[1.0; 5], c).unwrap();
            assert_relative_eq!(law.gamma_plus, (1.0 + c.sqrt()).powi(2), max_relative = 1e-10);
        }
    }

    #[test]
    fn edge_homogeneity() {
        let bulk = [1.0, 1.3, 1.7, 2.0, 1.1];
        let base = bulk_edge_with_ratio(&bulk, 0.8).unwrap();
        let scaled: Vec<f64> = bulk.iter().map(|v| 3.0 * v).collect();
        let law = bulk_edge_with_ratio(&scaled, 0.8).unwrap();
        assert_relative_eq!(law.gamma_plus, 3.0 * base.gamma_plus, max_relative = 1e-10);
        assert_relative_eq!(law.d, base.d / 3.0, max_relative = 1e-10);
        assert_relative_eq!(law.sigma_n, 3.0 * base.sigma_n, max_relative = 1e-10);
        assert!(base.d * 2.0 < 1.0);
        let r: f64 = (1.0 + 0.8f64.sqrt()).powi(2);
        assert!(base.gamma_plus >= r * 1.0 && base.gamma_plus <= r * 2.0);
    }

    #[test]
    fn edge_errors() {
        assert!(bulk_edge::<f64>(&[], 10).is_err());
        assert!(bulk_edge(&[1.0, -1.0], 10).is_err());
    }

    #[test]
    fn edge_statistic_composition() {
        let law = bulk_edge(&vec![1.0; 100], 100).unwrap();
        assert_eq!(edge_statistic(law.gamma_plus, &law, 100), 0.0);
        let expected = 100f64.powf(2.0 / 3.0) * (4.3 - 4.0) / 16f64.cbrt();
        assert_relative_eq!(edge_statistic(4.3, &law, 100), expected, max_relative = 1e-9);
    }

    #[test]
    fn tw1_quantile_pin() {
        let q99 = tw1_quantile(0.99).unwrap();
        assert!((q99 - 2.02).abs() <= 0.01, "q99 = {q99}");
        assert!(tw1_quantile(0.0).is_err());
        assert!(tw1_quantile(1.0).is_err());
    }

    #[test]
    fn tw1_round_trip() {
        for k in 1..=99 {
            let q = k as f64 / 100.0;
            let x = tw1_quantile(q).unwrap();
            assert!((tw1_cdf(x) - q).abs() <= 1e-6);
        }
    }

    #[test]
    fn tw1_monotone_and_bounded() {
        let table = TracyWidom1::embedded();
        let mut prev = 0.0;
        for i in 0..=3200 {
            let x = -10.0 + i as f64 * 0.005;
            let v = table.cdf(x);
            assert!((0.0..=1.0).contains(&v));
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn tw1_moments_from_table() {
        // E X = ∫_0^∞ (1−F) − ∫_{−∞}^0 F, E X² = 2∫_0^∞ x(1−F) − 2∫_{−∞}^0 x F
        let table = TracyWidom1::embedded();
        let nodes: Vec<(f64, f64)> = table.nodes().collect();
        let (mut m1, mut m2) = (0.0, 0.0);
        for w in nodes.windows(2) {
            let (x0, f0) = w[0];
            let (x1, f1) = w[1];
            let h = x1 - x0;
            let (g0, g1) = if x0 >= 0.0 { (1.0 - f0, 1.0 - f1) } else { (-f0, -f1) };
            m1 += 0.5 * h * (g0 + g1);
            m2 += h * (x0 * g0 + x1 * g1);
        }
        let sd = (m2 - m1 * m1).sqrt();
        assert!((m1 + 1.2065).abs() < 2e-3, "mean {m1}");
        assert!((sd - 1.268).abs() < 2e-3, "sd {sd}");
    }

    #[test]
    fn table_parsing() {
        let t = TracyWidom1::parse("# header\n0 0.1\n1 0.5\n2 0.9\n").unwrap();
        assert_eq!(t.cdf(1.0), 0.5);
        assert_eq!(t.cdf(-1.0), 0.0);
        assert!(TracyWidom1::parse("0 0.5\n1 0.4\n").is_err());
        assert!(TracyWidom1::parse("0 x\n").is_err());
    }
}

//! One- and two-sample Kolmogorov–Smirnov statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `c(α) = sqrt(-ln(α/2) / 2)` at `α = 0.01`: the asymptotic Kolmogorov
/// critical value, to be divided by the square root of the effective size.
pub const KOLMOGOROV_C_1PCT: f64 = 1.627_623_630_718_729_3;

/// A sorted Monte Carlo sample with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSample {
    values: Vec<f64>,
    pub seed: u64,
    pub generator: String,
}

impl EmpiricalSample {
    pub fn new(mut values: Vec<f64>, seed: u64, generator: impl Into<String>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::SampleTooSmall {
                len: values.len(),
                min: 2,
            });
        }
        if let Some(bad) = values.iter().find(|v| v.is_nan()) {
            return Err(crate::error::domain("EmpiricalSample", format!("value {bad}")));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self {
            values,
            seed,
            generator: generator.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Standard error of the mean.
    pub fn standard_error(&self) -> f64 {
        let n = self.len() as f64;
        let m = self.mean();
        let var = self.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    }
}

/// Outcome of a KS test at the 1% level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub sample_sizes: Vec<usize>,
    pub critical_1pct: f64,
    pub pass: bool,
}

impl KsResult {
    fn new(statistic: f64, sample_sizes: Vec<usize>, effective: f64) -> Self {
        let critical_1pct = KOLMOGOROV_C_1PCT / effective.sqrt();
        Self {
            statistic,
            sample_sizes,
            critical_1pct,
            pass: statistic < critical_1pct,
        }
    }
}

/// `sup |F_n - F|` between the empirical CDF of `sample` and `cdf`.
pub fn ks_one_sample(sample: &EmpiricalSample, cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    let xs = sample.values();
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut prev = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        if !(0.0..=1.0).contains(&f) || f < prev {
            return Err(Error::NonMonotoneCdf { at: x });
        }
        prev = f;
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d = d.max(above).max(below);
    }
    Ok(KsResult::new(d, vec![xs.len()], n))
}

/// `sup |F_n - G_m|` between two empirical CDFs.
pub fn ks_two_sample(first: &EmpiricalSample, second: &EmpiricalSample) -> KsResult {
    let (xs, ys) = (first.values(), second.values());
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        // Step past every copy of the smaller value so ties move both CDFs.
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    KsResult::new(d, vec![xs.len(), ys.len()], n * m / (n + m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_cdf(x: f64) -> f64 {
        0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
    }

    fn normals(seed: u64, n: usize, shift: f64) -> EmpiricalSample {
        let mut rng = stream(seed, 0);
        let v = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z + shift
            })
            .collect();
        EmpiricalSample::new(v, seed, "normal").unwrap()
    }

    #[test]
    fn critical_constant() {
        let c = (-(0.005f64).ln() / 2.0).sqrt();
        assert!((c - KOLMOGOROV_C_1PCT).abs() < 1e-15);
        // ≈ 0.00515 at n = 1e5
        assert!((KOLMOGOROV_C_1PCT / 1e5f64.sqrt() - 0.005147).abs() < 1e-5);
    }

    #[test]
    fn null_case_passes() {
        let s = normals(11, 100_000, 0.0);
        let r = ks_one_sample(&s, normal_cdf).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn shifted_sample_fails() {
        let s = normals(12, 100_000, 0.5);
        let r = ks_one_sample(&s, normal_cdf).unwrap();
        assert!(!r.pass);
        assert!(r.statistic > 0.15);
    }

    #[test]
    fn degenerate_two_points() {
        let s = EmpiricalSample::new(vec![0.3, -0.2], 0, "fixed").unwrap();
        assert_eq!(s.values(), &[-0.2, 0.3]);
        let r = ks_one_sample(&s, normal_cdf).unwrap();
        assert!((0.0..=1.0).contains(&r.statistic));
        assert!(EmpiricalSample::new(vec![1.0], 0, "one").is_err());
    }

    #[test]
    fn non_monotone_cdf_rejected() {
        let s = EmpiricalSample::new(vec![0.1, 0.2, 0.3], 0, "fixed").unwrap();
        let err = ks_one_sample(&s, |x| 1.0 - x).unwrap_err();
        assert!(matches!(err, Error::NonMonotoneCdf { .. }));
    }

    #[test]
    fn one_sample_exact_value() {
        // Uniform cdf, sample {0.1, 0.6}: max(0.5-0.1, 0.6-0.5, 1-0.6, 0.1) = 0.4
        let s = EmpiricalSample::new(vec![0.6, 0.1], 0, "fixed").unwrap();
        let r = ks_one_sample(&s, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((r.statistic - 0.4).abs() < 1e-15);
    }

    #[test]
    fn two_sample_known_values() {
        let a = EmpiricalSample::new(vec![1.0, 1.0, 4.0, 4.0], 0, "a").unwrap();
        let b = EmpiricalSample::new(vec![1.0, 1.0, 1.0, 4.0], 0, "b").unwrap();
        assert!((ks_two_sample(&a, &b).statistic - 0.25).abs() < 1e-15);
        let xs = vec![0.42, 0.24, 0.86, 0.85, 0.82, 0.82, 0.25, 0.78, 0.13, 0.27];
        let ys = vec![0.24, 0.27, 0.87, 0.29, 0.57, 0.44, 0.5, 0.00, 0.56, 0.03];
        let a = EmpiricalSample::new(xs, 0, "a").unwrap();
        let b = EmpiricalSample::new(ys, 0, "b").unwrap();
        assert!((ks_two_sample(&a, &b).statistic - 0.4).abs() < 1e-12);
        let same = ks_two_sample(&a, &a);
        assert_eq!(same.statistic, 0.0);
    }

    #[test]
    fn two_sample_null_and_shift() {
        let a = normals(21, 50_000, 0.0);
        let b = normals(22, 50_000, 0.0);
        assert!(ks_two_sample(&a, &b).pass);
        let c = normals(23, 50_000, 0.5);
        assert!(!ks_two_sample(&a, &c).pass);
    }

    #[test]
    fn two_sample_degenerate() {
        let mut rng = stream(1, 0);
        let a = EmpiricalSample::new(vec![rng.random(), rng.random()], 1, "u").unwrap();
        let b = EmpiricalSample::new(vec![rng.random(), rng.random()], 1, "u").unwrap();
        let r = ks_two_sample(&a, &b);
        assert!((0.0..=1.0).contains(&r.statistic));
    }
}

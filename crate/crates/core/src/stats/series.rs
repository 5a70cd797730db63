//! Monte Carlo checks on the discrete walk: the perpetuity law of `N_∞`,
//! convergence of `N_n`, the drifted invariance principle and the
//! independence of `Z` from `N_∞`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{ks_one_sample, ks_two_sample, EmpiricalSample, KsResult};
use crate::error::{domain, require_positive, Error, Result};
use crate::gig::{gig_log_moment_numeric, Gig, GigParams, InvGammaParams};
use crate::rng::{derive_seed, parallel_samples, Stream};
use crate::specfun::log_add_exp;
use crate::walk::{GigIncrements, Increments, NInfinitySampler};

/// Default truncation tolerance for `N_∞` draws.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

/// Draws `samples` values of `N_∞`.
pub fn n_infinity_draws(lambda: f64, a: f64, samples: usize, seed: u64, tail_tol: f64) -> Result<Vec<f64>> {
    let sampler = NInfinitySampler::new(lambda, a, tail_tol)?;
    parallel_samples(seed, samples, |rng| sampler.sample(rng))
}

/// KS of `N_∞` draws against `target`.
pub fn dufresne_test_against(
    lambda: f64,
    a: f64,
    samples: usize,
    seed: u64,
    tail_tol: f64,
    target: &InvGammaParams,
) -> Result<KsResult> {
    let draws = n_infinity_draws(lambda, a, samples, seed, tail_tol)?;
    let sample = EmpiricalSample::new(draws, seed, "n_infinity")?;
    ks_one_sample(&sample, |x| target.cdf(x).unwrap_or(f64::NAN))
}

/// KS of `N_∞` draws against inverse-gamma with shape `λ` and scale `a²/2`.
pub fn dufresne_test(lambda: f64, a: f64, samples: usize, seed: u64, tail_tol: f64) -> Result<KsResult> {
    let target = InvGammaParams::stationary(lambda, a)?;
    dufresne_test_against(lambda, a, samples, seed, tail_tol, &target)
}

/// `N_n` at each requested step for one path of increments.
fn n_na_at(source: &mut impl Increments, steps: &[usize]) -> Vec<f64> {
    let last = steps.iter().copied().max().unwrap_or(0);
    let mut out = Vec::with_capacity(steps.len());
    let (mut log_prefix, mut sum) = (0.0f64, 0.0f64);
    for k in 1..=last {
        let lg = source.next_gamma().ln();
        sum += (log_prefix - lg).exp();
        log_prefix -= 2.0 * lg;
        if steps.contains(&k) {
            out.push(sum);
        }
    }
    out
}

/// Two-sample KS between `N_n` and independent `N_∞` draws, for each `n` in
/// `steps`. All `N_n` samples share the same increments, so the sequence of
/// statistics reflects convergence rather than fresh noise at every `n`.
pub fn n_part_convergence_curve(
    lambda: f64,
    a: f64,
    steps: &[usize],
    samples: usize,
    seed: u64,
    tail_tol: f64,
) -> Result<Vec<KsResult>> {
    require_positive("n_part lambda", lambda)?;
    if steps.is_empty() || steps.contains(&0) {
        return Err(domain("n_part_convergence", "steps must be positive"));
    }
    let mut sorted = steps.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let gig = GigParams::symmetric(lambda, a)?.sampler();
    let rows = parallel_samples(derive_seed(seed, 1), samples, |rng| {
        Ok::<_, Error>(n_na_at(&mut GigIncrements::new(&gig, rng), &sorted))
    })?;
    let limit = n_infinity_draws(lambda, a, samples, derive_seed(seed, 2), tail_tol)?;
    let limit = EmpiricalSample::new(limit, seed, "n_infinity")?;
    steps
        .iter()
        .map(|n| {
            let col = sorted.binary_search(n).expect("present");
            let values = rows.iter().map(|r| r[col]).collect();
            let sample = EmpiricalSample::new(values, seed, format!("N_{n}"))?;
            Ok(ks_two_sample(&sample, &limit))
        })
        .collect()
}

pub fn n_part_convergence_test(lambda: f64, a: f64, n: usize, samples: usize, seed: u64) -> Result<KsResult> {
    Ok(n_part_convergence_curve(lambda, a, &[n], samples, seed, DEFAULT_TAIL_TOL)?.remove(0))
}

/// `S = Σ_{k < ⌊nt⌋} ln γ_k` with `γ ~ GIG(λ, √n, √n)`, tested against
/// `Normal(λt, t)`.
pub fn donsker_check(lambda: f64, n: usize, t: f64, samples: usize, seed: u64) -> Result<KsResult> {
    require_positive("donsker t", t)?;
    if n == 0 {
        return Err(domain("donsker_check", "n must be positive"));
    }
    let steps = (n as f64 * t).floor() as usize;
    let gig = GigParams::symmetric(lambda, (n as f64).sqrt())?.sampler();
    let draws = parallel_samples(seed, samples, |rng| Ok::<_, Error>(log_increment_sum(&gig, rng, steps)))?;
    let sample = EmpiricalSample::new(draws, seed, "log_increment_sum")?;
    let normal = Normal::new(lambda * t, t.sqrt()).map_err(|e| domain("donsker normal", e.to_string()))?;
    ks_one_sample(&sample, |x| normal.cdf(x))
}

fn log_increment_sum(gig: &Gig, rng: &mut Stream, steps: usize) -> f64 {
    let mut source = GigIncrements::new(gig, rng);
    (0..steps).map(|_| source.next_gamma().ln()).sum()
}

/// `n · Var(ln γ)` for `γ ~ GIG(λ, √n, √n)`, by quadrature.
pub fn scaled_log_variance(lambda: f64, n: usize) -> Result<f64> {
    let params = GigParams::symmetric(lambda, (n as f64).sqrt())?;
    let m1 = gig_log_moment_numeric(&params, 1)?;
    let m2 = gig_log_moment_numeric(&params, 2)?;
    Ok(n as f64 * (m2 - m1 * m1))
}

/// Dependence between `N_n` (or a substitute) and `ln Z_2, …, ln Z_6`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    /// Spearman correlation with each of `Z_2, …, Z_6`.
    pub spearman: Vec<f64>,
    pub max_abs_spearman: f64,
    /// `3/√samples`.
    pub bound: f64,
    /// Bias-corrected distance correlation with the vector `(Z_2, …, Z_6)`,
    /// on a subsample.
    pub distance_correlation: f64,
    pub distance_samples: usize,
}

impl IndependenceReport {
    pub fn pass(&self) -> bool {
        self.max_abs_spearman < self.bound
    }
}

/// Which statistic of the path is paired with `(Z_2, …, Z_6)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairedWith {
    /// `N_n`, the proxy for `N_∞`.
    NPart,
    /// `X_n`, which is not independent of `Z` (a control).
    Diagonal,
}

/// Subsample size for the distance correlation.
pub const DISTANCE_SAMPLES: usize = 3000;

pub fn z_independence_check(
    lambda: f64,
    a: f64,
    n: usize,
    samples: usize,
    seed: u64,
    paired: PairedWith,
) -> Result<IndependenceReport> {
    require_positive("z_independence lambda", lambda)?;
    if n < 6 {
        return Err(domain("z_independence_check", "n must be at least 6"));
    }
    if samples < 10 {
        return Err(Error::SampleTooSmall { len: samples, min: 10 });
    }
    let gig = GigParams::symmetric(lambda, a)?.sampler();
    let rows = parallel_samples(seed, samples, |rng| {
        let mut source = GigIncrements::new(&gig, rng);
        let (mut lx, mut lz) = (0.0f64, f64::NEG_INFINITY);
        let mut row = [0.0f64; 6];
        for k in 1..=n {
            let lg = source.next_gamma().ln();
            lz = log_add_exp(lz + lg, -lx);
            lx += lg;
            if (2..=6).contains(&k) {
                row[k - 1] = lz;
            }
        }
        row[0] = match paired {
            PairedWith::NPart => lz - lx,
            PairedWith::Diagonal => lx,
        };
        Ok::<_, Error>(row)
    })?;
    let column = |c: usize| rows.iter().map(|r| r[c]).collect::<Vec<_>>();
    let target = ranks(&column(0));
    let spearman: Vec<f64> = (1..6).map(|c| pearson(&target, &ranks(&column(c)))).collect();
    let max_abs_spearman = spearman.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let m = DISTANCE_SAMPLES.min(samples);
    let xs: Vec<Vec<f64>> = rows[..m].iter().map(|r| vec![r[0]]).collect();
    let zs: Vec<Vec<f64>> = rows[..m].iter().map(|r| r[1..].to_vec()).collect();
    Ok(IndependenceReport {
        spearman,
        max_abs_spearman,
        bound: 3.0 / (samples as f64).sqrt(),
        distance_correlation: distance_correlation(&xs, &zs),
        distance_samples: m,
    })
}

/// Ranks `1..=n` (ties averaged).
pub(crate) fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

pub(crate) fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// U-centered distance matrix of a sample of vectors.
fn u_centered(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let dist = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d[i * n + j] = dist;
            d[j * n + i] = dist;
        }
    }
    let row: Vec<f64> = (0..n).map(|i| d[i * n..(i + 1) * n].iter().sum()).collect();
    let total: f64 = row.iter().sum();
    let nf = n as f64;
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] = if i == j {
                0.0
            } else {
                d[i * n + j] - row[i] / (nf - 2.0) - row[j] / (nf - 2.0) + total / ((nf - 1.0) * (nf - 2.0))
            };
        }
    }
    d
}

/// Bias-corrected distance correlation; near zero (and possibly slightly
/// negative) under independence.
pub fn distance_correlation(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() > 3, "distance correlation needs at least 4 points");
    let (a, b) = (u_centered(xs), u_centered(ys));
    let dot = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(u, v)| u * v).sum::<f64>();
    let (ab, aa, bb) = (dot(&a, &b), dot(&a, &a), dot(&b, &b));
    if aa <= 0.0 || bb <= 0.0 {
        return 0.0;
    }
    ab / (aa * bb).sqrt()
}

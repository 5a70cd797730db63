//! The continuous-time limit `𝒵_t = e^{B_t} ∫_0^t e^{-2B_s} ds` of the
//! rescaled `Z`-coordinate, and Monte Carlo checks of the convergence and of
//! the limiting generator.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{ks_two_sample, EmpiricalSample, KsResult};
use crate::error::{domain, require_positive, Error, Result};
use crate::gig::GigParams;
use crate::kernels::{alternative_generator_drift, my_generator_coefficients};
use crate::rng::{derive_seed, parallel_batches, parallel_samples};
use crate::specfun::log_add_exp;
use crate::walk::{GigIncrements, Increments};

/// Brownian motion with drift `μ` on `[0, t]`, discretized with step `dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrownianConfig {
    pub drift: f64,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
}

impl BrownianConfig {
    pub fn new(drift: f64, horizon: f64, dt: f64, seed: u64) -> Result<Self> {
        if !drift.is_finite() {
            return Err(domain("BrownianConfig drift", format!("{drift}")));
        }
        require_positive("horizon", horizon)?;
        require_positive("dt", dt)?;
        if dt >= horizon {
            return Err(domain(
                "BrownianConfig",
                format!("dt = {dt} must be below t = {horizon}"),
            ));
        }
        Ok(Self {
            drift,
            horizon,
            dt,
            seed,
        })
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

/// `𝒵_t` from the Brownian increments produced by `increments`: the
/// left-endpoint sum `Σ e^{-2B_{k dt}} dt` times `e^{B_t}`. The
/// discretization bias is `O(dt)`.
pub fn simulate_my_from(config: &BrownianConfig, increments: impl FnMut() -> f64) -> f64 {
    let (b, integral) = brownian_functional(config, increments);
    b.exp() * integral
}

/// `(B_t, Σ e^{-2B_{k dt}} dt)`.
fn brownian_functional(config: &BrownianConfig, mut increments: impl FnMut() -> f64) -> (f64, f64) {
    let steps = config.steps();
    let dt = config.horizon / steps as f64;
    let mut b = 0.0f64;
    let mut integral = 0.0f64;
    for _ in 0..steps {
        integral += (-2.0 * b).exp();
        b += increments();
    }
    (b, integral * dt)
}

/// One draw of `𝒵_t` with `B_s = μs + W_s`.
pub fn simulate_my_continuous<R: Rng + ?Sized>(config: &BrownianConfig, rng: &mut R) -> f64 {
    let dt = config.horizon / config.steps() as f64;
    let (mean, sd) = (config.drift * dt, dt.sqrt());
    simulate_my_from(config, || mean + sd * rng.sample::<f64, _>(StandardNormal))
}

/// `Z_{⌊nt⌋}` of the walk with `δ = 1/n` and increments `GIG(λ, √n, √n)`.
pub fn scaled_walk_z(lambda: f64, n: usize, t: f64, samples: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(domain("scaled_walk_z", "n must be positive"));
    }
    require_positive("t", t)?;
    let steps = ((n as f64 * t).floor() as usize).max(1);
    let gig = GigParams::symmetric(lambda, (n as f64).sqrt())?.sampler();
    let log_delta = -(n as f64).ln();
    parallel_samples(seed, samples, |rng| {
        let mut source = GigIncrements::new(&gig, rng);
        let (mut lx, mut lz) = (0.0f64, f64::NEG_INFINITY);
        for _ in 0..steps {
            let lg = source.next_gamma().ln();
            lz = log_add_exp(lz + lg, log_delta - lx);
            lx += lg;
        }
        Ok::<_, Error>(lz.exp())
    })
}

/// Statistic threshold for the scaling-limit comparison.
pub const SCALING_LIMIT_THRESHOLD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingLimitOutcome {
    pub ks: KsResult,
    pub threshold: f64,
    pub pass: bool,
}

/// Two-sample KS between the rescaled walk at `⌊nt⌋` and the continuous
/// functional at `t`, passing when the statistic is below
/// [`SCALING_LIMIT_THRESHOLD`].
pub fn scaling_limit_test(
    lambda: f64,
    n: usize,
    t: f64,
    samples: usize,
    dt: f64,
    seed: u64,
) -> Result<ScalingLimitOutcome> {
    let walk = scaled_walk_z(lambda, n, t, samples, derive_seed(seed, 1))?;
    let config = BrownianConfig::new(lambda, t, dt, derive_seed(seed, 2))?;
    let limit = parallel_samples(config.seed, samples, |rng| {
        Ok::<_, Error>(simulate_my_continuous(&config, rng))
    })?;
    let ks = ks_two_sample(
        &EmpiricalSample::new(walk, seed, "scaled_walk_z")?,
        &EmpiricalSample::new(limit, seed, "continuous_functional")?,
    );
    let pass = ks.statistic < SCALING_LIMIT_THRESHOLD;
    Ok(ScalingLimitOutcome {
        ks,
        threshold: SCALING_LIMIT_THRESHOLD,
        pass,
    })
}

/// Effect of halving `dt` on the scaling-limit statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStudy {
    pub coarse: f64,
    pub fine: f64,
    /// `|fine - coarse| / coarse`.
    pub relative_change: f64,
}

/// Scaling-limit statistic at `dt` and at `dt / 2`, with the coarse
/// functional read off the same fine Brownian paths so that only the
/// discretization differs between the two.
pub fn dt_refinement_study(
    lambda: f64,
    n: usize,
    t: f64,
    samples: usize,
    dt: f64,
    seed: u64,
) -> Result<RefinementStudy> {
    let walk = EmpiricalSample::new(
        scaled_walk_z(lambda, n, t, samples, derive_seed(seed, 1))?,
        seed,
        "scaled_walk_z",
    )?;
    let fine_config = BrownianConfig::new(lambda, t, dt / 2.0, derive_seed(seed, 2))?;
    let steps = fine_config.steps();
    if steps % 2 == 1 {
        return Err(domain("dt_refinement_study", "t / dt must be an integer"));
    }
    let h = t / steps as f64;
    let pairs = parallel_samples(fine_config.seed, samples, |rng| {
        let (mean, sd) = (lambda * h, h.sqrt());
        let (mut b, mut fine, mut coarse) = (0.0f64, 0.0f64, 0.0f64);
        for k in 0..steps {
            let w = (-2.0 * b).exp();
            fine += w;
            if k % 2 == 0 {
                coarse += w;
            }
            b += mean + sd * rng.sample::<f64, _>(StandardNormal);
        }
        Ok::<_, Error>((b.exp() * coarse * 2.0 * h, b.exp() * fine * h))
    })?;
    let (coarse, fine): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let coarse = ks_two_sample(&walk, &EmpiricalSample::new(coarse, seed, "continuous_functional")?).statistic;
    let fine = ks_two_sample(&walk, &EmpiricalSample::new(fine, seed, "continuous_functional")?).statistic;
    Ok(RefinementStudy {
        coarse,
        fine,
        relative_change: (fine - coarse).abs() / coarse,
    })
}

/// Empirical generator of the rescaled `Z`-chain near one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorCheck {
    pub lambda: f64,
    pub z: f64,
    pub n: usize,
    pub window: f64,
    pub conditioned: usize,
    /// `n · mean(ΔZ)` over steps with `Z_k` in the window.
    pub drift_estimate: f64,
    /// `n · var(ΔZ)` over the same steps.
    pub diffusion_estimate: f64,
    pub drift: f64,
    pub diffusion: f64,
    pub drift_relative_error: f64,
    pub diffusion_relative_error: f64,
    /// Relative error against the reading with the ratio taken at 1 and
    /// divided by `z`.
    pub alternative_drift: f64,
    pub alternative_drift_relative_error: f64,
}

impl GeneratorCheck {
    pub fn pass(&self, tolerance: f64) -> bool {
        self.drift_relative_error < tolerance && self.diffusion_relative_error < tolerance
    }
}

/// Paths simulated per batch in [`generator_drift_check`].
const GENERATOR_PATHS_PER_BATCH: usize = 64;
/// Batches run between checks of the conditioned count.
const GENERATOR_ROUND: u64 = 64;
/// Gives up after this many batches.
const GENERATOR_MAX_BATCHES: u64 = 1 << 16;

/// Estimates the drift and diffusion of the rescaled `Z`-chain
/// (`δ = 1/n`, `a = √n`) at `z` by conditioning on `Z_k ∈ (z ± 0.05z)` for
/// `n/2 ≤ k < n`, pooling at least `samples` conditioned steps.
pub fn generator_drift_check(lambda: f64, z: f64, n: usize, samples: usize, seed: u64) -> Result<GeneratorCheck> {
    require_positive("generator z", z)?;
    if n < 4 {
        return Err(domain("generator_drift_check", "n must be at least 4"));
    }
    let window = 0.05 * z;
    let (lo, hi) = (z - window, z + window);
    let gig = GigParams::symmetric(lambda, (n as f64).sqrt())?.sampler();
    let delta = 1.0 / n as f64;
    let burn_in = n / 2;

    // Per batch: count, Σ nΔZ, Σ (nΔZ)².
    let batch = |rng: &mut crate::rng::Stream, _b: u64| {
        let mut acc = (0usize, 0.0f64, 0.0f64);
        let mut source = GigIncrements::new(&gig, rng);
        for _ in 0..GENERATOR_PATHS_PER_BATCH {
            let (mut x, mut zk) = (1.0f64, 0.0f64);
            for k in 0..n {
                let g = source.next_gamma();
                let next = zk * g + delta / x;
                // zk is Z_k for k >= 1; the step k → k + 1 is recorded.
                if k >= burn_in && zk > lo && zk < hi {
                    let d = n as f64 * (next - zk);
                    acc.0 += 1;
                    acc.1 += d;
                    acc.2 += d * d;
                }
                x *= g;
                zk = next;
            }
        }
        acc
    };
    let (mut count, mut sum, mut sum_sq) = (0usize, 0.0f64, 0.0f64);
    let mut next = 0u64;
    while count < samples {
        if next >= GENERATOR_MAX_BATCHES {
            return Err(Error::InsufficientMass {
                found: count,
                needed: samples,
            });
        }
        for (c, s, q) in parallel_batches(seed, next..next + GENERATOR_ROUND, batch) {
            count += c;
            sum += s;
            sum_sq += q;
        }
        next += GENERATOR_ROUND;
    }
    let nf = count as f64;
    let mean = sum / nf;
    // n · var(ΔZ) = var(nΔZ) / n
    let diffusion_estimate = (sum_sq / nf - mean * mean) * nf / (nf - 1.0) / n as f64;
    let coeffs = my_generator_coefficients(lambda, z)?;
    let alternative = alternative_generator_drift(lambda, z)?;
    Ok(GeneratorCheck {
        lambda,
        z,
        n,
        window,
        conditioned: count,
        drift_estimate: mean,
        diffusion_estimate,
        drift: coeffs.drift,
        diffusion: coeffs.diffusion,
        drift_relative_error: (mean - coeffs.drift).abs() / coeffs.drift.abs(),
        diffusion_relative_error: (diffusion_estimate - coeffs.diffusion).abs() / coeffs.diffusion,
        alternative_drift: alternative,
        alternative_drift_relative_error: (mean - alternative).abs() / alternative.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(BrownianConfig::new(0.0, 1.0, 2.0, 0).is_err());
        assert!(BrownianConfig::new(0.0, -1.0, 0.1, 0).is_err());
        assert_eq!(BrownianConfig::new(0.0, 1.0, 1e-4, 0).unwrap().steps(), 10_000);
    }

    #[test]
    fn frozen_motion_gives_t() {
        let c = BrownianConfig::new(0.0, 0.7, 1e-3, 0).unwrap();
        assert!((simulate_my_from(&c, || 0.0) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn small_time_mean() {
        let c = BrownianConfig::new(0.0, 0.01, 1e-5, 0).unwrap();
        let v = parallel_samples(11, 20_000, |rng| Ok::<_, ()>(simulate_my_continuous(&c, rng) / 0.01)).unwrap();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn positive_drift_integral_settles() {
        // ∫_0^∞ e^{-2B_s} ds with drift μ has the law of 1/(2 Gamma(μ, 1)).
        // Both horizons are read off the same paths.
        let c = BrownianConfig::new(2.0, 10.0, 1e-3, 0).unwrap();
        let half = c.steps() / 2;
        let pairs = parallel_samples(12, 40_000, |rng| {
            let (mean, sd) = (c.drift * c.dt, c.dt.sqrt());
            let (mut b, mut early, mut total) = (0.0f64, 0.0f64, 0.0f64);
            for k in 0..c.steps() {
                if k == half {
                    early = total;
                }
                total += (-2.0 * b).exp() * c.dt;
                b += mean + sd * rng.sample::<f64, _>(StandardNormal);
            }
            Ok::<_, ()>((early, total))
        })
        .unwrap();
        let q99 = |mut v: Vec<f64>| {
            v.sort_by(f64::total_cmp);
            v[(0.99 * v.len() as f64) as usize]
        };
        let (early, total): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let (a, b) = (q99(early), q99(total));
        assert!(a.is_finite() && b.is_finite());
        assert!((b / a - 1.0).abs() < 1e-6, "{a} {b}");
        // P(1/(2G) ≤ x) = Q(μ, 1/(2x)); find its 0.99 quantile by bisection.
        let (mut lo, mut hi): (f64, f64) = (1e-3, 1e3);
        for _ in 0..200 {
            let mid = f64::sqrt(lo * hi);
            if statrs::function::gamma::gamma_ur(2.0, 0.5 / mid) < 0.99 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((b / lo - 1.0).abs() < 0.05, "{b} vs {lo}");
    }

    #[test]
    fn scaled_walk_starts_at_delta() {
        let v = scaled_walk_z(1.0, 50, 0.01, 10, 1).unwrap();
        assert!(v.iter().all(|&z| (z - 1.0 / 50.0).abs() < 1e-15));
    }

    #[test]
    fn short_walk_is_far_from_limit() {
        let early = scaling_limit_test(1.0, 3, 1.0, 20_000, 1e-3, 5).unwrap();
        assert!(early.ks.statistic > 0.05, "{early:?}");
        let ten = scaling_limit_test(1.0, 10, 1.0, 20_000, 1e-3, 5).unwrap();
        let late = scaling_limit_test(1.0, 200, 1.0, 20_000, 1e-3, 5).unwrap();
        assert!(late.ks.statistic < ten.ks.statistic && ten.ks.statistic < early.ks.statistic);
    }

    #[test]
    fn halving_dt_barely_moves_statistic() {
        let r = dt_refinement_study(1.0, 50, 0.5, 5_000, 5e-4, 9).unwrap();
        assert!(r.relative_change < 0.1, "{r:?}");
    }

    #[test]
    fn insufficient_mass_is_reported() {
        let err = generator_drift_check(1.0, 1e6, 20, 10, 1).unwrap_err();
        assert!(matches!(err, Error::InsufficientMass { found: 0, .. }));
    }
}

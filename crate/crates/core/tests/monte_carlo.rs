use gigwalk::gig::{GigParams, InvGammaParams};
use gigwalk::grid::LogGrid;
use gigwalk::kernels::lambda_density;
use gigwalk::rng::parallel_samples;
use gigwalk::stats::{ks_one_sample, n_infinity_draws, EmpiricalSample, DEFAULT_TAIL_TOL};
use gigwalk::walk::{simulate_path_with, GigIncrements};

/// Cumulative trapezoid integral of `f` over the grid nodes.
fn tabulated_cdf(grid: &LogGrid, f: impl Fn(f64) -> f64) -> impl Fn(f64) -> f64 {
    let xs = grid.points().to_vec();
    let mut cum = vec![0.0; xs.len()];
    for i in 1..xs.len() {
        cum[i] = cum[i - 1] + 0.5 * (f(xs[i - 1]) + f(xs[i])) * (xs[i] - xs[i - 1]);
    }
    let total = *cum.last().unwrap();
    move |x: f64| {
        let i = xs.partition_point(|&p| p <= x);
        if i == 0 {
            0.0
        } else if i == xs.len() {
            1.0
        } else {
            let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            (cum[i - 1] + t * (cum[i] - cum[i - 1])) / total
        }
    }
}

#[test]
fn simulated_x2_given_z2_follows_link_kernel() {
    let (lambda, a, z) = (1.0, 1.0, 2.0);
    let gig = GigParams::symmetric(lambda, a).unwrap().sampler();
    let pairs = parallel_samples(17, 400_000, |rng| {
        let path = simulate_path_with(1.0, 2, &mut GigIncrements::new(&gig, rng))?;
        Ok::<_, gigwalk::Error>((path.x(2)?, path.z(2)?))
    })
    .unwrap();
    let kept: Vec<f64> = pairs
        .iter()
        .filter(|(_, zz)| (zz - z).abs() < 0.01 * z)
        .map(|(x, _)| *x)
        .collect();
    assert!(kept.len() > 2000, "{}", kept.len());
    let sample = EmpiricalSample::new(kept, 17, "x2_given_z2").unwrap();
    let grid = LogGrid::new(1e-6, 1e4, 20_000).unwrap();
    let cdf = tabulated_cdf(&grid, |x| lambda_density(lambda, a, z, x).unwrap());
    let ks = ks_one_sample(&sample, cdf).unwrap();
    assert!(ks.pass, "{ks:?}");
    let wrong = tabulated_cdf(&grid, |x| lambda_density(1.5, a, z, x).unwrap());
    assert!(!ks_one_sample(&sample, wrong).unwrap().pass);
}

#[test]
fn n_infinity_mean_matches_inverse_gamma() {
    let (lambda, a) = (2.5, 1.5);
    let draws = n_infinity_draws(lambda, a, 40_000, 23, DEFAULT_TAIL_TOL).unwrap();
    let sample = EmpiricalSample::new(draws, 23, "n_infinity").unwrap();
    let want = InvGammaParams::stationary(lambda, a).unwrap().mean().unwrap();
    assert!(
        (sample.mean() - want).abs() < 4.0 * sample.standard_error(),
        "{} vs {want}",
        sample.mean()
    );
}

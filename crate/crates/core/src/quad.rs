//! Trapezoid quadrature for smooth, even, rapidly decaying integrands on the
//! half line, carried out in log space.
//!
//! The integrand is passed as its logarithm `g(u)`. Because the integrands we
//! feed here are even in `u` and analytic in a strip around the real axis, the
//! half-weighted trapezoid rule on `[0, inf)` converges geometrically in the
//! inverse step size; we halve the step until two successive estimates agree.

/// Log-density threshold below the peak at which the sum is truncated.
const CUTOFF: f64 = 52.0;
/// Halving the step roughly squares the relative error, so once two successive
/// sums agree to this level the finer one is accurate to machine precision.
const REL_TOL: f64 = 1e-9;
const MAX_HALVINGS: usize = 14;
const MAX_POINTS: usize = 4_000_000;

/// Returns `ln ∫_0^∞ exp(g(u)) du` for an even, unimodal-on-the-half-line
/// log-integrand `g` with its maximum at `peak` and curvature scale `width`.
pub(crate) fn log_integral_even(g: impl Fn(f64) -> f64, peak: f64, width: f64) -> f64 {
    let g_peak = g(peak);
    debug_assert!(g_peak.is_finite());
    let mut h = (0.5 * width).clamp(1e-9, 0.5);

    // Sum exp(g - g_peak) over u = offset + k * stride, k >= 0, stopping once
    // past the peak and below the cutoff.
    let sweep = |offset: f64, stride: f64| -> f64 {
        let mut acc = 0.0;
        let mut k = 0usize;
        loop {
            let u = offset + k as f64 * stride;
            let d = g(u) - g_peak;
            if d > -CUTOFF - 8.0 {
                acc += d.exp();
            }
            if (u > peak && d < -CUTOFF) || k > MAX_POINTS {
                break;
            }
            k += 1;
        }
        acc
    };

    let head = (g(0.0) - g_peak).exp();
    let mut total = h * (0.5 * head + sweep(h, h));
    for _ in 0..MAX_HALVINGS {
        let odd = sweep(0.5 * h, h);
        let refined = 0.5 * total + 0.5 * h * odd;
        h *= 0.5;
        let converged = (refined - total).abs() <= REL_TOL * refined.abs();
        total = refined;
        if converged {
            break;
        }
    }
    total.ln() + g_peak
}

/// Locates the maximum of a unimodal function on `[lo, hi]` by golden-section
/// search.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (hi - lo).abs() <= 1e-13 * (1.0 + hi.abs()) {
            break;
        }
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Curvature scale `1/sqrt(-g'')` at `x` by central differences, or `1.0`
/// when the curvature is not negative.
pub(crate) fn curvature_width(g: impl Fn(f64) -> f64, x: f64, scale: f64) -> f64 {
    let step = 1e-4 * scale.max(1e-6);
    let lo = if x - step > 0.0 { x - step } else { x };
    let hi = lo + 2.0 * step;
    let mid = lo + step;
    let second = (g(hi) - 2.0 * g(mid) + g(lo)) / (step * step);
    if second < 0.0 && second.is_finite() {
        1.0 / (-second).sqrt()
    } else {
        1.0
    }
}

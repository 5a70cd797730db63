//! Generalized inverse Gaussian and inverse-gamma laws.
//!
//! `GIG(λ, a, b)` has density
//!
//! ```text
//! (b/a)^λ / (2 K_λ(ab)) · x^{λ-1} exp(-½ (a²/x + b² x)),   x > 0.
//! ```
//!
//! The walk uses the symmetric family `GIG(λ, a, a)` throughout.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{domain, require_positive, Result};
use crate::quad;
use crate::specfun::{log_bessel_k, log_cosh, log_gamma};

/// Parameters `(λ, a, b)` of a GIG law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GigParams {
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
}

impl GigParams {
    pub fn new(lambda: f64, a: f64, b: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(domain("GIG lambda", format!("non-finite {lambda}")));
        }
        require_positive("GIG a", a)?;
        require_positive("GIG b", b)?;
        Ok(Self { lambda, a, b })
    }

    /// `GIG(λ, a, a)`.
    pub fn symmetric(lambda: f64, a: f64) -> Result<Self> {
        Self::new(lambda, a, a)
    }

    pub fn is_symmetric(&self) -> bool {
        self.a == self.b
    }

    /// `ω = ab`, the argument of the normalizing Bessel function.
    pub fn omega(&self) -> f64 {
        self.a * self.b
    }

    /// Law of `1/X`: `GIG(-λ, b, a)`.
    pub fn inverse(&self) -> Self {
        Self {
            lambda: -self.lambda,
            a: self.b,
            b: self.a,
        }
    }

    pub fn log_pdf(&self, x: f64) -> Result<f64> {
        require_positive("gig_pdf x", x)?;
        let norm =
            self.lambda * (self.b / self.a).ln() - std::f64::consts::LN_2 - log_bessel_k(self.lambda, self.omega())?;
        Ok(norm + (self.lambda - 1.0) * x.ln() - 0.5 * (self.a * self.a / x + self.b * self.b * x))
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        Ok(self.log_pdf(x)?.exp())
    }

    /// `E[X] = (a/b) K_{λ+1}(ab) / K_λ(ab)`.
    pub fn mean(&self) -> Result<f64> {
        let w = self.omega();
        Ok(self.a / self.b * (log_bessel_k(self.lambda + 1.0, w)? - log_bessel_k(self.lambda, w)?).exp())
    }

    /// Location of the density maximum.
    pub fn mode(&self) -> f64 {
        let l = self.lambda - 1.0;
        (l + (l * l + self.a * self.a * self.b * self.b).sqrt()) / (self.b * self.b)
    }

    /// Exact rejection sampler for this law.
    pub fn sampler(&self) -> Gig {
        Gig::new(*self)
    }
}

/// `GIG(λ, a, b)` density at `x`.
pub fn gig_pdf(params: &GigParams, x: f64) -> Result<f64> {
    params.pdf(x)
}

/// One draw from `GIG(λ, a, b)`. Builds the sampler each call; keep a [`Gig`]
/// around when drawing repeatedly.
pub fn gig_sample<R: Rng + ?Sized>(params: &GigParams, rng: &mut R) -> f64 {
    params.sampler().sample(rng)
}

/// If `X ~ GIG(λ, a, b)` then `cX ~ GIG(λ, a√c, b/√c)`.
pub fn gig_scale(params: &GigParams, c: f64) -> Result<GigParams> {
    require_positive("gig_scale factor", c)?;
    if c == 1.0 {
        return Ok(*params);
    }
    let root = c.sqrt();
    GigParams::new(params.lambda, params.a * root, params.b / root)
}

/// Highest log-moment order supported by [`gig_log_moment_numeric`].
pub const MAX_LOG_MOMENT: u32 = 8;

/// `E[ln^m X]` for `X ~ GIG(λ, a, a)` by quadrature in `u = ln x`.
///
/// The `u`-density `exp(λu - a² cosh u) / (2 K_λ(a²))` is folded onto `u > 0`,
/// which leaves an integrand of constant sign.
pub fn gig_log_moment_numeric(params: &GigParams, m: u32) -> Result<f64> {
    if !params.is_symmetric() {
        return Err(domain("gig_log_moment_numeric", "requires a == b"));
    }
    if m > MAX_LOG_MOMENT {
        return Err(domain(
            "gig_log_moment_numeric",
            format!("order {m} > {MAX_LOG_MOMENT}"),
        ));
    }
    if m == 0 {
        return Ok(1.0);
    }
    let lambda = params.lambda;
    let odd = m % 2 == 1;
    if odd && lambda == 0.0 {
        return Ok(0.0);
    }
    let w = params.a * params.a;
    let nu = lambda.abs();
    let mf = f64::from(m);
    let g = move |u: f64| {
        let shape = if odd { log_sinh(nu * u) } else { log_cosh(nu * u) };
        mf * u.ln() + shape - 2.0 * w * (0.5 * u).sinh().powi(2)
    };
    let mut upper: f64 = 1.0;
    while 2.0 * w * (0.5 * upper).sinh().powi(2) < (mf + nu) * upper + 200.0 {
        upper *= 2.0;
    }
    let peak = quad::golden_max(g, 0.0, upper);
    let width = quad::curvature_width(g, peak, peak.max(1.0 / (1.0 + w.sqrt())));
    // Both integrals carry the common factor exp(-a²), which cancels.
    let log_num = quad::log_integral_even(g, peak, width);
    let log_den = log_bessel_k(lambda, w)? + w;
    let magnitude = (log_num - log_den).exp();
    Ok(if odd && lambda < 0.0 { -magnitude } else { magnitude })
}

/// Large-`a` equivalent of `E[ln^m X]`, `X ~ GIG(λ, a, a)`:
/// `2^{m/2} Γ((m+1)/2) / (a^m √π)` for even `m`,
/// `λ 2^{(m+1)/2} Γ((m+2)/2) / (a^{m+1} √π)` for odd `m`.
pub fn gig_log_moment_asymptotic(lambda: f64, a: f64, m: u32) -> Result<f64> {
    require_positive("gig_log_moment_asymptotic a", a)?;
    let mf = f64::from(m);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    Ok(if m.is_multiple_of(2) {
        (0.5 * mf * std::f64::consts::LN_2 + log_gamma(0.5 * (mf + 1.0))? - mf * a.ln()).exp() / sqrt_pi
    } else {
        lambda * (0.5 * (mf + 1.0) * std::f64::consts::LN_2 + log_gamma(0.5 * (mf + 2.0))? - (mf + 1.0) * a.ln()).exp()
            / sqrt_pi
    })
}

pub(crate) fn log_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x - std::f64::consts::LN_2 + (-2.0 * x).exp().ln_1p()
    } else {
        x.sinh().ln()
    }
}

/// Offsets `(s, t)` around the mode `m = asinh(ν/ω)` of `v ↦ νv - ω cosh v`
/// where the log-density has dropped by `drop`: `d(-s) = d(t) = -drop`.
fn level_offsets(nu: f64, omega: f64, drop: f64) -> (f64, f64) {
    let mode = (nu / omega).asinh();
    let d = |v: f64| nu * v - 2.0 * omega * (mode + 0.5 * v).sinh() * (0.5 * v).sinh();
    let solve = |sign: f64| {
        let mut hi = 1.0 / omega.sqrt().max(1e-3);
        while d(sign * hi) > -drop {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if d(sign * mid) > -drop {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    (solve(-1.0), solve(1.0))
}

/// Exact sampler for `GIG(λ, a, b)`.
///
/// Draws `V = ln Y - m` where `Y ~ GIG(|λ|, ω, ω)`-standardized has mode
/// `e^m`. The density of `V` is log-concave, so it sits under a three-piece
/// envelope: a flat top on `[-s, t]`, where the log-density stays within 1 of
/// its maximum, and exponential tails along the tangents at `-s` and `t`.
/// Concavity gives tail areas at most `t` and `s`, and the target mass on
/// `[-s, t]` is at least `(s + t)/e`, so the expected number of proposals per
/// draw is at most `e + 1 ≈ 3.72` for every parameter value; the loop
/// terminates with probability one.
#[derive(Debug, Clone)]
pub struct Gig {
    params: GigParams,
    nu: f64,
    omega: f64,
    mode: f64,
    left: f64,
    right: f64,
    left_rate: f64,
    right_rate: f64,
    center_area: f64,
    total_area: f64,
    scale: f64,
    invert: bool,
}

impl Gig {
    pub fn new(params: GigParams) -> Self {
        let nu = params.lambda.abs();
        let omega = params.omega();
        let mode = (nu / omega).asinh();
        let (left, right) = level_offsets(nu, omega, 1.0);
        // Tangent slopes of d at t and -s.
        let right_rate = omega * (mode + right).sinh() - nu;
        let left_rate = nu - omega * (mode - left).sinh();
        let center_area = left + right;
        let tail = (-1.0f64).exp();
        let total_area = center_area + tail / right_rate + tail / left_rate;
        Self {
            params,
            nu,
            omega,
            mode,
            left,
            right,
            left_rate,
            right_rate,
            center_area,
            total_area,
            scale: params.a / params.b,
            invert: params.lambda < 0.0,
        }
    }

    pub fn params(&self) -> &GigParams {
        &self.params
    }

    /// Envelope area over target area upper bound, `(total envelope)/((s+t)/e)`.
    pub fn rejection_bound(&self) -> f64 {
        self.total_area * std::f64::consts::E / self.center_area
    }

    fn log_density_offset(&self, v: f64) -> f64 {
        self.nu * v - 2.0 * self.omega * (self.mode + 0.5 * v).sinh() * (0.5 * v).sinh()
    }
}

impl Distribution<f64> for Gig {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let pick = rng.random::<f64>() * self.total_area;
            let (v, log_env) = if pick < self.center_area {
                (-self.left + pick, 0.0)
            } else {
                let e: f64 = -(1.0 - rng.random::<f64>()).ln();
                if pick < self.center_area + (-1.0f64).exp() / self.right_rate {
                    let v = self.right + e / self.right_rate;
                    (v, -1.0 - e)
                } else {
                    let v = -self.left - e / self.left_rate;
                    (v, -1.0 - e)
                }
            };
            let u: f64 = rng.random();
            if u.ln() <= self.log_density_offset(v) - log_env {
                let y = (self.mode + v).exp();
                let y = if self.invert { 1.0 / y } else { y };
                return self.scale * y;
            }
        }
    }
}

/// Tabulated CDF of a GIG law, integrated by quadrature of the density in
/// `u = ln x` and interpolated with cubic Hermite splines.
#[derive(Debug, Clone)]
pub struct GigCdf {
    u0: f64,
    step: f64,
    cdf: Vec<f64>,
    dens: Vec<f64>,
}

impl GigCdf {
    const NODES: usize = 40_001;

    pub fn new(params: &GigParams) -> Result<Self> {
        let nu = params.lambda.abs();
        let omega = params.omega();
        let (s, t) = level_offsets(nu, omega, 60.0);
        let mode = (nu / omega).asinh();
        let (lo, hi) = (mode - s, mode + t);
        // Standardized u-density of ln Y for GIG(|λ|, ω); map to the requested
        // law at lookup time.
        let log_norm = -std::f64::consts::LN_2 - log_bessel_k(nu, omega)?;
        let step = (hi - lo) / (Self::NODES - 1) as f64;
        let dens: Vec<f64> = (0..Self::NODES)
            .map(|i| {
                let v = lo + step * i as f64;
                (log_norm + nu * v - omega * v.cosh()).exp()
            })
            .collect();
        let mut cdf = Vec::with_capacity(Self::NODES);
        let mut acc = 0.0;
        cdf.push(0.0);
        for i in 1..Self::NODES {
            // Trapezoid with endpoint-derivative correction (Euler–Maclaurin).
            let (v0, v1) = (lo + step * (i - 1) as f64, lo + step * i as f64);
            let d0 = dens[i - 1] * (nu - omega * v0.sinh());
            let d1 = dens[i] * (nu - omega * v1.sinh());
            acc += 0.5 * step * (dens[i - 1] + dens[i]) + step * step / 12.0 * (d0 - d1);
            cdf.push(acc);
        }
        let total = acc;
        for c in cdf.iter_mut() {
            *c /= total;
        }
        let dens = dens.into_iter().map(|d| d / total).collect();
        let mut table = Self {
            u0: lo,
            step,
            cdf,
            dens,
        };
        if params.lambda < 0.0 {
            table = table.reflected();
        }
        table.u0 += (params.a / params.b).ln();
        Ok(table)
    }

    /// Table of `-ln Y` from the table of `ln Y`.
    fn reflected(self) -> Self {
        let n = self.cdf.len();
        let hi = self.u0 + self.step * (n - 1) as f64;
        let cdf = self.cdf.iter().rev().map(|c| 1.0 - c).collect();
        let dens = self.dens.into_iter().rev().collect();
        Self {
            u0: -hi,
            step: self.step,
            cdf,
            dens,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x <= 0.0 {
            return 0.0;
        }
        if x == f64::INFINITY {
            return 1.0;
        }
        let pos = (x.ln() - self.u0) / self.step;
        if pos <= 0.0 {
            return 0.0;
        }
        let i = pos.floor() as usize;
        if i + 1 >= self.cdf.len() {
            return 1.0;
        }
        let t = pos - i as f64;
        let (p0, p1) = (self.cdf[i], self.cdf[i + 1]);
        let (m0, m1) = (self.dens[i] * self.step, self.dens[i + 1] * self.step);
        let t2 = t * t;
        let t3 = t2 * t;
        let value =
            (2.0 * t3 - 3.0 * t2 + 1.0) * p0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * p1 + (t3 - t2) * m1;
        value.clamp(0.0, 1.0)
    }
}

/// Inverse-gamma parameters: density `scale^shape / Γ(shape) · x^{-shape-1} e^{-scale/x}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvGammaParams {
    pub shape: f64,
    pub scale: f64,
}

impl InvGammaParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        require_positive("inverse-gamma shape", shape)?;
        require_positive("inverse-gamma scale", scale)?;
        Ok(Self { shape, scale })
    }

    /// The stationary law of the AN-part chain: shape `λ`, scale `a²/2`.
    pub fn stationary(lambda: f64, a: f64) -> Result<Self> {
        Self::new(lambda, 0.5 * a * a)
    }

    pub fn log_pdf(&self, x: f64) -> Result<f64> {
        require_positive("inverse_gamma_pdf x", x)?;
        Ok(self.shape * self.scale.ln() - log_gamma(self.shape)? - (self.shape + 1.0) * x.ln() - self.scale / x)
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        Ok(self.log_pdf(x)?.exp())
    }

    /// `Q(shape, scale/x)`, the regularized upper incomplete gamma function.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x <= 0.0 {
            return Err(domain("inverse_gamma_cdf x", format!("expected x > 0, got {x}")));
        }
        if x == f64::INFINITY {
            return Ok(1.0);
        }
        Ok(statrs::function::gamma::gamma_ur(self.shape, self.scale / x))
    }

    pub fn mean(&self) -> Option<f64> {
        (self.shape > 1.0).then(|| self.scale / (self.shape - 1.0))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let gamma = Gamma::new(self.shape, 1.0).expect("validated shape");
        self.scale / gamma.sample(rng)
    }
}

pub fn inverse_gamma_pdf(params: &InvGammaParams, x: f64) -> Result<f64> {
    params.pdf(x)
}

pub fn inverse_gamma_cdf(params: &InvGammaParams, x: f64) -> Result<f64> {
    params.cdf(x)
}

pub fn inverse_gamma_sample<R: Rng + ?Sized>(params: &InvGammaParams, rng: &mut R) -> f64 {
    params.sample(rng)
}

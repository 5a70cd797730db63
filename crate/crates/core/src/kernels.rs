//! Transition densities of the walk's coordinate chains at unit `δ`, their
//! composition by quadrature, and numerical checks of the kernel identities.
//!
//! * `Q(x, y)`: the `Z`-chain, `Z_{n+1}` given `Z_n = x`.
//! * `P(x, y)`: the `X`-chain, `y = xγ`.
//! * `Λ(z, x)`: the law of `X_n` given `Z_n = z`, `GIG(λ, a/√z, a/√z)`.
//! * `K̃(x, y)`: the AN-part chain, `y = γ²x + γ` with `γ ~ GIG(-λ, a, a)`.
//! * `π`: inverse-gamma with shape `λ` and scale `a²/2`, invariant for `K̃`.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, require_positive, Error, Result};
use crate::gig::InvGammaParams;
use crate::grid::{GridSpec, LogGrid};
use crate::specfun::log_bessel_k;

/// Largest log-measure integrand value tolerated at either end of a grid.
pub const BOUNDARY_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelFamily {
    Q,
    P,
    Lambda,
    KTilde,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            Self::Q => "Q",
            Self::P => "P",
            Self::Lambda => "Lambda",
            Self::KTilde => "KTilde",
        }
    }

    /// Whether the density involves `K_λ(a²/source)` or `K_λ(a²/target)`.
    fn uses_node_bessel(self) -> bool {
        matches!(self, Self::Q | Self::Lambda)
    }
}

/// One of the four transition densities at fixed `(λ, a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelDensity {
    pub family: KernelFamily,
    pub lambda: f64,
    pub a: f64,
    log_k_a2: f64,
}

impl KernelDensity {
    pub fn new(family: KernelFamily, lambda: f64, a: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(domain("kernel lambda", format!("non-finite {lambda}")));
        }
        require_positive("kernel a", a)?;
        Ok(Self {
            family,
            lambda,
            a,
            log_k_a2: log_bessel_k(lambda, a * a)?,
        })
    }

    /// `ln K_λ(a²/x)`.
    fn log_k_at(&self, x: f64) -> Result<f64> {
        log_bessel_k(self.lambda, self.a * self.a / x)
    }

    /// Log density with `ln K_λ(a²/x)` and `ln K_λ(a²/y)` supplied; each is
    /// ignored by families that do not use it.
    fn log_eval(&self, x: f64, y: f64, lk_x: f64, lk_y: f64) -> f64 {
        let (l, a2) = (self.lambda, self.a * self.a);
        match self.family {
            KernelFamily::Q => {
                -LN_2 - self.log_k_a2 + lk_y - lk_x - y.ln() - 0.5 * a2 * (x / y + y / x + 1.0 / (x * y))
            }
            KernelFamily::P => -LN_2 - self.log_k_a2 + (l - 1.0) * y.ln() - l * x.ln() - 0.5 * a2 * (y / x + x / y),
            KernelFamily::Lambda => -LN_2 - lk_x + (l - 1.0) * y.ln() - 0.5 * a2 / x * (y + 1.0 / y),
            KernelFamily::KTilde => {
                let s = (1.0 + 4.0 * x * y).sqrt();
                // (-1 + s)/(2x), rationalized
                let g = 2.0 * y / (1.0 + s);
                -LN_2 - self.log_k_a2 - s.ln() - (l + 1.0) * g.ln() - 0.5 * a2 * (g + 1.0 / g)
            }
        }
    }

    pub fn log_evaluate(&self, source: f64, target: f64) -> Result<f64> {
        require_positive("kernel source", source)?;
        require_positive("kernel target", target)?;
        let (lk_x, lk_y) = match self.family {
            KernelFamily::Q => (self.log_k_at(source)?, self.log_k_at(target)?),
            KernelFamily::Lambda => (self.log_k_at(source)?, 0.0),
            _ => (0.0, 0.0),
        };
        Ok(self.log_eval(source, target, lk_x, lk_y))
    }

    pub fn evaluate(&self, source: f64, target: f64) -> Result<f64> {
        Ok(self.log_evaluate(source, target)?.exp())
    }

    /// `ln K_λ(a²/xᵢ)` on every grid node, when the family needs it.
    fn node_table(&self, grid: &LogGrid) -> Result<Vec<f64>> {
        if !self.family.uses_node_bessel() {
            return Ok(vec![0.0; grid.len()]);
        }
        grid.points().par_iter().map(|&x| self.log_k_at(x)).collect()
    }

    fn shares_bessel(&self, other: &Self) -> bool {
        self.lambda == other.lambda && self.a == other.a
    }
}

pub fn q_density(lambda: f64, a: f64, x: f64, y: f64) -> Result<f64> {
    KernelDensity::new(KernelFamily::Q, lambda, a)?.evaluate(x, y)
}

pub fn p_density(lambda: f64, a: f64, x: f64, y: f64) -> Result<f64> {
    KernelDensity::new(KernelFamily::P, lambda, a)?.evaluate(x, y)
}

pub fn lambda_density(lambda: f64, a: f64, z: f64, x: f64) -> Result<f64> {
    KernelDensity::new(KernelFamily::Lambda, lambda, a)?.evaluate(z, x)
}

pub fn ktilde_density(lambda: f64, a: f64, x: f64, y: f64) -> Result<f64> {
    KernelDensity::new(KernelFamily::KTilde, lambda, a)?.evaluate(x, y)
}

/// Inverse-gamma density with shape `λ > 0` and scale `a²/2`.
pub fn pi_density(lambda: f64, a: f64, x: f64) -> Result<f64> {
    InvGammaParams::stationary(lambda, a)?.pdf(x)
}

/// `v ↦ ∫ first(source, y) second(y, v) dy` tabulated on the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    pub values: Vec<f64>,
    /// Largest log-measure integrand at the two outermost nodes, over all
    /// targets.
    pub boundary: f64,
}

impl Composition {
    pub fn mass(&self, grid: &LogGrid) -> f64 {
        grid.integrate_values(&self.values)
    }
}

/// `Σᵢ wᵢ exp(ln_first[i] + ln_second(i, j))` for every target `j`.
fn integrate_rows(
    grid: &LogGrid,
    log_first: &[f64],
    log_second: impl Fn(usize, usize) -> f64 + Sync,
) -> Result<Composition> {
    let n = grid.len();
    let lw: Vec<f64> = grid.weights().iter().map(|w| w.ln()).collect();
    let lx: Vec<f64> = grid.points().iter().map(|x| x.ln()).collect();
    let rows: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut acc = 0.0;
            for i in 0..n {
                let lf = log_first[i];
                if lf == f64::NEG_INFINITY {
                    continue;
                }
                acc += (lw[i] + lf + log_second(i, j)).exp();
            }
            let edge = |i: usize| (lx[i] + log_first[i] + log_second(i, j)).exp();
            (acc, edge(0).max(edge(n - 1)))
        })
        .collect();
    let boundary = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    if boundary.is_nan() || boundary > BOUNDARY_LIMIT {
        return Err(Error::GridCoverage {
            mass: boundary,
            limit: BOUNDARY_LIMIT,
        });
    }
    Ok(Composition {
        values: rows.into_iter().map(|r| r.0).collect(),
        boundary,
    })
}

fn compose_with_tables(
    first: &KernelDensity,
    first_table: &[f64],
    second: &KernelDensity,
    second_table: &[f64],
    source: f64,
    grid: &LogGrid,
) -> Result<Composition> {
    require_positive("compose source", source)?;
    let lk_src = if first.family.uses_node_bessel() {
        first.log_k_at(source)?
    } else {
        0.0
    };
    let ys = grid.points();
    let log_first: Vec<f64> = ys
        .iter()
        .zip(first_table)
        .map(|(&y, &lk_y)| first.log_eval(source, y, lk_src, lk_y))
        .collect();
    integrate_rows(grid, &log_first, |i, j| {
        second.log_eval(ys[i], ys[j], second_table[i], second_table[j])
    })
}

/// `(first · second)(source, ·)` on the grid nodes by trapezoid quadrature in
/// `ln y`.
pub fn compose(first: &KernelDensity, second: &KernelDensity, source: f64, grid: &LogGrid) -> Result<Composition> {
    let t1 = first.node_table(grid)?;
    let t2 = if first.shares_bessel(second) {
        t1.clone()
    } else {
        second.node_table(grid)?
    };
    compose_with_tables(first, &t1, second, &t2, source, grid)
}

/// `sup_v |(ΛP)(z, v) - (QΛ)(z, v)|` over the grid for arbitrary kernels in
/// the three roles.
pub fn intertwining_residual(
    q: &KernelDensity,
    p: &KernelDensity,
    link: &KernelDensity,
    z: f64,
    grid: &LogGrid,
) -> Result<f64> {
    let t_link = link.node_table(grid)?;
    let t_q = if q.shares_bessel(link) {
        t_link.clone()
    } else {
        q.node_table(grid)?
    };
    let t_p = p.node_table(grid)?;
    let lp = compose_with_tables(link, &t_link, p, &t_p, z, grid)?;
    let ql = compose_with_tables(q, &t_q, link, &t_link, z, grid)?;
    Ok(sup_gap(&lp.values, &ql.values))
}

fn sup_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Sup-norm residual of `ΛP = QΛ` at source `z`.
pub fn check_intertwining(lambda: f64, a: f64, z: f64, grid: &LogGrid) -> Result<f64> {
    require_positive("check_intertwining z", z)?;
    let q = KernelDensity::new(KernelFamily::Q, lambda, a)?;
    let p = KernelDensity::new(KernelFamily::P, lambda, a)?;
    let link = KernelDensity::new(KernelFamily::Lambda, lambda, a)?;
    intertwining_residual(&q, &p, &link, z, grid)
}

/// `ln(π(x) k̃(x, y)) - ln(π(y) k̃(y, x))`.
pub fn detailed_balance_log_ratio(lambda: f64, a: f64, x: f64, y: f64) -> Result<f64> {
    let pi = InvGammaParams::stationary(lambda, a)?;
    let k = KernelDensity::new(KernelFamily::KTilde, lambda, a)?;
    Ok(pi.log_pdf(x)? + k.log_evaluate(x, y)? - pi.log_pdf(y)? - k.log_evaluate(y, x)?)
}

/// `sup_y |∫ π(x) k̃(x, y) dx - π(y)|` over the grid.
pub fn check_stationarity(lambda: f64, a: f64, grid: &LogGrid) -> Result<f64> {
    let pi = InvGammaParams::stationary(lambda, a)?;
    let k = KernelDensity::new(KernelFamily::KTilde, lambda, a)?;
    let xs = grid.points();
    let log_pi: Vec<f64> = xs.iter().map(|&x| pi.log_pdf(x)).collect::<Result<_>>()?;
    let pushed = integrate_rows(grid, &log_pi, |i, j| k.log_eval(xs[i], xs[j], 0.0, 0.0))?;
    Ok(pushed
        .values
        .iter()
        .zip(&log_pi)
        .map(|(v, lp)| (v - lp.exp()).abs())
        .fold(0.0, f64::max))
}

/// Normalizing integral on the grid, rejected if it underflowed.
fn normalizer(grid: &LogGrid, g: impl Fn(f64) -> f64) -> Result<f64> {
    let value = grid.integrate(g);
    if value.is_finite() && value > f64::MIN_POSITIVE {
        Ok(value)
    } else {
        Err(Error::Normalization { value })
    }
}

/// Density of `X_2` given `Z_2 = z` when `γ_0, γ_1` are i.i.d. with density
/// `f`: proportional to `f((x+1)/z) f(xz/(x+1))`.
pub struct ConditionalX2<'f> {
    f: &'f dyn Fn(f64) -> f64,
    z: f64,
    norm: f64,
}

impl<'f> ConditionalX2<'f> {
    pub fn new(f: &'f dyn Fn(f64) -> f64, z: f64, grid: &LogGrid) -> Result<Self> {
        require_positive("conditional z", z)?;
        let mut c = Self { f, z, norm: 1.0 };
        c.norm = normalizer(grid, |x| c.unnormalized(x))?;
        Ok(c)
    }

    fn unnormalized(&self, x: f64) -> f64 {
        let z = self.z;
        (self.f)((x + 1.0) / z) * (self.f)(x * z / (x + 1.0))
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        require_positive("conditional x", x)?;
        Ok(self.unnormalized(x) / self.norm)
    }
}

/// Density of `X_3` given `Z_3 = z, Z_2 = u` for i.i.d. increments with
/// density `f`: proportional to
/// `f((ux+z+1)/(uz)) f((u²x+u)/(ux+z+1)) f(xz/(ux+1))`.
pub struct ConditionalX3<'f> {
    f: &'f dyn Fn(f64) -> f64,
    z: f64,
    u: f64,
    norm: f64,
}

impl<'f> ConditionalX3<'f> {
    pub fn new(f: &'f dyn Fn(f64) -> f64, z: f64, u: f64, grid: &LogGrid) -> Result<Self> {
        require_positive("conditional z", z)?;
        require_positive("conditional u", u)?;
        let mut c = Self { f, z, u, norm: 1.0 };
        c.norm = normalizer(grid, |x| c.unnormalized(x))?;
        Ok(c)
    }

    fn unnormalized(&self, x: f64) -> f64 {
        let (z, u) = (self.z, self.u);
        let s = u * x + z + 1.0;
        (self.f)(s / (u * z)) * (self.f)((u * u * x + u) / s) * (self.f)(x * z / (u * x + 1.0))
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        require_positive("conditional x", x)?;
        Ok(self.unnormalized(x) / self.norm)
    }
}

/// [`ConditionalX2`] at a single point, normalized on the default grid.
pub fn conditional_x2_given_z2(f: &dyn Fn(f64) -> f64, z: f64, x: f64) -> Result<f64> {
    ConditionalX2::new(f, z, &LogGrid::default())?.density(x)
}

/// [`ConditionalX3`] at a single point, normalized on the default grid.
pub fn conditional_x3_given_z3_z2(f: &dyn Fn(f64) -> f64, z: f64, u: f64, x: f64) -> Result<f64> {
    ConditionalX3::new(f, z, u, &LogGrid::default())?.density(x)
}

/// `sup_x |p(X_2 = x | Z_2 = z) - p(X_3 = x | Z_3 = z, Z_2 = u)|` over the
/// grid. Zero for GIG increments, positive otherwise.
pub fn characterization_discrepancy(f: &dyn Fn(f64) -> f64, z: f64, u: f64, grid: &LogGrid) -> Result<f64> {
    let c2 = ConditionalX2::new(f, z, grid)?;
    let c3 = ConditionalX3::new(f, z, u, grid)?;
    grid.points()
        .iter()
        .try_fold(0.0f64, |acc, &x| Ok(acc.max((c2.density(x)? - c3.density(x)?).abs())))
}

/// Coefficients of `½ σ²(z) ∂² + b(z) ∂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorCoefficients {
    pub drift: f64,
    pub diffusion: f64,
}

/// Generator of the continuous limit of `Z`: diffusion `z²` and drift
/// `(½ + λ) z + K_{1-λ}(1/z) / K_λ(1/z)`.
pub fn my_generator_coefficients(lambda: f64, z: f64) -> Result<GeneratorCoefficients> {
    require_positive("generator z", z)?;
    let w = 1.0 / z;
    let ratio = (log_bessel_k(1.0 - lambda, w)? - log_bessel_k(lambda, w)?).exp();
    Ok(GeneratorCoefficients {
        drift: (0.5 + lambda) * z + ratio,
        diffusion: z * z,
    })
}

/// The other typographic reading of the drift, `(½ + λ) z + (K_{1-λ}(1)/K_λ(1)) / z`,
/// kept so that empirical checks can report both.
pub fn alternative_generator_drift(lambda: f64, z: f64) -> Result<f64> {
    require_positive("generator z", z)?;
    let ratio = (log_bessel_k(1.0 - lambda, 1.0)? - log_bessel_k(lambda, 1.0)?).exp();
    Ok((0.5 + lambda) * z + ratio / z)
}

/// One line of a kernel residual report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub schema_version: u32,
    pub family: String,
    pub lambda: f64,
    pub a: f64,
    pub source: Option<f64>,
    pub residual: f64,
    pub grid_spec: GridSpec,
    pub tolerance: f64,
    pub pass: bool,
}

impl ResidualRecord {
    pub fn new(
        family: impl Into<String>,
        lambda: f64,
        a: f64,
        source: Option<f64>,
        residual: f64,
        grid: &LogGrid,
        tolerance: f64,
    ) -> Self {
        Self {
            schema_version: crate::SCHEMA_VERSION,
            family: family.into(),
            lambda,
            a,
            source,
            residual,
            grid_spec: grid.spec(),
            tolerance,
            pass: residual < tolerance,
        }
    }
}

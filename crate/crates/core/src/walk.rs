//! The lower-triangular random walk `b_n = g_0 g_1 ⋯ g_{n-1}` with increments
//! `g = [[γ, 0], [δ, 1/γ]]`, `γ ~ GIG(λ, a, a)`.
//!
//! A path is stored through its diagonal entry `X_n` and lower-left entry
//! `Z_n`, both kept as logarithms so that long paths with strong drift neither
//! overflow nor underflow.

use std::io::Write;
use std::ops::Mul;

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{domain, require_positive, Error, Result};
use crate::gig::{Gig, GigParams};
use crate::specfun::log_add_exp;

/// The matrix `[[x, 0], [z, 1/x]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangularElement {
    pub x: f64,
    pub z: f64,
}

impl TriangularElement {
    pub fn new(x: f64, z: f64) -> Result<Self> {
        if x == 0.0 || !x.is_finite() || !z.is_finite() {
            return Err(domain("TriangularElement", format!("x={x}, z={z}")));
        }
        Ok(Self { x, z })
    }

    pub const fn identity() -> Self {
        Self { x: 1.0, z: 0.0 }
    }

    /// `[[γ, 0], [δ, 1/γ]]`.
    pub fn increment(gamma: f64, delta: f64) -> Self {
        Self { x: gamma, z: delta }
    }

    pub fn det(&self) -> f64 {
        self.x * self.x.recip()
    }

    pub fn inverse(&self) -> Self {
        Self {
            x: self.x.recip(),
            z: -self.z,
        }
    }

    /// Row-major entries `[[x, 0], [z, 1/x]]`.
    pub fn to_matrix(&self) -> [[f64; 2]; 2] {
        [[self.x, 0.0], [self.z, self.x.recip()]]
    }
}

impl Mul for TriangularElement {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self {
            x: self.x * rhs.x,
            z: self.z * rhs.x + rhs.z / self.x,
        }
    }
}

/// `state · [[γ, 0], [δ, 1/γ]]`.
pub fn walk_step(state: TriangularElement, gamma: f64, delta: f64) -> TriangularElement {
    debug_assert!(gamma > 0.0);
    state * TriangularElement::increment(gamma, delta)
}

/// A source of increments `γ_0, γ_1, …`.
///
/// Any `FnMut() -> f64` is a source, which is how fixed sequences are
/// injected in tests.
pub trait Increments {
    fn next_gamma(&mut self) -> f64;
}

impl<F: FnMut() -> f64> Increments for F {
    fn next_gamma(&mut self) -> f64 {
        self()
    }
}

/// GIG increments drawn from a random stream.
pub struct GigIncrements<'a, R: ?Sized> {
    sampler: &'a Gig,
    rng: &'a mut R,
}

impl<'a, R: Rng + ?Sized> GigIncrements<'a, R> {
    pub fn new(sampler: &'a Gig, rng: &'a mut R) -> Self {
        Self { sampler, rng }
    }
}

impl<R: Rng + ?Sized> Increments for GigIncrements<'_, R> {
    fn next_gamma(&mut self) -> f64 {
        self.sampler.sample(self.rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub gig: GigParams,
    pub delta: f64,
    pub steps: usize,
    pub seed: u64,
}

impl WalkConfig {
    pub fn new(gig: GigParams, delta: f64, steps: usize, seed: u64) -> Result<Self> {
        if !gig.is_symmetric() {
            return Err(domain("WalkConfig", "increment law must have a == b"));
        }
        require_positive("delta", delta)?;
        if steps == 0 {
            return Err(domain("WalkConfig", "steps must be at least 1"));
        }
        Ok(Self {
            gig,
            delta,
            steps,
            seed,
        })
    }

    /// The stream this configuration's seed designates.
    pub fn stream(&self) -> crate::rng::Stream {
        crate::rng::stream(self.seed, 0)
    }
}

/// A simulated path `(γ_k, X_k, Z_k)`, with `X_1 = γ_0` and `Z_1 = δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkPath {
    gammas: Vec<f64>,
    log_xs: Vec<f64>,
    log_zs: Vec<f64>,
    delta: f64,
}

impl WalkPath {
    /// Runs `steps` steps from the identity.
    pub fn from_increments(delta: f64, steps: usize, source: &mut impl Increments) -> Result<Self> {
        require_positive("delta", delta)?;
        let log_delta = delta.ln();
        let mut gammas = Vec::with_capacity(steps);
        let mut log_xs = Vec::with_capacity(steps);
        let mut log_zs = Vec::with_capacity(steps);
        let (mut lx, mut lz) = (0.0f64, f64::NEG_INFINITY);
        for _ in 0..steps {
            let g = source.next_gamma();
            require_positive("increment", g)?;
            let lg = g.ln();
            // z' = zγ + δ/x
            lz = log_add_exp(lz + lg, log_delta - lx);
            lx += lg;
            gammas.push(g);
            log_xs.push(lx);
            log_zs.push(lz);
        }
        Ok(Self {
            gammas,
            log_xs,
            log_zs,
            delta,
        })
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `γ_0, …, γ_{n-1}`.
    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// `ln X_1, …, ln X_n`.
    pub fn log_xs(&self) -> &[f64] {
        &self.log_xs
    }

    /// `ln Z_1, …, ln Z_n`.
    pub fn log_zs(&self) -> &[f64] {
        &self.log_zs
    }

    pub fn xs(&self) -> Vec<f64> {
        self.log_xs.iter().map(|v| v.exp()).collect()
    }

    pub fn zs(&self) -> Vec<f64> {
        self.log_zs.iter().map(|v| v.exp()).collect()
    }

    fn check_index(&self, k: usize) -> Result<usize> {
        if k == 0 || k > self.len() {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.len(),
            });
        }
        Ok(k - 1)
    }

    /// `X_k`, 1-based.
    pub fn x(&self, k: usize) -> Result<f64> {
        Ok(self.log_xs[self.check_index(k)?].exp())
    }

    /// `Z_k`, 1-based.
    pub fn z(&self, k: usize) -> Result<f64> {
        Ok(self.log_zs[self.check_index(k)?].exp())
    }

    /// `b_k`, 1-based.
    pub fn element(&self, k: usize) -> Result<TriangularElement> {
        TriangularElement::new(self.x(k)?, self.z(k)?)
    }

    /// The walk driven by `γ_k⁻¹` over the same steps.
    pub fn reciprocal(&self) -> Self {
        let mut it = self.gammas.iter().map(|g| g.recip());
        Self::from_increments(self.delta, self.len(), &mut || it.next().unwrap_or(1.0))
            .expect("reciprocals of positive increments are positive")
    }

    /// Writes `k, gamma, x, z, n_na, n_an` rows, one per step, with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k,gamma,x,z,n_na,n_an")?;
        for k in 0..self.len() {
            let (lx, lz) = (self.log_xs[k], self.log_zs[k]);
            writeln!(
                out,
                "{},{},{},{},{},{}",
                k + 1,
                self.gammas[k],
                lx.exp(),
                lz.exp(),
                (lz - lx).exp(),
                (lz + lx).exp()
            )?;
        }
        Ok(())
    }
}

/// Simulates one path with GIG increments.
pub fn simulate_path<R: Rng + ?Sized>(config: &WalkConfig, rng: &mut R) -> WalkPath {
    let sampler = config.gig.sampler();
    let mut source = GigIncrements::new(&sampler, rng);
    WalkPath::from_increments(config.delta, config.steps, &mut source).expect("validated config and positive GIG draws")
}

/// Simulates one path from an injected increment sequence.
pub fn simulate_path_with(delta: f64, steps: usize, source: &mut impl Increments) -> Result<WalkPath> {
    if steps == 0 {
        return Err(domain("simulate_path_with", "steps must be at least 1"));
    }
    WalkPath::from_increments(delta, steps, source)
}

fn require_all_positive(what: &'static str, values: &[f64]) -> Result<()> {
    values.iter().try_for_each(|&v| require_positive(what, v))
}

/// `Φ_n(y_0, …, y_{n-1}) = (z_2, …, z_n, x_n)`: the unit-`δ` walk coordinates
/// reached from increments `y`.
pub fn phi_forward(ys: &[f64]) -> Result<(Vec<f64>, f64)> {
    if ys.len() < 2 {
        return Err(Error::Length {
            what: "phi_forward input",
            expected: "at least 2".into(),
            got: ys.len(),
        });
    }
    require_all_positive("phi_forward y", ys)?;
    let mut state = TriangularElement::identity();
    let mut zs = Vec::with_capacity(ys.len() - 1);
    for (k, &y) in ys.iter().enumerate() {
        state = walk_step(state, y, 1.0);
        if k > 0 {
            zs.push(state.z);
        }
    }
    Ok((zs, state.x))
}

/// Inverse of [`phi_forward`], by the backward recursion
/// `x_{k-1} = (x_k z_{k-1} + 1) / z_k` from `z_1 = 1`.
pub fn phi_inverse(zs: &[f64], x: f64) -> Result<Vec<f64>> {
    if zs.is_empty() {
        return Err(Error::Length {
            what: "phi_inverse z",
            expected: "at least 1".into(),
            got: 0,
        });
    }
    require_all_positive("phi_inverse z", zs)?;
    require_positive("phi_inverse x", x)?;
    let n = zs.len() + 1;
    let z_at = |k: usize| if k == 1 { 1.0 } else { zs[k - 2] };
    let mut ys = vec![0.0; n];
    let mut xk = x;
    for k in (2..=n).rev() {
        let prev = (xk * z_at(k - 1) + 1.0) / z_at(k);
        ys[k - 1] = xk / prev;
        xk = prev;
    }
    ys[0] = xk;
    if let Some((index, &value)) = ys.iter().enumerate().find(|(_, y)| !(y.is_finite() && **y > 0.0)) {
        return Err(Error::NonInvertible { index, value });
    }
    Ok(ys)
}

/// `det DΦ_n = (-1)^{n-1} z_2 ⋯ z_n`, given `z_2, …, z_n`.
pub fn phi_jacobian_det(zs: &[f64]) -> Result<f64> {
    if zs.is_empty() {
        return Err(Error::Length {
            what: "phi_jacobian_det z",
            expected: "at least 1".into(),
            got: 0,
        });
    }
    let sign = if zs.len() % 2 == 1 { -1.0 } else { 1.0 };
    Ok(sign * zs.iter().product::<f64>())
}

/// `F_n = Σ_{k=1}^{n-1} (Z_{k+1}² + Z_k² + 1) / (Z_{k+1} Z_k)` from
/// `Z_1, …, Z_n`. With unit `δ`,
/// `Σ (γ_k + 1/γ_k) = (X_n + 1/X_n)/Z_n + F_n`.
pub fn f_n(zs: &[f64]) -> Result<f64> {
    if zs.len() < 2 {
        return Err(Error::Length {
            what: "f_n z",
            expected: "at least 2".into(),
            got: zs.len(),
        });
    }
    require_all_positive("f_n z", zs)?;
    Ok(zs
        .windows(2)
        .map(|w| (w[1] * w[1] + w[0] * w[0] + 1.0) / (w[1] * w[0]))
        .sum())
}

/// Unipotent parts of the NA and AN factorizations of `b_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NParts {
    /// `N_n = Z_n / X_n`.
    pub n_na: f64,
    /// `Ñ_n = X_n Z_n`.
    pub n_an: f64,
}

pub fn n_parts(path: &WalkPath, index: usize) -> Result<NParts> {
    let i = path.check_index(index)?;
    let (lx, lz) = (path.log_xs[i], path.log_zs[i]);
    Ok(NParts {
        n_na: (lz - lx).exp(),
        n_an: (lz + lx).exp(),
    })
}

/// Consecutive terms the stopping condition must hold for.
pub const PERSISTENCE_WINDOW: usize = 50;
/// Hard cap on the number of series terms.
pub const MAX_SERIES_TERMS: usize = 1_000_000;

/// `N_∞ = Σ_k γ_k⁻¹ P_k` with `P_k = (γ_0 ⋯ γ_{k-1})⁻²`.
///
/// Summation stops once `P_{k+1} < tail_tol · S_k` has held for
/// [`PERSISTENCE_WINDOW`] consecutive terms, where `S_k` is the partial sum.
/// A walk with `E ln γ ≤ 0` never settles and hits [`MAX_SERIES_TERMS`].
pub fn n_infinity_from(source: &mut impl Increments, tail_tol: f64) -> Result<f64> {
    require_positive("tail_tol", tail_tol)?;
    let log_tol = tail_tol.ln();
    let mut log_prefix = 0.0f64;
    let mut sum = 0.0f64;
    let mut streak = 0usize;
    for _ in 0..MAX_SERIES_TERMS {
        let g = source.next_gamma();
        require_positive("increment", g)?;
        let lg = g.ln();
        sum += (log_prefix - lg).exp();
        log_prefix -= 2.0 * lg;
        if log_prefix < log_tol + sum.ln() {
            streak += 1;
            if streak == PERSISTENCE_WINDOW {
                return Ok(sum);
            }
        } else {
            streak = 0;
        }
    }
    Err(Error::Divergence {
        cap: MAX_SERIES_TERMS,
        partial: sum,
    })
}

/// Draws `N_∞` under increments `GIG(λ, a, a)`, `λ > 0`.
#[derive(Debug, Clone)]
pub struct NInfinitySampler {
    gig: Gig,
    tail_tol: f64,
}

impl NInfinitySampler {
    pub fn new(lambda: f64, a: f64, tail_tol: f64) -> Result<Self> {
        require_positive("n_infinity lambda", lambda)?;
        require_positive("tail_tol", tail_tol)?;
        Ok(Self {
            gig: GigParams::symmetric(lambda, a)?.sampler(),
            tail_tol,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        n_infinity_from(&mut GigIncrements::new(&self.gig, rng), self.tail_tol)
    }
}

/// One draw of `N_∞`; see [`NInfinitySampler`] for repeated draws.
pub fn n_infinity_sample<R: Rng + ?Sized>(lambda: f64, a: f64, rng: &mut R, tail_tol: f64) -> Result<f64> {
    NInfinitySampler::new(lambda, a, tail_tol)?.sample(rng)
}

/// `X_n = Z_n / N_{n+p} + δ Z_n Σ_{k=1}^p 1/(Z_{n+k-1} Z_{n+k})`, from
/// `zs = Z_n, …, Z_{n+p}` and `n_future = N_{n+p}`.
pub fn reconstruct_x_finite(zs: &[f64], n_future: f64, delta: f64) -> Result<f64> {
    let (&first, _) = zs.split_first().ok_or(Error::Length {
        what: "reconstruct_x_finite z",
        expected: "at least 1".into(),
        got: 0,
    })?;
    require_all_positive("reconstruct_x_finite z", zs)?;
    require_positive("n_future", n_future)?;
    require_positive("delta", delta)?;
    let tail: f64 = zs.windows(2).map(|w| (w[0] * w[1]).recip()).sum();
    Ok(first / n_future + delta * first * tail)
}

/// Terms whose share of the reconstruction is checked against the tolerance.
pub const RECONSTRUCTION_WINDOW: usize = 100;

/// `ln X_n` from an observed tail `ln Z_n, ln Z_{n+1}, …`.
///
/// For `λ > 0`, `X_n = Z_n/N_∞ + δ Z_n Σ_{k≥1} 1/(Z_{n+k-1} Z_{n+k})` and
/// `n_inf` must be given; for `λ ≤ 0` the first term vanishes and `n_inf`
/// must be `None`. The tail is accepted when its last
/// [`RECONSTRUCTION_WINDOW`] terms contribute at most `tolerance` of the
/// result.
pub fn reconstruct_x_limit(
    log_zs_tail: &[f64],
    delta: f64,
    n_inf: Option<f64>,
    lambda: f64,
    tolerance: f64,
) -> Result<f64> {
    require_positive("delta", delta)?;
    require_positive("tolerance", tolerance)?;
    let head = match (lambda > 0.0, n_inf) {
        (true, Some(n)) => {
            require_positive("n_inf", n)?;
            -n.ln()
        }
        (false, None) => f64::NEG_INFINITY,
        (true, None) => return Err(domain("reconstruct_x_limit", "n_inf is required when lambda > 0")),
        (false, Some(_)) => return Err(domain("reconstruct_x_limit", "n_inf applies only when lambda > 0")),
    };
    if log_zs_tail.iter().any(|v| !v.is_finite()) {
        return Err(domain("reconstruct_x_limit", "non-finite ln Z"));
    }
    if log_zs_tail.len() <= RECONSTRUCTION_WINDOW {
        return Err(Error::InsufficientTail {
            window: RECONSTRUCTION_WINDOW,
            contribution: 1.0,
            tolerance,
        });
    }
    let terms: Vec<f64> = log_zs_tail.windows(2).map(|w| delta.ln() - w[0] - w[1]).collect();
    let split = terms.len() - RECONSTRUCTION_WINDOW;
    let fold = |acc: f64, t: &f64| log_add_exp(acc, *t);
    let log_last = terms[split..].iter().fold(f64::NEG_INFINITY, fold);
    let log_total = terms[..split].iter().fold(log_add_exp(head, log_last), fold);
    let contribution = (log_last - log_total).exp();
    if contribution > tolerance {
        return Err(Error::InsufficientTail {
            window: RECONSTRUCTION_WINDOW,
            contribution,
            tolerance,
        });
    }
    Ok(log_zs_tail[0] + log_total)
}

//! Special functions: the Macdonald function `K_ν`, `ln Γ`, and truncated
//! Watson-type asymptotic series for Laplace integrals.
//!
//! `K_ν(z)` is evaluated from its integral representation
//!
//! ```text
//! K_ν(z) = ½ ∫_0^∞ x^{ν-1} exp(-(z/2)(x + 1/x)) dx = ∫_0^∞ cosh(νu) exp(-z cosh u) du
//! ```
//!
//! after the substitution `x = e^u`. The second form is even and entire in
//! `u`, so a trapezoid rule converges geometrically. All work is done in log
//! space; [`log_bessel_k`] never overflows and [`bessel_k`] returns
//! `f64::INFINITY` when the value leaves the `f64` range.

use crate::error::{domain, require_positive, Error, Result};
use crate::quad;

/// `ln K_ν(z)` for real order and `z > 0`.
pub fn log_bessel_k(order: f64, z: f64) -> Result<f64> {
    require_positive("bessel_k argument", z)?;
    if !order.is_finite() {
        return Err(domain("bessel_k order", format!("non-finite order {order}")));
    }
    // K_ν = K_{-ν}: evaluating at |ν| makes the symmetry exact.
    let nu = order.abs();
    let g = |u: f64| log_cosh(nu * u) - 2.0 * z * (0.5 * u).sinh().powi(2);

    // g'(u) = ν tanh(νu) - z sinh(u); the peak is at 0 when ν² <= z.
    let peak = if nu * nu <= z {
        0.0
    } else {
        let slope = |u: f64| nu * (nu * u).tanh() - z * u.sinh();
        let mut lo = 0.0;
        let mut hi = (nu / z).asinh() + 1.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let curvature = z * peak.cosh() - nu * nu / (nu * peak).cosh().powi(2);
    let width = if curvature > 0.0 { 1.0 / curvature.sqrt() } else { 1.0 };
    Ok(quad::log_integral_even(g, peak, width) - z)
}

/// `K_ν(z)`, the modified Bessel function of the second kind.
///
/// Relative accuracy is about `1e-13` for `|ν| <= 30` and `z` in `[1e-4, 200]`,
/// and the routine keeps working well outside that box. Values above
/// `f64::MAX` come back as `f64::INFINITY`; use [`log_bessel_k`] when that
/// matters.
pub fn bessel_k(order: f64, z: f64) -> Result<f64> {
    let log_k = log_bessel_k(order, z)?;
    Ok(if log_k >= f64::MAX.ln() {
        f64::INFINITY
    } else {
        log_k.exp()
    })
}

/// Leading small-argument behaviour `K_ν(z) ~ ½ Γ(ν) (z/2)^{-ν}` for `ν > 0`.
pub fn bessel_k_small_z(order: f64, z: f64) -> Result<f64> {
    require_positive("bessel_k_small_z order", order)?;
    require_positive("bessel_k_small_z argument", z)?;
    let log_value = log_gamma(order)? - std::f64::consts::LN_2 - order * (0.5 * z).ln();
    Ok(log_value.exp())
}

/// `ln Γ(x)` for `x > 0` (Lanczos approximation, via `statrs`).
pub fn log_gamma(x: f64) -> Result<f64> {
    require_positive("log_gamma", x)?;
    Ok(statrs::function::gamma::ln_gamma(x))
}

/// `ln cosh(x)` without overflow.
pub(crate) fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `ln(e^a + e^b)` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Small-`t` expansion `f(t) ~ Σ c_n t^{a_n}` of a Laplace-transform integrand.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticSeries {
    coefficients: Vec<f64>,
    exponents: Vec<f64>,
}

impl AsymptoticSeries {
    pub fn new(coefficients: Vec<f64>, exponents: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() || coefficients.len() != exponents.len() {
            return Err(Error::Length {
                what: "asymptotic series",
                expected: format!("{} exponents, at least one", coefficients.len()),
                got: exponents.len(),
            });
        }
        if exponents[0].is_nan() || exponents[0] <= -1.0 {
            return Err(domain("asymptotic series", "first exponent must exceed -1"));
        }
        if exponents.windows(2).any(|w| w[1].is_nan() || w[1] <= w[0]) {
            return Err(domain("asymptotic series", "exponents must strictly increase"));
        }
        Ok(Self {
            coefficients,
            exponents,
        })
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }
}

/// Truncated large-`x` expansion `Σ_{n<terms} c_n Γ(a_n + 1) / x^{a_n + 1}` of
/// `∫_0^∞ f(t) e^{-xt} dt`.
///
/// The series is asymptotic, not convergent: adding terms need not improve
/// the result at a fixed `x`.
pub fn watson_partial_sum(series: &AsymptoticSeries, x: f64, terms: usize) -> Result<f64> {
    require_positive("watson_partial_sum x", x)?;
    if terms > series.len() {
        return Err(Error::Length {
            what: "watson_partial_sum terms",
            expected: format!("at most {}", series.len()),
            got: terms,
        });
    }
    let ln_x = x.ln();
    let mut sum = 0.0;
    for (&c, &a) in series.coefficients.iter().zip(&series.exponents).take(terms) {
        sum += c * (log_gamma(a + 1.0)? - (a + 1.0) * ln_x).exp();
    }
    Ok(sum)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // Reference values from 40-digit arbitrary precision evaluation.
    const REFERENCE: &[(f64, f64, f64)] = &[
        (0.0, 1e-4, 9.326271913450274873),
        (0.5, 2.0, 0.11993777196806144737),
        (1.5, 3.0, 0.048034646842352790087),
        (2.0, 1e-3, 1999999.5000009716277),
        (0.3, 0.7, 0.6895624897569750649),
        (1.0, 1.0, 0.60190723019723457474),
        (5.25, 0.05, 4533222120.2800480123),
        (12.0, 7.5, 0.77047592924154030556),
        (30.0, 1e-4, 4.7468848248567510455e+159),
        (30.0, 200.0, 1.1516416646253265699e-87),
        (0.0, 200.0, 1.2256819797765334517e-88),
        (17.3, 42.0, 3.5866394348158183566e-18),
        (2.5, 55.0, 2.3182252329491058896e-25),
        (0.75, 120.0, 8.7840467179091688803e-54),
        (29.9, 1.0, 3.1306809407996007073e+39),
        (8.0, 0.01, 6.4511769600479988457e+21),
    ];

    #[test]
    fn matches_high_precision_reference() {
        for &(nu, z, expected) in REFERENCE {
            let got = bessel_k(nu, z).unwrap();
            let rel = (got / expected - 1.0).abs();
            assert!(rel < 1e-10, "K_{nu}({z}) = {got}, expected {expected}, rel {rel:e}");
        }
    }

    #[test]
    fn half_order_closed_form() {
        for &z in &[1e-4, 0.1, 2.0, 17.0, 150.0] {
            let closed = (std::f64::consts::PI / (2.0 * z)).sqrt() * (-z).exp();
            assert_relative_eq!(bessel_k(0.5, z).unwrap(), closed, max_relative = 1e-12);
        }
        assert_relative_eq!(
            bessel_k(0.5, 2.0).unwrap(),
            0.11993777196806144737,
            max_relative = 1e-12
        );
    }

    #[test]
    fn order_symmetry_is_exact() {
        assert_eq!(bessel_k(-1.5, 3.0).unwrap(), bessel_k(1.5, 3.0).unwrap());
    }

    #[test]
    fn small_argument_behaviour() {
        let k = bessel_k(2.0, 0.001).unwrap();
        assert!((k / 2.0e6 - 1.0).abs() < 1e-3);
        assert_relative_eq!(bessel_k_small_z(1.0, 0.01).unwrap(), 100.0, max_relative = 1e-13);
        assert_relative_eq!(bessel_k_small_z(2.0, 0.001).unwrap(), 2.0e6, max_relative = 1e-13);
        let ratio = bessel_k(1.5, 1e-4).unwrap() / bessel_k_small_z(1.5, 1e-4).unwrap();
        assert!((ratio - 1.0).abs() < 0.01);
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_k(1.0, 0.0).is_err());
        assert!(bessel_k(1.0, -2.0).is_err());
        assert!(bessel_k(f64::NAN, 1.0).is_err());
        assert!(bessel_k_small_z(0.0, 1.0).is_err());
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.0).is_err());
    }

    #[test]
    fn overflow_gives_infinity() {
        let k = bessel_k(200.0, 1e-4).unwrap();
        assert_eq!(k, f64::INFINITY);
        assert!(log_bessel_k(200.0, 1e-4).unwrap().is_finite());
    }

    #[test]
    fn log_gamma_values() {
        assert!(log_gamma(1.0).unwrap().abs() < 1e-15);
        assert_relative_eq!(log_gamma(0.5).unwrap(), 0.5723649429247000870717, max_relative = 1e-13);
        assert_relative_eq!(log_gamma(10.0).unwrap(), 362880f64.ln(), max_relative = 1e-13);
    }

    #[test]
    fn watson_examples() {
        let one = AsymptoticSeries::new(vec![1.0], vec![0.0]).unwrap();
        assert_relative_eq!(watson_partial_sum(&one, 10.0, 1).unwrap(), 0.1, max_relative = 1e-14);
        let half = AsymptoticSeries::new(vec![1.0], vec![-0.5]).unwrap();
        assert_relative_eq!(
            watson_partial_sum(&half, 4.0, 1).unwrap(),
            std::f64::consts::PI.sqrt() / 2.0,
            max_relative = 1e-13
        );
        // 1/(1+t) = 1 - t + ...; its Laplace transform at x = 10 is 0.0915633339...
        let geometric = AsymptoticSeries::new(vec![1.0, -1.0], vec![0.0, 1.0]).unwrap();
        let two = watson_partial_sum(&geometric, 10.0, 2).unwrap();
        assert_relative_eq!(two, 0.09, max_relative = 1e-13);
        let exact = 0.09156333393978808188;
        assert!((two / exact - 1.0).abs() < 0.025);
        assert!(watson_partial_sum(&geometric, 10.0, 3).is_err());
    }

    #[test]
    fn series_validation() {
        assert!(AsymptoticSeries::new(vec![], vec![]).is_err());
        assert!(AsymptoticSeries::new(vec![1.0], vec![-1.0]).is_err());
        assert!(AsymptoticSeries::new(vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(AsymptoticSeries::new(vec![1.0, 1.0], vec![0.0]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn three_term_recurrence(nu in 0.0f64..29.0, log_z in (1e-4f64).ln()..(200f64).ln()) {
            // K_{ν+1}(z) = K_{ν-1}(z) + (2ν/z) K_ν(z). For ν < 0 the right side
            // cancels catastrophically; by K_ν = K_{-ν} it is the same identity.
            let z = log_z.exp();
            let lhs = bessel_k(nu + 1.0, z).unwrap();
            let rhs = bessel_k(nu - 1.0, z).unwrap() + 2.0 * nu / z * bessel_k(nu, z).unwrap();
            prop_assert!(((lhs - rhs) / lhs).abs() < 1e-8, "nu={nu} z={z} lhs={lhs} rhs={rhs}");
        }

        #[test]
        fn symmetric_in_order(nu in 0.0f64..30.0, log_z in (1e-4f64).ln()..(200f64).ln()) {
            let z = log_z.exp();
            prop_assert_eq!(bessel_k(nu, z).unwrap(), bessel_k(-nu, z).unwrap());
        }
    }
}

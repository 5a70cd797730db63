//! Logarithmically spaced quadrature grid on the positive half-line.

use serde::{Deserialize, Serialize};

use crate::error::{domain, require_positive, Result};

/// Log-spaced nodes with trapezoid weights in `u = ln x`:
/// `∫ f(x) dx = ∫ f(e^u) e^u du ≈ Σ wᵢ f(xᵢ)` with `wᵢ = h·xᵢ` (halved at the ends).
///
/// For integrands that are smooth in `ln x` and decay at both ends the rule
/// converges geometrically in `1/h`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
    min: f64,
    max: f64,
}

/// Compact description of a grid, for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl LogGrid {
    pub const DEFAULT_MIN: f64 = 1e-6;
    pub const DEFAULT_MAX: f64 = 1e6;
    pub const DEFAULT_COUNT: usize = 4000;

    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        require_positive("grid min", min)?;
        require_positive("grid max", max)?;
        if min.is_nan() || max.is_nan() || max <= min || count < 2 {
            return Err(domain(
                "LogGrid",
                format!("need min < max and count >= 2, got [{min}, {max}] x {count}"),
            ));
        }
        let (lo, hi) = (min.ln(), max.ln());
        let h = (hi - lo) / (count - 1) as f64;
        let points: Vec<f64> = (0..count)
            .map(|i| if i == count - 1 { max } else { (lo + h * i as f64).exp() })
            .collect();
        let weights = points
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let w = h * x;
                if i == 0 || i == count - 1 {
                    0.5 * w
                } else {
                    w
                }
            })
            .collect();
        Ok(Self {
            points,
            weights,
            min,
            max,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.min, self.max)
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            min: self.min,
            max: self.max,
            count: self.len(),
        }
    }

    /// The grid with every log-interval halved (`2n - 1` nodes).
    pub fn refined(&self) -> Self {
        Self::new(self.min, self.max, 2 * self.len() - 1).expect("valid parent grid")
    }

    /// `Σ wᵢ f(xᵢ)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// `Σ wᵢ vᵢ` for values already tabulated on the grid.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}

impl Default for LogGrid {
    fn default() -> Self {
        Self::new(Self::DEFAULT_MIN, Self::DEFAULT_MAX, Self::DEFAULT_COUNT).expect("static grid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::bessel_k;

    #[test]
    fn rejects_bad_bounds() {
        assert!(LogGrid::new(1.0, 1.0, 10).is_err());
        assert!(LogGrid::new(0.0, 1.0, 10).is_err());
        assert!(LogGrid::new(1e-3, 1.0, 1).is_err());
    }

    #[test]
    fn strictly_increasing_with_positive_weights() {
        let g = LogGrid::default();
        assert_eq!(g.len(), 4000);
        assert!(g.points().windows(2).all(|w| w[1] > w[0]));
        assert!(g.weights().iter().all(|&w| w > 0.0));
        assert_eq!(g.bounds(), (1e-6, 1e6));
        assert_eq!(g.refined().len(), 7999);
    }

    #[test]
    fn integrates_exponential() {
        let g = LogGrid::default();
        let v = g.integrate(|x| (-x).exp());
        let exact = (-1e-6f64).exp() - (-1e6f64).exp();
        assert!((v - exact).abs() < 1e-9, "{v}");
    }

    #[test]
    fn bessel_integral_representation() {
        // ½ ∫ x^{λ-1} exp(-(z/2)(x + 1/x)) dx = K_λ(z)
        let g = LogGrid::default();
        for &(l, z) in &[(0.0, 1.0), (0.7, 0.5), (2.5, 3.0), (-1.3, 10.0), (4.0, 0.2)] {
            let q = 0.5 * g.integrate(|x: f64| x.powf(l - 1.0) * (-0.5 * z * (x + 1.0 / x)).exp());
            let k = bessel_k(l, z).unwrap();
            assert!((q / k - 1.0).abs() < 1e-8, "λ={l} z={z}: {q} vs {k}");
        }
    }
}

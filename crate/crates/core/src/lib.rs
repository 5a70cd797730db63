//! Discrete-time Matsumoto–Yor random walk on lower-triangular `SL₂`
//! matrices with generalized inverse Gaussian (GIG) increments.
//!
//! The crate is split into:
//!
//! * [`specfun`]: Macdonald function `K_ν`, `ln Γ`, Watson series.
//! * [`gig`]: GIG and inverse-gamma laws (densities, exact samplers,
//!   log-moments).
//! * [`walk`]: the matrix walk, its coordinates, the change of variables
//!   `Φₙ`, N-parts, the `N_∞` series and reconstruction formulas.
//! * [`kernels`]: transition densities, quadrature composition and the
//!   intertwining / reversibility / characterization checks.
//! * [`stats`]: Kolmogorov–Smirnov machinery and the Monte Carlo
//!   verification harness.
//! * [`rng`]: deterministic, splittable random streams.

pub mod error;
pub mod gig;
pub mod grid;
pub mod kernels;
mod quad;
pub mod rng;
pub mod specfun;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};

/// Version of the JSON and CSV report layouts.
pub const SCHEMA_VERSION: u32 = 1;

//! Statistical verification harness.
//!
//! Every routine takes a master seed and derives its own streams, so results
//! are bit-identical across runs and worker counts.

mod diffusion;
mod ks;
mod report;
mod series;

pub use diffusion::{
    dt_refinement_study, generator_drift_check, scaled_walk_z, scaling_limit_test, simulate_my_continuous,
    simulate_my_from, BrownianConfig, GeneratorCheck, RefinementStudy, ScalingLimitOutcome, SCALING_LIMIT_THRESHOLD,
};
pub use ks::{ks_one_sample, ks_two_sample, EmpiricalSample, KsResult, KOLMOGOROV_C_1PCT};
pub use report::TestReport;
pub use series::{
    distance_correlation, donsker_check, dufresne_test, dufresne_test_against, n_infinity_draws,
    n_part_convergence_curve, n_part_convergence_test, scaled_log_variance, z_independence_check, IndependenceReport,
    PairedWith, DEFAULT_TAIL_TOL, DISTANCE_SAMPLES,
};

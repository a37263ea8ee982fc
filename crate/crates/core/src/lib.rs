//! Optimal memoryless quantization for least-squares FIR identification.
//!
//! The crate covers the full pipeline: plant simulation (`model`), symmetric
//! quantizers (`quantizer`), the marginal-density layer (`density`),
//! high-resolution companding designs (`highres`), coarse-resolution
//! recursive/dynamic-programming designs (`coarse`), the estimation and
//! Monte Carlo harness (`sysid`), and high-probability error bounds
//! (`bounds`).

pub mod bounds;
pub mod coarse;
pub mod density;
pub mod error;
pub mod highres;
pub mod linalg;
pub mod model;
pub mod quantizer;
pub mod rng;
pub mod sysid;

pub use error::{Error, Result};

pub use bounds::{
    budget_tradeoff, coverage_test, epsilon1, epsilon2_noise, epsilon2_quantization, BoundInputs,
    CoverageConfig, CoverageReport, TradeoffRow,
};
pub use coarse::{
    asymptotic_fit, build_coarse_quantizer, cost_per_sample, minimize_scalar, psi, solve_general,
    solve_n1, solve_ninf, xi, AsymptoticFit, CoarseDesign, CoarseMode, RatioSequence,
};
pub use density::{
    differential_entropy, integrate, sigma_squared, ConditionalSpread, MarginalDensity,
    TabulatedDensity,
};
pub use highres::{
    companding_breakpoints, cost_functional, design_fixed_rate, design_variable_rate, entropy_of,
    exact_quantized_cost, profile_grid, DesignKind, DesignReport, SubsectionDensity,
};
pub use model::{
    build_transform, generate_regressors, generate_regressors_independent, simulate_output,
    transform_regressors, FirParameters, RegressorMatrix, SignalSource, SimulatedOutput,
    TransformedBasis,
};
pub use quantizer::{
    bias_free_reps, midpoint_reps, uniform_quantizer, Quantizer, QuantizerBudget, RepsRule,
};
pub use sysid::{
    cross_term_block_ratio, decompose_error, empirical_cost, estimate, least_squares,
    run_comparison, run_comparison_with, ComparisonTable, EmpiricalCost, EstimationResult,
    TrialRecord,
};

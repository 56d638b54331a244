//! ε-sweeps, order estimation and the moderateness / negligibility tests.

mod cross;
mod estimate;
mod sweep;
mod verdict;

pub use cross::{cross_check_local, CrossCheck, PathResult};
pub use estimate::{estimate_order, EpsGrid, OrderEstimate, Samples, MIN_SAMPLES, NOISE_BAND, TAIL_WINDOW, ZERO_FLOOR};
pub use sweep::{
    chain_label, chain_point, chain_value, chains_up_to, clustered_grid, sample_points, sweep, SweepResult,
    DEFAULT_PER_AXIS,
};
pub use verdict::{
    equal_in_g, moderate_exponent, negligible_level, short_hash, test_moderate, test_negligible, test_negligible_full,
    Equality, Evidence, TestSpec, Verdict, VerdictKind, DEFAULT_DEPTH, DEFAULT_L_MAX, N_CAP, SLOPE_TOL,
};

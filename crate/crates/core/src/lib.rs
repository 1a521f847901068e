//! Profit-maximizing input planning for wheat farms under a yield-gap
//! Leontief crop model, calibration of its stress-response curves from farm
//! observations, and midpoint/endpoint life-cycle impact scoring of the
//! resulting input plans.

// `!(x > 0.0)` is the idiom used throughout to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod io;
pub mod lca;
pub mod model;
pub mod optimizer;
pub mod simulation;

pub use model::{
    conditional_yield, realized_yield, required_input, Decision, FarmSpec, ModelError, Prices, StressFactorParams,
};
pub use optimizer::{optimal_inputs, SolverSettings};

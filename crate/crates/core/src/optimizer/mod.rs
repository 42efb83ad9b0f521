//! Planning: objective/constraint split, encoding-depth steps and
//! energy-efficient power allocation.

mod classify;
mod depth;
mod ee;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intent::LinkTarget;

pub use classify::{
    classify_params, Bound, Constraint, Objective, PlanLimits, ProblemSplit, Sense,
    ENERGY_EFFICIENCY,
};
pub use depth::{plan_depth_update, DepthBounds, DepthPlan};
pub use ee::{
    brute_force_ee, solve_ee, solve_ee_traced, Allocation, DinkelbachRun, EeProblem, EeUser,
    BUDGET_SLACK, DEFAULT_MAX_ITERATIONS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("no parameters were retrieved")]
    EmptyRetrieval,
    #[error("stored depth {depth} outside [{}, {}]", bounds.min, bounds.max)]
    OutOfRangeState { depth: i64, bounds: DepthBounds },
    #[error("depth bounds need min < max (got {min}, {max})")]
    InvalidBounds { min: i64, max: i64 },
    #[error("no planner for parameter `{0}`")]
    UnsupportedParameter(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize, last: Allocation },
    #[error("brute force supports at most 3 users, got {0}")]
    TooManyUsers(usize),
}

/// New absolute transmit power for one link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPlan {
    pub target: LinkTarget,
    pub current_power_w: f64,
    pub new_power_w: f64,
}

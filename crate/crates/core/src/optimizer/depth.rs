use serde::{Deserialize, Serialize};

use super::OptimizeError;
use crate::intent::{Direction, LinkTarget};

/// Inclusive encoding-depth range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthBounds {
    pub min: i64,
    pub max: i64,
}

impl Default for DepthBounds {
    fn default() -> Self {
        DepthBounds { min: 1, max: 12 }
    }
}

impl DepthBounds {
    pub fn new(min: i64, max: i64) -> Result<Self, OptimizeError> {
        if min >= max {
            return Err(OptimizeError::InvalidBounds { min, max });
        }
        Ok(DepthBounds { min, max })
    }

    pub fn contains(&self, depth: i64) -> bool {
        (self.min..=self.max).contains(&depth)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthPlan {
    pub target: LinkTarget,
    pub current_depth: i64,
    pub new_depth: i64,
    /// The requested step was clamped to a bound, so nothing changes.
    pub saturated: bool,
}

/// One-layer step in `direction`, clamped to `bounds`.
pub fn plan_depth_update(
    target: LinkTarget,
    direction: Direction,
    current_depth: i64,
    bounds: DepthBounds,
) -> Result<DepthPlan, OptimizeError> {
    if !bounds.contains(current_depth) {
        return Err(OptimizeError::OutOfRangeState {
            depth: current_depth,
            bounds,
        });
    }
    let new_depth = match direction {
        Direction::Increase => (current_depth + 1).min(bounds.max),
        Direction::Decrease => (current_depth - 1).max(bounds.min),
    };
    Ok(DepthPlan {
        target,
        current_depth,
        new_depth,
        saturated: new_depth == current_depth,
    })
}

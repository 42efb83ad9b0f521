use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DepthBounds, OptimizeError};
use crate::intent::{Direction, Intent};
use crate::store::Value;

/// Derived objective for power intents.
pub const ENERGY_EFFICIENCY: &str = "energy_efficiency";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub parameter: String,
    pub sense: Sense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bound {
    /// Decision-variable domain.
    Range { min: f64, max: f64 },
    /// Sum over users stays at or under the budget.
    SumAtMost { max: f64 },
    AtLeast { min: f64 },
    /// Held at its retrieved value.
    Fixed { value: Value },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub parameter: String,
    pub bound: Bound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSplit {
    pub objectives: Vec<Objective>,
    pub constraints: Vec<Constraint>,
}

impl ProblemSplit {
    /// No objective parameter is pinned by a `Fixed` constraint.
    pub fn is_disjoint(&self) -> bool {
        self.objectives.iter().all(|o| {
            !self
                .constraints
                .iter()
                .any(|c| c.parameter == o.parameter && matches!(c.bound, Bound::Fixed { .. }))
        })
    }
}

/// Limits the classifier needs besides the retrieved values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanLimits {
    pub depth: DepthBounds,
    pub power_budget_w: f64,
}

impl Default for PlanLimits {
    fn default() -> Self {
        PlanLimits {
            depth: DepthBounds::default(),
            power_budget_w: 1.0,
        }
    }
}

/// The intent's parameter becomes the objective (or, for transmit power,
/// energy efficiency); every other retrieved parameter is held fixed.
pub fn classify_params(
    intent: &Intent,
    retrieved: &BTreeMap<String, Value>,
    limits: &PlanLimits,
) -> Result<ProblemSplit, OptimizeError> {
    if retrieved.is_empty() {
        return Err(OptimizeError::EmptyRetrieval);
    }
    let mut objectives = Vec::new();
    let mut constraints = Vec::new();
    match intent.parameter.as_str() {
        "encoding_depth" => {
            objectives.push(Objective {
                parameter: intent.parameter.clone(),
                sense: match intent.direction {
                    Direction::Increase => Sense::Maximize,
                    Direction::Decrease => Sense::Minimize,
                },
            });
            constraints.push(Constraint {
                parameter: intent.parameter.clone(),
                bound: Bound::Range {
                    min: limits.depth.min as f64,
                    max: limits.depth.max as f64,
                },
            });
        }
        "tx_power_w" => {
            objectives.push(Objective {
                parameter: ENERGY_EFFICIENCY.into(),
                sense: Sense::Maximize,
            });
            constraints.push(Constraint {
                parameter: intent.parameter.clone(),
                bound: Bound::SumAtMost {
                    max: limits.power_budget_w,
                },
            });
            constraints.push(Constraint {
                parameter: intent.parameter.clone(),
                bound: Bound::AtLeast { min: 0.0 },
            });
        }
        other => return Err(OptimizeError::UnsupportedParameter(other.to_string())),
    }
    for (name, value) in retrieved {
        if *name != intent.parameter {
            constraints.push(Constraint {
                parameter: name.clone(),
                bound: Bound::Fixed {
                    value: value.clone(),
                },
            });
        }
    }
    Ok(ProblemSplit {
        objectives,
        constraints,
    })
}

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

impl Direction {
    /// Orders `a` before `b` when `a` is the better value.
    pub fn better_first(self, a: f64, b: f64) -> Ordering {
        match self {
            Direction::HigherBetter => b.total_cmp(&a),
            Direction::LowerBetter => a.total_cmp(&b),
        }
    }

    /// True when `a` is strictly better than `b`.
    pub fn is_better(self, a: f64, b: f64) -> bool {
        self.better_first(a, b) == Ordering::Less
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::HigherBetter => "higher_better",
            Direction::LowerBetter => "lower_better",
        }
    }
}

/// A verifier output together with the direction in which it improves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub direction: Direction,
}

impl Score {
    pub fn new(value: f64, direction: Direction) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::param(format!("score {value} is not finite")));
        }
        Ok(Self { value, direction })
    }

    pub fn higher(value: f64) -> Result<Self> {
        Self::new(value, Direction::HigherBetter)
    }

    pub fn lower(value: f64) -> Result<Self> {
        Self::new(value, Direction::LowerBetter)
    }
}

/// Returns the shared direction of `scores`, or a parameter error if they
/// are empty or disagree.
pub(crate) fn uniform_direction(scores: &[Score]) -> Result<Direction> {
    let first = scores
        .first()
        .ok_or_else(|| Error::param("need at least one score"))?
        .direction;
    if scores.iter().any(|s| s.direction != first) {
        return Err(Error::param("scores mix higher_better and lower_better"));
    }
    Ok(first)
}

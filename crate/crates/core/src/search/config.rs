use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Random,
    #[value(alias = "zero_order")]
    ZeroOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PivotPolicy {
    /// The pivot competes in every round; ties keep it.
    #[default]
    Elitist,
}

/// How a neighbour is drawn around the pivot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Neighborhood {
    /// `lambda * pivot + sqrt(1 - lambda^2) * eps`; keeps the N(0, I) marginal.
    #[default]
    Spherical,
    /// `pivot + lambda * sqrt(dim) * eps / |eps|`; a literal radius-lambda step
    /// in per-coordinate units.
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    pub budget_n: usize,
    pub neighbors_k: usize,
    pub lambda: f64,
    pub master_seed: u64,
    #[serde(default)]
    pub pivot_policy: PivotPolicy,
    #[serde(default)]
    pub neighborhood: Neighborhood,
    /// Worker count. Results never depend on it, so it is not serialized.
    #[serde(skip, default = "one")]
    pub parallelism: usize,
}

fn one() -> usize {
    1
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Random,
            budget_n: 120,
            neighbors_k: 2,
            lambda: 0.99,
            master_seed: 0,
            pivot_policy: PivotPolicy::Elitist,
            neighborhood: Neighborhood::Spherical,
            parallelism: 1,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget_n == 0 {
            return Err(Error::param("budget must be at least 1"));
        }
        if self.parallelism == 0 {
            return Err(Error::param("parallelism must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::param(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        if self.algorithm == Algorithm::ZeroOrder {
            if self.neighbors_k == 0 {
                return Err(Error::param("zero-order search needs k >= 1"));
            }
            if self.budget_n < self.neighbors_k {
                return Err(Error::param(format!(
                    "budget {} is smaller than k = {}",
                    self.budget_n, self.neighbors_k
                )));
            }
        }
        Ok(())
    }

    /// Zero-order rounds; 0 for random search.
    pub fn rounds(&self) -> usize {
        match self.algorithm {
            Algorithm::Random => 0,
            Algorithm::ZeroOrder => self.budget_n / self.neighbors_k.max(1),
        }
    }

    /// Number of candidate records a run produces.
    pub fn record_count(&self) -> usize {
        match self.algorithm {
            Algorithm::Random => self.budget_n,
            Algorithm::ZeroOrder => self.rounds() * self.neighbors_k,
        }
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SearchConfig;
use crate::generator::GeneratorInfo;
use crate::verifier::{Score, VerifierSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub index: usize,
    pub round: usize,
    pub noise_seed: u64,
    /// FNV-1a of the noise vector, 16 hex digits.
    pub noise_digest: String,
    /// Record whose noise this one was derived from (zero-order only).
    pub parent: Option<usize>,
    /// False for a zero-order pivot carried into a later round, whose output
    /// and scores are reused rather than recomputed.
    pub generated: bool,
    pub scores: BTreeMap<String, Score>,
    pub ranks: BTreeMap<String, f64>,
    pub selected: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub artifact_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub config: SearchConfig,
    pub generator_info: GeneratorInfo,
    pub verifier_specs: Vec<VerifierSpec>,
    /// Name of the score that drives selection.
    pub verifier: String,
    pub generator_calls: usize,
    pub candidates: Vec<CandidateRecord>,
    pub selected_index: usize,
    pub wall_times_ms: BTreeMap<String, u64>,
}

impl RunManifest {
    pub fn selected(&self) -> &CandidateRecord {
        &self.candidates[self.selected_index]
    }

    /// The selection score of the chosen candidate.
    pub fn selected_score(&self) -> Option<Score> {
        self.selected().scores.get(&self.verifier).copied()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

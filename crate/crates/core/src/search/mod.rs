//! Budgeted inference-time search over generator latents.

mod artifacts;
mod config;
mod engine;
mod manifest;

pub use artifacts::{candidate_file, write_outputs, CANDIDATE_DIR, MANIFEST_FILE, SELECTED_FILE};
pub use config::{Algorithm, Neighborhood, PivotPolicy, SearchConfig};
pub use engine::{perturb_noise, perturb_noise_in, random_search, run_search, zero_order_search, SearchOutcome};
pub use manifest::{CandidateRecord, RunManifest, SCHEMA_VERSION};

//! Generators map a low-resolution input and a latent noise vector to a
//! high-resolution candidate.

mod corpus;
mod synthetic;

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::Result;
use crate::rng::LatentNoise;

pub use corpus::{make_test_corpus, CorpusItem, CorpusItemMeta};
pub use synthetic::{synthetic_generate, SyntheticGenParams, SyntheticGenerator};

/// What a generator declares about the space being searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorInfo {
    pub noise_dim: usize,
    pub output_sample_rate_hz: u32,
    pub deterministic: bool,
}

pub trait Generator: Send + Sync {
    fn info(&self) -> GeneratorInfo;
    fn generate(&self, lr: &AudioBuffer, noise: &LatentNoise) -> Result<AudioBuffer>;
}

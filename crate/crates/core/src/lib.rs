//! Verifier-guided inference-time search for audio super-resolution.
//!
//! A stochastic generator maps a low-resolution input and a latent noise
//! vector to a high-resolution candidate. The [`search`] module explores the
//! latent space under a fixed candidate budget (random search or zero-order
//! search), [`verifier`] scores and ranks candidates, and [`analysis`]
//! measures the spread of a candidate set and where in time-frequency it
//! varies.

pub mod analysis;
pub mod audio;
pub mod bridge;
pub mod cli;
pub mod error;
pub mod generator;
pub mod rng;
pub mod search;
pub mod verifier;

pub use error::{Error, Result};

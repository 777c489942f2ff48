//! Seed derivation and reproducible standard-normal latent noise.
//!
//! Everything here is built on SplitMix64, so a (seed, index) pair maps to
//! the same bits on every platform.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 step applied to `x` (increment then finalize).
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-candidate seed from the run's master seed.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed ^ index.wrapping_mul(GOLDEN_GAMMA))
}

/// Counter-based stream: the `i`-th draw depends only on `(seed, i)`.
#[derive(Debug, Clone)]
pub struct SplitMixStream {
    seed: u64,
    counter: u64,
}

impl SplitMixStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    #[inline]
    pub fn at(seed: u64, i: u64) -> u64 {
        splitmix64(seed.wrapping_add(i.wrapping_mul(GOLDEN_GAMMA)))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = Self::at(self.seed, self.counter);
        self.counter += 1;
        v
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        unit_f64(self.next_u64())
    }
}

#[inline]
pub(crate) fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A latent noise vector searched over by the search algorithms.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentNoise {
    values: Vec<f64>,
}

impl LatentNoise {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("latent noise must have dimension >= 1"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("latent noise must be finite"));
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// 64-bit FNV-1a over the little-endian IEEE-754 bytes of the values.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in &self.values {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }

    pub fn digest_hex(&self) -> String {
        format!("{:016x}", self.digest())
    }
}

/// `dim` i.i.d. standard normal draws (Box–Muller over a SplitMix64 stream).
pub fn sample_standard_noise(dim: usize, seed: u64) -> LatentNoise {
    let mut stream = SplitMixStream::new(seed);
    let mut values = Vec::with_capacity(dim + 1);
    while values.len() < dim {
        // 1 - u keeps the log argument in (0, 1].
        let u1 = 1.0 - stream.next_f64();
        let u2 = stream.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * PI * u2;
        values.push(r * theta.cos());
        values.push(r * theta.sin());
    }
    values.truncate(dim);
    LatentNoise { values }
}

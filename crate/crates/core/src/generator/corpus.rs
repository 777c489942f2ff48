//! Seeded synthetic HR/LR pairs: a harmonic tone plus high-band noise.

use std::f64::consts::PI;

use serde::Serialize;

use crate::audio::{highpass_brickwall, make_lowres, AudioBuffer};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, sample_standard_noise, SplitMixStream};

/// High-band noise level relative to the harmonic part, in amplitude.
const NOISE_REL_AMPLITUDE: f64 = 0.1;
/// Output peak level, leaving headroom for generated high bands.
const PEAK: f64 = 0.5;
/// Raised-cosine fade at both ends, in seconds.
const FADE_S: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusItem {
    pub hr: AudioBuffer,
    pub lr: AudioBuffer,
    pub meta: CorpusItemMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusItemMeta {
    pub seed: u64,
    pub f0_hz: f64,
    pub harmonics: usize,
}

/// Builds `count` deterministic items. Item `i` uses `derive_seed(seed, i)`.
pub fn make_test_corpus(
    count: usize,
    seed: u64,
    sample_rate_hz: u32,
    duration_s: f64,
    cutoff_hz: f64,
) -> Result<Vec<CorpusItem>> {
    if count == 0 {
        return Err(Error::param("corpus needs at least one item"));
    }
    if sample_rate_hz == 0 {
        return Err(Error::param("sample rate must be positive"));
    }
    let nyquist = sample_rate_hz as f64 / 2.0;
    if !(cutoff_hz > 0.0 && cutoff_hz < nyquist) {
        return Err(Error::param(format!("cutoff {cutoff_hz} Hz must lie in (0, {nyquist})")));
    }
    let len = (duration_s * sample_rate_hz as f64).round() as usize;
    if !(duration_s.is_finite() && len >= 1) {
        return Err(Error::param(format!("duration {duration_s} s yields no samples")));
    }
    (0..count)
        .map(|i| make_item(derive_seed(seed, i as u64), sample_rate_hz, len, cutoff_hz))
        .collect()
}

fn make_item(seed: u64, rate: u32, len: usize, cutoff_hz: f64) -> Result<CorpusItem> {
    let fs = rate as f64;
    let mut stream = SplitMixStream::new(seed);
    let f0 = 110.0 + 330.0 * stream.next_f64();
    let harmonics = 8 + (stream.next_u64() % 9) as usize;
    let phases: Vec<f64> = (0..harmonics).map(|_| 2.0 * PI * stream.next_f64()).collect();

    let mut tone = vec![0.0f64; len];
    for (k, phase) in phases.iter().enumerate() {
        let freq = f0 * (k + 1) as f64;
        if freq >= fs / 2.0 {
            break;
        }
        let amp = 1.0 / (k + 1) as f64;
        let w = 2.0 * PI * freq / fs;
        for (n, s) in tone.iter_mut().enumerate() {
            *s += amp * (w * n as f64 + phase).sin();
        }
    }

    let white = sample_standard_noise(len, stream.next_u64());
    let mut band = highpass_brickwall(white.values(), fs, cutoff_hz);
    let tone_rms = rms(&tone);
    let band_rms = rms(&band);
    if band_rms > 0.0 {
        let g = NOISE_REL_AMPLITUDE * tone_rms / band_rms;
        band.iter_mut().for_each(|s| *s *= g);
    }
    let mut hr: Vec<f64> = tone.iter().zip(&band).map(|(a, b)| a + b).collect();
    apply_fades(&mut hr, (FADE_S * fs).round() as usize);
    let peak = hr.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak > 0.0 {
        hr.iter_mut().for_each(|s| *s *= PEAK / peak);
    }
    let hr = AudioBuffer::from_f64(&hr, rate)?;
    let lr = make_lowres(&hr, cutoff_hz)?;
    Ok(CorpusItem {
        hr,
        lr,
        meta: CorpusItemMeta {
            seed,
            f0_hz: f0,
            harmonics,
        },
    })
}

/// Items start and end in silence, so they wrap around without a jump.
fn apply_fades(x: &mut [f64], fade: usize) {
    let fade = fade.min(x.len() / 2);
    let n = x.len();
    for i in 0..fade {
        let g = 0.5 - 0.5 * (PI * i as f64 / fade as f64).cos();
        x[i] *= g;
        x[n - 1 - i] *= g;
    }
}

fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }
}

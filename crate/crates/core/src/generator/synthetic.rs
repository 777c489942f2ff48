//! Spectral band replication with a latent-controlled envelope and phase.
//!
//! The band above the cutoff is filled by mirroring the top octave of the
//! low-resolution input upward, shaped by a smooth random envelope. The first
//! half of the latent drives the envelope and the second half the phase
//! offsets, both through bilinear interpolation of a coarse grid, so nearby
//! latents give nearby outputs. Replicated bins advance their phase at the
//! bin-center rate from frame to frame, which keeps them from smearing into
//! the preserved band.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Generator, GeneratorInfo};
use crate::audio::{istft_with_len, stft_polar, AudioBuffer, Grid, Spectrogram, StftParams};
use crate::error::{Error, Result};
use crate::rng::{unit_f64, LatentNoise, SplitMixStream};

/// Fixed key for the per-bin base phase pattern.
const PHASE_KEY: u64 = 0x5eed_0f_ba5e_9a5e;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticGenParams {
    pub cutoff_hz: f64,
    pub time_cells: usize,
    pub freq_cells: usize,
    /// Scale of the log-envelope noise.
    pub sigma: f64,
    pub base_rolloff_db_per_octave: f64,
    pub stft: StftParams,
}

impl Default for SyntheticGenParams {
    fn default() -> Self {
        Self {
            cutoff_hz: 4000.0,
            time_cells: 8,
            freq_cells: 8,
            sigma: 0.5,
            base_rolloff_db_per_octave: -3.0,
            stft: StftParams::default(),
        }
    }
}

impl SyntheticGenParams {
    /// Envelope half plus phase half.
    pub fn noise_dim(&self) -> usize {
        self.time_cells * self.freq_cells * 2
    }

    pub fn validate(&self, sample_rate_hz: u32) -> Result<()> {
        self.stft.validate()?;
        if self.time_cells == 0 || self.freq_cells == 0 {
            return Err(Error::param("envelope grid must be at least 1x1"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::param(format!("sigma must be non-negative, got {}", self.sigma)));
        }
        if !self.base_rolloff_db_per_octave.is_finite() {
            return Err(Error::param("rolloff must be finite"));
        }
        let nyquist = sample_rate_hz as f64 / 2.0;
        if !(self.cutoff_hz > 0.0 && self.cutoff_hz < nyquist) {
            return Err(Error::param(format!(
                "cutoff {} Hz must lie in (0, {nyquist})",
                self.cutoff_hz
            )));
        }
        Ok(())
    }
}

/// Bilinear lookup into a `rows x cols` row-major grid at fractional
/// coordinates.
fn bilinear(grid: &[f64], rows: usize, cols: usize, r: f64, c: f64) -> f64 {
    let r = r.clamp(0.0, (rows - 1) as f64);
    let c = c.clamp(0.0, (cols - 1) as f64);
    let r0 = r.floor() as usize;
    let c0 = c.floor() as usize;
    let r1 = (r0 + 1).min(rows - 1);
    let c1 = (c0 + 1).min(cols - 1);
    let fr = r - r0 as f64;
    let fc = c - c0 as f64;
    let at = |i: usize, j: usize| grid[i * cols + j];
    let top = at(r0, c0) * (1.0 - fc) + at(r0, c1) * fc;
    let bottom = at(r1, c0) * (1.0 - fc) + at(r1, c1) * fc;
    top * (1.0 - fr) + bottom * fr
}

/// Folds `f` into `(cutoff / 2, cutoff]` by repeatedly mirroring about the
/// lower edge of its octave band with 2:1 compression, so `(c, 2c]` reads
/// `(c/2, c]` backwards, `(2c, 4c]` reads `(c, 2c]` backwards, and so on.
fn mirror_fold(f: f64, cutoff: f64) -> f64 {
    let mut f = f;
    while f > cutoff {
        let mut lo = cutoff;
        while f > 2.0 * lo {
            lo *= 2.0;
        }
        f = lo - (f - lo) / 2.0;
    }
    f
}

fn lattice_coord(i: usize, n: usize, cells: usize) -> f64 {
    if n <= 1 || cells <= 1 {
        0.0
    } else {
        i as f64 / (n - 1) as f64 * (cells - 1) as f64
    }
}

/// Deterministic stochastic SR: `(lr, noise) -> hr` with the same length and rate.
pub fn synthetic_generate(lr: &AudioBuffer, noise: &LatentNoise, params: &SyntheticGenParams) -> Result<AudioBuffer> {
    params.validate(lr.sample_rate_hz())?;
    if noise.dim() != params.noise_dim() {
        return Err(Error::dim(format!(
            "latent has dimension {}, generator expects {}",
            noise.dim(),
            params.noise_dim()
        )));
    }
    lr.require_nonempty()?;

    let (spec, mut phases) = stft_polar(lr, &params.stft)?;
    let frames = spec.frames();
    let bins = spec.bins();
    let bin_hz = spec.bin_hz(1);
    let cutoff = params.cutoff_hz;
    let nyquist = lr.nyquist_hz();

    let cells = params.time_cells * params.freq_cells;
    let (env_half, phase_half) = noise.values().split_at(cells);

    let first_rep = (0..bins).find(|&b| b as f64 * bin_hz > cutoff).unwrap_or(bins);
    let mut mags: Grid = spec.mags().clone();
    // Per replicated bin: source bin, rolloff gain, envelope column coordinate.
    let layout: Vec<(usize, f64, f64)> = (first_rep..bins)
        .map(|b| {
            let f = b as f64 * bin_hz;
            let src_f = mirror_fold(f, cutoff);
            let src = ((src_f / bin_hz).round() as usize).min(first_rep.saturating_sub(1));
            let gain_db = params.base_rolloff_db_per_octave * (f / cutoff).log2();
            let v = if nyquist > cutoff {
                (f - cutoff) / (nyquist - cutoff) * (params.freq_cells - 1) as f64
            } else {
                0.0
            };
            (src, 10f64.powf(gain_db / 20.0), v)
        })
        .collect();

    let (window, hop) = (params.stft.window_len, params.stft.hop_len);
    let base_phase: Vec<f64> = (first_rep..bins)
        .map(|b| 2.0 * PI * unit_f64(SplitMixStream::at(PHASE_KEY, b as u64)))
        .collect();
    for t in 0..frames {
        let u = lattice_coord(t, frames, params.time_cells);
        for (j, &(src, gain, v)) in layout.iter().enumerate() {
            let b = first_rep + j;
            let z_env = bilinear(env_half, params.time_cells, params.freq_cells, u, v);
            let z_ph = bilinear(phase_half, params.time_cells, params.freq_cells, u, v);
            let m = spec.mags().get(t, src) * gain * (params.sigma * z_env).exp();
            mags.set(t, b, m);
            let advance = 2.0 * PI * (b * t * hop) as f64 / window as f64;
            phases.set(t, b, base_phase[j] + advance + PI * z_ph);
        }
    }

    let spec = Spectrogram::new(mags, params.stft, lr.sample_rate_hz())?;
    let full = istft_with_len(&spec, &phases, lr.len())?;
    let out = fade_added_band(lr, &full, params.stft.window_len / 2)?;
    let peak = out.peak();
    if peak > 1.0 {
        Ok(out.scaled(1.0 / peak))
    } else {
        Ok(out)
    }
}

/// Ramps the difference `full - lr` in and out over `fade` samples at each
/// end, so the output starts and ends like the input.
fn fade_added_band(lr: &AudioBuffer, full: &AudioBuffer, fade: usize) -> Result<AudioBuffer> {
    let n = lr.len();
    let fade = fade.min(n / 2);
    let mut out: Vec<f64> = full.samples().iter().map(|&s| s as f64).collect();
    let x = lr.samples();
    for i in 0..fade {
        let g = 0.5 - 0.5 * (PI * i as f64 / fade as f64).cos();
        for j in [i, n - 1 - i] {
            out[j] = x[j] as f64 + g * (out[j] - x[j] as f64);
        }
    }
    AudioBuffer::from_f64(&out, lr.sample_rate_hz())
}

/// The synthetic generator bound to an output rate.
#[derive(Debug, Clone)]
pub struct SyntheticGenerator {
    params: SyntheticGenParams,
    sample_rate_hz: u32,
}

impl SyntheticGenerator {
    pub fn new(params: SyntheticGenParams, sample_rate_hz: u32) -> Result<Self> {
        params.validate(sample_rate_hz)?;
        Ok(Self {
            params,
            sample_rate_hz,
        })
    }

    pub fn params(&self) -> &SyntheticGenParams {
        &self.params
    }
}

impl Generator for SyntheticGenerator {
    fn info(&self) -> GeneratorInfo {
        GeneratorInfo {
            noise_dim: self.params.noise_dim(),
            output_sample_rate_hz: self.sample_rate_hz,
            deterministic: true,
        }
    }

    fn generate(&self, lr: &AudioBuffer, noise: &LatentNoise) -> Result<AudioBuffer> {
        if lr.sample_rate_hz() != self.sample_rate_hz {
            return Err(Error::param(format!(
                "generator runs at {} Hz, input is {} Hz",
                self.sample_rate_hz,
                lr.sample_rate_hz()
            )));
        }
        synthetic_generate(lr, noise, &self.params)
    }
}

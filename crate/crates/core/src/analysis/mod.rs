//! Spread of a candidate set: a scalar range estimate and a per-bin
//! uncertainty map.

mod export;

use serde::{Deserialize, Serialize};

use crate::audio::{lsd_spectrogram, stft, AudioBuffer, Grid, Spectrogram, StftParams, LSD_EPSILON};
use crate::error::{Error, Result};

pub use export::{export_map, render_csv, render_pgm, MapFormat};

pub const DEFAULT_EPSILON: f64 = 1e-12;
pub const DEFAULT_CLIP_PERCENTILE: f64 = 90.0;

/// Spectrograms of `N >= 2` candidates sharing shape and parameters.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    spectrograms: Vec<Spectrogram>,
}

impl CandidateSet {
    pub fn new(spectrograms: Vec<Spectrogram>) -> Result<Self> {
        if spectrograms.len() < 2 {
            return Err(Error::param(format!(
                "a candidate set needs at least 2 members, got {}",
                spectrograms.len()
            )));
        }
        let first = &spectrograms[0];
        for (i, s) in spectrograms.iter().enumerate().skip(1) {
            if s.mags().shape() != first.mags().shape() || s.params() != first.params() {
                return Err(Error::dim(format!(
                    "candidate {i} has shape {:?}, candidate 0 has {:?}",
                    s.mags().shape(),
                    first.mags().shape()
                )));
            }
        }
        Ok(Self { spectrograms })
    }

    /// Analyses each buffer, truncating all to the shortest length.
    pub fn from_audio(buffers: &[AudioBuffer], params: &StftParams) -> Result<Self> {
        let len = buffers.iter().map(AudioBuffer::len).min().unwrap_or(0);
        if let Some(b) = buffers.iter().find(|b| b.sample_rate_hz() != buffers[0].sample_rate_hz()) {
            return Err(Error::param(format!(
                "mixed sample rates: {} Hz and {} Hz",
                buffers[0].sample_rate_hz(),
                b.sample_rate_hz()
            )));
        }
        let specs = buffers
            .iter()
            .map(|b| stft(&b.truncated(len), params))
            .collect::<Result<Vec<_>>>()?;
        Self::new(specs)
    }

    pub fn len(&self) -> usize {
        self.spectrograms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectrograms.is_empty()
    }

    pub fn spectrograms(&self) -> &[Spectrogram] {
        &self.spectrograms
    }

    pub fn shape(&self) -> (usize, usize) {
        self.spectrograms[0].mags().shape()
    }

    /// Element-wise mean of the linear magnitudes.
    pub fn mean_magnitudes(&self) -> Grid {
        // Offsets from the first candidate keep identical sets exact.
        let (t, f) = self.shape();
        let first = self.spectrograms[0].mags().as_slice();
        let mut offset = vec![0.0; t * f];
        for s in &self.spectrograms[1..] {
            for ((o, v), r) in offset.iter_mut().zip(s.mags().as_slice()).zip(first) {
                *o += v - r;
            }
        }
        let n = self.len() as f64;
        let mut mean = Grid::zeros(t, f);
        for ((m, o), r) in mean.as_mut_slice().iter_mut().zip(&offset).zip(first) {
            *m = r + o / n;
        }
        mean
    }
}

/// Average LSD between each candidate and the set's mean magnitude
/// spectrogram.
pub fn search_space_variance(set: &CandidateSet) -> Result<f64> {
    let mean = set.mean_magnitudes();
    let mut total = 0.0;
    for s in set.spectrograms() {
        total += lsd_spectrogram(s.mags(), &mean)?;
    }
    Ok(total / set.len() as f64)
}

/// Domain in which per-bin variance is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum VarianceScale {
    #[default]
    Linear,
    /// `log10(|S|^2 + 1e-10)`, as in the LSD.
    Log,
}

/// Min-max normalized per-bin variance, `frames x bins`, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyMap {
    pub values: Grid,
    pub epsilon: f64,
    /// 100 until [`clip_for_render`] is applied.
    pub clip_percentile: f64,
    pub candidates: usize,
}

impl UncertaintyMap {
    /// Mean value over bins `< split` and `>= split`.
    pub fn band_means(&self, split: usize) -> (f64, f64) {
        let (t, f) = self.values.shape();
        let split = split.min(f);
        let (mut lo, mut hi) = (0.0, 0.0);
        for r in 0..t {
            let row = self.values.row(r);
            lo += row[..split].iter().sum::<f64>();
            hi += row[split..].iter().sum::<f64>();
        }
        let mean = |sum: f64, count: usize| if count == 0 { 0.0 } else { sum / count as f64 };
        (mean(lo, t * split), mean(hi, t * (f - split)))
    }
}

pub fn uncertainty_map(set: &CandidateSet, epsilon: f64) -> Result<UncertaintyMap> {
    uncertainty_map_in(set, epsilon, VarianceScale::Linear)
}

pub fn uncertainty_map_in(set: &CandidateSet, epsilon: f64, scale: VarianceScale) -> Result<UncertaintyMap> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::param(format!("epsilon must be positive, got {epsilon}")));
    }
    let (t, f) = set.shape();
    let n = set.len() as f64;
    let value = |m: f64| match scale {
        VarianceScale::Linear => m,
        VarianceScale::Log => (m * m + LSD_EPSILON).log10(),
    };
    let first: Vec<f64> = set.spectrograms()[0].mags().as_slice().iter().map(|&m| value(m)).collect();
    let mut mean = vec![0.0; t * f];
    for s in &set.spectrograms()[1..] {
        for (i, &m) in s.mags().as_slice().iter().enumerate() {
            mean[i] += (value(m) - first[i]) / n;
        }
    }
    mean.iter_mut().zip(&first).for_each(|(m, r)| *m += r);
    let mut var = vec![0.0; t * f];
    for s in set.spectrograms() {
        for (i, &m) in s.mags().as_slice().iter().enumerate() {
            let d = value(m) - mean[i];
            var[i] += d * d / n;
        }
    }
    let lo = var.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = var.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let values: Vec<f64> = var
        .iter()
        .map(|v| ((v - lo) / (hi - lo + epsilon)).clamp(0.0, 1.0))
        .collect();
    Ok(UncertaintyMap {
        values: Grid::from_vec(t, f, values)?,
        epsilon,
        clip_percentile: 100.0,
        candidates: set.len(),
    })
}

/// Nearest-rank percentile of `values` (`percentile` in `(0, 100]`).
pub fn nearest_rank(values: &[f64], percentile: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((percentile / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Clips values above the nearest-rank percentile, then rescales so the
/// maximum is 1 (an all-zero map stays zero).
pub fn clip_for_render(map: &UncertaintyMap, percentile: f64) -> Result<UncertaintyMap> {
    if !(percentile > 0.0 && percentile <= 100.0) {
        return Err(Error::param(format!("percentile must lie in (0, 100], got {percentile}")));
    }
    let cap = nearest_rank(map.values.as_slice(), percentile);
    let clipped = map.values.map(|v| v.min(cap));
    let max = clipped.as_slice().iter().copied().fold(0.0, f64::max);
    let values = if max > 0.0 { clipped.map(|v| v / max) } else { clipped };
    Ok(UncertaintyMap {
        values,
        clip_percentile: percentile,
        ..map.clone()
    })
}

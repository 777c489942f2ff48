//! Center-aligned STFT analysis and weighted overlap-add synthesis.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{AudioBuffer, Grid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    HannPeriodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftParams {
    pub window_len: usize,
    pub hop_len: usize,
    pub window_kind: WindowKind,
}

impl Default for StftParams {
    fn default() -> Self {
        Self {
            window_len: 2048,
            hop_len: 512,
            window_kind: WindowKind::HannPeriodic,
        }
    }
}

impl StftParams {
    pub fn new(window_len: usize, hop_len: usize) -> Result<Self> {
        let p = Self {
            window_len,
            hop_len,
            window_kind: WindowKind::HannPeriodic,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 || !self.window_len.is_multiple_of(2) {
            return Err(Error::param(format!(
                "window length must be positive and even, got {}",
                self.window_len
            )));
        }
        if self.hop_len == 0 || self.hop_len > self.window_len {
            return Err(Error::param(format!(
                "hop length must be in 1..={}, got {}",
                self.window_len, self.hop_len
            )));
        }
        Ok(())
    }

    /// Number of non-negative frequency bins.
    pub fn bins(&self) -> usize {
        self.window_len / 2 + 1
    }

    pub fn frame_count(&self, signal_len: usize) -> usize {
        signal_len / self.hop_len + 1
    }

    pub fn window(&self) -> Vec<f64> {
        match self.window_kind {
            WindowKind::HannPeriodic => hann_periodic(self.window_len),
        }
    }
}

pub fn hann_periodic(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Linear-magnitude spectrogram, `frames x bins`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    mags: Grid,
    params: StftParams,
    sample_rate_hz: u32,
}

impl Spectrogram {
    pub fn new(mags: Grid, params: StftParams, sample_rate_hz: u32) -> Result<Self> {
        params.validate()?;
        if mags.cols() != params.bins() {
            return Err(Error::dim(format!(
                "spectrogram has {} bins, window {} implies {}",
                mags.cols(),
                params.window_len,
                params.bins()
            )));
        }
        if mags.as_slice().iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::param("magnitudes must be finite and non-negative"));
        }
        Ok(Self {
            mags,
            params,
            sample_rate_hz,
        })
    }

    pub fn mags(&self) -> &Grid {
        &self.mags
    }

    pub fn params(&self) -> &StftParams {
        &self.params
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn frames(&self) -> usize {
        self.mags.rows()
    }

    pub fn bins(&self) -> usize {
        self.mags.cols()
    }

    pub fn bin_hz(&self, bin: usize) -> f64 {
        bin as f64 * self.sample_rate_hz as f64 / self.params.window_len as f64
    }

    pub fn into_mags(self) -> Grid {
        self.mags
    }
}

/// Complex STFT frames, `frames x bins`, row-major.
pub(crate) struct ComplexFrames {
    pub frames: usize,
    pub bins: usize,
    pub data: Vec<Complex64>,
}

pub(crate) fn stft_complex(buffer: &AudioBuffer, params: &StftParams) -> Result<ComplexFrames> {
    params.validate()?;
    buffer.require_nonempty()?;
    let n = params.window_len;
    let half = n / 2;
    let bins = params.bins();
    let frames = params.frame_count(buffer.len());

    let mut padded = vec![0.0f64; buffer.len() + n];
    for (dst, &s) in padded[half..].iter_mut().zip(buffer.samples()) {
        *dst = s as f64;
    }
    let window = params.window();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut frame = vec![Complex64::default(); n];
    let mut data = Vec::with_capacity(frames * bins);
    for t in 0..frames {
        let start = t * params.hop_len;
        for (i, slot) in frame.iter_mut().enumerate() {
            *slot = Complex64::new(padded[start + i] * window[i], 0.0);
        }
        fft.process_with_scratch(&mut frame, &mut scratch);
        data.extend_from_slice(&frame[..bins]);
    }
    Ok(ComplexFrames { frames, bins, data })
}

/// Magnitude spectrogram of `buffer`.
///
/// The signal is zero-padded by `window_len / 2` on both sides, so frame `t`
/// is centered on sample `t * hop_len`, and there are `len / hop_len + 1`
/// frames.
pub fn stft(buffer: &AudioBuffer, params: &StftParams) -> Result<Spectrogram> {
    let c = stft_complex(buffer, params)?;
    let mags = Grid::from_vec(c.frames, c.bins, c.data.iter().map(|z| z.norm()).collect())?;
    Spectrogram::new(mags, *params, buffer.sample_rate_hz())
}

/// Magnitude spectrogram plus the phase of every bin in radians.
pub fn stft_polar(buffer: &AudioBuffer, params: &StftParams) -> Result<(Spectrogram, Grid)> {
    let c = stft_complex(buffer, params)?;
    let mags = Grid::from_vec(c.frames, c.bins, c.data.iter().map(|z| z.norm()).collect())?;
    let phases = Grid::from_vec(c.frames, c.bins, c.data.iter().map(|z| z.arg()).collect())?;
    Ok((Spectrogram::new(mags, *params, buffer.sample_rate_hz())?, phases))
}

/// Overlap-add resynthesis producing `(frames - 1) * hop_len` samples.
pub fn istft(spec: &Spectrogram, phases: &Grid) -> Result<AudioBuffer> {
    let len = (spec.frames().saturating_sub(1)) * spec.params().hop_len;
    istft_with_len(spec, phases, len)
}

/// Overlap-add resynthesis trimmed or zero-extended to `len` samples.
///
/// Frames are synthesis-windowed and normalized by the summed squared
/// window, which is exact for Hann with `hop_len <= window_len / 2`.
pub fn istft_with_len(spec: &Spectrogram, phases: &Grid, len: usize) -> Result<AudioBuffer> {
    spec.mags().ensure_same_shape(phases, "phase grid does not match spectrogram")?;
    let params = spec.params();
    if params.hop_len > params.window_len / 2 {
        return Err(Error::param(format!(
            "overlap-add needs hop <= window/2, got hop {} window {}",
            params.hop_len, params.window_len
        )));
    }
    let n = params.window_len;
    let half = n / 2;
    let bins = params.bins();
    let frames = spec.frames();
    let window = params.window();
    let out_len = (frames.saturating_sub(1)) * params.hop_len + n;
    let mut acc = vec![0.0f64; out_len];
    let mut norm = vec![0.0f64; out_len];

    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let mut scratch = vec![Complex64::default(); ifft.get_inplace_scratch_len()];
    let mut frame = vec![Complex64::default(); n];
    for t in 0..frames {
        let mags = spec.mags().row(t);
        let ph = phases.row(t);
        for k in 0..bins {
            frame[k] = Complex64::from_polar(mags[k], ph[k]);
        }
        for k in bins..n {
            frame[k] = frame[n - k].conj();
        }
        ifft.process_with_scratch(&mut frame, &mut scratch);
        let start = t * params.hop_len;
        for i in 0..n {
            acc[start + i] += frame[i].re / n as f64 * window[i];
            norm[start + i] += window[i] * window[i];
        }
    }
    let samples = (0..len)
        .map(|i| {
            let j = i + half;
            if j < out_len && norm[j] > 1e-10 {
                acc[j] / norm[j]
            } else {
                0.0
            }
        })
        .collect::<Vec<_>>();
    AudioBuffer::from_f64(&samples, spec.sample_rate_hz())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::sample_standard_noise;

    #[test]
    fn params_validation() {
        assert!(StftParams::new(2047, 512).is_err());
        assert!(StftParams::new(2048, 0).is_err());
        assert!(StftParams::new(2048, 4096).is_err());
        assert_eq!(StftParams::new(2048, 512).unwrap().bins(), 1025);
    }

    #[test]
    fn constant_signal_window_sum() {
        let buf = AudioBuffer::new(vec![1.0; 24000], 24000).unwrap();
        let spec = stft(&buf, &StftParams::default()).unwrap();
        assert_eq!(spec.frames(), 24000 / 512 + 1);
        let row = spec.mags().row(10);
        assert!((row[0] - 1024.0).abs() < 1e-9);
        assert!((row[1] - 512.0).abs() < 1e-9);
        assert!(row[2..].iter().all(|&m| m < 1e-8));
    }

    #[test]
    fn zeros_in_zeros_out() {
        let buf = AudioBuffer::new(vec![0.0; 3000], 16000).unwrap();
        let (spec, ph) = stft_polar(&buf, &StftParams::new(256, 64).unwrap()).unwrap();
        assert!(spec.mags().as_slice().iter().all(|&m| m == 0.0));
        let y = istft(&spec, &ph).unwrap();
        assert!(y.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn round_trip_white_noise() {
        let noise = sample_standard_noise(24000, 3);
        let x: Vec<f64> = noise.values().iter().map(|v| 0.3 * v).collect();
        let buf = AudioBuffer::from_f64(&x, 24000).unwrap();
        let params = StftParams::default();
        let (spec, ph) = stft_polar(&buf, &params).unwrap();
        let y = istft_with_len(&spec, &ph, buf.len()).unwrap();
        let max_err = buf
            .samples()
            .iter()
            .zip(y.samples())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        assert!(max_err <= 1e-5, "max err {max_err}");
    }

    #[test]
    fn shape_mismatch_is_dimension_error() {
        let buf = AudioBuffer::new(vec![0.1; 4096], 16000).unwrap();
        let (spec, _) = stft_polar(&buf, &StftParams::new(512, 128).unwrap()).unwrap();
        let wrong = Grid::zeros(spec.frames() - 1, spec.bins());
        assert!(matches!(istft(&spec, &wrong), Err(Error::Dimension(_))));
    }

    #[test]
    fn hop_above_half_window_rejected_for_synthesis() {
        let buf = AudioBuffer::new(vec![0.1; 4096], 16000).unwrap();
        let (spec, ph) = stft_polar(&buf, &StftParams::new(512, 384).unwrap()).unwrap();
        assert!(matches!(istft(&spec, &ph), Err(Error::Param(_))));
    }
}

//! Zero-phase windowed-sinc low-pass used to build low-resolution inputs.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::AudioBuffer;
use crate::error::{Error, Result};

/// Per-pass stopband attenuation the Kaiser design targets, in dB.
const STOPBAND_DB: f64 = 60.0;
/// Transition band width as a fraction of the cutoff.
const TRANSITION_FRACTION: f64 = 0.1;

/// Low-passes `hr` so that content above `cutoff_hz` is attenuated by at
/// least 60 dB, keeping rate, length and alignment.
///
/// The passband ends at `0.9 * cutoff_hz` and the stopband starts at
/// `cutoff_hz`. The symmetric FIR is applied forward and backward, so the
/// result has zero phase; the signal is treated as periodic at its edges.
pub fn make_lowres(hr: &AudioBuffer, cutoff_hz: f64) -> Result<AudioBuffer> {
    let fs = hr.sample_rate_hz() as f64;
    if !(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0) {
        return Err(Error::param(format!(
            "cutoff {cutoff_hz} Hz must lie in (0, {}) for rate {fs}",
            fs / 2.0
        )));
    }
    hr.require_nonempty()?;
    let taps = lowpass_taps(cutoff_hz, fs);
    let x: Vec<f64> = hr.samples().iter().map(|&s| s as f64).collect();
    let y = filtfilt_circular(&taps, &x);
    AudioBuffer::from_f64(&y, hr.sample_rate_hz())
}

pub(crate) fn lowpass_taps(cutoff_hz: f64, fs: f64) -> Vec<f64> {
    let width = TRANSITION_FRACTION * cutoff_hz;
    let center = (cutoff_hz - width / 2.0) / fs;
    let delta_omega = 2.0 * PI * width / fs;
    let mut len = ((STOPBAND_DB - 8.0) / (2.285 * delta_omega)).ceil() as usize + 1;
    if len.is_multiple_of(2) {
        len += 1;
    }
    let beta = 0.1102 * (STOPBAND_DB - 8.7);
    let mid = (len / 2) as f64;
    let i0_beta = bessel_i0(beta);
    let mut taps: Vec<f64> = (0..len)
        .map(|i| {
            let n = i as f64 - mid;
            let sinc = if n == 0.0 {
                2.0 * center
            } else {
                (2.0 * PI * center * n).sin() / (PI * n)
            };
            let r = n / mid;
            let w = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / i0_beta;
            sinc * w
        })
        .collect();
    let dc: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= dc;
    }
    taps
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Applies a symmetric FIR forward and backward over the periodic extension
/// of `x`, i.e. multiplies its DFT by the squared (real) filter response.
fn filtfilt_circular(taps: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mid = taps.len() / 2;
    let mut kernel = vec![Complex64::default(); n];
    for (i, &h) in taps.iter().enumerate() {
        let lag = (i as isize - mid as isize).rem_euclid(n as isize) as usize;
        kernel[lag].re += h;
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    fwd.process(&mut kernel);
    let mut data: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut data);
    for (d, k) in data.iter_mut().zip(&kernel) {
        *d *= k.norm_sqr();
    }
    planner.plan_fft_inverse(n).process(&mut data);
    data.iter().map(|z| z.re / n as f64).collect()
}

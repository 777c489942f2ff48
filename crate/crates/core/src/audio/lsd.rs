use std::ops::Range;

use super::{stft, AudioBuffer, Grid, StftParams};
use crate::error::{Error, Result};

/// Power floor inside the logarithm.
pub const LSD_EPSILON: f64 = 1e-10;

/// Log-spectral distance between two waveforms.
///
/// Both signals are truncated to the shorter length first. The result is
/// the frame average of the RMS (over frequency) of the difference of
/// `log10(|S|^2 + eps)`.
pub fn lsd(generated: &AudioBuffer, reference: &AudioBuffer, params: &StftParams) -> Result<f64> {
    if generated.sample_rate_hz() != reference.sample_rate_hz() {
        return Err(Error::param(format!(
            "sample rate mismatch: {} vs {}",
            generated.sample_rate_hz(),
            reference.sample_rate_hz()
        )));
    }
    let len = generated.len().min(reference.len());
    let g = stft(&generated.truncated(len), params)?;
    let r = stft(&reference.truncated(len), params)?;
    lsd_spectrogram(g.mags(), r.mags())
}

/// The same distance on two magnitude grids of identical shape.
pub fn lsd_spectrogram(a: &Grid, b: &Grid) -> Result<f64> {
    lsd_band(a, b, 0..a.cols())
}

/// Distance restricted to the bin range `bins`.
pub fn lsd_band(a: &Grid, b: &Grid, bins: Range<usize>) -> Result<f64> {
    a.ensure_same_shape(b, "lsd operands differ in shape")?;
    if a.rows() == 0 || bins.is_empty() || bins.end > a.cols() {
        return Err(Error::dim(format!(
            "empty or out-of-range bin selection {bins:?} for {} bins",
            a.cols()
        )));
    }
    let width = bins.len() as f64;
    let total: f64 = (0..a.rows())
        .map(|t| {
            let ra = &a.row(t)[bins.clone()];
            let rb = &b.row(t)[bins.clone()];
            let sq: f64 = ra
                .iter()
                .zip(rb)
                .map(|(&x, &y)| {
                    let d = log_power(x) - log_power(y);
                    d * d
                })
                .sum();
            (sq / width).sqrt()
        })
        .sum();
    Ok(total / a.rows() as f64)
}

#[inline]
fn log_power(mag: f64) -> f64 {
    (mag * mag + LSD_EPSILON).log10()
}

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::{hann_periodic, AudioBuffer};

/// Fraction of total signal energy in bins strictly above `cutoff_hz`,
/// from a single Hann-windowed whole-signal DFT. Returns 0 for a silent
/// signal.
pub fn energy_fraction_above(buffer: &AudioBuffer, cutoff_hz: f64) -> f64 {
    let n = buffer.len();
    if n == 0 {
        return 0.0;
    }
    let mut data: Vec<Complex64> = buffer
        .samples()
        .iter()
        .zip(hann_periodic(n))
        .map(|(&s, w)| Complex64::new(s as f64 * w, 0.0))
        .collect();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut data);
    let bin_hz = buffer.sample_rate_hz() as f64 / n as f64;
    let (mut above, mut total) = (0.0, 0.0);
    for (k, z) in data.iter().enumerate().take(n / 2 + 1) {
        // Interior bins stand in for their negative-frequency mirror too.
        let weight = if k == 0 || 2 * k == n { 1.0 } else { 2.0 };
        let e = weight * z.norm_sqr();
        total += e;
        if k as f64 * bin_hz > cutoff_hz {
            above += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        above / total
    }
}

/// Zero-phase ideal high-pass: keeps only DFT bins strictly above
/// `cutoff_hz`, dropping the Nyquist bin.
pub fn highpass_brickwall(x: &[f64], fs: f64, cutoff_hz: f64) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut data: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut data);
    for (k, z) in data.iter_mut().enumerate() {
        let bin = k.min(n - k);
        let f = bin as f64 * fs / n as f64;
        if f <= cutoff_hz || 2 * bin == n {
            *z = Complex64::default();
        }
    }
    planner.plan_fft_inverse(n).process(&mut data);
    data.iter().map(|z| z.re / n as f64).collect()
}

/// `10 * log10` of a ratio, with silence mapped to negative infinity.
pub fn to_db(ratio: f64) -> f64 {
    if ratio <= 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * ratio.log10()
    }
}

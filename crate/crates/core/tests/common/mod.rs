//! Shared helpers for the integration tests: brute-force oracles written
//! independently of the library, and small fixtures.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use srsearch::audio::{AudioBuffer, StftParams};
use srsearch::rng::{LatentNoise, SplitMixStream};
use srsearch::verifier::{select_best, Candidate, Criterion, Direction, FnScorer, RawScores, Verifier};

pub const BIN: &str = env!("CARGO_BIN_EXE_srsearch");

pub fn srsearch(args: &[&str], cwd: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(cwd)
        .env_remove("SRSEARCH_BRIDGE_CMD")
        .output()
        .expect("binary runs")
}

/// Centered, zero-padded, periodic-Hann magnitude spectrogram by direct DFT.
pub fn naive_stft(x: &[f64], window: usize, hop: usize) -> Vec<Vec<f64>> {
    let half = window / 2;
    let frames = x.len() / hop + 1;
    let bins = window / 2 + 1;
    let hann: Vec<f64> = (0..window)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / window as f64).cos())
        .collect();
    let sample = |i: isize| -> f64 {
        if i < 0 || i as usize >= x.len() {
            0.0
        } else {
            x[i as usize]
        }
    };
    // Twiddle table indexed by (k * n) mod window.
    let cos: Vec<f64> = (0..window).map(|m| (2.0 * PI * m as f64 / window as f64).cos()).collect();
    let sin: Vec<f64> = (0..window).map(|m| (2.0 * PI * m as f64 / window as f64).sin()).collect();
    (0..frames)
        .map(|t| {
            let start = (t * hop) as isize - half as isize;
            let frame: Vec<f64> = (0..window).map(|n| sample(start + n as isize) * hann[n]).collect();
            (0..bins)
                .map(|k| {
                    let (mut re, mut im) = (0.0, 0.0);
                    for (n, v) in frame.iter().enumerate() {
                        let m = (k * n) % window;
                        re += v * cos[m];
                        im -= v * sin[m];
                    }
                    (re * re + im * im).sqrt()
                })
                .collect()
        })
        .collect()
}

/// Log-spectral distance straight from its definition.
pub fn brute_lsd(x: &[f64], y: &[f64], window: usize, hop: usize) -> f64 {
    let len = x.len().min(y.len());
    let a = naive_stft(&x[..len], window, hop);
    let b = naive_stft(&y[..len], window, hop);
    let per_frame: Vec<f64> = a
        .iter()
        .zip(&b)
        .map(|(fa, fb)| {
            let sq: f64 = fa
                .iter()
                .zip(fb)
                .map(|(p, q)| {
                    let d = (p * p + 1e-10).log10() - (q * q + 1e-10).log10();
                    d * d
                })
                .sum();
            (sq / fa.len() as f64).sqrt()
        })
        .collect();
    per_frame.iter().sum::<f64>() / per_frame.len() as f64
}

/// Mean over candidates of the LSD between each spectrogram and the
/// linear-magnitude mean spectrogram.
pub fn brute_variance(spectra: &[Vec<Vec<f64>>]) -> f64 {
    let n = spectra.len() as f64;
    let frames = spectra[0].len();
    let bins = spectra[0][0].len();
    let mut mean = vec![vec![0.0; bins]; frames];
    for s in spectra {
        for t in 0..frames {
            for f in 0..bins {
                mean[t][f] += s[t][f] / n;
            }
        }
    }
    let lsd = |a: &Vec<Vec<f64>>| -> f64 {
        let mut total = 0.0;
        for t in 0..frames {
            let mut sq = 0.0;
            for f in 0..bins {
                let d = (a[t][f].powi(2) + 1e-10).log10() - (mean[t][f].powi(2) + 1e-10).log10();
                sq += d * d;
            }
            total += (sq / bins as f64).sqrt();
        }
        total / frames as f64
    };
    spectra.iter().map(lsd).sum::<f64>() / n
}

/// 1-based fractional ranks by counting; `higher` means larger is better.
pub fn brute_ranks(values: &[f64], higher: bool) -> Vec<f64> {
    values
        .iter()
        .map(|&v| {
            let better = values.iter().filter(|&&w| if higher { w > v } else { w < v }).count();
            let tied = values.iter().filter(|&&w| w == v).count() - 1;
            1.0 + better as f64 + tied as f64 / 2.0
        })
        .collect()
}

/// Candidate with the lowest mean rank; ties to the lowest index.
pub fn brute_ensemble_pick(columns: &[(Vec<f64>, bool)]) -> (usize, Vec<f64>) {
    let n = columns[0].0.len();
    // Ranks are multiples of 0.5, so the sums are exact and tie exactly.
    let mut sum = vec![0.0; n];
    for (values, higher) in columns {
        for (s, r) in sum.iter_mut().zip(brute_ranks(values, *higher)) {
            *s += r;
        }
    }
    let mut best = 0;
    for i in 1..n {
        if sum[i] < sum[best] {
            best = i;
        }
    }
    (best, sum.iter().map(|s| s / columns.len() as f64).collect())
}

pub fn to_f64(a: &AudioBuffer) -> Vec<f64> {
    a.samples().iter().map(|&s| s as f64).collect()
}

pub fn small_stft() -> StftParams {
    StftParams::new(512, 128).unwrap()
}

/// A verifier that depends only on the latent: higher is better, peaked at
/// a fixed target direction.
pub fn scripted_score(noise: &LatentNoise) -> f64 {
    noise
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let target = ((i as f64) * 0.37).sin();
            -(v - target).powi(2)
        })
        .sum()
}

pub fn scripted_verifier() -> Verifier {
    Verifier::single(FnScorer::new("scripted", Direction::HigherBetter, |c| {
        Ok(scripted_score(c.noise))
    }))
}

fn column_verifier(columns: &[(Vec<f64>, bool)]) -> Verifier {
    let criteria = columns
        .iter()
        .enumerate()
        .map(|(j, (values, higher))| {
            let values = values.clone();
            let dir = if *higher {
                Direction::HigherBetter
            } else {
                Direction::LowerBetter
            };
            Criterion::Single(Box::new(FnScorer::new(format!("v{j}"), dir, move |c| Ok(values[c.index]))))
        })
        .collect();
    Verifier::ensemble("ensemble", criteria, None).unwrap()
}

/// Random score tables with mixed directions and values drawn from a small
/// set so that ties are common.
pub fn random_tables(count: usize, seed: u64) -> Vec<Vec<(Vec<f64>, bool)>> {
    let mut rng = SplitMixStream::new(seed);
    (0..count)
        .map(|_| {
            let n = 1 + (rng.next_u64() % 10) as usize;
            let m = 2 + (rng.next_u64() % 4) as usize;
            (0..m)
                .map(|_| {
                    let levels = 1 + rng.next_u64() % 6;
                    let values = (0..n).map(|_| (rng.next_u64() % levels) as f64 * 0.5 - 1.0).collect();
                    (values, rng.next_u64().is_multiple_of(2))
                })
                .collect()
        })
        .collect()
}

/// Selection and overall scores from the library's ensemble verifier.
pub fn library_ensemble(columns: &[(Vec<f64>, bool)]) -> (usize, Vec<f64>) {
    let noise = LatentNoise::new(vec![0.0]).unwrap();
    let audio = AudioBuffer::new(vec![0.0; 4], 8000).unwrap();
    let n = columns[0].0.len();
    let verifier = column_verifier(columns);
    let raws: Vec<RawScores> = (0..n)
        .map(|index| {
            verifier
                .raw_scores(&Candidate {
                    index,
                    audio: &audio,
                    noise: &noise,
                })
                .unwrap()
        })
        .collect();
    let eval = verifier.evaluate_set(&raws).unwrap();
    let pick = select_best(&eval.overall, Default::default()).unwrap();
    (pick, eval.overall.iter().map(|s| s.value).collect())
}

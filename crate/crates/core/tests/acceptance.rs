//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use srsearch::analysis::{clip_for_render, search_space_variance, uncertainty_map, CandidateSet, DEFAULT_EPSILON};
use srsearch::audio::{lsd, AudioBuffer, StftParams};
use srsearch::generator::{make_test_corpus, CorpusItem, SyntheticGenParams, SyntheticGenerator};
use srsearch::rng::{sample_standard_noise, SplitMixStream};
use srsearch::search::{run_search, Algorithm, SearchConfig, SearchOutcome};
use srsearch::verifier::{OracleLsdScorer, Verifier};

const RATE: u32 = 24_000;
const CUTOFF: f64 = 4000.0;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn corpus() -> Vec<CorpusItem> {
    make_test_corpus(8, 0, RATE, 1.0, CUTOFF).unwrap()
}

fn generator() -> SyntheticGenerator {
    SyntheticGenerator::new(SyntheticGenParams::default(), RATE).unwrap()
}

fn oracle(item: &CorpusItem) -> Verifier {
    Verifier::single(OracleLsdScorer::new(item.hr.clone(), StftParams::default()).unwrap())
}

fn search(item: &CorpusItem, verifier: &Verifier, algorithm: Algorithm, n: usize) -> SearchOutcome {
    let config = SearchConfig {
        algorithm,
        budget_n: n,
        parallelism: 1,
        ..SearchConfig::default()
    };
    run_search(&item.lr, &generator(), verifier, &config).unwrap()
}

fn selected_value(o: &SearchOutcome) -> f64 {
    o.manifest.selected_score().unwrap().value
}

fn record_value(o: &SearchOutcome, i: usize) -> f64 {
    let r = &o.manifest.candidates[i];
    r.scores[&o.manifest.verifier].value
}

/// Distinct generator outputs of a run.
fn generated_audio(o: &SearchOutcome) -> Vec<AudioBuffer> {
    o.manifest
        .candidates
        .iter()
        .zip(&o.audio)
        .filter(|(r, _)| r.generated)
        .map(|(_, a)| (**a).clone())
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut strict = 0;
    let mut worse = Vec::new();
    for (i, item) in corpus().iter().enumerate() {
        let o = search(item, &oracle(item), Algorithm::Random, 16);
        let (sel, first) = (selected_value(&o), record_value(&o, 0));
        if sel > first {
            worse.push(i);
        }
        if sel < first {
            strict += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worse.is_empty() && strict >= 7 && secs < 60.0,
        format!("strictly better on {strict}/8, worse on {worse:?}, {secs:.1} s"),
    )
}

fn criterion_2() -> Outcome {
    let params = StftParams::default();
    let (mut sum_r, mut sum_z) = (0.0, 0.0);
    let mut bad = Vec::new();
    for (i, item) in corpus().iter().enumerate() {
        let v = oracle(item);
        let spread = |algorithm| {
            let o = search(item, &v, algorithm, 16);
            search_space_variance(&CandidateSet::from_audio(&generated_audio(&o), &params).unwrap()).unwrap()
        };
        let (r, z) = (spread(Algorithm::Random), spread(Algorithm::ZeroOrder));
        if r <= z {
            bad.push(i);
        }
        sum_r += r;
        sum_z += z;
    }
    let (mr, mz) = (sum_r / 8.0, sum_z / 8.0);
    check(
        bad.is_empty() && mr > mz,
        format!("mean variance random {mr:.4} vs zero-order {mz:.4}, failing items {bad:?}"),
    )
}

fn nested_monotone(item: &CorpusItem, verifier: &Verifier, higher: bool) -> Result<(), String> {
    let full = search(item, verifier, Algorithm::Random, 16);
    let mut prev: Option<f64> = None;
    for n in [1usize, 2, 4, 8, 16] {
        let got = selected_value(&search(item, verifier, Algorithm::Random, n));
        let prefix = (0..n).map(|i| record_value(&full, i));
        let want = if higher {
            prefix.fold(f64::NEG_INFINITY, f64::max)
        } else {
            prefix.fold(f64::INFINITY, f64::min)
        };
        if got != want {
            return Err(format!("N={n}: selected {got} but best of prefix is {want}"));
        }
        if let Some(p) = prev {
            if (higher && got < p) || (!higher && got > p) {
                return Err(format!("N={n}: {got} worse than {p}"));
            }
        }
        prev = Some(got);
    }
    Ok(())
}

fn criterion_3() -> Outcome {
    let items = corpus();
    for item in &items {
        nested_monotone(item, &oracle(item), false).map_err(|e| format!("lsd oracle: {e}"))?;
        nested_monotone(item, &scripted_verifier(), true).map_err(|e| format!("scripted: {e}"))?;
    }
    Ok("lsd oracle and scripted verifier monotone over N = 1, 2, 4, 8, 16".into())
}

fn criterion_4() -> Outcome {
    let item = &corpus()[0];
    let config = SearchConfig {
        algorithm: Algorithm::ZeroOrder,
        budget_n: 120,
        neighbors_k: 2,
        lambda: 0.99,
        parallelism: 1,
        ..SearchConfig::default()
    };
    let o = run_search(&item.lr, &generator(), &scripted_verifier(), &config).unwrap();
    let m = &o.manifest;
    let rounds = m.candidates.iter().map(|c| c.round).max().unwrap() + 1;
    let best: Vec<f64> = (0..rounds)
        .map(|r| {
            m.candidates
                .iter()
                .filter(|c| c.round == r)
                .map(|c| c.scores[&m.verifier].value)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let drops = best.windows(2).filter(|w| w[1] < w[0]).count();
    check(
        m.candidates.len() == 120 && rounds == 60 && drops == 0,
        format!(
            "{} records, {rounds} rounds, {drops} drops, best {:.3} -> {:.3}",
            m.candidates.len(),
            best[0],
            best[rounds - 1]
        ),
    )
}

fn criterion_5() -> Outcome {
    let tables = random_tables(200, 2024);
    let mut fractional = 0;
    for (t, columns) in tables.iter().enumerate() {
        let (got, got_mean) = library_ensemble(columns);
        let (want, want_mean) = brute_ensemble_pick(columns);
        if got != want || got_mean.iter().zip(&want_mean).any(|(a, b)| (a - b).abs() > 1e-12) {
            return Err(format!("table {t}: picked {got}, oracle {want}"));
        }
        if want_mean.iter().any(|v| v.fract() != 0.0) {
            fractional += 1;
        }
    }
    check(fractional > 0, format!("200 tables agree, {fractional} with fractional mean ranks"))
}

fn criterion_6() -> Outcome {
    let params = StftParams::default();
    let x = AudioBuffer::from_f64(
        &sample_standard_noise(RATE as usize, 6).values().iter().map(|v| 0.05 * v).collect::<Vec<_>>(),
        RATE,
    )
    .unwrap();
    let y = AudioBuffer::from_f64(
        &sample_standard_noise(RATE as usize, 7).values().iter().map(|v| 0.05 * v).collect::<Vec<_>>(),
        RATE,
    )
    .unwrap();
    let self_dist = lsd(&x, &x, &params).unwrap();
    let tenfold = lsd(&x.scaled(10.0), &x, &params).unwrap();
    let symmetric = lsd(&x, &y, &params).unwrap() == lsd(&y, &x, &params).unwrap();

    let small = small_stft();
    let mut worst = 0.0f64;
    for pair in 0..20u64 {
        let mut rng = SplitMixStream::new(500 + pair);
        let len = 1500 + (rng.next_u64() % 2500) as usize;
        let gain = 0.05 + rng.next_f64();
        let a: Vec<f64> = sample_standard_noise(len, 3 * pair).values().iter().map(|v| 0.2 * v).collect();
        let b: Vec<f64> = sample_standard_noise(len + 11, 3 * pair + 1)
            .values()
            .iter()
            .map(|v| gain * 0.2 * v)
            .collect();
        let ab = AudioBuffer::from_f64(&a, 16_000).unwrap();
        let bb = AudioBuffer::from_f64(&b, 16_000).unwrap();
        let got = lsd(&ab, &bb, &small).unwrap();
        let want = brute_lsd(&to_f64(&ab), &to_f64(&bb), small.window_len, small.hop_len);
        worst = worst.max((got - want).abs());
    }
    check(
        self_dist == 0.0 && (tenfold - 2.0).abs() <= 1e-3 && symmetric && worst <= 1e-4,
        format!("lsd(x,x)={self_dist}, lsd(10x,x)={tenfold:.6}, symmetric={symmetric}, brute-force gap {worst:.2e}"),
    )
}

fn criterion_7() -> Outcome {
    let params = StftParams::default();
    let split = (CUTOFF * params.window_len as f64 / RATE as f64).ceil() as usize;
    let mut bands = Vec::new();
    let mut in_range = true;
    for item in corpus() {
        let o = search(&item, &oracle(&item), Algorithm::Random, 16);
        let set = CandidateSet::from_audio(&generated_audio(&o), &params).unwrap();
        let map = uncertainty_map(&set, DEFAULT_EPSILON).unwrap();
        let clipped = clip_for_render(&map, 90.0).unwrap();
        in_range &= [&map, &clipped]
            .iter()
            .all(|m| m.values.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        bands.push(map.band_means(split));
    }
    let item = &corpus()[0];
    let same = vec![item.hr.clone(); 4];
    let flat = uncertainty_map(&CandidateSet::from_audio(&same, &params).unwrap(), DEFAULT_EPSILON).unwrap();
    let zero = flat.values.as_slice().iter().all(|&v| v == 0.0);
    let localized = bands.iter().all(|(lo, hi)| hi > lo);
    let worst = bands
        .iter()
        .map(|(lo, hi)| hi - lo)
        .fold(f64::INFINITY, f64::min);
    check(
        in_range && zero && localized,
        format!("in [0,1]: {in_range}, identical set all zero: {zero}, high minus low band >= {worst:.4} on all items"),
    )
}

/// Replaces each number inside the `wall_times_ms` object.
fn mask_timings(text: &str) -> String {
    let Some(start) = text.find("\"wall_times_ms\"") else {
        return text.to_string();
    };
    let end = start + text[start..].find('}').unwrap_or(text.len() - start);
    let mut masked = String::new();
    for c in text[start..end].chars() {
        if !c.is_ascii_digit() {
            masked.push(c);
        } else if !masked.ends_with('#') {
            masked.push('#');
        }
    }
    format!("{}{}{}", &text[..start], masked, &text[end..])
}

fn cli_run(dir: &Path, algorithm: &str, parallelism: &str) -> Result<(String, Vec<u8>), String> {
    let corpus = srsearch(&["corpus", "--count", "1", "--seed", "3", "--out", "c"], dir);
    if !corpus.status.success() {
        return Err(String::from_utf8_lossy(&corpus.stderr).into_owned());
    }
    let out = srsearch(
        &[
            "search", "-i", "c/lr_0000.wav", "--verifier", "lsd:c/hr_0000.wav", "-o", "r",
            "--algorithm", algorithm, "--budget", "16", "--seed", "5", "--parallelism", parallelism,
        ],
        dir,
    );
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let manifest = fs::read_to_string(dir.join("r/manifest.json")).map_err(|e| e.to_string())?;
    let wav = fs::read(dir.join("r/selected.wav")).map_err(|e| e.to_string())?;
    Ok((mask_timings(&manifest), wav))
}

fn criterion_8() -> Outcome {
    let mut runs = 0;
    for algorithm in ["random", "zero-order"] {
        let mut reference: Option<(String, Vec<u8>)> = None;
        for parallelism in ["1", "4"] {
            for _ in 0..2 {
                let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
                let got = cli_run(tmp.path(), algorithm, parallelism)?;
                runs += 1;
                match &reference {
                    None => reference = Some(got),
                    Some(r) if *r != got => {
                        return Err(format!("{algorithm} at parallelism {parallelism} differs from the first run"))
                    }
                    Some(_) => {}
                }
            }
        }
    }
    Ok(format!("{runs} runs byte-identical per algorithm across parallelism 1 and 4"))
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Outcome); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, f) in criteria {
        let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("criterion {n}: PASS ({detail})"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n}: FAIL ({detail})");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::AnalyzeArgs;
use crate::analysis::{
    clip_for_render, export_map, search_space_variance, uncertainty_map_in, CandidateSet, MapFormat, VarianceScale,
};
use crate::audio::{load_wav, AudioBuffer, StftParams};
use crate::error::{Error, Result};
use crate::search::{RunManifest, MANIFEST_FILE};

pub const RANGE_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct RangeReport {
    schema_version: u32,
    search_space_variance: f64,
    n: usize,
    stft: StftParams,
    sample_rate_hz: u32,
    frames: usize,
    bins: usize,
    uncertainty: UncertaintyReport,
    sources: Vec<String>,
}

#[derive(Serialize)]
struct UncertaintyReport {
    scale: VarianceScale,
    epsilon: f64,
    clip_percentile: f64,
}

/// Candidate files named by a search manifest, one per generated record.
fn manifest_sources(path: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out: Vec<PathBuf> = Vec::new();
    for r in &manifest.candidates {
        if let Some(rel) = &r.artifact_path {
            let p = base.join(rel);
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    Ok(out)
}

fn wav_sources(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_wav = p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if is_wav && p.is_file() {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

/// Resolves the candidate files and the default output directory.
fn sources(input: &Path) -> Result<(Vec<PathBuf>, PathBuf)> {
    if input.is_dir() {
        let manifest = input.join(MANIFEST_FILE);
        let files = if manifest.is_file() {
            manifest_sources(&manifest)?
        } else {
            wav_sources(input)?
        };
        return Ok((files, input.to_path_buf()));
    }
    if input.is_file() {
        let dir = input.parent().unwrap_or(Path::new(".")).to_path_buf();
        return Ok((manifest_sources(input)?, dir));
    }
    Err(Error::param(format!("{} is neither a directory nor a manifest", input.display())))
}

pub fn run(a: &AnalyzeArgs) -> Result<()> {
    let params = StftParams::new(a.window, a.hop)?;
    let (files, default_out) = sources(&a.input)?;
    if files.len() < 2 {
        return Err(Error::param(format!(
            "analysis needs at least 2 candidates, found {}",
            files.len()
        )));
    }
    let buffers = files.iter().map(load_wav).collect::<Result<Vec<AudioBuffer>>>()?;
    let set = CandidateSet::from_audio(&buffers, &params)?;
    let variance = search_space_variance(&set)?;
    let map = uncertainty_map_in(&set, a.epsilon, a.scale)?;
    let clipped = clip_for_render(&map, a.clip_percentile)?;

    let out = a.out.clone().unwrap_or(default_out);
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    export_map(&clipped, out.join("uncertainty.pgm"), MapFormat::Pgm)?;
    export_map(&clipped, out.join("uncertainty.csv"), MapFormat::Csv)?;

    let (frames, bins) = set.shape();
    let report = RangeReport {
        schema_version: RANGE_SCHEMA_VERSION,
        search_space_variance: variance,
        n: set.len(),
        stft: params,
        sample_rate_hz: buffers[0].sample_rate_hz(),
        frames,
        bins,
        uncertainty: UncertaintyReport {
            scale: a.scale,
            epsilon: a.epsilon,
            clip_percentile: a.clip_percentile,
        },
        sources: files
            .iter()
            .map(|p| p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()))
            .collect(),
    };
    let path = out.join("range.json");
    let mut text = serde_json::to_string_pretty(&report).expect("range report serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    println!("n={} search_space_variance={variance}", set.len());
    Ok(())
}

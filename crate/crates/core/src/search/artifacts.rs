use std::fs;
use std::path::Path;

use super::SearchOutcome;
use crate::audio::{save_wav, WavCodec};
use crate::error::{Error, Result};

pub const SELECTED_FILE: &str = "selected.wav";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CANDIDATE_DIR: &str = "candidates";

pub fn candidate_file(index: usize) -> String {
    format!("{CANDIDATE_DIR}/cand_{index:04}.wav")
}

/// Writes `selected.wav`, `manifest.json` and, with `keep_all`, one WAV per
/// generated candidate. Artifact paths in the manifest are relative to
/// `out_dir`.
pub fn write_outputs(out_dir: &Path, outcome: &mut SearchOutcome, codec: WavCodec, keep_all: bool) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let records = &mut outcome.manifest.candidates;
    if keep_all {
        let dir = out_dir.join(CANDIDATE_DIR);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for i in 0..records.len() {
            // A carried-over pivot points at the file of the record that
            // produced its audio.
            let mut source = i;
            while !records[source].generated {
                source = records[source].parent.expect("carried pivot has a parent");
            }
            let rel = candidate_file(source);
            if source == i {
                save_wav(&outcome.audio[i], out_dir.join(&rel), codec)?;
            }
            records[i].artifact_path = Some(rel);
        }
    } else {
        let selected = outcome.manifest.selected_index;
        records[selected].artifact_path = Some(SELECTED_FILE.to_string());
    }
    save_wav(outcome.selected_audio(), out_dir.join(SELECTED_FILE), codec)?;
    let path = out_dir.join(MANIFEST_FILE);
    fs::write(&path, outcome.manifest.to_json()).map_err(|e| Error::io(&path, e))
}

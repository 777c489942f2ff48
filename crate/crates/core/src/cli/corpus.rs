use std::fs;

use serde::Serialize;

use super::{CorpusArgs, LowresArgs};
use crate::audio::{load_wav, make_lowres, save_wav};
use crate::error::{Error, Result};
use crate::generator::{make_test_corpus, CorpusItemMeta};

pub const CORPUS_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct CorpusManifest<'a> {
    schema_version: u32,
    seed: u64,
    count: usize,
    sample_rate_hz: u32,
    cutoff_hz: f64,
    duration_s: f64,
    items: Vec<CorpusEntry<'a>>,
}

#[derive(Serialize)]
struct CorpusEntry<'a> {
    hr: String,
    lr: String,
    #[serde(flatten)]
    meta: &'a CorpusItemMeta,
}

pub fn run_corpus(a: &CorpusArgs) -> Result<()> {
    let items = make_test_corpus(a.count, a.seed, a.rate, a.duration, a.cutoff)?;
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let mut entries = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let hr = format!("hr_{i:04}.wav");
        let lr = format!("lr_{i:04}.wav");
        save_wav(&item.hr, a.out.join(&hr), a.codec)?;
        save_wav(&item.lr, a.out.join(&lr), a.codec)?;
        entries.push(CorpusEntry {
            hr,
            lr,
            meta: &item.meta,
        });
    }
    let manifest = CorpusManifest {
        schema_version: CORPUS_SCHEMA_VERSION,
        seed: a.seed,
        count: a.count,
        sample_rate_hz: a.rate,
        cutoff_hz: a.cutoff,
        duration_s: a.duration,
        items: entries,
    };
    let path = a.out.join("corpus.json");
    let mut text = serde_json::to_string_pretty(&manifest).expect("corpus manifest serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    log::info!("wrote {} pairs to {}", items.len(), a.out.display());
    Ok(())
}

pub fn run_lowres(a: &LowresArgs) -> Result<()> {
    let hr = load_wav(&a.input)?;
    let lr = make_lowres(&hr, a.cutoff)?;
    if let Some(dir) = a.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    save_wav(&lr, &a.output, a.codec)
}

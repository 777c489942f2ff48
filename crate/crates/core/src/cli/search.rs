use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::Deserialize;

use super::{GeneratorKind, SearchArgs};
use crate::audio::{load_wav, StftParams, WavCodec};
use crate::bridge::{Bridge, BridgeGenerator, BRIDGE_CMD_ENV, DEFAULT_HANDSHAKE_TIMEOUT};
use crate::error::{Error, Result};
use crate::generator::{Generator, SyntheticGenParams, SyntheticGenerator};
use crate::search::{run_search, write_outputs, Algorithm, Neighborhood, SearchConfig};
use crate::verifier::{build_verifier, ExternalScorers, VerifierSpec};

/// A verifier given either in the mini-language or as a JSON tree.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum VerifierField {
    Text(String),
    Tree(VerifierSpec),
}

/// The `--config` file. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub input: Option<PathBuf>,
    pub verifier: Option<VerifierField>,
    pub out: Option<PathBuf>,
    pub keep_all: Option<bool>,
    pub algorithm: Option<Algorithm>,
    pub budget_n: Option<usize>,
    pub neighbors_k: Option<usize>,
    pub lambda: Option<f64>,
    pub master_seed: Option<u64>,
    pub neighborhood: Option<Neighborhood>,
    pub parallelism: Option<usize>,
    pub generator: Option<GeneratorKind>,
    pub cutoff_hz: Option<f64>,
    pub sigma: Option<f64>,
    pub window_len: Option<usize>,
    pub hop_len: Option<usize>,
    pub bridge_cmd: Option<String>,
    pub bridge_connections: Option<usize>,
    pub bridge_timeout_s: Option<f64>,
    pub codec: Option<WavCodec>,
}

impl RunConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::param(format!("{}: {e}", path.display())))
    }
}

/// A fully resolved search request.
#[derive(Debug)]
pub struct RunRequest {
    pub input: PathBuf,
    pub verifier: VerifierSpec,
    pub out: PathBuf,
    pub keep_all: bool,
    pub search: SearchConfig,
    pub generator: GeneratorKind,
    pub synthetic: SyntheticGenParams,
    pub bridge_cmd: Option<String>,
    pub bridge_connections: usize,
    pub bridge_timeout: Duration,
    pub codec: WavCodec,
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl RunRequest {
    /// Flags over config file over defaults, field by field.
    pub fn resolve(a: &SearchArgs, file: RunConfigFile, env_bridge_cmd: Option<String>) -> Result<Self> {
        let missing = |what: &str| Error::param(format!("{what} is required (flag or config)"));
        let input = a.input.clone().or(file.input).ok_or_else(|| missing("--input"))?;
        let out = a.out.clone().or(file.out).ok_or_else(|| missing("--out"))?;
        let verifier = match (&a.verifier, file.verifier) {
            (Some(text), _) => VerifierSpec::parse(text)?,
            (None, Some(VerifierField::Text(text))) => VerifierSpec::parse(&text)?,
            (None, Some(VerifierField::Tree(tree))) => {
                tree.validate()?;
                tree
            }
            (None, None) => return Err(missing("--verifier")),
        };
        let d = SearchConfig::default();
        let search = SearchConfig {
            algorithm: a.algorithm.or(file.algorithm).unwrap_or(d.algorithm),
            budget_n: a.budget.or(file.budget_n).unwrap_or(d.budget_n),
            neighbors_k: a.k.or(file.neighbors_k).unwrap_or(d.neighbors_k),
            lambda: a.lambda.or(file.lambda).unwrap_or(d.lambda),
            master_seed: a.seed.or(file.master_seed).unwrap_or(d.master_seed),
            pivot_policy: d.pivot_policy,
            neighborhood: a.neighborhood.or(file.neighborhood).unwrap_or(d.neighborhood),
            parallelism: a.parallelism.or(file.parallelism).unwrap_or_else(default_parallelism),
        };
        search.validate()?;
        let sd = SyntheticGenParams::default();
        let synthetic = SyntheticGenParams {
            cutoff_hz: a.cutoff.or(file.cutoff_hz).unwrap_or(sd.cutoff_hz),
            sigma: a.sigma.or(file.sigma).unwrap_or(sd.sigma),
            stft: StftParams::new(
                a.window.or(file.window_len).unwrap_or(sd.stft.window_len),
                a.hop.or(file.hop_len).unwrap_or(sd.stft.hop_len),
            )?,
            ..sd
        };
        let timeout_s = a.bridge_timeout_s.or(file.bridge_timeout_s);
        let bridge_timeout = match timeout_s {
            Some(s) if s > 0.0 && s.is_finite() => Duration::from_secs_f64(s),
            Some(s) => return Err(Error::param(format!("bridge timeout must be positive, got {s}"))),
            None => DEFAULT_HANDSHAKE_TIMEOUT,
        };
        Ok(Self {
            input,
            verifier,
            out,
            keep_all: a.keep_all || file.keep_all.unwrap_or(false),
            search,
            generator: a.generator.or(file.generator).unwrap_or(GeneratorKind::Synthetic),
            synthetic,
            bridge_cmd: a
                .bridge_cmd
                .clone()
                .or(file.bridge_cmd)
                .or(env_bridge_cmd)
                .filter(|c| !c.trim().is_empty()),
            bridge_connections: a.bridge_connections.or(file.bridge_connections).unwrap_or(1).max(1),
            bridge_timeout,
            codec: a.codec.or(file.codec).unwrap_or(WavCodec::Float32),
        })
    }

    pub fn needs_bridge(&self) -> bool {
        self.generator == GeneratorKind::Bridge || self.verifier.needs_bridge()
    }
}

pub fn run(a: &SearchArgs) -> Result<()> {
    let file = match &a.config {
        Some(p) => RunConfigFile::load(p)?,
        None => RunConfigFile::default(),
    };
    let req = RunRequest::resolve(a, file, std::env::var(BRIDGE_CMD_ENV).ok())?;
    execute(&req)
}

pub fn execute(req: &RunRequest) -> Result<()> {
    let lr = load_wav(&req.input)?;
    fs::create_dir_all(&req.out).map_err(|e| Error::io(&req.out, e))?;

    let bridge = if req.needs_bridge() {
        let cmd = req.bridge_cmd.as_deref().ok_or_else(|| {
            Error::BridgeUnavailable(format!("no bridge command; pass --bridge-cmd or set {BRIDGE_CMD_ENV}"))
        })?;
        Some(Bridge::connect(cmd, req.bridge_connections, req.bridge_timeout)?)
    } else {
        None
    };
    let external = bridge.clone().map(|b| Arc::new(b) as Arc<dyn ExternalScorers>);
    let verifier = build_verifier(&req.verifier, &req.synthetic.stft, external.as_ref())?;
    let generator: Box<dyn Generator> = match (req.generator, bridge) {
        (GeneratorKind::Bridge, Some(b)) => Box::new(BridgeGenerator::new(b)),
        _ => Box::new(SyntheticGenerator::new(req.synthetic, lr.sample_rate_hz())?),
    };

    log::info!(
        "{:?} search, N = {}, verifier {}, {} worker(s)",
        req.search.algorithm,
        req.search.budget_n,
        verifier.name(),
        req.search.parallelism
    );
    let mut outcome = run_search(&lr, generator.as_ref(), &verifier, &req.search)?;
    outcome.manifest.verifier_specs = vec![req.verifier.clone()];
    write_outputs(&req.out, &mut outcome, req.codec, req.keep_all)?;

    let m = &outcome.manifest;
    let score = m.selected_score().map_or(f64::NAN, |s| s.value);
    println!(
        "selected={} score={score} verifier={} candidates={} generator_calls={}",
        m.selected_index,
        m.verifier,
        m.candidates.len(),
        m.generator_calls
    );
    Ok(())
}

//! Engine side of the out-of-process model bridge: a pool of bridge
//! processes exposed as a [`Generator`] and as external verifiers.

mod client;
mod loopback;
pub mod protocol;

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use tempfile::TempDir;

use crate::audio::{load_wav, save_wav, AudioBuffer, WavCodec};
use crate::error::{Error, Result};
use crate::generator::{Generator, GeneratorInfo};
use crate::rng::LatentNoise;
use crate::verifier::{Candidate, Condition, Direction, ExternalScorers, Scorer};

pub use client::{Connection, DEFAULT_HANDSHAKE_TIMEOUT};
pub use loopback::{serve_loopback, stub_capabilities, STUB_NOISE_DIM, STUB_SAMPLE_RATE_HZ, STUB_VERIFIER};
use protocol::{Capabilities, GenerateReply, GenerateRequest, Op, ScoreReply, ScoreRequest};

pub const BRIDGE_CMD_ENV: &str = "SRSEARCH_BRIDGE_CMD";

struct Inner {
    conns: Vec<Mutex<Connection>>,
    caps: Capabilities,
    scratch: TempDir,
    next_conn: AtomicUsize,
    next_file: AtomicU64,
    inputs: Mutex<HashMap<u64, PathBuf>>,
}

/// A pool of identical bridge processes. Cheap to clone.
#[derive(Clone)]
pub struct Bridge {
    inner: Arc<Inner>,
}

impl Bridge {
    /// Starts `connections` copies of `command`; all must agree on their
    /// capabilities.
    pub fn connect(command: &str, connections: usize, timeout: Duration) -> Result<Self> {
        if command.trim().is_empty() {
            return Err(Error::BridgeUnavailable("empty bridge command".into()));
        }
        let n = connections.max(1);
        let mut conns = Vec::with_capacity(n);
        for _ in 0..n {
            conns.push(Connection::open(command, timeout)?);
        }
        let caps = conns[0].capabilities().clone();
        if conns.iter().any(|c| c.capabilities() != &caps) {
            return Err(Error::BridgeUnavailable(
                "bridge processes disagree on capabilities".into(),
            ));
        }
        log::info!(
            "bridge up: {n} connection(s), noise_dim {}, {} Hz, verifiers {:?}",
            caps.noise_dim,
            caps.sample_rate_hz,
            caps.verifiers.iter().map(|v| v.name.as_str()).collect::<Vec<_>>()
        );
        let scratch = tempfile::Builder::new()
            .prefix("srsearch-bridge")
            .tempdir()
            .map_err(|e| Error::io(std::env::temp_dir(), e))?;
        Ok(Self {
            inner: Arc::new(Inner {
                conns: conns.into_iter().map(Mutex::new).collect(),
                caps,
                scratch,
                next_conn: AtomicUsize::new(0),
                next_file: AtomicU64::new(0),
                inputs: Mutex::new(HashMap::new()),
            }),
        })
    }

    pub fn capabilities(&self) -> &Capabilities {
        &self.inner.caps
    }

    pub fn connections(&self) -> usize {
        self.inner.conns.len()
    }

    /// An idle connection if there is one, else the next in rotation.
    fn conn(&self) -> MutexGuard<'_, Connection> {
        let conns = &self.inner.conns;
        for c in conns {
            if let Ok(g) = c.try_lock() {
                return g;
            }
        }
        let i = self.inner.next_conn.fetch_add(1, Ordering::Relaxed) % conns.len();
        conns[i].lock().unwrap_or_else(|p| p.into_inner())
    }

    fn scratch_path(&self, stem: &str) -> PathBuf {
        let k = self.inner.next_file.fetch_add(1, Ordering::Relaxed);
        self.inner.scratch.path().join(format!("{stem}_{k:06}.wav"))
    }

    fn input_path(&self, lr: &AudioBuffer) -> Result<PathBuf> {
        let key = audio_digest(lr);
        let mut inputs = self.inner.inputs.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(p) = inputs.get(&key) {
            return Ok(p.clone());
        }
        let path = self.inner.scratch.path().join(format!("lr_{key:016x}.wav"));
        save_wav(lr, &path, WavCodec::Float32)?;
        inputs.insert(key, path.clone());
        Ok(path)
    }

    pub fn generate(&self, lr: &AudioBuffer, noise: &LatentNoise) -> Result<AudioBuffer> {
        if noise.dim() != self.inner.caps.noise_dim {
            return Err(Error::dim(format!(
                "noise has dimension {}, bridge expects {}",
                noise.dim(),
                self.inner.caps.noise_dim
            )));
        }
        let lr_path = self.input_path(lr)?;
        let reply: GenerateReply = self.conn().call(
            Op::Generate,
            GenerateRequest {
                lr_path: lr_path.to_string_lossy().into_owned(),
                noise: noise.values().to_vec(),
            },
        )?;
        let hr_path = PathBuf::from(&reply.hr_path);
        let audio = load_wav(&hr_path);
        if hr_path != lr_path {
            let _ = fs::remove_file(&hr_path);
        }
        audio
    }

    pub fn score(&self, verifier: &str, audio: &AudioBuffer, condition: &Condition) -> Result<f64> {
        let path = self.scratch_path("cand");
        save_wav(audio, &path, WavCodec::Float32)?;
        let reply: Result<ScoreReply> = self.conn().call(
            Op::Score,
            ScoreRequest {
                verifier: verifier.to_string(),
                wav_path: path.to_string_lossy().into_owned(),
                condition: condition.clone(),
            },
        );
        let _ = fs::remove_file(&path);
        let score = reply?.score;
        if !score.is_finite() {
            return Err(Error::Bridge(format!("verifier {verifier} returned {score}")));
        }
        Ok(score)
    }

    pub fn scratch_dir(&self) -> &Path {
        self.inner.scratch.path()
    }
}

fn audio_digest(a: &AudioBuffer) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: [u8; 4]| {
        for b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(a.sample_rate_hz().to_le_bytes());
    for s in a.samples() {
        eat(s.to_le_bytes());
    }
    h
}

/// The bridge's model as a candidate generator.
#[derive(Clone)]
pub struct BridgeGenerator {
    bridge: Bridge,
}

impl BridgeGenerator {
    pub fn new(bridge: Bridge) -> Self {
        Self { bridge }
    }
}

impl Generator for BridgeGenerator {
    fn info(&self) -> GeneratorInfo {
        GeneratorInfo {
            noise_dim: self.bridge.inner.caps.noise_dim,
            output_sample_rate_hz: self.bridge.inner.caps.sample_rate_hz,
            deterministic: true,
        }
    }

    fn generate(&self, lr: &AudioBuffer, noise: &LatentNoise) -> Result<AudioBuffer> {
        self.bridge.generate(lr, noise)
    }
}

/// One verifier declared by the bridge.
pub struct BridgeScorer {
    bridge: Bridge,
    remote: String,
    display: String,
    direction: Direction,
    condition: Condition,
}

impl Scorer for BridgeScorer {
    fn name(&self) -> &str {
        &self.display
    }

    fn direction(&self) -> Direction {
        self.direction
    }

    fn score(&self, candidate: &Candidate<'_>) -> Result<f64> {
        self.bridge.score(&self.remote, candidate.audio, &self.condition)
    }
}

impl ExternalScorers for Bridge {
    fn has(&self, name: &str) -> bool {
        self.inner.caps.verifier(name).is_some()
    }

    fn scorer(&self, name: &str, display_name: &str, condition: &Condition) -> Result<Box<dyn Scorer>> {
        let cap = self
            .inner
            .caps
            .verifier(name)
            .ok_or_else(|| Error::param(format!("bridge declares no verifier named {name:?}")))?;
        if !cap.condition_kinds.contains(&condition.kind) {
            return Err(Error::param(format!(
                "bridge verifier {name} does not accept a {} condition",
                condition.kind.as_str()
            )));
        }
        Ok(Box::new(BridgeScorer {
            bridge: self.clone(),
            remote: name.to_string(),
            display: display_name.to_string(),
            direction: cap.direction,
            condition: condition.clone(),
        }))
    }
}

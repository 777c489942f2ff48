//! Line-delimited JSON messages exchanged with a bridge process.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::verifier::{Condition, ConditionKind, Direction};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Hello,
    Generate,
    Score,
    Bye,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub op: Op,
    pub id: u64,
    #[serde(default)]
    pub payload: Value,
}

impl Message {
    pub fn new(op: Op, id: u64, payload: impl Serialize) -> Self {
        Self {
            op,
            id,
            payload: serde_json::to_value(payload).expect("payload serializes"),
        }
    }

    pub fn error(id: u64, message: impl Into<String>) -> Self {
        Self::new(
            Op::Error,
            id,
            ErrorPayload {
                message: message.into(),
            },
        )
    }

    /// One line, newline-terminated. serde_json escapes embedded newlines.
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("message serializes");
        s.push('\n');
        s
    }

    pub fn parse(line: &str) -> Result<Self> {
        serde_json::from_str(line.trim_end()).map_err(|e| Error::Bridge(format!("malformed message: {e}")))
    }

    pub fn payload_as<T: DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_value(self.payload.clone())
            .map_err(|e| Error::Bridge(format!("bad {:?} payload: {e}", self.op)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelloRequest {
    pub protocol_version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifierCapability {
    pub name: String,
    pub direction: Direction,
    pub condition_kinds: Vec<ConditionKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Capabilities {
    pub noise_dim: usize,
    pub sample_rate_hz: u32,
    pub verifiers: Vec<VerifierCapability>,
}

impl Capabilities {
    pub fn verifier(&self, name: &str) -> Option<&VerifierCapability> {
        self.verifiers.iter().find(|v| v.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub lr_path: String,
    pub noise: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateReply {
    pub hr_path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub verifier: String,
    pub wav_path: String,
    pub condition: Condition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReply {
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub message: String,
}

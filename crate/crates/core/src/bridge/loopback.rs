//! Weight-free bridge used to exercise the protocol: an identity generator
//! and a scorer that returns the negative file size.

use std::fs;
use std::io::{BufRead, Write};

use super::protocol::{
    Capabilities, GenerateReply, GenerateRequest, HelloRequest, Message, Op, ScoreReply, ScoreRequest,
    VerifierCapability, PROTOCOL_VERSION,
};
use crate::verifier::{ConditionKind, Direction};

pub const STUB_NOISE_DIM: usize = 128;
pub const STUB_SAMPLE_RATE_HZ: u32 = 24_000;
pub const STUB_VERIFIER: &str = "stub";

pub fn stub_capabilities() -> Capabilities {
    Capabilities {
        noise_dim: STUB_NOISE_DIM,
        sample_rate_hz: STUB_SAMPLE_RATE_HZ,
        verifiers: vec![VerifierCapability {
            name: STUB_VERIFIER.into(),
            direction: Direction::HigherBetter,
            condition_kinds: vec![ConditionKind::None],
        }],
    }
}

/// Serves requests from `input` until `bye`, end of input, a version
/// mismatch or a malformed line. Returns the process exit code.
pub fn serve_loopback(input: impl BufRead, mut output: impl Write) -> i32 {
    let caps = stub_capabilities();
    let mut send = |m: Message| -> bool { output.write_all(m.to_line().as_bytes()).and_then(|_| output.flush()).is_ok() };
    for line in input.lines() {
        let Ok(line) = line else { return 1 };
        if line.trim().is_empty() {
            continue;
        }
        let msg = match Message::parse(&line) {
            Ok(m) => m,
            Err(e) => {
                send(Message::error(0, e.to_string()));
                return 1;
            }
        };
        let id = msg.id;
        let reply = match msg.op {
            Op::Hello => match msg.payload_as::<HelloRequest>() {
                Ok(h) if h.protocol_version == PROTOCOL_VERSION => Message::new(Op::Hello, id, &caps),
                Ok(h) => {
                    send(Message::error(
                        id,
                        format!(
                            "unsupported protocol_version {}, this bridge speaks {PROTOCOL_VERSION}",
                            h.protocol_version
                        ),
                    ));
                    send(Message::new(Op::Bye, id, serde_json::Value::Null));
                    return 1;
                }
                Err(e) => Message::error(id, e.to_string()),
            },
            Op::Generate => generate(id, &msg, &caps),
            Op::Score => score(id, &msg, &caps),
            Op::Bye => {
                send(Message::new(Op::Bye, id, serde_json::Value::Null));
                return 0;
            }
            Op::Error => Message::error(id, "engine sent an error message"),
        };
        if !send(reply) {
            return 1;
        }
    }
    0
}

fn generate(id: u64, msg: &Message, caps: &Capabilities) -> Message {
    let req: GenerateRequest = match msg.payload_as() {
        Ok(r) => r,
        Err(e) => return Message::error(id, e.to_string()),
    };
    if req.noise.len() != caps.noise_dim {
        return Message::error(
            id,
            format!("noise has length {}, expected {}", req.noise.len(), caps.noise_dim),
        );
    }
    if fs::metadata(&req.lr_path).is_err() {
        return Message::error(id, format!("no such input {}", req.lr_path));
    }
    Message::new(Op::Generate, id, GenerateReply { hr_path: req.lr_path })
}

fn score(id: u64, msg: &Message, caps: &Capabilities) -> Message {
    let req: ScoreRequest = match msg.payload_as() {
        Ok(r) => r,
        Err(e) => return Message::error(id, e.to_string()),
    };
    let Some(cap) = caps.verifier(&req.verifier) else {
        return Message::error(id, format!("unknown verifier {:?}", req.verifier));
    };
    if !cap.condition_kinds.contains(&req.condition.kind) {
        return Message::error(
            id,
            format!("verifier {} does not accept condition {}", cap.name, req.condition.kind.as_str()),
        );
    }
    match fs::metadata(&req.wav_path) {
        Ok(meta) => Message::new(Op::Score, id, ScoreReply { score: -(meta.len() as f64) }),
        Err(e) => Message::error(id, format!("cannot read {}: {e}", req.wav_path)),
    }
}

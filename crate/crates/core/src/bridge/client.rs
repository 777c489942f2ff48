use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::protocol::{Capabilities, ErrorPayload, HelloRequest, Message, Op, PROTOCOL_VERSION};
use crate::error::{Error, Result};

pub const DEFAULT_HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(30);

/// One bridge process: a serial request pipeline over its stdin/stdout.
pub struct Connection {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<String>,
    next_id: u64,
    stash: HashMap<u64, Message>,
    caps: Capabilities,
}

impl Connection {
    /// Launches `sh -c command` and completes the hello exchange.
    pub fn open(command: &str, timeout: Duration) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::BridgeUnavailable(format!("cannot start {command:?}: {e}")))?;
        let stdout = child.stdout.take().expect("stdout is piped");
        let stdin = child.stdin.take();
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut conn = Self {
            child,
            stdin,
            lines,
            next_id: 1,
            stash: HashMap::new(),
            caps: Capabilities {
                noise_dim: 0,
                sample_rate_hz: 0,
                verifiers: Vec::new(),
            },
        };
        let caps = conn
            .call_within(
                Op::Hello,
                HelloRequest {
                    protocol_version: PROTOCOL_VERSION,
                },
                Some(timeout),
            )
            .map_err(|e| match e {
                Error::Bridge(msg) => Error::BridgeUnavailable(format!("handshake failed: {msg}")),
                e => e,
            })?;
        conn.caps = caps;
        if conn.caps.noise_dim == 0 || conn.caps.sample_rate_hz == 0 {
            return Err(Error::BridgeUnavailable(
                "handshake declared a zero noise_dim or sample rate".into(),
            ));
        }
        Ok(conn)
    }

    pub fn capabilities(&self) -> &Capabilities {
        &self.caps
    }

    pub fn call<T: DeserializeOwned>(&mut self, op: Op, payload: impl Serialize) -> Result<T> {
        self.call_within(op, payload, None)
    }

    fn call_within<T: DeserializeOwned>(
        &mut self,
        op: Op,
        payload: impl Serialize,
        timeout: Option<Duration>,
    ) -> Result<T> {
        let id = self.next_id;
        self.next_id += 1;
        self.send(&Message::new(op, id, payload))?;
        let reply = self.wait_for(id, timeout)?;
        match reply.op {
            Op::Error => {
                let msg = reply
                    .payload_as::<ErrorPayload>()
                    .map(|p| p.message)
                    .unwrap_or_else(|_| reply.payload.to_string());
                Err(Error::Bridge(msg))
            }
            got if got == op => reply.payload_as(),
            got => Err(Error::Bridge(format!("expected a {op:?} reply to request {id}, got {got:?}"))),
        }
    }

    fn send(&mut self, msg: &Message) -> Result<()> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| Error::Bridge("connection is closed".into()))?;
        stdin
            .write_all(msg.to_line().as_bytes())
            .and_then(|_| stdin.flush())
            .map_err(|e| Error::Bridge(format!("write to bridge failed: {e}")))
    }

    fn wait_for(&mut self, id: u64, timeout: Option<Duration>) -> Result<Message> {
        let deadline = timeout.map(|t| Instant::now() + t);
        loop {
            if let Some(m) = self.stash.remove(&id) {
                return Ok(m);
            }
            let line = match deadline {
                Some(d) => match self.lines.recv_timeout(d.saturating_duration_since(Instant::now())) {
                    Ok(l) => l,
                    Err(RecvTimeoutError::Timeout) => {
                        return Err(Error::BridgeUnavailable(format!(
                            "no reply to request {id} within {:.1} s",
                            timeout.unwrap_or_default().as_secs_f64()
                        )))
                    }
                    Err(RecvTimeoutError::Disconnected) => return Err(self.exited()),
                },
                None => self.lines.recv().map_err(|_| self.exited())?,
            };
            let msg = Message::parse(&line)?;
            if msg.id >= self.next_id || msg.op == Op::Bye {
                let detail = msg
                    .payload_as::<ErrorPayload>()
                    .map(|p| format!(": {}", p.message))
                    .unwrap_or_default();
                return Err(Error::Bridge(format!(
                    "unsolicited {:?} message with id {}{detail}",
                    msg.op, msg.id
                )));
            }
            self.stash.insert(msg.id, msg);
        }
    }

    fn exited(&mut self) -> Error {
        let status = self
            .child
            .try_wait()
            .ok()
            .flatten()
            .map(|s| s.to_string())
            .unwrap_or_else(|| "closed its output".into());
        Error::Bridge(format!("bridge process {status}"))
    }

    /// Sends bye and reaps the process, killing it if it lingers.
    pub fn close(&mut self) {
        if self.stdin.is_some() {
            let id = self.next_id;
            self.next_id += 1;
            let _ = self.send(&Message::new(Op::Bye, id, serde_json::Value::Null));
            self.stdin = None;
        }
        let deadline = Instant::now() + Duration::from_secs(2);
        loop {
            match self.child.try_wait() {
                Ok(Some(_)) | Err(_) => return,
                Ok(None) if Instant::now() >= deadline => {
                    let _ = self.child.kill();
                    let _ = self.child.wait();
                    return;
                }
                Ok(None) => thread::sleep(Duration::from_millis(10)),
            }
        }
    }
}

impl Drop for Connection {
    fn drop(&mut self) {
        self.close();
    }
}

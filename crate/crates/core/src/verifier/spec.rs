//! Declarative verifier descriptions and the command-line mini-language.
//!
//! ```text
//! lsd:ref.wav
//! extern:clap?text="a dog barking"
//! ensemble(lsd:ref.wav,extern:spksim?speaker=prompt.wav,extern:wer?transcript="hello")
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    None,
    ReferenceAudio,
    ReferenceText,
    Transcript,
    SpeakerPrompt,
}

impl ConditionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ConditionKind::None => "none",
            ConditionKind::ReferenceAudio => "reference_audio",
            ConditionKind::ReferenceText => "reference_text",
            ConditionKind::Transcript => "transcript",
            ConditionKind::SpeakerPrompt => "speaker_prompt",
        }
    }

    fn from_query_key(key: &str) -> Option<Self> {
        Some(match key {
            "text" => ConditionKind::ReferenceText,
            "transcript" => ConditionKind::Transcript,
            "ref" | "audio" => ConditionKind::ReferenceAudio,
            "speaker" => ConditionKind::SpeakerPrompt,
            _ => return None,
        })
    }
}

/// Optional conditioning input handed to a verifier: a file path or text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub kind: ConditionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

impl Condition {
    pub fn none() -> Self {
        Self {
            kind: ConditionKind::None,
            payload: None,
        }
    }

    pub fn new(kind: ConditionKind, payload: impl Into<String>) -> Self {
        Self {
            kind,
            payload: Some(payload.into()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.kind, &self.payload) {
            (ConditionKind::None, None) => Ok(()),
            (ConditionKind::None, Some(_)) => Err(Error::param("condition kind none takes no payload")),
            (_, None) => Err(Error::param(format!(
                "condition {} needs a payload",
                self.kind.as_str()
            ))),
            (_, Some(_)) => Ok(()),
        }
    }
}

impl Default for Condition {
    fn default() -> Self {
        Self::none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    OracleLsd,
    External,
    Ensemble,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifierSpec {
    pub name: String,
    pub backend: Backend,
    #[serde(default)]
    pub condition: Condition,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub members: Vec<VerifierSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bridge_id: Option<String>,
    /// Per-member rank weights (ensemble only); equal weights when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl VerifierSpec {
    pub fn oracle_lsd(reference: impl Into<String>) -> Self {
        Self {
            name: "lsd".into(),
            backend: Backend::OracleLsd,
            condition: Condition::new(ConditionKind::ReferenceAudio, reference),
            members: Vec::new(),
            bridge_id: None,
            weights: None,
        }
    }

    pub fn external(bridge_id: impl Into<String>, condition: Condition) -> Self {
        let id = bridge_id.into();
        Self {
            name: id.clone(),
            backend: Backend::External,
            condition,
            members: Vec::new(),
            bridge_id: Some(id),
            weights: None,
        }
    }

    /// Builds an ensemble, renaming duplicate member names `name#2`, `name#3`, ...
    pub fn ensemble(members: Vec<VerifierSpec>) -> Result<Self> {
        let mut members = members;
        let mut seen: Vec<String> = Vec::new();
        for m in &mut members {
            let base = m.name.clone();
            let mut k = 1;
            while seen.contains(&m.name) {
                k += 1;
                m.name = format!("{base}#{k}");
            }
            seen.push(m.name.clone());
        }
        let spec = Self {
            name: "ensemble".into(),
            backend: Backend::Ensemble,
            condition: Condition::none(),
            members,
            bridge_id: None,
            weights: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.condition.validate()?;
        if self.name.is_empty() {
            return Err(Error::param("verifier name is empty"));
        }
        match self.backend {
            Backend::OracleLsd => {
                if self.condition.kind != ConditionKind::ReferenceAudio {
                    return Err(Error::param("the lsd oracle needs a reference_audio condition"));
                }
            }
            Backend::External => {
                if self.bridge_id.as_deref().is_none_or(str::is_empty) {
                    return Err(Error::param(format!("external verifier {} has no bridge id", self.name)));
                }
            }
            Backend::Ensemble => {
                if self.members.len() < 2 {
                    return Err(Error::param(format!(
                        "ensemble needs at least two members, got {}",
                        self.members.len()
                    )));
                }
                if self.members.iter().any(|m| m.backend == Backend::Ensemble) {
                    return Err(Error::param("ensembles cannot be nested"));
                }
                if let Some(w) = &self.weights {
                    if w.len() != self.members.len() {
                        return Err(Error::dim(format!(
                            "{} weights for {} ensemble members",
                            w.len(),
                            self.members.len()
                        )));
                    }
                }
                for m in &self.members {
                    m.validate()?;
                }
            }
        }
        if self.backend != Backend::Ensemble && !self.members.is_empty() {
            return Err(Error::param("only ensembles have members"));
        }
        Ok(())
    }

    /// True if this spec or any member needs the external bridge.
    pub fn needs_bridge(&self) -> bool {
        self.backend == Backend::External || self.members.iter().any(VerifierSpec::needs_bridge)
    }

    /// Parses the command-line mini-language.
    pub fn parse(text: &str) -> Result<Self> {
        let mut p = Parser {
            src: text.trim(),
            pos: 0,
        };
        let spec = p.spec()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("trailing input"));
        }
        spec.validate()?;
        Ok(spec)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, what: &str) -> Error {
        Error::param(format!(
            "verifier spec {:?}: {what} at offset {}",
            self.src, self.pos
        ))
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(char::is_whitespace) {
            self.pos += self.rest().chars().next().map_or(0, char::len_utf8);
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn spec(&mut self) -> Result<VerifierSpec> {
        self.skip_ws();
        if self.eat("ensemble(") {
            let mut members = vec![self.item()?];
            loop {
                self.skip_ws();
                if self.eat(",") {
                    members.push(self.item()?);
                } else if self.eat(")") {
                    break;
                } else {
                    return Err(self.error("expected ',' or ')'"));
                }
            }
            VerifierSpec::ensemble(members)
        } else {
            self.item()
        }
    }

    fn item(&mut self) -> Result<VerifierSpec> {
        self.skip_ws();
        if self.eat("lsd:") {
            let path = self.value(&[',', ')'])?;
            if path.is_empty() {
                return Err(self.error("lsd needs a reference path"));
            }
            Ok(VerifierSpec::oracle_lsd(path))
        } else if self.eat("extern:") {
            let name = self.ident()?;
            let mut condition = Condition::none();
            if self.eat("?") {
                let key = self.ident()?;
                if !self.eat("=") {
                    return Err(self.error("expected '=' after condition key"));
                }
                let kind = ConditionKind::from_query_key(&key)
                    .ok_or_else(|| self.error(&format!("unknown condition key {key:?}")))?;
                condition = Condition::new(kind, self.value(&[',', ')'])?);
            }
            Ok(VerifierSpec::external(name, condition))
        } else if self.rest().starts_with("ensemble(") {
            Err(self.error("ensembles cannot be nested"))
        } else {
            Err(self.error("expected 'lsd:', 'extern:' or 'ensemble('"))
        }
    }

    fn ident(&mut self) -> Result<String> {
        let start = self.pos;
        while let Some(c) = self.rest().chars().next() {
            if c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.') {
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(self.error("expected a name"));
        }
        Ok(self.src[start..self.pos].to_string())
    }

    /// A double-quoted string (with `\"` and `\\` escapes) or a bare run of
    /// characters up to one of `stops`.
    fn value(&mut self, stops: &[char]) -> Result<String> {
        if self.eat("\"") {
            let mut out = String::new();
            let mut chars = self.rest().char_indices();
            while let Some((i, c)) = chars.next() {
                match c {
                    '"' => {
                        self.pos += i + 1;
                        return Ok(out);
                    }
                    '\\' => match chars.next() {
                        Some((_, e)) => out.push(e),
                        None => break,
                    },
                    c => out.push(c),
                }
            }
            Err(self.error("unterminated quoted string"))
        } else {
            let start = self.pos;
            while let Some(c) = self.rest().chars().next() {
                if stops.contains(&c) {
                    break;
                }
                self.pos += c.len_utf8();
            }
            Ok(self.src[start..self.pos].trim().to_string())
        }
    }
}

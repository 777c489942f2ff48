//! Runtime verifiers: per-candidate scorers and the set-level combination
//! that turns their raw outputs into comparable scores.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::rank::{aggregate_aesthetics, ensemble_scores_weighted, fractional_ranks, ScoreTable};
use super::score::{Direction, Score};
use super::spec::{Backend, Condition, VerifierSpec};
use crate::audio::{load_wav, lsd, lsd_spectrogram, stft, AudioBuffer, Spectrogram, StftParams};
use crate::error::{Error, Result};
use crate::rng::LatentNoise;

/// A generated candidate as seen by a verifier.
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    pub index: usize,
    pub audio: &'a AudioBuffer,
    pub noise: &'a LatentNoise,
}

/// Maps one candidate to one scalar.
pub trait Scorer: Send + Sync {
    fn name(&self) -> &str;
    fn direction(&self) -> Direction;
    fn score(&self, candidate: &Candidate<'_>) -> Result<f64>;
}

/// Log-spectral distance against a ground-truth reference.
pub struct OracleLsdScorer {
    name: String,
    reference: AudioBuffer,
    reference_spec: Spectrogram,
    params: StftParams,
}

impl OracleLsdScorer {
    pub fn new(reference: AudioBuffer, params: StftParams) -> Result<Self> {
        let reference_spec = stft(&reference, &params)?;
        Ok(Self {
            name: "lsd".into(),
            reference,
            reference_spec,
            params,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

impl Scorer for OracleLsdScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn direction(&self) -> Direction {
        Direction::LowerBetter
    }

    fn score(&self, candidate: &Candidate<'_>) -> Result<f64> {
        let audio = candidate.audio;
        if audio.len() == self.reference.len() && audio.sample_rate_hz() == self.reference.sample_rate_hz() {
            let spec = stft(audio, &self.params)?;
            lsd_spectrogram(spec.mags(), self.reference_spec.mags())
        } else {
            lsd(audio, &self.reference, &self.params)
        }
    }
}

/// Oracle LSD verifier as a single [`Score`].
pub fn oracle_lsd_score(candidate: &AudioBuffer, reference: &AudioBuffer, params: &StftParams) -> Result<Score> {
    Score::lower(lsd(candidate, reference, params)?)
}

type ScoreFn = dyn Fn(&Candidate<'_>) -> Result<f64> + Send + Sync;

/// A scorer backed by a closure; used for scripted and test verifiers.
pub struct FnScorer {
    name: String,
    direction: Direction,
    f: Box<ScoreFn>,
}

impl FnScorer {
    pub fn new(
        name: impl Into<String>,
        direction: Direction,
        f: impl Fn(&Candidate<'_>) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            direction,
            f: Box::new(f),
        }
    }
}

impl Scorer for FnScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn direction(&self) -> Direction {
        self.direction
    }

    fn score(&self, candidate: &Candidate<'_>) -> Result<f64> {
        (self.f)(candidate)
    }
}

/// One column of a verifier: a plain scorer, or the four aesthetics axes
/// collapsed to a mean rank over the candidate set.
pub enum Criterion {
    Single(Box<dyn Scorer>),
    Aesthetics {
        name: String,
        axes: [Box<dyn Scorer>; 4],
    },
}

const AES_AXES: [&str; 4] = ["ce", "cu", "pc", "pq"];

impl Criterion {
    pub fn name(&self) -> &str {
        match self {
            Criterion::Single(s) => s.name(),
            Criterion::Aesthetics { name, .. } => name,
        }
    }

    fn raw(&self, candidate: &Candidate<'_>) -> Result<Vec<f64>> {
        let values = match self {
            Criterion::Single(s) => vec![s.score(candidate)?],
            Criterion::Aesthetics { axes, .. } => axes
                .iter()
                .map(|a| a.score(candidate))
                .collect::<Result<Vec<_>>>()?,
        };
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::param(format!("verifier {} returned {v}", self.name())));
        }
        Ok(values)
    }
}

/// Raw per-criterion outputs for one candidate, before any set-level ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct RawScores(pub Vec<Vec<f64>>);

/// Scores, ranks and the final comparable score for a set of candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct SetEvaluation {
    pub overall: Vec<Score>,
    pub scores: Vec<BTreeMap<String, Score>>,
    pub ranks: Vec<BTreeMap<String, f64>>,
}

/// A complete verifier: one criterion, or a rank-averaging ensemble.
pub struct Verifier {
    name: String,
    criteria: Vec<Criterion>,
    ensemble: bool,
    weights: Option<Vec<f64>>,
}

impl fmt::Debug for Verifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Verifier")
            .field("name", &self.name)
            .field("criteria", &self.criteria.iter().map(Criterion::name).collect::<Vec<_>>())
            .field("ensemble", &self.ensemble)
            .finish()
    }
}

impl Verifier {
    pub fn single(scorer: impl Scorer + 'static) -> Self {
        Self::from_criterion(Criterion::Single(Box::new(scorer)))
    }

    pub fn from_criterion(criterion: Criterion) -> Self {
        Self {
            name: criterion.name().to_string(),
            criteria: vec![criterion],
            ensemble: false,
            weights: None,
        }
    }

    pub fn ensemble(name: impl Into<String>, criteria: Vec<Criterion>, weights: Option<Vec<f64>>) -> Result<Self> {
        if criteria.len() < 2 {
            return Err(Error::param(format!(
                "an ensemble needs at least two verifiers, got {}",
                criteria.len()
            )));
        }
        if let Some(w) = &weights {
            if w.len() != criteria.len() {
                return Err(Error::dim(format!("{} weights for {} verifiers", w.len(), criteria.len())));
            }
        }
        Ok(Self {
            name: name.into(),
            criteria,
            ensemble: true,
            weights,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Direction of the final score; ensembles and aesthetics are mean ranks.
    pub fn direction(&self) -> Direction {
        match (&self.criteria[..], self.ensemble) {
            ([Criterion::Single(s)], false) => s.direction(),
            _ => Direction::LowerBetter,
        }
    }

    pub fn raw_scores(&self, candidate: &Candidate<'_>) -> Result<RawScores> {
        self.criteria
            .iter()
            .map(|c| c.raw(candidate))
            .collect::<Result<Vec<_>>>()
            .map(RawScores)
    }

    /// Ranks and combines raw outputs within the given candidate set.
    pub fn evaluate_set(&self, raws: &[RawScores]) -> Result<SetEvaluation> {
        let n = raws.len();
        if n == 0 {
            return Err(Error::param("cannot evaluate an empty candidate set"));
        }
        let mut scores = vec![BTreeMap::new(); n];
        let mut ranks = vec![BTreeMap::new(); n];
        let mut columns = Vec::with_capacity(self.criteria.len());
        for (ci, criterion) in self.criteria.iter().enumerate() {
            let column = match criterion {
                Criterion::Single(s) => raws
                    .iter()
                    .map(|r| Score::new(r.0[ci][0], s.direction()))
                    .collect::<Result<Vec<_>>>()?,
                Criterion::Aesthetics { name, .. } => {
                    let axis = |k: usize| raws.iter().map(|r| r.0[ci][k]).collect::<Vec<_>>();
                    let axes: Vec<Vec<f64>> = (0..4).map(axis).collect();
                    for (k, values) in axes.iter().enumerate() {
                        let axis_scores: Vec<Score> = values
                            .iter()
                            .map(|&v| Score::higher(v))
                            .collect::<Result<_>>()?;
                        let axis_ranks = fractional_ranks(&axis_scores)?;
                        let key = format!("{name}.{}", AES_AXES[k]);
                        for i in 0..n {
                            scores[i].insert(key.clone(), axis_scores[i]);
                            ranks[i].insert(key.clone(), axis_ranks[i]);
                        }
                    }
                    aggregate_aesthetics(&axes[0], &axes[1], &axes[2], &axes[3])?
                }
            };
            let column_ranks = fractional_ranks(&column)?;
            for i in 0..n {
                scores[i].insert(criterion.name().to_string(), column[i]);
                ranks[i].insert(criterion.name().to_string(), column_ranks[i]);
            }
            columns.push(column);
        }
        let overall = if self.ensemble {
            let names = self.criteria.iter().map(|c| c.name().to_string()).collect();
            let table = ScoreTable::new(names, columns)?;
            let overall = ensemble_scores_weighted(&table, self.weights.as_deref())?;
            for i in 0..n {
                scores[i].insert(self.name.clone(), overall[i]);
            }
            overall
        } else {
            columns.pop().expect("one criterion")
        };
        Ok(SetEvaluation {
            overall,
            scores,
            ranks,
        })
    }
}

/// Source of externally implemented scorers (the model bridge).
pub trait ExternalScorers: Send + Sync {
    /// Whether the external side declares a verifier with this name.
    fn has(&self, name: &str) -> bool;
    fn scorer(&self, name: &str, display_name: &str, condition: &Condition) -> Result<Box<dyn Scorer>>;
}

/// Builds a runtime verifier from its declarative description.
///
/// An external name that the bridge does not declare, but for which it
/// declares `<name>.ce`, `.cu`, `.pc` and `.pq`, becomes an aesthetics
/// criterion aggregated natively.
pub fn build_verifier(
    spec: &VerifierSpec,
    params: &StftParams,
    external: Option<&Arc<dyn ExternalScorers>>,
) -> Result<Verifier> {
    spec.validate()?;
    match spec.backend {
        Backend::Ensemble => {
            let criteria = spec
                .members
                .iter()
                .map(|m| build_criterion(m, params, external))
                .collect::<Result<Vec<_>>>()?;
            Verifier::ensemble(spec.name.clone(), criteria, spec.weights.clone())
        }
        _ => Ok(Verifier::from_criterion(build_criterion(spec, params, external)?)),
    }
}

fn build_criterion(
    spec: &VerifierSpec,
    params: &StftParams,
    external: Option<&Arc<dyn ExternalScorers>>,
) -> Result<Criterion> {
    match spec.backend {
        Backend::OracleLsd => {
            let path = spec.condition.payload.as_deref().unwrap_or_default();
            let reference = load_wav(path)?;
            Ok(Criterion::Single(Box::new(
                OracleLsdScorer::new(reference, *params)?.with_name(spec.name.clone()),
            )))
        }
        Backend::External => {
            let ext = external.ok_or_else(|| {
                Error::BridgeUnavailable(format!("verifier {} needs a bridge but none is configured", spec.name))
            })?;
            let id = spec.bridge_id.as_deref().unwrap_or(&spec.name);
            if ext.has(id) {
                return Ok(Criterion::Single(ext.scorer(id, &spec.name, &spec.condition)?));
            }
            let axis_ids: Vec<String> = AES_AXES.iter().map(|a| format!("{id}.{a}")).collect();
            if axis_ids.iter().all(|a| ext.has(a)) {
                let mut axes = Vec::with_capacity(4);
                for a in &axis_ids {
                    axes.push(ext.scorer(a, a, &spec.condition)?);
                }
                let axes: [Box<dyn Scorer>; 4] = axes.try_into().map_err(|_| Error::dim("four axes"))?;
                return Ok(Criterion::Aesthetics {
                    name: spec.name.clone(),
                    axes,
                });
            }
            Err(Error::param(format!("bridge declares no verifier named {id:?}")))
        }
        Backend::Ensemble => Err(Error::param("ensembles cannot be nested")),
    }
}

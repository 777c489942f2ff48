//! Verifier abstraction, the oracle LSD verifier, fractional ranking and
//! rank-averaging ensembles.

mod rank;
mod score;
mod scorer;
mod spec;

pub use rank::{
    aggregate_aesthetics, ensemble_scores, ensemble_scores_weighted, fractional_ranks, select_best,
    ScoreTable, TieBreak,
};
pub use score::{Direction, Score};
pub use scorer::{
    build_verifier, oracle_lsd_score, Candidate, Criterion, ExternalScorers, FnScorer, OracleLsdScorer,
    RawScores, Scorer, SetEvaluation, Verifier,
};
pub use spec::{Backend, Condition, ConditionKind, VerifierSpec};

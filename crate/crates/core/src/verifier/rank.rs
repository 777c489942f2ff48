//! Fractional ranking and rank-averaging ensembles.

use super::score::{uniform_direction, Score};
use crate::error::{Error, Result};

/// N candidates scored by M verifiers, stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    verifier_names: Vec<String>,
    columns: Vec<Vec<Score>>,
}

impl ScoreTable {
    pub fn new(verifier_names: Vec<String>, columns: Vec<Vec<Score>>) -> Result<Self> {
        if verifier_names.len() != columns.len() {
            return Err(Error::dim(format!(
                "{} verifier names for {} columns",
                verifier_names.len(),
                columns.len()
            )));
        }
        if let Some(first) = columns.first() {
            if columns.iter().any(|c| c.len() != first.len()) {
                return Err(Error::dim("score table is not rectangular"));
            }
        }
        for (name, col) in verifier_names.iter().zip(&columns) {
            if !col.is_empty() {
                uniform_direction(col).map_err(|_| {
                    Error::param(format!("column {name} mixes score directions"))
                })?;
            }
        }
        Ok(Self {
            verifier_names,
            columns,
        })
    }

    pub fn verifier_names(&self) -> &[String] {
        &self.verifier_names
    }

    pub fn columns(&self) -> &[Vec<Score>] {
        &self.columns
    }

    pub fn candidates(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn verifiers(&self) -> usize {
        self.columns.len()
    }
}

/// Rank 1 is best; tied values share the mean of the positions they span.
pub fn fractional_ranks(scores: &[Score]) -> Result<Vec<f64>> {
    let direction = uniform_direction(scores)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        direction
            .better_first(scores[a].value, scores[b].value)
            .then(a.cmp(&b))
    });
    let mut ranks = vec![0.0; scores.len()];
    let mut start = 0;
    while start < order.len() {
        let value = scores[order[start]].value;
        let mut end = start + 1;
        while end < order.len() && scores[order[end]].value == value {
            end += 1;
        }
        // Positions start+1 ..= end, averaged.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    Ok(ranks)
}

/// Mean fractional rank per candidate across the table's columns, as a
/// lower-better score.
pub fn ensemble_scores(table: &ScoreTable) -> Result<Vec<Score>> {
    ensemble_scores_weighted(table, None)
}

/// Like [`ensemble_scores`], with optional non-negative column weights.
pub fn ensemble_scores_weighted(table: &ScoreTable, weights: Option<&[f64]>) -> Result<Vec<Score>> {
    if table.verifiers() < 2 {
        return Err(Error::param(format!(
            "an ensemble needs at least two verifiers, got {}",
            table.verifiers()
        )));
    }
    let n = table.candidates();
    if n == 0 {
        return Err(Error::param("score table has no candidates"));
    }
    let uniform = vec![1.0; table.verifiers()];
    let weights = weights.unwrap_or(&uniform);
    if weights.len() != table.verifiers() {
        return Err(Error::dim(format!(
            "{} weights for {} verifiers",
            weights.len(),
            table.verifiers()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::param("ensemble weights must be non-negative with a positive sum"));
    }
    let total: f64 = weights.iter().sum();
    let mut acc = vec![0.0; n];
    for (col, &w) in table.columns().iter().zip(weights) {
        for (a, r) in acc.iter_mut().zip(fractional_ranks(col)?) {
            *a += w * r;
        }
    }
    acc.into_iter().map(|s| Score::lower(s / total)).collect()
}

/// Collapses the four aesthetics axes (enjoyment, usefulness, complexity,
/// quality) into one lower-better mean-rank score per candidate.
pub fn aggregate_aesthetics(ce: &[f64], cu: &[f64], pc: &[f64], pq: &[f64]) -> Result<Vec<Score>> {
    let n = ce.len();
    if [cu.len(), pc.len(), pq.len()].iter().any(|&l| l != n) {
        return Err(Error::dim(format!(
            "aesthetics axes have lengths {}, {}, {}, {}",
            ce.len(),
            cu.len(),
            pc.len(),
            pq.len()
        )));
    }
    let columns = [ce, cu, pc, pq]
        .iter()
        .map(|axis| axis.iter().map(|&v| Score::higher(v)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let names = ["ce", "cu", "pc", "pq"].map(String::from).to_vec();
    ensemble_scores(&ScoreTable::new(names, columns)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    LowestIndex,
}

/// Index of the best score; ties go to the lowest index.
pub fn select_best(scores: &[Score], _tie_break: TieBreak) -> Result<usize> {
    let direction = uniform_direction(scores)?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if direction.is_better(s.value, scores[best].value) {
            best = i;
        }
    }
    Ok(best)
}

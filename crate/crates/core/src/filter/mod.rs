//! Two-threshold validity check for negative candidates.
//!
//! A candidate is kept when the original summary does not entail it
//! (entailment below `tau1`) and it still reads as being about the document
//! (relevance above `tau2`). Both comparisons are strict.

mod scorer;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidate::CandidateId;

pub use scorer::{
    builtin_entailment, builtin_relevance, read_score_file, score_candidates, write_score_file,
    ScoreError, ScoreFileError, ScorerSpec, RELEVANCE_SCALE,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub candidate_id: String,
    /// Probability in `[0, 1]` that the original summary entails the candidate.
    pub entailment: f64,
    /// Log-likelihood-scale alignment of the candidate to the document.
    pub relevance: f64,
}

impl ScoreRecord {
    pub fn new(candidate_id: impl Into<String>, entailment: f64, relevance: f64) -> Self {
        ScoreRecord {
            candidate_id: candidate_id.into(),
            entailment,
            relevance,
        }
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        let bad = |reason: &str| FilterError::InvalidScore {
            candidate_id: self.candidate_id.clone(),
            reason: reason.to_string(),
        };
        if !(0.0..=1.0).contains(&self.entailment) {
            return Err(bad("entailment outside [0, 1]"));
        }
        if !self.relevance.is_finite() {
            return Err(bad("relevance is not finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Entailment ceiling.
    pub tau1: f64,
    /// Relevance floor.
    pub tau2: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            tau1: 0.9,
            tau2: -1.8,
        }
    }
}

impl FilterConfig {
    pub fn new(tau1: f64, tau2: f64) -> Result<Self, FilterError> {
        let cfg = FilterConfig { tau1, tau2 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        if !(self.tau1 > 0.0 && self.tau1 <= 1.0) {
            return Err(FilterError::InvalidConfig(format!("tau1 must lie in (0, 1], got {}", self.tau1)));
        }
        if !self.tau2.is_finite() {
            return Err(FilterError::InvalidConfig(format!("tau2 must be finite, got {}", self.tau2)));
        }
        Ok(())
    }
}

/// True when the candidate is a valid negative.
pub fn decide(score: &ScoreRecord, cfg: &FilterConfig) -> bool {
    score.entailment < cfg.tau1 && score.relevance > cfg.tau2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    EntailmentTooHigh,
    RelevanceTooLow,
    Both,
}

impl RejectReason {
    pub fn name(self) -> &'static str {
        match self {
            RejectReason::EntailmentTooHigh => "entailment-too-high",
            RejectReason::RelevanceTooLow => "relevance-too-low",
            RejectReason::Both => "both",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Why [`decide`] would reject the score, or `None` if it accepts it.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn reject_reason(score: &ScoreRecord, cfg: &FilterConfig) -> Option<RejectReason> {
    let entailed = !(score.entailment < cfg.tau1);
    let off_topic = !(score.relevance > cfg.tau2);
    match (entailed, off_topic) {
        (false, false) => None,
        (true, false) => Some(RejectReason::EntailmentTooHigh),
        (false, true) => Some(RejectReason::RelevanceTooLow),
        (true, true) => Some(RejectReason::Both),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rejected<T> {
    pub candidate: T,
    pub score: ScoreRecord,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome<T> {
    pub valid: Vec<T>,
    pub rejected: Vec<Rejected<T>>,
}

impl<T> FilterOutcome<T> {
    pub fn len(&self) -> usize {
        self.valid.len() + self.rejected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("no score record for candidate `{0}`")]
    MissingScore(String),
    #[error("more than one score record for candidate `{0}`")]
    DuplicateScore(String),
    #[error("candidate id `{0}` occurs more than once")]
    DuplicateCandidate(String),
    #[error("invalid score for `{candidate_id}`: {reason}")]
    InvalidScore { candidate_id: String, reason: String },
    #[error("invalid filter thresholds: {0}")]
    InvalidConfig(String),
}

/// Joins candidates with their scores and splits them into valid and
/// rejected, preserving input order within each side. Score records for
/// ids not among the candidates are ignored.
pub fn filter_batch<T: CandidateId>(
    candidates: Vec<T>,
    scores: &[ScoreRecord],
    cfg: &FilterConfig,
) -> Result<FilterOutcome<T>, FilterError> {
    cfg.validate()?;
    let mut by_id: HashMap<&str, &ScoreRecord> = HashMap::with_capacity(scores.len());
    for s in scores {
        if by_id.insert(s.candidate_id.as_str(), s).is_some() {
            return Err(FilterError::DuplicateScore(s.candidate_id.clone()));
        }
    }
    let mut seen = std::collections::HashSet::with_capacity(candidates.len());
    for c in &candidates {
        let id = c.candidate_id();
        if !seen.insert(id) {
            return Err(FilterError::DuplicateCandidate(id.to_string()));
        }
        by_id
            .get(id)
            .ok_or_else(|| FilterError::MissingScore(id.to_string()))?
            .validate()?;
    }
    let mut outcome = FilterOutcome {
        valid: Vec::new(),
        rejected: Vec::new(),
    };
    for c in candidates {
        let score = by_id[c.candidate_id()];
        match reject_reason(score, cfg) {
            None => outcome.valid.push(c),
            Some(reason) => outcome.rejected.push(Rejected {
                candidate: c,
                score: score.clone(),
                reason,
            }),
        }
    }
    Ok(outcome)
}

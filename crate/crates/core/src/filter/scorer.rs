use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

use crate::adapter::{call_parallel, AdapterError, AdapterRequest, Task};
use crate::candidate::NegativeCandidate;
use crate::text::token_set;

use super::{FilterError, ScoreRecord};

/// Multiplier applied to the builtin relevance score.
pub const RELEVANCE_SCALE: f64 = 5.0;

/// Where candidate scores come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScorerSpec {
    /// Token-overlap baselines, no models involved.
    Builtin,
    /// Precomputed score file.
    File(PathBuf),
    /// External adapter command.
    Exec(String),
}

impl FromStr for ScorerSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "builtin" {
            Ok(ScorerSpec::Builtin)
        } else if let Some(path) = s.strip_prefix("file:").filter(|p| !p.is_empty()) {
            Ok(ScorerSpec::File(PathBuf::from(path)))
        } else if let Some(cmd) = s.strip_prefix("exec:").filter(|c| !c.trim().is_empty()) {
            Ok(ScorerSpec::Exec(cmd.to_string()))
        } else {
            Err(format!("invalid scorer `{s}` (expected builtin, file:PATH or exec:CMD)"))
        }
    }
}

impl std::fmt::Display for ScorerSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScorerSpec::Builtin => f.write_str("builtin"),
            ScorerSpec::File(p) => write!(f, "file:{}", p.display()),
            ScorerSpec::Exec(c) => write!(f, "exec:{c}"),
        }
    }
}

fn containment(container: &BTreeSet<String>, contained: &BTreeSet<String>) -> f64 {
    if contained.is_empty() {
        return 1.0;
    }
    contained.intersection(container).count() as f64 / contained.len() as f64
}

/// Share of hypothesis tokens that also occur in the premise.
pub fn builtin_entailment(premise: &str, hypothesis: &str) -> f64 {
    containment(&token_set(premise), &token_set(hypothesis))
}

/// `-(1 - overlap) * RELEVANCE_SCALE`, where overlap is the share of
/// candidate tokens that occur in the document.
pub fn builtin_relevance(document: &str, candidate: &str) -> f64 {
    -(1.0 - containment(&token_set(document), &token_set(candidate))) * RELEVANCE_SCALE
}

#[derive(Debug, Error)]
pub enum ScoreFileError {
    #[error("cannot read score file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("score file line {line}: {message}")]
    Format { line: usize, message: String },
}

pub fn read_score_file(path: &Path) -> Result<Vec<ScoreRecord>, ScoreFileError> {
    let io = |source| ScoreFileError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(fs::File::open(path).map_err(io)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ScoreRecord = serde_json::from_str(&line).map_err(|e| ScoreFileError::Format {
            line: i + 1,
            message: e.to_string(),
        })?;
        record.validate().map_err(|e| ScoreFileError::Format {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_score_file(mut out: impl Write, scores: &[ScoreRecord]) -> std::io::Result<()> {
    for s in scores {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("candidate `{0}` has no perturbed text")]
    MissingText(String),
    #[error("candidate `{candidate_id}` refers to unknown document `{doc_id}`")]
    MissingDocument { candidate_id: String, doc_id: String },
    #[error(transparent)]
    File(#[from] ScoreFileError),
    #[error(transparent)]
    Join(#[from] FilterError),
    #[error(transparent)]
    Adapter(#[from] AdapterError),
}

/// One score record per candidate, in candidate order.
///
/// `documents` maps doc ids to document text. `jobs` is the number of
/// parallel adapter streams for [`ScorerSpec::Exec`]; the other scorers
/// ignore it.
pub fn score_candidates(
    candidates: &[NegativeCandidate],
    documents: &HashMap<String, String>,
    scorer: &ScorerSpec,
    jobs: usize,
    timeout: Duration,
) -> Result<Vec<ScoreRecord>, ScoreError> {
    if let ScorerSpec::File(path) = scorer {
        let records = read_score_file(path)?;
        let mut by_id: HashMap<&str, &ScoreRecord> = HashMap::new();
        for r in &records {
            if by_id.insert(&r.candidate_id, r).is_some() {
                return Err(FilterError::DuplicateScore(r.candidate_id.clone()).into());
            }
        }
        return candidates
            .iter()
            .map(|c| {
                by_id
                    .get(c.candidate_id.as_str())
                    .map(|r| (*r).clone())
                    .ok_or_else(|| FilterError::MissingScore(c.candidate_id.clone()).into())
            })
            .collect();
    }

    let mut inputs = Vec::with_capacity(candidates.len());
    for c in candidates {
        let text = c
            .perturbed_text
            .as_deref()
            .ok_or_else(|| ScoreError::MissingText(c.candidate_id.clone()))?;
        let doc = documents.get(&c.doc_id).ok_or_else(|| ScoreError::MissingDocument {
            candidate_id: c.candidate_id.clone(),
            doc_id: c.doc_id.clone(),
        })?;
        inputs.push((c, text, doc.as_str()));
    }

    match scorer {
        ScorerSpec::Builtin => Ok(inputs
            .into_iter()
            .map(|(c, text, doc)| {
                ScoreRecord::new(
                    c.candidate_id.clone(),
                    builtin_entailment(&c.positive_text, text),
                    builtin_relevance(doc, text),
                )
            })
            .collect()),
        ScorerSpec::Exec(command) => {
            let mut requests = Vec::with_capacity(inputs.len() * 2);
            for (c, text, doc) in &inputs {
                requests.push(AdapterRequest::score(
                    format!("{}#entailment", c.candidate_id),
                    Task::Entailment,
                    &c.positive_text,
                    text,
                ));
                requests.push(AdapterRequest::score(
                    format!("{}#relevance", c.candidate_id),
                    Task::Relevance,
                    doc,
                    text,
                ));
            }
            let replies = call_parallel(command, timeout, &requests, jobs)?;
            Ok(inputs
                .iter()
                .zip(replies.chunks(2))
                .map(|((c, _, _), pair)| {
                    ScoreRecord::new(
                        c.candidate_id.clone(),
                        pair[0].score().expect("score task"),
                        pair[1].score().expect("score task"),
                    )
                })
                .collect())
        }
        ScorerSpec::File(_) => unreachable!("handled above"),
    }
}

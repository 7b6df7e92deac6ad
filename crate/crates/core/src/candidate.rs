use serde::{Deserialize, Serialize};

use crate::perturb::{ErrorFamily, Variant};

/// How `perturbed_text` was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Realization {
    /// Deterministic concept/constant sequence of the perturbed graph.
    Linearized,
    /// Text returned by an external AMR-to-text adapter.
    Adapter,
}

/// A perturbed summary sentence proposed as an inconsistent example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeCandidate {
    pub candidate_id: String,
    pub doc_id: String,
    pub sentence_index: usize,
    pub positive_text: String,
    pub perturbed_penman: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbed_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realization: Option<Realization>,
    pub family: ErrorFamily,
    pub variant: Variant,
    pub site: String,
}

/// Anything that can be joined against score records.
pub trait CandidateId {
    fn candidate_id(&self) -> &str;
}

impl CandidateId for NegativeCandidate {
    fn candidate_id(&self) -> &str {
        &self.candidate_id
    }
}

impl CandidateId for String {
    fn candidate_id(&self) -> &str {
        self
    }
}

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::perturb::ErrorFamily;

use super::PipelineError;

/// `count / total` as a percentage in hundredths, rounded half up, using
/// integer arithmetic only.
pub fn percent_hundredths(count: u64, total: u64) -> u64 {
    assert!(total > 0, "total must be positive");
    ((count as u128 * 20_000 + total as u128) / (2 * total as u128)) as u64
}

/// Percentage rounded to two decimals.
pub fn percent(count: u64, total: u64) -> f64 {
    percent_hundredths(count, total) as f64 / 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyStat {
    pub family: ErrorFamily,
    pub count: u64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Acceptance {
    pub accepted: u64,
    pub scored: u64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub total: u64,
    /// Every family, including those with no candidates.
    pub families: Vec<FamilyStat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceptance: Option<Acceptance>,
    pub per_document: BTreeMap<String, u64>,
}

impl StatsReport {
    /// Builds the report from `(doc_id, family)` pairs.
    pub fn from_items<'a>(
        items: impl IntoIterator<Item = (&'a str, ErrorFamily)>,
        acceptance: Option<(u64, u64)>,
    ) -> Result<Self, PipelineError> {
        let mut counts: BTreeMap<ErrorFamily, u64> = BTreeMap::new();
        let mut per_document: BTreeMap<String, u64> = BTreeMap::new();
        let mut total = 0;
        for (doc, family) in items {
            *counts.entry(family).or_default() += 1;
            *per_document.entry(doc.to_string()).or_default() += 1;
            total += 1;
        }
        if total == 0 {
            return Err(PipelineError::EmptyStats);
        }
        let families = ErrorFamily::ALL
            .iter()
            .map(|&family| {
                let count = counts.get(&family).copied().unwrap_or(0);
                FamilyStat {
                    family,
                    count,
                    percent: percent(count, total),
                }
            })
            .collect();
        let acceptance = acceptance.filter(|&(_, scored)| scored > 0).map(|(accepted, scored)| Acceptance {
            accepted,
            scored,
            percent: percent(accepted, scored),
        });
        Ok(StatsReport {
            total,
            families,
            acceptance,
            per_document,
        })
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<16} {:>8} {:>8}", "family", "count", "percent");
        for f in &self.families {
            let _ = writeln!(out, "{:<16} {:>8} {:>7.2}%", f.family.name(), f.count, f.percent);
        }
        let _ = writeln!(out, "{:<16} {:>8}", "total", self.total);
        if let Some(a) = &self.acceptance {
            let _ = writeln!(out, "accepted by filter: {}/{} ({:.2}%)", a.accepted, a.scored, a.percent);
        }
        let _ = writeln!(out, "documents with candidates: {}", self.per_document.len());
        out
    }
}

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::jsonl::{read_jsonl, JsonlError};

use super::bootstrap::{bootstrap_ci, BootstrapConfig};
use super::{balanced_accuracy, predict, threshold_serde, tune_threshold, EvalError, EvalRecord, Origin, Split, Tuned};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// `None` skips confidence intervals.
    pub bootstrap: Option<BootstrapConfig>,
    /// Negate scores first, for metrics where higher means more faithful.
    pub invert_scores: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            bootstrap: Some(BootstrapConfig::default()),
            invert_scores: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginReport {
    pub origin: Origin,
    #[serde(with = "threshold_serde")]
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation_balanced_accuracy: Option<f64>,
    pub balanced_accuracy: f64,
    pub ci_half_width: Option<f64>,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub dataset_name: String,
    pub origin: Origin,
    pub n: usize,
    /// `None` when the group holds only one gold class.
    pub balanced_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub origins: Vec<OriginReport>,
    /// Arithmetic mean of the per-origin balanced accuracies.
    pub average: f64,
    /// Set when the test data does not cover every origin.
    pub partial: bool,
    pub datasets: Vec<DatasetRow>,
    pub invert_scores: bool,
    pub bootstrap: Option<BootstrapConfig>,
}

fn columns(records: &[&EvalRecord]) -> (Vec<f64>, Vec<bool>) {
    records.iter().map(|r| (r.score, r.gold.is_inconsistent())).unzip()
}

fn by_origin(records: &[EvalRecord], split: Split) -> BTreeMap<Origin, Vec<&EvalRecord>> {
    let mut groups: BTreeMap<Origin, Vec<&EvalRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.split == split) {
        groups.entry(r.origin).or_default().push(r);
    }
    groups
}

/// Tunes one threshold per origin on the `val` records.
pub fn tune_per_origin(records: &[EvalRecord]) -> Result<BTreeMap<Origin, Tuned>, EvalError> {
    let groups = by_origin(records, Split::Val);
    if groups.is_empty() {
        return Err(EvalError::Empty);
    }
    groups
        .into_iter()
        .map(|(origin, group)| {
            let (scores, golds) = columns(&group);
            Ok((origin, tune_threshold(&scores, &golds)?))
        })
        .collect()
}

/// Scores the `test` records of every origin with that origin's threshold.
pub fn evaluate(
    records: &[EvalRecord],
    thresholds: &BTreeMap<Origin, f64>,
    bootstrap: Option<&BootstrapConfig>,
) -> Result<EvalReport, EvalError> {
    let groups = by_origin(records, Split::Test);
    if groups.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut origins = Vec::new();
    for (&origin, group) in &groups {
        let &threshold = thresholds.get(&origin).ok_or(EvalError::MissingThreshold(origin))?;
        let (scores, golds) = columns(group);
        let ba = balanced_accuracy(&predict(&scores, threshold), &golds)?;
        let ci = bootstrap
            .map(|cfg| bootstrap_ci(&scores, &golds, threshold, cfg))
            .transpose()?;
        origins.push(OriginReport {
            origin,
            threshold,
            validation_balanced_accuracy: None,
            balanced_accuracy: ba,
            ci_half_width: ci,
            n_test: group.len(),
        });
    }
    let average = origins.iter().map(|o| o.balanced_accuracy).sum::<f64>() / origins.len() as f64;

    let mut datasets: BTreeMap<(&str, Origin), Vec<&EvalRecord>> = BTreeMap::new();
    for group in groups.values() {
        for r in group {
            datasets.entry((r.dataset_name.as_str(), r.origin)).or_default().push(r);
        }
    }
    let datasets = datasets
        .into_iter()
        .map(|((name, origin), group)| {
            let (scores, golds) = columns(&group);
            DatasetRow {
                dataset_name: name.to_string(),
                origin,
                n: group.len(),
                balanced_accuracy: balanced_accuracy(&predict(&scores, thresholds[&origin]), &golds).ok(),
            }
        })
        .collect();

    Ok(EvalReport {
        partial: origins.len() < 2,
        origins,
        average,
        datasets,
        invert_scores: false,
        bootstrap: bootstrap.copied(),
    })
}

/// Tunes on `val`, evaluates on `test`.
pub fn run_evaluation(val: &[EvalRecord], test: &[EvalRecord], options: &EvalOptions) -> Result<EvalReport, EvalError> {
    let flip = |records: &[EvalRecord]| -> Vec<EvalRecord> {
        records
            .iter()
            .cloned()
            .map(|mut r| {
                if options.invert_scores {
                    r.score = -r.score;
                }
                r
            })
            .collect()
    };
    let (val, test) = (flip(val), flip(test));
    for r in val.iter().chain(&test) {
        if !r.score.is_finite() {
            return Err(EvalError::NonFinite(r.score));
        }
    }
    let tuned = tune_per_origin(&val)?;
    let thresholds = tuned.iter().map(|(o, t)| (*o, t.threshold)).collect();
    let mut report = evaluate(&test, &thresholds, options.bootstrap.as_ref())?;
    for o in &mut report.origins {
        o.validation_balanced_accuracy = Some(tuned[&o.origin].balanced_accuracy);
    }
    report.invert_scores = options.invert_scores;
    Ok(report)
}

pub fn read_eval_file(path: &Path) -> Result<Vec<EvalRecord>, JsonlError> {
    read_jsonl(path)
}

fn threshold_text(t: f64) -> String {
    if t == f64::INFINITY {
        "+inf".into()
    } else if t == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{t:.6}")
    }
}

impl EvalReport {
    /// Plain-text table for terminals.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<8} {:>12} {:>8} {:>8} {:>8}", "origin", "threshold", "BA", "+/-", "n");
        for o in &self.origins {
            let ci = o.ci_half_width.map_or("-".to_string(), |c| format!("{:.4}", c));
            let _ = writeln!(
                out,
                "{:<8} {:>12} {:>8.4} {:>8} {:>8}",
                o.origin.to_string(),
                threshold_text(o.threshold),
                o.balanced_accuracy,
                ci,
                o.n_test
            );
        }
        let flag = if self.partial { " (partial)" } else { "" };
        let _ = writeln!(out, "{:<8} {:>12} {:>8.4}{flag}", "average", "", self.average);
        if !self.datasets.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(out, "{:<24} {:<8} {:>8} {:>8}", "dataset", "origin", "BA", "n");
            for d in &self.datasets {
                let ba = d.balanced_accuracy.map_or("-".to_string(), |b| format!("{b:.4}"));
                let _ = writeln!(out, "{:<24} {:<8} {:>8} {:>8}", d.dataset_name, d.origin.to_string(), ba, d.n);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Gold;

    fn rec(name: &str, origin: Origin, split: Split, score: f64, bad: bool) -> EvalRecord {
        EvalRecord {
            dataset_name: name.into(),
            origin,
            split,
            score,
            gold: if bad { Gold::Inconsistent } else { Gold::Consistent },
        }
    }

    fn sample() -> Vec<EvalRecord> {
        let mut v = Vec::new();
        for (i, origin) in [Origin::Cnn, Origin::Xsum].into_iter().enumerate() {
            let shift = i as f64 * 0.2;
            for split in [Split::Val, Split::Test] {
                v.push(rec("SummEval", origin, split, 0.1 + shift, false));
                v.push(rec("SummEval", origin, split, 0.3 + shift, false));
                v.push(rec("Polytope", origin, split, 0.5 + shift, true));
                v.push(rec("Polytope", origin, split, 0.7 + shift, true));
                v.push(rec("Polytope", origin, split, 0.35 + shift, true));
            }
        }
        v
    }

    #[test]
    fn separate_thresholds_and_average() {
        let records = sample();
        let report = run_evaluation(&records, &records, &EvalOptions { bootstrap: None, invert_scores: false }).unwrap();
        assert_eq!(report.origins.len(), 2);
        assert!((report.origins[0].threshold - 0.325).abs() < 1e-12);
        assert!((report.origins[1].threshold - 0.525).abs() < 1e-12);
        let mean = (report.origins[0].balanced_accuracy + report.origins[1].balanced_accuracy) / 2.0;
        assert!((report.average - mean).abs() < 1e-12);
        assert!(!report.partial);
        assert_eq!(report.datasets.len(), 4);
        assert_eq!(report.datasets[0].balanced_accuracy, None);
    }

    #[test]
    fn single_origin_is_partial() {
        let records: Vec<_> = sample().into_iter().filter(|r| r.origin == Origin::Cnn).collect();
        let report = run_evaluation(&records, &records, &EvalOptions { bootstrap: None, invert_scores: false }).unwrap();
        assert!(report.partial);
        assert_eq!(report.average, report.origins[0].balanced_accuracy);
        assert!(report.render_table().contains("(partial)"));
    }

    #[test]
    fn inversion_matches_negated_input() {
        let records = sample();
        let negated: Vec<_> = records
            .iter()
            .cloned()
            .map(|mut r| {
                r.score = -r.score;
                r
            })
            .collect();
        let opts = EvalOptions { bootstrap: None, invert_scores: true };
        let a = run_evaluation(&negated, &negated, &opts).unwrap();
        let b = run_evaluation(&records, &records, &EvalOptions { invert_scores: false, ..opts }).unwrap();
        assert_eq!(a.average, b.average);
    }

    #[test]
    fn test_origin_without_threshold_fails() {
        let records = sample();
        let thresholds = [(Origin::Cnn, 0.3)].into_iter().collect();
        assert_eq!(evaluate(&records, &thresholds, None), Err(EvalError::MissingThreshold(Origin::Xsum)));
    }
}

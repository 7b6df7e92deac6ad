//! Evaluation of factuality-metric scores against gold labels.
//!
//! Internally a higher score means "more likely inconsistent" and the
//! inconsistent class is the positive class. Metrics with the opposite
//! orientation are handled by negating scores before tuning.

mod bootstrap;
mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bootstrap::{bootstrap_ci, BootstrapConfig};
pub use report::{evaluate, read_eval_file, run_evaluation, tune_per_origin, DatasetRow, EvalOptions, EvalReport, OriginReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Cnn,
    Xsum,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Cnn => "cnn",
            Origin::Xsum => "xsum",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[serde(alias = "validation", alias = "dev")]
    Val,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gold {
    Consistent,
    Inconsistent,
}

impl Gold {
    pub fn is_inconsistent(self) -> bool {
        self == Gold::Inconsistent
    }
}

impl FromStr for Gold {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "consistent" => Ok(Gold::Consistent),
            "inconsistent" => Ok(Gold::Inconsistent),
            other => Err(format!("unknown gold label `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub dataset_name: String,
    pub origin: Origin,
    pub split: Split,
    pub score: f64,
    pub gold: Gold,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("predictions and gold labels differ in length ({preds} vs {golds})")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("no records to evaluate")]
    Empty,
    #[error("balanced accuracy is undefined: gold labels contain only one class")]
    SingleClass,
    #[error("non-finite score {0}")]
    NonFinite(f64),
    #[error("no threshold for origin `{0}`")]
    MissingThreshold(Origin),
    #[error("no {split:?} records for origin `{origin}`")]
    MissingOrigin { origin: Origin, split: Split },
    #[error("invalid bootstrap settings: {0}")]
    InvalidBootstrap(String),
    #[error("could not draw a resample containing both classes")]
    TooSmall,
}

/// Mean of the true-positive and true-negative rates, with `true` meaning
/// inconsistent.
pub fn balanced_accuracy(preds: &[bool], golds: &[bool]) -> Result<f64, EvalError> {
    if preds.len() != golds.len() {
        return Err(EvalError::LengthMismatch {
            preds: preds.len(),
            golds: golds.len(),
        });
    }
    if golds.is_empty() {
        return Err(EvalError::Empty);
    }
    let (mut tp, mut tn, mut pos) = (0usize, 0usize, 0usize);
    for (&p, &g) in preds.iter().zip(golds) {
        if g {
            pos += 1;
            tp += p as usize;
        } else {
            tn += !p as usize;
        }
    }
    let neg = golds.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    Ok(rates(tp, tn, pos, neg))
}

fn rates(tp: usize, tn: usize, pos: usize, neg: usize) -> f64 {
    (tp as f64 / pos as f64 + tn as f64 / neg as f64) / 2.0
}

/// `score >= threshold` predicts inconsistent.
pub fn predict(scores: &[f64], threshold: f64) -> Vec<bool> {
    scores.iter().map(|&s| s >= threshold).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tuned {
    #[serde(with = "threshold_serde")]
    pub threshold: f64,
    pub balanced_accuracy: f64,
}

/// A threshold strictly between `a` and `b` (`a < b`) that keeps `a` below
/// and `b` at or above it. Falls back to `b` when the midpoint rounds onto
/// an endpoint.
fn midpoint(a: f64, b: f64) -> f64 {
    let mid = a / 2.0 + b / 2.0;
    if mid > a && mid <= b {
        mid
    } else {
        b
    }
}

/// The threshold maximizing balanced accuracy over `-inf`, the midpoints
/// between consecutive distinct scores, and `+inf`. Ties go to the smallest
/// threshold.
pub fn tune_threshold(scores: &[f64], golds: &[bool]) -> Result<Tuned, EvalError> {
    if scores.len() != golds.len() {
        return Err(EvalError::LengthMismatch {
            preds: scores.len(),
            golds: golds.len(),
        });
    }
    if scores.is_empty() {
        return Err(EvalError::Empty);
    }
    if let Some(&bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(EvalError::NonFinite(bad));
    }
    let pos = golds.iter().filter(|&&g| g).count();
    let neg = golds.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Start below every score: everything predicted inconsistent.
    let (mut tp, mut tn) = (pos, 0usize);
    let key = |tp: usize, tn: usize| tp as u128 * neg as u128 + tn as u128 * pos as u128;
    let mut best = (key(tp, tn), f64::NEG_INFINITY, tp, tn);
    let mut i = 0;
    while i < order.len() {
        let value = scores[order[i]];
        while i < order.len() && scores[order[i]] == value {
            if golds[order[i]] {
                tp -= 1;
            } else {
                tn += 1;
            }
            i += 1;
        }
        let threshold = match order.get(i) {
            Some(&next) => midpoint(value, scores[next]),
            None => f64::INFINITY,
        };
        let k = key(tp, tn);
        if k > best.0 {
            best = (k, threshold, tp, tn);
        }
    }
    Ok(Tuned {
        threshold: best.1,
        balanced_accuracy: rates(best.2, best.3, pos, neg),
    })
}

/// Serializes thresholds as numbers, with the infinite sentinels written as
/// the strings `"-inf"` and `"+inf"`.
pub mod threshold_serde {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *value == f64::INFINITY {
            s.serialize_str("+inf")
        } else if *value == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*value)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "+inf" | "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => other.parse().map_err(de::Error::custom),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_accuracy_examples() {
        assert_eq!(balanced_accuracy(&[true, false], &[true, false]).unwrap(), 1.0);
        assert_eq!(
            balanced_accuracy(&[true, false, false, false], &[true, true, false, false]).unwrap(),
            0.75
        );
        assert_eq!(balanced_accuracy(&[true; 4], &[true, true, false, false]).unwrap(), 0.5);
        assert_eq!(balanced_accuracy(&[true, false], &[true, true]), Err(EvalError::SingleClass));
        assert!(matches!(balanced_accuracy(&[true], &[true, false]), Err(EvalError::LengthMismatch { .. })));
    }

    #[test]
    fn swapping_both_classes_preserves_accuracy() {
        let preds = [true, false, true, true, false];
        let golds = [true, false, false, true, true];
        let flip = |v: &[bool]| v.iter().map(|b| !b).collect::<Vec<_>>();
        assert_eq!(
            balanced_accuracy(&preds, &golds).unwrap(),
            balanced_accuracy(&flip(&preds), &flip(&golds)).unwrap()
        );
    }

    #[test]
    fn separable_scores_get_the_midpoint() {
        let t = tune_threshold(&[0.1, 0.4, 0.6, 0.9], &[false, false, true, true]).unwrap();
        assert!((t.threshold - 0.5).abs() < 1e-15);
        assert_eq!(t.balanced_accuracy, 1.0);
    }

    #[test]
    fn constant_scores_take_lowest_sentinel() {
        let t = tune_threshold(&[0.3; 4], &[false, true, false, true]).unwrap();
        assert_eq!(t.threshold, f64::NEG_INFINITY);
        assert_eq!(t.balanced_accuracy, 0.5);
    }

    #[test]
    fn reversed_scores_keep_everything_negative_or_positive() {
        let t = tune_threshold(&[0.9, 0.1], &[false, true]).unwrap();
        assert_eq!(t.threshold, f64::NEG_INFINITY);
        assert_eq!(t.balanced_accuracy, 0.5);
    }

    #[test]
    fn midpoint_never_collapses_onto_lower_score() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let m = midpoint(a, b);
        assert!(m > a && m <= b);
    }

    #[test]
    fn tuning_rejects_bad_input() {
        assert_eq!(tune_threshold(&[], &[]), Err(EvalError::Empty));
        assert_eq!(tune_threshold(&[0.1, 0.2], &[true, true]), Err(EvalError::SingleClass));
        assert!(matches!(tune_threshold(&[f64::NAN, 0.2], &[true, false]), Err(EvalError::NonFinite(_))));
    }

    #[test]
    fn infinite_thresholds_serialize_as_strings() {
        let t = Tuned {
            threshold: f64::NEG_INFINITY,
            balanced_accuracy: 0.5,
        };
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, r#"{"threshold":"-inf","balanced_accuracy":0.5}"#);
        assert_eq!(serde_json::from_str::<Tuned>(&json).unwrap(), t);
    }
}

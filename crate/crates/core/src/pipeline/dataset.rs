use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::perturb::ErrorFamily;
use crate::rng::keyed_rng;

use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Entailment,
    Contradiction,
}

/// Where an example came from: the reference summary, or a perturbation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Provenance {
    Reference,
    Family(ErrorFamily),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Reference => f.write_str("reference"),
            Provenance::Family(fam) => f.write_str(fam.name()),
        }
    }
}

impl From<Provenance> for String {
    fn from(p: Provenance) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Provenance {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        if s == "reference" {
            Ok(Provenance::Reference)
        } else {
            ErrorFamily::from_str(&s).map(Provenance::Family)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub doc_id: String,
    pub document: String,
    pub summary: String,
    pub label: Label,
    pub provenance: Provenance,
}

impl LabeledExample {
    pub fn is_sound(&self) -> bool {
        (self.label == Label::Entailment) == (self.provenance == Provenance::Reference)
    }
}

/// An example plus the key that fixes its position in the output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Keyed {
    pub key: String,
    pub example: LabeledExample,
}

/// Keeps `n` of `items`, chosen uniformly without replacement, in their
/// original order.
fn downsample(items: Vec<Keyed>, n: usize, seed: u64, label: &str) -> Vec<Keyed> {
    if items.len() <= n {
        return items;
    }
    let mut rng = keyed_rng(seed, &["balance", label]);
    let mut keep = sample(&mut rng, items.len(), n).into_vec();
    keep.sort_unstable();
    let mut slots: Vec<Option<Keyed>> = items.into_iter().map(Some).collect();
    keep.into_iter().map(|i| slots[i].take().expect("distinct indices")).collect()
}

/// Downsamples the larger class to the size of the smaller and orders the
/// result by `(doc_id, key)`.
pub fn balance(positives: Vec<Keyed>, negatives: Vec<Keyed>, seed: u64, scope: &str) -> Result<Vec<Keyed>, PipelineError> {
    if positives.is_empty() {
        return Err(PipelineError::EmptyClass {
            class: "entailment",
            scope: scope.to_string(),
        });
    }
    if negatives.is_empty() {
        return Err(PipelineError::EmptyClass {
            class: "contradiction",
            scope: scope.to_string(),
        });
    }
    let n = positives.len().min(negatives.len());
    let mut out = downsample(positives, n, seed, &format!("{scope}/entailment"));
    out.extend(downsample(negatives, n, seed, &format!("{scope}/contradiction")));
    out.sort_by(|a, b| (&a.example.doc_id, &a.key).cmp(&(&b.example.doc_id, &b.key)));
    Ok(out)
}

/// Picks the documents of the training split. Doc ids are shuffled with a
/// seeded generator and the first `round(ratio * n)` go to training. Each
/// side keeps at least one document when there are two or more.
pub fn split_documents(doc_ids: &BTreeSet<String>, ratio: f64, seed: u64) -> Result<BTreeSet<String>, PipelineError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(PipelineError::InvalidSplit(ratio));
    }
    let mut ids: Vec<&String> = doc_ids.iter().collect();
    ids.shuffle(&mut keyed_rng(seed, &["split"]));
    let n = ids.len();
    let mut n_train = (ratio * n as f64).round() as usize;
    if n >= 2 {
        n_train = n_train.clamp(1, n - 1);
    }
    Ok(ids.into_iter().take(n_train).cloned().collect())
}

pub fn family_histogram<'a>(examples: impl IntoIterator<Item = &'a LabeledExample>) -> BTreeMap<String, u64> {
    let mut hist = BTreeMap::new();
    for e in examples {
        if let Provenance::Family(f) = e.provenance {
            *hist.entry(f.name().to_string()).or_default() += 1;
        }
    }
    hist
}

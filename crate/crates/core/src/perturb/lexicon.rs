//! Antonym lexicon and modality scale, both loaded from TSV.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::strip_sense;

const BUNDLED_ANTONYMS: &str = include_str!("../../data/antonyms.tsv");
const BUNDLED_MODALITY: &str = include_str!("../../data/modality.tsv");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

/// The four relations that license a predicate substitution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AntonymRelation {
    Antonym,
    NotDesires,
    NotCapableOf,
    NotHasProperty,
}

impl FromStr for AntonymRelation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Antonym" => Ok(Self::Antonym),
            "NotDesires" => Ok(Self::NotDesires),
            "NotCapableOf" => Ok(Self::NotCapableOf),
            "NotHasProperty" => Ok(Self::NotHasProperty),
            other => Err(format!("unknown relation `{other}`")),
        }
    }
}

impl fmt::Display for AntonymRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Antonym => "Antonym",
            Self::NotDesires => "NotDesires",
            Self::NotCapableOf => "NotCapableOf",
            Self::NotHasProperty => "NotHasProperty",
        };
        f.write_str(s)
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn read(path: &Path) -> Result<String, LexiconError> {
    std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// `concept<TAB>relation<TAB>replacement` entries.
///
/// Keys may be full concepts (`work-01`) or bare lemmas (`work`). A lemma
/// key matches any sense of the lemma, and a sense-less replacement then
/// inherits the sense tag of the concept it replaces.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AntonymLexicon {
    entries: BTreeMap<String, Vec<(AntonymRelation, String)>>,
}

impl AntonymLexicon {
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut lexicon = AntonymLexicon::default();
        for (line, row) in data_lines(text) {
            let cols: Vec<&str> = row.split('\t').collect();
            if cols.len() != 3 {
                return Err(LexiconError::Format {
                    line,
                    message: format!("expected 3 tab-separated columns, found {}", cols.len()),
                });
            }
            let relation = cols[1]
                .trim()
                .parse()
                .map_err(|message| LexiconError::Format { line, message })?;
            let (concept, replacement) = (cols[0].trim(), cols[2].trim());
            if concept.is_empty() || replacement.is_empty() {
                return Err(LexiconError::Format {
                    line,
                    message: "empty concept or replacement".into(),
                });
            }
            lexicon.insert(concept, relation, replacement);
        }
        Ok(lexicon)
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        Self::parse(&read(path)?)
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_ANTONYMS).expect("bundled antonym lexicon is well-formed")
    }

    pub fn insert(&mut self, concept: &str, relation: AntonymRelation, replacement: &str) {
        let list = self.entries.entry(concept.to_string()).or_default();
        let item = (relation, replacement.to_string());
        if !list.contains(&item) {
            list.push(item);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Replacement concepts for `concept`, exact matches first, deduplicated.
    pub fn replacements(&self, concept: &str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |c: String| {
            if c != concept && !out.contains(&c) {
                out.push(c);
            }
        };
        if let Some(list) = self.entries.get(concept) {
            for (_, r) in list {
                push(r.clone());
            }
        }
        let lemma = strip_sense(concept);
        if lemma != concept {
            let sense = &concept[lemma.len()..];
            if let Some(list) = self.entries.get(lemma) {
                for (_, r) in list {
                    if strip_sense(r) == r.as_str() {
                        push(format!("{r}{sense}"));
                    } else {
                        push(r.clone());
                    }
                }
            }
        }
        out
    }
}

/// One step up the modality scale.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModalStep {
    /// Relabel the modal concept.
    Replace(String),
    /// Delete the modal wrapper and promote its `:ARG1`.
    Remove,
}

/// `concept<TAB>stronger_concept` entries; an empty second column means the
/// concept is a wrapper whose removal strengthens the statement.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModalityMap {
    steps: BTreeMap<String, Vec<ModalStep>>,
}

impl ModalityMap {
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut map = ModalityMap::default();
        for (line, row) in data_lines(text) {
            let mut cols = row.splitn(2, '\t');
            let concept = cols.next().unwrap_or("").trim();
            let Some(stronger) = cols.next() else {
                return Err(LexiconError::Format {
                    line,
                    message: "expected concept<TAB>stronger_concept".into(),
                });
            };
            if concept.is_empty() {
                return Err(LexiconError::Format {
                    line,
                    message: "empty concept".into(),
                });
            }
            let stronger = stronger.trim();
            let step = if stronger.is_empty() {
                ModalStep::Remove
            } else if stronger.contains('\t') {
                return Err(LexiconError::Format {
                    line,
                    message: "too many columns".into(),
                });
            } else {
                ModalStep::Replace(stronger.to_string())
            };
            map.insert(concept, step);
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        Self::parse(&read(path)?)
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_MODALITY).expect("bundled modality map is well-formed")
    }

    pub fn insert(&mut self, concept: &str, step: ModalStep) {
        let list = self.steps.entry(concept.to_string()).or_default();
        if !list.contains(&step) {
            list.push(step);
        }
    }

    pub fn steps(&self, concept: &str) -> &[ModalStep] {
        self.steps.get(concept).map_or(&[], Vec::as_slice)
    }

    /// True for concepts that only appear as the stronger side.
    pub fn is_maximum(&self, concept: &str) -> bool {
        !self.steps.contains_key(concept)
            && self
                .steps
                .values()
                .flatten()
                .any(|s| matches!(s, ModalStep::Replace(c) if c == concept))
    }
}

/// Lexical resources consulted by the perturbation rules.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    pub antonyms: AntonymLexicon,
    pub modality: ModalityMap,
}

impl Lexicon {
    pub fn bundled() -> Self {
        Lexicon {
            antonyms: AntonymLexicon::bundled(),
            modality: ModalityMap::bundled(),
        }
    }
}

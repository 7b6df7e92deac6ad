//! Corpus to balanced dataset: ingest, perturb, realize, filter, balance,
//! split and write.

mod corpus;
mod dataset;
mod generate;
mod realize;
mod stats;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::adapter::{AdapterError, DEFAULT_TIMEOUT};
use crate::candidate::NegativeCandidate;
use crate::filter::{filter_batch, score_candidates, FilterConfig, FilterError, ScoreError, ScoreRecord, ScorerSpec};
use crate::jsonl::{write_jsonl, JsonlError};
use crate::perturb::{AntonymLexicon, ErrorFamily, Lexicon, LexiconError, ModalityMap, PerturbConfig};

pub use corpus::{ingest, Corpus, Document, DocumentRecord, SkippedLine, SummarySentence};
pub use dataset::{balance, family_histogram, split_documents, Keyed, Label, LabeledExample, Provenance};
pub use generate::generate;
pub use realize::{realize, Realizer};
pub use stats::{percent, percent_hundredths, Acceptance, FamilyStat, StatsReport};

pub const DEFAULT_SPLIT_RATIO: f64 = 0.874;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error("{path}: no valid records ({skipped} skipped)")]
    NoValidRecords { path: PathBuf, skipped: usize },
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Adapter(#[from] AdapterError),
    #[error("no {class} examples available for {scope}")]
    EmptyClass { class: &'static str, scope: String },
    #[error("cannot realize `{candidate_id}`: {message}")]
    Realize { candidate_id: String, message: String },
    #[error("nothing to report: no candidates")]
    EmptyStats,
    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    InvalidSplit(f64),
    #[error("cannot start worker threads: {0}")]
    Threads(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Everything `build_dataset` needs.
#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub corpus: PathBuf,
    /// Antonym TSV; `None` uses the bundled lexicon.
    pub lexicon: Option<PathBuf>,
    /// Modality TSV; `None` uses the bundled map.
    pub modality_map: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// `None` keeps every candidate unscored.
    pub filter: Option<FilterConfig>,
    pub perturb: PerturbConfig,
    pub scorer: ScorerSpec,
    pub realizer: Realizer,
    /// Training share of documents; `None` writes a single `dataset.jsonl`.
    pub split_ratio: Option<f64>,
    pub jobs: usize,
    pub adapter_timeout: Duration,
}

impl BuildOptions {
    pub fn new(corpus: impl Into<PathBuf>, out_dir: impl Into<PathBuf>, seed: u64) -> Self {
        BuildOptions {
            corpus: corpus.into(),
            lexicon: None,
            modality_map: None,
            out_dir: out_dir.into(),
            seed,
            filter: Some(FilterConfig::default()),
            perturb: PerturbConfig::default(),
            scorer: ScorerSpec::Builtin,
            realizer: Realizer::Passthrough,
            split_ratio: Some(DEFAULT_SPLIT_RATIO),
            jobs: 1,
            adapter_timeout: DEFAULT_TIMEOUT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub documents: u64,
    pub skipped_lines: u64,
    pub positives: u64,
    pub candidates: u64,
    pub valid_negatives: u64,
    pub rejected: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FamilyCounts {
    pub generated: BTreeMap<String, u64>,
    pub valid: BTreeMap<String, u64>,
    pub emitted: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitCounts {
    pub file: String,
    pub documents: u64,
    pub entailment: u64,
    pub contradiction: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub config_hash: String,
    pub scorer: String,
    pub realizer: String,
    pub filter: Option<FilterConfig>,
    pub families_enabled: Vec<ErrorFamily>,
    pub split_ratio: Option<f64>,
    pub counts: Counts,
    pub families: FamilyCounts,
    pub splits: BTreeMap<String, SplitCounts>,
    pub skipped: Vec<SkippedLine>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildSummary {
    pub manifest: Manifest,
    pub stats: StatsReport,
}

#[derive(Serialize)]
struct HashInput<'a> {
    corpus_sha256: String,
    lexicon_sha256: Option<String>,
    modality_sha256: Option<String>,
    seed: u64,
    filter: Option<FilterConfig>,
    perturb: &'a PerturbConfig,
    scorer: String,
    realizer: String,
    split_ratio: Option<f64>,
}

fn file_hash(path: &Path) -> Result<String, PipelineError> {
    Ok(sha256_hex(&fs::read(path).map_err(io_err(path))?))
}

/// Hash of every input that can change the output. Worker count and
/// output location are excluded.
fn config_hash(opts: &BuildOptions, perturb: &PerturbConfig) -> Result<String, PipelineError> {
    let input = HashInput {
        corpus_sha256: file_hash(&opts.corpus)?,
        lexicon_sha256: opts.lexicon.as_deref().map(file_hash).transpose()?,
        modality_sha256: opts.modality_map.as_deref().map(file_hash).transpose()?,
        seed: opts.seed,
        filter: opts.filter,
        perturb,
        scorer: opts.scorer.to_string(),
        realizer: opts.realizer.to_string(),
        split_ratio: opts.split_ratio,
    };
    Ok(sha256_hex(&serde_json::to_vec(&input).expect("serializable")))
}

pub fn load_lexicon(antonyms: Option<&Path>, modality: Option<&Path>) -> Result<Lexicon, PipelineError> {
    Ok(Lexicon {
        antonyms: antonyms.map(AntonymLexicon::load).transpose()?.unwrap_or_else(AntonymLexicon::bundled),
        modality: modality.map(ModalityMap::load).transpose()?.unwrap_or_else(ModalityMap::bundled),
    })
}

fn histogram(families: impl IntoIterator<Item = ErrorFamily>) -> BTreeMap<String, u64> {
    let mut h = BTreeMap::new();
    for f in families {
        *h.entry(f.name().to_string()).or_default() += 1;
    }
    h
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<(), PipelineError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")
    })
}

fn positives(corpus: &Corpus) -> Vec<Keyed> {
    corpus
        .documents
        .iter()
        .flat_map(|d| {
            d.record.summary_sentences.iter().enumerate().map(|(i, s)| Keyed {
                key: format!("{}:{i}:ref", d.record.doc_id),
                example: LabeledExample {
                    doc_id: d.record.doc_id.clone(),
                    document: d.record.document_text.clone(),
                    summary: s.text.clone(),
                    label: Label::Entailment,
                    provenance: Provenance::Reference,
                },
            })
        })
        .collect()
}

fn negatives(candidates: &[NegativeCandidate], documents: &HashMap<String, String>) -> Vec<Keyed> {
    candidates
        .iter()
        .map(|c| Keyed {
            key: c.candidate_id.clone(),
            example: LabeledExample {
                doc_id: c.doc_id.clone(),
                document: documents[&c.doc_id].clone(),
                summary: c.perturbed_text.clone().unwrap_or_default(),
                label: Label::Contradiction,
                provenance: Provenance::Family(c.family),
            },
        })
        .collect()
}

/// Runs the whole pipeline and writes into `opts.out_dir`:
/// `train.jsonl` and `validation.jsonl` (or `dataset.jsonl` without a split),
/// `candidates.jsonl`, `scores.jsonl` when filtering, `manifest.json` and
/// `stats.json`. Output bytes depend only on the inputs and the seed.
pub fn build_dataset(opts: &BuildOptions) -> Result<BuildSummary, PipelineError> {
    let perturb = PerturbConfig {
        seed: opts.seed,
        ..opts.perturb.clone()
    };
    let corpus = ingest(&opts.corpus)?;
    let lexicon = Arc::new(load_lexicon(opts.lexicon.as_deref(), opts.modality_map.as_deref())?);
    let mut candidates = generate(&corpus.documents, lexicon, &perturb, opts.jobs)?;
    realize(&mut candidates, &opts.realizer, opts.jobs, opts.adapter_timeout)?;

    let documents: HashMap<String, String> = corpus
        .documents
        .iter()
        .map(|d| (d.record.doc_id.clone(), d.record.document_text.clone()))
        .collect();

    fs::create_dir_all(&opts.out_dir).map_err(io_err(&opts.out_dir))?;
    let out = |name: &str| opts.out_dir.join(name);

    let mut rejected = BTreeMap::new();
    let (valid, scores): (Vec<NegativeCandidate>, Option<Vec<ScoreRecord>>) = match &opts.filter {
        Some(cfg) => {
            let scores = score_candidates(&candidates, &documents, &opts.scorer, opts.jobs, opts.adapter_timeout)?;
            let outcome = filter_batch(candidates.clone(), &scores, cfg)?;
            for r in &outcome.rejected {
                *rejected.entry(r.reason.name().to_string()).or_default() += 1;
            }
            (outcome.valid, Some(scores))
        }
        None => (candidates.clone(), None),
    };

    let pos = positives(&corpus);
    let neg = negatives(&valid, &documents);
    let mut splits: Vec<(&str, Vec<Keyed>, u64)> = Vec::new();
    match opts.split_ratio {
        Some(ratio) => {
            let ids: BTreeSet<String> = documents.keys().cloned().collect();
            let train = split_documents(&ids, ratio, opts.seed)?;
            for (name, in_train) in [("train", true), ("validation", false)] {
                let keep = |k: &Keyed| train.contains(&k.example.doc_id) == in_train;
                let p: Vec<Keyed> = pos.iter().filter(|k| keep(k)).cloned().collect();
                let n: Vec<Keyed> = neg.iter().filter(|k| keep(k)).cloned().collect();
                let docs = ids.iter().filter(|d| train.contains(*d) == in_train).count() as u64;
                splits.push((name, balance(p, n, opts.seed, name)?, docs));
            }
        }
        None => splits.push(("dataset", balance(pos.clone(), neg, opts.seed, "dataset")?, documents.len() as u64)),
    }

    let mut split_counts = BTreeMap::new();
    let mut emitted_families = BTreeMap::new();
    for (name, examples, docs) in &splits {
        let file = format!("{name}.jsonl");
        write_file(&out(&file), |w| write_jsonl(w, examples.iter().map(|k| &k.example)))?;
        let count = |l| examples.iter().filter(|k| k.example.label == l).count() as u64;
        split_counts.insert(
            name.to_string(),
            SplitCounts {
                file,
                documents: *docs,
                entailment: count(Label::Entailment),
                contradiction: count(Label::Contradiction),
            },
        );
        for (fam, n) in family_histogram(examples.iter().map(|k| &k.example)) {
            *emitted_families.entry(fam).or_default() += n;
        }
    }

    write_file(&out("candidates.jsonl"), |w| write_jsonl(w, &candidates))?;
    if let Some(scores) = &scores {
        write_file(&out("scores.jsonl"), |w| write_jsonl(w, scores))?;
    }

    let stats = StatsReport::from_items(
        candidates.iter().map(|c| (c.doc_id.as_str(), c.family)),
        scores.as_ref().map(|s| (valid.len() as u64, s.len() as u64)),
    )?;
    let manifest = Manifest {
        seed: opts.seed,
        config_hash: config_hash(opts, &perturb)?,
        scorer: opts.scorer.to_string(),
        realizer: opts.realizer.to_string(),
        filter: opts.filter,
        families_enabled: perturb.families.iter().copied().collect(),
        split_ratio: opts.split_ratio,
        counts: Counts {
            documents: corpus.documents.len() as u64,
            skipped_lines: corpus.skipped.len() as u64,
            positives: pos.len() as u64,
            candidates: candidates.len() as u64,
            valid_negatives: valid.len() as u64,
            rejected,
        },
        families: FamilyCounts {
            generated: histogram(candidates.iter().map(|c| c.family)),
            valid: histogram(valid.iter().map(|c| c.family)),
            emitted: emitted_families,
        },
        splits: split_counts,
        skipped: corpus.skipped.clone(),
    };
    write_json(&out("manifest.json"), &manifest)?;
    write_json(&out("stats.json"), &stats)?;
    Ok(BuildSummary { manifest, stats })
}

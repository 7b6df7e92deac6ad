use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::amr::{parse_penman, AmrGraph};
use crate::jsonl::read_lines;

use super::PipelineError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummarySentence {
    pub text: String,
    pub penman: String,
}

/// One input line: a document and its reference summary, split into
/// sentences with their AMR graphs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub document_text: String,
    pub summary_sentences: Vec<SummarySentence>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub record: DocumentRecord,
    /// Parsed graph of each summary sentence. Each carries an `id` metadata
    /// entry (`doc_id#index`) unless the PENMAN text supplied one.
    pub graphs: Vec<AmrGraph>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub skipped: Vec<SkippedLine>,
}

fn check_record(line: &str, seen: &HashSet<String>) -> Result<Document, String> {
    let record: DocumentRecord = serde_json::from_str(line).map_err(|e| format!("malformed record: {e}"))?;
    if record.doc_id.is_empty() {
        return Err("empty doc_id".into());
    }
    if seen.contains(&record.doc_id) {
        return Err(format!("duplicate doc_id `{}`", record.doc_id));
    }
    if record.summary_sentences.is_empty() {
        return Err(format!("document `{}` has no summary sentences", record.doc_id));
    }
    let mut graphs = Vec::with_capacity(record.summary_sentences.len());
    for (i, s) in record.summary_sentences.iter().enumerate() {
        let mut g = parse_penman(&s.penman).map_err(|e| format!("sentence {i}: {e}"))?;
        if !g.metadata().contains_key("id") {
            g.metadata_mut().insert("id".into(), format!("{}#{i}", record.doc_id));
        }
        graphs.push(g);
    }
    Ok(Document { record, graphs })
}

/// Reads a corpus JSONL file. Invalid lines are skipped and reported;
/// an input without any valid record is an error.
pub fn ingest(path: &Path) -> Result<Corpus, PipelineError> {
    let mut documents = Vec::new();
    let mut skipped = Vec::new();
    let mut seen = HashSet::new();
    for (line, text) in read_lines(path)? {
        match check_record(&text, &seen) {
            Ok(doc) => {
                seen.insert(doc.record.doc_id.clone());
                documents.push(doc);
            }
            Err(reason) => skipped.push(SkippedLine { line, reason }),
        }
    }
    if documents.is_empty() {
        return Err(PipelineError::NoValidRecords {
            path: path.to_path_buf(),
            skipped: skipped.len(),
        });
    }
    Ok(Corpus { documents, skipped })
}

use std::sync::Arc;

use rayon::prelude::*;

use crate::amr::{serialize_penman, AmrGraph};
use crate::candidate::NegativeCandidate;
use crate::perturb::{apply_all, Lexicon, PerturbConfig, PerturbationContext, ValuePools};

use super::corpus::Document;
use super::PipelineError;

/// Runs `f` on a pool of `jobs` threads.
pub(crate) fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R, PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| PipelineError::Threads(e.to_string()))?;
    Ok(pool.install(f))
}

fn without_metadata(graph: &AmrGraph) -> String {
    let mut g = graph.clone();
    g.metadata_mut().clear();
    serialize_penman(&g).expect("perturbed graphs are connected")
}

fn document_candidates(
    doc: &Document,
    lexicon: &Arc<Lexicon>,
    global: &Arc<ValuePools>,
    config: &PerturbConfig,
) -> Vec<NegativeCandidate> {
    let mut ctx = PerturbationContext::new(lexicon.clone())
        .with_same_doc(ValuePools::harvest(&doc.graphs))
        .with_global(global.clone())
        .with_document_text(&doc.record.document_text);
    for s in &doc.record.summary_sentences {
        ctx = ctx.with_document_text(&s.text);
    }
    let mut out = Vec::new();
    for (i, (graph, sentence)) in doc.graphs.iter().zip(&doc.record.summary_sentences).enumerate() {
        for (k, (site, perturbed)) in apply_all(graph, &ctx, config).into_iter().enumerate() {
            out.push(NegativeCandidate {
                candidate_id: format!("{}:{i}:{k}", doc.record.doc_id),
                doc_id: doc.record.doc_id.clone(),
                sentence_index: i,
                positive_text: sentence.text.clone(),
                perturbed_penman: without_metadata(&perturbed),
                perturbed_text: None,
                realization: None,
                family: site.family(),
                variant: site.variant,
                site: site.to_string(),
            });
        }
    }
    out
}

/// Every negative candidate of every summary sentence, in corpus order.
///
/// Same-document pools and the document vocabulary are built per document;
/// the global pool spans the whole corpus. The output does not depend on
/// `jobs`.
pub fn generate(
    documents: &[Document],
    lexicon: Arc<Lexicon>,
    config: &PerturbConfig,
    jobs: usize,
) -> Result<Vec<NegativeCandidate>, PipelineError> {
    let global = Arc::new(ValuePools::harvest(documents.iter().flat_map(|d| &d.graphs)));
    let per_doc: Vec<Vec<NegativeCandidate>> = with_jobs(jobs, || {
        documents
            .par_iter()
            .map(|doc| document_candidates(doc, &lexicon, &global, config))
            .collect()
    })?;
    Ok(per_doc.into_iter().flatten().collect())
}

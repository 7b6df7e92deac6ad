use std::collections::BTreeSet;
use std::sync::Arc;

use crate::amr::AmrGraph;
use crate::text::{strip_sense, tokens};

use super::lexicon::Lexicon;
use super::slots::{PoolRole, PoolValue, ValuePools};

/// Everything a perturbation may draw replacement content from.
#[derive(Debug, Clone, Default)]
pub struct PerturbationContext {
    /// Same-role values from the graphs of the same document.
    pub same_doc: ValuePools,
    /// Lowercased tokens and concept lemmas occurring in the source document.
    pub doc_vocabulary: BTreeSet<String>,
    /// Same-role values harvested from the whole corpus.
    pub global: Arc<ValuePools>,
    pub lexicon: Arc<Lexicon>,
}

impl PerturbationContext {
    pub fn new(lexicon: Arc<Lexicon>) -> Self {
        PerturbationContext {
            lexicon,
            ..Default::default()
        }
    }

    pub fn with_same_doc(mut self, pools: ValuePools) -> Self {
        self.same_doc = pools;
        self
    }

    pub fn with_global(mut self, pools: Arc<ValuePools>) -> Self {
        self.global = pools;
        self
    }

    pub fn with_document_text(mut self, text: &str) -> Self {
        self.doc_vocabulary.extend(tokens(text));
        self
    }

    /// Adds the concept lemmas and constants of document-sentence graphs.
    pub fn with_document_graphs<'a>(mut self, graphs: impl IntoIterator<Item = &'a AmrGraph>) -> Self {
        for g in graphs {
            for (_, concept) in g.nodes() {
                self.doc_vocabulary.extend(tokens(strip_sense(concept)));
            }
            for e in g.edges() {
                if let Some(c) = e.target.as_const() {
                    self.doc_vocabulary.extend(tokens(c.text()));
                }
            }
        }
        self
    }

    /// A value is foreign when none of its tokens occur in the document.
    pub fn is_foreign(&self, value: &PoolValue) -> bool {
        let toks = tokens(&value.surface());
        !toks.is_empty() && toks.iter().all(|t| !self.doc_vocabulary.contains(t))
    }

    /// Global-pool values that could replace `current` without reusing
    /// document vocabulary.
    pub fn foreign_candidates<'a>(
        &'a self,
        role: PoolRole,
        current: &'a PoolValue,
    ) -> impl Iterator<Item = &'a PoolValue> + 'a {
        self.global
            .get(role)
            .filter(move |v| *v != current && current.compatible(v) && self.is_foreign(v))
    }

    /// Same-document values that could replace `current`.
    pub fn same_doc_candidates<'a>(
        &'a self,
        role: PoolRole,
        current: &'a PoolValue,
    ) -> impl Iterator<Item = &'a PoolValue> + 'a {
        self.same_doc
            .get(role)
            .filter(move |v| *v != current && current.compatible(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn foreignness_is_token_based() {
        let ctx = PerturbationContext::default().with_document_text("Anna Nowak met officials in Leeds.");
        assert!(ctx.is_foreign(&PoolValue::name("Kowalski")));
        assert!(!ctx.is_foreign(&PoolValue::name("Anna Kowalski")));
        assert!(!ctx.is_foreign(&PoolValue::name("leeds")));
        assert!(ctx.is_foreign(&PoolValue::Concept("museum".into())));
        assert!(!ctx.is_foreign(&PoolValue::Concept("met".into())));
    }

    #[test]
    fn document_graphs_extend_vocabulary() {
        let g = crate::amr::parse_penman("(m / meet-03 :ARG0 (p / person :quant 12))").unwrap();
        let ctx = PerturbationContext::default().with_document_graphs([&g]);
        assert!(ctx.doc_vocabulary.contains("meet"));
        assert!(ctx.doc_vocabulary.contains("12"));
    }
}

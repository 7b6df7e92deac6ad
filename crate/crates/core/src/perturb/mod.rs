//! Rule-based factual-error injection over AMR graphs.
//!
//! [`enumerate_sites`] lists every applicable edit for a graph; the
//! `perturb_*` functions apply one edit each; [`apply_all`] does both and
//! drops edits that turn out inapplicable. Random choices (which antonym,
//! which pool value, what `now` becomes) come from a generator keyed on the
//! run seed, the graph id (`# ::id` metadata) and the site, so output is
//! independent of evaluation order.

mod context;
mod edits;
mod lexicon;
mod site;
mod slots;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::amr::{canonical_order, is_frame, AmrGraph};
use crate::rng::keyed_rng;

pub use context::PerturbationContext;
pub use edits::{
    apply_site, perturb_circumstance, perturb_discourse, perturb_entity, perturb_out_of_article,
    perturb_predicate, PerturbError,
};
pub use lexicon::{AntonymLexicon, AntonymRelation, Lexicon, LexiconError, ModalStep, ModalityMap};
pub use site::{ErrorFamily, Payload, PerturbationSite, SiteTarget, Variant};
pub use slots::{value_slots, PoolRole, PoolValue, ValuePools, ValueSlot};

use slots::TEMPORAL_CONCEPTS;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbConfig {
    pub families: BTreeSet<ErrorFamily>,
    /// Upper bound on sites per family and graph; excess sites are dropped
    /// by seeded sampling.
    pub max_sites: BTreeMap<ErrorFamily, usize>,
    /// Enumerate every eligible site. When false, keep one seeded site per variant.
    pub exhaustive: bool,
    pub seed: u64,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        PerturbConfig {
            families: ErrorFamily::ALL.into_iter().collect(),
            max_sites: BTreeMap::new(),
            exhaustive: true,
            seed: 0,
        }
    }
}

impl PerturbConfig {
    pub fn with_seed(seed: u64) -> Self {
        PerturbConfig {
            seed,
            ..Default::default()
        }
    }

    pub fn only(families: impl IntoIterator<Item = ErrorFamily>) -> Self {
        PerturbConfig {
            families: families.into_iter().collect(),
            ..Default::default()
        }
    }
}

struct Keys<'a> {
    seed: u64,
    graph_id: &'a str,
}

impl Keys<'_> {
    fn rng(&self, label: &str, ordinal: usize) -> ChaCha8Rng {
        keyed_rng(self.seed, &[self.graph_id, label, &ordinal.to_string()])
    }

    fn pick<T: Clone>(&self, label: &str, ordinal: usize, options: &[T]) -> Option<T> {
        match options.len() {
            0 => None,
            1 => Some(options[0].clone()),
            n => Some(options[self.rng(label, ordinal).random_range(0..n)].clone()),
        }
    }
}

fn predicate_sites(graph: &AmrGraph, order: &[String], ctx: &PerturbationContext, keys: &Keys) -> Vec<PerturbationSite> {
    let mut sites = Vec::new();
    for var in order {
        let concept = graph.concept(var).unwrap_or_default();
        if graph.has_polarity(var) {
            sites.push(PerturbationSite::new(Variant::PolarityRemove, SiteTarget::node(var), None));
        } else if is_frame(concept) {
            sites.push(PerturbationSite::new(Variant::PolarityAdd, SiteTarget::node(var), None));
        }
    }
    for (i, var) in order.iter().enumerate() {
        let concept = graph.concept(var).unwrap_or_default();
        let options = ctx.lexicon.antonyms.replacements(concept);
        if let Some(choice) = keys.pick("antonym", i, &options) {
            sites.push(PerturbationSite::new(
                Variant::Antonym,
                SiteTarget::node(var),
                Some(Payload::Concept(choice)),
            ));
        }
    }
    sites
}

fn has_distinct_args(graph: &AmrGraph, var: &str) -> bool {
    match (graph.child(var, "ARG0"), graph.child(var, "ARG1")) {
        (Some(a0), Some(a1)) => a0.target != a1.target,
        _ => false,
    }
}

fn substitution_sites(
    graph: &AmrGraph,
    roles: &[PoolRole],
    variant: Variant,
    keys: &Keys,
    candidates: impl Fn(&ValueSlot) -> Vec<PoolValue>,
) -> Vec<PerturbationSite> {
    value_slots(graph)
        .into_iter()
        .filter(|s| roles.contains(&s.role))
        .enumerate()
        .filter_map(|(i, slot)| {
            let choice = keys.pick(variant.name(), i, &candidates(&slot))?;
            Some(PerturbationSite::new(variant, slot.target, Some(Payload::Value(choice))))
        })
        .collect()
}

fn entity_sites(graph: &AmrGraph, order: &[String], ctx: &PerturbationContext, keys: &Keys) -> Vec<PerturbationSite> {
    let mut sites: Vec<PerturbationSite> = order
        .iter()
        .filter(|v| {
            let concept = graph.concept(v).unwrap_or_default();
            is_frame(concept) && concept != "cause-01" && has_distinct_args(graph, v)
        })
        .map(|v| PerturbationSite::new(Variant::AgentPatientSwap, SiteTarget::node(v), None))
        .collect();
    sites.extend(substitution_sites(
        graph,
        &[PoolRole::Name, PoolRole::Quant],
        Variant::EntitySubstitute,
        keys,
        |slot| ctx.same_doc_candidates(slot.role, &slot.current).cloned().collect(),
    ));
    sites
}

fn circumstance_sites(graph: &AmrGraph, order: &[String], ctx: &PerturbationContext, keys: &Keys) -> Vec<PerturbationSite> {
    let mut sites = Vec::new();
    for (i, var) in order.iter().enumerate() {
        let concept = graph.concept(var).unwrap_or_default();
        let options: Vec<Payload> = ctx
            .lexicon
            .modality
            .steps(concept)
            .iter()
            .filter_map(|step| match step {
                ModalStep::Replace(c) => Some(Payload::Concept(c.clone())),
                ModalStep::Remove if graph.child(var, "ARG1").is_some_and(|e| e.target.as_var().is_some()) => {
                    Some(Payload::RemoveWrapper)
                }
                ModalStep::Remove => None,
            })
            .collect();
        if let Some(choice) = keys.pick("modality", i, &options) {
            sites.push(PerturbationSite::new(
                Variant::ModalityStrengthen,
                SiteTarget::node(var),
                Some(choice),
            ));
        }
    }
    sites.extend(substitution_sites(
        graph,
        &[PoolRole::Location, PoolRole::Time, PoolRole::Date],
        Variant::CircumstanceSubstitute,
        keys,
        |slot| ctx.same_doc_candidates(slot.role, &slot.current).cloned().collect(),
    ));
    sites
}

fn discourse_sites(graph: &AmrGraph, order: &[String], keys: &Keys) -> Vec<PerturbationSite> {
    let mut sites = Vec::new();
    for (i, var) in order.iter().enumerate() {
        let concept = graph.concept(var).unwrap_or_default();
        if !TEMPORAL_CONCEPTS.contains(&concept) {
            continue;
        }
        let replacement = match concept {
            "before" => "after".to_string(),
            "after" => "before".to_string(),
            _ => keys
                .pick("now", i, &["before".to_string(), "after".to_string()])
                .unwrap(),
        };
        sites.push(PerturbationSite::new(
            Variant::TemporalFlip,
            SiteTarget::node(var),
            Some(Payload::Concept(replacement)),
        ));
    }
    for var in order {
        if graph.concept(var) == Some("cause-01") && has_distinct_args(graph, var) {
            sites.push(PerturbationSite::new(Variant::CausalityReverse, SiteTarget::node(var), None));
        }
    }
    for var in order {
        if graph.outgoing(var).any(|e| e.role == "cause" && e.target.as_var().is_some()) {
            sites.push(PerturbationSite::new(
                Variant::CausalityReverse,
                SiteTarget::edge(var, "cause"),
                None,
            ));
        }
    }
    sites
}

fn out_of_article_sites(graph: &AmrGraph, ctx: &PerturbationContext, keys: &Keys) -> Vec<PerturbationSite> {
    substitution_sites(graph, &PoolRole::ALL, Variant::ForeignSubstitute, keys, |slot| {
        ctx.foreign_candidates(slot.role, &slot.current).cloned().collect()
    })
}

/// Every applicable site across the enabled families, grouped by family.
pub fn enumerate_sites(
    graph: &AmrGraph,
    ctx: &PerturbationContext,
    config: &PerturbConfig,
) -> Vec<PerturbationSite> {
    let order = canonical_order(graph);
    let graph_id = graph.metadata().get("id").map(String::as_str).unwrap_or("");
    let keys = Keys {
        seed: config.seed,
        graph_id,
    };
    let mut all = Vec::new();
    for family in ErrorFamily::ALL {
        if !config.families.contains(&family) {
            continue;
        }
        let mut sites = match family {
            ErrorFamily::Predicate => predicate_sites(graph, &order, ctx, &keys),
            ErrorFamily::Entity => entity_sites(graph, &order, ctx, &keys),
            ErrorFamily::Circumstance => circumstance_sites(graph, &order, ctx, &keys),
            ErrorFamily::DiscourseLink => discourse_sites(graph, &order, &keys),
            ErrorFamily::OutOfArticle => out_of_article_sites(graph, ctx, &keys),
        };
        if !config.exhaustive {
            sites = one_per_variant(sites, &keys);
        }
        if let Some(&max) = config.max_sites.get(&family) {
            if sites.len() > max {
                let mut rng = keys.rng(&format!("cap:{family}"), 0);
                let mut keep = sample(&mut rng, sites.len(), max).into_vec();
                keep.sort_unstable();
                sites = keep.into_iter().map(|i| sites[i].clone()).collect();
            }
        }
        all.extend(sites);
    }
    all
}

fn one_per_variant(sites: Vec<PerturbationSite>, keys: &Keys) -> Vec<PerturbationSite> {
    let mut by_variant: BTreeMap<Variant, Vec<PerturbationSite>> = BTreeMap::new();
    let mut first_seen = Vec::new();
    for site in sites {
        if !by_variant.contains_key(&site.variant) {
            first_seen.push(site.variant);
        }
        by_variant.entry(site.variant).or_default().push(site);
    }
    first_seen
        .into_iter()
        .filter_map(|v| keys.pick(&format!("choose:{v}"), 0, &by_variant[&v]))
        .collect()
}

/// Enumerates and applies every site, keeping the edits that succeed.
pub fn apply_all(
    graph: &AmrGraph,
    ctx: &PerturbationContext,
    config: &PerturbConfig,
) -> Vec<(PerturbationSite, AmrGraph)> {
    enumerate_sites(graph, ctx, config)
        .into_iter()
        .filter_map(|site| {
            let out = apply_site(graph, &site, ctx).ok()?;
            (out != *graph).then_some((site, out))
        })
        .collect()
}

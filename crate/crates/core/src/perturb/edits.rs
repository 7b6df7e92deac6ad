//! One function per error family. Each takes the source graph and a site and
//! returns a new graph that differs from the source at that site only.

use thiserror::Error;

use crate::amr::{serialize_penman, AmrGraph, Constant, Edge, EdgeTarget, GraphError};

use super::context::PerturbationContext;
use super::lexicon::ModalStep;
use super::site::{ErrorFamily, Payload, PerturbationSite, SiteTarget, Variant};
use super::slots::{value_slots, write_slot, PoolRole, PoolValue, ValueSlot, TEMPORAL_CONCEPTS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PerturbError {
    #[error("inapplicable site {site}: {reason}")]
    Inapplicable { site: String, reason: String },
    #[error("degenerate edit at {site}: replacement equals the current value")]
    Degenerate { site: String },
    #[error("edit at {site} produced an invalid graph: {error}")]
    Invalid { site: String, error: GraphError },
}

fn inapplicable(site: &PerturbationSite, reason: impl Into<String>) -> PerturbError {
    PerturbError::Inapplicable {
        site: site.to_string(),
        reason: reason.into(),
    }
}

fn degenerate(site: &PerturbationSite) -> PerturbError {
    PerturbError::Degenerate {
        site: site.to_string(),
    }
}

fn expect_family(site: &PerturbationSite, family: ErrorFamily) -> Result<(), PerturbError> {
    if site.family() == family {
        Ok(())
    } else {
        Err(inapplicable(
            site,
            format!("expected a {family} site, got {}", site.family()),
        ))
    }
}

fn target_node<'g>(graph: &'g AmrGraph, site: &PerturbationSite) -> Result<(&'g str, &'g str), PerturbError> {
    match &site.target {
        SiteTarget::Node { var } => graph
            .nodes()
            .find(|(v, _)| v == var)
            .ok_or_else(|| inapplicable(site, format!("no node `{var}`"))),
        SiteTarget::Edge { .. } => Err(inapplicable(site, "expected a node target")),
    }
}

/// Validates an edited graph. Cycles mean the edit was not applicable here.
fn finish(graph: AmrGraph, site: &PerturbationSite) -> Result<AmrGraph, PerturbError> {
    match graph.validate().and_then(|_| serialize_penman(&graph).map(|_| ())) {
        Ok(()) => Ok(graph),
        Err(GraphError::Cycle(var)) => Err(inapplicable(site, format!("edit would create a cycle through `{var}`"))),
        Err(error) => Err(PerturbError::Invalid {
            site: site.to_string(),
            error,
        }),
    }
}

fn find_slot(graph: &AmrGraph, site: &PerturbationSite, roles: &[PoolRole]) -> Result<ValueSlot, PerturbError> {
    value_slots(graph)
        .into_iter()
        .find(|s| s.target == site.target && roles.contains(&s.role))
        .ok_or_else(|| inapplicable(site, format!("no {roles:?} value at {}", site.target)))
}

fn payload_value<'s>(site: &'s PerturbationSite, slot: &ValueSlot) -> Result<&'s PoolValue, PerturbError> {
    match &site.payload {
        Some(Payload::Value(v)) if slot.current.compatible(v) => Ok(v),
        Some(Payload::Value(v)) => Err(inapplicable(site, format!("{v} cannot replace {}", slot.current))),
        _ => Err(inapplicable(site, "missing replacement value")),
    }
}

/// Polarity toggles and antonym substitution.
pub fn perturb_predicate(
    graph: &AmrGraph,
    site: &PerturbationSite,
    ctx: &PerturbationContext,
) -> Result<AmrGraph, PerturbError> {
    expect_family(site, ErrorFamily::Predicate)?;
    let (var, concept) = target_node(graph, site)?;
    let mut out = graph.clone();
    match site.variant {
        Variant::PolarityAdd => {
            if graph.has_polarity(var) {
                return Err(inapplicable(site, "already negated"));
            }
            out.edges_mut()
                .push(Edge::new(var, "polarity", EdgeTarget::Const(Constant::negative())));
        }
        Variant::PolarityRemove => {
            if !graph.has_polarity(var) {
                return Err(inapplicable(site, "no :polarity - to remove"));
            }
            out.edges_mut().retain(|e| {
                !(e.source == var && e.role == "polarity" && e.target.as_const().is_some_and(Constant::is_negative))
            });
        }
        Variant::Antonym => {
            let Some(Payload::Concept(replacement)) = &site.payload else {
                return Err(inapplicable(site, "missing antonym"));
            };
            if replacement == concept {
                return Err(degenerate(site));
            }
            if !ctx.lexicon.antonyms.replacements(concept).contains(replacement) {
                return Err(inapplicable(site, format!("no lexicon entry {concept} -> {replacement}")));
            }
            out.set_concept(var, replacement.clone());
        }
        _ => unreachable!("family checked"),
    }
    finish(out, site)
}

fn swap_args(graph: &AmrGraph, site: &PerturbationSite, var: &str) -> Result<AmrGraph, PerturbError> {
    let position = |role: &str| {
        graph
            .edges()
            .iter()
            .position(|e| e.source == var && e.role == role)
            .ok_or_else(|| inapplicable(site, format!("`{var}` has no :{role}")))
    };
    let (a0, a1) = (position("ARG0")?, position("ARG1")?);
    if graph.edges()[a0].target == graph.edges()[a1].target {
        return Err(degenerate(site));
    }
    let mut out = graph.clone();
    let edges = out.edges_mut();
    let t0 = edges[a0].target.clone();
    edges[a0].target = std::mem::replace(&mut edges[a1].target, t0);
    Ok(out)
}

/// Agent/patient swaps and same-document name or quantity substitution.
pub fn perturb_entity(
    graph: &AmrGraph,
    site: &PerturbationSite,
    ctx: &PerturbationContext,
) -> Result<AmrGraph, PerturbError> {
    expect_family(site, ErrorFamily::Entity)?;
    match site.variant {
        Variant::AgentPatientSwap => {
            let (var, _) = target_node(graph, site)?;
            let out = swap_args(graph, site, var)?;
            finish(out, site)
        }
        Variant::EntitySubstitute => substitute(graph, site, &[PoolRole::Name, PoolRole::Quant], |slot, v| {
            ctx.same_doc.contains(slot.role, v)
        }),
        _ => unreachable!("family checked"),
    }
}

fn substitute(
    graph: &AmrGraph,
    site: &PerturbationSite,
    roles: &[PoolRole],
    allowed: impl Fn(&ValueSlot, &PoolValue) -> bool,
) -> Result<AmrGraph, PerturbError> {
    let slot = find_slot(graph, site, roles)?;
    let value = payload_value(site, &slot)?;
    if *value == slot.current {
        return Err(degenerate(site));
    }
    if !allowed(&slot, value) {
        return Err(inapplicable(site, format!("{value} is not an eligible replacement")));
    }
    let mut out = graph.clone();
    write_slot(&mut out, &slot, value);
    finish(out, site)
}

/// Modality strengthening and same-document location/time/date substitution.
pub fn perturb_circumstance(
    graph: &AmrGraph,
    site: &PerturbationSite,
    ctx: &PerturbationContext,
) -> Result<AmrGraph, PerturbError> {
    expect_family(site, ErrorFamily::Circumstance)?;
    match site.variant {
        Variant::ModalityStrengthen => {
            let (var, concept) = target_node(graph, site)?;
            let modality = &ctx.lexicon.modality;
            let steps = modality.steps(concept);
            if steps.is_empty() {
                let reason = if modality.is_maximum(concept) {
                    format!("{concept} is already at maximum modal strength")
                } else {
                    format!("{concept} is not a modal concept")
                };
                return Err(inapplicable(site, reason));
            }
            let step = match &site.payload {
                None => steps[0].clone(),
                Some(Payload::Concept(c)) => ModalStep::Replace(c.clone()),
                Some(Payload::RemoveWrapper) => ModalStep::Remove,
                Some(Payload::Value(_)) => return Err(inapplicable(site, "unexpected value payload")),
            };
            if !steps.contains(&step) {
                return Err(inapplicable(site, format!("{concept} cannot be strengthened that way")));
            }
            let out = match step {
                ModalStep::Replace(stronger) => {
                    let mut out = graph.clone();
                    out.set_concept(var, stronger);
                    out
                }
                ModalStep::Remove => remove_wrapper(graph, site, var)?,
            };
            finish(out, site)
        }
        Variant::CircumstanceSubstitute => substitute(
            graph,
            site,
            &[PoolRole::Location, PoolRole::Time, PoolRole::Date],
            |slot, v| ctx.same_doc.contains(slot.role, v),
        ),
        _ => unreachable!("family checked"),
    }
}

/// Deletes a modal wrapper and hangs its `:ARG1` where the wrapper was.
fn remove_wrapper(graph: &AmrGraph, site: &PerturbationSite, var: &str) -> Result<AmrGraph, PerturbError> {
    let Some(inner) = graph.child(var, "ARG1").and_then(|e| e.target.as_var()) else {
        return Err(inapplicable(site, format!("`{var}` has no :ARG1 node to promote")));
    };
    let inner = inner.to_string();
    let mut out = graph.clone();
    for e in out.edges_mut().iter_mut() {
        if e.to_var(var) {
            e.target = EdgeTarget::Var(inner.clone());
        }
    }
    if out.top() == var {
        out.set_top(inner);
    }
    out.remove_node(var);
    out.prune_disconnected();
    Ok(out)
}

fn flip(concept: &str) -> Option<&'static str> {
    match concept {
        "before" => Some("after"),
        "after" => Some("before"),
        _ => None,
    }
}

/// Temporal-order flips and causality reversal.
pub fn perturb_discourse(
    graph: &AmrGraph,
    site: &PerturbationSite,
    _ctx: &PerturbationContext,
) -> Result<AmrGraph, PerturbError> {
    expect_family(site, ErrorFamily::DiscourseLink)?;
    match site.variant {
        Variant::TemporalFlip => {
            let (var, concept) = target_node(graph, site)?;
            if !TEMPORAL_CONCEPTS.contains(&concept) {
                return Err(inapplicable(site, format!("{concept} is not a temporal concept")));
            }
            let replacement = match (&site.payload, concept) {
                (None, c) => flip(c).ok_or_else(|| inapplicable(site, "`now` needs an explicit replacement"))?,
                (Some(Payload::Concept(r)), "now") if r == "before" || r == "after" => r.as_str(),
                (Some(Payload::Concept(r)), c) if flip(c) == Some(r.as_str()) => r.as_str(),
                (Some(Payload::Concept(r)), c) if r == c => return Err(degenerate(site)),
                _ => return Err(inapplicable(site, format!("cannot flip {concept} that way"))),
            };
            let mut out = graph.clone();
            out.set_concept(var, replacement);
            finish(out, site)
        }
        Variant::CausalityReverse => match &site.target {
            SiteTarget::Node { .. } => {
                let (var, concept) = target_node(graph, site)?;
                if concept != "cause-01" {
                    return Err(inapplicable(site, format!("{concept} is not cause-01")));
                }
                let out = swap_args(graph, site, var)?;
                finish(out, site)
            }
            SiteTarget::Edge { source, role } => {
                if role != "cause" {
                    return Err(inapplicable(site, format!(":{role} is not a :cause edge")));
                }
                let Some(at) = graph
                    .edges()
                    .iter()
                    .position(|e| &e.source == source && e.role == "cause" && e.target.as_var().is_some())
                else {
                    return Err(inapplicable(site, format!("`{source}` has no :cause node")));
                };
                let cause = graph.edges()[at].target.as_var().unwrap().to_string();
                let mut out = graph.clone();
                out.edges_mut()[at] = Edge::new(cause.clone(), "cause", EdgeTarget::Var(source.clone()));
                if out.top() == source && out.incoming(&cause).next().is_none() {
                    out.set_top(cause);
                }
                finish(out, site)
            }
        },
        _ => unreachable!("family checked"),
    }
}

/// Substitution with a corpus value whose tokens never occur in the document.
pub fn perturb_out_of_article(
    graph: &AmrGraph,
    site: &PerturbationSite,
    ctx: &PerturbationContext,
) -> Result<AmrGraph, PerturbError> {
    expect_family(site, ErrorFamily::OutOfArticle)?;
    let slot = find_slot(graph, site, &PoolRole::ALL)?;
    let value = match &site.payload {
        None => ctx
            .foreign_candidates(slot.role, &slot.current)
            .next()
            .cloned()
            .ok_or_else(|| inapplicable(site, "global pool has no document-foreign value"))?,
        Some(_) => payload_value(site, &slot)?.clone(),
    };
    if value == slot.current {
        return Err(degenerate(site));
    }
    if !ctx.global.contains(slot.role, &value) {
        return Err(inapplicable(site, format!("{value} is not in the global pool")));
    }
    if !ctx.is_foreign(&value) {
        return Err(inapplicable(site, format!("{value} occurs in the document")));
    }
    let mut out = graph.clone();
    write_slot(&mut out, &slot, &value);
    finish(out, site)
}

/// Applies any site.
pub fn apply_site(
    graph: &AmrGraph,
    site: &PerturbationSite,
    ctx: &PerturbationContext,
) -> Result<AmrGraph, PerturbError> {
    match site.family() {
        ErrorFamily::Predicate => perturb_predicate(graph, site, ctx),
        ErrorFamily::Entity => perturb_entity(graph, site, ctx),
        ErrorFamily::Circumstance => perturb_circumstance(graph, site, ctx),
        ErrorFamily::DiscourseLink => perturb_discourse(graph, site, ctx),
        ErrorFamily::OutOfArticle => perturb_out_of_article(graph, site, ctx),
    }
}

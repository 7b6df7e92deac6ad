//! Test-only oracles, written against the public graph accessors and
//! sharing no code with the perturbation engine.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::PathBuf;

use amrfact_core::amr::{AmrGraph, EdgeTarget};
use amrfact_core::perturb::Variant;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join(name)
}

pub type Triple = (String, String, String);

/// A graph reduced to plain strings: top, variable-to-concept map, and the
/// sorted multiset of triples. Constants are prefixed `c:`, variables `v:`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    pub top: String,
    pub nodes: BTreeMap<String, String>,
    pub edges: Vec<Triple>,
}

pub fn shape(g: &AmrGraph) -> Shape {
    let nodes = g.nodes().map(|(v, c)| (v.to_string(), c.to_string())).collect();
    let mut edges: Vec<Triple> = g
        .edges()
        .iter()
        .map(|e| {
            let t = match &e.target {
                EdgeTarget::Var(v) => format!("v:{v}"),
                EdgeTarget::Const(c) => format!("c:{}", c.text()),
            };
            (e.source.clone(), e.role.clone(), t)
        })
        .collect();
    edges.sort();
    Shape {
        top: g.top().to_string(),
        nodes,
        edges,
    }
}

/// Multiset difference: items of `a` missing from `b`, and items of `b`
/// missing from `a`.
pub fn multiset_diff(a: &[Triple], b: &[Triple]) -> (Vec<Triple>, Vec<Triple>) {
    let mut count: BTreeMap<&Triple, i64> = BTreeMap::new();
    for t in a {
        *count.entry(t).or_default() += 1;
    }
    for t in b {
        *count.entry(t).or_default() -= 1;
    }
    let mut removed = Vec::new();
    let mut added = Vec::new();
    for (t, n) in count {
        for _ in 0..n.max(0) {
            removed.push(t.clone());
        }
        for _ in 0..(-n).max(0) {
            added.push(t.clone());
        }
    }
    (removed, added)
}

/// Keeps the nodes connected to the top (ignoring edge direction) and the
/// edges among them.
fn prune(mut s: Shape) -> Shape {
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (src, _, t) in &s.edges {
        if let Some(v) = t.strip_prefix("v:") {
            adj.entry(src).or_default().push(v);
            adj.entry(v).or_default().push(src);
        }
    }
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut queue = VecDeque::from([s.top.clone()]);
    while let Some(v) = queue.pop_front() {
        if !seen.insert(v.clone()) {
            continue;
        }
        for n in adj.get(v.as_str()).into_iter().flatten() {
            queue.push_back(n.to_string());
        }
    }
    s.nodes.retain(|v, _| seen.contains(v));
    s.edges.retain(|(src, _, _)| seen.contains(src));
    s
}

fn without_edge(s: &Shape, edge: &Triple) -> Shape {
    let mut out = s.clone();
    let i = out.edges.iter().position(|e| e == edge).expect("edge present");
    out.edges.remove(i);
    prune(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditKind {
    AddPolarity,
    RemovePolarity,
    Relabel,
    SwapTargets,
    ReverseEdge,
    ReplaceSubtree,
    Collapse,
}

pub fn matches(kind: EditKind, a: &Shape, b: &Shape) -> bool {
    let (removed, added) = multiset_diff(&a.edges, &b.edges);
    let same_nodes = a.nodes == b.nodes;
    let polarity = |t: &Triple| t.1 == "polarity" && t.2 == "c:-";
    match kind {
        EditKind::AddPolarity => {
            same_nodes && a.top == b.top && removed.is_empty() && added.len() == 1 && polarity(&added[0])
        }
        EditKind::RemovePolarity => {
            same_nodes && a.top == b.top && added.is_empty() && removed.len() == 1 && polarity(&removed[0])
        }
        EditKind::Relabel => {
            a.top == b.top
                && removed.is_empty()
                && added.is_empty()
                && a.nodes.keys().eq(b.nodes.keys())
                && a.nodes.iter().zip(&b.nodes).filter(|(x, y)| x.1 != y.1).count() == 1
        }
        EditKind::SwapTargets => {
            if !(same_nodes && a.top == b.top && removed.len() == 2 && added.len() == 2) {
                return false;
            }
            let (r1, r2) = (&removed[0], &removed[1]);
            r1.0 == r2.0
                && r1.1 != r2.1
                && r1.2 != r2.2
                && added.contains(&(r1.0.clone(), r1.1.clone(), r2.2.clone()))
                && added.contains(&(r1.0.clone(), r2.1.clone(), r1.2.clone()))
        }
        EditKind::ReverseEdge => {
            if !(same_nodes && removed.len() == 1 && added.len() == 1) {
                return false;
            }
            let (src, role, t) = &removed[0];
            let Some(dst) = t.strip_prefix("v:") else { return false };
            added[0] == (dst.to_string(), role.clone(), format!("v:{src}"))
                && (b.top == a.top || b.top == *src || b.top == dst)
        }
        EditKind::ReplaceSubtree => {
            if a == b || a.top != b.top {
                return false;
            }
            for ea in &a.edges {
                for eb in b.edges.iter().filter(|eb| eb.0 == ea.0 && eb.1 == ea.1) {
                    if a.nodes.get(&ea.0) != b.nodes.get(&eb.0) {
                        continue;
                    }
                    if without_edge(a, ea) == without_edge(b, eb) {
                        return true;
                    }
                }
            }
            false
        }
        EditKind::Collapse => {
            for w in a.nodes.keys() {
                for (_, _, c) in a.edges.iter().filter(|e| &e.0 == w && e.1 == "ARG1") {
                    let Some(c) = c.strip_prefix("v:") else { continue };
                    let mut s = a.clone();
                    s.nodes.remove(w);
                    let wt = format!("v:{w}");
                    s.edges = s
                        .edges
                        .into_iter()
                        .filter(|e| &e.0 != w)
                        .map(|(x, r, t)| if t == wt { (x, r, format!("v:{c}")) } else { (x, r, t) })
                        .collect();
                    if &s.top == w {
                        s.top = c.to_string();
                    }
                    let mut s = prune(s);
                    s.edges.sort();
                    if s == *b {
                        return true;
                    }
                }
            }
            false
        }
    }
}

/// The primitive edits a variant may perform.
pub fn allowed(variant: Variant) -> &'static [EditKind] {
    use EditKind::*;
    match variant {
        Variant::PolarityAdd => &[AddPolarity],
        Variant::PolarityRemove => &[RemovePolarity],
        Variant::Antonym | Variant::TemporalFlip => &[Relabel],
        Variant::ModalityStrengthen => &[Relabel, Collapse],
        Variant::AgentPatientSwap => &[SwapTargets],
        Variant::CausalityReverse => &[SwapTargets, ReverseEdge],
        Variant::EntitySubstitute | Variant::CircumstanceSubstitute | Variant::ForeignSubstitute => &[ReplaceSubtree],
    }
}

/// True when `after` differs from `before` by exactly one edit of a kind
/// permitted for `variant`.
pub fn is_single_edit(variant: Variant, before: &AmrGraph, after: &AmrGraph) -> bool {
    let (a, b) = (shape(before), shape(after));
    allowed(variant).iter().any(|&k| matches(k, &a, &b))
}

/// Balanced accuracy by direct counting, `true` meaning inconsistent.
pub fn oracle_balanced_accuracy(preds: &[bool], golds: &[bool]) -> f64 {
    let mut pos = 0u64;
    let mut neg = 0u64;
    let mut tp = 0u64;
    let mut tn = 0u64;
    for (p, g) in preds.iter().zip(golds) {
        match (g, p) {
            (true, true) => {
                pos += 1;
                tp += 1
            }
            (true, false) => pos += 1,
            (false, false) => {
                neg += 1;
                tn += 1
            }
            (false, true) => neg += 1,
        }
    }
    (tp as f64 / pos as f64 + tn as f64 / neg as f64) / 2.0
}

pub fn oracle_predict(scores: &[f64], t: f64) -> Vec<bool> {
    scores.iter().map(|&s| s >= t).collect()
}

/// Best balanced accuracy over `-inf`, every midpoint between consecutive
/// distinct scores, and `+inf`.
pub fn oracle_best_threshold(scores: &[f64], golds: &[bool]) -> (f64, Vec<f64>) {
    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut cands = vec![f64::NEG_INFINITY];
    cands.extend(distinct.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    cands.push(f64::INFINITY);
    let best = cands
        .iter()
        .map(|&t| oracle_balanced_accuracy(&oracle_predict(scores, t), golds))
        .fold(f64::NEG_INFINITY, f64::max);
    (best, distinct)
}

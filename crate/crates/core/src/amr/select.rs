use regex::Regex;

use super::graph::AmrGraph;
use super::penman::canonical_order;

/// Concept suffix of a PropBank frameset, e.g. `work-01`.
pub const FRAME_PATTERN: &str = r"-\d\d$";

#[derive(Debug, Clone)]
pub enum NodeSelector {
    /// Nodes whose concept matches the pattern.
    Concept(Regex),
    /// Nodes that are the target of an edge with this (forward) role.
    IncomingRole(String),
    /// Nodes that have an outgoing edge with this (forward) role.
    OutgoingRole(String),
}

impl NodeSelector {
    pub fn frames() -> Self {
        NodeSelector::Concept(Regex::new(FRAME_PATTERN).unwrap())
    }

    pub fn concept(pattern: &str) -> Result<Self, regex::Error> {
        Ok(NodeSelector::Concept(Regex::new(pattern)?))
    }

    fn matches(&self, graph: &AmrGraph, var: &str) -> bool {
        match self {
            NodeSelector::Concept(re) => graph.concept(var).is_some_and(|c| re.is_match(c)),
            NodeSelector::IncomingRole(role) => graph.incoming(var).any(|e| &e.role == role),
            NodeSelector::OutgoingRole(role) => graph.outgoing(var).any(|e| &e.role == role),
        }
    }
}

pub fn is_frame(concept: &str) -> bool {
    let b = concept.as_bytes();
    b.len() > 3 && b[b.len() - 3] == b'-' && b[b.len() - 2..].iter().all(u8::is_ascii_digit)
}

/// Matching variables, ordered by first appearance in the canonical serialization.
pub fn find_nodes(graph: &AmrGraph, selector: &NodeSelector) -> Vec<String> {
    canonical_order(graph)
        .into_iter()
        .filter(|v| selector.matches(graph, v))
        .collect()
}

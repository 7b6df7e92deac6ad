use std::collections::{HashMap, HashSet};
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Roles whose names end in `-of` without being inverses.
const NATIVE_OF_ROLES: &[&str] = &["consist-of", "prep-out-of", "prep-on-behalf-of"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("top variable `{0}` is not a node")]
    MissingTop(String),
    #[error("edge :{role} has unknown source variable `{source_var}`")]
    UnknownSource { source_var: String, role: String },
    #[error("edge :{role} from `{source_var}` points at unknown variable `{target}`")]
    UnknownTarget {
        source_var: String,
        role: String,
        target: String,
    },
    #[error("variable `{0}` has an empty concept")]
    EmptyConcept(String),
    #[error("inverse role :{role} cannot take a constant")]
    InverseConstant { role: String },
    #[error(":polarity on `{0}` must be the bare symbol `-`")]
    BadPolarity(String),
    #[error("graph contains a cycle through `{0}`")]
    Cycle(String),
    #[error("node `{0}` is not connected to the top")]
    Unreachable(String),
}

/// A constant attribute value.
///
/// Numbers keep their source spelling so that serialization is lossless.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Constant {
    Str(String),
    Number(String),
    Symbol(String),
}

impl Constant {
    pub fn negative() -> Self {
        Constant::Symbol("-".to_string())
    }

    /// Classifies a bare token as a number or a symbol.
    pub fn from_bare(token: &str) -> Self {
        if is_decimal(token) {
            Constant::Number(token.to_string())
        } else {
            Constant::Symbol(token.to_string())
        }
    }

    /// Builds a constant from plain text, quoting anything that is not a number.
    pub fn from_text(text: &str) -> Self {
        if is_decimal(text) {
            Constant::Number(text.to_string())
        } else {
            Constant::Str(text.to_string())
        }
    }

    pub fn text(&self) -> &str {
        match self {
            Constant::Str(s) | Constant::Number(s) | Constant::Symbol(s) => s,
        }
    }

    pub fn is_negative(&self) -> bool {
        matches!(self, Constant::Symbol(s) if s == "-")
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        _ => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Constant::Number(s) | Constant::Symbol(s) => f.write_str(s),
        }
    }
}

pub(crate) fn is_decimal(token: &str) -> bool {
    let body = token.strip_prefix(['-', '+']).unwrap_or(token);
    let mut parts = body.splitn(2, '.');
    let int = parts.next().unwrap_or("");
    let frac = parts.next();
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    match frac {
        None => digits(int),
        Some(frac) => (int.is_empty() || digits(int)) && digits(frac),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeTarget {
    Var(String),
    Const(Constant),
}

impl EdgeTarget {
    pub fn as_var(&self) -> Option<&str> {
        match self {
            EdgeTarget::Var(v) => Some(v),
            EdgeTarget::Const(_) => None,
        }
    }

    pub fn as_const(&self) -> Option<&Constant> {
        match self {
            EdgeTarget::Const(c) => Some(c),
            EdgeTarget::Var(_) => None,
        }
    }
}

/// A role edge, always stored in forward (non-inverted) direction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub source: String,
    pub role: String,
    pub target: EdgeTarget,
}

impl Edge {
    pub fn new(source: impl Into<String>, role: impl Into<String>, target: EdgeTarget) -> Self {
        Edge {
            source: source.into(),
            role: role.into(),
            target,
        }
    }

    pub fn to_var(&self, var: &str) -> bool {
        self.target.as_var() == Some(var)
    }
}

/// Splits a role into its forward name and whether it was written inverted.
pub fn normalize_role(role: &str) -> (&str, bool) {
    if NATIVE_OF_ROLES.contains(&role) {
        return (role, false);
    }
    match role.strip_suffix("-of") {
        Some(base) if !base.is_empty() => (base, true),
        _ => (role, false),
    }
}

/// Spells the inverse of a forward role.
pub fn invert_role(role: &str) -> String {
    format!("{role}-of")
}

/// A rooted, acyclic AMR graph.
///
/// Node insertion order is the order of first definition; edges keep their
/// insertion order. Equality ignores edge order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AmrGraph {
    top: String,
    nodes: IndexMap<String, String>,
    edges: Vec<Edge>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    metadata: IndexMap<String, String>,
}

impl PartialEq for AmrGraph {
    fn eq(&self, other: &Self) -> bool {
        self.top == other.top
            && self.nodes == other.nodes
            && self.metadata == other.metadata
            && self.edge_multiset() == other.edge_multiset()
    }
}

impl Eq for AmrGraph {}

impl AmrGraph {
    /// Builds a graph, normalizing inverse roles and checking every invariant.
    pub fn new(
        top: impl Into<String>,
        nodes: impl IntoIterator<Item = (String, String)>,
        edges: impl IntoIterator<Item = Edge>,
    ) -> Result<Self, GraphError> {
        let mut normalized = Vec::new();
        for edge in edges {
            let (base, inverted) = normalize_role(&edge.role);
            if inverted {
                let EdgeTarget::Var(target) = edge.target else {
                    return Err(GraphError::InverseConstant { role: edge.role });
                };
                normalized.push(Edge::new(target, base, EdgeTarget::Var(edge.source)));
            } else {
                normalized.push(edge);
            }
        }
        let graph = AmrGraph {
            top: top.into(),
            nodes: nodes.into_iter().collect(),
            edges: normalized,
            metadata: IndexMap::new(),
        };
        graph.validate()?;
        Ok(graph)
    }

    pub fn with_metadata(mut self, metadata: IndexMap<String, String>) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn top(&self) -> &str {
        &self.top
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&str, &str)> {
        self.nodes.iter().map(|(v, c)| (v.as_str(), c.as_str()))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn concept(&self, var: &str) -> Option<&str> {
        self.nodes.get(var).map(String::as_str)
    }

    pub fn contains(&self, var: &str) -> bool {
        self.nodes.contains_key(var)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn metadata(&self) -> &IndexMap<String, String> {
        &self.metadata
    }

    pub fn metadata_mut(&mut self) -> &mut IndexMap<String, String> {
        &mut self.metadata
    }

    pub fn outgoing<'a>(&'a self, var: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.source == var)
    }

    pub fn incoming<'a>(&'a self, var: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.to_var(var))
    }

    /// First outgoing edge with the given role.
    pub fn child(&self, var: &str, role: &str) -> Option<&Edge> {
        self.edges.iter().find(|e| e.source == var && e.role == role)
    }

    pub fn has_polarity(&self, var: &str) -> bool {
        self.outgoing(var)
            .any(|e| e.role == "polarity" && e.target.as_const().is_some_and(Constant::is_negative))
    }

    /// Sorted edge list, used for order-insensitive comparison.
    pub fn edge_multiset(&self) -> Vec<&Edge> {
        let mut edges: Vec<&Edge> = self.edges.iter().collect();
        edges.sort();
        edges
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if !self.nodes.contains_key(&self.top) {
            return Err(GraphError::MissingTop(self.top.clone()));
        }
        for (var, concept) in &self.nodes {
            if concept.is_empty() {
                return Err(GraphError::EmptyConcept(var.clone()));
            }
        }
        for edge in &self.edges {
            if !self.nodes.contains_key(&edge.source) {
                return Err(GraphError::UnknownSource {
                    source_var: edge.source.clone(),
                    role: edge.role.clone(),
                });
            }
            match &edge.target {
                EdgeTarget::Var(t) if !self.nodes.contains_key(t) => {
                    return Err(GraphError::UnknownTarget {
                        source_var: edge.source.clone(),
                        role: edge.role.clone(),
                        target: t.clone(),
                    })
                }
                EdgeTarget::Const(c) if edge.role == "polarity" && !c.is_negative() => {
                    return Err(GraphError::BadPolarity(edge.source.clone()))
                }
                EdgeTarget::Var(_) if edge.role == "polarity" => {
                    return Err(GraphError::BadPolarity(edge.source.clone()))
                }
                _ => {}
            }
        }
        match self.find_cycle() {
            Some(var) => Err(GraphError::Cycle(var)),
            None => Ok(()),
        }
    }

    /// Returns a variable on a directed cycle, if any.
    pub fn find_cycle(&self) -> Option<String> {
        let index: HashMap<&str, usize> = self
            .nodes
            .keys()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        let mut indegree = vec![0usize; self.nodes.len()];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for edge in &self.edges {
            if let (Some(&s), Some(t)) = (
                index.get(edge.source.as_str()),
                edge.target.as_var().and_then(|t| index.get(t)),
            ) {
                children[s].push(*t);
                indegree[*t] += 1;
            }
        }
        let mut stack: Vec<usize> = (0..indegree.len()).filter(|&i| indegree[i] == 0).collect();
        let mut seen = 0;
        while let Some(n) = stack.pop() {
            seen += 1;
            for &c in &children[n] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    stack.push(c);
                }
            }
        }
        if seen == self.nodes.len() {
            None
        } else {
            indegree
                .iter()
                .position(|&d| d > 0)
                .map(|i| self.nodes.get_index(i).unwrap().0.clone())
        }
    }

    /// Variables reachable from `start` along forward edges.
    pub fn forward_reachable(&self, start: &str) -> HashSet<String> {
        let mut seen = HashSet::new();
        let mut stack = vec![start.to_string()];
        while let Some(v) = stack.pop() {
            if !seen.insert(v.clone()) {
                continue;
            }
            for e in self.outgoing(&v) {
                if let Some(t) = e.target.as_var() {
                    stack.push(t.to_string());
                }
            }
        }
        seen
    }

    /// Variables connected to the top when edge direction is ignored.
    pub fn connected_to_top(&self) -> HashSet<String> {
        let mut seen = HashSet::new();
        let mut stack = vec![self.top.clone()];
        while let Some(v) = stack.pop() {
            if !seen.insert(v.clone()) {
                continue;
            }
            for e in &self.edges {
                match e.target.as_var() {
                    Some(t) if e.source == v => stack.push(t.to_string()),
                    Some(t) if t == v => stack.push(e.source.clone()),
                    _ => {}
                }
            }
        }
        seen
    }

    /// A variable name for a new node: the concept's first letter, then
    /// that letter with the smallest free numeric suffix starting at 2.
    pub fn fresh_variable(&self, concept: &str) -> String {
        let prefix = concept
            .chars()
            .find(|c| c.is_ascii_alphabetic())
            .map(|c| c.to_ascii_lowercase())
            .unwrap_or('x');
        let base = prefix.to_string();
        if !self.nodes.contains_key(&base) {
            return base;
        }
        (2..)
            .map(|n| format!("{prefix}{n}"))
            .find(|v| !self.nodes.contains_key(v))
            .unwrap()
    }

    /// Adds a node under a fresh variable and returns the variable.
    pub fn add_node(&mut self, concept: impl Into<String>) -> String {
        let concept = concept.into();
        let var = self.fresh_variable(&concept);
        self.nodes.insert(var.clone(), concept);
        var
    }

    pub(crate) fn set_concept(&mut self, var: &str, concept: impl Into<String>) {
        if let Some(c) = self.nodes.get_mut(var) {
            *c = concept.into();
        }
    }

    pub(crate) fn set_top(&mut self, var: impl Into<String>) {
        self.top = var.into();
    }

    pub(crate) fn edges_mut(&mut self) -> &mut Vec<Edge> {
        &mut self.edges
    }

    /// Drops a node together with every edge touching it.
    pub(crate) fn remove_node(&mut self, var: &str) {
        self.nodes.shift_remove(var);
        self.edges.retain(|e| e.source != var && !e.to_var(var));
    }

    /// Drops every node not connected to the top.
    pub(crate) fn prune_disconnected(&mut self) {
        let keep = self.connected_to_top();
        let dropped: Vec<String> = self
            .nodes
            .keys()
            .filter(|v| !keep.contains(*v))
            .cloned()
            .collect();
        for var in dropped {
            self.remove_node(&var);
        }
    }
}

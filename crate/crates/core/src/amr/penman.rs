//! PENMAN reading and writing.
//!
//! Supported grammar:
//!
//! ```text
//! node     := '(' VAR '/' CONCEPT relation* ')'
//! relation := ':' ROLE (node | VAR | constant)
//! constant := '"' chars '"' | number | symbol
//! ```
//!
//! Lines of the form `# ::key value` before a graph fill its metadata; other
//! `#` lines are comments. Alignment markup and wiki links are not supported.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use indexmap::IndexMap;
use regex::Regex;
use std::sync::OnceLock;
use thiserror::Error;

use super::graph::{invert_role, normalize_role, AmrGraph, Constant, Edge, EdgeTarget, GraphError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PenmanError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("variable `{var}` defined twice (second definition at {line}:{column})")]
    DuplicateVariable {
        var: String,
        line: usize,
        column: usize,
    },
    #[error("undefined variable `{var}` at {line}:{column}")]
    UndefinedVariable {
        var: String,
        line: usize,
        column: usize,
    },
    #[error("invalid graph: {0}")]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Slash,
    Role(String),
    Str(String),
    Sym(String),
    Meta(Vec<(String, String)>),
}

struct Lexer<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn position(&self, offset: usize) -> (usize, usize) {
        let before = &self.text[..offset];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        (line, column)
    }

    fn syntax(&self, offset: usize, message: impl Into<String>) -> PenmanError {
        let (line, column) = self.position(offset);
        PenmanError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn tokens(mut self) -> Result<(Vec<(Tok, usize)>, Self), PenmanError> {
        let mut out = Vec::new();
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() {
            let start = self.pos;
            let c = self.text[start..].chars().next().unwrap();
            match c {
                c if c.is_whitespace() => self.pos += c.len_utf8(),
                '#' => {
                    let end = self.text[start..].find('\n').map_or(bytes.len(), |i| start + i);
                    let line = &self.text[start..end];
                    if let Some(pairs) = parse_metadata(line) {
                        out.push((Tok::Meta(pairs), start));
                    }
                    self.pos = end;
                }
                '(' => {
                    out.push((Tok::Open, start));
                    self.pos += 1;
                }
                ')' => {
                    out.push((Tok::Close, start));
                    self.pos += 1;
                }
                '/' => {
                    out.push((Tok::Slash, start));
                    self.pos += 1;
                }
                '"' => {
                    let mut value = String::new();
                    let mut chars = self.text[start + 1..].char_indices();
                    let mut closed = None;
                    while let Some((i, ch)) = chars.next() {
                        match ch {
                            '\\' => match chars.next() {
                                Some((_, esc)) => value.push(esc),
                                None => break,
                            },
                            '"' => {
                                closed = Some(start + 1 + i + 1);
                                break;
                            }
                            _ => value.push(ch),
                        }
                    }
                    let Some(end) = closed else {
                        return Err(self.syntax(start, "unterminated string"));
                    };
                    out.push((Tok::Str(value), start));
                    self.pos = end;
                }
                ':' => {
                    let end = self.symbol_end(start + 1);
                    if end == start + 1 {
                        return Err(self.syntax(start, "empty role"));
                    }
                    out.push((Tok::Role(self.text[start + 1..end].to_string()), start));
                    self.pos = end;
                }
                _ => {
                    let end = self.symbol_end(start);
                    out.push((Tok::Sym(self.text[start..end].to_string()), start));
                    self.pos = end;
                }
            }
        }
        Ok((out, self))
    }

    fn symbol_end(&self, from: usize) -> usize {
        self.text[from..]
            .char_indices()
            .find(|(_, c)| c.is_whitespace() || matches!(c, '(' | ')' | '/' | '"'))
            .map_or(self.text.len(), |(i, _)| from + i)
    }
}

fn parse_metadata(line: &str) -> Option<Vec<(String, String)>> {
    let rest = line.strip_prefix('#')?.trim_start();
    let rest = rest.strip_prefix("::")?;
    let mut pairs = Vec::new();
    for chunk in rest.split(" ::") {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        let (key, value) = match chunk.split_once(char::is_whitespace) {
            Some((k, v)) => (k, v.trim()),
            None => (chunk, ""),
        };
        pairs.push((key.to_string(), value.to_string()));
    }
    Some(pairs)
}

fn variable_shape() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[a-z][0-9]*$").unwrap())
}

enum RawTarget {
    Node(String),
    Str(String),
    Sym(String, usize),
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    toks: Vec<(Tok, usize)>,
    i: usize,
}

struct RawGraph {
    top: String,
    nodes: IndexMap<String, String>,
    edges: Vec<(String, String, RawTarget)>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks
            .get(self.i)
            .map_or(self.lexer.text.len(), |(_, o)| *o)
    }

    fn next(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.i).cloned();
        self.i += 1;
        t
    }

    fn expect_sym(&mut self, what: &str) -> Result<(String, usize), PenmanError> {
        let at = self.offset();
        match self.next() {
            Some((Tok::Sym(s), o)) => Ok((s, o)),
            _ => Err(self.lexer.syntax(at, format!("expected {what}"))),
        }
    }

    fn node(&mut self, raw: &mut RawGraph) -> Result<String, PenmanError> {
        let at = self.offset();
        if !matches!(self.next(), Some((Tok::Open, _))) {
            return Err(self.lexer.syntax(at, "expected `(`"));
        }
        let (var, var_at) = self.expect_sym("variable")?;
        let at = self.offset();
        if !matches!(self.next(), Some((Tok::Slash, _))) {
            return Err(self.lexer.syntax(at, "expected `/` after variable"));
        }
        let (concept, _) = self.expect_sym("concept")?;
        if raw.nodes.contains_key(&var) {
            let (line, column) = self.lexer.position(var_at);
            return Err(PenmanError::DuplicateVariable { var, line, column });
        }
        raw.nodes.insert(var.clone(), concept);
        loop {
            let at = self.offset();
            match self.next() {
                Some((Tok::Close, _)) => return Ok(var),
                Some((Tok::Role(role), _)) => {
                    let slot = raw.edges.len();
                    raw.edges
                        .push((var.clone(), role, RawTarget::Str(String::new())));
                    let at = self.offset();
                    let target = match self.peek() {
                        Some(Tok::Open) => RawTarget::Node(self.node(raw)?),
                        Some(Tok::Str(_)) => match self.next() {
                            Some((Tok::Str(s), _)) => RawTarget::Str(s),
                            _ => unreachable!(),
                        },
                        Some(Tok::Sym(_)) => match self.next() {
                            Some((Tok::Sym(s), o)) => RawTarget::Sym(s, o),
                            _ => unreachable!(),
                        },
                        _ => return Err(self.lexer.syntax(at, "expected relation target")),
                    };
                    raw.edges[slot].2 = target;
                }
                None => return Err(self.lexer.syntax(at, "unexpected end of input, missing `)`")),
                Some(_) => return Err(self.lexer.syntax(at, "expected role or `)`")),
            }
        }
    }

    fn finish(&self, raw: RawGraph) -> Result<AmrGraph, PenmanError> {
        let mut edges = Vec::with_capacity(raw.edges.len());
        for (source, role, target) in raw.edges {
            let target = match target {
                RawTarget::Node(v) => EdgeTarget::Var(v),
                RawTarget::Str(s) => EdgeTarget::Const(Constant::Str(s)),
                RawTarget::Sym(s, _) if raw.nodes.contains_key(&s) => EdgeTarget::Var(s),
                RawTarget::Sym(s, o) if variable_shape().is_match(&s) => {
                    let (line, column) = self.lexer.position(o);
                    return Err(PenmanError::UndefinedVariable { var: s, line, column });
                }
                RawTarget::Sym(s, _) => EdgeTarget::Const(Constant::from_bare(&s)),
            };
            edges.push(Edge { source, role, target });
        }
        Ok(AmrGraph::new(raw.top, raw.nodes, edges)?)
    }
}

/// Parses every graph in a PENMAN document.
pub fn parse_penman_many(text: &str) -> Result<Vec<AmrGraph>, PenmanError> {
    let (toks, lexer) = Lexer { text, pos: 0 }.tokens()?;
    let mut parser = Parser { lexer, toks, i: 0 };
    let mut graphs = Vec::new();
    let mut metadata = IndexMap::new();
    while let Some(tok) = parser.peek() {
        match tok {
            Tok::Meta(_) => {
                if let Some((Tok::Meta(pairs), _)) = parser.next() {
                    metadata.extend(pairs);
                }
            }
            Tok::Open => {
                let mut raw = RawGraph {
                    top: String::new(),
                    nodes: IndexMap::new(),
                    edges: Vec::new(),
                };
                raw.top = parser.node(&mut raw)?;
                let graph = parser.finish(raw)?;
                graphs.push(graph.with_metadata(std::mem::take(&mut metadata)));
            }
            _ => {
                let at = parser.offset();
                return Err(parser.lexer.syntax(at, "expected `(` to start a graph"));
            }
        }
    }
    Ok(graphs)
}

/// Parses exactly one graph.
pub fn parse_penman(text: &str) -> Result<AmrGraph, PenmanError> {
    let mut graphs = parse_penman_many(text)?;
    match graphs.len() {
        1 => Ok(graphs.pop().unwrap()),
        0 => Err(PenmanError::Syntax {
            line: 1,
            column: 1,
            message: "no graph found".into(),
        }),
        n => Err(PenmanError::Syntax {
            line: 1,
            column: 1,
            message: format!("expected a single graph, found {n}"),
        }),
    }
}

/// Tree layout of a graph as it is written out.
#[derive(Debug, Clone)]
pub(crate) struct LayoutNode {
    pub var: String,
    pub items: Vec<(String, LayoutTarget)>,
}

#[derive(Debug, Clone)]
pub(crate) enum LayoutTarget {
    Node(LayoutNode),
    Var(String),
    Const(Constant),
}

struct LayoutBuilder<'g> {
    graph: &'g AmrGraph,
    incident: HashMap<&'g str, Vec<usize>>,
    reachable: HashSet<String>,
    emitted: Vec<bool>,
    defined: HashSet<String>,
    order: Vec<String>,
}

impl<'g> LayoutBuilder<'g> {
    fn new(graph: &'g AmrGraph) -> Self {
        let mut incident: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, e) in graph.edges().iter().enumerate() {
            incident.entry(e.source.as_str()).or_default().push(i);
            if let Some(t) = e.target.as_var() {
                if t != e.source {
                    incident.entry(t).or_default().push(i);
                }
            }
        }
        LayoutBuilder {
            graph,
            incident,
            reachable: graph.forward_reachable(graph.top()),
            emitted: vec![false; graph.edges().len()],
            defined: HashSet::new(),
            order: Vec::new(),
        }
    }

    fn visit(&mut self, var: &str) -> LayoutNode {
        self.defined.insert(var.to_string());
        self.order.push(var.to_string());
        let mut items = Vec::new();
        let incident = self.incident.get(var).cloned().unwrap_or_default();
        for ei in incident {
            if self.emitted[ei] {
                continue;
            }
            let edge = &self.graph.edges()[ei];
            if edge.source == var {
                self.emitted[ei] = true;
                let target = match &edge.target {
                    EdgeTarget::Const(c) => LayoutTarget::Const(c.clone()),
                    EdgeTarget::Var(t) if self.defined.contains(t) => LayoutTarget::Var(t.clone()),
                    EdgeTarget::Var(t) => {
                        let t = t.clone();
                        LayoutTarget::Node(self.visit(&t))
                    }
                };
                items.push((edge.role.clone(), target));
            } else {
                // Incoming edge: the source writes it, unless the source can
                // only be reached through this inverse.
                let source = edge.source.clone();
                if self.defined.contains(&source) || self.reachable.contains(&source) {
                    continue;
                }
                self.emitted[ei] = true;
                let role = invert_role(&edge.role);
                items.push((role, LayoutTarget::Node(self.visit(&source))));
            }
        }
        LayoutNode {
            var: var.to_string(),
            items,
        }
    }
}

/// Lays out the graph depth-first from the top. Returns the layout and any
/// nodes that could not be placed.
pub(crate) fn layout(graph: &AmrGraph) -> (LayoutNode, Vec<String>, Vec<String>) {
    let mut builder = LayoutBuilder::new(graph);
    let root = builder.visit(graph.top());
    let missing = graph
        .nodes()
        .map(|(v, _)| v)
        .filter(|v| !builder.defined.contains(*v))
        .map(str::to_string)
        .collect();
    (root, builder.order, missing)
}

/// Variables in order of their definition in the canonical serialization,
/// followed by any nodes disconnected from the top in insertion order.
pub fn canonical_order(graph: &AmrGraph) -> Vec<String> {
    let (_, mut order, missing) = layout(graph);
    order.extend(missing);
    order
}

fn render(graph: &AmrGraph, node: &LayoutNode, indent: Option<usize>, out: &mut String) {
    let concept = graph.concept(&node.var).unwrap_or_default();
    let _ = write!(out, "({} / {}", node.var, concept);
    for (role, target) in &node.items {
        match indent {
            Some(depth) => {
                out.push('\n');
                out.extend(std::iter::repeat_n(' ', (depth + 1) * 4));
            }
            None => out.push(' '),
        }
        let _ = write!(out, ":{role} ");
        match target {
            LayoutTarget::Node(child) => render(graph, child, indent.map(|d| d + 1), out),
            LayoutTarget::Var(v) => out.push_str(v),
            LayoutTarget::Const(c) => {
                let _ = write!(out, "{c}");
            }
        }
    }
    out.push(')');
}

fn serialize_with(graph: &AmrGraph, pretty: bool) -> Result<String, GraphError> {
    let (root, _, missing) = layout(graph);
    if let Some(var) = missing.into_iter().next() {
        return Err(GraphError::Unreachable(var));
    }
    let mut out = String::new();
    for (key, value) in graph.metadata() {
        if value.is_empty() {
            let _ = writeln!(out, "# ::{key}");
        } else {
            let _ = writeln!(out, "# ::{key} {value}");
        }
    }
    render(graph, &root, pretty.then_some(0), &mut out);
    Ok(out)
}

/// Canonical single-line serialization, preceded by metadata lines.
pub fn serialize_penman(graph: &AmrGraph) -> Result<String, GraphError> {
    serialize_with(graph, false)
}

/// Indented serialization; parses to the same graph as [`serialize_penman`].
pub fn serialize_penman_pretty(graph: &AmrGraph) -> Result<String, GraphError> {
    serialize_with(graph, true)
}

fn linearize_into(graph: &AmrGraph, node: &LayoutNode, out: &mut Vec<String>) {
    out.push(crate::text::strip_sense(graph.concept(&node.var).unwrap_or_default()).to_string());
    for (role, target) in &node.items {
        match target {
            LayoutTarget::Node(child) => linearize_into(graph, child, out),
            LayoutTarget::Var(_) => {}
            LayoutTarget::Const(c) if role.starts_with("op") => out.push(c.text().to_string()),
            LayoutTarget::Const(c) => out.push(format!("{role}:{}", c.text())),
        }
    }
}

/// Space-separated depth-first sequence of concepts (without sense tags)
/// and constants, in serialization order. Name parts (`:opN` strings) appear bare; other
/// constants appear as `role:value`. Re-entrant references are skipped.
pub fn linearize(graph: &AmrGraph) -> String {
    let (root, _, _) = layout(graph);
    let mut out = Vec::new();
    linearize_into(graph, &root, &mut out);
    out.join(" ")
}

/// True when `role` is written in inverse form.
pub fn is_inverse_role(role: &str) -> bool {
    normalize_role(role).1
}

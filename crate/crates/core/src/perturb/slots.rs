//! Replaceable values in a graph (names, quantities, locations, times,
//! dates) and the pools of same-role values they are swapped with.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::amr::{is_frame, AmrGraph, Constant, Edge, EdgeTarget};
use crate::text::strip_sense;

use super::site::{ErrorFamily, SiteTarget};

const DATE_ATTRIBUTES: &[&str] = &[
    "year", "month", "day", "decade", "century", "era", "quarter", "time",
];
pub(crate) const TEMPORAL_CONCEPTS: &[&str] = &["before", "after", "now"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolRole {
    Name,
    Quant,
    Location,
    Time,
    Date,
}

impl PoolRole {
    pub const ALL: [PoolRole; 5] = [
        PoolRole::Name,
        PoolRole::Quant,
        PoolRole::Location,
        PoolRole::Time,
        PoolRole::Date,
    ];

    /// The family a same-document substitution of this role belongs to.
    pub fn family(self) -> ErrorFamily {
        match self {
            PoolRole::Name | PoolRole::Quant => ErrorFamily::Entity,
            _ => ErrorFamily::Circumstance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolValue {
    /// The `:opN` strings of a `name` node.
    Name(Vec<String>),
    Constant(Constant),
    Concept(String),
    DateAttr { attr: String, value: Constant },
}

impl PoolValue {
    pub fn name(text: &str) -> Self {
        PoolValue::Name(text.split_whitespace().map(str::to_string).collect())
    }

    /// Whether `other` can stand in for `self` in the same slot.
    pub fn compatible(&self, other: &PoolValue) -> bool {
        match (self, other) {
            (PoolValue::Name(_), PoolValue::Name(_))
            | (PoolValue::Constant(_), PoolValue::Constant(_))
            | (PoolValue::Concept(_), PoolValue::Concept(_)) => true,
            (PoolValue::DateAttr { attr: a, .. }, PoolValue::DateAttr { attr: b, .. }) => a == b,
            _ => false,
        }
    }

    /// Surface text used for vocabulary checks.
    pub fn surface(&self) -> String {
        match self {
            PoolValue::Name(parts) => parts.join(" "),
            PoolValue::Constant(c) | PoolValue::DateAttr { value: c, .. } => c.text().to_string(),
            PoolValue::Concept(c) => strip_sense(c).to_string(),
        }
    }
}

impl fmt::Display for PoolValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PoolValue::Name(parts) => write!(f, "\"{}\"", parts.join(" ")),
            PoolValue::Constant(c) => write!(f, "{c}"),
            PoolValue::Concept(c) => f.write_str(c),
            PoolValue::DateAttr { attr, value } => write!(f, "{attr} {value}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueSlot {
    pub role: PoolRole,
    pub target: SiteTarget,
    pub current: PoolValue,
}

fn op_index(role: &str) -> Option<u32> {
    role.strip_prefix("op")?.parse().ok()
}

fn name_parts(graph: &AmrGraph, var: &str) -> Vec<String> {
    let mut ops: Vec<(u32, String)> = graph
        .outgoing(var)
        .filter_map(|e| Some((op_index(&e.role)?, e.target.as_const()?.text().to_string())))
        .collect();
    ops.sort_by_key(|(i, _)| *i);
    ops.into_iter().map(|(_, s)| s).collect()
}

fn under_role(graph: &AmrGraph, var: &str, role: &str) -> bool {
    graph.incoming(var).any(|e| e.role == role)
}

/// Every replaceable value in the graph, in canonical node order.
pub fn value_slots(graph: &AmrGraph) -> Vec<ValueSlot> {
    let mut slots = Vec::new();
    for var in crate::amr::canonical_order(graph) {
        let concept = graph.concept(&var).unwrap_or_default();
        if concept == "name" {
            let owners: Vec<&Edge> = graph.incoming(&var).filter(|e| e.role == "name").collect();
            let parts = name_parts(graph, &var);
            if let (Some(owner), false) = (owners.first(), parts.is_empty()) {
                let role = if under_role(graph, &owner.source, "location") {
                    PoolRole::Location
                } else {
                    PoolRole::Name
                };
                slots.push(ValueSlot {
                    role,
                    target: SiteTarget::node(var.clone()),
                    current: PoolValue::Name(parts),
                });
            }
        }
        let mut seen_roles = BTreeSet::new();
        for edge in graph.outgoing(&var) {
            let Some(value) = edge.target.as_const() else {
                continue;
            };
            if !seen_roles.insert(edge.role.as_str()) {
                continue;
            }
            if edge.role == "quant" {
                slots.push(ValueSlot {
                    role: PoolRole::Quant,
                    target: SiteTarget::edge(var.clone(), "quant"),
                    current: PoolValue::Constant(value.clone()),
                });
            } else if concept == "date-entity" && DATE_ATTRIBUTES.contains(&edge.role.as_str()) {
                slots.push(ValueSlot {
                    role: PoolRole::Date,
                    target: SiteTarget::edge(var.clone(), edge.role.clone()),
                    current: PoolValue::DateAttr {
                        attr: edge.role.clone(),
                        value: value.clone(),
                    },
                });
            }
        }
        let plain = !is_frame(concept)
            && concept != "date-entity"
            && concept != "name"
            && !TEMPORAL_CONCEPTS.contains(&concept)
            && graph.child(&var, "name").is_none();
        if plain && under_role(graph, &var, "location") {
            slots.push(ValueSlot {
                role: PoolRole::Location,
                target: SiteTarget::node(var.clone()),
                current: PoolValue::Concept(concept.to_string()),
            });
        } else if plain && under_role(graph, &var, "time") {
            slots.push(ValueSlot {
                role: PoolRole::Time,
                target: SiteTarget::node(var.clone()),
                current: PoolValue::Concept(concept.to_string()),
            });
        }
    }
    slots
}

/// Writes `value` into `slot`. The caller checks compatibility.
pub(crate) fn write_slot(graph: &mut AmrGraph, slot: &ValueSlot, value: &PoolValue) {
    match (&slot.target, value) {
        (SiteTarget::Node { var }, PoolValue::Name(parts)) => {
            let edges = graph.edges_mut();
            let first = edges
                .iter()
                .position(|e| &e.source == var && op_index(&e.role).is_some() && e.target.as_const().is_some());
            edges.retain(|e| !(&e.source == var && op_index(&e.role).is_some() && e.target.as_const().is_some()));
            let at = first.unwrap_or(edges.len()).min(edges.len());
            let new_ops = parts.iter().enumerate().map(|(i, p)| {
                Edge::new(var.clone(), format!("op{}", i + 1), EdgeTarget::Const(Constant::Str(p.clone())))
            });
            edges.splice(at..at, new_ops);
        }
        (SiteTarget::Node { var }, PoolValue::Concept(c)) => graph.set_concept(var, c.clone()),
        (SiteTarget::Edge { source, role }, PoolValue::Constant(c))
        | (SiteTarget::Edge { source, role }, PoolValue::DateAttr { value: c, .. }) => {
            if let Some(e) = graph
                .edges_mut()
                .iter_mut()
                .find(|e| &e.source == source && &e.role == role)
            {
                e.target = EdgeTarget::Const(c.clone());
            }
        }
        _ => {}
    }
}

/// Deduplicated same-role values, sorted for determinism.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValuePools {
    pools: BTreeMap<PoolRole, BTreeSet<PoolValue>>,
}

impl ValuePools {
    pub fn harvest<'a>(graphs: impl IntoIterator<Item = &'a AmrGraph>) -> Self {
        let mut pools = ValuePools::default();
        for graph in graphs {
            for slot in value_slots(graph) {
                pools.insert(slot.role, slot.current);
            }
        }
        pools
    }

    pub fn insert(&mut self, role: PoolRole, value: PoolValue) {
        self.pools.entry(role).or_default().insert(value);
    }

    pub fn extend(&mut self, other: &ValuePools) {
        for (role, values) in &other.pools {
            for v in values {
                self.insert(*role, v.clone());
            }
        }
    }

    pub fn get(&self, role: PoolRole) -> impl Iterator<Item = &PoolValue> {
        self.pools.get(&role).into_iter().flatten()
    }

    pub fn contains(&self, role: PoolRole, value: &PoolValue) -> bool {
        self.pools.get(&role).is_some_and(|s| s.contains(value))
    }

    pub fn is_empty(&self) -> bool {
        self.pools.values().all(BTreeSet::is_empty)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amr::parse_penman;

    #[test]
    fn finds_each_slot_kind() {
        let g = parse_penman(
            r#"(a / arrive-01
                 :ARG1 (p / person :name (n / name :op1 "Anna" :op2 "Nowak"))
                 :location (c / city :name (n2 / name :op1 "Leeds"))
                 :time (d / date-entity :year 2015 :month 3)
                 :ARG4 (s / station :location (t / there))
                 :manner (q / quick :quant 5)
                 :duration (w / week :time (m / morning)))"#,
        )
        .unwrap();
        let slots = value_slots(&g);
        let summary: Vec<(PoolRole, String)> =
            slots.iter().map(|s| (s.role, s.current.to_string())).collect();
        assert_eq!(
            summary,
            vec![
                (PoolRole::Name, "\"Anna Nowak\"".to_string()),
                (PoolRole::Location, "\"Leeds\"".to_string()),
                (PoolRole::Date, "year 2015".to_string()),
                (PoolRole::Date, "month 3".to_string()),
                (PoolRole::Location, "there".to_string()),
                (PoolRole::Quant, "5".to_string()),
                (PoolRole::Time, "morning".to_string()),
            ]
        );
    }

    #[test]
    fn name_rewrite_keeps_position() {
        let g = parse_penman(r#"(p / person :name (n / name :op1 "Anna" :op2 "Nowak") :age 30)"#).unwrap();
        let slot = &value_slots(&g)[0];
        let mut h = g.clone();
        write_slot(&mut h, slot, &PoolValue::name("Maria"));
        assert_eq!(
            crate::amr::serialize_penman(&h).unwrap(),
            r#"(p / person :name (n / name :op1 "Maria") :age 30)"#
        );
    }

    #[test]
    fn pools_deduplicate() {
        let a = parse_penman("(t / they :quant 5)").unwrap();
        let b = parse_penman("(t / thing :quant 5)").unwrap();
        let pools = ValuePools::harvest([&a, &b]);
        assert_eq!(pools.get(PoolRole::Quant).count(), 1);
        assert!(pools.get(PoolRole::Name).next().is_none());
    }

    #[test]
    fn compatibility() {
        let year = |v: &str| PoolValue::DateAttr {
            attr: "year".into(),
            value: Constant::from_bare(v),
        };
        let month = PoolValue::DateAttr {
            attr: "month".into(),
            value: Constant::from_bare("3"),
        };
        assert!(year("2015").compatible(&year("2020")));
        assert!(!year("2015").compatible(&month));
        assert!(!PoolValue::name("Leeds").compatible(&PoolValue::Concept("park".into())));
    }
}

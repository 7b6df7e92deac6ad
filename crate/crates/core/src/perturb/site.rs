use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::slots::PoolValue;

/// The five kinds of factual inconsistency the engine can inject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorFamily {
    Predicate,
    Entity,
    Circumstance,
    DiscourseLink,
    OutOfArticle,
}

impl ErrorFamily {
    pub const ALL: [ErrorFamily; 5] = [
        ErrorFamily::Predicate,
        ErrorFamily::Entity,
        ErrorFamily::Circumstance,
        ErrorFamily::DiscourseLink,
        ErrorFamily::OutOfArticle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ErrorFamily::Predicate => "predicate",
            ErrorFamily::Entity => "entity",
            ErrorFamily::Circumstance => "circumstance",
            ErrorFamily::DiscourseLink => "discourse-link",
            ErrorFamily::OutOfArticle => "out-of-article",
        }
    }
}

impl fmt::Display for ErrorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "predicate" => Ok(ErrorFamily::Predicate),
            "entity" => Ok(ErrorFamily::Entity),
            "circumstance" => Ok(ErrorFamily::Circumstance),
            "discourse-link" | "discourse" => Ok(ErrorFamily::DiscourseLink),
            "out-of-article" | "ooa" => Ok(ErrorFamily::OutOfArticle),
            other => Err(format!(
                "unknown error family `{other}` (expected predicate, entity, circumstance, discourse-link or out-of-article)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    PolarityAdd,
    PolarityRemove,
    Antonym,
    AgentPatientSwap,
    EntitySubstitute,
    ModalityStrengthen,
    CircumstanceSubstitute,
    TemporalFlip,
    CausalityReverse,
    ForeignSubstitute,
}

impl Variant {
    pub fn family(self) -> ErrorFamily {
        use Variant::*;
        match self {
            PolarityAdd | PolarityRemove | Antonym => ErrorFamily::Predicate,
            AgentPatientSwap | EntitySubstitute => ErrorFamily::Entity,
            ModalityStrengthen | CircumstanceSubstitute => ErrorFamily::Circumstance,
            TemporalFlip | CausalityReverse => ErrorFamily::DiscourseLink,
            ForeignSubstitute => ErrorFamily::OutOfArticle,
        }
    }

    /// Whether the edit brings in new content (and so carries a payload).
    pub fn substitutes(self) -> bool {
        use Variant::*;
        !matches!(
            self,
            PolarityAdd | PolarityRemove | AgentPatientSwap | CausalityReverse
        )
    }

    pub fn name(self) -> &'static str {
        use Variant::*;
        match self {
            PolarityAdd => "polarity-add",
            PolarityRemove => "polarity-remove",
            Antonym => "antonym",
            AgentPatientSwap => "agent-patient-swap",
            EntitySubstitute => "entity-substitute",
            ModalityStrengthen => "modality-strengthen",
            CircumstanceSubstitute => "circumstance-substitute",
            TemporalFlip => "temporal-flip",
            CausalityReverse => "causality-reverse",
            ForeignSubstitute => "foreign-substitute",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where an edit lands. Edges are addressed by source and role, which
/// survives re-serialization unlike positional indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SiteTarget {
    Node { var: String },
    Edge { source: String, role: String },
}

impl SiteTarget {
    pub fn node(var: impl Into<String>) -> Self {
        SiteTarget::Node { var: var.into() }
    }

    pub fn edge(source: impl Into<String>, role: impl Into<String>) -> Self {
        SiteTarget::Edge {
            source: source.into(),
            role: role.into(),
        }
    }
}

impl fmt::Display for SiteTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SiteTarget::Node { var } => f.write_str(var),
            SiteTarget::Edge { source, role } => write!(f, "{source}:{role}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Payload {
    Concept(String),
    Value(PoolValue),
    /// Drop a modal wrapper node.
    RemoveWrapper,
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payload::Concept(c) => f.write_str(c),
            Payload::Value(v) => write!(f, "{v}"),
            Payload::RemoveWrapper => f.write_str("<removed>"),
        }
    }
}

/// One applicable edit; applying it yields one negative candidate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PerturbationSite {
    pub variant: Variant,
    pub target: SiteTarget,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Payload>,
}

impl PerturbationSite {
    pub fn new(variant: Variant, target: SiteTarget, payload: Option<Payload>) -> Self {
        PerturbationSite {
            variant,
            target,
            payload,
        }
    }

    pub fn family(&self) -> ErrorFamily {
        self.variant.family()
    }
}

impl fmt::Display for PerturbationSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.variant, self.target)?;
        if let Some(p) = &self.payload {
            write!(f, " -> {p}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_names_round_trip() {
        for family in ErrorFamily::ALL {
            assert_eq!(family.name().parse::<ErrorFamily>().unwrap(), family);
            let json = serde_json::to_string(&family).unwrap();
            assert_eq!(json, format!("\"{}\"", family.name()));
        }
        assert_eq!("discourse".parse::<ErrorFamily>().unwrap(), ErrorFamily::DiscourseLink);
        assert!("coreference".parse::<ErrorFamily>().is_err());
    }

    #[test]
    fn site_display() {
        let site = PerturbationSite::new(
            Variant::Antonym,
            SiteTarget::node("w"),
            Some(Payload::Concept("leisure-01".into())),
        );
        assert_eq!(site.to_string(), "antonym@w -> leisure-01");
        assert_eq!(site.family(), ErrorFamily::Predicate);
    }
}

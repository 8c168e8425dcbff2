//! Ontology and alignment data model.

use std::collections::BTreeMap;
use std::fmt;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};

use crate::error::AlignError;
use crate::prompt::StrategyId;

/// The kind of a named ontology entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityKind {
    Class,
    ObjectProperty,
    DataProperty,
}

impl EntityKind {
    pub fn is_property(self) -> bool {
        !matches!(self, EntityKind::Class)
    }
}

/// A named entity, identified by its IRI fragment inside one ontology.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityId {
    pub ontology: String,
    pub local: String,
    pub kind: EntityKind,
}

impl EntityId {
    pub fn new(ontology: impl Into<String>, local: impl Into<String>, kind: EntityKind) -> Self {
        Self {
            ontology: ontology.into(),
            local: local.into(),
            kind,
        }
    }

    pub fn class(ontology: &str, local: &str) -> Self {
        Self::new(ontology, local, EntityKind::Class)
    }

    pub fn object_property(ontology: &str, local: &str) -> Self {
        Self::new(ontology, local, EntityKind::ObjectProperty)
    }

    pub fn data_property(ontology: &str, local: &str) -> Self {
        Self::new(ontology, local, EntityKind::DataProperty)
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.ontology, self.local)
    }
}

/// Operand of a property signature: a class entity or a plain name
/// (datatype local name, or `Thing` for an undeclared domain/range).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Entity(EntityId),
    Literal(String),
}

impl Term {
    pub fn surface(&self) -> &str {
        match self {
            Term::Entity(e) => &e.local,
            Term::Literal(s) => s,
        }
    }

    pub fn entity(&self) -> Option<&EntityId> {
        match self {
            Term::Entity(e) => Some(e),
            Term::Literal(_) => None,
        }
    }
}

/// Placeholder operand used when a property declares no domain or range.
pub const THING: &str = "Thing";

/// One atomic fact expressible as a triple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Statement {
    SubClass {
        sub: EntityId,
        sup: EntityId,
    },
    PropertySignature {
        property: EntityId,
        domain: Term,
        range: Term,
    },
}

impl Statement {
    pub fn is_subclass(&self) -> bool {
        matches!(self, Statement::SubClass { .. })
    }

    /// Entities mentioned by this statement.
    pub fn entities(&self) -> Vec<&EntityId> {
        match self {
            Statement::SubClass { sub, sup } => vec![sub, sup],
            Statement::PropertySignature {
                property,
                domain,
                range,
            } => std::iter::once(property)
                .chain(domain.entity())
                .chain(range.entity())
                .collect(),
        }
    }
}

/// Counters for constructs the parser does not represent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport {
    /// Anonymous superclasses (restrictions, boolean class expressions).
    pub anonymous_superclasses: usize,
    /// Domain or range given by an anonymous class expression.
    pub anonymous_domain_range: usize,
    /// Other axioms (equivalence, disjointness, inverses, individuals, ...).
    pub other_axioms: usize,
}

impl SkipReport {
    pub fn total(&self) -> usize {
        self.anonymous_superclasses + self.anonymous_domain_range + self.other_axioms
    }
}

/// A parsed ontology restricted to named entities and triple-shaped axioms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ontology {
    pub name: String,
    /// Namespace of the ontology's entities (e.g. `http://cmt#`), when known.
    pub namespace: Option<String>,
    pub entities: IndexSet<EntityId>,
    pub statements: Vec<Statement>,
    pub labels: BTreeMap<EntityId, String>,
    pub skipped: SkipReport,
}

/// Outcome of a failed [`Ontology::resolve_name`] call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResolveError {
    NotFound,
    Ambiguous(EntityId, EntityId),
}

impl Ontology {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            namespace: None,
            entities: IndexSet::new(),
            statements: Vec::new(),
            labels: BTreeMap::new(),
            skipped: SkipReport::default(),
        }
    }

    pub fn add_entity(&mut self, local: &str, kind: EntityKind) -> EntityId {
        let id = EntityId::new(self.name.clone(), local, kind);
        self.entities.insert(id.clone());
        id
    }

    pub fn contains(&self, id: &EntityId) -> bool {
        self.entities.contains(id)
    }

    pub fn classes(&self) -> impl Iterator<Item = &EntityId> {
        self.entities.iter().filter(|e| e.kind == EntityKind::Class)
    }

    pub fn properties(&self) -> impl Iterator<Item = &EntityId> {
        self.entities.iter().filter(|e| e.kind.is_property())
    }

    /// Entities with the given local name, in (Class, ObjectProperty, DataProperty) order.
    pub fn by_local<'a>(&'a self, local: &'a str) -> impl Iterator<Item = &'a EntityId> + 'a {
        [
            EntityKind::Class,
            EntityKind::ObjectProperty,
            EntityKind::DataProperty,
        ]
        .into_iter()
        .filter_map(move |kind| {
            self.entities
                .get(&EntityId::new(self.name.clone(), local, kind))
        })
    }

    /// Check the closure invariant: every entity referenced by a statement is declared.
    pub fn check_closure(&self) -> Result<(), AlignError> {
        for st in &self.statements {
            for e in st.entities() {
                if !self.entities.contains(e) {
                    return Err(AlignError::Invariant(format!(
                        "statement references undeclared entity {e}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Map a surface form (as written by a person or a model) back to an entity.
    ///
    /// Stages, first hit wins: exact local name, case-folded local name,
    /// spaces-to-underscores plus case fold, then label. Two candidates at the
    /// same stage are reported as ambiguous.
    pub fn resolve_name(&self, surface: &str) -> Result<EntityId, ResolveError> {
        let surface = surface.trim();
        if surface.is_empty() {
            return Err(ResolveError::NotFound);
        }
        let folded = surface.to_lowercase();
        let underscored = collapse_ws(&folded).replace(' ', "_");

        let stages: [&dyn Fn(&EntityId) -> bool; 4] = [
            &|e| e.local == surface,
            &|e| e.local.to_lowercase() == folded,
            &|e| e.local.to_lowercase() == underscored,
            &|e| {
                self.labels
                    .get(e)
                    .is_some_and(|l| collapse_ws(&l.to_lowercase()) == collapse_ws(&folded))
            },
        ];
        for stage in stages {
            let mut hits = self.entities.iter().filter(|e| stage(e));
            if let Some(first) = hits.next() {
                return match hits.next() {
                    Some(second) => Err(ResolveError::Ambiguous(first.clone(), second.clone())),
                    None => Ok(first.clone()),
                };
            }
        }
        Err(ResolveError::NotFound)
    }

    /// Direct superclasses of `class` according to the SubClass statements.
    pub fn superclasses<'a>(&'a self, class: &'a EntityId) -> impl Iterator<Item = &'a EntityId> {
        self.statements.iter().filter_map(move |s| match s {
            Statement::SubClass { sub, sup } if sub == class => Some(sup),
            _ => None,
        })
    }

    /// Property signatures declared for `property`.
    pub fn signatures<'a>(&'a self, property: &'a EntityId) -> impl Iterator<Item = (&'a Term, &'a Term)> {
        self.statements.iter().filter_map(move |s| match s {
            Statement::PropertySignature {
                property: p,
                domain,
                range,
            } if p == property => Some((domain, range)),
            _ => None,
        })
    }
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Correspondence relation. Only equivalence is produced or scored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[default]
    #[serde(rename = "=")]
    Equivalence,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        "="
    }
}

/// Where a predicted correspondence came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub strategy: StrategyId,
    pub raw_line: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub source: EntityId,
    pub target: EntityId,
    pub relation: Relation,
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl Correspondence {
    pub fn new(source: EntityId, target: EntityId, confidence: f64) -> Self {
        Self {
            source,
            target,
            relation: Relation::Equivalence,
            confidence: confidence.clamp(0.0, 1.0),
            provenance: None,
        }
    }

    pub fn with_provenance(mut self, strategy: StrategyId, raw_line: impl Into<String>) -> Self {
        self.provenance = Some(Provenance {
            strategy,
            raw_line: raw_line.into(),
        });
        self
    }

    pub fn key(&self) -> (EntityId, EntityId) {
        (self.source.clone(), self.target.clone())
    }
}

/// A set of correspondences between two named ontologies, keyed by (source, target).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub pair: (String, String),
    correspondences: BTreeMap<(EntityId, EntityId), Correspondence>,
}

impl Alignment {
    pub fn new(onto1: impl Into<String>, onto2: impl Into<String>) -> Self {
        Self {
            pair: (onto1.into(), onto2.into()),
            correspondences: BTreeMap::new(),
        }
    }

    /// Insert, keeping the higher confidence on duplicate (source, target).
    pub fn insert(&mut self, c: Correspondence) -> Result<(), AlignError> {
        if c.source.ontology != self.pair.0 || c.target.ontology != self.pair.1 {
            return Err(AlignError::PairMismatch {
                expected: format!("{}-{}", self.pair.0, self.pair.1),
                found: format!("{}-{}", c.source.ontology, c.target.ontology),
            });
        }
        match self.correspondences.entry(c.key()) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                if c.confidence > o.get().confidence {
                    o.insert(c);
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.correspondences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.correspondences.is_empty()
    }

    pub fn contains(&self, source: &EntityId, target: &EntityId) -> bool {
        self.correspondences
            .contains_key(&(source.clone(), target.clone()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Correspondence> {
        self.correspondences.values()
    }

    /// Copy keeping only correspondences with confidence ≥ `min`.
    pub fn filtered(&self, min: f64) -> Alignment {
        Alignment {
            pair: self.pair.clone(),
            correspondences: self
                .correspondences
                .iter()
                .filter(|(_, c)| c.confidence >= min)
                .map(|(k, c)| (k.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn pair_name(&self) -> String {
        format!("{}-{}", self.pair.0, self.pair.1)
    }
}

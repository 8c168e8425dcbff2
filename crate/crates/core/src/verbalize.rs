//! Rendering of statements as `Predicate (Subject, Object)` text lines.

use std::collections::{BTreeMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::model::{EntityId, Ontology, Statement, Term};

/// Surface predicate used for subclass statements.
pub const IS_A: &str = "Is-a";

/// Ordering of statements in a verbalized block.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ordering {
    #[default]
    AsParsed,
    RootFirst,
    ClassesThenProperties,
}

impl std::str::FromStr for Ordering {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "as-parsed" | "asparsed" => Ok(Ordering::AsParsed),
            "root-first" | "rootfirst" => Ok(Ordering::RootFirst),
            "classes-then-properties" | "classesthenproperties" => {
                Ok(Ordering::ClassesThenProperties)
            }
            other => Err(format!("unknown ordering `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerbalizedLine<'a> {
    pub text: String,
    pub source: &'a Statement,
}

/// Underscores become spaces; everything else is kept as is.
pub fn humanize(local: &str) -> String {
    local.replace('_', " ")
}

fn clean(name: &str) -> String {
    name.chars()
        .map(|c| if matches!(c, '(' | ')' | ',' | '\n' | '\r') { ' ' } else { c })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn name_of(e: &EntityId, labels: Option<&BTreeMap<EntityId, String>>) -> String {
    let raw = labels
        .and_then(|l| l.get(e))
        .map(String::as_str)
        .unwrap_or(&e.local);
    clean(&humanize(raw))
}

fn term_name(t: &Term, labels: Option<&BTreeMap<EntityId, String>>) -> String {
    match t {
        Term::Entity(e) => name_of(e, labels),
        Term::Literal(s) => clean(&humanize(s)),
    }
}

/// Render one statement. With `labels`, entity labels replace IRI fragments where present.
pub fn verbalize_statement<'a>(
    s: &'a Statement,
    labels: Option<&BTreeMap<EntityId, String>>,
) -> VerbalizedLine<'a> {
    let text = match s {
        Statement::SubClass { sub, sup } => {
            format!("{IS_A} ({}, {})", name_of(sub, labels), name_of(sup, labels))
        }
        Statement::PropertySignature {
            property,
            domain,
            range,
        } => {
            let pred = match labels.and_then(|l| l.get(property)) {
                Some(label) => clean(label),
                None => clean(&property.local),
            };
            format!(
                "{pred} ({}, {})",
                term_name(domain, labels),
                term_name(range, labels)
            )
        }
    };
    VerbalizedLine { text, source: s }
}

fn root_first_order(o: &Ontology) -> Option<Vec<&Statement>> {
    let subs: HashSet<&EntityId> = o
        .statements
        .iter()
        .filter_map(|s| match s {
            Statement::SubClass { sub, .. } => Some(sub),
            _ => None,
        })
        .collect();
    let mut queue: VecDeque<&EntityId> = o.classes().filter(|c| !subs.contains(c)).collect();
    let mut visited: HashSet<&EntityId> = queue.iter().copied().collect();
    let mut out = Vec::new();
    while let Some(class) = queue.pop_front() {
        for s in &o.statements {
            if let Statement::SubClass { sub, sup } = s {
                if sup == class {
                    out.push(s);
                    if visited.insert(sub) {
                        queue.push_back(sub);
                    }
                }
            }
        }
    }
    let total = o.statements.iter().filter(|s| s.is_subclass()).count();
    (out.len() == total).then_some(out)
}

/// Render a whole ontology in the requested order.
pub fn verbalize_ontology(o: &Ontology, order: Ordering) -> Vec<VerbalizedLine<'_>> {
    verbalize_ontology_with(o, order, false)
}

/// Like [`verbalize_ontology`], optionally substituting `rdfs:label` values for fragments.
pub fn verbalize_ontology_with(o: &Ontology, order: Ordering, use_labels: bool) -> Vec<VerbalizedLine<'_>> {
    let labels = use_labels.then_some(&o.labels);
    let props = o.statements.iter().filter(|s| !s.is_subclass());
    let ordered: Vec<&Statement> = match order {
        Ordering::AsParsed => o.statements.iter().collect(),
        Ordering::ClassesThenProperties => o
            .statements
            .iter()
            .filter(|s| s.is_subclass())
            .chain(props)
            .collect(),
        Ordering::RootFirst => match root_first_order(o) {
            Some(classes) => classes.into_iter().chain(props).collect(),
            None => {
                warn!(ontology = %o.name, "subclass cycle detected, keeping parse order");
                o.statements.iter().collect()
            }
        },
    };
    ordered
        .into_iter()
        .map(|s| verbalize_statement(s, labels))
        .collect()
}

/// A line split into its predicate and two operands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleText<'a> {
    pub predicate: &'a str,
    pub subject: &'a str,
    pub object: &'a str,
}

/// Parse `NAME (NAME, NAME)` with optional single spaces. Returns `None` for anything else.
pub fn parse_triple_line(line: &str) -> Option<TripleText<'_>> {
    let line = line.trim();
    let open = line.find('(')?;
    let inner = line[open + 1..].strip_suffix(')')?;
    let predicate = line[..open].trim();
    let (subject, object) = inner.split_once(',')?;
    let (subject, object) = (subject.trim(), object.trim());
    let bad = |s: &str| s.is_empty() || s.contains(['(', ')', ',']);
    if bad(predicate) || bad(subject) || bad(object) {
        return None;
    }
    Some(TripleText {
        predicate,
        subject,
        object,
    })
}

//! Offline stand-in for a chat model: exact string equivalence on humanized names.

use std::collections::BTreeSet;

use crate::prompt::{
    parse_entity_query, OBJECTIVE_ACCURATE, OBJECTIVE_COMPLETE, OBJECTIVE_MAPPING, ONTOLOGY_1,
    ONTOLOGY_2,
};
use crate::verbalize::{humanize, parse_triple_line, IS_A};

/// Operand names that are never treated as entities.
const NON_ENTITY: &[&str] = &[
    "Thing", "Literal", "string", "normalizedString", "boolean", "decimal", "integer", "int",
    "long", "short", "byte", "float", "double", "date", "dateTime", "time", "duration", "gYear",
    "gYearMonth", "anyURI", "nonNegativeInteger", "positiveInteger", "negativeInteger",
    "nonPositiveInteger", "unsignedInt", "unsignedLong", "token", "language", "Name",
];

fn norm(name: &str) -> String {
    humanize(name)
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Names of the two ontologies as they appear in the triple blocks of the prompts.
fn collect_names(conversation: &[&str]) -> [BTreeSet<String>; 2] {
    let mut names: [BTreeSet<String>; 2] = Default::default();
    for message in conversation {
        let mut current = None;
        for line in message.lines() {
            let trimmed = line.trim();
            if trimmed == ONTOLOGY_1 {
                current = Some(0);
                continue;
            }
            if trimmed == ONTOLOGY_2 {
                current = Some(1);
                continue;
            }
            let (Some(idx), Some(t)) = (current, parse_triple_line(trimmed)) else {
                continue;
            };
            let set = &mut names[idx];
            if t.predicate == IS_A {
                set.insert(t.subject.to_string());
                set.insert(t.object.to_string());
            } else {
                set.insert(t.predicate.to_string());
                for operand in [t.subject, t.object] {
                    if !NON_ENTITY.contains(&operand) {
                        set.insert(operand.to_string());
                    }
                }
            }
        }
    }
    names
}

/// Deterministic response to a conversation made of user message texts.
///
/// A per-entity query gets `X = Y` for the first case-folded equal name of
/// ontology 2 (or `X: no match`). A message carrying a matching objective gets
/// one sorted `X = Y` line per equal-name pair. Anything else gets an empty reply.
pub fn mock_respond(conversation: &[&str]) -> String {
    let Some(last) = conversation.last() else {
        return String::new();
    };
    let [first, second] = collect_names(conversation);

    if let Some(query) = parse_entity_query(last) {
        let key = norm(query);
        return match second.iter().find(|y| norm(y) == key) {
            Some(y) => format!("{query} = {y}"),
            None => format!("{query}: no match"),
        };
    }

    let asks_matching = [OBJECTIVE_MAPPING, OBJECTIVE_COMPLETE, OBJECTIVE_ACCURATE]
        .iter()
        .any(|o| last.contains(o));
    if !asks_matching {
        return String::new();
    }
    let mut lines = BTreeSet::new();
    for x in &first {
        let key = norm(x);
        for y in second.iter().filter(|y| norm(y) == key) {
            lines.insert(format!("{x} = {y}"));
        }
    }
    lines.into_iter().collect::<Vec<_>>().join("\n")
}

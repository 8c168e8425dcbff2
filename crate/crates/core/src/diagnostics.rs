//! Bucketing of false positives into recurring error patterns.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::eval::check_pair;
use crate::model::{Alignment, Correspondence, EntityId, Ontology, Term};
use crate::verbalize::humanize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    /// Property matched to (what looks like) the inverse of its counterpart.
    InversePropertySuspect,
    /// Several related classes of one side matched to a single class of the other.
    SubclassFanOut,
    /// Match proposed with hedging language (confidence below 1).
    Hedged,
    Other,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::InversePropertySuspect,
        Category::SubclassFanOut,
        Category::Hedged,
        Category::Other,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub pair: (String, String),
    pub buckets: BTreeMap<Category, Vec<Correspondence>>,
}

impl DiagnosticsReport {
    pub fn count(&self, category: Category) -> usize {
        self.buckets.get(&category).map_or(0, Vec::len)
    }

    pub fn total(&self) -> usize {
        self.buckets.values().map(Vec::len).sum()
    }

    pub fn category_of(&self, source: &EntityId, target: &EntityId) -> Option<Category> {
        self.buckets.iter().find_map(|(cat, cs)| {
            cs.iter()
                .any(|c| &c.source == source && &c.target == target)
                .then_some(*cat)
        })
    }
}

fn norm(name: &str) -> String {
    humanize(name).to_lowercase()
}

/// Reflexive-transitive superclass closure for every class of `o`.
fn ancestors(o: &Ontology) -> HashMap<&EntityId, HashSet<&EntityId>> {
    let mut direct: HashMap<&EntityId, Vec<&EntityId>> = HashMap::new();
    for s in &o.statements {
        if let crate::model::Statement::SubClass { sub, sup } = s {
            direct.entry(sub).or_default().push(sup);
        }
    }
    o.classes()
        .map(|c| {
            let mut seen: HashSet<&EntityId> = HashSet::from([c]);
            let mut stack = vec![c];
            while let Some(x) = stack.pop() {
                for &p in direct.get(x).into_iter().flatten() {
                    if seen.insert(p) {
                        stack.push(p);
                    }
                }
            }
            (c, seen)
        })
        .collect()
}

struct Context<'a> {
    predicted: &'a Alignment,
    reference: &'a Alignment,
    a: &'a Ontology,
    b: &'a Ontology,
    anc_a: HashMap<&'a EntityId, HashSet<&'a EntityId>>,
    anc_b: HashMap<&'a EntityId, HashSet<&'a EntityId>>,
}

impl Context<'_> {
    /// `x` (from a) and `y` (from b) are treated as the same concept.
    fn counterpart(&self, x: &Term, y: &Term) -> bool {
        let (Term::Entity(x), Term::Entity(y)) = (x, y) else {
            return false;
        };
        self.predicted.contains(x, y) || self.reference.contains(x, y) || norm(&x.local) == norm(&y.local)
    }

    fn inverse_suspect(&self, c: &Correspondence) -> bool {
        if !(c.source.kind.is_property() && c.target.kind.is_property()) {
            return false;
        }
        self.a.signatures(&c.source).any(|(ds, rs)| {
            self.b.signatures(&c.target).any(|(dt, rt)| {
                let swapped = self.counterpart(ds, rt) && self.counterpart(rs, dt);
                let straight = self.counterpart(ds, dt) && self.counterpart(rs, rt);
                swapped && !straight
            })
        })
    }

    fn fan_out(&self, c: &Correspondence) -> bool {
        let related = |anc: &HashMap<&EntityId, HashSet<&EntityId>>, x: &EntityId, y: &EntityId| {
            match (anc.get(x), anc.get(y)) {
                (Some(ax), Some(ay)) => !ax.is_disjoint(ay),
                _ => false,
            }
        };
        let many_sources = self.predicted.iter().any(|o| {
            o.target == c.target && o.source != c.source && related(&self.anc_a, &o.source, &c.source)
        });
        let many_targets = self.predicted.iter().any(|o| {
            o.source == c.source && o.target != c.target && related(&self.anc_b, &o.target, &c.target)
        });
        many_sources || many_targets
    }
}

/// Assign every false positive of `predicted` to exactly one [`Category`].
///
/// Precedence: inverse-property suspect, subclass fan-out, hedged, other.
pub fn classify_false_positives(
    predicted: &Alignment,
    reference: &Alignment,
    a: &Ontology,
    b: &Ontology,
) -> Result<DiagnosticsReport> {
    check_pair(predicted, reference)?;
    let ctx = Context {
        predicted,
        reference,
        a,
        b,
        anc_a: ancestors(a),
        anc_b: ancestors(b),
    };
    let mut buckets: BTreeMap<Category, Vec<Correspondence>> =
        Category::ALL.into_iter().map(|c| (c, Vec::new())).collect();
    for c in predicted
        .iter()
        .filter(|c| !reference.contains(&c.source, &c.target))
    {
        let category = if ctx.inverse_suspect(c) {
            Category::InversePropertySuspect
        } else if ctx.fan_out(c) {
            Category::SubclassFanOut
        } else if c.confidence < 1.0 {
            Category::Hedged
        } else {
            Category::Other
        };
        buckets.entry(category).or_default().push(c.clone());
    }
    Ok(DiagnosticsReport {
        pair: predicted.pair.clone(),
        buckets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EntityKind, Statement};

    fn sub(o: &mut Ontology, s: &str, p: &str) {
        let s = o.add_entity(s, EntityKind::Class);
        let p = o.add_entity(p, EntityKind::Class);
        o.statements.push(Statement::SubClass { sub: s, sup: p });
    }

    #[test]
    fn no_false_positives_leaves_buckets_empty() {
        let a = Ontology::new("a");
        let b = Ontology::new("b");
        let mut r = Alignment::new("a", "b");
        r.insert(Correspondence::new(EntityId::class("a", "X"), EntityId::class("b", "X"), 1.0))
            .unwrap();
        let report = classify_false_positives(&r, &r, &a, &b).unwrap();
        assert_eq!(report.total(), 0);
        assert_eq!(report.buckets.len(), 4);
    }

    #[test]
    fn hedged_and_other() {
        let mut a = Ontology::new("a");
        let mut b = Ontology::new("b");
        a.add_entity("Chair", EntityKind::Class);
        a.add_entity("Desk", EntityKind::Class);
        b.add_entity("Boss", EntityKind::Class);
        b.add_entity("Table", EntityKind::Class);
        let mut p = Alignment::new("a", "b");
        p.insert(Correspondence::new(EntityId::class("a", "Chair"), EntityId::class("b", "Boss"), 0.5))
            .unwrap();
        p.insert(Correspondence::new(EntityId::class("a", "Desk"), EntityId::class("b", "Table"), 1.0))
            .unwrap();
        let report = classify_false_positives(&p, &Alignment::new("a", "b"), &a, &b).unwrap();
        assert_eq!(report.count(Category::Hedged), 1);
        assert_eq!(report.count(Category::Other), 1);
    }

    #[test]
    fn parent_and_child_to_same_target_is_fan_out() {
        let mut a = Ontology::new("a");
        sub(&mut a, "Student", "Person");
        let mut b = Ontology::new("b");
        b.add_entity("Attendee", EntityKind::Class);
        let mut p = Alignment::new("a", "b");
        for s in ["Student", "Person"] {
            p.insert(Correspondence::new(EntityId::class("a", s), EntityId::class("b", "Attendee"), 0.5))
                .unwrap();
        }
        let report = classify_false_positives(&p, &Alignment::new("a", "b"), &a, &b).unwrap();
        assert_eq!(report.count(Category::SubclassFanOut), 2);
    }

    #[test]
    fn unrelated_sources_are_not_fan_out() {
        let mut a = Ontology::new("a");
        sub(&mut a, "Student", "Person");
        sub(&mut a, "Room", "Place");
        let mut b = Ontology::new("b");
        b.add_entity("Attendee", EntityKind::Class);
        let mut p = Alignment::new("a", "b");
        for s in ["Student", "Room"] {
            p.insert(Correspondence::new(EntityId::class("a", s), EntityId::class("b", "Attendee"), 1.0))
                .unwrap();
        }
        let report = classify_false_positives(&p, &Alignment::new("a", "b"), &a, &b).unwrap();
        assert_eq!(report.count(Category::Other), 2);
    }
}

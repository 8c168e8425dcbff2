//! RDF/XML ingestion for the subset of OWL used by the conference-track ontologies.
//!
//! Only named classes, object/data properties, subclass axioms with named
//! superclasses and named domains/ranges are represented. Everything else is
//! counted in the ontology's [`SkipReport`].

use std::collections::HashMap;

use indexmap::{IndexMap, IndexSet};
use roxmltree::{Document, Node, ParsingOptions};

use crate::error::{AlignError, Result};
use crate::model::{EntityId, EntityKind, Ontology, SkipReport, Statement, Term, THING};

pub(crate) const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub(crate) const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub(crate) const OWL: &str = "http://www.w3.org/2002/07/owl#";
pub(crate) const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

/// What an rdf:type (or typed node element) says about a resource.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Declared {
    Class,
    Object,
    Data,
    /// A property whose object/data nature is not stated (owl:FunctionalProperty, rdf:Property).
    AnyProperty,
    Ontology,
    Other,
}

fn classify_type(iri: &str) -> Declared {
    match iri.strip_prefix(OWL) {
        Some("Class") => Declared::Class,
        Some(
            "ObjectProperty" | "InverseFunctionalProperty" | "TransitiveProperty"
            | "SymmetricProperty" | "AsymmetricProperty" | "ReflexiveProperty"
            | "IrreflexiveProperty",
        ) => Declared::Object,
        Some("DatatypeProperty") => Declared::Data,
        Some("FunctionalProperty") => Declared::AnyProperty,
        Some("Ontology") => Declared::Ontology,
        _ => match iri {
            i if i == format!("{RDFS}Class") => Declared::Class,
            i if i == format!("{RDF}Property") => Declared::AnyProperty,
            _ => Declared::Other,
        },
    }
}

fn expanded(node: &Node) -> String {
    let tag = node.tag_name();
    format!("{}{}", tag.namespace().unwrap_or(""), tag.name())
}

fn is(node: &Node, ns: &str, name: &str) -> bool {
    node.is_element() && node.tag_name().namespace() == Some(ns) && node.tag_name().name() == name
}

/// Fragment (or last path segment) of an IRI.
pub(crate) fn local_name(iri: &str) -> &str {
    match iri.rfind('#') {
        Some(i) => &iri[i + 1..],
        None => iri.rsplit('/').next().unwrap_or(iri),
    }
}

/// Namespace part of an IRI, including the trailing `#` or `/`.
pub(crate) fn namespace_of(iri: &str) -> &str {
    match iri.rfind('#') {
        Some(i) => &iri[..=i],
        None => match iri.rfind('/') {
            Some(i) => &iri[..=i],
            None => "",
        },
    }
}

fn is_builtin(iri: &str) -> bool {
    [RDF, RDFS, OWL, XSD].iter().any(|ns| iri.starts_with(ns))
}

struct Parser<'a, 'input> {
    base: String,
    nodes: Vec<Node<'a, 'input>>,
}

impl<'a, 'input> Parser<'a, 'input> {
    fn resolve(&self, reference: &str) -> String {
        if reference.is_empty() {
            self.base.clone()
        } else if reference.starts_with('#') {
            format!("{}{}", self.base.trim_end_matches('#'), reference)
        } else {
            reference.to_string()
        }
    }

    fn subject(&self, node: &Node) -> Option<String> {
        if let Some(about) = node.attribute((RDF, "about")) {
            return Some(self.resolve(about));
        }
        node.attribute((RDF, "ID"))
            .map(|id| format!("{}#{}", self.base.trim_end_matches('#'), id))
    }

    fn resource(&self, node: &Node) -> Option<String> {
        node.attribute((RDF, "resource")).map(|r| self.resolve(r))
    }

    /// Types asserted for a node element: its tag (unless rdf:Description) plus rdf:type children.
    fn types(&self, node: &Node) -> Vec<String> {
        let mut types = Vec::new();
        if !is(node, RDF, "Description") {
            types.push(expanded(node));
        }
        for child in node.children().filter(|c| is(c, RDF, "type")) {
            if let Some(r) = self.resource(&child) {
                types.push(r);
            }
        }
        types
    }
}

/// Collect node elements in document order (children of rdf:RDF and objects nested in property elements).
fn collect_nodes<'a, 'input>(node: Node<'a, 'input>, out: &mut Vec<Node<'a, 'input>>) {
    out.push(node);
    for prop in node.children().filter(Node::is_element) {
        if prop.attribute((RDF, "parseType")) == Some("Literal") {
            continue;
        }
        for obj in prop.children().filter(Node::is_element) {
            collect_nodes(obj, out);
        }
    }
}

#[derive(Default)]
struct PropertyInfo {
    domains: IndexSet<String>,
    ranges: IndexSet<String>,
}

enum Slot {
    Stmt(Statement),
    Property(String),
}

/// Parse an RDF/XML ontology document into the internal model.
pub fn parse_ontology(document: &[u8], name: &str) -> Result<Ontology> {
    let text = std::str::from_utf8(document)
        .map_err(|e| AlignError::MalformedXml(format!("not UTF-8: {e}")))?;
    let options = ParsingOptions {
        allow_dtd: true,
        ..ParsingOptions::default()
    };
    let doc = Document::parse_with_options(text, options)
        .map_err(|e| AlignError::MalformedXml(e.to_string()))?;
    let root = doc.root_element();

    let base = root
        .attribute(("http://www.w3.org/XML/1998/namespace", "base"))
        .map(str::to_string)
        .or_else(|| root.lookup_namespace_uri(None).map(str::to_string))
        .unwrap_or_default();
    let mut parser = Parser {
        base,
        nodes: Vec::new(),
    };
    let mut nodes = Vec::new();
    if is(&root, RDF, "RDF") {
        for child in root.children().filter(Node::is_element) {
            collect_nodes(child, &mut nodes);
        }
    } else {
        collect_nodes(root, &mut nodes);
    }
    parser.nodes = nodes;

    // Pass 1: declarations.
    let mut declared: IndexMap<String, Vec<Declared>> = IndexMap::new();
    let mut ontology_iri = None;
    for node in &parser.nodes {
        let Some(iri) = parser.subject(node) else {
            continue;
        };
        for t in parser.types(node) {
            let d = classify_type(&t);
            if d == Declared::Ontology {
                ontology_iri.get_or_insert_with(|| iri.clone());
            } else if d != Declared::Other && !is_builtin(&iri) {
                declared.entry(iri.clone()).or_default().push(d);
            }
        }
    }

    // Data/object nature of untyped properties is decided by their ranges.
    let mut range_is_datatype: HashMap<String, bool> = HashMap::new();
    for node in &parser.nodes {
        let Some(iri) = parser.subject(node) else {
            continue;
        };
        for r in node.children().filter(|c| is(c, RDFS, "range")) {
            if let Some(res) = parser.resource(&r) {
                let datatype = res.starts_with(XSD) || res == format!("{RDFS}Literal");
                *range_is_datatype.entry(iri.clone()).or_default() |= datatype;
            }
        }
    }

    let kind_of = |iri: &str| -> Option<EntityKind> {
        let decls = declared.get(iri)?;
        if decls.contains(&Declared::Data) {
            Some(EntityKind::DataProperty)
        } else if decls.contains(&Declared::Object) {
            Some(EntityKind::ObjectProperty)
        } else if decls.contains(&Declared::AnyProperty) {
            if range_is_datatype.get(iri).copied().unwrap_or(false) {
                Some(EntityKind::DataProperty)
            } else {
                Some(EntityKind::ObjectProperty)
            }
        } else if decls.contains(&Declared::Class) {
            Some(EntityKind::Class)
        } else {
            None
        }
    };

    let mut onto = Ontology::new(name);
    let mut skipped = SkipReport::default();
    for iri in declared.keys() {
        if let Some(kind) = kind_of(iri) {
            let local = local_name(iri);
            if !local.is_empty() {
                onto.add_entity(local, kind);
            }
        }
    }

    // Pass 2: axioms.
    let mut slots: Vec<Slot> = Vec::new();
    let mut props: IndexMap<String, PropertyInfo> = IndexMap::new();
    let named_child = |prop: &Node| -> Option<Option<String>> {
        // Some(Some(iri)) named object, Some(None) anonymous object, None no object.
        if let Some(r) = parser.resource(prop) {
            return Some(Some(r));
        }
        let obj = prop.children().find(Node::is_element)?;
        Some(parser.subject(&obj))
    };

    for node in &parser.nodes {
        let Some(iri) = parser.subject(node) else {
            continue;
        };
        let Some(kind) = kind_of(&iri) else {
            if !is_builtin(&iri) && Some(&iri) != ontology_iri.as_ref() {
                skipped.other_axioms += 1;
            }
            continue;
        };
        let local = local_name(&iri);
        if local.is_empty() {
            continue;
        }
        let me = EntityId::new(name, local, kind);
        if kind.is_property() && !props.contains_key(&iri) {
            props.insert(iri.clone(), PropertyInfo::default());
            slots.push(Slot::Property(iri.clone()));
        }

        for prop in node.children().filter(Node::is_element) {
            if is(&prop, RDF, "type") {
                continue;
            }
            if is(&prop, RDFS, "label") {
                let text = prop.text().unwrap_or("").trim();
                if !text.is_empty() && !onto.labels.contains_key(&me) {
                    onto.labels.insert(me.clone(), text.to_string());
                }
                continue;
            }
            if is(&prop, RDFS, "comment") {
                continue;
            }
            if kind == EntityKind::Class && is(&prop, RDFS, "subClassOf") {
                match named_child(&prop) {
                    Some(Some(sup_iri)) if sup_iri == format!("{OWL}Thing") => {}
                    Some(Some(sup_iri)) if !is_builtin(&sup_iri) => {
                        let sup = onto.add_entity(local_name(&sup_iri), EntityKind::Class);
                        slots.push(Slot::Stmt(Statement::SubClass {
                            sub: me.clone(),
                            sup,
                        }));
                    }
                    _ => skipped.anonymous_superclasses += 1,
                }
                continue;
            }
            if kind.is_property() && (is(&prop, RDFS, "domain") || is(&prop, RDFS, "range")) {
                let info = props.get_mut(&iri).expect("property slot registered");
                match named_child(&prop) {
                    Some(Some(target)) => {
                        if is(&prop, RDFS, "domain") {
                            info.domains.insert(target);
                        } else {
                            info.ranges.insert(target);
                        }
                    }
                    _ => skipped.anonymous_domain_range += 1,
                }
                continue;
            }
            skipped.other_axioms += 1;
        }
    }

    let thing = format!("{OWL}Thing");
    let mut statements = Vec::new();
    for slot in slots {
        match slot {
            Slot::Stmt(s) => statements.push(s),
            Slot::Property(iri) => {
                let kind = kind_of(&iri).expect("declared property");
                let property = EntityId::new(name, local_name(&iri), kind);
                let info = &props[&iri];
                let mut domains: Vec<Term> = Vec::new();
                for d in &info.domains {
                    if *d == thing {
                        continue;
                    }
                    domains.push(Term::Entity(onto.add_entity(local_name(d), EntityKind::Class)));
                }
                let mut ranges: Vec<Term> = Vec::new();
                for r in &info.ranges {
                    if *r == thing {
                        continue;
                    }
                    let datatype = r.starts_with(XSD) || r.starts_with(RDFS) || r.starts_with(RDF);
                    if datatype || kind == EntityKind::DataProperty {
                        ranges.push(Term::Literal(local_name(r).to_string()));
                    } else {
                        ranges.push(Term::Entity(
                            onto.add_entity(local_name(r), EntityKind::Class),
                        ));
                    }
                }
                if domains.is_empty() {
                    domains.push(Term::Literal(THING.into()));
                }
                if ranges.is_empty() {
                    ranges.push(Term::Literal(THING.into()));
                }
                for d in &domains {
                    for r in &ranges {
                        statements.push(Statement::PropertySignature {
                            property: property.clone(),
                            domain: d.clone(),
                            range: r.clone(),
                        });
                    }
                }
            }
        }
    }
    onto.statements = statements;
    onto.skipped = skipped;
    let mut ns_counts: IndexMap<&str, usize> = IndexMap::new();
    for iri in declared.keys() {
        *ns_counts.entry(namespace_of(iri)).or_default() += 1;
    }
    onto.namespace = ns_counts
        .iter()
        .max_by_key(|(_, n)| **n)
        .map(|(ns, _)| ns.to_string())
        .or_else(|| ontology_iri.map(|i| format!("{}#", i.trim_end_matches(['#', '/']))));
    onto.check_closure()?;
    Ok(onto)
}

//! Reading and writing the OAEI Alignment Format (RDF/XML `Cell` lists).

use std::fmt::Write as _;

use roxmltree::{Document, Node};
use tracing::warn;

use crate::error::{AlignError, Result};
use crate::model::{Alignment, Correspondence, EntityId, Ontology};
use crate::rdfxml::{local_name, namespace_of, RDF};

fn child<'a, 'i>(node: &Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children()
        .find(|c| c.is_element() && c.tag_name().name() == name)
}

fn entity_iri(node: &Node) -> Option<String> {
    if let Some(r) = node.attribute((RDF, "resource")) {
        return Some(r.to_string());
    }
    if let Some(r) = node.attributes().find(|a| a.name() == "resource") {
        return Some(r.value().to_string());
    }
    let text = node.text()?.trim();
    (!text.is_empty()).then(|| text.to_string())
}

fn lookup(iri: &str, onto: &Ontology) -> Option<EntityId> {
    onto.by_local(local_name(iri)).next().cloned()
}

fn prefers(iri: &str, onto: &Ontology) -> bool {
    onto.namespace.as_deref() == Some(namespace_of(iri))
}

fn resolve_cell(e1: &str, e2: &str, onto1: &Ontology, onto2: &Ontology) -> Result<(EntityId, EntityId)> {
    let direct = || Some((lookup(e1, onto1)?, lookup(e2, onto2)?));
    let swapped = || Some((lookup(e2, onto1)?, lookup(e1, onto2)?));
    let looks_swapped = prefers(e1, onto2) && prefers(e2, onto1) && !prefers(e1, onto1);
    let found = if looks_swapped {
        swapped().or_else(direct)
    } else {
        direct().or_else(swapped)
    };
    found.ok_or_else(|| {
        let bad = if lookup(e1, onto1).is_none() && lookup(e1, onto2).is_none() {
            e1
        } else {
            e2
        };
        AlignError::UnresolvedEntity(bad.to_string())
    })
}

/// Parse an Alignment Format document, resolving entity IRIs against the two ontologies.
pub fn parse_alignment(document: &[u8], onto1: &Ontology, onto2: &Ontology) -> Result<Alignment> {
    let text = std::str::from_utf8(document)
        .map_err(|e| AlignError::MalformedXml(format!("not UTF-8: {e}")))?;
    let options = roxmltree::ParsingOptions {
        allow_dtd: true,
        ..Default::default()
    };
    let doc = Document::parse_with_options(text, options)
        .map_err(|e| AlignError::MalformedXml(e.to_string()))?;
    let mut al = Alignment::new(onto1.name.clone(), onto2.name.clone());
    for cell in doc
        .descendants()
        .filter(|n| n.is_element() && n.tag_name().name() == "Cell")
    {
        let iri = |name: &str| {
            child(&cell, name)
                .and_then(|n| entity_iri(&n))
                .ok_or_else(|| AlignError::MalformedXml(format!("Cell without {name}")))
        };
        let (e1, e2) = (iri("entity1")?, iri("entity2")?);
        let relation = child(&cell, "relation")
            .and_then(|n| n.text())
            .map(str::trim)
            .unwrap_or("=");
        if relation != "=" {
            warn!(%e1, %e2, relation, "skipping non-equivalence cell");
            continue;
        }
        let measure = match child(&cell, "measure").and_then(|n| n.text()) {
            Some(m) => m
                .trim()
                .parse::<f64>()
                .map_err(|_| AlignError::MalformedXml(format!("bad measure `{m}`")))?,
            None => 1.0,
        };
        let (source, target) = resolve_cell(&e1, &e2, onto1, onto2)?;
        al.insert(Correspondence::new(source, target, measure))?;
    }
    Ok(al)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Serialize with entity namespaces of the form `http://<ontology>#`.
pub fn serialize_alignment(al: &Alignment) -> Vec<u8> {
    let ns1 = format!("http://{}#", al.pair.0);
    let ns2 = format!("http://{}#", al.pair.1);
    serialize_alignment_with(al, &ns1, &ns2)
}

/// Serialize with explicit entity namespaces for the two ontologies.
pub fn serialize_alignment_with(al: &Alignment, ns1: &str, ns2: &str) -> Vec<u8> {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"utf-8\"?>\n");
    out.push_str(
        "<rdf:RDF xmlns=\"http://knowledgeweb.semanticweb.org/heterogeneity/alignment#\"\n         \
         xmlns:rdf=\"http://www.w3.org/1999/02/22-rdf-syntax-ns#\"\n         \
         xmlns:xsd=\"http://www.w3.org/2001/XMLSchema#\">\n",
    );
    out.push_str("<Alignment>\n  <xml>yes</xml>\n  <level>0</level>\n  <type>??</type>\n");
    let onto = |ns: &str| escape(ns.trim_end_matches('#'));
    let _ = writeln!(out, "  <onto1>{}</onto1>", onto(ns1));
    let _ = writeln!(out, "  <onto2>{}</onto2>", onto(ns2));
    for c in al.iter() {
        out.push_str("  <map>\n    <Cell>\n");
        let _ = writeln!(
            out,
            "      <entity1 rdf:resource=\"{}\"/>",
            escape(&format!("{ns1}{}", c.source.local))
        );
        let _ = writeln!(
            out,
            "      <entity2 rdf:resource=\"{}\"/>",
            escape(&format!("{ns2}{}", c.target.local))
        );
        let _ = writeln!(out, "      <relation>{}</relation>", escape(c.relation.symbol()));
        let _ = writeln!(
            out,
            "      <measure rdf:datatype=\"http://www.w3.org/2001/XMLSchema#float\">{:?}</measure>",
            c.confidence
        );
        out.push_str("    </Cell>\n  </map>\n");
    }
    out.push_str("</Alignment>\n</rdf:RDF>\n");
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EntityKind;

    fn ontos() -> (Ontology, Ontology) {
        let mut a = Ontology::new("cmt");
        a.namespace = Some("http://cmt#".into());
        a.add_entity("A", EntityKind::Class);
        a.add_entity("Paper", EntityKind::Class);
        let mut b = Ontology::new("sigkdd");
        b.namespace = Some("http://sigkdd#".into());
        b.add_entity("B", EntityKind::Class);
        b.add_entity("Paper", EntityKind::Class);
        (a, b)
    }

    fn cell(e1: &str, e2: &str) -> String {
        format!(
            "<map><Cell><entity1 rdf:resource=\"{e1}\"/><entity2 rdf:resource=\"{e2}\"/>\
             <measure rdf:datatype=\"xsd:float\">1.0</measure><relation>=</relation></Cell></map>"
        )
    }

    fn doc(cells: &[String]) -> String {
        format!(
            "<?xml version='1.0'?><rdf:RDF xmlns='http://knowledgeweb.semanticweb.org/heterogeneity/alignment' \
             xmlns:rdf='http://www.w3.org/1999/02/22-rdf-syntax-ns#'><Alignment>{}</Alignment></rdf:RDF>",
            cells.concat()
        )
    }

    #[test]
    fn single_cell() {
        let (a, b) = ontos();
        let al = parse_alignment(doc(&[cell("http://cmt#A", "http://sigkdd#B")]).as_bytes(), &a, &b).unwrap();
        assert_eq!(al.len(), 1);
        let c = al.iter().next().unwrap();
        assert_eq!(c.confidence, 1.0);
        assert_eq!(c.source, EntityId::class("cmt", "A"));
    }

    #[test]
    fn duplicate_cells_collapse() {
        let (a, b) = ontos();
        let c = cell("http://cmt#A", "http://sigkdd#B");
        let al = parse_alignment(doc(&[c.clone(), c]).as_bytes(), &a, &b).unwrap();
        assert_eq!(al.len(), 1);
    }

    #[test]
    fn swapped_cell_is_flipped() {
        let (a, b) = ontos();
        let al = parse_alignment(doc(&[cell("http://sigkdd#B", "http://cmt#A")]).as_bytes(), &a, &b).unwrap();
        let c = al.iter().next().unwrap();
        assert_eq!((c.source.local.as_str(), c.target.local.as_str()), ("A", "B"));
    }

    #[test]
    fn same_local_in_both_keeps_direction() {
        let (a, b) = ontos();
        let al = parse_alignment(doc(&[cell("http://cmt#Paper", "http://sigkdd#Paper")]).as_bytes(), &a, &b).unwrap();
        let c = al.iter().next().unwrap();
        assert_eq!(c.source.ontology, "cmt");
    }

    #[test]
    fn unresolved_iri_is_reported() {
        let (a, b) = ontos();
        let err = parse_alignment(doc(&[cell("http://cmt#Ghost", "http://sigkdd#B")]).as_bytes(), &a, &b)
            .unwrap_err();
        match err {
            AlignError::UnresolvedEntity(iri) => assert_eq!(iri, "http://cmt#Ghost"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn malformed_document() {
        let (a, b) = ontos();
        assert!(matches!(
            parse_alignment(b"<Alignment><Cell>", &a, &b),
            Err(AlignError::MalformedXml(_))
        ));
    }

    #[test]
    fn serialize_empty_and_single() {
        let empty = Alignment::new("cmt", "sigkdd");
        let text = String::from_utf8(serialize_alignment(&empty)).unwrap();
        assert_eq!(text.matches("<Cell>").count(), 0);
        Document::parse(&text).unwrap();

        let (a, b) = ontos();
        let mut one = Alignment::new("cmt", "sigkdd");
        one.insert(Correspondence::new(EntityId::class("cmt", "A"), EntityId::class("sigkdd", "B"), 1.0))
            .unwrap();
        let bytes = serialize_alignment(&one);
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert_eq!(text.matches("<Cell>").count(), 1);
        assert!(text.contains(">1.0</measure>"));
        assert_eq!(parse_alignment(&bytes, &a, &b).unwrap(), one);
    }
}

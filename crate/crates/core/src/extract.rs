//! Grammar-based extraction of correspondences from free-text model replies.
//!
//! Accepted line shapes (optionally numbered or bulleted):
//!
//! ```text
//! X = Y
//! X <-> Y          (also ->, =>, <=>)
//! X matches Y
//! Pred1 (A, B) = Pred2 (C, D)      pairs Pred1 with Pred2
//! Is-a (A, B) = Is-a (C, D)        pairs A with C and B with D
//! ```
//!
//! Lines carrying a hedge marker get [`HEDGED_CONFIDENCE`]; lines that say there
//! is no match produce nothing. Anything that cannot be resolved to entities of
//! the two ontologies is kept in [`ExtractionReport::unresolved`].

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{AlignError, Result};
use crate::model::{Alignment, Correspondence, EntityId, Ontology, ResolveError};
use crate::prompt::StrategyId;
use crate::verbalize::IS_A;

/// Phrases that mark a proposed match as uncertain.
pub const HEDGE_MARKERS: [&str; 4] = [
    "unlikely",
    "not a direct match",
    "no direct equivalent",
    "possible match",
];

/// Phrases that mark a line as declaring the absence of a match.
pub const NO_MATCH_MARKERS: [&str; 4] = [
    "no match",
    "no suitable match",
    "no corresponding",
    "no equivalent",
];

pub const HEDGED_CONFIDENCE: f64 = 0.5;

static LIST_MARKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:\(?\d+[.):]|[-*•+])\s+").expect("valid regex"));

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Unresolved {
    pub raw_line: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub pair: (String, String),
    pub correspondences: Vec<Correspondence>,
    pub unresolved: Vec<Unresolved>,
    /// Number of correspondences carrying hedged confidence.
    pub hedged_count: usize,
}

impl ExtractionReport {
    pub fn to_alignment(&self) -> Alignment {
        let mut al = Alignment::new(self.pair.0.clone(), self.pair.1.clone());
        for c in &self.correspondences {
            al.insert(c.clone()).expect("report entries belong to the pair");
        }
        al
    }

    fn from_parts(pair: (String, String), al: Alignment, mut unresolved: Vec<Unresolved>) -> Self {
        let correspondences: Vec<Correspondence> = al.iter().cloned().collect();
        let hedged_count = correspondences.iter().filter(|c| c.confidence < 1.0).count();
        let mut seen = std::collections::HashSet::new();
        unresolved.retain(|u| seen.insert(u.clone()));
        Self {
            pair,
            correspondences,
            unresolved,
            hedged_count,
        }
    }
}

fn strip_decoration(line: &str) -> String {
    let line = LIST_MARKER.replace(line, "");
    line.replace("**", "").replace('`', "").trim().to_string()
}

/// Split at a top-level (paren depth 0) operator. Returns (left, right).
fn split_operator(line: &str) -> Option<(&str, &str)> {
    let lower = line.to_lowercase();
    // Byte offsets of `lower` and `line` agree only for ASCII-preserving case maps.
    let same_len = lower.len() == line.len();
    let mut depth = 0i32;
    let bytes = line.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => depth += 1,
            b')' => depth -= 1,
            _ if depth == 0 => {
                let rest = &line[i..];
                for op in ["<->", "<=>", "↔", "==", "=>", "->", "="] {
                    if rest.starts_with(op) {
                        return Some((&line[..i], &line[i + op.len()..]));
                    }
                }
                if same_len && lower[i..].starts_with(" matches ") {
                    return Some((&line[..i], &line[i + " matches ".len()..]));
                }
            }
            _ => {}
        }
        i += 1;
        while i < bytes.len() && !line.is_char_boundary(i) {
            i += 1;
        }
    }
    None
}

#[derive(Debug)]
struct Operand<'a> {
    name: &'a str,
    args: Option<(&'a str, &'a str)>,
}

fn operand<'a>(text: &'a str, prefixes: &[String]) -> Operand<'a> {
    let mut t = text.trim();
    for p in prefixes {
        if t.len() >= p.len() && t.is_char_boundary(p.len()) && t[..p.len()].eq_ignore_ascii_case(p) {
            t = t[p.len()..].trim_start();
            break;
        }
    }
    let (head, args) = match t.find('(') {
        Some(open) => {
            let inner = &t[open + 1..];
            let args = inner
                .find(')')
                .and_then(|close| inner[..close].split_once(','))
                .map(|(x, y)| (x.trim(), y.trim()));
            (&t[..open], args)
        }
        None => (t, None),
    };
    let mut name = head;
    for sep in [" - ", " – ", " — ", ":", ";", ",", " because ", " since "] {
        if let Some(i) = name.find(sep) {
            name = &name[..i];
        }
    }
    let name = name.trim().trim_matches(|c: char| matches!(c, '"' | '\'' | '.' | '“' | '”')).trim();
    Operand { name, args }
}

/// Whether `line` has the shape of a correspondence statement.
pub fn is_candidate_line(line: &str) -> bool {
    let clean = strip_decoration(line);
    let lower = clean.to_lowercase();
    if NO_MATCH_MARKERS.iter().any(|m| lower.contains(m)) {
        return false;
    }
    match split_operator(&clean) {
        Some((l, r)) => {
            let l = operand(l, &[]);
            let r = operand(r, &[]);
            !l.name.is_empty() && !r.name.is_empty()
        }
        None => false,
    }
}

fn describe(err: &ResolveError, name: &str) -> String {
    match err {
        ResolveError::NotFound => format!("unknown entity `{name}`"),
        ResolveError::Ambiguous(x, y) => format!("ambiguous name `{name}` ({x} or {y})"),
    }
}

fn resolve_pair(x: &str, y: &str, a: &Ontology, b: &Ontology) -> std::result::Result<(EntityId, EntityId), String> {
    let direct = (a.resolve_name(x), b.resolve_name(y));
    let (rx, ry) = match direct {
        (Ok(s), Ok(t)) => return Ok((s, t)),
        other => other,
    };
    if let (Ok(s), Ok(t)) = (a.resolve_name(y), b.resolve_name(x)) {
        return Ok((s, t));
    }
    Err(match (rx, ry) {
        (Err(e), _) => describe(&e, x),
        (_, Err(e)) => describe(&e, y),
        _ => unreachable!("at least one side failed"),
    })
}

/// Parse a model response into correspondences between `a` (source) and `b` (target).
pub fn extract(response: &str, a: &Ontology, b: &Ontology, strategy: StrategyId) -> ExtractionReport {
    let prefixes: Vec<String> = [
        "ontology 1:".to_string(),
        "ontology 2:".to_string(),
        "ontology1:".to_string(),
        "ontology2:".to_string(),
        format!("{}:", a.name),
        format!("{}#", a.name),
        format!("{}:", b.name),
        format!("{}#", b.name),
    ]
    .into();
    let mut al = Alignment::new(a.name.clone(), b.name.clone());
    let mut unresolved = Vec::new();

    for raw in response.lines() {
        if !is_candidate_line(raw) {
            continue;
        }
        let clean = strip_decoration(raw);
        let lower = clean.to_lowercase();
        let hedged = HEDGE_MARKERS.iter().any(|m| lower.contains(m));
        let confidence = if hedged { HEDGED_CONFIDENCE } else { 1.0 };
        let (l, r) = split_operator(&clean).expect("candidate line has an operator");
        let (l, r) = (operand(l, &prefixes), operand(r, &prefixes));

        let mut candidates = vec![(l.name, r.name)];
        if l.name.eq_ignore_ascii_case(IS_A) && r.name.eq_ignore_ascii_case(IS_A) {
            if let (Some((a1, a2)), Some((b1, b2))) = (l.args, r.args) {
                candidates = vec![(a1, b1), (a2, b2)];
            }
        }
        for (x, y) in candidates {
            match resolve_pair(x, y, a, b) {
                Ok((s, t)) => {
                    let c = Correspondence::new(s, t, confidence).with_provenance(strategy, raw.trim());
                    al.insert(c).expect("resolved against the pair");
                }
                Err(reason) => unresolved.push(Unresolved {
                    raw_line: raw.trim().to_string(),
                    reason,
                }),
            }
        }
    }
    ExtractionReport::from_parts((a.name.clone(), b.name.clone()), al, unresolved)
}

/// Union of reports for the same pair; duplicate correspondences keep the highest confidence.
pub fn merge_reports(reports: &[ExtractionReport]) -> Result<ExtractionReport> {
    let Some(first) = reports.first() else {
        return Ok(ExtractionReport::default());
    };
    let pair = first.pair.clone();
    let mut al = Alignment::new(pair.0.clone(), pair.1.clone());
    let mut unresolved = Vec::new();
    for r in reports {
        if r.pair != pair {
            return Err(AlignError::PairMismatch {
                expected: format!("{}-{}", pair.0, pair.1),
                found: format!("{}-{}", r.pair.0, r.pair.1),
            });
        }
        for c in &r.correspondences {
            al.insert(c.clone())?;
        }
        unresolved.extend(r.unresolved.iter().cloned());
    }
    Ok(ExtractionReport::from_parts(pair, al, unresolved))
}

//! Shared inputs for the benchmarks: one synthetic pair, parsed once.

use ontoalign::synthetic::{ontology_xml, reference_xml};
use ontoalign::{build_prompts, mock_respond, parse_alignment, parse_ontology, Alignment, Ontology, StrategyId, TokenBudget};

pub struct Pair {
    pub left_xml: String,
    pub right_xml: String,
    pub left: Ontology,
    pub right: Ontology,
    pub reference: Alignment,
    /// What the mock answers to the single-prompt layout.
    pub reply: String,
}

impl Pair {
    pub fn load(left: &str, right: &str) -> Self {
        let left_xml = ontology_xml(left);
        let right_xml = ontology_xml(right);
        let a = parse_ontology(left_xml.as_bytes(), left).expect("synthetic ontology parses");
        let b = parse_ontology(right_xml.as_bytes(), right).expect("synthetic ontology parses");
        let reference = parse_alignment(reference_xml(left, right).as_bytes(), &a, &b).expect("reference parses");
        let plan = build_prompts(StrategyId::P1, &a, &b, TokenBudget::default()).expect("fits default budget");
        let texts: Vec<&str> = plan.messages.iter().map(|m| m.text.as_str()).collect();
        let reply = mock_respond(&texts);
        Self {
            left_xml,
            right_xml,
            left: a,
            right: b,
            reference,
            reply,
        }
    }
}

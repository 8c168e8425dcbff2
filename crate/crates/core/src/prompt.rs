//! Prompt strategies P1–P7 and token-budgeted message planning.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{AlignError, Result};
use crate::model::{EntityKind, Ontology};
use crate::verbalize::{humanize, verbalize_ontology_with, Ordering};

pub const PROBLEM_DEFINITION: &str = "In this task, we are given two ontologies in the form of \
Relation(Subject, Object), which consist of classes and properties.";
pub const OBJECTIVE_MAPPING: &str = "Our objective is to provide ontology mapping for the \
provided ontologies based on their semantic similarities.";
pub const OBJECTIVE_COMPLETE: &str = "Provide a complete and comprehensive matching of the ontologies";
pub const OBJECTIVE_ACCURATE: &str =
    "Match these two ontologies and provide the most accurate matching you can do";
pub const QUESTION_BEST_MATCH: &str =
    "For a class/property in the first ontology, which class/property in ontology 2 is the best match?";
pub const CONTINUED: &str = "continued:";
pub const ONTOLOGY_1: &str = "Ontology 1:";
pub const ONTOLOGY_2: &str = "Ontology 2:";

/// Per-entity question sent by P7.
pub fn entity_query(kind: EntityKind, name: &str) -> String {
    let word = if kind == EntityKind::Class { "class" } else { "property" };
    format!("For the {word} \"{name}\" in the first ontology, which class/property in ontology 2 is the best match?")
}

/// Inverse of [`entity_query`]: the queried name, if `text` is a per-entity question.
pub fn parse_entity_query(text: &str) -> Option<&str> {
    let rest = text
        .trim()
        .strip_prefix("For the class \"")
        .or_else(|| text.trim().strip_prefix("For the property \""))?;
    let end = rest.find("\" in the first ontology")?;
    Some(&rest[..end])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StrategyId {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
}

impl StrategyId {
    pub const ALL: [StrategyId; 7] = [
        StrategyId::P1,
        StrategyId::P2,
        StrategyId::P3,
        StrategyId::P4,
        StrategyId::P5,
        StrategyId::P6,
        StrategyId::P7,
    ];

    pub fn descriptor(self) -> Strategy {
        let (description, objective_text, layout) = match self {
            StrategyId::P1 => (
                "Put all the information in a single prompt",
                OBJECTIVE_MAPPING,
                Layout::SinglePrompt,
            ),
            StrategyId::P2 => (
                "Triples first, then an objective asking for a complete matching",
                OBJECTIVE_COMPLETE,
                Layout::TriplesThenObjective,
            ),
            StrategyId::P3 => (
                "Triples first, then an objective asking for the most accurate matching",
                OBJECTIVE_ACCURATE,
                Layout::TriplesThenObjective,
            ),
            StrategyId::P4 => (
                "Class triples and data/object property triples in two consecutive prompts",
                OBJECTIVE_MAPPING,
                Layout::ClassesThenProperties(Ordering::ClassesThenProperties),
            ),
            StrategyId::P5 => (
                "Class/property split with the accurate-matching objective",
                OBJECTIVE_ACCURATE,
                Layout::ClassesThenProperties(Ordering::ClassesThenProperties),
            ),
            StrategyId::P6 => (
                "Class/property split with root classes first",
                OBJECTIVE_MAPPING,
                Layout::ClassesThenProperties(Ordering::RootFirst),
            ),
            StrategyId::P7 => (
                "Provide both ontologies, then ask for the best match of each entity of the first",
                QUESTION_BEST_MATCH,
                Layout::PerEntity,
            ),
        };
        Strategy {
            id: self,
            description,
            objective_text,
            layout,
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for StrategyId {
    type Err = AlignError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_uppercase();
        let t = t.strip_prefix("PROMPT").map(str::trim).map(|n| format!("P{n}")).unwrap_or(t);
        StrategyId::ALL
            .into_iter()
            .find(|id| id.to_string() == t)
            .ok_or_else(|| AlignError::UnknownStrategy(s.to_string()))
    }
}

/// Structural variant of a strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Layout {
    /// Problem definition, both ontologies and objective in one message.
    SinglePrompt,
    /// Problem definition and both ontologies, then the objective on its own.
    TriplesThenObjective,
    /// Class triples first, property triples with the objective second.
    ClassesThenProperties(Ordering),
    /// Ontology 1, then the question with ontology 2, then one query per ontology-1 entity.
    PerEntity,
}

impl Layout {
    /// Whether the triple blocks may be spread over continuation messages.
    ///
    /// Strategies that present both ontologies jointly in one prompt are
    /// not split; an oversized pair fails for them instead.
    pub fn splittable(self) -> bool {
        matches!(self, Layout::ClassesThenProperties(_) | Layout::PerEntity)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Strategy {
    pub id: StrategyId,
    pub description: &'static str,
    pub objective_text: &'static str,
    pub layout: Layout,
}

pub fn list_strategies() -> Vec<Strategy> {
    StrategyId::ALL.into_iter().map(StrategyId::descriptor).collect()
}

/// Token estimation behind a swappable interface.
pub trait TokenEstimator: Send + Sync {
    fn estimate(&self, text: &str) -> usize;
}

/// `ceil(chars / 4)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CharsPerToken;

impl TokenEstimator for CharsPerToken {
    fn estimate(&self, text: &str) -> usize {
        estimate_tokens(text)
    }
}

pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenBudget {
    pub max_tokens: usize,
    pub reserve_for_reply: usize,
}

impl Default for TokenBudget {
    fn default() -> Self {
        Self {
            max_tokens: 8192,
            reserve_for_reply: 1024,
        }
    }
}

impl TokenBudget {
    pub fn new(max_tokens: usize, reserve_for_reply: usize) -> Result<Self> {
        if max_tokens == 0 || reserve_for_reply == 0 {
            return Err(AlignError::InvalidBudget(
                "max_tokens and reserve_for_reply must be positive".into(),
            ));
        }
        if reserve_for_reply >= max_tokens {
            return Err(AlignError::InvalidBudget(format!(
                "reserve_for_reply ({reserve_for_reply}) must be below max_tokens ({max_tokens})"
            )));
        }
        Ok(Self {
            max_tokens,
            reserve_for_reply,
        })
    }

    /// Budget with the reply reserve set to one eighth of the window, capped at 1024.
    pub fn with_max(max_tokens: usize) -> Result<Self> {
        Self::new(max_tokens, (max_tokens / 8).clamp(1, 1024))
    }

    /// Tokens available to a single outgoing message.
    pub fn available(&self) -> usize {
        self.max_tokens - self.reserve_for_reply
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    #[default]
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptMessage {
    pub role: Role,
    pub text: String,
    pub token_estimate: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptPlan {
    pub strategy: StrategyId,
    pub pair: (String, String),
    pub messages: Vec<PromptMessage>,
    pub expects_responses: usize,
}

impl PromptPlan {
    pub fn pair_name(&self) -> String {
        format!("{}-{}", self.pair.0, self.pair.1)
    }

    /// Human-readable rendering used by the `plan` subcommand.
    pub fn render_text(&self) -> String {
        let mut out = format!(
            "# strategy {} pair {} ({} messages, {} responses expected)\n",
            self.strategy,
            self.pair_name(),
            self.messages.len(),
            self.expects_responses
        );
        for (i, m) in self.messages.iter().enumerate() {
            out.push_str(&format!("\n--- message {} [{} tokens]\n{}\n", i + 1, m.token_estimate, m.text));
        }
        out
    }
}

pub struct PlanOptions<'a> {
    pub use_labels: bool,
    pub estimator: &'a dyn TokenEstimator,
}

impl Default for PlanOptions<'_> {
    fn default() -> Self {
        Self {
            use_labels: false,
            estimator: &CharsPerToken,
        }
    }
}

struct Block {
    header: &'static str,
    lines: Vec<String>,
}

#[derive(Default)]
struct MessageSpec {
    prefix: Vec<String>,
    blocks: Vec<Block>,
    suffix: Vec<String>,
}

enum Item<'s> {
    Fixed(&'s str),
    Header(&'static str),
    Line(&'s str),
}

struct Packer<'e> {
    estimator: &'e dyn TokenEstimator,
    available: usize,
    context: String,
    out: Vec<String>,
    cur: String,
}

impl Packer<'_> {
    fn fits(&self, text: &str) -> bool {
        self.estimator.estimate(text) <= self.available
    }

    fn append(&mut self, piece: &str) -> bool {
        let mark = self.cur.len();
        if !self.cur.is_empty() {
            self.cur.push('\n');
        }
        self.cur.push_str(piece);
        if self.fits(&self.cur) {
            true
        } else {
            self.cur.truncate(mark);
            false
        }
    }

    fn overflow(&self, text: &str) -> AlignError {
        AlignError::TokenLimitExceeded {
            needed: self.estimator.estimate(text),
            available: self.available,
            context: self.context.clone(),
        }
    }

    fn push(&mut self, piece: &str, header: Option<&str>) -> Result<()> {
        if self.append(piece) {
            return Ok(());
        }
        if !self.cur.is_empty() {
            self.out.push(std::mem::take(&mut self.cur));
        }
        self.cur.push_str(CONTINUED);
        if let Some(h) = header {
            if h != piece {
                self.cur.push('\n');
                self.cur.push_str(h);
            }
        }
        if self.append(piece) {
            Ok(())
        } else {
            let mut attempt = self.cur.clone();
            attempt.push('\n');
            attempt.push_str(piece);
            Err(self.overflow(&attempt))
        }
    }
}

fn render_message(
    spec: &MessageSpec,
    splittable: bool,
    estimator: &dyn TokenEstimator,
    available: usize,
    context: String,
) -> Result<Vec<String>> {
    let mut items: Vec<Item> = spec.prefix.iter().map(|s| Item::Fixed(s)).collect();
    for block in &spec.blocks {
        items.push(Item::Header(block.header));
        items.extend(block.lines.iter().map(|l| Item::Line(l)));
    }
    items.extend(spec.suffix.iter().map(|s| Item::Fixed(s)));

    let whole = items
        .iter()
        .map(|i| match i {
            Item::Fixed(s) | Item::Line(s) => *s,
            Item::Header(h) => h,
        })
        .collect::<Vec<_>>()
        .join("\n");
    if estimator.estimate(&whole) <= available {
        return Ok(vec![whole]);
    }
    let mut packer = Packer {
        estimator,
        available,
        context,
        out: Vec::new(),
        cur: String::new(),
    };
    if !splittable {
        return Err(packer.overflow(&whole));
    }
    let mut header = None;
    for item in &items {
        match item {
            Item::Fixed(s) => {
                header = None;
                packer.push(s, None)?;
            }
            Item::Header(h) => {
                header = Some(*h);
                packer.push(h, Some(h))?;
            }
            Item::Line(l) => packer.push(l, header)?,
        }
    }
    if !packer.cur.is_empty() {
        let last = std::mem::take(&mut packer.cur);
        packer.out.push(last);
    }
    Ok(packer.out)
}

fn lines(o: &Ontology, order: Ordering, use_labels: bool, classes: Option<bool>) -> Vec<String> {
    verbalize_ontology_with(o, order, use_labels)
        .into_iter()
        .filter(|l| classes.is_none_or(|c| l.source.is_subclass() == c))
        .map(|l| l.text)
        .collect()
}

/// Build the message sequence for one strategy on one ontology pair.
pub fn build_prompts(strategy: StrategyId, a: &Ontology, b: &Ontology, budget: TokenBudget) -> Result<PromptPlan> {
    build_prompts_with(strategy, a, b, budget, &PlanOptions::default())
}

pub fn build_prompts_with(
    strategy: StrategyId,
    a: &Ontology,
    b: &Ontology,
    budget: TokenBudget,
    opts: &PlanOptions<'_>,
) -> Result<PromptPlan> {
    let layout = strategy.descriptor().layout;
    let objective = strategy.descriptor().objective_text.to_string();
    let pd = PROBLEM_DEFINITION.to_string();
    let both = |order: Ordering, classes: Option<bool>| {
        vec![
            Block {
                header: ONTOLOGY_1,
                lines: lines(a, order, opts.use_labels, classes),
            },
            Block {
                header: ONTOLOGY_2,
                lines: lines(b, order, opts.use_labels, classes),
            },
        ]
    };

    let specs: Vec<MessageSpec> = match layout {
        Layout::SinglePrompt => vec![MessageSpec {
            prefix: vec![pd],
            blocks: both(Ordering::AsParsed, None),
            suffix: vec![objective],
        }],
        Layout::TriplesThenObjective => vec![
            MessageSpec {
                prefix: vec![pd],
                blocks: both(Ordering::AsParsed, None),
                ..Default::default()
            },
            MessageSpec {
                prefix: vec![objective],
                ..Default::default()
            },
        ],
        Layout::ClassesThenProperties(order) => vec![
            MessageSpec {
                prefix: vec![pd],
                blocks: both(order, Some(true)),
                ..Default::default()
            },
            MessageSpec {
                blocks: both(order, Some(false)),
                suffix: vec![objective],
                ..Default::default()
            },
        ],
        Layout::PerEntity => {
            let mut specs = vec![
                MessageSpec {
                    prefix: vec![pd],
                    blocks: vec![Block {
                        header: ONTOLOGY_1,
                        lines: lines(a, Ordering::AsParsed, opts.use_labels, None),
                    }],
                    ..Default::default()
                },
                MessageSpec {
                    prefix: vec![objective],
                    blocks: vec![Block {
                        header: ONTOLOGY_2,
                        lines: lines(b, Ordering::AsParsed, opts.use_labels, None),
                    }],
                    ..Default::default()
                },
            ];
            for e in a.classes().chain(a.properties()) {
                let name = match a.labels.get(e).filter(|_| opts.use_labels) {
                    Some(label) => humanize(label),
                    None => humanize(&e.local),
                };
                specs.push(MessageSpec {
                    prefix: vec![entity_query(e.kind, &name)],
                    ..Default::default()
                });
            }
            specs
        }
    };

    let available = budget.available();
    let mut messages = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let context = format!("pair {}-{}, strategy {strategy}, message {}", a.name, b.name, i + 1);
        for text in render_message(spec, layout.splittable(), opts.estimator, available, context)? {
            messages.push(PromptMessage {
                role: Role::User,
                token_estimate: opts.estimator.estimate(&text),
                text,
            });
        }
    }
    Ok(PromptPlan {
        strategy,
        pair: (a.name.clone(), b.name.clone()),
        expects_responses: messages.len(),
        messages,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Statement, Term};

    fn onto(name: &str, classes: &[(&str, &str)], props: &[(&str, &str, &str)]) -> Ontology {
        let mut o = Ontology::new(name);
        for (sub, sup) in classes {
            let sub = o.add_entity(sub, EntityKind::Class);
            let sup = o.add_entity(sup, EntityKind::Class);
            o.statements.push(Statement::SubClass { sub, sup });
        }
        for (p, d, r) in props {
            let p = o.add_entity(p, EntityKind::ObjectProperty);
            let d = o.add_entity(d, EntityKind::Class);
            let r = o.add_entity(r, EntityKind::Class);
            o.statements.push(Statement::PropertySignature {
                property: p,
                domain: Term::Entity(d),
                range: Term::Entity(r),
            });
        }
        o
    }

    #[test]
    fn estimate_examples() {
        assert_eq!(estimate_tokens(""), 0);
        assert_eq!(estimate_tokens("abcd"), 1);
        assert_eq!(estimate_tokens("abcde"), 2);
        assert_eq!("Is-a (track, conference part)".chars().count(), 29);
        assert_eq!(estimate_tokens("Is-a (track, conference part)"), 8);
    }

    #[test]
    fn strategies_are_listed_in_order() {
        let all = list_strategies();
        assert_eq!(all.len(), 7);
        assert_eq!(all.iter().map(|s| s.id).collect::<Vec<_>>(), StrategyId::ALL);
        assert_eq!(
            StrategyId::P2.descriptor().objective_text,
            "Provide a complete and comprehensive matching of the ontologies"
        );
        assert_eq!(
            StrategyId::P3.descriptor().objective_text,
            "Match these two ontologies and provide the most accurate matching you can do"
        );
    }

    #[test]
    fn strategy_ids_parse() {
        assert_eq!("p3".parse::<StrategyId>().unwrap(), StrategyId::P3);
        assert_eq!("prompt 7".parse::<StrategyId>().unwrap(), StrategyId::P7);
        assert!("P8".parse::<StrategyId>().is_err());
    }

    #[test]
    fn budget_validation() {
        assert!(TokenBudget::new(100, 100).is_err());
        assert!(TokenBudget::new(0, 1).is_err());
        assert_eq!(TokenBudget::with_max(8192).unwrap(), TokenBudget::default());
        assert_eq!(TokenBudget::with_max(300).unwrap().available(), 263);
    }

    #[test]
    fn p1_single_message() {
        let a = onto("a", &[("track", "conference_part")], &[("authorOf", "Person", "Document")]);
        let b = onto("b", &[("Paper", "Document")], &[]);
        let plan = build_prompts(StrategyId::P1, &a, &b, TokenBudget::default()).unwrap();
        assert_eq!(plan.messages.len(), 1);
        assert_eq!(plan.expects_responses, 1);
        assert!(plan.messages[0].text.starts_with("In this task, we are given two ontologies"));
        assert!(plan.messages[0].text.ends_with(OBJECTIVE_MAPPING));
    }

    #[test]
    fn p7_has_one_query_per_entity() {
        let a = onto("a", &[("track", "conference_part")], &[("chairOf", "Chair", "Session")]);
        assert_eq!(a.entities.len(), 5);
        let b = onto("b", &[("Paper", "Document")], &[]);
        let plan = build_prompts(StrategyId::P7, &a, &b, TokenBudget::default()).unwrap();
        assert_eq!(plan.messages.len(), 7);
        assert_eq!(plan.expects_responses, 7);
        assert_eq!(parse_entity_query(&plan.messages[2].text), Some("track"));
        assert_eq!(parse_entity_query(&plan.messages[3].text), Some("conference part"));
        assert!(plan.messages[6].text.starts_with("For the property \"chairOf\""));
    }

    #[test]
    fn oversized_line_fails() {
        let long = "x".repeat(240);
        let a = onto("a", &[(long.as_str(), "B")], &[]);
        let b = onto("b", &[], &[]);
        let budget = TokenBudget::with_max(50).unwrap();
        for s in StrategyId::ALL {
            let err = build_prompts(s, &a, &b, budget).unwrap_err();
            assert!(err.is_token_limit(), "{s}: {err}");
        }
    }

    #[test]
    fn splittable_layouts_chunk_at_line_boundaries() {
        let classes: Vec<(String, String)> =
            (0..40).map(|i| (format!("Class_{i}"), format!("Parent_{}", i / 4))).collect();
        let refs: Vec<(&str, &str)> = classes.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let a = onto("a", &refs, &[("p", "X", "Y")]);
        let b = onto("b", &refs, &[]);
        let budget = TokenBudget::with_max(150).unwrap();
        assert!(build_prompts(StrategyId::P1, &a, &b, budget).unwrap_err().is_token_limit());
        let plan = build_prompts(StrategyId::P4, &a, &b, budget).unwrap();
        assert!(plan.messages.len() > 2);
        for m in &plan.messages {
            assert!(m.token_estimate <= budget.available());
        }
        assert!(plan.messages[1].text.starts_with(CONTINUED));
        assert!(plan.messages.last().unwrap().text.ends_with(OBJECTIVE_MAPPING));
    }
}

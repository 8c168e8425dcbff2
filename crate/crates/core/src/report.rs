//! CSV and Markdown rendering of a strategy × pair result grid.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::eval::{macro_average, micro_average, Averages, EvalResult};
use crate::prompt::StrategyId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellStatus {
    Completed { result: EvalResult },
    /// The pair did not fit the token budget for this strategy.
    TokenLimit { message: String },
    Failed { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub pair: String,
    pub strategy: StrategyId,
    #[serde(flatten)]
    pub status: CellStatus,
}

impl CellOutcome {
    pub fn result(&self) -> Option<&EvalResult> {
        match &self.status {
            CellStatus::Completed { result } => Some(result),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    #[default]
    Macro,
    Micro,
}

/// Grid of outcomes with a fixed row (pair) and column (strategy) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultGrid {
    pub pairs: Vec<String>,
    pub strategies: Vec<StrategyId>,
    pub cells: Vec<CellOutcome>,
    pub aggregate: Aggregate,
}

impl ResultGrid {
    pub fn cell(&self, pair: &str, strategy: StrategyId) -> Option<&CellOutcome> {
        self.cells
            .iter()
            .find(|c| c.pair == pair && c.strategy == strategy)
    }

    /// Average over completed pairs; `None` when no pair completed.
    pub fn average(&self, strategy: StrategyId) -> Option<Averages> {
        let results: Vec<EvalResult> = self
            .cells
            .iter()
            .filter(|c| c.strategy == strategy)
            .filter_map(|c| c.result().copied())
            .collect();
        match self.aggregate {
            Aggregate::Macro => macro_average(&results).ok(),
            Aggregate::Micro => micro_average(&results).ok(),
        }
    }

    fn excluded(&self, strategy: StrategyId) -> Vec<&CellOutcome> {
        self.pairs
            .iter()
            .filter_map(|p| self.cell(p, strategy))
            .filter(|c| c.result().is_none())
            .collect()
    }

    /// `pair,strategy,precision,recall,f1,tp,fp,fn`; incomplete cells carry `-`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pair,strategy,precision,recall,f1,tp,fp,fn\n");
        for pair in &self.pairs {
            for &s in &self.strategies {
                match self.cell(pair, s).and_then(CellOutcome::result) {
                    Some(r) => {
                        let _ = writeln!(
                            out,
                            "{pair},{s},{:.6},{:.6},{:.6},{},{},{}",
                            r.precision, r.recall, r.f1, r.tp, r.fp, r.fn_
                        );
                    }
                    None => {
                        let _ = writeln!(out, "{pair},{s},-,-,-,-,-,-");
                    }
                }
            }
        }
        out
    }

    /// Table with one P/R/F1 column group per strategy, one row per pair and an average row.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Dataset |");
        for s in &self.strategies {
            let _ = write!(out, " {s} P | {s} R | {s} F1 |");
        }
        out.push_str("\n|---|");
        for _ in &self.strategies {
            out.push_str("---|---|---|");
        }
        out.push('\n');
        for pair in &self.pairs {
            let _ = write!(out, "| {pair} |");
            for &s in &self.strategies {
                match self.cell(pair, s).map(|c| &c.status) {
                    Some(CellStatus::Completed { result: r }) => {
                        let _ = write!(out, " {:.3} | {:.3} | {:.3} |", r.precision, r.recall, r.f1);
                    }
                    Some(CellStatus::Failed { .. }) => out.push_str(" err | err | err |"),
                    _ => out.push_str(" - | - | - |"),
                }
            }
            out.push('\n');
        }
        let label = match self.aggregate {
            Aggregate::Macro => "Average",
            Aggregate::Micro => "Average (micro)",
        };
        let _ = write!(out, "| {label} |");
        for &s in &self.strategies {
            match self.average(s) {
                Some(a) => {
                    let _ = write!(out, " {:.3} | {:.3} | {:.3} |", a.precision, a.recall, a.f1);
                }
                None => out.push_str(" - | - | - |"),
            }
        }
        out.push('\n');

        let notes: Vec<String> = self
            .strategies
            .iter()
            .filter_map(|&s| {
                let excluded = self.excluded(s);
                if excluded.is_empty() {
                    return None;
                }
                let names: Vec<String> = excluded
                    .iter()
                    .map(|c| match c.status {
                        CellStatus::Failed { .. } => format!("{} (error)", c.pair),
                        _ => c.pair.clone(),
                    })
                    .collect();
                Some(format!("{s}: {}", names.join(", ")))
            })
            .collect();
        if !notes.is_empty() {
            out.push_str("\nCells marked `-` could not be completed within the token budget and are excluded from the averages.\n");
            out.push_str("Excluded pairs per strategy:\n\n");
            for n in notes {
                let _ = writeln!(out, "- {n}");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> ResultGrid {
        let pairs = vec!["a-b".to_string(), "a-c".to_string()];
        let strategies = vec![StrategyId::P1, StrategyId::P7];
        let cells = vec![
            CellOutcome {
                pair: "a-b".into(),
                strategy: StrategyId::P1,
                status: CellStatus::Completed {
                    result: EvalResult::from_counts(1, 1, 0),
                },
            },
            CellOutcome {
                pair: "a-b".into(),
                strategy: StrategyId::P7,
                status: CellStatus::Completed {
                    result: EvalResult::from_counts(1, 0, 0),
                },
            },
            CellOutcome {
                pair: "a-c".into(),
                strategy: StrategyId::P1,
                status: CellStatus::TokenLimit {
                    message: "too long".into(),
                },
            },
            CellOutcome {
                pair: "a-c".into(),
                strategy: StrategyId::P7,
                status: CellStatus::Completed {
                    result: EvalResult::from_counts(0, 1, 1),
                },
            },
        ];
        ResultGrid {
            pairs,
            strategies,
            cells,
            aggregate: Aggregate::Macro,
        }
    }

    #[test]
    fn markdown_shape_and_dashes() {
        let md = grid().to_markdown();
        let rows: Vec<&str> = md.lines().take_while(|l| l.starts_with('|')).collect();
        assert_eq!(rows.len(), 2 + 2 + 1);
        assert_eq!(rows[3], "| a-c | - | - | - | 0.000 | 0.000 | 0.000 |");
        assert_eq!(rows[4], "| Average | 0.500 | 1.000 | 0.667 | 0.500 | 0.500 | 0.500 |");
        assert!(md.contains("- P1: a-c"));
    }

    #[test]
    fn csv_rows() {
        let csv = grid().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[1], "a-b,P1,0.500000,1.000000,0.666667,1,1,0");
        assert_eq!(lines[3], "a-c,P1,-,-,-,-,-,-");
    }
}

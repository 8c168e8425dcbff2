//! Precision / recall / F1 against a reference alignment.

use serde::{Deserialize, Serialize};

use crate::error::{AlignError, Result};
use crate::model::Alignment;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl EvalResult {
    /// Metrics from confusion counts. Empty denominators give 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
        }
    }
}

pub(crate) fn check_pair(predicted: &Alignment, reference: &Alignment) -> Result<()> {
    if predicted.pair != reference.pair {
        return Err(AlignError::PairMismatch {
            expected: reference.pair_name(),
            found: predicted.pair_name(),
        });
    }
    Ok(())
}

/// Score `predicted` against `reference` by (source, target) identity; confidence is ignored.
pub fn evaluate(predicted: &Alignment, reference: &Alignment) -> Result<EvalResult> {
    check_pair(predicted, reference)?;
    let tp = predicted
        .iter()
        .filter(|c| reference.contains(&c.source, &c.target))
        .count();
    Ok(EvalResult::from_counts(
        tp,
        predicted.len() - tp,
        reference.len() - tp,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Unweighted mean of per-pair precision, recall and F1, each taken independently.
pub fn macro_average(results: &[EvalResult]) -> Result<Averages> {
    if results.is_empty() {
        return Err(AlignError::EmptyInput);
    }
    let n = results.len() as f64;
    let mean = |f: fn(&EvalResult) -> f64| results.iter().map(f).sum::<f64>() / n;
    Ok(Averages {
        precision: mean(|r| r.precision),
        recall: mean(|r| r.recall),
        f1: mean(|r| r.f1),
    })
}

/// Metrics of the pooled confusion counts.
pub fn micro_average(results: &[EvalResult]) -> Result<Averages> {
    if results.is_empty() {
        return Err(AlignError::EmptyInput);
    }
    let sum = |f: fn(&EvalResult) -> usize| results.iter().map(f).sum::<usize>();
    let pooled = EvalResult::from_counts(sum(|r| r.tp), sum(|r| r.fp), sum(|r| r.fn_));
    Ok(Averages {
        precision: pooled.precision,
        recall: pooled.recall,
        f1: pooled.f1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Correspondence, EntityId};

    fn al(pairs: &[(&str, &str)]) -> Alignment {
        let mut a = Alignment::new("x", "y");
        for (s, t) in pairs {
            a.insert(Correspondence::new(EntityId::class("x", s), EntityId::class("y", t), 1.0))
                .unwrap();
        }
        a
    }

    #[test]
    fn identity_is_perfect() {
        let r = al(&[("a", "b"), ("c", "d")]);
        let e = evaluate(&r, &r).unwrap();
        assert_eq!((e.precision, e.recall, e.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn counts_example() {
        let e = EvalResult::from_counts(3, 2, 1);
        assert!((e.precision - 0.6).abs() < 1e-9);
        assert!((e.recall - 0.75).abs() < 1e-9);
        assert!((e.f1 - 2.0 / 3.0).abs() < 1e-9);
        assert!((e.f1 - 0.6667).abs() < 1e-4);
    }

    #[test]
    fn empty_prediction_scores_zero() {
        let e = evaluate(&al(&[]), &al(&[("a", "b")])).unwrap();
        assert_eq!((e.tp, e.fp, e.fn_), (0, 0, 1));
        assert_eq!((e.precision, e.recall, e.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn pair_mismatch() {
        let other = Alignment::new("y", "x");
        assert!(matches!(evaluate(&other, &al(&[])), Err(AlignError::PairMismatch { .. })));
    }

    #[test]
    fn macro_examples() {
        let one = EvalResult::from_counts(1, 0, 0);
        let zero = EvalResult::from_counts(0, 1, 1);
        let avg = macro_average(&[one, zero]).unwrap();
        assert_eq!((avg.precision, avg.recall, avg.f1), (0.5, 0.5, 0.5));
        let single = EvalResult::from_counts(3, 2, 1);
        let avg = macro_average(&[single]).unwrap();
        assert_eq!((avg.precision, avg.recall, avg.f1), (single.precision, single.recall, single.f1));
        assert!(matches!(macro_average(&[]), Err(AlignError::EmptyInput)));
    }

    #[test]
    fn micro_pools_counts() {
        let a = EvalResult::from_counts(1, 0, 0);
        let b = EvalResult::from_counts(1, 2, 3);
        let m = micro_average(&[a, b]).unwrap();
        assert!((m.precision - 0.5).abs() < 1e-12);
        assert!((m.recall - 2.0 / 5.0).abs() < 1e-12);
    }
}

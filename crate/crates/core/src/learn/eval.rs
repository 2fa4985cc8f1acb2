use serde::{Deserialize, Serialize};

use super::dataset::Label;
use crate::error::{Error, Result};

/// `counts[predicted][actual]`, indexed by [`Label::index`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionCounts {
    pub fn tally(predicted: &[Label], actual: &[Label]) -> Result<ConfusionCounts> {
        if predicted.len() != actual.len() {
            return Err(Error::LengthMismatch {
                left: predicted.len(),
                right: actual.len(),
            });
        }
        let mut counts = [[0u64; 2]; 2];
        for (p, a) in predicted.iter().zip(actual) {
            counts[p.index()][a.index()] += 1;
        }
        Ok(ConfusionCounts { counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Metrics in percent. The confusion matrix is normalized per actual class,
/// so each column sums to 100 when that class occurs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub positive: Label,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: [[f64; 2]; 2],
    pub n: u64,
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

impl EvalReport {
    pub fn from_counts(c: &ConfusionCounts, positive: Label) -> Result<EvalReport> {
        let n = c.total();
        if n == 0 {
            return Err(Error::EmptySample);
        }
        let (pi, ni) = (positive.index(), positive.other().index());
        let tp = c.counts[pi][pi] as f64;
        let fp = c.counts[pi][ni] as f64;
        let fneg = c.counts[ni][pi] as f64;
        let pct = |a: f64, b: f64| if b > 0.0 { 100.0 * a / b } else { 0.0 };
        let precision = pct(tp, tp + fp);
        let recall = pct(tp, tp + fneg);
        let mut confusion = [[0.0; 2]; 2];
        for actual in 0..2 {
            let col = (c.counts[0][actual] + c.counts[1][actual]) as f64;
            for (pred, row) in confusion.iter_mut().enumerate() {
                row[actual] = pct(c.counts[pred][actual] as f64, col);
            }
        }
        Ok(EvalReport {
            positive,
            accuracy: pct((c.counts[0][0] + c.counts[1][1]) as f64, n as f64),
            precision,
            recall,
            f1: f1_score(precision, recall),
            confusion,
            n,
        })
    }
}

pub fn evaluate(predicted: &[Label], actual: &[Label], positive: Label) -> Result<EvalReport> {
    EvalReport::from_counts(&ConfusionCounts::tally(predicted, actual)?, positive)
}

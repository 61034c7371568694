//! Scoring: TroFi confusion counts and precision/recall, Table-style
//! reconstruction diagnostics, and the five-category qualitative records.

mod qualitative;
mod reconstruct;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{TrofiRecord, Usage};

pub use qualitative::{
    aggregate_qualitative, consensus, AggregateReport, Conflict, ConsensusOutcome, FieldError,
    QualitativeRecord,
};
pub use reconstruct::{
    derive_confusion_from_pr, reconstruct_confusion, residuals, Reconstruction, Residual,
    TargetMetrics,
};

/// A ratio that may be undefined (0/0). Undefined values render as `n/a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub numerator: u64,
    pub denominator: u64,
}

impl Ratio {
    pub fn new(numerator: u64, denominator: u64) -> Self {
        Ratio {
            numerator,
            denominator,
        }
    }

    pub fn value(&self) -> Option<f64> {
        (self.denominator > 0).then(|| self.numerator as f64 / self.denominator as f64)
    }

    /// Two-decimal percentage such as `58.30`, or `n/a`.
    pub fn percent(&self) -> String {
        match self.value() {
            Some(v) => format!("{:.2}", v * 100.0),
            None => "n/a".to_string(),
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.percent())
    }
}

/// Confusion counts with Nonliteral (metaphorical) as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryConfusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl BinaryConfusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn add(&mut self, gold: Usage, predicted: Usage) {
        match (gold, predicted) {
            (Usage::Nonliteral, Usage::Nonliteral) => self.tp += 1,
            (Usage::Literal, Usage::Nonliteral) => self.fp += 1,
            (Usage::Nonliteral, Usage::Literal) => self.fn_ += 1,
            (Usage::Literal, Usage::Literal) => self.tn += 1,
        }
    }

    /// Rows are the true class, columns the predicted class, Nonliteral first.
    pub fn as_rows(&self) -> [[u64; 2]; 2] {
        [[self.tp, self.fn_], [self.fp, self.tn]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision_metaphorical: Ratio,
    pub recall_metaphorical: Ratio,
    pub precision_literal: Ratio,
    pub recall_literal: Ratio,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("record `{0}` scored more than once")]
    DuplicateId(String),
    #[error("invalid qualitative record {key}: {reason}")]
    InvalidRecord { key: String, reason: String },
}

/// Tabulates predictions against gold labels.
pub fn score_trofi(records: &[(&TrofiRecord, Usage)]) -> Result<BinaryConfusion, EvalError> {
    let mut seen = BTreeSet::new();
    let mut cm = BinaryConfusion::default();
    for (record, predicted) in records {
        if !seen.insert(record.id.as_str()) {
            return Err(EvalError::DuplicateId(record.id.clone()));
        }
        cm.add(record.gold, *predicted);
    }
    Ok(cm)
}

pub fn precision_recall(cm: &BinaryConfusion) -> ClassMetrics {
    ClassMetrics {
        precision_metaphorical: Ratio::new(cm.tp, cm.tp + cm.fp),
        recall_metaphorical: Ratio::new(cm.tp, cm.tp + cm.fn_),
        precision_literal: Ratio::new(cm.tn, cm.tn + cm.fn_),
        recall_literal: Ratio::new(cm.tn, cm.tn + cm.fp),
    }
}

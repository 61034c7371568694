//! Five-category human judgments of model output on MWLB sentences.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EvalError, Ratio};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualitativeRecord {
    pub sentence_id: String,
    pub model_id: String,
    pub annotator_id: String,
    pub lj_identified: bool,
    pub lj_basic_correct: bool,
    pub additional: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub additional_metaphorical: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub additional_basic_correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    fn new(field: &str, message: &str) -> Self {
        FieldError {
            field: field.to_string(),
            message: message.to_string(),
        }
    }
}

impl QualitativeRecord {
    /// `sentence_id/model_id/annotator_id`
    pub fn key(&self) -> String {
        format!("{}/{}/{}", self.sentence_id, self.model_id, self.annotator_id)
    }

    pub fn validate(&self) -> Result<(), Vec<FieldError>> {
        let mut errors = Vec::new();
        for (field, value) in [
            ("sentence_id", &self.sentence_id),
            ("model_id", &self.model_id),
            ("annotator_id", &self.annotator_id),
        ] {
            if value.trim().is_empty() {
                errors.push(FieldError::new(field, "must not be empty"));
            }
        }
        if self.lj_basic_correct && !self.lj_identified {
            errors.push(FieldError::new(
                "lj_basic_correct",
                "cannot be true unless lj_identified is true",
            ));
        }
        for (field, value) in [
            ("additional_metaphorical", self.additional_metaphorical),
            ("additional_basic_correct", self.additional_basic_correct),
        ] {
            match (self.additional, value) {
                (false, Some(_)) => {
                    errors.push(FieldError::new(field, "must be absent when additional is false"))
                }
                (true, None) => {
                    errors.push(FieldError::new(field, "is required when additional is true"))
                }
                _ => {}
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    /// The five judgments, ignoring identity and note.
    fn judgments(&self) -> (bool, bool, bool, Option<bool>, Option<bool>) {
        (
            self.lj_identified,
            self.lj_basic_correct,
            self.additional,
            self.additional_metaphorical,
            self.additional_basic_correct,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub n: u64,
    pub pct_lj_identified: Ratio,
    pub pct_lj_basic_correct: Ratio,
    pub pct_additional: Ratio,
    /// Over records with `additional = true` only.
    pub pct_additional_metaphorical: Ratio,
    /// Over records with `additional = true` only.
    pub pct_additional_basic_correct: Ratio,
}

impl AggregateReport {
    pub const SUB_BAR_DENOMINATOR: &'static str = "records with additional = true";
}

pub fn aggregate_qualitative(records: &[QualitativeRecord]) -> Result<AggregateReport, EvalError> {
    let n = records.len() as u64;
    let (mut ident, mut basic, mut additional, mut add_met, mut add_basic) = (0, 0, 0, 0, 0);
    for record in records {
        if let Err(errors) = record.validate() {
            let reason = errors
                .iter()
                .map(|e| format!("{} {}", e.field, e.message))
                .collect::<Vec<_>>()
                .join("; ");
            return Err(EvalError::InvalidRecord {
                key: record.key(),
                reason,
            });
        }
        ident += record.lj_identified as u64;
        basic += record.lj_basic_correct as u64;
        if record.additional {
            additional += 1;
            add_met += (record.additional_metaphorical == Some(true)) as u64;
            add_basic += (record.additional_basic_correct == Some(true)) as u64;
        }
    }
    Ok(AggregateReport {
        n,
        pct_lj_identified: Ratio::new(ident, n),
        pct_lj_basic_correct: Ratio::new(basic, n),
        pct_additional: Ratio::new(additional, n),
        pct_additional_metaphorical: Ratio::new(add_met, additional),
        pct_additional_basic_correct: Ratio::new(add_basic, additional),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    pub sentence_id: String,
    pub model_id: String,
    pub records: Vec<QualitativeRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsensusOutcome {
    pub merged: Vec<QualitativeRecord>,
    pub conflicts: Vec<Conflict>,
}

/// Groups by (sentence, model). Groups whose annotators agree on all five
/// judgments collapse to one record; any disagreement yields a conflict.
pub fn consensus(records: &[QualitativeRecord]) -> ConsensusOutcome {
    let mut groups: BTreeMap<(&str, &str), Vec<&QualitativeRecord>> = BTreeMap::new();
    for record in records {
        groups
            .entry((record.sentence_id.as_str(), record.model_id.as_str()))
            .or_default()
            .push(record);
    }

    let mut outcome = ConsensusOutcome::default();
    for ((sentence_id, model_id), group) in groups {
        let first = group[0];
        if group.iter().all(|r| r.judgments() == first.judgments()) {
            let mut annotators: Vec<&str> = group.iter().map(|r| r.annotator_id.as_str()).collect();
            annotators.sort_unstable();
            annotators.dedup();
            let mut notes: Vec<&str> = Vec::new();
            for r in &group {
                if let Some(note) = r.note.as_deref().filter(|n| !n.trim().is_empty()) {
                    if !notes.contains(&note) {
                        notes.push(note);
                    }
                }
            }
            let mut merged = first.clone();
            merged.annotator_id = annotators.join("+");
            merged.note = (!notes.is_empty()).then(|| notes.join(" | "));
            outcome.merged.push(merged);
        } else {
            outcome.conflicts.push(Conflict {
                sentence_id: sentence_id.to_string(),
                model_id: model_id.to_string(),
                records: group.into_iter().cloned().collect(),
            });
        }
    }
    outcome
}

//! Aligning parsed annotation units back onto source tokens and projecting
//! their judgments, including phrase propagation and the missing-label rule.
//!
//! Models drop, merge and restyle words, so units are aligned to tokens with
//! a monotone minimum-cost alignment:
//!
//! | op | cost |
//! |----|------|
//! | word unit equals token (normalized) | 0 |
//! | phrase unit equals a run of tokens (normalized, separators ignored) | 0 |
//! | word unit similar to token (normalized Levenshtein >= 0.5) | 1 |
//! | token left unannotated | 2, or 0 for punctuation tokens |
//! | unit with no token | 2, or 0 for punctuation units |
//!
//! Equal-cost paths are broken while backtracking from the end, preferring
//! match, then substitute, then delete, then insert; among phrase matches the
//! one starting leftmost wins.

#[cfg(any(test, feature = "test-oracles"))]
pub mod oracle;

use serde::{Deserialize, Serialize};

use crate::corpus::{Token, Usage};
use crate::normalize::{is_punctuation_only, normalize_surface, phrase_key};
use crate::parser::{BasicMeaningJudgment, UnitAnnotation, UnitKind};

pub const SUBSTITUTE_COST: u32 = 1;
pub const DELETE_COST: u32 = 2;
pub const INSERT_COST: u32 = 2;
pub const MIN_SIMILARITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AlignmentOp {
    /// Unit matched tokens `source_start..source_end`; more than one token
    /// only for phrase units.
    Match {
        source_start: usize,
        source_end: usize,
        unit: usize,
    },
    Substitute {
        source: usize,
        unit: usize,
    },
    DeleteSource {
        source: usize,
    },
    InsertUnit {
        unit: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentMap {
    pub ops: Vec<AlignmentOp>,
    pub cost: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelProvenance {
    Direct,
    PhrasePropagated,
    Missing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenLabel {
    pub token_index: usize,
    pub judgment: BasicMeaningJudgment,
    pub provenance: LabelProvenance,
}

/// How a YES/NO basic-meaning answer maps onto usage classes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JudgmentMapping {
    /// A more basic meaning exists, so the contextual use is metaphorical.
    #[default]
    YesNonliteral,
    /// The literal reading of the TroFi correctness sentence.
    YesLiteral,
}

impl JudgmentMapping {
    pub fn usage(self, judgment: BasicMeaningJudgment) -> Option<Usage> {
        let yes = match judgment {
            BasicMeaningJudgment::Yes => true,
            BasicMeaningJudgment::No => false,
            BasicMeaningJudgment::Unmarked => return None,
        };
        Some(match (self, yes) {
            (JudgmentMapping::YesNonliteral, true) | (JudgmentMapping::YesLiteral, false) => {
                Usage::Nonliteral
            }
            _ => Usage::Literal,
        })
    }

    pub fn inverted(self) -> Self {
        match self {
            JudgmentMapping::YesNonliteral => JudgmentMapping::YesLiteral,
            JudgmentMapping::YesLiteral => JudgmentMapping::YesNonliteral,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JudgmentMapping::YesNonliteral => "yes-nonliteral",
            JudgmentMapping::YesLiteral => "yes-literal",
        }
    }
}

impl std::str::FromStr for JudgmentMapping {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "yes-nonliteral" => Ok(JudgmentMapping::YesNonliteral),
            "yes-literal" => Ok(JudgmentMapping::YesLiteral),
            other => Err(format!(
                "unknown mapping `{other}` (expected yes-nonliteral or yes-literal)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionSource {
    /// At least one focus occurrence carried a judgment.
    Judged,
    /// No focus occurrence was labeled; the prediction is forced wrong.
    MissingPenalty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Prediction {
    pub usage: Usage,
    pub source: PredictionSource,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlignmentError {
    #[error("alignment map does not fit its inputs: {0}")]
    InconsistentMap(String),
    #[error("no focus indices given")]
    EmptyFocus,
    #[error("focus index {index} out of range for {len} labels")]
    FocusOutOfRange { index: usize, len: usize },
}

struct Prepared {
    token_norm: Vec<String>,
    token_key: Vec<String>,
    token_punct: Vec<bool>,
    unit_norm: Vec<String>,
    unit_key: Vec<String>,
    unit_punct: Vec<bool>,
    unit_phrase: Vec<bool>,
}

impl Prepared {
    fn new(tokens: &[Token], units: &[UnitAnnotation]) -> Self {
        Prepared {
            token_norm: tokens.iter().map(|t| normalize_surface(&t.surface)).collect(),
            token_key: tokens.iter().map(|t| phrase_key(&t.surface)).collect(),
            token_punct: tokens.iter().map(|t| is_punctuation_only(&t.surface)).collect(),
            unit_norm: units.iter().map(|u| normalize_surface(&u.surface)).collect(),
            unit_key: units.iter().map(|u| phrase_key(&u.surface)).collect(),
            unit_punct: units.iter().map(|u| is_punctuation_only(&u.surface)).collect(),
            unit_phrase: units.iter().map(|u| u.kind == UnitKind::Phrase).collect(),
        }
    }

    fn delete_cost(&self, i: usize) -> u32 {
        if self.token_punct[i] {
            0
        } else {
            DELETE_COST
        }
    }

    fn insert_cost(&self, j: usize) -> u32 {
        if self.unit_punct[j] {
            0
        } else {
            INSERT_COST
        }
    }

    /// Cost of pairing word unit `j` with token `i`, if allowed.
    fn pair_cost(&self, i: usize, j: usize) -> Option<u32> {
        if self.unit_phrase[j] {
            return None;
        }
        let (a, b) = (&self.token_norm[i], &self.unit_norm[j]);
        if a == b {
            Some(0)
        } else if strsim::normalized_levenshtein(a, b) >= MIN_SIMILARITY {
            Some(SUBSTITUTE_COST)
        } else {
            None
        }
    }

    /// Start indices `s` (descending) such that phrase unit `j` matches tokens
    /// `s..end`. Runs must begin and end on a word token.
    fn phrase_starts(&self, end: usize, j: usize) -> Vec<usize> {
        let mut out = Vec::new();
        if !self.unit_phrase[j] || end == 0 || self.token_punct[end - 1] {
            return out;
        }
        let target = &self.unit_key[j];
        if target.is_empty() {
            return out;
        }
        let mut acc = String::new();
        for s in (0..end).rev() {
            acc.insert_str(0, &self.token_key[s]);
            if acc.len() > target.len() {
                break;
            }
            if !self.token_punct[s] && acc == *target {
                out.push(s);
            }
        }
        out
    }
}

/// Minimum-cost monotone alignment of `units` onto `tokens`.
pub fn align(tokens: &[Token], units: &[UnitAnnotation]) -> AlignmentMap {
    let p = Prepared::new(tokens, units);
    let (n, m) = (tokens.len(), units.len());
    let mut cost = vec![vec![u32::MAX; m + 1]; n + 1];
    cost[0][0] = 0;
    for i in 0..=n {
        for j in 0..=m {
            if i == 0 && j == 0 {
                continue;
            }
            let mut best = u32::MAX;
            if i > 0 {
                best = best.min(cost[i - 1][j].saturating_add(p.delete_cost(i - 1)));
            }
            if j > 0 {
                best = best.min(cost[i][j - 1].saturating_add(p.insert_cost(j - 1)));
            }
            if i > 0 && j > 0 {
                if let Some(c) = p.pair_cost(i - 1, j - 1) {
                    best = best.min(cost[i - 1][j - 1].saturating_add(c));
                }
                for s in p.phrase_starts(i, j - 1) {
                    best = best.min(cost[s][j - 1]);
                }
            }
            cost[i][j] = best;
        }
    }

    let mut ops = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = cost[i][j];
        if i > 0 && j > 0 {
            // Leftmost phrase start first (phrase_starts is descending).
            if let Some(&s) = p
                .phrase_starts(i, j - 1)
                .iter()
                .rev()
                .find(|&&s| cost[s][j - 1] == here)
            {
                ops.push(AlignmentOp::Match {
                    source_start: s,
                    source_end: i,
                    unit: j - 1,
                });
                i = s;
                j -= 1;
                continue;
            }
            match p.pair_cost(i - 1, j - 1) {
                Some(0) if cost[i - 1][j - 1] == here => {
                    ops.push(AlignmentOp::Match {
                        source_start: i - 1,
                        source_end: i,
                        unit: j - 1,
                    });
                    i -= 1;
                    j -= 1;
                    continue;
                }
                Some(c) if c > 0 && cost[i - 1][j - 1].saturating_add(c) == here => {
                    ops.push(AlignmentOp::Substitute {
                        source: i - 1,
                        unit: j - 1,
                    });
                    i -= 1;
                    j -= 1;
                    continue;
                }
                _ => {}
            }
        }
        if i > 0 && cost[i - 1][j].saturating_add(p.delete_cost(i - 1)) == here {
            ops.push(AlignmentOp::DeleteSource { source: i - 1 });
            i -= 1;
            continue;
        }
        debug_assert!(j > 0);
        ops.push(AlignmentOp::InsertUnit { unit: j - 1 });
        j -= 1;
    }
    ops.reverse();
    AlignmentMap {
        ops,
        cost: cost[n][m],
    }
}

/// Checks that `map` covers every token and unit exactly once, in order.
pub fn check_map(map: &AlignmentMap, n_tokens: usize, n_units: usize) -> Result<(), AlignmentError> {
    let bad = |msg: String| Err(AlignmentError::InconsistentMap(msg));
    let (mut next_token, mut next_unit) = (0usize, 0usize);
    for op in &map.ops {
        let (tokens, unit) = match *op {
            AlignmentOp::Match {
                source_start,
                source_end,
                unit,
            } => {
                if source_end <= source_start {
                    return bad(format!("empty match range {source_start}..{source_end}"));
                }
                (Some((source_start, source_end)), Some(unit))
            }
            AlignmentOp::Substitute { source, unit } => (Some((source, source + 1)), Some(unit)),
            AlignmentOp::DeleteSource { source } => (Some((source, source + 1)), None),
            AlignmentOp::InsertUnit { unit } => (None, Some(unit)),
        };
        if let Some((s, e)) = tokens {
            if s != next_token || e > n_tokens {
                return bad(format!("token range {s}..{e} out of order or bounds"));
            }
            next_token = e;
        }
        if let Some(u) = unit {
            if u != next_unit || u >= n_units {
                return bad(format!("unit {u} out of order or bounds"));
            }
            next_unit = u + 1;
        }
    }
    if next_token != n_tokens || next_unit != n_units {
        return bad(format!(
            "covers {next_token}/{n_tokens} tokens and {next_unit}/{n_units} units"
        ));
    }
    Ok(())
}

/// One label per token. Phrase judgments are copied to every token the phrase
/// covers; unlinked tokens and Unmarked units become `Missing`.
pub fn project_labels(
    tokens: &[Token],
    units: &[UnitAnnotation],
    map: &AlignmentMap,
) -> Result<Vec<TokenLabel>, AlignmentError> {
    check_map(map, tokens.len(), units.len())?;
    let missing = |token_index| TokenLabel {
        token_index,
        judgment: BasicMeaningJudgment::Unmarked,
        provenance: LabelProvenance::Missing,
    };
    let mut labels: Vec<TokenLabel> = (0..tokens.len()).map(missing).collect();
    for op in &map.ops {
        let (range, unit) = match *op {
            AlignmentOp::Match {
                source_start,
                source_end,
                unit,
            } => (source_start..source_end, unit),
            AlignmentOp::Substitute { source, unit } => (source..source + 1, unit),
            _ => continue,
        };
        let u = &units[unit];
        if u.judgment == BasicMeaningJudgment::Unmarked {
            continue;
        }
        let provenance = match u.kind {
            UnitKind::Phrase => LabelProvenance::PhrasePropagated,
            UnitKind::Word => LabelProvenance::Direct,
        };
        for i in range {
            labels[i] = TokenLabel {
                token_index: i,
                judgment: u.judgment,
                provenance,
            };
        }
    }
    Ok(labels)
}

/// Predicted usage of the focus word.
///
/// Labeled occurrences vote through `mapping`; ties go to the first labeled
/// occurrence. When no occurrence is labeled the prediction is the opposite
/// of `gold`, so a missing label always counts as wrong.
pub fn focus_prediction(
    labels: &[TokenLabel],
    focus_indices: &[usize],
    gold: Usage,
    mapping: JudgmentMapping,
) -> Result<Prediction, AlignmentError> {
    if focus_indices.is_empty() {
        return Err(AlignmentError::EmptyFocus);
    }
    let mut votes = Vec::with_capacity(focus_indices.len());
    for &index in focus_indices {
        let label = labels.get(index).ok_or(AlignmentError::FocusOutOfRange {
            index,
            len: labels.len(),
        })?;
        if label.provenance == LabelProvenance::Missing {
            continue;
        }
        if let Some(u) = mapping.usage(label.judgment) {
            votes.push(u);
        }
    }
    let Some(&first) = votes.first() else {
        return Ok(Prediction {
            usage: gold.opposite(),
            source: PredictionSource::MissingPenalty,
        });
    };
    let nonliteral = votes.iter().filter(|u| **u == Usage::Nonliteral).count();
    let literal = votes.len() - nonliteral;
    let usage = match nonliteral.cmp(&literal) {
        std::cmp::Ordering::Greater => Usage::Nonliteral,
        std::cmp::Ordering::Less => Usage::Literal,
        std::cmp::Ordering::Equal => first,
    };
    Ok(Prediction {
        usage,
        source: PredictionSource::Judged,
    })
}

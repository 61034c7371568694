//! Exhaustive reference for [`align`](super::align), for tests only.
//!
//! Enumerates every monotone op sequence and scores it from the surfaces
//! with its own edit-distance routine. Exponential in input length.

use super::{AlignmentMap, AlignmentOp, DELETE_COST, INSERT_COST, MIN_SIMILARITY, SUBSTITUTE_COST};
use crate::corpus::Token;
use crate::normalize::{is_punctuation_only, normalize_surface, phrase_key};
use crate::parser::{UnitAnnotation, UnitKind};

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut row = vec![i + 1; b.len() + 1];
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            row[j + 1] = sub.min(prev[j + 1] + 1).min(row[j] + 1);
        }
        prev = row;
    }
    prev[b.len()]
}

fn similarity(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

/// Cost of one op, or `None` if the op is not allowed.
pub fn op_cost(tokens: &[Token], units: &[UnitAnnotation], op: &AlignmentOp) -> Option<u32> {
    let punct_token = |i: usize| is_punctuation_only(&tokens[i].surface);
    match *op {
        AlignmentOp::DeleteSource { source } => {
            Some(if punct_token(source) { 0 } else { DELETE_COST })
        }
        AlignmentOp::InsertUnit { unit } => Some(if is_punctuation_only(&units[unit].surface) {
            0
        } else {
            INSERT_COST
        }),
        AlignmentOp::Substitute { source, unit } => {
            let u = &units[unit];
            let (a, b) = (normalize_surface(&tokens[source].surface), normalize_surface(&u.surface));
            (u.kind == UnitKind::Word && a != b && similarity(&a, &b) >= MIN_SIMILARITY)
                .then_some(SUBSTITUTE_COST)
        }
        AlignmentOp::Match {
            source_start,
            source_end,
            unit,
        } => {
            let u = &units[unit];
            match u.kind {
                UnitKind::Word => (source_end == source_start + 1
                    && normalize_surface(&tokens[source_start].surface)
                        == normalize_surface(&u.surface))
                .then_some(0),
                UnitKind::Phrase => {
                    let joined: String = tokens[source_start..source_end]
                        .iter()
                        .map(|t| phrase_key(&t.surface))
                        .collect();
                    let key = phrase_key(&u.surface);
                    (!key.is_empty()
                        && !punct_token(source_start)
                        && !punct_token(source_end - 1)
                        && joined == key)
                        .then_some(0)
                }
            }
        }
    }
}

/// Recomputes the cost of a map op by op; `None` if any op is disallowed.
pub fn score_map(tokens: &[Token], units: &[UnitAnnotation], map: &AlignmentMap) -> Option<u32> {
    map.ops.iter().map(|op| op_cost(tokens, units, op)).sum()
}

/// Minimum cost over every monotone alignment, by exhaustive enumeration.
pub fn brute_force_min_cost(tokens: &[Token], units: &[UnitAnnotation]) -> u32 {
    let mut best = u32::MAX;
    let mut count = 0usize;
    walk(tokens, units, 0, 0, 0, &mut best, &mut count);
    best
}

/// Number of distinct monotone alignments (for sanity checks on the oracle).
pub fn alignment_count(tokens: &[Token], units: &[UnitAnnotation]) -> usize {
    let mut best = u32::MAX;
    let mut count = 0usize;
    walk(tokens, units, 0, 0, 0, &mut best, &mut count);
    count
}

fn walk(
    tokens: &[Token],
    units: &[UnitAnnotation],
    i: usize,
    j: usize,
    acc: u32,
    best: &mut u32,
    count: &mut usize,
) {
    if i == tokens.len() && j == units.len() {
        *count += 1;
        *best = (*best).min(acc);
        return;
    }
    let step = |op: AlignmentOp, ni: usize, nj: usize, best: &mut u32, count: &mut usize| {
        if let Some(c) = op_cost(tokens, units, &op) {
            walk(tokens, units, ni, nj, acc + c, best, count);
        }
    };
    if i < tokens.len() {
        step(AlignmentOp::DeleteSource { source: i }, i + 1, j, best, count);
    }
    if j < units.len() {
        step(AlignmentOp::InsertUnit { unit: j }, i, j + 1, best, count);
    }
    if i < tokens.len() && j < units.len() {
        step(AlignmentOp::Substitute { source: i, unit: j }, i + 1, j + 1, best, count);
        for end in i + 1..=tokens.len() {
            let op = AlignmentOp::Match {
                source_start: i,
                source_end: end,
                unit: j,
            };
            step(op, end, j + 1, best, count);
        }
    }
}

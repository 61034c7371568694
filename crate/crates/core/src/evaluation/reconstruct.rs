//! Recovers integer confusion matrices consistent with published
//! precision/recall figures.

use serde::{Deserialize, Serialize};

use super::{precision_recall, BinaryConfusion};

/// Four fractions in [0, 1], ordered as (p_m, r_m, p_l, r_l).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetMetrics {
    pub precision_metaphorical: f64,
    pub recall_metaphorical: f64,
    pub precision_literal: f64,
    pub recall_literal: f64,
}

impl TargetMetrics {
    pub fn as_array(&self) -> [f64; 4] {
        [
            self.precision_metaphorical,
            self.recall_metaphorical,
            self.precision_literal,
            self.recall_literal,
        ]
    }
}

/// How far one matrix lands from the targets, in percentage points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub matrix: BinaryConfusion,
    /// Signed (recomputed - target) per metric, same order as [`TargetMetrics`].
    pub residuals_pp: [f64; 4],
    pub max_abs_pp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub targets: TargetMetrics,
    pub total: u64,
    pub tolerance_pp: f64,
    pub candidates: Vec<BinaryConfusion>,
    /// Closest matrix found. Always present when total > 0.
    pub best: Option<Residual>,
}

impl Reconstruction {
    pub fn is_consistent(&self) -> bool {
        !self.candidates.is_empty()
    }
}

const EPS: f64 = 1e-9;

/// Signed residuals, or None when any metric is undefined for `cm`.
pub fn residuals(cm: &BinaryConfusion, targets: &TargetMetrics) -> Option<Residual> {
    let m = precision_recall(cm);
    let got = [
        m.precision_metaphorical.value()?,
        m.recall_metaphorical.value()?,
        m.precision_literal.value()?,
        m.recall_literal.value()?,
    ];
    let want = targets.as_array();
    let mut residuals_pp = [0.0; 4];
    let mut max_abs_pp: f64 = 0.0;
    for i in 0..4 {
        residuals_pp[i] = (got[i] - want[i]) * 100.0;
        max_abs_pp = max_abs_pp.max(residuals_pp[i].abs());
    }
    Some(Residual {
        matrix: *cm,
        residuals_pp,
        max_abs_pp,
    })
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol + EPS
}

/// All matrices summing to `total` whose four metrics each lie within
/// `tolerance_pp` percentage points of the inputs. Undefined metrics never match.
pub fn derive_confusion_from_pr(
    p_m: f64,
    r_m: f64,
    p_l: f64,
    r_l: f64,
    total: u64,
    tolerance_pp: f64,
) -> Vec<BinaryConfusion> {
    let targets = TargetMetrics {
        precision_metaphorical: p_m,
        recall_metaphorical: r_m,
        precision_literal: p_l,
        recall_literal: r_l,
    };
    reconstruct_confusion(targets, total, tolerance_pp).candidates
}

pub fn reconstruct_confusion(targets: TargetMetrics, total: u64, tolerance_pp: f64) -> Reconstruction {
    let tolerance_pp = tolerance_pp.max(0.0);
    let candidates = search(&targets, total, tolerance_pp, usize::MAX);
    let best = if candidates.is_empty() {
        closest(&targets, total, tolerance_pp)
    } else {
        best_of(&candidates, &targets)
    };
    Reconstruction {
        targets,
        total,
        tolerance_pp,
        candidates,
        best,
    }
}

fn best_of(matrices: &[BinaryConfusion], targets: &TargetMetrics) -> Option<Residual> {
    matrices
        .iter()
        .filter_map(|cm| residuals(cm, targets))
        .min_by(|a, b| a.max_abs_pp.total_cmp(&b.max_abs_pp))
}

/// Smallest tolerance above `floor_pp` admitting any matrix, found by
/// bisection, and the best matrix at that tolerance.
fn closest(targets: &TargetMetrics, total: u64, floor_pp: f64) -> Option<Residual> {
    let mut hi = 100.0;
    if search(targets, total, hi, 1).is_empty() {
        return None;
    }
    let mut lo = floor_pp;
    while hi - lo > 1e-4 {
        let mid = (lo + hi) / 2.0;
        if search(targets, total, mid, 1).is_empty() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best_of(&search(targets, total, hi, usize::MAX), targets)
}

/// Integer search over (tp, fn) class splits; stops after `limit` hits.
fn search(targets: &TargetMetrics, total: u64, tolerance_pp: f64, limit: usize) -> Vec<BinaryConfusion> {
    let tol = tolerance_pp / 100.0;
    let [p_m, r_m, _, _] = targets.as_array();
    let mut found = Vec::new();
    // positives = tp + fn, the metaphorical class size; both classes must be
    // non-empty or a recall is undefined
    for positives in 1..total {
        let negatives = total - positives;
        for tp in 0..=positives {
            if !within(tp as f64 / positives as f64, r_m, tol) {
                continue;
            }
            let fn_ = positives - tp;
            let (lo, hi) = fp_window(tp, p_m, tol, negatives);
            for fp in lo..=hi {
                let cm = BinaryConfusion {
                    tp,
                    fp,
                    fn_,
                    tn: negatives - fp,
                };
                if residuals(&cm, targets).is_some_and(|r| r.max_abs_pp <= tolerance_pp + EPS * 100.0) {
                    found.push(cm);
                    if found.len() >= limit {
                        return found;
                    }
                }
            }
        }
    }
    found
}

/// Range of fp values that can keep tp/(tp+fp) within tolerance of `p`,
/// widened by one on each side and clamped; callers re-check exactly.
fn fp_window(tp: u64, p: f64, tol: f64, negatives: u64) -> (u64, u64) {
    let lo_p = p - tol;
    let hi_p = p + tol;
    let tp = tp as f64;
    let upper = if lo_p <= 0.0 {
        negatives as f64
    } else {
        tp * (1.0 - lo_p) / lo_p + 1.0
    };
    let lower = if hi_p >= 1.0 {
        0.0
    } else {
        tp * (1.0 - hi_p) / hi_p - 1.0
    };
    let lower = lower.max(0.0).floor() as u64;
    let upper = (upper.min(negatives as f64).ceil() as u64).min(negatives);
    (lower.min(upper), upper)
}

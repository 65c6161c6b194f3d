//! Empirical ROC curves and the AUC estimator with the half-credit tie kernel.
//!
//! The AUC is the fraction of case/control pairs in which the case scores
//! higher, counting ties as one half. [`auc`] uses a sort-and-group rank
//! method and accumulates twice the Mann-Whitney statistic as an integer,
//! so its result equals the literal double sum in [`auc_oracle`] exactly
//! (for `f64` and fewer than 2^52 pairs).

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Tie kernel: 1 if the case outranks the control, 1/2 on ties, 0 otherwise.
pub fn psi<S: Scalar>(case: S, control: S) -> S {
    match case.partial_cmp(&control) {
        Some(Ordering::Greater) => S::one(),
        Some(Ordering::Equal) => S::half(),
        _ => S::zero(),
    }
}

fn check_scores<S: Scalar>(cases: &[S], controls: &[S]) -> Result<()> {
    if cases.is_empty() || controls.is_empty() {
        return Err(Error::usage("AUC needs at least one case and one control score"));
    }
    if cases.iter().chain(controls).any(|s| s.is_nan()) {
        return Err(Error::usage("AUC scores must not be NaN"));
    }
    Ok(())
}

/// Converts twice the Mann-Whitney U statistic into an AUC value.
pub(crate) fn auc_from_twice_u<S: Scalar>(twice_u: u64, n_cases: u64, n_controls: u64) -> S {
    S::from_count(twice_u) * S::half() / S::from_count(n_cases * n_controls)
}

/// Twice the Mann-Whitney U statistic for score groups given in ascending
/// score order, each group as `(cases, controls)` sharing one score value.
pub(crate) fn twice_u_from_groups(groups: impl IntoIterator<Item = (u64, u64)>) -> u64 {
    let mut controls_below = 0u64;
    let mut twice_u = 0u64;
    for (cases, controls) in groups {
        twice_u += 2 * cases * controls_below + cases * controls;
        controls_below += controls;
    }
    twice_u
}

/// Scores merged and sorted ascending, grouped into ties of
/// `(score, cases, controls)`.
fn tie_groups<S: Scalar>(cases: &[S], controls: &[S]) -> Vec<(S, u64, u64)> {
    let mut all: Vec<(S, bool)> =
        cases.iter().map(|&s| (s, true)).chain(controls.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("NaN rejected"));
    let mut groups: Vec<(S, u64, u64)> = Vec::new();
    for (s, is_case) in all {
        match groups.last_mut() {
            Some(g) if g.0 == s => {
                if is_case {
                    g.1 += 1
                } else {
                    g.2 += 1
                }
            }
            _ => groups.push((s, is_case as u64, (!is_case) as u64)),
        }
    }
    groups
}

/// Area under the ROC curve, `O(n log n)`.
pub fn auc<S: Scalar>(cases: &[S], controls: &[S]) -> Result<S> {
    check_scores(cases, controls)?;
    let groups = tie_groups(cases, controls);
    let twice_u = twice_u_from_groups(groups.iter().map(|g| (g.1, g.2)));
    Ok(auc_from_twice_u(twice_u, cases.len() as u64, controls.len() as u64))
}

/// Area under the ROC curve by the explicit double sum over all
/// case/control pairs. Quadratic; kept as an independent reference.
pub fn auc_oracle<S: Scalar>(cases: &[S], controls: &[S]) -> Result<S> {
    check_scores(cases, controls)?;
    let mut sum = S::zero();
    for &c in cases {
        for &d in controls {
            sum = sum + psi(c, d);
        }
    }
    Ok(sum / S::from_count((cases.len() * controls.len()) as u64))
}

/// Empirical ROC curve: (false-positive rate, true-positive rate) points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve<S> {
    pub points: Vec<(S, S)>,
    pub auc: S,
}

impl<S: Scalar> RocCurve<S> {
    /// Trapezoid-rule area under `points`.
    pub fn trapezoid_area(&self) -> S {
        self.points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * S::half()).fold(S::zero(), |a, b| a + b)
    }

    /// `fpr<TAB>tpr` table with six decimals.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("fpr\ttpr\n");
        for (fpr, tpr) in &self.points {
            let _ = writeln!(out, "{fpr:.6}\t{tpr:.6}");
        }
        out
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}

/// ROC curve with one point per distinct threshold, thresholds descending.
pub fn roc_points<S: Scalar>(cases: &[S], controls: &[S]) -> Result<RocCurve<S>> {
    check_scores(cases, controls)?;
    let groups = tie_groups(cases, controls);
    let n_cases = cases.len() as u64;
    let n_controls = controls.len() as u64;
    let mut points = Vec::with_capacity(groups.len() + 1);
    points.push((S::zero(), S::zero()));
    let (mut tp, mut fp) = (0u64, 0u64);
    for &(_, c, d) in groups.iter().rev() {
        tp += c;
        fp += d;
        points.push((S::from_count(fp) / S::from_count(n_controls), S::from_count(tp) / S::from_count(n_cases)));
    }
    let twice_u = twice_u_from_groups(groups.iter().map(|g| (g.1, g.2)));
    Ok(RocCurve { points, auc: auc_from_twice_u(twice_u, n_cases, n_controls) })
}

/// Splits scores by label.
pub fn split_by_label<S: Copy>(scores: &[S], is_case: &[bool]) -> (Vec<S>, Vec<S>) {
    let mut cases = Vec::new();
    let mut controls = Vec::new();
    for (&s, &c) in scores.iter().zip(is_case) {
        if c {
            cases.push(s)
        } else {
            controls.push(s)
        }
    }
    (cases, controls)
}

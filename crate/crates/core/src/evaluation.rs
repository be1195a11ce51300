//! Confusion labels and recovery metrics against a known ground truth.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::deduction::DeductionResult;
use crate::error::{Error, Result};
use crate::graph::CandidateSet;
use crate::likelihood::Selection;
use crate::model::ValueVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfusionLabel {
    Deduced,
    TruePositive,
    FalsePositive,
    FalseNegative,
    TrueNegative,
}

fn truth_flags(cands: &CandidateSet, truth: &BTreeSet<ValueVector>) -> Vec<bool> {
    let mut flags = vec![false; cands.len()];
    for row in truth {
        if let Some(k) = cands.find(row) {
            flags[k] = true;
        }
    }
    flags
}

pub fn classify(
    cands: &CandidateSet,
    ded: &DeductionResult,
    sel: &Selection,
    truth: &BTreeSet<ValueVector>,
) -> Result<Vec<ConfusionLabel>> {
    if let Some(&k) = sel.chosen.iter().find(|&&k| ded.contains(k)) {
        return Err(Error::InvalidSelection(k));
    }
    let is_true = truth_flags(cands, truth);
    let chosen: BTreeSet<usize> = sel.chosen.iter().copied().collect();
    Ok((0..cands.len())
        .map(|k| match (ded.contains(k), chosen.contains(&k), is_true[k]) {
            (true, _, _) => ConfusionLabel::Deduced,
            (false, true, true) => ConfusionLabel::TruePositive,
            (false, true, false) => ConfusionLabel::FalsePositive,
            (false, false, true) => ConfusionLabel::FalseNegative,
            (false, false, false) => ConfusionLabel::TrueNegative,
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionMetrics {
    pub truth_count: usize,
    pub candidate_count: usize,
    pub phantom_count: usize,
    pub deduced_count: usize,
    pub deduced_correct: usize,
    pub slots: usize,
    /// True rows among the undeduced candidates.
    pub undeduced_true: usize,
    pub undeduced_count: usize,
    pub actual_selected_correct: usize,
    pub full_recovery: bool,
    pub proportion_recovered: f64,
    /// Recovery expected if the slots were filled uniformly at random from
    /// the undeduced candidates.
    pub expected_random: f64,
}

pub fn compute_metrics(
    cands: &CandidateSet,
    ded: &DeductionResult,
    sel: &Selection,
    truth: &BTreeSet<ValueVector>,
) -> ReconstructionMetrics {
    let is_true = truth_flags(cands, truth);
    let truth_in_cands = is_true.iter().filter(|&&t| t).count();
    let deduced_correct = ded.deduced.iter().filter(|&&k| is_true[k]).count();
    let actual_selected_correct = sel
        .chosen
        .iter()
        .filter(|&&k| !ded.contains(k) && is_true[k])
        .count();
    let undeduced_count = cands.len() - ded.len();
    let undeduced_true = truth_in_cands - deduced_correct;
    let slots = sel.chosen.len();
    let truth_count = truth.len();
    let ratio = |x: f64| {
        if truth_count == 0 {
            1.0
        } else {
            x / truth_count as f64
        }
    };
    let random_hits = if undeduced_count == 0 {
        0.0
    } else {
        slots as f64 * undeduced_true as f64 / undeduced_count as f64
    };
    let recovered = deduced_correct + actual_selected_correct;
    ReconstructionMetrics {
        truth_count,
        candidate_count: cands.len(),
        phantom_count: cands.len() - truth_in_cands,
        deduced_count: ded.len(),
        deduced_correct,
        slots,
        undeduced_true,
        undeduced_count,
        actual_selected_correct,
        full_recovery: recovered == truth_count,
        proportion_recovered: ratio(recovered as f64),
        expected_random: ratio(deduced_correct as f64 + random_hits),
    }
}

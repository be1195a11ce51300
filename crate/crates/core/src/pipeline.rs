use std::collections::BTreeSet;

use crate::deduction::{deduce_doubles, DeductionResult};
use crate::error::{Error, Result};
use crate::evaluation::{classify, compute_metrics, ConfusionLabel, ReconstructionMetrics};
use crate::graph::{build_graph, enumerate_candidates_capped, CandidateSet, DEFAULT_CANDIDATE_CAP};
use crate::likelihood::{
    build_statements, score_candidates, select_rows, EdgeStatement, ScoredCandidates, Selection,
    WeightMode,
};
use crate::model::{ProjectionSet, ValueVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PipelineOptions {
    pub weight_mode: WeightMode,
    pub candidate_cap: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            weight_mode: WeightMode::Reciprocal,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
        }
    }
}

/// Everything the pipeline learned about one projection set.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub distinct_count: usize,
    pub candidates: CandidateSet,
    pub deduction: DeductionResult,
    pub statements: Vec<EdgeStatement>,
    pub scores: ScoredCandidates,
    pub selection: Selection,
}

/// Enumerate, deduce (doubles), build statements, score, and select
/// `distinct_count - deduced` more rows.
pub fn run_pipeline(
    proj: &ProjectionSet,
    distinct_count: usize,
    options: PipelineOptions,
) -> Result<Reconstruction> {
    let graph = build_graph(proj).map_err(|e| e.in_stage("graph"))?;
    let candidates =
        enumerate_candidates_capped(&graph, options.candidate_cap).map_err(|e| e.in_stage("enumerate"))?;
    reconstruct_from_candidates(proj, candidates, distinct_count, options.weight_mode)
}

pub fn reconstruct_from_candidates(
    proj: &ProjectionSet,
    candidates: CandidateSet,
    distinct_count: usize,
    weight_mode: WeightMode,
) -> Result<Reconstruction> {
    let deduction = deduce_doubles(&candidates);
    let slots = distinct_count
        .checked_sub(deduction.len())
        .ok_or(Error::ContradictoryDistinctCount {
            distinct: distinct_count,
            deduced: deduction.len(),
        })
        .map_err(|e| e.in_stage("deduce"))?;
    let statements =
        build_statements(proj, &candidates, &deduction).map_err(|e| e.in_stage("statements"))?;
    let universe = deduction.undeduced(&candidates);
    let scores = score_candidates(&statements, &universe, weight_mode);
    let selection = select_rows(&scores, slots);
    Ok(Reconstruction {
        distinct_count,
        candidates,
        deduction,
        statements,
        scores,
        selection,
    })
}

impl Reconstruction {
    pub fn undeduced(&self) -> Vec<usize> {
        self.deduction.undeduced(&self.candidates)
    }

    /// Deduced rows followed by selected rows.
    pub fn rows(&self) -> Vec<ValueVector> {
        self.deduction
            .deduced
            .iter()
            .chain(&self.selection.chosen)
            .map(|&k| self.candidates.values(k))
            .collect()
    }

    pub fn labels(&self, truth: &BTreeSet<ValueVector>) -> Result<Vec<ConfusionLabel>> {
        classify(&self.candidates, &self.deduction, &self.selection, truth)
    }

    pub fn metrics(&self, truth: &BTreeSet<ValueVector>) -> ReconstructionMetrics {
        compute_metrics(&self.candidates, &self.deduction, &self.selection, truth)
    }
}

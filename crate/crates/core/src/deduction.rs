//! Exact deduction of original rows from the candidate set.
//!
//! A vertex or edge that occurs in only one candidate must come from that
//! candidate, since every original row is a candidate and every vertex and
//! edge comes from some original row. Singles checks vertices, doubles
//! checks edges; every vertex of a candidate lies on one of its edges, so
//! doubles finds everything singles does.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::graph::{row_edges, CandidateSet, Edge, Vertex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Single,
    Double,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DeductionResult {
    pub deduced: BTreeSet<usize>,
    /// Strongest rule that fires for each deduced candidate; `Single` wins
    /// when both apply.
    pub attribution: BTreeMap<usize, Rule>,
    /// Number of deduced candidates containing each edge.
    pub coverage: BTreeMap<Edge, u64>,
}

impl DeductionResult {
    fn from_attribution(cands: &CandidateSet, attribution: BTreeMap<usize, Rule>) -> Self {
        let mut coverage = BTreeMap::new();
        for &k in attribution.keys() {
            for e in row_edges(cands.codes(k)) {
                *coverage.entry(e).or_insert(0) += 1;
            }
        }
        DeductionResult {
            deduced: attribution.keys().copied().collect(),
            attribution,
            coverage,
        }
    }

    pub fn len(&self) -> usize {
        self.deduced.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deduced.is_empty()
    }

    pub fn contains(&self, candidate: usize) -> bool {
        self.deduced.contains(&candidate)
    }

    pub fn coverage_of(&self, e: &Edge) -> u64 {
        self.coverage.get(e).copied().unwrap_or(0)
    }

    /// Candidate indices not deduced, ascending.
    pub fn undeduced(&self, cands: &CandidateSet) -> Vec<usize> {
        (0..cands.len()).filter(|k| !self.deduced.contains(k)).collect()
    }
}

fn has_unique_vertex(cands: &CandidateSet, k: usize) -> bool {
    cands
        .codes(k)
        .iter()
        .enumerate()
        .any(|(column, &code)| cands.vertex_members(Vertex { column, code }).len() == 1)
}

fn has_unique_edge(cands: &CandidateSet, k: usize) -> bool {
    row_edges(cands.codes(k)).any(|e| cands.edge_members(&e).len() == 1)
}

pub fn deduce_singles(cands: &CandidateSet) -> DeductionResult {
    let attribution = (0..cands.len())
        .filter(|&k| has_unique_vertex(cands, k))
        .map(|k| (k, Rule::Single))
        .collect();
    DeductionResult::from_attribution(cands, attribution)
}

pub fn deduce_doubles(cands: &CandidateSet) -> DeductionResult {
    let attribution = (0..cands.len())
        .filter_map(|k| {
            if has_unique_vertex(cands, k) {
                Some((k, Rule::Single))
            } else if has_unique_edge(cands, k) {
                Some((k, Rule::Double))
            } else {
                None
            }
        })
        .collect();
    DeductionResult::from_attribution(cands, attribution)
}

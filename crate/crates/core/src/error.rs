use thiserror::Error;

use crate::graph::Edge;
use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid projections: {}", join_violations(.0))]
    InvalidProjections(Vec<Violation>),

    #[error("candidate explosion: more than {cap} candidates (stopped after {partial})")]
    CandidateExplosion { cap: usize, partial: usize },

    #[error("inconsistent instance: edge {edge} needs {required} more rows but only {available} undeduced candidates contain it")]
    InconsistentInstance {
        edge: Edge,
        required: u64,
        available: usize,
    },

    #[error("exact oracle refused: C({universe}, {slots}) = {} subsets exceeds cap {cap}", subset_count(*.subsets))]
    OracleTooLarge {
        universe: usize,
        slots: usize,
        subsets: u128,
        cap: u128,
    },

    #[error("no size-{slots} subset satisfies every edge statement")]
    InfeasibleStatements { slots: usize },

    #[error("invalid selection: candidate {0} is both deduced and selected")]
    InvalidSelection(usize),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("invalid options: {0}")]
    InvalidOptions(String),

    #[error("distinct count {distinct} is smaller than the {deduced} rows already deduced")]
    ContradictoryDistinctCount { distinct: usize, deduced: usize },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Strips stage attribution.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

fn subset_count(subsets: u128) -> String {
    // binomial() saturates
    if subsets == u128::MAX {
        "at least 2^128".to_owned()
    } else {
        subsets.to_string()
    }
}

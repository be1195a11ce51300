//! Reconstruction of discrete multivariate datasets from the complete set of
//! their bivariate projections (the panels of a scatterplot matrix, with
//! duplicate counts).
//!
//! The pipeline:
//!
//! 1. [`model::project`] turns a dataset into a [`model::ProjectionSet`].
//! 2. [`graph::build_graph`] builds the D-partite graph of (column, value)
//!    vertices; [`graph::enumerate_candidates`] lists its D-cliques. Every
//!    original row is among them, possibly alongside phantoms.
//! 3. [`deduction::deduce_doubles`] keeps candidates that own a vertex or an
//!    edge no other candidate has; these are certainly original.
//! 4. [`likelihood`] scores the rest against the edges still unaccounted for
//!    and selects the most likely ones to fill the known distinct-row count.
//!
//! [`lookup`] holds the all-distinct-column shortcut and its closed-form
//! odds, [`evaluation`] and [`simulate`] measure recovery against ground
//! truth, and [`embed`] draws candidates as 2-D scatter plots.

mod bitset;
pub mod deduction;
pub mod embed;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod io;
pub mod likelihood;
pub mod lookup;
pub mod model;
pub mod pipeline;
pub mod simulate;

pub use error::{Error, Result};
pub use graph::{build_graph, enumerate_candidates, CandidateSet, ReconstructionGraph};
pub use model::{project, Dataset, ProjectionSet, Token, ValueVector};
pub use pipeline::{run_pipeline, PipelineOptions, Reconstruction};

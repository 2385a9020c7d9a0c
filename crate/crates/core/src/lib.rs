//! Incremental label propagation for semi-supervised learning on dynamic
//! sparse graphs.
//!
//! [`DynLp`] keeps fractional labels in `[0, 1]` converged while vertices
//! are inserted and deleted in batches, touching only the region a batch
//! affects. Full recomputation ([`ItLp`]), the exact harmonic solve and the
//! short-circuit contraction ([`StLp`]) serve as baselines and oracles;
//! [`builder`] and [`stream`] produce inputs and [`metrics`] compares
//! methods.

pub mod baselines;
pub mod builder;
pub mod components;
pub mod engine;
pub mod error;
pub mod graph;
pub mod io;
pub mod labels;
pub mod metrics;
mod reach;
pub mod stream;

pub use baselines::{harmonic_solve, itlp_solve, stlp_reduce, HarmonicSolver, ItLp, LaplacianBlocks, ReducedGraph, StLp};
pub use components::{default_tau, find_components, sparsify, ComponentLabeling, IntraBatchGraph};
pub use engine::{
    initialize_component_labels, propagate_step, ComponentSummary, DynLp, EngineConfig, Frontier, Initialization,
    IterationReport, Propagator, Schedule, Tau, Warnings,
};
pub use error::{Error, Result};
pub use graph::{BatchUpdate, DynamicGraph, InsertRecord, VertexId, WeightedEdge};
pub use labels::{Class, LabelState, NEUTRAL};
pub use reach::unlabeled_components;

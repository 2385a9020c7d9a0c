//! Reference methods: full-recompute iteration, the closed-form harmonic
//! solve and the short-circuit class contraction.

mod harmonic;
mod itlp;
mod stlp;

pub use harmonic::{cholesky_solve, harmonic_solve, HarmonicSolver, LaplacianBlocks, HARMONIC_SIZE_CAP};
pub use itlp::{itlp_solve, ItLp};
pub use stlp::{stlp_reduce, ReducedGraph, StLp};

use crate::graph::{BatchUpdate, VertexId};
use crate::labels::{LabelState, NEUTRAL};

/// Label bookkeeping shared by every method after the graph absorbed a batch:
/// deletions are forgotten, ground truth pinned, new unlabeled vertices start
/// neutral. Returns the inserted unlabeled vertices.
pub(crate) fn absorb_labels(labels: &mut LabelState, batch: &BatchUpdate) -> Vec<VertexId> {
    for &d in &batch.deletes {
        labels.remove(d);
    }
    let mut fresh = Vec::new();
    for r in &batch.inserts {
        match r.ground_truth {
            Some(c) => labels.set_truth(r.id, c),
            None => {
                labels.insert_unlabeled(r.id, NEUTRAL);
                fresh.push(r.id);
            }
        }
    }
    fresh
}

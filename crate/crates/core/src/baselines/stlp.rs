//! Short-circuit contraction: every ground-truth class collapses into one
//! representative vertex whose edges carry the summed parallel weights.

use std::time::Instant;

use crate::engine::{EngineConfig, IterationReport};
use crate::error::{Error, Result};
use crate::graph::{BatchUpdate, DynamicGraph, VertexId, WeightedEdge};
use crate::labels::{Class, LabelState};

use super::harmonic::harmonic_with_warnings;

/// Contracted graph: unlabeled vertices plus one representative per class.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedGraph {
    pub rep0: VertexId,
    pub rep1: VertexId,
    /// Unlabeled vertices, ascending.
    pub unlabeled: Vec<VertexId>,
    /// Unlabeled–unlabeled edges plus the summed representative edges.
    pub edges: Vec<WeightedEdge>,
}

impl ReducedGraph {
    /// All vertices of the reduced graph in ascending id order.
    pub fn vertices(&self) -> Vec<VertexId> {
        let mut v = self.unlabeled.clone();
        v.push(self.rep0);
        v.push(self.rep1);
        v.sort_unstable();
        v
    }

    /// Materializes the reduced graph with the representatives pinned.
    pub fn to_graph(&self) -> Result<(DynamicGraph, LabelState)> {
        let graph = DynamicGraph::from_edges(self.vertices(), &self.edges)?;
        let mut labels = LabelState::new();
        labels.set_truth(self.rep0, Class::Zero);
        labels.set_truth(self.rep1, Class::One);
        for &u in &self.unlabeled {
            labels.insert_unlabeled(u, crate::labels::NEUTRAL);
        }
        Ok((graph, labels))
    }
}

/// Contracts each ground-truth class into its smallest-id member.
pub fn stlp_reduce(graph: &DynamicGraph, labels: &LabelState) -> Result<ReducedGraph> {
    let mut rep = [None::<VertexId>; 2];
    let mut unlabeled = Vec::new();
    for v in graph.alive_vertices() {
        match labels.ground_truth(v) {
            Some(c) => {
                let slot = &mut rep[c.bit() as usize];
                if slot.map_or(true, |r| v < r) {
                    *slot = Some(v);
                }
            }
            None => unlabeled.push(v),
        }
    }
    let (Some(rep0), Some(rep1)) = (rep[0], rep[1]) else {
        return Err(Error::validation(
            "short-circuit contraction needs ground truth in both classes",
        ));
    };
    let mut edges = Vec::new();
    for &u in &unlabeled {
        let mut to_class = [0.0f64; 2];
        for (v, w) in graph.neighbors(u) {
            match labels.ground_truth(v) {
                Some(c) => to_class[c.bit() as usize] += w,
                None if u < v => edges.push(WeightedEdge { u, v, w }),
                None => {}
            }
        }
        for (r, w) in [(rep0, to_class[0]), (rep1, to_class[1])] {
            if w > 0.0 {
                edges.push(WeightedEdge { u, v: r, w }.normalized());
            }
        }
    }
    edges.sort_by(|a, b| (a.u, a.v).cmp(&(b.u, b.v)));
    Ok(ReducedGraph {
        rep0,
        rep1,
        unlabeled,
        edges,
    })
}

/// Short-circuit baseline for streams: after every batch the contracted
/// graph is rebuilt and solved exactly.
#[derive(Clone, Debug)]
pub struct StLp {
    graph: DynamicGraph,
    labels: LabelState,
}

impl StLp {
    pub fn new(config: EngineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            graph: DynamicGraph::new(),
            labels: LabelState::new(),
        })
    }

    pub fn graph(&self) -> &DynamicGraph {
        &self.graph
    }

    pub fn labels(&self) -> &LabelState {
        &self.labels
    }

    pub fn apply_batch(&mut self, batch: &BatchUpdate) -> Result<IterationReport> {
        let start = Instant::now();
        let mut graph = self.graph.clone();
        graph.apply_batch(batch)?;
        let mut labels = self.labels.clone();
        super::absorb_labels(&mut labels, batch);

        let both = labels.class_count(Class::Zero) > 0 && labels.class_count(Class::One) > 0;
        let (solved, warnings) = if both {
            let reduced = stlp_reduce(&graph, &labels)?;
            let (rg, rl) = reduced.to_graph()?;
            let (sol, warnings) = harmonic_with_warnings(&rg, &rl)?;
            for &u in &reduced.unlabeled {
                if sol.is_neutral(u) {
                    labels.pin_neutral(u);
                } else {
                    labels.clear_neutral(u);
                    labels.set_value(u, sol.value(u));
                }
            }
            (labels, warnings)
        } else {
            // one class only: nothing to contract against
            harmonic_with_warnings(&graph, &labels)?
        };
        let updates = graph.alive_vertices().filter(|&v| !solved.is_labeled(v)).count();
        self.graph = graph;
        self.labels = solved;
        Ok(IterationReport {
            iterations: 1,
            updates,
            max_change: 0.0,
            converged: true,
            warnings,
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }
}

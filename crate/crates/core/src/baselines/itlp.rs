//! Full-graph iterative label propagation (synchronous sweeps).

use std::time::Instant;

use rayon::prelude::*;

use crate::engine::{EngineConfig, IterationReport, Warnings};
use crate::error::Result;
use crate::graph::{BatchUpdate, DynamicGraph, VertexId};
use crate::labels::{Class, LabelState};
use crate::reach::ReachScratch;

const PARALLEL_SWEEP: usize = 4096;

/// Sweeps every unlabeled vertex with `F ← Σ w F / d` until the largest
/// change in a sweep is at most `delta`.
///
/// Vertices without a path to ground truth are pinned at 0.5 first. Labels
/// are updated in place starting from their current values.
pub fn itlp_solve(
    graph: &DynamicGraph,
    labels: &mut LabelState,
    delta: f64,
    max_iterations: usize,
) -> IterationReport {
    let mut scratch = ReachScratch::default();
    sweep_until_converged(graph, labels, delta, max_iterations, &mut scratch)
}

fn sweep_until_converged(
    graph: &DynamicGraph,
    labels: &mut LabelState,
    delta: f64,
    max_iterations: usize,
    scratch: &mut ReachScratch,
) -> IterationReport {
    labels.reserve_ids(graph.id_bound());
    let unlabeled: Vec<VertexId> = graph.alive_vertices().filter(|&v| !labels.is_labeled(v)).collect();
    let reach = scratch.classify(graph, labels, &unlabeled);
    let active: Vec<VertexId> = unlabeled.into_iter().filter(|&v| !labels.is_neutral(v)).collect();

    let mut report = IterationReport {
        warnings: Warnings {
            isolated: reach.isolated,
            unreachable: reach.unreachable,
            zero_degree: 0,
        },
        converged: active.is_empty(),
        ..IterationReport::default()
    };
    let mut next = vec![0.0; active.len()];
    while !active.is_empty() && report.iterations < max_iterations {
        {
            let current: &LabelState = labels;
            let average = |(u, out): (&VertexId, &mut f64)| *out = neighbor_average(graph, current, *u);
            if active.len() >= PARALLEL_SWEEP {
                active.par_iter().zip(next.par_iter_mut()).for_each(average);
            } else {
                active.iter().zip(next.iter_mut()).for_each(average);
            }
        }
        let mut max_change: f64 = 0.0;
        for (&u, &f) in active.iter().zip(&next) {
            max_change = max_change.max((f - labels.value(u)).abs());
            labels.set_value(u, f);
        }
        report.iterations += 1;
        report.updates += active.len();
        report.max_change = max_change;
        if max_change <= delta {
            report.converged = true;
            break;
        }
    }
    report
}

/// Weighted neighbor average, the right-hand side of one Jacobi update.
pub(crate) fn neighbor_average(graph: &DynamicGraph, labels: &LabelState, u: VertexId) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (v, w) in graph.neighbors(u) {
        let f = match labels.ground_truth(v) {
            Some(Class::Zero) => 0.0,
            Some(Class::One) => 1.0,
            None => labels.value(v),
        };
        num += w * f;
        den += w;
    }
    if den > 0.0 {
        (num / den).clamp(0.0, 1.0)
    } else {
        crate::labels::NEUTRAL
    }
}

/// Batch-by-batch full recomputation: previous labels are kept for surviving
/// vertices, new ones start at 0.5, then every unlabeled vertex is swept.
#[derive(Clone, Debug)]
pub struct ItLp {
    graph: DynamicGraph,
    labels: LabelState,
    config: EngineConfig,
    reach: ReachScratch,
}

impl ItLp {
    pub fn new(config: EngineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            graph: DynamicGraph::new(),
            labels: LabelState::new(),
            config,
            reach: ReachScratch::default(),
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
        self.graph.apply_batch(batch)?;
        super::absorb_labels(&mut self.labels, batch);
        // pins from earlier batches are re-derived by the full reachability pass
        for v in self.graph.alive_vertices() {
            self.labels.clear_neutral(v);
        }
        let cap = self.config.iteration_cap(self.graph.num_alive());
        let mut report = sweep_until_converged(
            &self.graph,
            &mut self.labels,
            self.config.delta,
            cap,
            &mut self.reach,
        );
        report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedEdge;

    #[test]
    fn single_vertex_between_opposite_labels() {
        let g = DynamicGraph::from_edges(
            (0..3).map(VertexId),
            &[WeightedEdge::new(0, 1, 1.0), WeightedEdge::new(1, 2, 1.0)],
        )
        .unwrap();
        let mut labels = LabelState::new();
        labels.set_truth(VertexId(0), Class::Zero);
        labels.set_truth(VertexId(2), Class::One);
        labels.insert_unlabeled(VertexId(1), 0.9);
        let report = itlp_solve(&g, &mut labels, 1e-4, 100);
        assert_eq!(labels.value(VertexId(1)), 0.5);
        // the first sweep lands on the answer; the second confirms it
        assert_eq!(report.iterations, 2);
        assert!(report.converged);
    }

    #[test]
    fn path_reaches_linear_interpolation() {
        let edges: Vec<_> = (0..3).map(|i| WeightedEdge::new(i, i + 1, 1.0)).collect();
        let g = DynamicGraph::from_edges((0..4).map(VertexId), &edges).unwrap();
        let mut labels = LabelState::new();
        labels.set_truth(VertexId(0), Class::Zero);
        labels.set_truth(VertexId(3), Class::One);
        labels.insert_unlabeled(VertexId(1), 0.5);
        labels.insert_unlabeled(VertexId(2), 0.5);
        let report = itlp_solve(&g, &mut labels, 1e-12, 10_000);
        assert!(report.converged);
        assert!((labels.value(VertexId(1)) - 1.0 / 3.0).abs() < 1e-10);
        assert!((labels.value(VertexId(2)) - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn iteration_cap_flags_non_convergence() {
        let edges: Vec<_> = (0..9).map(|i| WeightedEdge::new(i, i + 1, 1.0)).collect();
        let g = DynamicGraph::from_edges((0..10).map(VertexId), &edges).unwrap();
        let mut labels = LabelState::new();
        labels.set_truth(VertexId(0), Class::One);
        for v in 1..10 {
            labels.insert_unlabeled(VertexId(v), 0.0);
        }
        let report = itlp_solve(&g, &mut labels, 1e-12, 3);
        assert_eq!(report.iterations, 3);
        assert!(!report.converged);
    }
}

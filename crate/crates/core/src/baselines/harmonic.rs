//! Closed-form harmonic labels, `F_U = −L_UU⁻¹ L_UL F_L`, by dense Cholesky.

use std::time::Instant;

use crate::engine::{EngineConfig, IterationReport, Warnings};
use crate::error::{Error, Result};
use crate::graph::{BatchUpdate, DynamicGraph, VertexId};
use crate::labels::{Class, LabelState};
use crate::reach::unlabeled_components;

/// Largest number of unlabeled vertices the dense solve accepts.
pub const HARMONIC_SIZE_CAP: usize = 5000;

/// Laplacian blocks for a set of unlabeled vertices. Labeled vertices come
/// first in the ordering, then unlabeled ones, both ascending by id.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplacianBlocks {
    pub labeled: Vec<VertexId>,
    pub unlabeled: Vec<VertexId>,
    /// `|U| × |U|`, row-major.
    pub l_uu: Vec<f64>,
    /// `|U| × |L|`, row-major.
    pub l_ul: Vec<f64>,
}

impl LaplacianBlocks {
    /// Blocks over the given unlabeled vertices and every labeled vertex
    /// adjacent to them. Edges leaving the set toward other unlabeled
    /// vertices still count in the degree, so pass whole components.
    pub fn build(graph: &DynamicGraph, labels: &LabelState, unlabeled: &[VertexId]) -> Self {
        let mut unlabeled = unlabeled.to_vec();
        unlabeled.sort_unstable();
        unlabeled.dedup();
        let mut labeled: Vec<VertexId> = unlabeled
            .iter()
            .flat_map(|&u| graph.neighbors(u).map(|(v, _)| v))
            .filter(|&v| labels.is_labeled(v))
            .collect();
        labeled.sort_unstable();
        labeled.dedup();

        let k = unlabeled.len();
        let m = labeled.len();
        let mut l_uu = vec![0.0; k * k];
        let mut l_ul = vec![0.0; k * m];
        for (i, &u) in unlabeled.iter().enumerate() {
            for (v, w) in graph.neighbors(u) {
                l_uu[i * k + i] += w;
                if let Ok(j) = unlabeled.binary_search(&v) {
                    l_uu[i * k + j] -= w;
                } else if let Ok(j) = labeled.binary_search(&v) {
                    l_ul[i * m + j] -= w;
                }
            }
        }
        Self {
            labeled,
            unlabeled,
            l_uu,
            l_ul,
        }
    }

    /// Every labeled and unlabeled vertex of the graph.
    pub fn build_full(graph: &DynamicGraph, labels: &LabelState) -> Self {
        let unlabeled: Vec<VertexId> = graph.alive_vertices().filter(|&v| !labels.is_labeled(v)).collect();
        let mut blocks = Self::build(graph, labels, &unlabeled);
        blocks.labeled = graph.alive_vertices().filter(|&v| labels.is_labeled(v)).collect();
        let k = blocks.unlabeled.len();
        let m = blocks.labeled.len();
        let mut l_ul = vec![0.0; k * m];
        for (i, &u) in blocks.unlabeled.iter().enumerate() {
            for (v, w) in graph.neighbors(u) {
                if let Ok(j) = blocks.labeled.binary_search(&v) {
                    l_ul[i * m + j] -= w;
                }
            }
        }
        blocks.l_ul = l_ul;
        blocks
    }

    /// Solves `L_UU x = −L_UL F_L`.
    pub fn solve(&self, labels: &LabelState) -> Result<Vec<f64>> {
        let k = self.unlabeled.len();
        let m = self.labeled.len();
        let f_l: Vec<f64> = self
            .labeled
            .iter()
            .map(|&v| labels.ground_truth(v).map_or(0.0, Class::value))
            .collect();
        let mut rhs = vec![0.0; k];
        for (i, r) in rhs.iter_mut().enumerate() {
            let row = &self.l_ul[i * m..(i + 1) * m];
            *r = -row.iter().zip(&f_l).map(|(a, b)| a * b).sum::<f64>();
        }
        let mut a = self.l_uu.clone();
        cholesky_solve(&mut a, &mut rhs, k).map_err(|pivot| {
            Error::Singular(format!(
                "L_UU not positive definite at pivot {pivot} (vertex {}) of {k}",
                self.unlabeled[pivot]
            ))
        })?;
        Ok(rhs)
    }
}

/// In-place Cholesky factorization and solve of the symmetric positive
/// definite `n × n` system `a x = b`; `b` is overwritten with `x`. Returns
/// the failing pivot index when `a` is not positive definite.
pub fn cholesky_solve(a: &mut [f64], b: &mut [f64], n: usize) -> std::result::Result<(), usize> {
    for j in 0..n {
        let (head, tail) = a.split_at_mut((j + 1) * n);
        let row_j = &mut head[j * n..];
        let d = row_j[j] - row_j[..j].iter().map(|x| x * x).sum::<f64>();
        if !(d > 0.0) {
            return Err(j);
        }
        let d = d.sqrt();
        row_j[j] = d;
        let row_j = &head[j * n..j * n + j];
        for row_i in tail.chunks_exact_mut(n) {
            let s = row_i[j] - row_i[..j].iter().zip(row_j).map(|(x, y)| x * y).sum::<f64>();
            row_i[j] = s / d;
        }
    }
    // forward: L y = b
    for i in 0..n {
        let row = &a[i * n..i * n + i];
        let s: f64 = row.iter().zip(&b[..i]).map(|(l, y)| l * y).sum();
        b[i] = (b[i] - s) / a[i * n + i];
    }
    // backward: Lᵀ x = y
    for i in (0..n).rev() {
        let mut s = b[i];
        for p in (i + 1)..n {
            s -= a[p * n + i] * b[p];
        }
        b[i] = s / a[i * n + i];
    }
    Ok(())
}

/// Exact harmonic labels. Each unlabeled component with a ground-truth
/// neighbor is solved separately; the others, and isolated vertices, are
/// pinned at 0.5.
pub fn harmonic_solve(graph: &DynamicGraph, labels: &LabelState) -> Result<LabelState> {
    harmonic_with_warnings(graph, labels).map(|(l, _)| l)
}

pub(crate) fn harmonic_with_warnings(graph: &DynamicGraph, labels: &LabelState) -> Result<(LabelState, Warnings)> {
    let components = unlabeled_components(graph, labels);
    let total: usize = components.iter().map(|(m, _)| m.len()).sum();
    if total > HARMONIC_SIZE_CAP {
        return Err(Error::SizeCap {
            what: "unlabeled vertices for the dense harmonic solve".into(),
            size: total,
            cap: HARMONIC_SIZE_CAP,
        });
    }
    if labels.class_count(Class::Zero) + labels.class_count(Class::One) == 0 && total > 0 {
        return Err(Error::validation("harmonic solve needs at least one labeled vertex"));
    }
    let mut out = labels.clone();
    out.reserve_ids(graph.id_bound());
    let mut warnings = Warnings::default();
    for (members, touches) in components {
        if !touches {
            if members.len() == 1 && graph.neighbors(members[0]).next().is_none() {
                warnings.isolated += 1;
            } else {
                warnings.unreachable += members.len();
            }
            for &v in &members {
                out.pin_neutral(v);
            }
            continue;
        }
        let blocks = LaplacianBlocks::build(graph, labels, &members);
        let x = blocks.solve(labels)?;
        for (&v, &f) in blocks.unlabeled.iter().zip(&x) {
            out.clear_neutral(v);
            out.set_value(v, f.clamp(0.0, 1.0));
        }
    }
    Ok((out, warnings))
}

/// Oracle method for streams: re-solves the whole graph after every batch.
#[derive(Clone, Debug)]
pub struct HarmonicSolver {
    graph: DynamicGraph,
    labels: LabelState,
}

impl HarmonicSolver {
    pub fn new(_config: EngineConfig) -> Result<Self> {
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
        let (solved, warnings) = harmonic_with_warnings(&graph, &labels)?;
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedEdge;

    #[test]
    fn path_is_linear() {
        let edges: Vec<_> = (0..3).map(|i| WeightedEdge::new(i, i + 1, 1.0)).collect();
        let g = DynamicGraph::from_edges((0..4).map(VertexId), &edges).unwrap();
        let mut labels = LabelState::new();
        labels.set_truth(VertexId(0), Class::Zero);
        labels.set_truth(VertexId(3), Class::One);
        labels.insert_unlabeled(VertexId(1), 0.5);
        labels.insert_unlabeled(VertexId(2), 0.5);
        let out = harmonic_solve(&g, &labels).unwrap();
        assert!((out.value(VertexId(1)) - 1.0 / 3.0).abs() < 1e-14);
        assert!((out.value(VertexId(2)) - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn star_center_is_boundary_average() {
        let edges: Vec<_> = (1..4).map(|i| WeightedEdge::new(0, i, 1.0)).collect();
        let g = DynamicGraph::from_edges((0..4).map(VertexId), &edges).unwrap();
        let mut labels = LabelState::new();
        labels.insert_unlabeled(VertexId(0), 0.5);
        labels.set_truth(VertexId(1), Class::Zero);
        labels.set_truth(VertexId(2), Class::Zero);
        labels.set_truth(VertexId(3), Class::One);
        let out = harmonic_solve(&g, &labels).unwrap();
        assert!((out.value(VertexId(0)) - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let edges = [
            WeightedEdge::new(0, 1, 0.5),
            WeightedEdge::new(1, 2, 2.0),
            WeightedEdge::new(2, 3, 1.5),
            WeightedEdge::new(1, 3, 0.25),
        ];
        let g = DynamicGraph::from_edges((0..4).map(VertexId), &edges).unwrap();
        let mut labels = LabelState::new();
        labels.set_truth(VertexId(0), Class::Zero);
        labels.set_truth(VertexId(3), Class::One);
        labels.insert_unlabeled(VertexId(1), 0.5);
        labels.insert_unlabeled(VertexId(2), 0.5);
        let b = LaplacianBlocks::build_full(&g, &labels);
        let (k, m) = (b.unlabeled.len(), b.labeled.len());
        for i in 0..k {
            let s: f64 = b.l_uu[i * k..(i + 1) * k].iter().sum::<f64>() + b.l_ul[i * m..(i + 1) * m].iter().sum::<f64>();
            assert!(s.abs() < 1e-15);
            assert_eq!(b.l_uu[i * k + i], g.weighted_degree(b.unlabeled[i]).unwrap());
            for j in 0..k {
                assert_eq!(b.l_uu[i * k + j], b.l_uu[j * k + i]);
            }
        }
    }

    #[test]
    fn cholesky_matches_known_solution() {
        // [[4,2],[2,3]] x = [6,5] -> x = [1,1]
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        let mut b = vec![6.0, 5.0];
        cholesky_solve(&mut a, &mut b, 2).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-15 && (b[1] - 1.0).abs() < 1e-15);
        let mut singular = vec![1.0, 1.0, 1.0, 1.0];
        assert_eq!(cholesky_solve(&mut singular, &mut [1.0, 1.0], 2), Err(1));
    }

    #[test]
    fn unreachable_component_is_pinned() {
        let g = DynamicGraph::from_edges(
            (0..4).map(VertexId),
            &[WeightedEdge::new(0, 1, 1.0), WeightedEdge::new(2, 3, 1.0)],
        )
        .unwrap();
        let mut labels = LabelState::new();
        labels.set_truth(VertexId(0), Class::One);
        for v in 1..4 {
            labels.insert_unlabeled(VertexId(v), 0.1);
        }
        let (out, w) = harmonic_with_warnings(&g, &labels).unwrap();
        assert_eq!(out.value(VertexId(1)), 1.0);
        assert_eq!(out.value(VertexId(2)), 0.5);
        assert!(out.is_neutral(VertexId(3)));
        assert_eq!(w.unreachable, 2);
    }
}

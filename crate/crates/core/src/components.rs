//! Threshold sparsification of the intra-batch graph and Shiloach–Vishkin
//! connected components.
//!
//! Vertices are mapped to local indices in ascending id order, so hooking
//! toward the smaller parent makes every component's representative its
//! smallest vertex id, independent of scheduling.

use std::sync::atomic::{AtomicBool, AtomicU32, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{DynamicGraph, VertexId, WeightedEdge};

/// Below this many edges the passes run sequentially.
const PARALLEL_EDGES: usize = 1 << 14;

/// Returns the edges with weight strictly greater than `tau`.
pub fn sparsify(edges: &[WeightedEdge], tau: f64) -> Vec<WeightedEdge> {
    if edges.len() >= PARALLEL_EDGES {
        edges.par_iter().filter(|e| e.w > tau).copied().collect()
    } else {
        edges.iter().filter(|e| e.w > tau).copied().collect()
    }
}

/// Mean alive edge weight, each undirected edge counted once.
pub fn default_tau(graph: &DynamicGraph) -> Result<f64> {
    if graph.edge_count() == 0 {
        return Err(Error::validation(
            "graph has no edges; supply tau explicitly",
        ));
    }
    Ok(graph.total_weight() / graph.edge_count() as f64)
}

/// Graph over the vertices inserted in one batch, restricted to edges heavier
/// than `tau`.
#[derive(Clone, Debug)]
pub struct IntraBatchGraph {
    vertices: Vec<VertexId>,
    edges: Vec<WeightedEdge>,
    tau: f64,
}

impl IntraBatchGraph {
    /// Builds the graph, dropping edges with `w <= tau`. Every edge endpoint
    /// must be one of `vertices`.
    pub fn new(mut vertices: Vec<VertexId>, edges: &[WeightedEdge], tau: f64) -> Result<Self> {
        if !(tau >= 0.0) {
            return Err(Error::validation(format!("tau must be non-negative, got {tau}")));
        }
        vertices.sort_unstable();
        vertices.dedup();
        for e in edges {
            for end in [e.u, e.v] {
                if vertices.binary_search(&end).is_err() {
                    return Err(Error::InvalidEdge {
                        u: e.u,
                        v: e.v,
                        w: e.w,
                        reason: "endpoint outside the intra-batch vertex set",
                    });
                }
            }
        }
        Ok(Self {
            vertices,
            edges: sparsify(edges, tau),
            tau,
        })
    }

    /// Sorted vertex list.
    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn edges(&self) -> &[WeightedEdge] {
        &self.edges
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    fn local(&self, v: VertexId) -> u32 {
        self.vertices.binary_search(&v).expect("validated endpoint") as u32
    }
}

/// Result of [`find_components`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentLabeling {
    /// Sorted vertices, the index space of the other vectors.
    pub vertices: Vec<VertexId>,
    /// Representative (smallest id of the component) per vertex.
    pub parent: Vec<VertexId>,
    /// Dense component index per vertex, ordered by representative id.
    pub component_id: Vec<u32>,
    pub num_components: usize,
    /// Hook/jump alternations until a round changed nothing.
    pub rounds: usize,
    /// Total pointer-jumping passes over all rounds.
    pub jump_passes: usize,
}

impl ComponentLabeling {
    pub fn component_of(&self, v: VertexId) -> Option<u32> {
        self.vertices
            .binary_search(&v)
            .ok()
            .map(|i| self.component_id[i])
    }

    /// Members of each component, in component-id order.
    pub fn members(&self) -> Vec<Vec<VertexId>> {
        let mut out = vec![Vec::new(); self.num_components];
        for (v, &c) in self.vertices.iter().zip(&self.component_id) {
            out[c as usize].push(*v);
        }
        out
    }
}

/// Connected components by alternating hook and jump passes.
///
/// Hook: for every edge whose endpoints have different parents, the larger
/// parent, if it is still a root, is pointed at the smaller one. Jump: every
/// vertex replaces its parent by its grandparent, repeated until no pointer
/// moves. Rounds stop once a hook pass leaves everything unchanged.
pub fn find_components(g: &IntraBatchGraph) -> ComponentLabeling {
    let n = g.vertices.len();
    let local_edges: Vec<(u32, u32)> = g
        .edges
        .iter()
        .map(|e| (g.local(e.u), g.local(e.v)))
        .filter(|(a, b)| a != b)
        .collect();
    let parent: Vec<AtomicU32> = (0..n as u32).map(AtomicU32::new).collect();
    let parallel = local_edges.len() >= PARALLEL_EDGES;

    let mut rounds = 0;
    let mut jump_passes = 0;
    loop {
        rounds += 1;
        let hooked = AtomicBool::new(false);
        let hook = |&(a, b): &(u32, u32)| {
            let pa = parent[a as usize].load(Ordering::Relaxed);
            let pb = parent[b as usize].load(Ordering::Relaxed);
            if pa == pb {
                return;
            }
            let (high, low) = if pa > pb { (pa, pb) } else { (pb, pa) };
            if parent[high as usize]
                .compare_exchange(high, low, Ordering::Relaxed, Ordering::Relaxed)
                .is_ok()
            {
                hooked.store(true, Ordering::Relaxed);
            }
        };
        if parallel {
            local_edges.par_iter().for_each(hook);
        } else {
            local_edges.iter().for_each(hook);
        }

        loop {
            jump_passes += 1;
            let moved = AtomicBool::new(false);
            let jump = |x: usize| {
                let p = parent[x].load(Ordering::Relaxed);
                let gp = parent[p as usize].load(Ordering::Relaxed);
                if gp != p {
                    parent[x].store(gp, Ordering::Relaxed);
                    moved.store(true, Ordering::Relaxed);
                }
            };
            if parallel {
                (0..n).into_par_iter().for_each(jump);
            } else {
                (0..n).for_each(jump);
            }
            if !moved.load(Ordering::Relaxed) {
                break;
            }
        }

        if !hooked.load(Ordering::Relaxed) {
            break;
        }
    }

    let parent: Vec<u32> = parent.into_iter().map(AtomicU32::into_inner).collect();
    // dense ids by prefix scan over root flags
    let mut dense = vec![0u32; n];
    let mut next = 0u32;
    for (x, &p) in parent.iter().enumerate() {
        if p as usize == x {
            dense[x] = next;
            next += 1;
        }
    }
    let component_id = parent.iter().map(|&p| dense[p as usize]).collect();
    ComponentLabeling {
        parent: parent.iter().map(|&p| g.vertices[p as usize]).collect(),
        vertices: g.vertices.clone(),
        component_id,
        num_components: next as usize,
        rounds,
        jump_passes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::InsertRecord;

    fn e(u: u32, v: u32, w: f64) -> WeightedEdge {
        WeightedEdge::new(u, v, w)
    }

    fn ids(v: &[u32]) -> Vec<VertexId> {
        v.iter().copied().map(VertexId).collect()
    }

    #[test]
    fn sparsify_is_strict() {
        let edges = vec![e(0, 1, 1.0), e(1, 2, 3.0), e(2, 3, 5.0), e(3, 4, 7.0)];
        assert_eq!(sparsify(&edges, 5.0), vec![e(3, 4, 7.0)]);
        assert_eq!(sparsify(&edges, 0.0), edges);
        assert!(sparsify(&edges, 7.0).is_empty());
    }

    #[test]
    fn hook_toward_smallest_id() {
        let g = IntraBatchGraph::new(ids(&[8, 9, 10]), &[e(8, 9, 1.0)], 0.0).unwrap();
        let c = find_components(&g);
        assert_eq!(c.num_components, 2);
        assert_eq!(c.parent, ids(&[8, 8, 10]));
        assert_eq!(c.component_id, vec![0, 0, 1]);
        assert_eq!(c.members(), vec![ids(&[8, 9]), ids(&[10])]);
    }

    #[test]
    fn no_edges_gives_singletons() {
        let g = IntraBatchGraph::new(ids(&[3, 1, 2]), &[], 0.0).unwrap();
        let c = find_components(&g);
        assert_eq!(c.num_components, 3);
        assert_eq!(c.component_id, vec![0, 1, 2]);
    }

    #[test]
    fn path_is_one_component_with_idempotent_parents() {
        let edges: Vec<_> = (0..9).map(|i| e(9 - i, 8 - i, 1.0)).collect();
        let g = IntraBatchGraph::new(ids(&(0..10).collect::<Vec<_>>()), &edges, 0.5).unwrap();
        let c = find_components(&g);
        assert_eq!(c.num_components, 1);
        for p in &c.parent {
            let i = c.vertices.binary_search(p).unwrap();
            assert_eq!(c.parent[i], *p);
        }
    }

    #[test]
    fn edge_outside_vertex_set_is_rejected() {
        assert!(IntraBatchGraph::new(ids(&[0, 1]), &[e(0, 5, 1.0)], 0.0).is_err());
    }

    #[test]
    fn default_tau_is_mean_weight() {
        let g = DynamicGraph::from_edges(ids(&[0, 1, 2]), &[e(0, 1, 2.0), e(1, 2, 4.0)]).unwrap();
        assert_eq!(default_tau(&g).unwrap(), 3.0);
        let g = DynamicGraph::from_edges(
            ids(&[0, 1, 2, 3, 4]),
            &[e(0, 1, 1.0), e(1, 2, 1.0), e(2, 3, 1.0), e(3, 4, 5.0)],
        )
        .unwrap();
        assert_eq!(default_tau(&g).unwrap(), 2.0);
        let mut g = DynamicGraph::new();
        g.apply_inserts(&[InsertRecord {
            id: VertexId(0),
            ground_truth: None,
            edges: vec![],
        }])
        .unwrap();
        assert!(default_tau(&g).is_err());
    }

    #[test]
    fn equal_weights_with_mean_tau_remove_everything() {
        let edges = vec![e(0, 1, 0.7), e(1, 2, 0.7)];
        let g = DynamicGraph::from_edges(ids(&[0, 1, 2]), &edges).unwrap();
        let tau = default_tau(&g).unwrap();
        assert!(sparsify(&edges, tau).is_empty());
    }
}

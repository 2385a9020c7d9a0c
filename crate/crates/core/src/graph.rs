//! Weighted undirected graph with batched vertex insertion and deletion.
//!
//! Adjacency lives in a compressed row layout (`offsets`, `lens`, `targets`,
//! `weights`) covering every id known at the last compaction. Rows touched by
//! later insertions grow into per-vertex overflow lists. A deletion empties
//! the dead row and swap-removes the reverse entries from its neighbors'
//! rows, leaving slack at row ends, so reads never see dead vertices. Once
//! slack or overflow entries exceed a quarter of the stored entries the graph
//! is rebuilt into a fresh compressed layout.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::Class;

/// Vertex identifier. Ids are never reused within a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        VertexId(u32::try_from(i).expect("vertex index exceeds u32"))
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u32> for VertexId {
    fn from(v: u32) -> Self {
        VertexId(v)
    }
}

/// Undirected weighted edge. A weight of zero means "no edge".
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedEdge {
    pub u: VertexId,
    pub v: VertexId,
    pub w: f64,
}

impl WeightedEdge {
    pub fn new(u: u32, v: u32, w: f64) -> Self {
        Self {
            u: VertexId(u),
            v: VertexId(v),
            w,
        }
    }

    /// Same edge with `u < v`.
    pub fn normalized(self) -> Self {
        if self.u <= self.v {
            self
        } else {
            Self {
                u: self.v,
                v: self.u,
                w: self.w,
            }
        }
    }
}

/// One inserted vertex: its id, optional ground truth, and edges to vertices
/// that are alive or inserted in the same batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InsertRecord {
    pub id: VertexId,
    pub ground_truth: Option<Class>,
    pub edges: Vec<(VertexId, f64)>,
}

/// One timestep of changes: inserted vertices with edges and deleted ids.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchUpdate {
    pub t: u64,
    pub inserts: Vec<InsertRecord>,
    pub deletes: Vec<VertexId>,
}

impl BatchUpdate {
    pub fn is_empty(&self) -> bool {
        self.inserts.is_empty() && self.deletes.is_empty()
    }

    /// Edges of the batch, normalized to `u < v` and merged by summation.
    /// Zero-weight edges are dropped.
    pub fn merged_edges(&self) -> Vec<WeightedEdge> {
        merge_edges(
            self.inserts
                .iter()
                .flat_map(|r| r.edges.iter().map(move |&(v, w)| WeightedEdge { u: r.id, v, w })),
        )
    }
}

/// Normalizes and sums parallel edges. The result is sorted by `(u, v)`.
pub fn merge_edges(edges: impl IntoIterator<Item = WeightedEdge>) -> Vec<WeightedEdge> {
    let mut merged: BTreeMap<(VertexId, VertexId), f64> = BTreeMap::new();
    for e in edges {
        let e = e.normalized();
        *merged.entry((e.u, e.v)).or_insert(0.0) += e.w;
    }
    merged
        .into_iter()
        .filter(|&(_, w)| w > 0.0)
        .map(|((u, v), w)| WeightedEdge { u, v, w })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Vacant,
    Alive,
    Dead,
}

const COMPACT_FRACTION: f64 = 0.25;

/// Dynamic weighted undirected sparse graph.
#[derive(Clone, Debug)]
pub struct DynamicGraph {
    offsets: Vec<usize>,
    /// Used length of each compressed row.
    lens: Vec<u32>,
    targets: Vec<u32>,
    weights: Vec<f64>,
    overflow: Vec<Vec<(u32, f64)>>,
    overflow_entries: usize,
    slack_entries: usize,
    slots: Vec<Slot>,
    num_alive: usize,
    edge_count: usize,
    total_weight: f64,
}

impl Default for DynamicGraph {
    fn default() -> Self {
        Self::new()
    }
}

impl DynamicGraph {
    pub fn new() -> Self {
        Self {
            offsets: vec![0],
            lens: Vec::new(),
            targets: Vec::new(),
            weights: Vec::new(),
            overflow: Vec::new(),
            overflow_entries: 0,
            slack_entries: 0,
            slots: Vec::new(),
            num_alive: 0,
            edge_count: 0,
            total_weight: 0.0,
        }
    }

    /// Builds a graph over `vertices` from an edge list. Parallel edges are
    /// summed and zero weights dropped.
    pub fn from_edges(
        vertices: impl IntoIterator<Item = VertexId>,
        edges: &[WeightedEdge],
    ) -> Result<Self> {
        let mut g = Self::new();
        let mut records: BTreeMap<VertexId, InsertRecord> = vertices
            .into_iter()
            .map(|id| {
                (
                    id,
                    InsertRecord {
                        id,
                        ground_truth: None,
                        edges: Vec::new(),
                    },
                )
            })
            .collect();
        for e in edges {
            match records.get_mut(&e.u) {
                Some(r) => r.edges.push((e.v, e.w)),
                None => return Err(Error::DeadVertex(e.u)),
            }
        }
        let records: Vec<InsertRecord> = records.into_values().collect();
        g.apply_inserts(&records)?;
        g.compact();
        Ok(g)
    }

    /// One past the largest id ever seen.
    pub fn id_bound(&self) -> usize {
        self.slots.len()
    }

    #[inline]
    pub fn is_alive(&self, u: VertexId) -> bool {
        matches!(self.slots.get(u.index()), Some(Slot::Alive))
    }

    /// True if the id was never used (neither alive nor deleted).
    pub fn is_fresh(&self, u: VertexId) -> bool {
        matches!(self.slots.get(u.index()), None | Some(Slot::Vacant))
    }

    pub fn num_alive(&self) -> usize {
        self.num_alive
    }

    /// Number of alive undirected edges.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Sum of alive undirected edge weights, each edge counted once.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn alive_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Slot::Alive)
            .map(|(i, _)| VertexId::from_index(i))
    }

    /// Alive neighbors of `u` with edge weights. Empty for dead vertices.
    #[inline]
    pub fn neighbors(&self, u: VertexId) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        // dead rows are emptied on deletion
        let i = u.index();
        let (base_t, base_w): (&[u32], &[f64]) = match self.lens.get(i) {
            Some(&len) => {
                let s = self.offsets[i];
                let e = s + len as usize;
                (&self.targets[s..e], &self.weights[s..e])
            }
            None => (&[], &[]),
        };
        let extra: &[(u32, f64)] = self.overflow.get(i).map(Vec::as_slice).unwrap_or(&[]);
        base_t
            .iter()
            .copied()
            .zip(base_w.iter().copied())
            .chain(extra.iter().copied())
            .map(|(t, w)| (VertexId(t), w))
    }

    /// `d(u)`: sum of incident alive edge weights; 0 for isolated vertices.
    pub fn weighted_degree(&self, u: VertexId) -> Result<f64> {
        if !self.is_alive(u) {
            return Err(Error::DeadVertex(u));
        }
        Ok(self.neighbors(u).map(|(_, w)| w).sum())
    }

    /// Weight of edge `(u, v)`, 0 if absent.
    pub fn edge_weight(&self, u: VertexId, v: VertexId) -> f64 {
        self.neighbors(u).filter(|&(t, _)| t == v).map(|(_, w)| w).sum()
    }

    fn ensure_slot(&mut self, u: VertexId) {
        let need = u.index() + 1;
        if self.slots.len() < need {
            self.slots.resize(need, Slot::Vacant);
            self.overflow.resize_with(need, Vec::new);
        }
    }

    fn check_deletes(&self, deletes: &[VertexId]) -> Result<()> {
        let mut seen = std::collections::HashSet::with_capacity(deletes.len());
        for &u in deletes {
            if !self.is_alive(u) || !seen.insert(u) {
                return Err(Error::DeadVertex(u));
            }
        }
        Ok(())
    }

    /// Removes `deletes` and their incident edges. Returns the alive neighbors
    /// of the deleted vertices, sorted.
    pub fn apply_deletes(&mut self, deletes: &[VertexId]) -> Result<Vec<VertexId>> {
        self.check_deletes(deletes)?;
        Ok(self.delete_unchecked(deletes))
    }

    fn delete_unchecked(&mut self, deletes: &[VertexId]) -> Vec<VertexId> {
        let mut affected = Vec::new();
        let mut row = Vec::new();
        for &u in deletes {
            row.clear();
            row.extend(self.neighbors(u));
            for &(v, w) in &row {
                affected.push(v);
                self.unlink(v, u);
                self.edge_count -= 1;
                self.total_weight -= w;
            }
            let i = u.index();
            if let Some(len) = self.lens.get_mut(i) {
                self.slack_entries += *len as usize;
                *len = 0;
            }
            self.overflow_entries -= self.overflow[i].len();
            self.overflow[i] = Vec::new();
            self.slots[i] = Slot::Dead;
            self.num_alive -= 1;
        }
        affected.retain(|&v| self.is_alive(v));
        affected.sort_unstable();
        affected.dedup();
        if self.edge_count == 0 {
            self.total_weight = 0.0;
        }
        self.maybe_compact();
        affected
    }

    /// Adds vertices and their symmetric edges. Returns the inserted vertices
    /// together with their alive neighbors, sorted.
    pub fn apply_inserts(&mut self, inserts: &[InsertRecord]) -> Result<Vec<VertexId>> {
        self.check_inserts(inserts, &[])?;
        Ok(self.insert_unchecked(inserts))
    }

    fn insert_unchecked(&mut self, inserts: &[InsertRecord]) -> Vec<VertexId> {
        for r in inserts {
            self.ensure_slot(r.id);
            self.slots[r.id.index()] = Slot::Alive;
            self.num_alive += 1;
        }
        let edges = merge_edges(
            inserts
                .iter()
                .flat_map(|r| r.edges.iter().map(move |&(v, w)| WeightedEdge { u: r.id, v, w })),
        );
        let mut affected: Vec<VertexId> = inserts.iter().map(|r| r.id).collect();
        for e in &edges {
            self.overflow[e.u.index()].push((e.v.0, e.w));
            self.overflow[e.v.index()].push((e.u.0, e.w));
            self.overflow_entries += 2;
            self.edge_count += 1;
            self.total_weight += e.w;
            affected.push(e.u);
            affected.push(e.v);
        }
        affected.sort_unstable();
        affected.dedup();
        self.maybe_compact();
        affected
    }

    /// Checks a whole batch against the current graph without mutating it.
    pub fn validate_batch(&self, batch: &BatchUpdate) -> Result<()> {
        self.check_deletes(&batch.deletes)?;
        let dying: std::collections::HashSet<VertexId> = batch.deletes.iter().copied().collect();
        for r in &batch.inserts {
            if dying.contains(&r.id) {
                return Err(Error::InsertDeleteConflict(r.id));
            }
        }
        let mut dying_sorted: Vec<VertexId> = batch.deletes.clone();
        dying_sorted.sort_unstable();
        self.check_inserts(&batch.inserts, &dying_sorted)
    }

    /// `dying` must be sorted.
    fn check_inserts(&self, inserts: &[InsertRecord], dying: &[VertexId]) -> Result<()> {
        let mut fresh = std::collections::HashSet::with_capacity(inserts.len());
        for r in inserts {
            if !self.is_fresh(r.id) || !fresh.insert(r.id) {
                return Err(Error::DuplicateVertex(r.id));
            }
        }
        for r in inserts {
            for &(v, w) in &r.edges {
                let edge_err = |reason| Error::InvalidEdge {
                    u: r.id,
                    v,
                    w,
                    reason,
                };
                if !w.is_finite() || w < 0.0 {
                    return Err(edge_err("weight must be finite and non-negative"));
                }
                if v == r.id {
                    return Err(edge_err("self-loop"));
                }
                let endpoint_ok = fresh.contains(&v)
                    || (self.is_alive(v) && dying.binary_search(&v).is_err());
                if !endpoint_ok {
                    return Err(edge_err("endpoint is neither alive nor inserted in this batch"));
                }
            }
        }
        Ok(())
    }

    /// Validates and applies a batch: deletions first, then insertions. On
    /// error the graph is unchanged.
    pub fn apply_batch(&mut self, batch: &BatchUpdate) -> Result<BatchEffect> {
        self.validate_batch(batch)?;
        let deletion_affected = self.delete_unchecked(&batch.deletes);
        let insertion_affected = self.insert_unchecked(&batch.inserts);
        Ok(BatchEffect {
            deletion_affected,
            insertion_affected,
        })
    }

    /// Drops every entry for `gone` from the row of `v`.
    fn unlink(&mut self, v: VertexId, gone: VertexId) {
        let i = v.index();
        if let Some(len) = self.lens.get_mut(i) {
            let s = self.offsets[i];
            let mut k = 0;
            while k < *len as usize {
                if self.targets[s + k] == gone.0 {
                    let last = s + *len as usize - 1;
                    self.targets.swap(s + k, last);
                    self.weights.swap(s + k, last);
                    *len -= 1;
                    self.slack_entries += 1;
                } else {
                    k += 1;
                }
            }
        }
        let extra = &mut self.overflow[i];
        let before = extra.len();
        extra.retain(|&(t, _)| t != gone.0);
        self.overflow_entries -= before - extra.len();
    }

    fn maybe_compact(&mut self) {
        let stored = self.targets.len() + self.overflow_entries;
        if stored == 0 {
            return;
        }
        let limit = COMPACT_FRACTION * stored as f64;
        if self.slack_entries as f64 > limit || self.overflow_entries as f64 > limit {
            self.compact();
        }
    }

    /// Rebuilds the compressed rows, dropping slack and folding in
    /// overflow lists. Rows come out sorted by neighbor id.
    pub fn compact(&mut self) {
        let n = self.slots.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut lens = Vec::with_capacity(n);
        let mut targets = Vec::with_capacity(2 * self.edge_count);
        let mut weights = Vec::with_capacity(2 * self.edge_count);
        offsets.push(0);
        let mut row: Vec<(u32, f64)> = Vec::new();
        for i in 0..n {
            row.clear();
            row.extend(self.neighbors(VertexId::from_index(i)).map(|(v, w)| (v.0, w)));
            row.sort_unstable_by_key(|&(v, _)| v);
            for &(v, w) in &row {
                targets.push(v);
                weights.push(w);
            }
            offsets.push(targets.len());
            lens.push(row.len() as u32);
        }
        self.offsets = offsets;
        self.lens = lens;
        self.targets = targets;
        self.weights = weights;
        for o in &mut self.overflow {
            *o = Vec::new();
        }
        self.overflow_entries = 0;
        self.slack_entries = 0;
    }

    /// Alive undirected edges with `u < v`, sorted.
    pub fn edge_list(&self) -> Vec<WeightedEdge> {
        let mut out = Vec::with_capacity(self.edge_count);
        for u in self.alive_vertices() {
            for (v, w) in self.neighbors(u) {
                if u < v {
                    out.push(WeightedEdge { u, v, w });
                }
            }
        }
        out.sort_by(|a, b| (a.u, a.v).cmp(&(b.u, b.v)));
        out
    }

    /// Sorted adjacency of `u`.
    pub fn sorted_neighbors(&self, u: VertexId) -> Vec<(VertexId, f64)> {
        let mut row: Vec<_> = self.neighbors(u).collect();
        row.sort_by_key(|&(v, _)| v);
        row
    }
}

/// Affected-vertex contributions of one applied batch.
#[derive(Clone, Debug, Default)]
pub struct BatchEffect {
    /// Alive neighbors of deleted vertices.
    pub deletion_affected: Vec<VertexId>,
    /// Inserted vertices and their alive neighbors.
    pub insertion_affected: Vec<VertexId>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vid(v: u32) -> VertexId {
        VertexId(v)
    }

    fn graph(n: u32, edges: &[(u32, u32, f64)]) -> DynamicGraph {
        let edges: Vec<_> = edges.iter().map(|&(u, v, w)| WeightedEdge::new(u, v, w)).collect();
        DynamicGraph::from_edges((0..n).map(VertexId), &edges).unwrap()
    }

    fn insert(id: u32, edges: &[(u32, f64)]) -> InsertRecord {
        InsertRecord {
            id: vid(id),
            ground_truth: None,
            edges: edges.iter().map(|&(v, w)| (vid(v), w)).collect(),
        }
    }

    #[test]
    fn delete_middle_of_path() {
        let mut g = graph(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let affected = g.apply_deletes(&[vid(1)]).unwrap();
        assert_eq!(affected, vec![vid(0), vid(2)]);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.neighbors(vid(0)).count(), 0);
        assert_eq!(g.neighbors(vid(2)).count(), 0);
        assert!(!g.is_alive(vid(1)));
    }

    #[test]
    fn empty_delete_is_identity() {
        let mut g = graph(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let before = g.edge_list();
        assert!(g.apply_deletes(&[]).unwrap().is_empty());
        assert_eq!(g.edge_list(), before);
    }

    #[test]
    fn delete_two_triangle_corners_matches_rebuild() {
        let mut g = graph(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]);
        let affected = g.apply_deletes(&[vid(0), vid(2)]).unwrap();
        assert_eq!(affected, vec![vid(1)]);
        assert_eq!(g.weighted_degree(vid(1)).unwrap(), 0.0);
        let rebuilt = DynamicGraph::from_edges([vid(1)], &g.edge_list()).unwrap();
        assert_eq!(rebuilt.sorted_neighbors(vid(1)), g.sorted_neighbors(vid(1)));
    }

    #[test]
    fn delete_dead_or_unknown_vertex_fails() {
        let mut g = graph(3, &[(0, 1, 1.0)]);
        g.apply_deletes(&[vid(1)]).unwrap();
        assert!(matches!(g.apply_deletes(&[vid(1)]), Err(Error::DeadVertex(v)) if v == vid(1)));
        assert!(matches!(g.apply_deletes(&[vid(9)]), Err(Error::DeadVertex(v)) if v == vid(9)));
    }

    #[test]
    fn insert_into_triangle() {
        let mut g = graph(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]);
        let affected = g.apply_inserts(&[insert(3, &[(0, 2.0)])]).unwrap();
        assert_eq!(affected, vec![vid(0), vid(3)]);
        assert_eq!(g.edge_weight(vid(0), vid(3)), 2.0);
        assert_eq!(g.edge_weight(vid(3), vid(0)), 2.0);
    }

    #[test]
    fn insert_pair_without_old_neighbors() {
        let mut g = graph(3, &[(0, 1, 1.0)]);
        let affected = g
            .apply_inserts(&[insert(4, &[(5, 1.0)]), insert(5, &[])])
            .unwrap();
        assert_eq!(affected, vec![vid(4), vid(5)]);
    }

    #[test]
    fn parallel_edges_are_summed() {
        let mut g = graph(3, &[]);
        g.apply_inserts(&[insert(3, &[(0, 1.0), (0, 2.0)])]).unwrap();
        assert_eq!(g.sorted_neighbors(vid(3)), vec![(vid(0), 3.0)]);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn insert_errors() {
        let mut g = graph(3, &[]);
        assert!(matches!(
            g.apply_inserts(&[insert(1, &[])]),
            Err(Error::DuplicateVertex(_))
        ));
        assert!(matches!(
            g.apply_inserts(&[insert(3, &[(0, -1.0)])]),
            Err(Error::InvalidEdge { .. })
        ));
        assert!(matches!(
            g.apply_inserts(&[insert(3, &[(7, 1.0)])]),
            Err(Error::InvalidEdge { .. })
        ));
        g.apply_deletes(&[vid(2)]).unwrap();
        assert!(matches!(
            g.apply_inserts(&[insert(3, &[(2, 1.0)])]),
            Err(Error::InvalidEdge { .. })
        ));
        // deleted ids are never reused
        assert!(matches!(
            g.apply_inserts(&[insert(2, &[])]),
            Err(Error::DuplicateVertex(_))
        ));
    }

    #[test]
    fn star_degrees() {
        let mut g = graph(4, &[(0, 1, 1.0), (0, 2, 2.0), (0, 3, 3.0)]);
        assert_eq!(g.weighted_degree(vid(0)).unwrap(), 6.0);
        g.apply_inserts(&[insert(4, &[])]).unwrap();
        assert_eq!(g.weighted_degree(vid(4)).unwrap(), 0.0);
        g.apply_deletes(&[vid(2)]).unwrap();
        assert_eq!(g.weighted_degree(vid(0)).unwrap(), 4.0);
        assert!(g.weighted_degree(vid(2)).is_err());
    }

    #[test]
    fn batch_edge_to_vertex_deleted_in_same_batch_is_rejected() {
        let mut g = graph(3, &[(0, 1, 1.0)]);
        let before = g.edge_list();
        let batch = BatchUpdate {
            t: 1,
            inserts: vec![insert(3, &[(1, 1.0)])],
            deletes: vec![vid(1)],
        };
        assert!(g.apply_batch(&batch).is_err());
        assert_eq!(g.edge_list(), before);
        assert!(g.is_alive(vid(1)));
    }

    #[test]
    fn compaction_preserves_adjacency() {
        let mut g = graph(6, &[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 3.0), (3, 4, 4.0), (4, 5, 5.0)]);
        g.apply_deletes(&[vid(2), vid(4)]).unwrap();
        let before: Vec<_> = (0..6).map(|i| g.sorted_neighbors(vid(i))).collect();
        g.compact();
        let after: Vec<_> = (0..6).map(|i| g.sorted_neighbors(vid(i))).collect();
        assert_eq!(before, after);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.total_weight(), 1.0);
    }
}

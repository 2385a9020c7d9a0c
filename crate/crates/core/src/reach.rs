//! Reachability of unlabeled vertices from ground truth.
//!
//! An unlabeled vertex whose connected component (through unlabeled vertices)
//! never touches a ground-truth vertex has no unique harmonic value; such
//! vertices are pinned at 0.5 and kept out of propagation.

use std::collections::VecDeque;

use crate::graph::{DynamicGraph, VertexId};
use crate::labels::LabelState;

const IN_PROGRESS: u8 = 1;
const REACHABLE: u8 = 2;
const UNREACHABLE: u8 = 3;

/// What a reachability pass changed.
#[derive(Clone, Debug, Default)]
pub(crate) struct ReachOutcome {
    /// Previously pinned vertices that regained a path to ground truth.
    pub released: Vec<VertexId>,
    /// Isolated vertices pinned in this pass.
    pub isolated: usize,
    /// Vertices in unreachable components of size > 1 pinned in this pass.
    pub unreachable: usize,
}

/// Scratch space for seeded reachability checks, reused across batches.
#[derive(Clone, Debug, Default)]
pub(crate) struct ReachScratch {
    stamp: Vec<u32>,
    status: Vec<u8>,
    epoch: u32,
    queue: VecDeque<VertexId>,
    visited: Vec<VertexId>,
}

impl ReachScratch {
    fn begin(&mut self, bound: usize) {
        if self.stamp.len() < bound {
            self.stamp.resize(bound, 0);
            self.status.resize(bound, 0);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    fn status(&self, v: VertexId) -> u8 {
        if self.stamp[v.index()] == self.epoch {
            self.status[v.index()]
        } else {
            0
        }
    }

    fn set(&mut self, v: VertexId, s: u8) {
        self.stamp[v.index()] = self.epoch;
        self.status[v.index()] = s;
    }

    /// Classifies the components of every seed. Components that reach ground
    /// truth lose their neutral pins; the others are pinned at 0.5.
    ///
    /// Every component whose reachability may have changed must contain a
    /// seed. A search stops as soon as it touches ground truth, so the cost in
    /// a well-labeled giant component stays local.
    pub fn classify(
        &mut self,
        graph: &DynamicGraph,
        labels: &mut LabelState,
        seeds: &[VertexId],
    ) -> ReachOutcome {
        self.begin(graph.id_bound());
        let mut out = ReachOutcome::default();
        for &s in seeds {
            if !graph.is_alive(s) || labels.is_labeled(s) || self.status(s) != 0 {
                continue;
            }
            self.visited.clear();
            self.queue.clear();
            self.set(s, IN_PROGRESS);
            self.visited.push(s);
            self.queue.push_back(s);
            let mut found = false;
            'search: while let Some(x) = self.queue.pop_front() {
                for (y, _) in graph.neighbors(x) {
                    if labels.is_labeled(y) {
                        found = true;
                        break 'search;
                    }
                    match self.status(y) {
                        0 => {
                            self.set(y, IN_PROGRESS);
                            self.visited.push(y);
                            self.queue.push_back(y);
                        }
                        REACHABLE => {
                            found = true;
                            break 'search;
                        }
                        _ => {}
                    }
                }
            }
            let visited = std::mem::take(&mut self.visited);
            if found {
                for &v in &visited {
                    self.set(v, REACHABLE);
                }
                for &v in &visited {
                    if labels.is_neutral(v) {
                        release(graph, labels, v, &mut out.released);
                    }
                }
            } else {
                let isolated = visited.len() == 1 && graph.neighbors(s).next().is_none();
                for &v in &visited {
                    self.set(v, UNREACHABLE);
                    if !labels.is_neutral(v) {
                        if isolated {
                            out.isolated += 1;
                        } else {
                            out.unreachable += 1;
                        }
                    }
                    labels.pin_neutral(v);
                }
            }
            self.visited = visited;
        }
        out
    }
}

/// Clears neutral pins across the pinned region containing `start`.
fn release(
    graph: &DynamicGraph,
    labels: &mut LabelState,
    start: VertexId,
    released: &mut Vec<VertexId>,
) {
    let mut stack = vec![start];
    labels.clear_neutral(start);
    while let Some(x) = stack.pop() {
        released.push(x);
        for (y, _) in graph.neighbors(x) {
            if labels.is_neutral(y) {
                labels.clear_neutral(y);
                stack.push(y);
            }
        }
    }
}

/// Connected components of the alive unlabeled vertices (edges through
/// ground-truth vertices do not connect them), each with a flag telling
/// whether any member is adjacent to ground truth. Components come out in
/// order of their smallest vertex, members sorted.
pub fn unlabeled_components(graph: &DynamicGraph, labels: &LabelState) -> Vec<(Vec<VertexId>, bool)> {
    let mut seen = vec![false; graph.id_bound()];
    let mut out = Vec::new();
    for s in graph.alive_vertices() {
        if labels.is_labeled(s) || seen[s.index()] {
            continue;
        }
        seen[s.index()] = true;
        let mut members = vec![s];
        let mut touches = false;
        let mut head = 0;
        while head < members.len() {
            let x = members[head];
            head += 1;
            for (y, _) in graph.neighbors(x) {
                if labels.is_labeled(y) {
                    touches = true;
                } else if !seen[y.index()] {
                    seen[y.index()] = true;
                    members.push(y);
                }
            }
        }
        members.sort_unstable();
        out.push((members, touches));
    }
    out
}

//! Turns a complete graph with ground truth into a seeded sequence of
//! insert/delete batches.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{merge_edges, BatchUpdate, InsertRecord, VertexId, WeightedEdge};
use crate::labels::Class;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub batch_size: usize,
    pub insert_fraction: f64,
    pub gt_fraction: f64,
    pub delete_fraction: f64,
    pub seed: u64,
    /// Ground-truth vertices present before the first update batch.
    pub initial_gt_count: usize,
    /// Update batches to emit; `None` continues until every unlabeled vertex
    /// has been inserted.
    pub num_batches: Option<usize>,
}

impl StreamSpec {
    pub fn new(batch_size: usize, seed: u64) -> Self {
        Self {
            batch_size,
            insert_fraction: 0.90,
            gt_fraction: 0.01,
            delete_fraction: 0.09,
            seed,
            initial_gt_count: 0,
            num_batches: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::validation("batch_size must be at least 1"));
        }
        let fr = [self.insert_fraction, self.gt_fraction, self.delete_fraction];
        if fr.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::validation(format!("batch fractions must lie in [0, 1], got {fr:?}")));
        }
        let sum: f64 = fr.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!("batch fractions must sum to 1, got {sum}")));
        }
        Ok(())
    }

    /// `(unlabeled inserts, ground-truth inserts, deletes)` per full batch.
    pub fn counts(&self) -> (usize, usize, usize) {
        let b = self.batch_size as f64;
        (
            (b * self.insert_fraction).round() as usize,
            (b * self.gt_fraction).round() as usize,
            (b * self.delete_fraction).round() as usize,
        )
    }
}

/// A generated stream. The first batch holds the initial ground truth when
/// `initial_gt_count > 0`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Stream {
    pub batches: Vec<BatchUpdate>,
    /// Deletion draws that hit a dead or already chosen vertex and were
    /// replaced by the next alive candidate.
    pub substitutions: usize,
    /// Vertices of the source graph never inserted.
    pub unrevealed: usize,
}

/// Builds the batch sequence for the graph over `vertices`.
///
/// An edge is carried by the insert record of whichever endpoint is inserted
/// later (the larger id inside one batch), and dropped if the other endpoint
/// was deleted by then. Deletions draw uniformly from every vertex inserted in
/// an earlier batch; a draw that is dead or repeats within the batch moves to
/// the nearest later alive candidate. Batches take ground truth while the
/// pool lasts, so late batches may carry fewer than the nominal count. Ground
/// truth left over when the unlabeled vertices run out is inserted with the
/// final batch.
pub fn make_stream(
    vertices: &[VertexId],
    edges: &[WeightedEdge],
    ground_truth: &[(VertexId, Class)],
    spec: &StreamSpec,
) -> Result<Stream> {
    spec.validate()?;
    let mut ids = vertices.to_vec();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::validation("duplicate vertex ids in stream source"));
    }
    let index = |v: VertexId| ids.binary_search(&v);
    let n = ids.len();

    let mut adjacency: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for e in merge_edges(edges.iter().copied()) {
        let (Ok(a), Ok(b)) = (index(e.u), index(e.v)) else {
            return Err(Error::InvalidEdge {
                u: e.u,
                v: e.v,
                w: e.w,
                reason: "endpoint missing from the vertex list",
            });
        };
        adjacency[a].push((b as u32, e.w));
        adjacency[b].push((a as u32, e.w));
    }

    let mut truth: Vec<Option<Class>> = vec![None; n];
    for &(v, c) in ground_truth {
        let i = index(v).map_err(|_| Error::validation(format!("ground-truth vertex {v} is not in the graph")))?;
        if truth[i].is_some_and(|old| old != c) {
            return Err(Error::validation(format!("vertex {v} has conflicting ground truth")));
        }
        truth[i] = Some(c);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut gt_pool: Vec<u32> = (0..n as u32).filter(|&i| truth[i as usize].is_some()).collect();
    let mut free_pool: Vec<u32> = (0..n as u32).filter(|&i| truth[i as usize].is_none()).collect();
    gt_pool.shuffle(&mut rng);
    free_pool.shuffle(&mut rng);

    let (n_ins, n_gt, n_del) = spec.counts();
    let num_batches = match spec.num_batches {
        Some(b) => b,
        None if free_pool.is_empty() => 0,
        None if n_ins == 0 => {
            return Err(Error::validation(
                "insert fraction rounds to zero vertices per batch; set num_batches",
            ))
        }
        None => free_pool.len().div_ceil(n_ins),
    };
    if spec.initial_gt_count > gt_pool.len() {
        return Err(Error::validation(format!(
            "stream needs {} initial ground-truth vertices but only {} exist",
            spec.initial_gt_count,
            gt_pool.len()
        )));
    }

    let mut state = Replay {
        ids: &ids,
        adjacency: &adjacency,
        truth: &truth,
        alive: vec![false; n],
        inserted: vec![false; n],
        revealed: Vec::new(),
        alive_count: 0,
    };
    let mut out = Stream::default();
    let mut t = 0u64;
    let mut gt_iter = gt_pool.into_iter();
    let mut free_iter = free_pool.into_iter();

    if spec.initial_gt_count > 0 {
        let inserts: Vec<u32> = gt_iter.by_ref().take(spec.initial_gt_count).collect();
        out.batches.push(state.batch(t, inserts, Vec::new()));
        t += 1;
    }

    for b in 0..num_batches {
        let mut inserts: Vec<u32> = free_iter.by_ref().take(n_ins).collect();
        inserts.extend(gt_iter.by_ref().take(n_gt));
        let last = b + 1 == num_batches;
        if last && spec.num_batches.is_none() {
            inserts.extend(gt_iter.by_ref());
        }

        let mut deletes = Vec::new();
        let budget = n_del.min(state.alive_count.saturating_sub(1));
        let mut chosen = vec![false; if budget > 0 { state.revealed.len() } else { 0 }];
        while deletes.len() < budget {
            let draw = rng.gen_range(0..state.revealed.len());
            let mut j = draw;
            loop {
                let v = state.revealed[j] as usize;
                if state.alive[v] && !chosen[j] {
                    break;
                }
                j = (j + 1) % state.revealed.len();
            }
            if j != draw {
                out.substitutions += 1;
            }
            chosen[j] = true;
            deletes.push(state.revealed[j]);
        }
        out.batches.push(state.batch(t, inserts, deletes));
        t += 1;
    }
    out.unrevealed = state.inserted.iter().filter(|&&x| !x).count();
    Ok(out)
}

struct Replay<'a> {
    ids: &'a [VertexId],
    adjacency: &'a [Vec<(u32, f64)>],
    truth: &'a [Option<Class>],
    alive: Vec<bool>,
    inserted: Vec<bool>,
    /// Vertices in insertion order, dead ones included.
    revealed: Vec<u32>,
    alive_count: usize,
}

impl Replay<'_> {
    fn batch(&mut self, t: u64, mut inserts: Vec<u32>, mut deletes: Vec<u32>) -> BatchUpdate {
        deletes.sort_unstable();
        for &d in &deletes {
            self.alive[d as usize] = false;
            self.alive_count -= 1;
        }
        inserts.sort_unstable();
        let mut records = Vec::with_capacity(inserts.len());
        for &x in &inserts {
            // mark first so that later ids in this batch see x as present
            self.alive[x as usize] = true;
            self.inserted[x as usize] = true;
            let mut edges: Vec<(VertexId, f64)> = self.adjacency[x as usize]
                .iter()
                .filter(|&&(y, _)| self.alive[y as usize] && y != x)
                .map(|&(y, w)| (self.ids[y as usize], w))
                .collect();
            edges.sort_by_key(|&(v, _)| v);
            records.push(InsertRecord {
                id: self.ids[x as usize],
                ground_truth: self.truth[x as usize],
                edges,
            });
        }
        self.alive_count += inserts.len();
        self.revealed.extend_from_slice(&inserts);
        BatchUpdate {
            t,
            inserts: records,
            deletes: deletes.into_iter().map(|d| self.ids[d as usize]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DynamicGraph;

    fn ring(n: u32) -> (Vec<VertexId>, Vec<WeightedEdge>, Vec<(VertexId, Class)>) {
        let v: Vec<_> = (0..n).map(VertexId).collect();
        let e: Vec<_> = (0..n).map(|i| WeightedEdge::new(i, (i + 1) % n, 1.0)).collect();
        let gt: Vec<_> = (0..n).step_by(10).map(|i| (VertexId(i), Class::from_bit((i / 10 % 2) as u8).unwrap())).collect();
        (v, e, gt)
    }

    #[test]
    fn default_composition_per_full_batch() {
        let (v, e, gt) = ring(1000);
        let spec = StreamSpec {
            initial_gt_count: 2,
            ..StreamSpec::new(100, 5)
        };
        let s = make_stream(&v, &e, &gt, &spec).unwrap();
        let b = &s.batches[3];
        let n_gt = b.inserts.iter().filter(|r| r.ground_truth.is_some()).count();
        assert_eq!(b.inserts.len() - n_gt, 90);
        assert_eq!(n_gt, 1);
        assert_eq!(b.deletes.len(), 9);
    }

    #[test]
    fn pure_growth_rebuilds_the_source() {
        let (v, e, gt) = ring(300);
        let spec = StreamSpec {
            insert_fraction: 0.97,
            gt_fraction: 0.03,
            delete_fraction: 0.0,
            initial_gt_count: 3,
            ..StreamSpec::new(40, 9)
        };
        let s = make_stream(&v, &e, &gt, &spec).unwrap();
        assert_eq!(s.unrevealed, 0);
        let mut g = DynamicGraph::new();
        for b in &s.batches {
            g.apply_batch(b).unwrap();
        }
        assert_eq!(g.num_alive(), 300);
        let mut expected: Vec<_> = e.iter().map(|x| x.normalized()).collect();
        expected.sort_by(|a, b| (a.u, a.v).cmp(&(b.u, b.v)));
        assert_eq!(g.edge_list(), expected);
    }

    #[test]
    fn ground_truth_runs_out_gracefully() {
        let (v, e, gt) = ring(1000);
        // 100 ground-truth vertices, 5 initial, 2 per batch over 10 batches
        let spec = StreamSpec {
            insert_fraction: 0.9,
            gt_fraction: 0.02,
            delete_fraction: 0.08,
            initial_gt_count: 95,
            ..StreamSpec::new(100, 3)
        };
        let s = make_stream(&v, &e, &gt, &spec).unwrap();
        let per_batch: Vec<usize> = s.batches[1..]
            .iter()
            .map(|b| b.inserts.iter().filter(|r| r.ground_truth.is_some()).count())
            .collect();
        assert_eq!(per_batch.iter().sum::<usize>(), 5);
        assert_eq!(&per_batch[..3], &[2, 2, 1]);
    }

    #[test]
    fn infeasible_ground_truth_demand() {
        let (v, e, gt) = ring(100);
        let spec = StreamSpec {
            initial_gt_count: 50,
            ..StreamSpec::new(10, 0)
        };
        assert!(make_stream(&v, &e, &gt, &spec).unwrap_err().is_validation());
    }

    #[test]
    fn fractions_must_sum_to_one() {
        let spec = StreamSpec {
            delete_fraction: 0.5,
            ..StreamSpec::new(10, 0)
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn same_seed_same_stream() {
        let (v, e, gt) = ring(500);
        let spec = StreamSpec {
            initial_gt_count: 5,
            ..StreamSpec::new(50, 77)
        };
        assert_eq!(make_stream(&v, &e, &gt, &spec).unwrap(), make_stream(&v, &e, &gt, &spec).unwrap());
    }
}

#![allow(dead_code)]

use dynlp::builder::{erdos_renyi, SyntheticGraph, SyntheticSpec};
use dynlp::{BatchUpdate, Class, InsertRecord, VertexId, WeightedEdge};

/// Every vertex of `0..n` in one batch; each edge rides on its larger endpoint.
pub fn single_batch(n: usize, edges: &[WeightedEdge], truth: &[(VertexId, Class)]) -> BatchUpdate {
    let mut gt = vec![None; n];
    for &(v, c) in truth {
        gt[v.index()] = Some(c);
    }
    let mut inserts: Vec<InsertRecord> = (0..n)
        .map(|i| InsertRecord {
            id: VertexId::from_index(i),
            ground_truth: gt[i],
            edges: Vec::new(),
        })
        .collect();
    for e in edges {
        let e = e.normalized();
        inserts[e.v.index()].edges.push((e.u, e.w));
    }
    BatchUpdate {
        t: 0,
        inserts,
        deletes: Vec::new(),
    }
}

/// Ground truth first, then every unlabeled vertex in a second batch.
pub fn seeded_pair(n: usize, edges: &[WeightedEdge], truth: &[(VertexId, Class)]) -> [BatchUpdate; 2] {
    let all = single_batch(n, edges, truth);
    let (labeled, unlabeled): (Vec<InsertRecord>, Vec<InsertRecord>) =
        all.inserts.into_iter().partition(|r| r.ground_truth.is_some());
    let is_gt: Vec<bool> = {
        let mut m = vec![false; n];
        for r in &labeled {
            m[r.id.index()] = true;
        }
        m
    };
    // edges between two labeled vertices stay with the first batch, all
    // others move onto the unlabeled endpoint
    let mut first: Vec<InsertRecord> = labeled
        .iter()
        .map(|r| InsertRecord {
            id: r.id,
            ground_truth: r.ground_truth,
            edges: r.edges.iter().copied().filter(|(v, _)| is_gt[v.index()]).collect(),
        })
        .collect();
    let mut second = unlabeled;
    let index: std::collections::HashMap<VertexId, usize> =
        second.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
    for r in &labeled {
        for &(v, w) in &r.edges {
            if !is_gt[v.index()] {
                second[index[&v]].edges.push((r.id, w));
            }
        }
    }
    first.sort_by_key(|r| r.id);
    [
        BatchUpdate {
            t: 0,
            inserts: first,
            deletes: Vec::new(),
        },
        BatchUpdate {
            t: 1,
            inserts: second,
            deletes: Vec::new(),
        },
    ]
}

/// Planted-weight Erdős–Rényi instance made connected by chaining the
/// smallest vertex of each component to the previous one.
pub fn connected_instance(n: usize, avg_degree: f64, seed: u64) -> SyntheticGraph {
    let mut g = erdos_renyi(&SyntheticSpec::new(n, avg_degree, seed)).unwrap();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for e in &g.edges {
        let (a, b) = (find(&mut parent, e.u.index()), find(&mut parent, e.v.index()));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut prev: Option<usize> = None;
    for x in 0..n {
        if find(&mut parent, x) == x {
            if let Some(p) = prev {
                g.edges.push(WeightedEdge::new(p as u32, x as u32, 0.5));
            }
            prev = Some(x);
        }
    }
    g
}

/// Largest absolute difference over the listed vertices.
pub fn max_diff(a: &dynlp::LabelState, b: &dynlp::LabelState, vertices: impl IntoIterator<Item = VertexId>) -> f64 {
    vertices
        .into_iter()
        .map(|v| (a.value(v) - b.value(v)).abs())
        .fold(0.0, f64::max)
}

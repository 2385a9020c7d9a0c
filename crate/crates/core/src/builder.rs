//! Similarity graph construction: cosine kNN over feature vectors and seeded
//! Erdős–Rényi instances with a planted two-class structure.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{VertexId, WeightedEdge};
use crate::labels::Class;

/// Dense feature rows, one per item.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    rows: Vec<Vec<f64>>,
    item_ids: Vec<VertexId>,
    true_labels: Option<Vec<Class>>,
}

impl FeatureMatrix {
    /// Validates uniform dimension, distinct ids and non-zero rows.
    pub fn new(item_ids: Vec<VertexId>, rows: Vec<Vec<f64>>, true_labels: Option<Vec<Class>>) -> Result<Self> {
        if item_ids.len() != rows.len() {
            return Err(Error::validation(format!(
                "{} ids for {} feature rows",
                item_ids.len(),
                rows.len()
            )));
        }
        if let Some(l) = &true_labels {
            if l.len() != rows.len() {
                return Err(Error::validation(format!("{} labels for {} feature rows", l.len(), rows.len())));
            }
        }
        let dim = rows.first().map_or(0, Vec::len);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::validation(format!(
                    "row {} (id {}) has dimension {}, expected {dim}",
                    i,
                    item_ids[i],
                    r.len()
                )));
            }
            if r.iter().any(|x| !x.is_finite()) {
                return Err(Error::validation(format!("row {} (id {}) has a non-finite value", i, item_ids[i])));
            }
            if r.iter().all(|&x| x == 0.0) {
                return Err(Error::validation(format!(
                    "row {} (id {}) is all zeros; cosine similarity is undefined",
                    i, item_ids[i]
                )));
            }
        }
        let mut sorted = item_ids.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::validation("duplicate item ids in feature matrix"));
        }
        Ok(Self {
            rows,
            item_ids,
            true_labels,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn item_ids(&self) -> &[VertexId] {
        &self.item_ids
    }

    pub fn true_labels(&self) -> Option<&[Class]> {
        self.true_labels.as_deref()
    }
}

/// How cosine similarities become edge weights.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnWeighting {
    /// Raw cosine; neighbors with similarity ≤ 0 are dropped.
    #[default]
    Prune,
    /// `(1 + cos) / 2`, keeping every selected neighbor.
    Affine,
}

/// Cosine similarity kNN graph, symmetrized by union with max-merge.
///
/// Each item links to its `k` most similar other items, ties going to the
/// lower id. Output edges are sorted by `(u, v)` with `u < v`.
pub fn knn_graph(features: &FeatureMatrix, k: usize, weighting: KnnWeighting) -> Result<Vec<WeightedEdge>> {
    let n = features.len();
    if k == 0 || k >= n {
        return Err(Error::validation(format!("k must satisfy 1 <= k < n, got k={k}, n={n}")));
    }
    let sq_norms: Vec<f64> = features.rows.iter().map(|r| r.iter().map(|x| x * x).sum::<f64>()).collect();
    let ids = &features.item_ids;
    let directed: Vec<Vec<WeightedEdge>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut scored: Vec<(f64, VertexId)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let dot: f64 = features.rows[i].iter().zip(&features.rows[j]).map(|(a, b)| a * b).sum();
                    ((dot / (sq_norms[i] * sq_norms[j]).sqrt()).clamp(-1.0, 1.0), ids[j])
                })
                .collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            scored
                .into_iter()
                .take(k)
                .filter_map(|(cos, j)| {
                    let w = match weighting {
                        KnnWeighting::Prune => cos,
                        KnnWeighting::Affine => (1.0 + cos) / 2.0,
                    };
                    (w > 0.0).then(|| WeightedEdge { u: ids[i], v: j, w }.normalized())
                })
                .collect()
        })
        .collect();

    let mut all: Vec<WeightedEdge> = directed.into_iter().flatten().collect();
    all.sort_by(|a, b| (a.u, a.v).cmp(&(b.u, b.v)).then(b.w.total_cmp(&a.w)));
    all.dedup_by(|later, first| later.u == first.u && later.v == first.v);
    Ok(all)
}

/// Weight distributions of the planted two-class model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedModel {
    pub intra_low: f64,
    pub intra_high: f64,
    pub inter_low: f64,
    pub inter_high: f64,
}

impl Default for PlantedModel {
    fn default() -> Self {
        Self {
            intra_low: 0.6,
            intra_high: 1.0,
            inter_low: 0.0,
            inter_high: 0.4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub avg_degree: f64,
    pub seed: u64,
    /// Fraction of each class marked as ground truth (at least one each).
    pub labeled_fraction: f64,
    pub planted: PlantedModel,
}

impl SyntheticSpec {
    pub fn new(n: usize, avg_degree: f64, seed: u64) -> Self {
        Self {
            n,
            avg_degree,
            seed,
            labeled_fraction: 0.01,
            planted: PlantedModel::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::validation(format!("n must be at least 2, got {}", self.n)));
        }
        if self.n > u32::MAX as usize {
            return Err(Error::validation("n exceeds the vertex id range"));
        }
        if !(self.avg_degree > 0.0) || self.avg_degree >= self.n as f64 {
            return Err(Error::validation(format!(
                "avg_degree must lie in (0, n), got {} for n={}",
                self.avg_degree, self.n
            )));
        }
        if !(0.0..=1.0).contains(&self.labeled_fraction) {
            return Err(Error::validation(format!(
                "labeled_fraction must lie in [0, 1], got {}",
                self.labeled_fraction
            )));
        }
        let p = &self.planted;
        for (lo, hi) in [(p.intra_low, p.intra_high), (p.inter_low, p.inter_high)] {
            if !(lo >= 0.0 && lo <= hi && hi <= 1.0) || hi <= 0.0 {
                return Err(Error::validation(format!(
                    "planted weight range [{lo}, {hi}] must satisfy 0 <= lo <= hi <= 1 and hi > 0"
                )));
            }
        }
        Ok(())
    }
}

/// A generated instance: edges over ids `0..n`, the planted class of every
/// vertex, and the ground-truth subset.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticGraph {
    pub n: usize,
    pub edges: Vec<WeightedEdge>,
    pub classes: Vec<Class>,
    /// Ground-truth vertices, ascending.
    pub labeled: Vec<VertexId>,
}

impl SyntheticGraph {
    /// `(vertex, class)` of the ground-truth subset.
    pub fn ground_truth(&self) -> Vec<(VertexId, Class)> {
        self.labeled.iter().map(|&v| (v, self.classes[v.index()])).collect()
    }
}

/// Samples `G(n, p)` with `p = avg_degree / (n − 1)` by geometric skipping,
/// plants two equal classes and draws edge weights from the planted model.
pub fn erdos_renyi(spec: &SyntheticSpec) -> Result<SyntheticGraph> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(&mut rng);
    let mut classes = vec![Class::Zero; n];
    for &v in &order[n / 2..] {
        classes[v as usize] = Class::One;
    }

    let p = spec.avg_degree / (n - 1) as f64;
    let mut edges = Vec::with_capacity((spec.avg_degree * n as f64 / 2.0 * 1.05) as usize + 16);
    if p >= 1.0 {
        for u in 0..n {
            for v in (u + 1)..n {
                edges.push((u as u32, v as u32));
            }
        }
    } else {
        // walk the strict lower triangle, skipping Geometric(p) pairs
        let log_q = (1.0 - p).ln();
        let (mut v, mut w): (usize, i64) = (1, -1);
        while v < n {
            let r: f64 = rng.gen();
            w += 1 + ((1.0 - r).ln() / log_q).floor() as i64;
            while w >= v as i64 && v < n {
                w -= v as i64;
                v += 1;
            }
            if v < n {
                edges.push((w as u32, v as u32));
            }
        }
    }

    edges.sort_unstable();

    let pm = spec.planted;
    let mut weighted = Vec::with_capacity(edges.len());
    for (u, v) in edges {
        let (lo, hi) = if classes[u as usize] == classes[v as usize] {
            (pm.intra_low, pm.intra_high)
        } else {
            (pm.inter_low, pm.inter_high)
        };
        let w = sample_positive(&mut rng, lo, hi);
        weighted.push(WeightedEdge::new(u, v, w));
    }

    let mut labeled = Vec::new();
    for class in [Class::Zero, Class::One] {
        let members: Vec<u32> = order.iter().copied().filter(|&v| classes[v as usize] == class).collect();
        let want = ((spec.labeled_fraction * members.len() as f64).round() as usize)
            .max(1)
            .min(members.len());
        labeled.extend(members[..want].iter().map(|&v| VertexId(v)));
    }
    labeled.sort_unstable();

    Ok(SyntheticGraph {
        n,
        edges: weighted,
        classes,
        labeled,
    })
}

/// Uniform draw from `[lo, hi)` excluding zero.
fn sample_positive(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    loop {
        let w = if hi > lo { rng.gen_range(lo..hi) } else { lo };
        if w > 0.0 {
            return w;
        }
    }
}

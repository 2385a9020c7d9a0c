//! Experiment harness: running methods over a stream, accuracy against a
//! reference, Dirichlet energy and timing summaries.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{HarmonicSolver, ItLp, StLp, HARMONIC_SIZE_CAP};
use crate::engine::{DynLp, EngineConfig, IterationReport};
use crate::error::{Error, Result};
use crate::graph::{BatchUpdate, DynamicGraph, VertexId};
use crate::labels::{Class, LabelState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dynlp,
    Itlp,
    Stlp,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Dynlp, Method::Itlp, Method::Stlp, Method::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dynlp => "dynlp",
            Method::Itlp => "itlp",
            Method::Stlp => "stlp",
            Method::Oracle => "oracle",
        }
    }

    /// Methods built on the dense solve.
    pub fn is_dense(self) -> bool {
        matches!(self, Method::Stlp | Method::Oracle)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::validation(format!("unknown method '{s}'; valid methods: dynlp, itlp, stlp, oracle")))
    }
}

/// A label method fed one batch at a time.
pub trait Propagation {
    fn apply_batch(&mut self, batch: &BatchUpdate) -> Result<IterationReport>;
    fn graph(&self) -> &DynamicGraph;
    fn labels(&self) -> &LabelState;
}

macro_rules! propagation {
    ($t:ty) => {
        impl Propagation for $t {
            fn apply_batch(&mut self, batch: &BatchUpdate) -> Result<IterationReport> {
                <$t>::apply_batch(self, batch)
            }
            fn graph(&self) -> &DynamicGraph {
                <$t>::graph(self)
            }
            fn labels(&self) -> &LabelState {
                <$t>::labels(self)
            }
        }
    };
}

propagation!(DynLp);
propagation!(ItLp);
propagation!(StLp);
propagation!(HarmonicSolver);

/// Fresh, empty instance of a method.
pub fn new_method(method: Method, config: EngineConfig) -> Result<Box<dyn Propagation + Send>> {
    Ok(match method {
        Method::Dynlp => Box::new(DynLp::new(config)?),
        Method::Itlp => Box::new(ItLp::new(config)?),
        Method::Stlp => Box::new(StLp::new(config)?),
        Method::Oracle => Box::new(HarmonicSolver::new(config)?),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub batch_index: usize,
    pub iterations: usize,
    pub vertex_updates: usize,
    pub wall_time_ms: f64,
    pub max_change: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub batches: usize,
    pub iterations: usize,
    pub vertex_updates: usize,
    pub wall_time_ms: f64,
    pub all_converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: Method,
    pub per_batch: Vec<BatchRecord>,
    pub totals: Totals,
    pub config_echo: serde_json::Value,
}

impl RunReport {
    pub fn new(method: Method, config_echo: serde_json::Value) -> Self {
        Self {
            method,
            per_batch: Vec::new(),
            totals: Totals {
                all_converged: true,
                ..Totals::default()
            },
            config_echo,
        }
    }

    pub fn push(&mut self, report: &IterationReport) {
        let record = BatchRecord {
            batch_index: self.per_batch.len(),
            iterations: report.iterations,
            vertex_updates: report.updates,
            wall_time_ms: report.wall_time_ms,
            max_change: report.max_change,
            converged: report.converged,
        };
        self.totals.batches += 1;
        self.totals.iterations += record.iterations;
        self.totals.vertex_updates += record.vertex_updates;
        self.totals.wall_time_ms += record.wall_time_ms;
        self.totals.all_converged &= record.converged;
        self.per_batch.push(record);
    }

    /// Whether `totals` equals the sums over `per_batch`.
    pub fn totals_consistent(&self) -> bool {
        let t = &self.totals;
        t.batches == self.per_batch.len()
            && t.iterations == self.per_batch.iter().map(|b| b.iterations).sum::<usize>()
            && t.vertex_updates == self.per_batch.iter().map(|b| b.vertex_updates).sum::<usize>()
            && (t.wall_time_ms - self.per_batch.iter().map(|b| b.wall_time_ms).sum::<f64>()).abs() <= 1e-9 * t.wall_time_ms.max(1.0)
            && t.all_converged == self.per_batch.iter().all(|b| b.converged)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    /// Scored method and reference, when known.
    pub method: Option<Method>,
    pub reference_method: Option<Method>,
    pub agreement: f64,
    pub compared_count: usize,
    pub margin_excluded_count: usize,
}

/// Binary agreement of `(vertex, label)` lists over the same vertices.
///
/// Both sides are thresholded at 0.5 with ties going to class 1. When
/// `epsilon > 0`, vertices whose reference label lies strictly within
/// `epsilon` of 0.5 are counted as margin-excluded instead of compared.
pub fn binary_accuracy(
    candidate: &[(VertexId, f64)],
    reference: &[(VertexId, f64)],
    epsilon: f64,
) -> Result<AccuracyReport> {
    let mut cand = candidate.to_vec();
    let mut refs = reference.to_vec();
    cand.sort_by_key(|&(v, _)| v);
    refs.sort_by_key(|&(v, _)| v);
    let same = cand.len() == refs.len() && cand.iter().zip(&refs).all(|(a, b)| a.0 == b.0);
    if !same {
        let a: Vec<VertexId> = cand.iter().map(|p| p.0).collect();
        let b: Vec<VertexId> = refs.iter().map(|p| p.0).collect();
        let only_a = a.iter().filter(|v| b.binary_search(v).is_err()).count();
        let only_b = b.iter().filter(|v| a.binary_search(v).is_err()).count();
        return Err(Error::validation(format!(
            "label vectors cover different vertices (symmetric difference {})",
            only_a + only_b
        )));
    }
    let mut matches = 0;
    let mut compared = 0;
    let mut excluded = 0;
    for ((_, c), (_, r)) in cand.iter().zip(&refs) {
        if epsilon > 0.0 && (r - 0.5).abs() < epsilon {
            excluded += 1;
            continue;
        }
        compared += 1;
        if Class::of_fraction(*c) == Class::of_fraction(*r) {
            matches += 1;
        }
    }
    Ok(AccuracyReport {
        method: None,
        reference_method: None,
        agreement: if compared == 0 { 1.0 } else { matches as f64 / compared as f64 },
        compared_count: compared,
        margin_excluded_count: excluded,
    })
}

/// `(vertex, label)` for every alive unlabeled vertex, ascending.
pub fn unlabeled_values(graph: &DynamicGraph, labels: &LabelState) -> Vec<(VertexId, f64)> {
    graph
        .alive_vertices()
        .filter(|&v| !labels.is_labeled(v))
        .map(|v| (v, labels.value(v)))
        .collect()
}

/// `½ Σ w (F_u − F_v)²` over undirected edges, each counted once.
pub fn dirichlet_energy(graph: &DynamicGraph, labels: &LabelState) -> f64 {
    let mut e = 0.0;
    for u in graph.alive_vertices() {
        let fu = labels.value(u);
        for (v, w) in graph.neighbors(u) {
            if u < v {
                let d = fu - labels.value(v);
                e += w * d * d;
            }
        }
    }
    0.5 * e
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs equal lengths");
    let rx = ranks(x);
    let ry = ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub engine: EngineConfig,
    /// Method whose final labels every other method is scored against.
    pub reference: Option<Method>,
    pub epsilon_margin: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            engine: EngineConfig::default(),
            reference: Some(Method::Stlp),
            epsilon_margin: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub batch: usize,
    pub method: Method,
    pub relative_to: Method,
    /// `wall(relative_to) / wall(method)`.
    pub speedup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub reports: Vec<RunReport>,
    pub speedups: Vec<SpeedupRow>,
    pub accuracy: Vec<AccuracyReport>,
}

/// Largest number of alive unlabeled vertices reached while replaying.
pub fn peak_unlabeled(stream: &[BatchUpdate]) -> usize {
    let mut unlabeled = std::collections::HashSet::new();
    let mut peak = 0;
    for b in stream {
        for d in &b.deletes {
            unlabeled.remove(d);
        }
        for r in &b.inserts {
            if r.ground_truth.is_none() {
                unlabeled.insert(r.id);
            }
        }
        peak = peak.max(unlabeled.len());
    }
    peak
}

/// Runs every method over the same stream, one after another, then scores
/// the final labels against the reference.
pub fn compare_methods(stream: &[BatchUpdate], methods: &[Method], config: &CompareConfig) -> Result<Comparison> {
    if methods.is_empty() {
        return Err(Error::validation("at least one method is required"));
    }
    config.engine.validate()?;
    let mut all = methods.to_vec();
    all.dedup();
    if let Some(r) = config.reference {
        if !all.contains(&r) {
            all.push(r);
        }
    }
    if all.iter().any(|m| m.is_dense()) {
        let peak = peak_unlabeled(stream);
        if peak > HARMONIC_SIZE_CAP {
            return Err(Error::SizeCap {
                what: "unlabeled vertices for stlp/oracle (dense solve)".into(),
                size: peak,
                cap: HARMONIC_SIZE_CAP,
            });
        }
    }
    let echo = serde_json::to_value(config)?;

    let mut reports = Vec::new();
    let mut finals = Vec::new();
    for &m in &all {
        let mut runner = new_method(m, config.engine)?;
        let mut report = RunReport::new(m, echo.clone());
        for b in stream {
            let r = runner.apply_batch(b)?;
            report.push(&r);
        }
        log::info!(
            "{m}: {} batches, {} iterations, {} updates, {:.1} ms",
            report.totals.batches,
            report.totals.iterations,
            report.totals.vertex_updates,
            report.totals.wall_time_ms
        );
        finals.push(unlabeled_values(runner.graph(), runner.labels()));
        reports.push(report);
    }

    let mut speedups = Vec::new();
    for (i, a) in reports.iter().enumerate() {
        for (j, b) in reports.iter().enumerate() {
            if i == j {
                continue;
            }
            for (ra, rb) in a.per_batch.iter().zip(&b.per_batch) {
                speedups.push(SpeedupRow {
                    batch: ra.batch_index,
                    method: a.method,
                    relative_to: b.method,
                    speedup: rb.wall_time_ms / ra.wall_time_ms.max(f64::MIN_POSITIVE),
                });
            }
        }
    }

    let mut accuracy = Vec::new();
    if let Some(reference) = config.reference {
        let ri = all.iter().position(|&m| m == reference).expect("reference was added");
        for (k, &m) in all.iter().enumerate() {
            let mut report = binary_accuracy(&finals[k], &finals[ri], config.epsilon_margin)?;
            report.method = Some(m);
            report.reference_method = Some(reference);
            accuracy.push(report);
        }
    }

    // keep only the requested methods' reports, in request order
    let requested: Vec<RunReport> = reports.into_iter().filter(|r| methods.contains(&r.method)).collect();
    let speedups = speedups
        .into_iter()
        .filter(|s| methods.contains(&s.method) && methods.contains(&s.relative_to))
        .collect();
    Ok(Comparison {
        reports: requested,
        speedups,
        accuracy: accuracy.into_iter().filter(|a| a.method.is_some_and(|m| methods.contains(&m))).collect(),
    })
}

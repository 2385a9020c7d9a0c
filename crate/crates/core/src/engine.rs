//! Incremental batched label propagation.
//!
//! A batch is processed in three steps:
//!
//! 1. **Change adjustment.** Deletions and insertions are applied to the
//!    graph. Neighbors of deleted vertices, inserted vertices and their
//!    neighbors form the affected set. The inserted unlabeled vertices, with
//!    the edges among them heavier than τ, form a small intra-batch graph
//!    whose connected components are found with hook/jump passes.
//! 2. **Initialization.** Each component `c` gets one starting value for all
//!    its members,
//!
//!    > F = 0.5 − W₀ / (2 (W₀ + W₁)) + W₁ / (2 (W₀ + W₁))
//!
//!    where `W₀`, `W₁` sum the weights from members of `c` to ground-truth
//!    vertices of class 0 and 1. Components without any ground-truth edge
//!    start at 0.5.
//! 3. **Propagation.** Frontier vertices are updated with
//!
//!    > F′ = F + (0 − F) W₀ᵤ / Wᵤ + (1 − F) W₁ᵤ / Wᵤ + Σᵥ (Fᵥ − F) w(u,v) / Wᵤ
//!
//!    (the sum runs over unlabeled neighbors, `Wᵤ` is the weighted degree),
//!    which is the weighted average of the neighbor labels. The new value is
//!    always committed. A vertex that moved by more than δ stays in the
//!    frontier and pulls its unlabeled neighbors in.
//!
//! Small moves do not wake neighbors directly. Instead each vertex keeps a
//! bound on how far its neighborhood average has drifted since its own last
//! update (`Σ α·|ΔFᵥ|`), and re-enters the frontier once that bound exceeds
//! δ. When the frontier empties, every unlabeled vertex is therefore within δ
//! of its neighborhood average.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::components::{self, find_components, ComponentLabeling, IntraBatchGraph};
use crate::error::{Error, Result};
use crate::graph::{BatchUpdate, DynamicGraph, VertexId, WeightedEdge};
use crate::labels::{LabelState, NEUTRAL};
use crate::reach::ReachScratch;

/// Default convergence threshold.
pub const DEFAULT_DELTA: f64 = 1e-4;

/// Frontier sizes below this are updated on the calling thread.
const PARALLEL_FRONTIER: usize = 2048;

/// Update schedule within one propagation step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// All reads hit the previous iteration's values. Data-parallel and
    /// bit-identical for any thread count.
    #[default]
    ParallelJacobi,
    /// Ascending id order, reading the freshest values. Never increases the
    /// Dirichlet energy.
    SequentialGaussSeidel,
}

/// Similarity threshold for intra-batch components.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tau {
    /// Mean edge weight of the current graph.
    #[default]
    Auto,
    Fixed(f64),
}

/// Starting value for inserted unlabeled vertices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initialization {
    /// Per-component class-weight formula.
    #[default]
    ComponentWeights,
    /// Everything starts at 0.5.
    Neutral,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub delta: f64,
    pub tau: Tau,
    /// Iteration cap per batch; `None` means 10 × alive vertices.
    pub max_iterations: Option<usize>,
    pub mode: Schedule,
    pub initialization: Initialization,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            delta: DEFAULT_DELTA,
            tau: Tau::Auto,
            max_iterations: None,
            mode: Schedule::ParallelJacobi,
            initialization: Initialization::ComponentWeights,
        }
    }
}

impl EngineConfig {
    pub fn with_delta(delta: f64) -> Self {
        Self {
            delta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::validation(format!("delta must be positive, got {}", self.delta)));
        }
        if let Tau::Fixed(t) = self.tau {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::validation(format!("tau must be non-negative, got {t}")));
            }
        }
        if self.max_iterations == Some(0) {
            return Err(Error::validation("max_iterations must be at least 1"));
        }
        Ok(())
    }

    pub(crate) fn iteration_cap(&self, alive: usize) -> usize {
        self.max_iterations
            .unwrap_or_else(|| 10usize.saturating_mul(alive).max(1))
    }
}

/// Counters for vertices excluded from propagation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warnings {
    /// Unlabeled vertices with no alive neighbor, pinned at 0.5.
    pub isolated: usize,
    /// Unlabeled vertices whose component has no ground truth, pinned at 0.5.
    pub unreachable: usize,
    /// Frontier vertices found with zero weighted degree during a step.
    pub zero_degree: usize,
}

impl Warnings {
    pub fn total(&self) -> usize {
        self.isolated + self.unreachable + self.zero_degree
    }

    fn add(&mut self, other: Warnings) {
        self.isolated += other.isolated;
        self.unreachable += other.unreachable;
        self.zero_degree += other.zero_degree;
    }
}

/// Per-batch propagation report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iterations: usize,
    /// Total vertex updates (sum of frontier sizes).
    pub updates: usize,
    /// Largest label change in the last step.
    pub max_change: f64,
    pub converged: bool,
    pub warnings: Warnings,
    pub wall_time_ms: f64,
}

/// Class-weight sums of one intra-batch component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub component_id: u32,
    pub w_to_class0: f64,
    pub w_to_class1: f64,
    pub member_count: usize,
}

impl ComponentSummary {
    /// Starting label of the component's members.
    pub fn initial_value(&self) -> f64 {
        initial_value(self.w_to_class0, self.w_to_class1)
    }
}

/// `0.5 − W₀/(2(W₀+W₁)) + W₁/(2(W₀+W₁))`, or 0.5 when both sums vanish.
pub fn initial_value(w0: f64, w1: f64) -> f64 {
    let total = w0 + w1;
    if !(total > 0.0) {
        return NEUTRAL;
    }
    (0.5 - w0 / (2.0 * total) + w1 / (2.0 * total)).clamp(0.0, 1.0)
}

/// Sets every unlabeled member of each component to the component's starting
/// value and returns the per-component class weights.
pub fn initialize_component_labels(
    graph: &DynamicGraph,
    labels: &mut LabelState,
    components: &ComponentLabeling,
) -> Vec<ComponentSummary> {
    let mut summaries: Vec<ComponentSummary> = (0..components.num_components as u32)
        .map(|component_id| ComponentSummary {
            component_id,
            w_to_class0: 0.0,
            w_to_class1: 0.0,
            member_count: 0,
        })
        .collect();
    for (&u, &c) in components.vertices.iter().zip(&components.component_id) {
        let s = &mut summaries[c as usize];
        s.member_count += 1;
        for (v, w) in graph.neighbors(u) {
            match labels.ground_truth(v) {
                Some(crate::labels::Class::Zero) => s.w_to_class0 += w,
                Some(crate::labels::Class::One) => s.w_to_class1 += w,
                None => {}
            }
        }
    }
    for (&u, &c) in components.vertices.iter().zip(&components.component_id) {
        if !labels.is_labeled(u) {
            labels.set_value(u, summaries[c as usize].initial_value());
        }
    }
    summaries
}

/// The set of vertices still to update, sorted and without duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Frontier {
    members: Vec<VertexId>,
}

impl Frontier {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a frontier from arbitrary candidates, keeping only alive,
    /// unlabeled, unpinned vertices.
    pub fn from_candidates(
        graph: &DynamicGraph,
        labels: &LabelState,
        candidates: impl IntoIterator<Item = VertexId>,
    ) -> Self {
        let mut members: Vec<VertexId> = candidates
            .into_iter()
            .filter(|&v| graph.is_alive(v) && !labels.is_labeled(v) && !labels.is_neutral(v))
            .collect();
        members.sort_unstable();
        members.dedup();
        Self { members }
    }

    pub fn members(&self) -> &[VertexId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Outcome of one propagation step.
#[derive(Clone, Debug, Default)]
pub struct StepOutcome {
    pub next: Frontier,
    pub max_change: f64,
    pub updates: usize,
    pub zero_degree: usize,
}

struct VertexUpdate {
    vertex: VertexId,
    old: f64,
    new: f64,
    degree: f64,
}

/// Frontier-driven propagation state: cached weighted degrees and the
/// per-vertex drift bound that decides re-entry into the frontier.
#[derive(Clone, Debug, Default)]
pub struct Propagator {
    state: Vec<VertexState>,
    epoch: u32,
}

/// Kept together so one cache line serves a neighbor visit.
#[derive(Clone, Copy, Debug)]
struct VertexState {
    /// Cached weighted degree; NaN when stale.
    degree: f64,
    drift: f64,
    mark: u32,
}

impl Default for VertexState {
    fn default() -> Self {
        Self {
            degree: f64::NAN,
            drift: 0.0,
            mark: 0,
        }
    }
}

impl Propagator {
    pub fn new() -> Self {
        Self::default()
    }

    fn grow(&mut self, bound: usize) {
        if self.state.len() < bound {
            self.state.resize(bound, VertexState::default());
        }
    }

    /// Forgets cached degrees of vertices whose adjacency changed.
    pub fn invalidate(&mut self, vertices: &[VertexId]) {
        for v in vertices {
            if let Some(s) = self.state.get_mut(v.index()) {
                s.degree = f64::NAN;
            }
        }
    }

    /// Resets the drift bound of vertices, e.g. when they are (re)inserted.
    pub fn reset(&mut self, vertices: &[VertexId]) {
        for v in vertices {
            if let Some(s) = self.state.get_mut(v.index()) {
                s.drift = 0.0;
            }
        }
    }

    fn next_epoch(&mut self) -> u32 {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.state.iter_mut().for_each(|s| s.mark = 0);
            self.epoch = 1;
        }
        self.epoch
    }

    /// Runs one propagation step over `frontier`.
    pub fn step(
        &mut self,
        graph: &DynamicGraph,
        labels: &mut LabelState,
        frontier: &Frontier,
        delta: f64,
        mode: Schedule,
    ) -> StepOutcome {
        self.grow(graph.id_bound());
        labels.reserve_ids(graph.id_bound());
        match mode {
            Schedule::ParallelJacobi => self.step_jacobi(graph, labels, frontier, delta),
            Schedule::SequentialGaussSeidel => self.step_gauss_seidel(graph, labels, frontier, delta),
        }
    }

    fn step_jacobi(
        &mut self,
        graph: &DynamicGraph,
        labels: &mut LabelState,
        frontier: &Frontier,
        delta: f64,
    ) -> StepOutcome {
        let updates: Vec<VertexUpdate> = {
            let snapshot: &LabelState = labels;
            let compute = |&u: &VertexId| {
                let (new, degree) = averaged_label(graph, snapshot, u);
                VertexUpdate {
                    vertex: u,
                    old: snapshot.value(u),
                    new,
                    degree,
                }
            };
            if frontier.len() >= PARALLEL_FRONTIER {
                frontier.members.par_iter().map(compute).collect()
            } else {
                frontier.members.iter().map(compute).collect()
            }
        };
        let mut out = StepOutcome {
            updates: updates.len(),
            ..StepOutcome::default()
        };
        for up in &updates {
            let s = &mut self.state[up.vertex.index()];
            s.degree = up.degree;
            s.drift = 0.0;
            if up.degree > 0.0 {
                labels.set_value(up.vertex, up.new);
            } else {
                labels.pin_neutral(up.vertex);
                out.zero_degree += 1;
            }
        }
        let epoch = self.next_epoch();
        let mut next = Vec::new();
        for up in &updates {
            if up.degree > 0.0 {
                let change = (up.new - up.old).abs();
                out.max_change = out.max_change.max(change);
                self.spread(graph, labels, up.vertex, change, delta, epoch, &mut next);
            }
        }
        out.next = Frontier {
            members: self.ordered(next, epoch),
        };
        out
    }

    fn step_gauss_seidel(
        &mut self,
        graph: &DynamicGraph,
        labels: &mut LabelState,
        frontier: &Frontier,
        delta: f64,
    ) -> StepOutcome {
        let epoch = self.next_epoch();
        let mut out = StepOutcome {
            updates: frontier.len(),
            ..StepOutcome::default()
        };
        let mut next = Vec::new();
        for &u in &frontier.members {
            let old = labels.value(u);
            let (new, degree) = averaged_label(graph, labels, u);
            let s = &mut self.state[u.index()];
            s.degree = degree;
            s.drift = 0.0;
            if degree > 0.0 {
                labels.set_value(u, new);
                let change = (new - old).abs();
                out.max_change = out.max_change.max(change);
                self.spread(graph, labels, u, change, delta, epoch, &mut next);
            } else {
                labels.pin_neutral(u);
                out.zero_degree += 1;
            }
        }
        out.next = Frontier {
            members: self.ordered(next, epoch),
        };
        out
    }

    /// Sorts a frontier; dense ones are read back from the marks instead.
    fn ordered(&self, mut next: Vec<VertexId>, epoch: u32) -> Vec<VertexId> {
        if next.len() * 16 < self.state.len() {
            next.sort_unstable();
            return next;
        }
        next.clear();
        next.extend(
            self.state
                .iter()
                .enumerate()
                .filter(|(_, s)| s.mark == epoch)
                .map(|(i, _)| VertexId::from_index(i)),
        );
        next
    }

    /// Pushes the effect of `u` moving by `change` onto its neighbors.
    #[allow(clippy::too_many_arguments)]
    fn spread(
        &mut self,
        graph: &DynamicGraph,
        labels: &LabelState,
        u: VertexId,
        change: f64,
        delta: f64,
        epoch: u32,
        next: &mut Vec<VertexId>,
    ) {
        let loud = change > delta;
        let s = &mut self.state[u.index()];
        if loud && s.mark != epoch {
            s.mark = epoch;
            next.push(u);
        }
        if change == 0.0 {
            return;
        }
        for (x, w) in graph.neighbors(u) {
            if labels.is_fixed(x) {
                continue;
            }
            let s = &mut self.state[x.index()];
            if s.mark == epoch {
                // already queued; its drift resets when it is updated
                continue;
            }
            if !loud {
                if s.degree.is_nan() {
                    s.degree = graph.neighbors(x).map(|(_, w)| w).sum();
                }
                s.drift += change * w / s.degree;
            }
            if loud || s.drift > delta {
                s.mark = epoch;
                next.push(x);
            }
        }
    }
}

/// New label of `u` from the current labels, with its weighted degree.
///
/// Written in the incremental form `F + Σ w (Fᵥ − F) / d`; ground-truth
/// neighbors already hold their class value.
fn averaged_label(graph: &DynamicGraph, labels: &LabelState, u: VertexId) -> (f64, f64) {
    let values = labels.values();
    let f = values[u.index()];
    let mut w_all = 0.0;
    let mut pull = 0.0;
    for (v, w) in graph.neighbors(u) {
        w_all += w;
        pull += (values[v.index()] - f) * w;
    }
    if !(w_all > 0.0) {
        return (NEUTRAL, 0.0);
    }
    ((f + pull / w_all).clamp(0.0, 1.0), w_all)
}

/// One step of frontier propagation; see [`Propagator::step`].
pub fn propagate_step(
    graph: &DynamicGraph,
    labels: &mut LabelState,
    frontier: &Frontier,
    delta: f64,
    mode: Schedule,
) -> StepOutcome {
    Propagator::new().step(graph, labels, frontier, delta, mode)
}

/// Runs steps until the frontier empties or the cap is hit.
pub(crate) fn converge(
    propagator: &mut Propagator,
    graph: &DynamicGraph,
    labels: &mut LabelState,
    mut frontier: Frontier,
    delta: f64,
    mode: Schedule,
    cap: usize,
) -> IterationReport {
    let mut report = IterationReport::default();
    while !frontier.is_empty() && report.iterations < cap {
        let step = propagator.step(graph, labels, &frontier, delta, mode);
        report.iterations += 1;
        report.updates += step.updates;
        report.max_change = step.max_change;
        report.warnings.zero_degree += step.zero_degree;
        frontier = step.next;
    }
    report.converged = frontier.is_empty();
    report
}

/// The incremental engine: owns the evolving graph and its labels.
#[derive(Clone, Debug)]
pub struct DynLp {
    graph: DynamicGraph,
    labels: LabelState,
    config: EngineConfig,
    propagator: Propagator,
    reach: ReachScratch,
    last_components: Option<ComponentLabeling>,
}

impl DynLp {
    pub fn new(config: EngineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            graph: DynamicGraph::new(),
            labels: LabelState::new(),
            config,
            propagator: Propagator::new(),
            reach: ReachScratch::default(),
            last_components: None,
        })
    }

    pub fn graph(&self) -> &DynamicGraph {
        &self.graph
    }

    pub fn labels(&self) -> &LabelState {
        &self.labels
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Switches the label initialization used by later batches.
    pub fn set_initialization(&mut self, initialization: Initialization) {
        self.config.initialization = initialization;
    }

    /// Components found among the inserted vertices of the last batch.
    pub fn last_components(&self) -> Option<&ComponentLabeling> {
        self.last_components.as_ref()
    }

    /// Applies one batch and propagates until convergence. An invalid batch
    /// leaves the state untouched.
    pub fn apply_batch(&mut self, batch: &BatchUpdate) -> Result<IterationReport> {
        let start = Instant::now();
        let effect = self.graph.apply_batch(batch)?;
        self.propagator.grow(self.graph.id_bound());
        self.labels.reserve_ids(self.graph.id_bound());

        // Step 1: change adjustment
        let fresh_unlabeled = crate::baselines::absorb_labels(&mut self.labels, batch);
        let inserted: Vec<VertexId> = batch.inserts.iter().map(|r| r.id).collect();
        self.propagator.invalidate(&effect.deletion_affected);
        self.propagator.invalidate(&effect.insertion_affected);
        self.propagator.reset(&inserted);

        let components = self.intra_batch_components(batch, fresh_unlabeled)?;

        // Step 2: initialization
        if self.config.initialization == Initialization::ComponentWeights {
            initialize_component_labels(&self.graph, &mut self.labels, &components);
        }
        self.last_components = Some(components);

        // Step 3: propagation
        let mut seeds = effect.deletion_affected;
        seeds.extend_from_slice(&effect.insertion_affected);
        let reach = self.reach.classify(&self.graph, &mut self.labels, &seeds);
        seeds.extend_from_slice(&reach.released);
        let frontier = Frontier::from_candidates(&self.graph, &self.labels, seeds);
        let cap = self.config.iteration_cap(self.graph.num_alive());
        let mut report = converge(
            &mut self.propagator,
            &self.graph,
            &mut self.labels,
            frontier,
            self.config.delta,
            self.config.mode,
            cap,
        );
        report.warnings.add(Warnings {
            isolated: reach.isolated,
            unreachable: reach.unreachable,
            zero_degree: 0,
        });
        if !report.converged {
            log::warn!(
                "batch {} stopped after {} iterations without converging",
                batch.t,
                report.iterations
            );
        }
        report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
        Ok(report)
    }

    fn intra_batch_components(
        &self,
        batch: &BatchUpdate,
        mut vertices: Vec<VertexId>,
    ) -> Result<ComponentLabeling> {
        vertices.sort_unstable();
        let within = |v: VertexId| vertices.binary_search(&v).is_ok();
        let edges: Vec<WeightedEdge> = batch
            .merged_edges()
            .into_iter()
            .filter(|e| within(e.u) && within(e.v))
            .collect();
        let tau = match self.config.tau {
            Tau::Fixed(t) => t,
            Tau::Auto => components::default_tau(&self.graph).unwrap_or(0.0),
        };
        let g = IntraBatchGraph::new(vertices, &edges, tau)?;
        Ok(find_components(&g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::InsertRecord;
    use crate::labels::Class;

    fn vid(v: u32) -> VertexId {
        VertexId(v)
    }

    #[test]
    fn initial_value_examples() {
        assert_eq!(initial_value(0.0, 0.0), 0.5);
        assert_eq!(initial_value(7.0, 7.0), 0.5);
        assert_eq!(initial_value(1.0, 3.0), 0.75);
    }

    fn star(f_u: f64, neighbors: &[(Option<Class>, f64, f64)]) -> (DynamicGraph, LabelState) {
        let edges: Vec<_> = (0..neighbors.len())
            .map(|i| WeightedEdge::new(0, i as u32 + 1, neighbors[i].1))
            .collect();
        let g = DynamicGraph::from_edges((0..=neighbors.len() as u32).map(VertexId), &edges).unwrap();
        let mut labels = LabelState::new();
        labels.insert_unlabeled(vid(0), f_u);
        for (i, &(class, _, f)) in neighbors.iter().enumerate() {
            let v = vid(i as u32 + 1);
            match class {
                Some(c) => labels.set_truth(v, c),
                None => labels.insert_unlabeled(v, f),
            }
        }
        (g, labels)
    }

    #[test]
    fn balanced_labeled_neighbors_give_half() {
        for f_u in [0.0, 0.3, 1.0] {
            let (g, mut labels) = star(f_u, &[(Some(Class::Zero), 1.0, 0.0), (Some(Class::One), 1.0, 1.0)]);
            let frontier = Frontier::from_candidates(&g, &labels, [vid(0)]);
            propagate_step(&g, &mut labels, &frontier, 1e-4, Schedule::ParallelJacobi);
            assert!((labels.value(vid(0)) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn unlabeled_neighbors_average_independent_of_self() {
        let (g, mut labels) = star(0.9, &[(None, 1.0, 0.2), (None, 1.0, 0.4)]);
        let frontier = Frontier::from_candidates(&g, &labels, [vid(0)]);
        let out = propagate_step(&g, &mut labels, &frontier, 1e-4, Schedule::ParallelJacobi);
        assert!((labels.value(vid(0)) - 0.3).abs() < 1e-15);
        assert!((out.max_change - 0.6).abs() < 1e-12);
        // moved by more than delta: itself and both unlabeled neighbors follow
        assert_eq!(out.next.members(), &[vid(0), vid(1), vid(2)]);
    }

    fn path_state() -> (DynamicGraph, LabelState) {
        // L0(0) - a(1) - b(2) - L1(3)
        let edges = [
            WeightedEdge::new(0, 1, 1.0),
            WeightedEdge::new(1, 2, 1.0),
            WeightedEdge::new(2, 3, 1.0),
        ];
        let g = DynamicGraph::from_edges((0..4).map(VertexId), &edges).unwrap();
        let mut labels = LabelState::new();
        labels.set_truth(vid(0), Class::Zero);
        labels.set_truth(vid(3), Class::One);
        labels.insert_unlabeled(vid(1), 0.5);
        labels.insert_unlabeled(vid(2), 0.5);
        (g, labels)
    }

    #[test]
    fn path_converges_to_linear_interpolation() {
        for mode in [Schedule::ParallelJacobi, Schedule::SequentialGaussSeidel] {
            let (g, mut labels) = path_state();
            let frontier = Frontier::from_candidates(&g, &labels, [vid(1), vid(2)]);
            let report = converge(&mut Propagator::new(), &g, &mut labels, frontier, 1e-12, mode, 10_000);
            assert!(report.converged);
            assert!((labels.value(vid(1)) - 1.0 / 3.0).abs() < 1e-10);
            assert!((labels.value(vid(2)) - 2.0 / 3.0).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_degree_frontier_vertex_is_pinned() {
        let g = DynamicGraph::from_edges([vid(0)], &[]).unwrap();
        let mut labels = LabelState::new();
        labels.insert_unlabeled(vid(0), 0.9);
        let frontier = Frontier::from_candidates(&g, &labels, [vid(0)]);
        let out = propagate_step(&g, &mut labels, &frontier, 1e-4, Schedule::ParallelJacobi);
        assert_eq!(out.zero_degree, 1);
        assert!(out.next.is_empty());
        assert_eq!(labels.value(vid(0)), 0.5);
        assert!(labels.is_neutral(vid(0)));
    }

    fn record(id: u32, gt: Option<Class>, edges: &[(u32, f64)]) -> InsertRecord {
        InsertRecord {
            id: vid(id),
            ground_truth: gt,
            edges: edges.iter().map(|&(v, w)| (vid(v), w)).collect(),
        }
    }

    #[test]
    fn empty_batch_is_a_no_op() {
        let mut engine = DynLp::new(EngineConfig::default()).unwrap();
        engine
            .apply_batch(&BatchUpdate {
                t: 0,
                inserts: vec![
                    record(0, Some(Class::Zero), &[]),
                    record(1, None, &[(0, 1.0)]),
                    record(2, Some(Class::One), &[(1, 1.0)]),
                ],
                deletes: vec![],
            })
            .unwrap();
        let before = engine.labels().values().to_vec();
        let report = engine.apply_batch(&BatchUpdate::default()).unwrap();
        assert_eq!(report.iterations, 0);
        assert!(report.converged);
        assert_eq!(engine.labels().values(), &before[..]);
    }

    #[test]
    fn invalid_batch_leaves_state_untouched() {
        let mut engine = DynLp::new(EngineConfig::default()).unwrap();
        engine
            .apply_batch(&BatchUpdate {
                t: 0,
                inserts: vec![record(0, Some(Class::Zero), &[]), record(1, None, &[(0, 1.0)])],
                deletes: vec![],
            })
            .unwrap();
        let before = engine.labels().values().to_vec();
        let bad = BatchUpdate {
            t: 1,
            inserts: vec![record(2, None, &[(9, 1.0)])],
            deletes: vec![vid(1)],
        };
        assert!(engine.apply_batch(&bad).is_err());
        assert!(engine.graph().is_alive(vid(1)));
        assert_eq!(engine.labels().values(), &before[..]);
    }

    #[test]
    fn isolated_insert_is_pinned_and_flagged() {
        let mut engine = DynLp::new(EngineConfig::default()).unwrap();
        let report = engine
            .apply_batch(&BatchUpdate {
                t: 0,
                inserts: vec![
                    record(0, Some(Class::One), &[]),
                    record(1, None, &[(0, 1.0)]),
                    record(2, None, &[]),
                ],
                deletes: vec![],
            })
            .unwrap();
        assert_eq!(report.warnings.isolated, 1);
        assert!(engine.labels().is_neutral(vid(2)));
        assert!((engine.labels().value(vid(1)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(EngineConfig::with_delta(0.0).validate().is_err());
        assert!(EngineConfig::with_delta(-1.0).validate().is_err());
        let cfg = EngineConfig {
            max_iterations: Some(0),
            ..EngineConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(EngineConfig::default().validate().is_ok());
        assert_eq!(EngineConfig::default().delta, 1e-4);
    }
}

//! Robustness-guided kinodynamic tree search.

mod steering;
mod tree;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dias::{CompositionConfig, DiasError};
use crate::dynamics::{
    adaptive_sample, rollout, steer_exact_steps, ConnectConfig, IkCache, Segment, SystemModel,
};
use crate::formula::{Formula, RegionHint};
use crate::monitor::{Interval, MonitorError};
use crate::robustness::{robustness, RobustnessError, Semantics, Trace};

pub use steering::{optimize_control, steering_cost, Steered, SteeringBudget};
pub use tree::{weighted_distance, Tree, TreeNode};

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error("initial state {0:?} is outside the state bounds")]
    InitOutOfBounds(Vec<f64>),
    #[error("invalid planner configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error(transparent)]
    Dias(#[from] DiasError),
    #[error(transparent)]
    Robustness(#[from] RobustnessError),
    #[error("no solution node in the tree")]
    NoSolution,
    #[error("stored value {stored} differs from recomputed {recomputed}")]
    Inconsistent { stored: f64, recomputed: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub max_iters: usize,
    pub k_near: usize,
    pub p_bias: f64,
    /// Random controls drawn per neighbor.
    pub shots: usize,
    /// Coordinate-descent sweeps on the best control.
    pub refine_iters: usize,
    /// Largest time gap bridged by one extension.
    pub max_gap: usize,
    pub composition: CompositionConfig,
    pub semantics: Semantics,
    pub connect: ConnectConfig,
    pub distance_weights: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            max_iters: 1000,
            k_near: 15,
            p_bias: 0.5,
            shots: 16,
            refine_iters: 10,
            max_gap: 5,
            composition: CompositionConfig::default(),
            semantics: Semantics::Agm,
            connect: ConnectConfig::default(),
            distance_weights: None,
            seed: 0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self, state_dim: usize) -> Result<(), PlanError> {
        let bad = |m: String| Err(PlanError::Config(m));
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if self.k_near == 0 {
            return bad("k_near must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.p_bias) {
            return bad(format!("p_bias {} is not a probability", self.p_bias));
        }
        if self.max_gap == 0 {
            return bad("max_gap must be at least 1".into());
        }
        if let Some(w) = &self.distance_weights {
            if w.len() != state_dim || w.iter().any(|x| !(*x >= 0.0)) {
                return bad(format!(
                    "distance_weights needs {state_dim} non-negative entries"
                ));
            }
        }
        self.composition.validate().map_err(PlanError::Config)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Solved,
    Exhausted,
}

/// One row of the per-iteration log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub wall_ms: f64,
    pub best_lo: f64,
    pub best_hi: f64,
    pub gap: f64,
    pub tree_size: usize,
    pub solved: bool,
}

#[derive(Clone, Debug)]
pub struct PlanResult {
    pub status: PlanStatus,
    /// Exact value of the best solution, if any.
    pub eta: Option<f64>,
    /// Interval of the incumbent node at the end of the run.
    pub best: Interval,
    pub controls: Vec<Vec<f64>>,
    pub states: Vec<Vec<f64>>,
    pub metrics: Vec<IterationRecord>,
    pub first_solution_iter: Option<usize>,
    pub ik_hits: u64,
    pub ik_misses: u64,
}

/// Outcome of an `update_eta` call.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Update {
    Added(usize),
    Rejected,
    Rewired,
    RewireRejected,
}

pub struct Planner<'a> {
    sys: &'a dyn SystemModel,
    phi: &'a Formula,
    cfg: PlannerConfig,
    tree: Tree,
    rng: ChaCha8Rng,
    cache: IkCache,
    horizon: usize,
    iter: usize,
    started: Instant,
    metrics: Vec<IterationRecord>,
    first_solution: Option<usize>,
}

impl<'a> Planner<'a> {
    pub fn new(
        sys: &'a dyn SystemModel,
        phi: &'a Formula,
        q_init: &[f64],
        cfg: PlannerConfig,
    ) -> Result<Planner<'a>, PlanError> {
        cfg.validate(sys.state_dim())?;
        if q_init.len() != sys.state_dim() || !sys.state_bounds().contains(q_init) {
            return Err(PlanError::InitOutOfBounds(q_init.to_vec()));
        }
        let tree = Tree::new(phi, q_init, cfg.semantics)?;
        Ok(Planner {
            sys,
            phi,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
            tree,
            cache: IkCache::default(),
            horizon: phi.horizon(),
            iter: 0,
            started: Instant::now(),
            metrics: Vec::new(),
            first_solution: None,
        })
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.cfg
    }

    pub fn cache(&self) -> &IkCache {
        &self.cache
    }

    pub fn metrics(&self) -> &[IterationRecord] {
        &self.metrics
    }

    fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        weighted_distance(self.sys, self.cfg.distance_weights.as_deref(), a, b)
    }

    /// Draws `(t_r, q_r)`, biased toward active predicate regions.
    pub fn sample(&mut self) -> (usize, Vec<f64>) {
        let t_r = self.rng.gen_range(1..=self.horizon.max(1));
        if self.rng.gen_bool(self.cfg.p_bias) {
            if let Some(arm) = self.sys.as_planar_arm() {
                if let Some(q) = adaptive_sample(self.phi, t_r, arm, &self.cache, &mut self.rng) {
                    return (t_r, q);
                }
            } else {
                let hints: Vec<&RegionHint> = self
                    .phi
                    .active_predicates(t_r)
                    .into_iter()
                    .filter_map(|(_, p)| p.region_hint.as_ref())
                    .collect();
                if !hints.is_empty() {
                    let h = hints[self.rng.gen_range(0..hints.len())];
                    let mut q = self.sys.sample_state(&mut self.rng);
                    sample_hint(h, &mut q, &mut self.rng);
                    return (t_r, q);
                }
            }
        }
        (t_r, self.sys.sample_state(&mut self.rng))
    }

    /// Causal k-nearest neighbors of `q` within the extension gap.
    pub fn near(&self, q: &[f64], t_r: usize) -> Vec<usize> {
        let d = |a: &[f64], b: &[f64]| self.dist(a, b);
        self.tree
            .near(q, t_r, self.cfg.k_near, Some(self.cfg.max_gap), &d)
    }

    /// Replays `seg` from `v1`. A new node is admitted when the upper bound
    /// stays non-negative.
    pub fn admit(&mut self, v1: usize, seg: Segment) -> Result<Update, PlanError> {
        let parent = self.tree.node(v1);
        let mut m = parent.monitor.clone();
        for (k, s) in seg.states.iter().enumerate() {
            m.step(self.phi, s, parent.t + k + 1)?;
        }
        if m.root_interval().hi < 0.0 {
            return Ok(Update::Rejected);
        }
        Ok(Update::Added(self.tree.push(v1, seg, m)))
    }

    /// Tries to make `v1` the parent of `v2` through `seg`.
    ///
    /// Accepted only if the new interval keeps `η̄ ≥ 0` and strictly raises
    /// `η̲`, and if every descendant, re-simulated from its own controls,
    /// stays in `𝒬`, keeps `η̄ ≥ 0` and does not lose lower bound.
    pub fn rewire(&mut self, v1: usize, v2: usize, seg: Segment) -> Result<Update, PlanError> {
        let (a, b) = (self.tree.node(v1), self.tree.node(v2));
        if v2 == 0 || b.parent == Some(v1) || a.t + seg.len() != b.t || seg.is_empty() {
            return Ok(Update::RewireRejected);
        }
        let mut m = a.monitor.clone();
        for (k, s) in seg.states.iter().enumerate() {
            m.step(self.phi, s, a.t + k + 1)?;
        }
        let iv = m.root_interval();
        if iv.hi < 0.0 || iv.lo <= b.interval().lo {
            return Ok(Update::RewireRejected);
        }

        let new_q = seg.states.last().expect("non-empty segment").clone();
        let mut staged = vec![(v2, new_q, m, seg)];
        let mut index = std::collections::HashMap::new();
        index.insert(v2, 0usize);
        for d in self.tree.descendants(v2) {
            let node = self.tree.node(d);
            let parent = node.parent.expect("descendant has a parent");
            let (pq, pm) = {
                let p = &staged[index[&parent]];
                (p.1.clone(), p.2.clone())
            };
            let Ok(states) = rollout(self.sys, &pq, &node.segment.controls) else {
                return Ok(Update::RewireRejected);
            };
            let mut dm = pm;
            let pt = self.tree.node(parent).t;
            for (k, s) in states.iter().enumerate() {
                dm.step(self.phi, s, pt + k + 1)?;
            }
            let (old, new) = (node.interval(), dm.root_interval());
            if new.hi < 0.0 || new.lo < old.lo {
                return Ok(Update::RewireRejected);
            }
            let q = states.last().cloned().unwrap_or(pq);
            index.insert(d, staged.len());
            let controls = node.segment.controls.clone();
            staged.push((d, q, dm, Segment { controls, states }));
        }

        self.tree.reparent(v2, v1);
        for (id, q, m, seg) in staged {
            let n = self.tree.node_mut(id);
            n.q = q;
            n.monitor = m;
            n.segment = seg;
        }
        Ok(Update::Rewired)
    }

    /// One iteration: sample, extend from the best neighbor, rewire.
    pub fn iterate(&mut self) -> Result<(), PlanError> {
        let (t_r, q_r) = self.sample();
        let near = self.near(&q_r, t_r);
        let lambda: f64 = self.rng.gen();
        let budget = SteeringBudget {
            shots: self.cfg.shots,
            refine_iters: self.cfg.refine_iters,
        };
        let mut best: Option<(usize, Steered)> = None;
        for v in near {
            let node = self.tree.node(v);
            let dt_r = t_r - node.t;
            let steered = optimize_control(
                self.sys,
                self.phi,
                &node.q,
                &node.monitor,
                &q_r,
                dt_r,
                lambda,
                &self.cfg.composition,
                budget,
                self.cfg.distance_weights.as_deref(),
                &mut self.rng,
            )?;
            // The rollout itself is an exact connection to q_s.
            if let Some(s) = steered {
                if best.as_ref().is_none_or(|(_, b)| s.cost < b.cost) {
                    best = Some((v, s));
                }
            }
        }
        if let Some((parent, s)) = best {
            if let Update::Added(new) = self.admit(parent, s.segment)? {
                self.rewire_around(new)?;
            }
        }
        self.iter += 1;
        self.record();
        Ok(())
    }

    fn rewire_around(&mut self, new: usize) -> Result<(), PlanError> {
        let (q, t) = {
            let n = self.tree.node(new);
            (n.q.clone(), n.t)
        };
        let mut cands: Vec<(f64, usize)> = self
            .tree
            .nodes()
            .iter()
            .filter(|v| v.t > t && v.t - t <= self.cfg.max_gap)
            .map(|v| (self.dist(&v.q, &q), v.id))
            .collect();
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        cands.truncate(self.cfg.k_near);
        for (_, v2) in cands {
            let target = self.tree.node(v2);
            if target.interval().lo >= 1.0 {
                continue;
            }
            let gap = target.t - t;
            let goal = target.q.clone();
            if let Some(seg) =
                steer_exact_steps(self.sys, &q, &goal, gap, &self.cfg.connect, &mut self.rng)
            {
                self.rewire(new, v2, seg)?;
            }
        }
        Ok(())
    }

    /// Best solution by exact value, ties to the lower id.
    pub fn best_solution(&self) -> Option<usize> {
        best_by_lo(self.tree.nodes().iter().filter(|v| v.is_solution()))
    }

    /// Best solution, or else the node with the highest lower bound.
    pub fn incumbent(&self) -> usize {
        self.best_solution()
            .or_else(|| best_by_lo(self.tree.nodes().iter()))
            .unwrap_or(0)
    }

    fn record(&mut self) {
        let inc = self.tree.node(self.incumbent()).interval();
        let solved = self.best_solution().is_some();
        if solved && self.first_solution.is_none() {
            self.first_solution = Some(self.iter);
        }
        self.metrics.push(IterationRecord {
            iter: self.iter,
            wall_ms: self.started.elapsed().as_secs_f64() * 1e3,
            best_lo: inc.lo,
            best_hi: inc.hi,
            gap: inc.hi - inc.lo,
            tree_size: self.tree.len(),
            solved,
        });
    }

    /// Runs the remaining iterations and extracts the result.
    pub fn run(mut self) -> Result<PlanResult, PlanError> {
        while self.iter < self.cfg.max_iters {
            self.iterate()?;
        }
        self.finish()
    }

    pub fn finish(self) -> Result<PlanResult, PlanError> {
        let inc = self.incumbent();
        let best = self.tree.node(inc).interval();
        let (status, eta, controls, states) = match self.best_solution() {
            Some(id) => {
                let (c, s, eta) = extract_solution(&self.tree, self.phi, id)?;
                (PlanStatus::Solved, Some(eta), c, s)
            }
            None => (
                PlanStatus::Exhausted,
                None,
                self.tree.path_controls(inc),
                self.tree.path_states(inc),
            ),
        };
        Ok(PlanResult {
            status,
            eta,
            best,
            controls,
            states,
            metrics: self.metrics,
            first_solution_iter: self.first_solution,
            ik_hits: self.cache.hits(),
            ik_misses: self.cache.misses(),
        })
    }
}

fn best_by_lo<'n>(nodes: impl Iterator<Item = &'n TreeNode>) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for v in nodes {
        let lo = v.interval().lo;
        if best.is_none_or(|(b, _)| lo > b) {
            best = Some((lo, v.id));
        }
    }
    best.map(|(_, id)| id)
}

fn sample_hint<R: Rng + ?Sized>(hint: &RegionHint, q: &mut [f64], rng: &mut R) {
    match hint {
        RegionHint::Box { axes, min, max } => {
            for (k, &a) in axes.iter().enumerate() {
                q[a] = rng.gen_range(min[k]..=max[k]);
            }
        }
        RegionHint::Ball {
            axes,
            center,
            radius,
        } => loop {
            let p: Vec<f64> = axes.iter().map(|_| rng.gen_range(-1.0..=1.0)).collect();
            if p.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
                for (k, &a) in axes.iter().enumerate() {
                    q[a] = center[k] + radius * p[k];
                }
                return;
            }
        },
    }
}

/// Controls, states and exact value along the path to solution node `id`.
/// The value is recomputed offline and must match the node's monitor.
pub fn extract_solution(
    tree: &Tree,
    phi: &Formula,
    id: usize,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, f64), PlanError> {
    let node = tree.node(id);
    if !node.is_solution() {
        return Err(PlanError::NoSolution);
    }
    let states = tree.path_states(id);
    let sem = tree.root().monitor.semantics();
    let recomputed = robustness(&Trace::new(states.clone()), phi, sem)?;
    let stored = node.interval().lo;
    if (recomputed - stored).abs() > 1e-9 {
        return Err(PlanError::Inconsistent { stored, recomputed });
    }
    Ok((tree.path_controls(id), states, stored))
}

/// Runs the full search from `q_init`.
pub fn plan(
    q_init: &[f64],
    phi: &Formula,
    sys: &dyn SystemModel,
    cfg: PlannerConfig,
) -> Result<PlanResult, PlanError> {
    Planner::new(sys, phi, q_init, cfg)?.run()
}

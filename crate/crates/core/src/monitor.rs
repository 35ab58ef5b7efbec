//! Incremental robustness-interval monitoring of partial traces.
//!
//! Every AST node keeps a list of evaluation *instances*, one per start step
//! at which some parent needs its value. An instance at start `j` of a
//! predicate is evaluated at step `j`. A Boolean instance combines its
//! children's instances at the same start, and a temporal instance absorbs one
//! child instance per window step. Child instances are reference counted, so
//! overlapping windows share them and they are dropped as soon as no parent
//! needs them.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::formula::{Formula, Node, NodeId};
use crate::robustness::{predicate_robustness, RobustnessError, Semantics, LOG_FLOOR};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MonitorError {
    #[error("aggregation count must be at least 1")]
    InvalidCount,
    #[error("expected observation for step {expected}, got step {got}")]
    OutOfOrder { expected: usize, got: usize },
    #[error("monitor was initialized for a formula with {expected} nodes, got {got}")]
    FormulaMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Robustness(#[from] RobustnessError),
}

/// A robustness interval `[lo, hi] ⊆ [−1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const FULL: Interval = Interval { lo: -1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi }
    }

    pub fn singleton(v: f64) -> Interval {
        Interval { lo: v, hi: v }
    }

    pub fn is_singleton(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lo - tol && v <= self.hi + tol
    }

    pub fn is_subset_of(&self, other: &Interval, tol: f64) -> bool {
        self.lo >= other.lo - tol && self.hi <= other.hi + tol
    }
}

/// Which aggregation a node applies: `∧`/`G` or `∨`/`F`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregation {
    And,
    Or,
}

fn ln_floor(x: f64) -> f64 {
    x.max(LOG_FLOOR).ln()
}

/// Folds `eta_new` into `eta`, the AGM disjunction of `n − 1` earlier values.
pub fn mdf_agm_or(eta: f64, n: usize, eta_new: f64) -> Result<f64, MonitorError> {
    if n == 0 {
        return Err(MonitorError::InvalidCount);
    }
    Ok(mdf_or(eta, n, eta_new))
}

/// Folds `eta_new` into `eta`, the AGM conjunction of `n − 1` earlier values.
pub fn mdf_agm_and(eta: f64, n: usize, eta_new: f64) -> Result<f64, MonitorError> {
    if n == 0 {
        return Err(MonitorError::InvalidCount);
    }
    Ok(mdf_and(eta, n, eta_new))
}

fn mdf_or(eta: f64, n: usize, x: f64) -> f64 {
    if n == 1 {
        return x;
    }
    let nf = n as f64;
    if eta < 0.0 && x < 0.0 {
        1.0 - (((nf - 1.0) * ln_floor(1.0 - eta) + ln_floor(1.0 - x)) / nf).exp()
    } else if eta < 0.0 {
        x / nf
    } else {
        (nf * eta - eta + x.max(0.0)) / nf
    }
}

fn mdf_and(eta: f64, n: usize, x: f64) -> f64 {
    if n == 1 {
        return x;
    }
    let nf = n as f64;
    if eta > 0.0 && x > 0.0 {
        (((nf - 1.0) * ln_floor(1.0 + eta) + ln_floor(1.0 + x)) / nf).exp() - 1.0
    } else if eta > 0.0 {
        x / nf
    } else {
        (nf * eta - eta + x.min(0.0)) / nf
    }
}

/// Folds one value into an aggregate; `n` counts the new value.
pub(crate) fn fold(sem: Semantics, op: Aggregation, eta: f64, n: usize, x: f64) -> f64 {
    if n <= 1 {
        return x;
    }
    match (sem, op) {
        (Semantics::Agm, Aggregation::Or) => mdf_or(eta, n, x),
        (Semantics::Agm, Aggregation::And) => mdf_and(eta, n, x),
        (Semantics::MinMax, Aggregation::Or) => eta.max(x),
        (Semantics::MinMax, Aggregation::And) => eta.min(x),
    }
}

/// Folds `m` copies of `x` into an aggregate over `n` values in O(1).
pub(crate) fn fold_repeat(
    sem: Semantics,
    op: Aggregation,
    eta: f64,
    n: usize,
    x: f64,
    m: usize,
) -> f64 {
    if m == 0 {
        return eta;
    }
    if n == 0 {
        return x;
    }
    let (nf, mf) = (n as f64, m as f64);
    let tot = nf + mf;
    match (sem, op) {
        (Semantics::Agm, Aggregation::Or) => {
            if eta < 0.0 && x < 0.0 {
                1.0 - ((nf * ln_floor(1.0 - eta) + mf * ln_floor(1.0 - x)) / tot).exp()
            } else if eta < 0.0 {
                mf * x / tot
            } else {
                (nf * eta + mf * x.max(0.0)) / tot
            }
        }
        (Semantics::Agm, Aggregation::And) => {
            if eta > 0.0 && x > 0.0 {
                ((nf * ln_floor(1.0 + eta) + mf * ln_floor(1.0 + x)) / tot).exp() - 1.0
            } else if eta > 0.0 {
                mf * x / tot
            } else {
                (nf * eta + mf * x.min(0.0)) / tot
            }
        }
        (Semantics::MinMax, Aggregation::Or) => eta.max(x),
        (Semantics::MinMax, Aggregation::And) => eta.min(x),
    }
}

/// Aggregate of the finalized observations of one temporal window.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TemporalState {
    /// Observations absorbed so far.
    pub n: usize,
    pub value: f64,
    pub last: Option<Interval>,
}

/// One update of a temporal window `[t_s + a, t_s + b]` at step `t`.
///
/// `finalized` are child values that became exact this step. `live` are the
/// current intervals of child slots still being evaluated. Slots after `t`
/// are padded with −1 on the lower track and +1 on the upper track.
/// Returns `None` (empty) before the window opens.
#[allow(clippy::too_many_arguments)]
pub fn irtm_temporal(
    st: &mut TemporalState,
    finalized: &[f64],
    live: &[Interval],
    t_s: usize,
    t: usize,
    a: usize,
    b: usize,
    op: Aggregation,
    sem: Semantics,
) -> Option<Interval> {
    if t < t_s + a {
        return None;
    }
    if let Some(iv) = st.last {
        if iv.is_singleton() {
            return Some(iv);
        }
    }
    for &v in finalized {
        st.n += 1;
        st.value = fold(sem, op, st.value, st.n, v);
    }
    let window = b - a + 1;
    let observed = (t - (t_s + a) + 1).min(window);
    let unseen = window - observed;
    let (mut lo, mut hi, mut n) = (st.value, st.value, st.n);
    for iv in live {
        n += 1;
        lo = fold(sem, op, lo, n, iv.lo);
        hi = fold(sem, op, hi, n, iv.hi);
    }
    lo = fold_repeat(sem, op, lo, n, -1.0, unseen);
    hi = fold_repeat(sem, op, hi, n, 1.0, unseen);
    let iv = Interval::new(lo, hi.max(lo));
    st.last = Some(iv);
    Some(iv)
}

#[derive(Clone, Debug)]
enum Body {
    Leaf,
    Bool,
    Temporal {
        st: TemporalState,
        /// Starts of child instances observed but not yet absorbed.
        live: Vec<usize>,
    },
}

#[derive(Clone, Debug)]
struct Instance {
    start: usize,
    refs: u32,
    done: bool,
    interval: Option<Interval>,
    body: Body,
}

#[derive(Clone, Debug, Default)]
struct NodeRecord {
    instances: VecDeque<Instance>,
    /// Interval of the latest evaluated instance, kept after release.
    last: Option<Interval>,
}

impl NodeRecord {
    fn find(&self, start: usize) -> Option<usize> {
        self.instances
            .binary_search_by_key(&start, |i| i.start)
            .ok()
    }

    fn get(&self, start: usize) -> &Instance {
        &self.instances[self.find(start).expect("registered child instance")]
    }
}

/// One instance's state, for debug dumps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceSnapshot {
    pub node_id: NodeId,
    pub start: usize,
    pub lo: f64,
    pub hi: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

/// Incremental monitor state for one formula evaluated from `t_start`.
#[derive(Clone, Debug)]
pub struct MonitorState {
    semantics: Semantics,
    t_start: usize,
    steps_seen: Option<usize>,
    records: Vec<NodeRecord>,
    last_visits: usize,
    total_visits: u64,
}

/// Fresh AGM monitor.
pub fn monitor_init(phi: &Formula, t_start: usize) -> MonitorState {
    MonitorState::new(phi, t_start, Semantics::Agm)
}

impl MonitorState {
    pub fn new(phi: &Formula, t_start: usize, semantics: Semantics) -> MonitorState {
        let mut m = MonitorState {
            semantics,
            t_start,
            steps_seen: None,
            records: vec![NodeRecord::default(); phi.len()],
            last_visits: 0,
            total_visits: 0,
        };
        m.request(phi, phi.root(), t_start);
        m
    }

    pub fn semantics(&self) -> Semantics {
        self.semantics
    }

    pub fn t_start(&self) -> usize {
        self.t_start
    }

    pub fn steps_seen(&self) -> Option<usize> {
        self.steps_seen
    }

    /// The step the next observation must carry.
    pub fn next_step(&self) -> usize {
        self.steps_seen.map_or(self.t_start, |s| s + 1)
    }

    /// AST nodes visited by the most recent step.
    pub fn last_visits(&self) -> usize {
        self.last_visits
    }

    pub fn total_visits(&self) -> u64 {
        self.total_visits
    }

    fn root_instance(&self) -> &Instance {
        let root = self.records.len() - 1;
        &self.records[root].instances[0]
    }

    /// Current root interval; `[−1, 1]` while the root window has not opened.
    pub fn root_interval(&self) -> Interval {
        self.root_instance().interval.unwrap_or(Interval::FULL)
    }

    /// True once the root value is exact.
    pub fn is_done(&self) -> bool {
        self.root_instance().done
    }

    /// Interval of the most recently evaluated instance of `id`, or
    /// `[−1, 1]` if the node has never been evaluated.
    pub fn node_interval(&self, id: NodeId) -> Interval {
        let rec = &self.records[id];
        rec.instances
            .back()
            .and_then(|i| i.interval)
            .or(rec.last)
            .unwrap_or(Interval::FULL)
    }

    pub fn snapshot(&self) -> Vec<InstanceSnapshot> {
        let mut out = Vec::new();
        for (id, rec) in self.records.iter().enumerate() {
            for inst in &rec.instances {
                let Some(iv) = inst.interval else { continue };
                let n = match &inst.body {
                    Body::Leaf => 1,
                    Body::Bool => 0,
                    Body::Temporal { st, live } => st.n + live.len(),
                };
                out.push(InstanceSnapshot {
                    node_id: id,
                    start: inst.start,
                    lo: iv.lo,
                    hi: iv.hi,
                    n,
                });
            }
        }
        out
    }

    /// Absorbs the observation `s` at step `t` and returns the root interval.
    pub fn step(&mut self, phi: &Formula, s: &[f64], t: usize) -> Result<Interval, MonitorError> {
        if phi.len() != self.records.len() {
            return Err(MonitorError::FormulaMismatch {
                expected: self.records.len(),
                got: phi.len(),
            });
        }
        let expected = self.next_step();
        if t != expected {
            return Err(MonitorError::OutOfOrder { expected, got: t });
        }
        for (_, p) in phi.predicates() {
            predicate_robustness(s, p)?;
        }
        self.steps_seen = Some(t);
        self.last_visits = 0;
        if !self.is_done() {
            self.visit(phi, phi.root(), s, t);
            self.total_visits += self.last_visits as u64;
        }
        Ok(self.root_interval())
    }

    /// Registers interest in the instance of `id` starting at `start`.
    fn request(&mut self, phi: &Formula, id: NodeId, start: usize) {
        let rec = &mut self.records[id];
        if let Some(k) = rec.find(start) {
            rec.instances[k].refs += 1;
            return;
        }
        let body = match phi.node(id) {
            Node::True | Node::False | Node::Pred(_) => Body::Leaf,
            Node::And(_) | Node::Or(_) => Body::Bool,
            Node::Globally { .. } | Node::Finally { .. } => Body::Temporal {
                st: TemporalState::default(),
                live: Vec::new(),
            },
        };
        let inst = Instance {
            start,
            refs: 1,
            done: false,
            interval: None,
            body,
        };
        // Instances are only ever created for the current step, which is the
        // latest start seen so far.
        debug_assert!(rec.instances.back().is_none_or(|i| i.start < start));
        rec.instances.push_back(inst);
    }

    /// Drops one reference; a dropped unfinished instance releases its own
    /// children.
    fn release(&mut self, phi: &Formula, id: NodeId, start: usize) {
        let rec = &mut self.records[id];
        let k = rec.find(start).expect("released instance exists");
        rec.instances[k].refs -= 1;
        if rec.instances[k].refs > 0 {
            return;
        }
        let inst = rec.instances.remove(k).expect("index in range");
        if inst.done {
            return;
        }
        match (inst.body, phi.node(id)) {
            (Body::Bool, Node::And(cs) | Node::Or(cs)) => {
                for &c in cs {
                    self.release(phi, c, start);
                }
            }
            (
                Body::Temporal { live, .. },
                Node::Globally { child, .. } | Node::Finally { child, .. },
            ) => {
                for j in live {
                    self.release(phi, *child, j);
                }
            }
            _ => {}
        }
    }

    fn visit(&mut self, phi: &Formula, id: NodeId, s: &[f64], t: usize) {
        if self.records[id].instances.is_empty() {
            return;
        }
        self.last_visits += 1;
        let node = phi.node(id);

        match node {
            Node::And(cs) | Node::Or(cs) => {
                let fresh = self.records[id]
                    .instances
                    .back()
                    .is_some_and(|i| i.start == t && i.interval.is_none() && !i.done);
                if fresh {
                    for &c in cs {
                        self.request(phi, c, t);
                    }
                }
            }
            Node::Globally { a, b, child } | Node::Finally { a, b, child } => {
                let mut wanted = 0;
                for inst in self.records[id].instances.iter_mut() {
                    if inst.done || t < inst.start + a || t > inst.start + b {
                        continue;
                    }
                    if let Body::Temporal { live, .. } = &mut inst.body {
                        live.push(t);
                        wanted += 1;
                    }
                }
                for _ in 0..wanted {
                    self.request(phi, *child, t);
                }
            }
            _ => {}
        }

        for &c in node.children() {
            self.visit(phi, c, s, t);
        }

        let mut releases: Vec<(NodeId, usize)> = Vec::new();
        let sem = self.semantics;
        let (below, rest) = self.records.split_at_mut(id);
        let rec = &mut rest[0];
        for inst in rec.instances.iter_mut().filter(|i| !i.done) {
            match node {
                Node::True | Node::False | Node::Pred(_) => {
                    if inst.start != t {
                        continue;
                    }
                    let v = match node {
                        Node::True => 1.0,
                        Node::False => -1.0,
                        Node::Pred(p) => p.raw_robustness(s).clamp(-1.0, 1.0),
                        _ => unreachable!(),
                    };
                    inst.interval = Some(Interval::singleton(v));
                    inst.done = true;
                }
                Node::And(cs) | Node::Or(cs) => {
                    let op = if matches!(node, Node::And(_)) {
                        Aggregation::And
                    } else {
                        Aggregation::Or
                    };
                    let (mut lo, mut hi, mut all_done) = (0.0, 0.0, true);
                    for (k, &c) in cs.iter().enumerate() {
                        let ci = below[c].get(inst.start);
                        let iv = ci.interval.unwrap_or(Interval::FULL);
                        lo = fold(sem, op, lo, k + 1, iv.lo);
                        hi = fold(sem, op, hi, k + 1, iv.hi);
                        all_done &= ci.done;
                    }
                    let iv = Interval::new(lo, hi.max(lo));
                    inst.interval = Some(iv);
                    if all_done || iv.is_singleton() {
                        inst.done = true;
                        releases.extend(cs.iter().map(|&c| (c, inst.start)));
                    }
                }
                Node::Globally { a, b, child } | Node::Finally { a, b, child } => {
                    let op = if matches!(node, Node::Globally { .. }) {
                        Aggregation::And
                    } else {
                        Aggregation::Or
                    };
                    let Body::Temporal { st, live } = &mut inst.body else {
                        unreachable!()
                    };
                    let mut finalized = Vec::new();
                    let mut pending = Vec::new();
                    live.retain(|&j| {
                        let ci = below[*child].get(j);
                        if ci.done {
                            finalized.push(ci.interval.expect("done instance has a value").lo);
                            releases.push((*child, j));
                            false
                        } else {
                            pending.push(ci.interval.unwrap_or(Interval::FULL));
                            true
                        }
                    });
                    let out =
                        irtm_temporal(st, &finalized, &pending, inst.start, t, *a, *b, op, sem);
                    inst.interval = out;
                    if out.is_some_and(|iv| iv.is_singleton()) {
                        inst.done = true;
                        releases.extend(live.drain(..).map(|j| (*child, j)));
                    }
                }
            }
        }
        if let Some(iv) = rec.instances.back().and_then(|i| i.interval) {
            rec.last = Some(iv);
        }
        for (c, j) in releases {
            self.release(phi, c, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{Expr, Predicate};
    use crate::robustness::{agm_and, agm_or, agm_robustness, Trace};

    fn p() -> Predicate {
        Predicate::affine("p", vec![2.0], 0.0, 0.0)
    }

    #[test]
    fn mdf_examples() {
        assert!((mdf_agm_or(-0.5, 2, -0.5).unwrap() + 0.5).abs() < 1e-12);
        assert!((mdf_agm_or(-0.5, 2, 0.6).unwrap() - 0.3).abs() < 1e-15);
        assert!((mdf_agm_and(0.5, 2, 0.5).unwrap() - 0.5).abs() < 1e-12);
        assert!((mdf_agm_and(0.5, 2, -0.6).unwrap() + 0.3).abs() < 1e-15);
        assert_eq!(mdf_agm_or(0.1, 0, 0.2), Err(MonitorError::InvalidCount));
        assert_eq!(mdf_agm_and(0.7, 1, -0.2).unwrap(), -0.2);
        // The boundary η′ = 0 after all-negative priors.
        assert_eq!(mdf_agm_or(-0.4, 3, 0.0).unwrap(), 0.0);
        assert_eq!(mdf_agm_and(0.4, 3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn fold_repeat_matches_direct_folding() {
        for sem in [Semantics::Agm, Semantics::MinMax] {
            for op in [Aggregation::And, Aggregation::Or] {
                for &(eta, x) in &[
                    (-0.3, -0.7),
                    (-0.3, 0.4),
                    (0.2, -1.0),
                    (0.2, 1.0),
                    (0.0, -0.5),
                ] {
                    let mut direct = eta;
                    for k in 0..4 {
                        direct = fold(sem, op, direct, 3 + k, x);
                    }
                    let closed = fold_repeat(sem, op, eta, 2, x, 4);
                    assert!((direct - closed).abs() < 1e-12, "{sem:?} {op:?} {eta} {x}");
                }
            }
        }
    }

    #[test]
    fn finally_first_observation_pads_window() {
        let mut st = TemporalState::default();
        let iv = irtm_temporal(
            &mut st,
            &[-0.8],
            &[],
            0,
            0,
            0,
            9,
            Aggregation::Or,
            Semantics::Agm,
        )
        .unwrap();
        let mut lo_set = vec![-0.8];
        lo_set.extend([-1.0; 9]);
        let mut hi_set = vec![-0.8];
        hi_set.extend([1.0; 9]);
        assert!((iv.lo - agm_or(&lo_set).unwrap()).abs() < 1e-12);
        assert!((iv.hi - agm_or(&hi_set).unwrap()).abs() < 1e-12);
        assert!((iv.hi - 0.9).abs() < 1e-12);
    }

    #[test]
    fn temporal_before_window_and_after_singleton() {
        let mut st = TemporalState::default();
        let args = |st: &mut TemporalState, f: &[f64], t| {
            irtm_temporal(st, f, &[], 0, t, 2, 4, Aggregation::And, Semantics::Agm)
        };
        assert_eq!(args(&mut st, &[], 1), None);
        args(&mut st, &[0.2], 2);
        args(&mut st, &[0.2], 3);
        let fin = args(&mut st, &[0.2], 4).unwrap();
        assert!(fin.is_singleton() && (fin.lo - 0.2).abs() < 1e-12);
        assert_eq!(args(&mut st, &[-1.0], 5), Some(fin));
    }

    #[test]
    fn globally_constant_trace_converges() {
        let f = Formula::new(Expr::globally(0, 4, Expr::pred(p()))).unwrap();
        let mut m = monitor_init(&f, 0);
        assert_eq!(m.root_interval(), Interval::FULL);
        let mut iv = Interval::FULL;
        for t in 0..5 {
            iv = m.step(&f, &[0.5], t).unwrap();
        }
        assert!(iv.is_singleton());
        assert!((iv.lo - 0.5).abs() < 1e-12);
        let exact = agm_robustness(&Trace::new(vec![vec![0.5]; 5]), &f).unwrap();
        assert!((iv.lo - exact).abs() < 1e-12);
        // Observations after convergence change nothing.
        assert_eq!(m.step(&f, &[-3.0], 5).unwrap(), iv);
        assert_eq!(m.last_visits(), 0);
    }

    #[test]
    fn out_of_order_and_dimension_errors() {
        let f = Formula::new(Expr::finally(0, 3, Expr::pred(p()))).unwrap();
        let mut m = monitor_init(&f, 2);
        assert_eq!(
            m.step(&f, &[0.0], 0),
            Err(MonitorError::OutOfOrder {
                expected: 2,
                got: 0
            })
        );
        assert!(matches!(
            m.step(&f, &[0.0, 1.0], 2),
            Err(MonitorError::Robustness(_))
        ));
        assert_eq!(m.steps_seen(), None);
        m.step(&f, &[0.0], 2).unwrap();
        assert_eq!(m.next_step(), 3);
    }

    #[test]
    fn clone_is_independent() {
        let f = Formula::new(Expr::finally(0, 3, Expr::pred(p()))).unwrap();
        let mut m = monitor_init(&f, 0);
        m.step(&f, &[0.1], 0).unwrap();
        let copy = m.clone();
        let before = copy.root_interval();
        m.step(&f, &[0.4], 1).unwrap();
        assert_eq!(copy.root_interval(), before);
        let mut c2 = copy.clone();
        let mut m2 = copy;
        assert_eq!(c2.step(&f, &[0.3], 1), m2.step(&f, &[0.3], 1));
    }

    #[test]
    fn nested_windows_share_child_instances() {
        let f = Formula::new(Expr::globally(0, 3, Expr::finally(1, 2, Expr::pred(p())))).unwrap();
        let xs = [0.1, -0.2, 0.3, 0.0, -0.4, 0.2];
        let mut m = monitor_init(&f, 0);
        for (t, x) in xs.iter().enumerate() {
            m.step(&f, &[*x], t).unwrap();
            assert!(m.last_visits() <= f.len());
        }
        assert!(m.is_done());
        let exact = agm_robustness(&Trace::new(xs.iter().map(|x| vec![*x]).collect()), &f).unwrap();
        assert!((m.root_interval().lo - exact).abs() < 1e-12);
        // Everything except the root instance has been released.
        let live: usize = m.records.iter().map(|r| r.instances.len()).sum();
        assert_eq!(live, 1);
    }

    #[test]
    fn boolean_interval_arithmetic() {
        let q = Predicate::affine("q", vec![2.0], 0.0, 0.0);
        let f = Formula::new(Expr::and(vec![
            Expr::pred(q),
            Expr::finally(0, 1, Expr::pred(p())),
        ]))
        .unwrap();
        let mut m = monitor_init(&f, 0);
        let iv = m.step(&f, &[0.4], 0).unwrap();
        let f_lo = agm_or(&[0.4, -1.0]).unwrap();
        assert!((iv.lo - agm_and(&[0.4, f_lo]).unwrap()).abs() < 1e-12);
        assert!((iv.hi - agm_and(&[0.4, 0.7]).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn minmax_semantics() {
        let f = Formula::new(Expr::finally(0, 2, Expr::pred(p()))).unwrap();
        let mut m = MonitorState::new(&f, 0, Semantics::MinMax);
        assert_eq!(m.step(&f, &[-0.2], 0).unwrap(), Interval::new(-0.2, 1.0));
        assert_eq!(m.step(&f, &[0.3], 1).unwrap(), Interval::new(0.3, 1.0));
        assert_eq!(m.step(&f, &[0.1], 2).unwrap(), Interval::singleton(0.3));
    }
}

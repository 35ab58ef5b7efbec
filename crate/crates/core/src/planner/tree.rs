use crate::dynamics::{Segment, SystemModel};
use crate::formula::Formula;
use crate::monitor::{Interval, MonitorState};
use crate::robustness::Semantics;

use super::PlanError;

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub id: usize,
    pub q: Vec<f64>,
    /// Step index at which `q` is reached.
    pub t: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Monitor after replaying every state from the root up to `q`.
    pub monitor: MonitorState,
    /// Controls from the parent and the states they produce; the last state
    /// is `q`. Empty for the root.
    pub segment: Segment,
}

impl TreeNode {
    pub fn interval(&self) -> Interval {
        self.monitor.root_interval()
    }

    /// Complete trajectory with a positive exact value.
    pub fn is_solution(&self) -> bool {
        self.monitor.is_done() && self.interval().lo > 0.0
    }
}

#[derive(Clone, Debug)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    /// Root at `t = 0` whose monitor has observed `q_init`.
    pub fn new(phi: &Formula, q_init: &[f64], semantics: Semantics) -> Result<Tree, PlanError> {
        let mut monitor = MonitorState::new(phi, 0, semantics);
        monitor.step(phi, q_init, 0)?;
        Ok(Tree {
            nodes: vec![TreeNode {
                id: 0,
                q: q_init.to_vec(),
                t: 0,
                parent: None,
                children: Vec::new(),
                monitor,
                segment: Segment {
                    controls: Vec::new(),
                    states: Vec::new(),
                },
            }],
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub(crate) fn node_mut(&mut self, id: usize) -> &mut TreeNode {
        &mut self.nodes[id]
    }

    /// Appends a child of `parent` reached through `segment`.
    pub(crate) fn push(&mut self, parent: usize, segment: Segment, monitor: MonitorState) -> usize {
        let id = self.nodes.len();
        let t = self.nodes[parent].t + segment.len();
        let q = segment
            .states
            .last()
            .cloned()
            .unwrap_or_else(|| self.nodes[parent].q.clone());
        self.nodes.push(TreeNode {
            id,
            q,
            t,
            parent: Some(parent),
            children: Vec::new(),
            monitor,
            segment,
        });
        self.nodes[parent].children.push(id);
        id
    }

    /// Moves `id` under `new_parent`.
    pub(crate) fn reparent(&mut self, id: usize, new_parent: usize) {
        if let Some(old) = self.nodes[id].parent {
            self.nodes[old].children.retain(|&c| c != id);
        }
        self.nodes[id].parent = Some(new_parent);
        self.nodes[new_parent].children.push(id);
    }

    /// Node ids from the root to `id`.
    pub fn path(&self, id: usize) -> Vec<usize> {
        let mut out = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }

    /// States at `t = 0..=node.t` along the path to `id`.
    pub fn path_states(&self, id: usize) -> Vec<Vec<f64>> {
        let mut out = vec![self.nodes[0].q.clone()];
        for n in self.path(id).into_iter().skip(1) {
            out.extend(self.nodes[n].segment.states.iter().cloned());
        }
        out
    }

    pub fn path_controls(&self, id: usize) -> Vec<Vec<f64>> {
        self.path(id)
            .into_iter()
            .skip(1)
            .flat_map(|n| self.nodes[n].segment.controls.iter().cloned())
            .collect()
    }

    /// All descendants of `id` in breadth-first order.
    pub fn descendants(&self, id: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.nodes[id].children.clone();
        let mut head = 0;
        while head < out.len() {
            let n = out[head];
            out.extend_from_slice(&self.nodes[n].children);
            head += 1;
        }
        out
    }

    /// The `k` nodes nearest to `q` among those with `v.t < t_r`, optionally
    /// also requiring `t_r − v.t ≤ max_gap`. Ties keep insertion order.
    pub fn near(
        &self,
        q: &[f64],
        t_r: usize,
        k: usize,
        max_gap: Option<usize>,
        dist: &dyn Fn(&[f64], &[f64]) -> f64,
    ) -> Vec<usize> {
        let mut cands: Vec<(f64, usize)> = self
            .nodes
            .iter()
            .filter(|v| v.t < t_r && max_gap.is_none_or(|g| t_r - v.t <= g))
            .map(|v| (dist(&v.q, q), v.id))
            .collect();
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        cands.into_iter().take(k).map(|(_, id)| id).collect()
    }

    /// Checks parent/child links, time alignment and acyclicity.
    pub fn check_structure(&self) -> Result<(), String> {
        for v in &self.nodes {
            match v.parent {
                None if v.id != 0 => return Err(format!("node {} has no parent", v.id)),
                Some(_) if v.id == 0 => return Err("root has a parent".into()),
                Some(p) => {
                    let parent = &self.nodes[p];
                    if !parent.children.contains(&v.id) {
                        return Err(format!("node {} missing from children of {p}", v.id));
                    }
                    if parent.t + v.segment.len() != v.t {
                        return Err(format!("node {} is not time-aligned with {p}", v.id));
                    }
                    if v.segment.states.last() != Some(&v.q) {
                        return Err(format!("node {} state differs from its segment end", v.id));
                    }
                }
                None => {}
            }
            for &c in &v.children {
                if self.nodes[c].parent != Some(v.id) {
                    return Err(format!("child {c} of {} points elsewhere", v.id));
                }
            }
        }
        // Every node reaches the root in at most len steps.
        for v in &self.nodes {
            let mut cur = v.id;
            let mut hops = 0;
            while let Some(p) = self.nodes[cur].parent {
                cur = p;
                hops += 1;
                if hops > self.nodes.len() {
                    return Err(format!("cycle through node {}", v.id));
                }
            }
        }
        Ok(())
    }

    /// Replays the root-to-node states of `id` through a fresh monitor.
    pub fn replay_interval(&self, phi: &Formula, id: usize) -> Result<Interval, PlanError> {
        let mut m = MonitorState::new(phi, 0, self.nodes[0].monitor.semantics());
        for (t, s) in self.path_states(id).iter().enumerate() {
            m.step(phi, s, t)?;
        }
        Ok(m.root_interval())
    }
}

/// `√Σ wᵢ dᵢ²` over the system's wrapped difference.
pub fn weighted_distance<S: SystemModel + ?Sized>(
    sys: &S,
    weights: Option<&[f64]>,
    a: &[f64],
    b: &[f64],
) -> f64 {
    let d = sys.diff(a, b);
    match weights {
        Some(w) => d
            .iter()
            .zip(w)
            .map(|(x, wi)| wi * x * x)
            .sum::<f64>()
            .sqrt(),
        None => d.iter().map(|x| x * x).sum::<f64>().sqrt(),
    }
}

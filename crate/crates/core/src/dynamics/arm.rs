//! Planar N-link arm on the augmented state `[q₁…qₙ, x, y, ψ]`.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{wrap_angle, Bounds, DynamicsError, SystemModel};
use crate::formula::{Formula, Predicate, PredicateFn, RegionHint};

pub const IK_TOL: f64 = 1e-4;
pub const IK_MAX_ITERS: usize = 200;
const IK_DAMPING: f64 = 0.05;
const IK_STALL: f64 = 10.0;
const SAMPLE_RETRIES: usize = 50;

/// End-effector target. `psi = None` leaves the orientation free.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmPose {
    pub x: f64,
    pub y: f64,
    pub psi: Option<f64>,
}

/// Forward kinematics `(x, y, ψ)` of a planar chain.
pub fn fk_planar_arm(q: &[f64], links: &[f64]) -> [f64; 3] {
    let (mut x, mut y, mut phi) = (0.0, 0.0, 0.0);
    for (qi, li) in q.iter().zip(links) {
        phi += qi;
        x += li * phi.cos();
        y += li * phi.sin();
    }
    [x, y, phi]
}

/// `∂(x, y, ψ)/∂q`.
fn fk_jacobian(q: &[f64], links: &[f64]) -> DMatrix<f64> {
    let n = q.len();
    let mut phis = Vec::with_capacity(n);
    let mut acc = 0.0;
    for qi in q {
        acc += qi;
        phis.push(acc);
    }
    let mut j = DMatrix::zeros(3, n);
    for c in 0..n {
        for i in c..n {
            j[(0, c)] -= links[i] * phis[i].sin();
            j[(1, c)] += links[i] * phis[i].cos();
        }
        j[(2, c)] = 1.0;
    }
    j
}

#[derive(Clone, Debug)]
pub struct PlanarArm {
    links: Vec<f64>,
    joints: Bounds,
    state: Bounds,
    control: Bounds,
    dt: f64,
}

impl PlanarArm {
    pub fn new(
        links: Vec<f64>,
        joints: Bounds,
        control: Bounds,
        dt: f64,
    ) -> Result<Self, DynamicsError> {
        let n = links.len();
        if n == 0 || links.iter().any(|l| !(*l > 0.0)) {
            return Err(DynamicsError::Invalid("links must be positive".into()));
        }
        if joints.dim() != n || control.dim() != n {
            return Err(DynamicsError::Invalid(format!(
                "arm with {n} links needs {n} joint and control bounds"
            )));
        }
        if !(dt > 0.0) {
            return Err(DynamicsError::Invalid("dt must be positive".into()));
        }
        let reach: f64 = links.iter().sum();
        let mut min = joints.min.clone();
        let mut max = joints.max.clone();
        min.extend([-reach, -reach, joints.min.iter().sum()]);
        max.extend([reach, reach, joints.max.iter().sum()]);
        let state = Bounds::new(min, max)?;
        Ok(PlanarArm {
            links,
            joints,
            state,
            control,
            dt,
        })
    }

    pub fn links(&self) -> &[f64] {
        &self.links
    }

    pub fn n_joints(&self) -> usize {
        self.links.len()
    }

    pub fn joint_bounds(&self) -> &Bounds {
        &self.joints
    }

    pub fn reach(&self) -> f64 {
        self.links.iter().sum()
    }

    /// `[q, FK(q)]`.
    pub fn augment(&self, q: &[f64]) -> Vec<f64> {
        let mut s = q.to_vec();
        s.extend(fk_planar_arm(q, &self.links));
        s
    }

    /// State axes holding the end-effector pose.
    pub fn workspace_axes(&self) -> std::ops::Range<usize> {
        self.n_joints()..self.n_joints() + 3
    }

    /// True if the predicate only reads workspace axes.
    pub fn is_workspace_predicate(&self, p: &Predicate) -> bool {
        let n = self.n_joints();
        match &p.h {
            PredicateFn::Affine { coeffs, .. } => {
                coeffs[..n.min(coeffs.len())].iter().all(|c| *c == 0.0)
            }
            PredicateFn::Distance { axes, .. } | PredicateFn::BoxDistance { axes, .. } => {
                axes.iter().all(|a| *a >= n)
            }
        }
    }

    /// Largest deviation between the cached pose and `FK(q)`.
    pub fn consistency_error(&self, s: &[f64]) -> f64 {
        let n = self.n_joints();
        let w = fk_planar_arm(&s[..n], &self.links);
        (0..3).map(|k| (s[n + k] - w[k]).abs()).fold(0.0, f64::max)
    }
}

impl SystemModel for PlanarArm {
    fn name(&self) -> &'static str {
        "planar_arm"
    }
    fn state_bounds(&self) -> &Bounds {
        &self.state
    }
    fn control_bounds(&self) -> &Bounds {
        &self.control
    }
    fn dt(&self) -> f64 {
        self.dt
    }
    fn step(&self, q: &[f64], u: &[f64]) -> Vec<f64> {
        let joints: Vec<f64> = q.iter().zip(u).map(|(a, v)| a + v * self.dt).collect();
        self.augment(&joints)
    }
    fn jacobian(&self, q: &[f64], u: &[f64]) -> DMatrix<f64> {
        let n = self.n_joints();
        let next: Vec<f64> = q.iter().zip(u).map(|(a, v)| a + v * self.dt).collect();
        let mut j = DMatrix::zeros(n + 3, n + 3);
        j.view_mut((0, 0), (n, n)).fill_with_identity();
        j.view_mut((n, 0), (3, n))
            .copy_from(&fk_jacobian(&next, &self.links));
        j
    }
    fn sample_state(&self, rng: &mut dyn rand::RngCore) -> Vec<f64> {
        self.augment(&self.joints.sample(rng))
    }
    fn as_planar_arm(&self) -> Option<&PlanarArm> {
        Some(self)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IkError {
    #[error("target is outside the reachable disc")]
    Unreachable,
    #[error("no convergence within {0} iterations")]
    NoConvergence(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IkSolution {
    pub q: Vec<f64>,
    pub iterations: usize,
}

/// Damped least squares from `seed` until the pose error is within
/// [`IK_TOL`]. Joint limits are enforced after every update; a stalled
/// solve restarts from a fixed spread of seeds within the same budget.
pub fn solve_ik(arm: &PlanarArm, target: &ArmPose, seed: &[f64]) -> Result<IkSolution, IkError> {
    if target.x.hypot(target.y) > arm.reach() + 1e-12 {
        return Err(IkError::Unreachable);
    }
    let rows = if target.psi.is_some() { 3 } else { 2 };
    let error = |q: &[f64]| {
        let w = fk_planar_arm(q, &arm.links);
        let mut e = DVector::from_vec(vec![target.x - w[0], target.y - w[1]]);
        if let Some(psi) = target.psi {
            e = e.push(wrap_angle(psi - w[2]));
        }
        e
    };
    let mut q = seed.to_vec();
    arm.joints.clamp(&mut q);
    let mut e = error(&q);
    let mut lambda = IK_DAMPING;
    let mut restarts = 0;
    for it in 0..=IK_MAX_ITERS {
        if e.norm() <= IK_TOL {
            return Ok(IkSolution { q, iterations: it });
        }
        if it == IK_MAX_ITERS {
            break;
        }
        let Some(dq) = dls_step(arm, &q, &e, rows, lambda) else {
            break;
        };
        let mut cand: Vec<f64> = q.iter().zip(dq.iter()).map(|(a, d)| a + d).collect();
        arm.joints.clamp(&mut cand);
        let ce = error(&cand);
        if ce.norm() < e.norm() {
            q = cand;
            e = ce;
            lambda = (lambda * 0.5).max(1e-6);
        } else {
            lambda *= 4.0;
        }
        if lambda > IK_STALL {
            // Stuck against the limits: restart from a spread-out seed.
            restarts += 1;
            q = restart_seed(arm, restarts);
            e = error(&q);
            lambda = IK_DAMPING;
        }
    }
    Err(IkError::NoConvergence(IK_MAX_ITERS))
}

fn restart_seed(arm: &PlanarArm, k: usize) -> Vec<f64> {
    let b = &arm.joints;
    (0..b.dim())
        .map(|i| {
            let f = ((k * (i + 1)) as f64 * 0.618_033_988_749_895).fract();
            b.min[i] + f * (b.max[i] - b.min[i])
        })
        .collect()
}

/// One damped step. Joints sitting on a limit whose update would push past
/// it are held fixed and the step is recomputed without them.
fn dls_step(
    arm: &PlanarArm,
    q: &[f64],
    e: &DVector<f64>,
    rows: usize,
    lambda: f64,
) -> Option<DVector<f64>> {
    let full = fk_jacobian(q, &arm.links).rows(0, rows).into_owned();
    let mut free = vec![true; q.len()];
    loop {
        let mut j = full.clone();
        for (c, f) in free.iter().enumerate() {
            if !f {
                j.column_mut(c).fill(0.0);
            }
        }
        let jjt = &j * j.transpose() + DMatrix::identity(rows, rows) * lambda.powi(2);
        let dq = j.transpose() * jjt.lu().solve(e)?;
        let mut changed = false;
        for c in 0..q.len() {
            let at_min = q[c] <= arm.joints.min[c] && dq[c] < 0.0;
            let at_max = q[c] >= arm.joints.max[c] && dq[c] > 0.0;
            if free[c] && (at_min || at_max) {
                free[c] = false;
                changed = true;
            }
        }
        if !changed {
            return Some(dq);
        }
    }
}

type CacheKey = (i64, i64, Option<i64>);

/// Discretized workspace pose → joint solution.
#[derive(Debug)]
pub struct IkCache {
    resolution: f64,
    angle_resolution: f64,
    map: RwLock<HashMap<CacheKey, (ArmPose, Vec<f64>)>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl Default for IkCache {
    fn default() -> Self {
        IkCache::new(0.01, 5f64.to_radians())
    }
}

impl IkCache {
    pub fn new(resolution: f64, angle_resolution: f64) -> IkCache {
        IkCache {
            resolution,
            angle_resolution,
            map: RwLock::new(HashMap::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    fn key(&self, pose: &ArmPose) -> CacheKey {
        (
            (pose.x / self.resolution).floor() as i64,
            (pose.y / self.resolution).floor() as i64,
            pose.psi
                .map(|p| (wrap_angle(p) / self.angle_resolution).floor() as i64),
        )
    }

    /// Cached joints for the cell containing `pose`; counts a hit or miss.
    pub fn lookup(&self, pose: &ArmPose) -> Option<Vec<f64>> {
        let found = self
            .map
            .read()
            .expect("cache lock")
            .get(&self.key(pose))
            .map(|(_, q)| q.clone());
        let counter = if found.is_some() {
            &self.hits
        } else {
            &self.misses
        };
        counter.fetch_add(1, Ordering::Relaxed);
        found
    }

    /// Stores `q` solved for `pose`. An existing entry for the cell is kept.
    pub fn insert(&self, pose: ArmPose, q: Vec<f64>) {
        self.map
            .write()
            .expect("cache lock")
            .entry(self.key(&pose))
            .or_insert((pose, q));
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn hit_rate(&self) -> f64 {
        let (h, m) = (self.hits(), self.misses());
        if h + m == 0 {
            0.0
        } else {
            h as f64 / (h + m) as f64
        }
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All `(pose, q)` entries.
    pub fn entries(&self) -> Vec<(ArmPose, Vec<f64>)> {
        self.map
            .read()
            .expect("cache lock")
            .values()
            .cloned()
            .collect()
    }
}

fn sample_in_hint<R: Rng + ?Sized>(hint: &RegionHint, arm: &PlanarArm, rng: &mut R) -> Vec<f64> {
    let bounds = arm.state_bounds();
    let mut s = bounds.sample(rng);
    match hint {
        RegionHint::Box { axes, min, max } => {
            for (k, &a) in axes.iter().enumerate() {
                s[a] = rng.gen_range(min[k]..=max[k]);
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
                    s[a] = center[k] + radius * p[k];
                }
                break;
            }
        },
    }
    s
}

/// IK-based sampling of an augmented state relevant at step `t`.
///
/// Without an active hinted workspace predicate, joints are sampled
/// uniformly until the active configuration predicates hold. Otherwise a
/// pose is drawn inside a random active workspace hint and mapped to joints
/// through the cache or the IK solver. Returns `None` after the retry budget.
pub fn adaptive_sample<R: Rng + ?Sized>(
    phi: &Formula,
    t: usize,
    arm: &PlanarArm,
    cache: &IkCache,
    rng: &mut R,
) -> Option<Vec<f64>> {
    let active = phi.active_predicates(t);
    let (workspace, config): (Vec<&Predicate>, Vec<&Predicate>) = active
        .iter()
        .map(|(_, p)| *p)
        .partition(|p| arm.is_workspace_predicate(p));
    let n = arm.n_joints();
    let ws = arm.workspace_axes();
    let hints: Vec<&RegionHint> = workspace
        .iter()
        .filter_map(|p| p.region_hint.as_ref())
        .filter(|h| h.axes().iter().all(|a| ws.contains(a)))
        .collect();
    let config_ok = |s: &[f64]| config.iter().all(|p| p.raw_robustness(s) > 0.0);

    for _ in 0..SAMPLE_RETRIES {
        if hints.is_empty() {
            let s = arm.augment(&arm.joints.sample(rng));
            if config_ok(&s) {
                return Some(s);
            }
            continue;
        }
        let hint = hints[rng.gen_range(0..hints.len())];
        let w = sample_in_hint(hint, arm, rng);
        let pose = ArmPose {
            x: w[n],
            y: w[n + 1],
            psi: hint.axes().contains(&(n + 2)).then(|| w[n + 2]),
        };
        if let Some(q) = cache.lookup(&pose) {
            return Some(arm.augment(&q));
        }
        let seed = arm.joints.sample(rng);
        let Ok(sol) = solve_ik(arm, &pose, &seed) else {
            continue;
        };
        let s = arm.augment(&sol.q);
        if !config_ok(&s) {
            continue;
        }
        cache.insert(pose, sol.q);
        return Some(s);
    }
    None
}

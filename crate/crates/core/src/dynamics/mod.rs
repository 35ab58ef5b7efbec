//! Discrete-time system models and steering.

mod arm;
mod linear;
mod unicycle;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use arm::{
    adaptive_sample, fk_planar_arm, solve_ik, ArmPose, IkCache, IkError, IkSolution, PlanarArm,
    IK_MAX_ITERS, IK_TOL,
};
pub use linear::{step_double_integrator, DoubleIntegrator, SingleIntegrator};
pub use unicycle::{step_unicycle, Unicycle};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("control {0:?} is outside the control bounds")]
    ControlOutOfBounds(Vec<f64>),
    #[error("trajectory leaves the state bounds at step {0}")]
    Infeasible(usize),
    #[error("expected dimension {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid system: {0}")]
    Invalid(String),
}

/// Per-axis box `[min, max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Bounds {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Bounds, DynamicsError> {
        if min.len() != max.len() {
            return Err(DynamicsError::Invalid(
                "bounds min/max lengths differ".into(),
            ));
        }
        if min.iter().zip(&max).any(|(lo, hi)| !(lo <= hi)) {
            return Err(DynamicsError::Invalid("bounds have min > max".into()));
        }
        Ok(Bounds { min, max })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.min.iter().zip(&self.max))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.min
            .iter()
            .zip(&self.max)
            .map(|(&lo, &hi)| if lo < hi { rng.gen_range(lo..=hi) } else { lo })
            .collect()
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.min.iter().zip(&self.max)) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let r = (a + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// The dynamics contract `q_{k+1} = f(q_k, u_k)`.
pub trait SystemModel: Send + Sync {
    fn name(&self) -> &'static str;
    fn state_bounds(&self) -> &Bounds;
    fn control_bounds(&self) -> &Bounds;
    /// Seconds per step.
    fn dt(&self) -> f64;
    fn step(&self, q: &[f64], u: &[f64]) -> Vec<f64>;

    /// `∂f/∂q` at `(q, u)`.
    fn jacobian(&self, q: &[f64], u: &[f64]) -> DMatrix<f64> {
        finite_difference_jacobian(self, q, u)
    }

    /// Lipschitz constant of `f` over `𝒬 × 𝒰`, when known.
    fn lipschitz(&self) -> Option<f64> {
        None
    }

    /// State axes holding angles that wrap around.
    fn angle_axes(&self) -> &[usize] {
        &[]
    }

    /// Closed-form controls connecting `q0` to `qf` in `steps`, if the system
    /// has one. Used to seed exact steering.
    fn connect_seed(&self, _q0: &[f64], _qf: &[f64], _steps: usize) -> Option<Vec<Vec<f64>>> {
        None
    }

    /// Uniform sample of a valid state.
    fn sample_state(&self, rng: &mut dyn rand::RngCore) -> Vec<f64> {
        self.state_bounds().sample(rng)
    }

    fn as_planar_arm(&self) -> Option<&PlanarArm> {
        None
    }

    fn state_dim(&self) -> usize {
        self.state_bounds().dim()
    }

    fn control_dim(&self) -> usize {
        self.control_bounds().dim()
    }

    /// `a ⊖ b`, with angle axes wrapped.
    fn diff(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        for &k in self.angle_axes() {
            d[k] = wrap_angle(d[k]);
        }
        d
    }

    /// Validated single step.
    fn checked_step(&self, q: &[f64], u: &[f64]) -> Result<Vec<f64>, DynamicsError> {
        if q.len() != self.state_dim() {
            return Err(DynamicsError::Dimension {
                expected: self.state_dim(),
                got: q.len(),
            });
        }
        if !self.control_bounds().contains(u) {
            return Err(DynamicsError::ControlOutOfBounds(u.to_vec()));
        }
        Ok(self.step(q, u))
    }
}

/// Central differences of `f` with respect to the state.
pub fn finite_difference_jacobian<S: SystemModel + ?Sized>(
    sys: &S,
    q: &[f64],
    u: &[f64],
) -> DMatrix<f64> {
    let n = q.len();
    let h = 1e-6;
    let mut j = DMatrix::zeros(n, n);
    let mut qp = q.to_vec();
    for c in 0..n {
        qp[c] = q[c] + h;
        let fp = sys.step(&qp, u);
        qp[c] = q[c] - h;
        let fm = sys.step(&qp, u);
        qp[c] = q[c];
        let d = sys.diff(&fp, &fm);
        for r in 0..n {
            j[(r, c)] = d[r] / (2.0 * h);
        }
    }
    j
}

/// Applies `u` for `steps` steps and returns every intermediate state
/// (excluding `q`). Fails if a state leaves `𝒬`.
pub fn rollout<S: SystemModel + ?Sized>(
    sys: &S,
    q: &[f64],
    controls: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>, DynamicsError> {
    let mut out = Vec::with_capacity(controls.len());
    let mut cur = q.to_vec();
    for (k, u) in controls.iter().enumerate() {
        cur = sys.step(&cur, u);
        if !sys.state_bounds().contains(&cur) {
            return Err(DynamicsError::Infeasible(k + 1));
        }
        out.push(cur.clone());
    }
    Ok(out)
}

/// Applies the constant control `u` for `steps` steps.
pub fn steer<S: SystemModel + ?Sized>(
    sys: &S,
    q: &[f64],
    u: &[f64],
    steps: usize,
) -> Result<Vec<f64>, DynamicsError> {
    let controls = vec![u.to_vec(); steps];
    Ok(rollout(sys, q, &controls)?
        .pop()
        .unwrap_or_else(|| q.to_vec()))
}

/// Parameters of the shooting-plus-refinement exact steering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConnectConfig {
    pub max_steps: usize,
    pub shots: usize,
    pub refine_iters: usize,
    pub epsilon: f64,
}

impl Default for ConnectConfig {
    fn default() -> Self {
        ConnectConfig {
            max_steps: 5,
            shots: 64,
            refine_iters: 30,
            epsilon: 0.05,
        }
    }
}

/// A control sequence together with the states it visits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub controls: Vec<Vec<f64>>,
    pub states: Vec<Vec<f64>>,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }
}

fn terminal_error<S: SystemModel + ?Sized>(
    sys: &S,
    q0: &[f64],
    qf: &[f64],
    controls: &[Vec<f64>],
) -> f64 {
    let mut cur = q0.to_vec();
    let mut penalty = 0.0;
    for u in controls {
        cur = sys.step(&cur, u);
        penalty += out_of_bounds(sys.state_bounds(), &cur);
    }
    let r = sys.diff(&cur, qf);
    let e = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    e + penalty
}

fn out_of_bounds(b: &Bounds, x: &[f64]) -> f64 {
    x.iter()
        .zip(b.min.iter().zip(&b.max))
        .map(|(v, (lo, hi))| (lo - v).max(0.0) + (v - hi).max(0.0))
        .sum()
}

/// Tries to reach `qf` from `q0` in exactly `steps` steps.
///
/// Random shooting over `𝒰^steps` (plus the system's closed-form seed, if
/// any) followed by projected Levenberg–Marquardt on the terminal residual.
/// Succeeds when the terminal error is within `cfg.epsilon` and every state
/// stays in `𝒬`.
pub fn steer_exact_steps<S: SystemModel + ?Sized>(
    sys: &S,
    q0: &[f64],
    qf: &[f64],
    steps: usize,
    cfg: &ConnectConfig,
    rng: &mut impl Rng,
) -> Option<Segment> {
    if steps == 0 {
        let e = sys.diff(qf, q0).iter().map(|x| x * x).sum::<f64>().sqrt();
        return (e <= cfg.epsilon).then(|| Segment {
            controls: vec![],
            states: vec![],
        });
    }
    let ub = sys.control_bounds();
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    let consider = |cand: Vec<Vec<f64>>, best: &mut Option<(f64, Vec<Vec<f64>>)>| {
        let e = terminal_error(sys, q0, qf, &cand);
        if best.as_ref().is_none_or(|(be, _)| e < *be) {
            *best = Some((e, cand));
        }
    };
    if let Some(mut seed) = sys.connect_seed(q0, qf, steps) {
        for u in seed.iter_mut() {
            ub.clamp(u);
        }
        consider(seed, &mut best);
    }
    for _ in 0..cfg.shots {
        let cand = (0..steps).map(|_| ub.sample(rng)).collect();
        consider(cand, &mut best);
    }
    let (mut err, mut controls) = best?;
    if err > cfg.epsilon {
        (err, controls) = refine(sys, q0, qf, controls, cfg.refine_iters);
    }
    if err > cfg.epsilon {
        return None;
    }
    let states = rollout(sys, q0, &controls).ok()?;
    Some(Segment { controls, states })
}

/// Shortest exact connection within `cfg.max_steps` steps.
pub fn steer_exact<S: SystemModel + ?Sized>(
    sys: &S,
    q0: &[f64],
    qf: &[f64],
    cfg: &ConnectConfig,
    rng: &mut impl Rng,
) -> Option<Segment> {
    (0..=cfg.max_steps).find_map(|k| steer_exact_steps(sys, q0, qf, k, cfg, rng))
}

fn refine<S: SystemModel + ?Sized>(
    sys: &S,
    q0: &[f64],
    qf: &[f64],
    mut controls: Vec<Vec<f64>>,
    iters: usize,
) -> (f64, Vec<Vec<f64>>) {
    let ub = sys.control_bounds();
    let m = sys.control_dim();
    let nvar = controls.len() * m;
    let residual = |c: &[Vec<f64>]| -> DVector<f64> {
        let mut cur = q0.to_vec();
        let mut pen = Vec::new();
        for u in c {
            cur = sys.step(&cur, u);
            pen.push(out_of_bounds(sys.state_bounds(), &cur));
        }
        let r = sys.diff(&cur, qf);
        DVector::from_iterator(r.len() + pen.len(), r.into_iter().chain(pen))
    };
    let cost = |r: &DVector<f64>| r.norm();
    let mut r = residual(&controls);
    let mut lambda = 1e-3;
    for _ in 0..iters {
        let h = 1e-6;
        let mut jac = DMatrix::zeros(r.len(), nvar);
        for v in 0..nvar {
            let (k, i) = (v / m, v % m);
            let orig = controls[k][i];
            controls[k][i] = orig + h;
            let rp = residual(&controls);
            controls[k][i] = orig - h;
            let rm = residual(&controls);
            controls[k][i] = orig;
            jac.set_column(v, &((rp - rm) / (2.0 * h)));
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * &r;
        let mut improved = false;
        for _ in 0..8 {
            let mut a = jtj.clone();
            for d in 0..nvar {
                a[(d, d)] += lambda * (1.0 + jtj[(d, d)]);
            }
            let Some(delta) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = controls.clone();
            for v in 0..nvar {
                trial[v / m][v % m] += delta[v];
            }
            for u in trial.iter_mut() {
                ub.clamp(u);
            }
            let rt = residual(&trial);
            if cost(&rt) < cost(&r) {
                controls = trial;
                r = rt;
                lambda = (lambda * 0.3).max(1e-9);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved || cost(&r) < 1e-10 {
            break;
        }
    }
    (cost(&r), controls)
}

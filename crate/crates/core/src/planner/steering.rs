use rand::Rng;

use crate::dias::{dias, CompositionConfig};
use crate::dynamics::{rollout, Segment, SystemModel};
use crate::formula::Formula;
use crate::monitor::MonitorState;

use super::PlanError;

/// `λ‖q_s − (v_q + d_χ Δt_r)‖² + (1 − λ)‖q_s − q_r‖²`, with differences taken
/// through `diff` so angle axes wrap.
pub fn steering_cost(
    q_s: &[f64],
    v_q: &[f64],
    d_chi: &[f64],
    q_r: &[f64],
    dt_r: usize,
    lambda: f64,
    diff: &dyn Fn(&[f64], &[f64]) -> Vec<f64>,
) -> f64 {
    let target: Vec<f64> = v_q
        .iter()
        .zip(d_chi)
        .map(|(q, d)| q + d * dt_r as f64)
        .collect();
    let sq = |v: Vec<f64>| v.iter().map(|x| x * x).sum::<f64>();
    lambda * sq(diff(q_s, &target)) + (1.0 - lambda) * sq(diff(q_s, q_r))
}

/// Budget for [`optimize_control`].
#[derive(Clone, Copy, Debug)]
pub struct SteeringBudget {
    pub shots: usize,
    pub refine_iters: usize,
}

/// Best constant control found from the node, its segment and its cost.
#[derive(Clone, Debug)]
pub struct Steered {
    pub control: Vec<f64>,
    pub segment: Segment,
    pub cost: f64,
}

/// Random shooting over `𝒰` followed by coordinate descent on the cost.
/// State differences are scaled by `√wᵢ` when `weights` is given.
/// Returns `None` when every rollout leaves `𝒬`.
#[allow(clippy::too_many_arguments)]
pub fn optimize_control<S: SystemModel + ?Sized, R: Rng + ?Sized>(
    sys: &S,
    phi: &Formula,
    v_q: &[f64],
    monitor: &MonitorState,
    q_r: &[f64],
    dt_r: usize,
    lambda: f64,
    comp: &CompositionConfig,
    budget: SteeringBudget,
    weights: Option<&[f64]>,
    rng: &mut R,
) -> Result<Option<Steered>, PlanError> {
    let ub = sys.control_bounds();
    let diff = |a: &[f64], b: &[f64]| {
        let mut d = sys.diff(a, b);
        if let Some(w) = weights {
            d.iter_mut().zip(w).for_each(|(x, wi)| *x *= wi.sqrt());
        }
        d
    };
    let eval = |u: &[f64], rng: &mut R| -> Result<Option<(f64, Vec<Vec<f64>>)>, PlanError> {
        let controls = vec![u.to_vec(); dt_r];
        let Ok(states) = rollout(sys, v_q, &controls) else {
            return Ok(None);
        };
        let d = dias(v_q, u, phi, monitor, comp, sys, rng)?;
        let q_s = states.last().expect("dt_r ≥ 1");
        Ok(Some((
            steering_cost(q_s, v_q, &d, q_r, dt_r, lambda, &diff),
            states,
        )))
    };

    let mut best: Option<(f64, Vec<f64>, Vec<Vec<f64>>)> = None;
    for _ in 0..budget.shots.max(1) {
        let u = ub.sample(rng);
        if let Some((c, states)) = eval(&u, rng)? {
            if best.as_ref().is_none_or(|b| c < b.0) {
                best = Some((c, u, states));
            }
        }
    }
    let Some((mut cost, mut u, mut states)) = best else {
        return Ok(None);
    };

    let mut step: Vec<f64> = ub
        .min
        .iter()
        .zip(&ub.max)
        .map(|(a, b)| 0.25 * (b - a))
        .collect();
    for _ in 0..budget.refine_iters {
        let mut improved = false;
        for i in 0..u.len() {
            for sign in [1.0, -1.0] {
                let mut cand = u.clone();
                cand[i] = (cand[i] + sign * step[i]).clamp(ub.min[i], ub.max[i]);
                if cand[i] == u[i] {
                    continue;
                }
                if let Some((c, s)) = eval(&cand, rng)? {
                    if c < cost {
                        (cost, u, states) = (c, cand, s);
                        improved = true;
                        break;
                    }
                }
            }
        }
        if !improved {
            step.iter_mut().for_each(|s| *s *= 0.5);
        }
    }
    Ok(Some(Steered {
        segment: Segment {
            controls: vec![u.clone(); dt_r],
            states,
        },
        control: u,
        cost,
    }))
}

//! Directions of increasing AGM satisfaction and their composition across
//! Boolean operators.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::SystemModel;
use crate::formula::{Formula, Node, NodeId, Predicate};
use crate::monitor::{Aggregation, Interval, MonitorState};
use crate::robustness::{agm_and_unchecked, agm_or_unchecked};

/// Lower clamp on fulfillments so negative-p power means stay finite.
pub const EPS_F: f64 = 1e-6;
/// `|cos θ|` at or below which two directions count as orthogonal.
pub const ORTHO_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiasError {
    #[error("predicate {id} reads axis {needed} but the state has {got} axes")]
    Dimension {
        id: String,
        needed: usize,
        got: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositionMode {
    Stochastic,
    Fpl,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompositionConfig {
    #[serde(rename = "composition")]
    pub mode: CompositionMode,
    pub p_and: f64,
    pub p_or: f64,
    pub beta: f64,
}

impl Default for CompositionConfig {
    fn default() -> Self {
        CompositionConfig {
            mode: CompositionMode::Fpl,
            p_and: -1.0,
            p_or: 1.0,
            beta: 0.1,
        }
    }
}

impl CompositionConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.beta >= 0.0) {
            return Err(format!("beta must be non-negative, got {}", self.beta));
        }
        if !self.p_and.is_finite() || !self.p_or.is_finite() {
            return Err("power-mean exponents must be finite".into());
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Zero vectors are orthogonal to everything.
pub fn orthogonal(a: &[f64], b: &[f64]) -> bool {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return true;
    }
    (dot(a, b) / (na * nb)).abs() <= ORTHO_TOL
}

/// `∇η(q)ᵀ J_f(q, u)` when applying `u` increases the predicate to first
/// order, zero otherwise.
///
/// The gate uses the one-step change `f(q, u) ⊖ q` so it is defined for any
/// control dimension.
pub fn dias_predicate<S: SystemModel + ?Sized>(
    q: &[f64],
    u: &[f64],
    mu: &Predicate,
    sys: &S,
) -> Result<Vec<f64>, DiasError> {
    let needed = mu.min_dim();
    if q.len() < needed || q.len() != sys.state_dim() {
        return Err(DiasError::Dimension {
            id: mu.id.clone(),
            needed: needed.max(sys.state_dim()),
            got: q.len(),
        });
    }
    let g = mu.gradient(q);
    let dq = sys.diff(&sys.step(q, u), q);
    if dot(&g, &dq) <= 0.0 {
        return Ok(vec![0.0; q.len()]);
    }
    let j = sys.jacobian(q, u);
    Ok((0..q.len())
        .map(|c| (0..q.len()).map(|r| g[r] * j[(r, c)]).sum())
        .collect())
}

/// Direction for the whole formula at `q`, using the monitor's per-node
/// intervals to arbitrate between Boolean children.
pub fn dias<S: SystemModel + ?Sized, R: Rng + ?Sized>(
    q: &[f64],
    u: &[f64],
    phi: &Formula,
    monitor: &MonitorState,
    cfg: &CompositionConfig,
    sys: &S,
    rng: &mut R,
) -> Result<Vec<f64>, DiasError> {
    dias_node(q, u, phi, phi.root(), monitor, cfg, sys, rng)
}

#[allow(clippy::too_many_arguments)]
fn dias_node<S: SystemModel + ?Sized, R: Rng + ?Sized>(
    q: &[f64],
    u: &[f64],
    phi: &Formula,
    id: NodeId,
    monitor: &MonitorState,
    cfg: &CompositionConfig,
    sys: &S,
    rng: &mut R,
) -> Result<Vec<f64>, DiasError> {
    match phi.node(id) {
        Node::True | Node::False => Ok(vec![0.0; q.len()]),
        Node::Pred(p) => dias_predicate(q, u, p, sys),
        Node::Globally { child, .. } | Node::Finally { child, .. } => {
            dias_node(q, u, phi, *child, monitor, cfg, sys, rng)
        }
        Node::And(cs) | Node::Or(cs) => {
            let op = if matches!(phi.node(id), Node::And(_)) {
                Aggregation::And
            } else {
                Aggregation::Or
            };
            let mut pairs = Vec::with_capacity(cs.len());
            for &c in cs {
                let v = dias_node(q, u, phi, c, monitor, cfg, sys, rng)?;
                pairs.push((v, monitor.node_interval(c)));
            }
            Ok(match cfg.mode {
                CompositionMode::Stochastic => compose_stochastic(&pairs, op, rng),
                CompositionMode::Fpl => compose_fpl(&pairs, op, cfg, rng),
            })
        }
    }
}

/// Probability that the stochastic branch ranks child 1 above child 2.
pub fn choice_probability(i1: &Interval, i2: &Interval) -> f64 {
    (0.5 + ((i1.lo + i1.hi) - (i2.lo + i2.hi)) / 8.0).clamp(0.0, 1.0)
}

/// Ordered pair `(lower, higher)` of child indices (1-based).
///
/// Strict dominance decides deterministically; otherwise the ranking is
/// drawn with [`choice_probability`], `(2, 1)` being returned with that
/// probability.
pub fn choose<R: Rng + ?Sized>(i1: &Interval, i2: &Interval, rng: &mut R) -> (usize, usize) {
    if i1.lo < i2.lo && i1.hi < i2.hi {
        return (1, 2);
    }
    if i2.lo < i1.lo && i2.hi < i1.hi {
        return (2, 1);
    }
    if rng.gen_bool(choice_probability(i1, i2)) {
        (2, 1)
    } else {
        (1, 2)
    }
}

/// Sum of orthogonal directions, otherwise the chosen one.
pub fn blend(chosen: &[f64], other: &[f64]) -> Vec<f64> {
    if orthogonal(chosen, other) {
        add(chosen, other)
    } else {
        chosen.to_vec()
    }
}

fn combine(op: Aggregation, a: &Interval, b: &Interval) -> Interval {
    let f = match op {
        Aggregation::And => agm_and_unchecked,
        Aggregation::Or => agm_or_unchecked,
    };
    Interval::new(f(&[a.lo, b.lo]), f(&[a.hi, b.hi]))
}

/// Pairwise choose-and-blend, folded left to right for more than two
/// children. The accumulator carries the interval of whichever side was kept.
pub fn compose_stochastic<R: Rng + ?Sized>(
    pairs: &[(Vec<f64>, Interval)],
    op: Aggregation,
    rng: &mut R,
) -> Vec<f64> {
    let Some((first, rest)) = pairs.split_first() else {
        return Vec::new();
    };
    let (mut acc, mut acc_iv) = first.clone();
    for (v, iv) in rest {
        let (_, higher) = choose(&acc_iv, iv, rng);
        let summed = orthogonal(&acc, v);
        let (next, kept) = if higher == 1 {
            (blend(&acc, v), acc_iv)
        } else {
            (blend(v, &acc), *iv)
        };
        acc_iv = if summed {
            combine(op, &acc_iv, iv)
        } else {
            kept
        };
        acc = next;
    }
    acc
}

/// `(η̲ + η̄ + 2) / 4`, clamped to `[EPS_F, 1]`.
pub fn fulfillment(i: &Interval) -> f64 {
    ((i.lo + i.hi + 2.0) / 4.0).clamp(EPS_F, 1.0)
}

fn clamp_f(f: &[f64]) -> impl Iterator<Item = f64> + '_ {
    f.iter().map(|x| x.clamp(EPS_F, 1.0))
}

/// `((1/n) Σ fᵢᵖ)^{1/p}`; `p = 0` is the geometric mean.
pub fn power_mean(f: &[f64], p: f64) -> f64 {
    let n = f.len() as f64;
    if p == 0.0 {
        return (clamp_f(f).map(f64::ln).sum::<f64>() / n).exp();
    }
    (clamp_f(f).map(|x| x.powf(p)).sum::<f64>() / n).powf(1.0 / p)
}

/// `∂μ_p/∂fᵢ = (1/n) fᵢ^{p−1} μ_p^{1−p}` for every `i`.
pub fn power_mean_gradient(f: &[f64], p: f64) -> Vec<f64> {
    let n = f.len() as f64;
    let mu = power_mean(f, p);
    clamp_f(f)
        .map(|x| x.powf(p - 1.0) * mu.powf(1.0 - p) / n)
        .collect()
}

/// Normalized `fᵢᵖ ∂μ_p/∂fᵢ` plus the exploration term
/// `β rᵢ (1 − max_{j≠i} |fᵢ − fⱼ|)`, `rᵢ ~ U[−1, 1]`. The perturbed weights
/// are not renormalized.
pub fn fpl_weights<R: Rng + ?Sized>(f: &[f64], p: f64, beta: f64, rng: &mut R) -> Vec<f64> {
    let grad = power_mean_gradient(f, p);
    let raw: Vec<f64> = clamp_f(f).zip(&grad).map(|(x, g)| x.powf(p) * g).collect();
    let total: f64 = raw.iter().sum();
    let n = f.len();
    (0..n)
        .map(|i| {
            let w = if total > 0.0 {
                raw[i] / total
            } else {
                1.0 / n as f64
            };
            if beta == 0.0 {
                return w;
            }
            let spread = (0..n)
                .filter(|&j| j != i)
                .map(|j| (f[i] - f[j]).abs())
                .fold(0.0, f64::max);
            w + beta * rng.gen_range(-1.0..=1.0) * (1.0 - spread)
        })
        .collect()
}

/// Power-mean weighted sum of child directions; plain sum when they are
/// mutually orthogonal.
pub fn compose_fpl<R: Rng + ?Sized>(
    pairs: &[(Vec<f64>, Interval)],
    op: Aggregation,
    cfg: &CompositionConfig,
    rng: &mut R,
) -> Vec<f64> {
    let Some(dim) = pairs.first().map(|(v, _)| v.len()) else {
        return Vec::new();
    };
    let mutually_orthogonal = pairs
        .iter()
        .enumerate()
        .all(|(i, (a, _))| pairs[i + 1..].iter().all(|(b, _)| orthogonal(a, b)));
    if mutually_orthogonal {
        return pairs
            .iter()
            .fold(vec![0.0; dim], |acc, (v, _)| add(&acc, v));
    }
    let f: Vec<f64> = pairs.iter().map(|(_, iv)| fulfillment(iv)).collect();
    let p = match op {
        Aggregation::And => cfg.p_and,
        Aggregation::Or => cfg.p_or,
    };
    let w = fpl_weights(&f, p, cfg.beta, rng);
    let mut out = vec![0.0; dim];
    for ((v, _), wi) in pairs.iter().zip(&w) {
        for (o, x) in out.iter_mut().zip(v) {
            *o += wi * x;
        }
    }
    out
}

/// Smallest possible component of an `n`-vector in `[0, 1]ⁿ` whose power
/// mean is `y`: `(n(yᵖ − 1) + 1)^{1/p}`, or 0 when that is not real.
pub fn min_fulfillment_bound(y: f64, n: usize, p: f64) -> f64 {
    let n = n as f64;
    if p == 0.0 {
        return y.powf(n);
    }
    let radicand = n * (y.powf(p) - 1.0) + 1.0;
    if radicand <= 0.0 {
        return 0.0;
    }
    radicand.powf(1.0 / p).clamp(0.0, 1.0)
}

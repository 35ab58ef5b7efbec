//! Offline robustness of complete traces: AGM semantics and the min-max
//! baseline.

use serde::{Deserialize, Serialize};

use crate::formula::{Formula, Node, NodeId, Predicate};

/// Floor applied before taking logarithms in geometric means.
pub const LOG_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RobustnessError {
    #[error("aggregation over an empty set")]
    Empty,
    #[error("value {0} is outside [-1, 1]")]
    OutOfRange(f64),
    #[error("state has dimension {got}, predicate `{id}` needs {expected}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        got: usize,
    },
    #[error("trace has {got} samples but the formula needs {needed}")]
    IncompleteTrace { needed: usize, got: usize },
    #[error("trace samples have differing dimensions")]
    RaggedTrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Semantics {
    Agm,
    MinMax,
}

/// `exp(mean(ln x))`, with each `x` floored at [`LOG_FLOOR`].
pub(crate) fn geometric_mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for x in xs {
        sum += x.max(LOG_FLOOR).ln();
        n += 1;
    }
    (sum / n as f64).exp()
}

fn check_values(values: &[f64]) -> Result<(), RobustnessError> {
    if values.is_empty() {
        return Err(RobustnessError::Empty);
    }
    match values.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
        Some(&v) => Err(RobustnessError::OutOfRange(v)),
        None => Ok(()),
    }
}

/// AGM disjunction.
pub fn agm_or(values: &[f64]) -> Result<f64, RobustnessError> {
    check_values(values)?;
    Ok(agm_or_unchecked(values))
}

/// AGM conjunction.
pub fn agm_and(values: &[f64]) -> Result<f64, RobustnessError> {
    check_values(values)?;
    Ok(agm_and_unchecked(values))
}

pub(crate) fn agm_or_unchecked(values: &[f64]) -> f64 {
    if values.iter().all(|&r| r < 0.0) {
        1.0 - geometric_mean(values.iter().map(|r| 1.0 - r))
    } else {
        values.iter().map(|r| r.max(0.0)).sum::<f64>() / values.len() as f64
    }
}

pub(crate) fn agm_and_unchecked(values: &[f64]) -> f64 {
    if values.iter().all(|&r| r > 0.0) {
        geometric_mean(values.iter().map(|r| 1.0 + r)) - 1.0
    } else {
        values.iter().map(|r| r.min(0.0)).sum::<f64>() / values.len() as f64
    }
}

fn check_dim(s: &[f64], mu: &Predicate) -> Result<(), RobustnessError> {
    let ok = match mu.required_dim() {
        Some(d) => s.len() == d,
        None => s.len() >= mu.min_dim(),
    };
    if ok {
        Ok(())
    } else {
        Err(RobustnessError::DimensionMismatch {
            id: mu.id.clone(),
            expected: mu.required_dim().unwrap_or(mu.min_dim()),
            got: s.len(),
        })
    }
}

/// `clamp((h(s) − ς) / 2γ, −1, 1)`.
pub fn predicate_robustness(s: &[f64], mu: &Predicate) -> Result<f64, RobustnessError> {
    check_dim(s, mu)?;
    Ok(mu.raw_robustness(s).clamp(-1.0, 1.0))
}

/// A finite signal whose first sample is taken at absolute step `t0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub samples: Vec<Vec<f64>>,
    pub t0: usize,
}

impl Trace {
    pub fn new(samples: Vec<Vec<f64>>) -> Trace {
        Trace { samples, t0: 0 }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Exact AGM robustness of `phi` evaluated from the first sample of `trace`.
pub fn agm_robustness(trace: &Trace, phi: &Formula) -> Result<f64, RobustnessError> {
    robustness(trace, phi, Semantics::Agm)
}

/// Traditional min-max robustness with the same predicate normalization.
pub fn minmax_robustness(trace: &Trace, phi: &Formula) -> Result<f64, RobustnessError> {
    robustness(trace, phi, Semantics::MinMax)
}

pub fn robustness(trace: &Trace, phi: &Formula, sem: Semantics) -> Result<f64, RobustnessError> {
    node_robustness(trace, phi, phi.root(), 0, sem)
}

/// Value of the subformula at `id`, evaluated starting at sample `offset`.
pub fn node_robustness(
    trace: &Trace,
    phi: &Formula,
    id: NodeId,
    offset: usize,
    sem: Semantics,
) -> Result<f64, RobustnessError> {
    check_trace(trace, phi, id, offset)?;
    eval(trace, phi, id, offset, sem)
}

fn check_trace(
    trace: &Trace,
    phi: &Formula,
    id: NodeId,
    offset: usize,
) -> Result<(), RobustnessError> {
    let needed = offset + phi.node_horizon(id) + 1;
    if trace.len() < needed {
        return Err(RobustnessError::IncompleteTrace {
            needed,
            got: trace.len(),
        });
    }
    let d = trace.samples[0].len();
    if trace.samples.iter().any(|s| s.len() != d) {
        return Err(RobustnessError::RaggedTrace);
    }
    Ok(())
}

fn eval(
    trace: &Trace,
    phi: &Formula,
    id: NodeId,
    k: usize,
    sem: Semantics,
) -> Result<f64, RobustnessError> {
    let children = |ids: &[NodeId], k: usize| -> Result<Vec<f64>, RobustnessError> {
        ids.iter().map(|&c| eval(trace, phi, c, k, sem)).collect()
    };
    let window = |a: usize, b: usize, child: NodeId| -> Result<Vec<f64>, RobustnessError> {
        (k + a..=k + b)
            .map(|j| eval(trace, phi, child, j, sem))
            .collect()
    };
    Ok(match phi.node(id) {
        Node::True => 1.0,
        Node::False => -1.0,
        Node::Pred(mu) => predicate_robustness(&trace.samples[k], mu)?,
        Node::And(cs) => conj(&children(cs, k)?, sem),
        Node::Or(cs) => disj(&children(cs, k)?, sem),
        Node::Globally { a, b, child } => conj(&window(*a, *b, *child)?, sem),
        Node::Finally { a, b, child } => disj(&window(*a, *b, *child)?, sem),
    })
}

fn conj(v: &[f64], sem: Semantics) -> f64 {
    match sem {
        Semantics::Agm => agm_and_unchecked(v),
        Semantics::MinMax => v.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

fn disj(v: &[f64], sem: Semantics) -> f64 {
    match sem {
        Semantics::Agm => agm_or_unchecked(v),
        Semantics::MinMax => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

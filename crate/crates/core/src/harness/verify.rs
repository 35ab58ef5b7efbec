use serde::Serialize;

use crate::formula::{Formula, Node};
use crate::monitor::MonitorState;
use crate::robustness::{node_robustness, robustness, Semantics, Trace};

use super::{HarnessError, Heuristic, Scenario, StatesFile};

/// Tolerance between a reported value and its offline recomputation.
pub const VERIFY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubformulaValue {
    pub text: String,
    pub agm: f64,
    pub minmax: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub agm: f64,
    /// Normalized min-max value.
    pub minmax: f64,
    /// Top-level operands of the formula.
    pub subformulas: Vec<SubformulaValue>,
    /// `|recomputed − reported|` in the run's semantics, when a value was
    /// reported.
    pub eta_error: Option<f64>,
    /// Empty when the trajectory is consistent with what the run reported.
    pub problems: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.problems.is_empty()
    }
}

fn top_level(phi: &Formula) -> Vec<usize> {
    match phi.node(phi.root()) {
        Node::And(cs) | Node::Or(cs) => cs.clone(),
        _ => vec![phi.root()],
    }
}

/// Recomputes both semantics on the trajectory and checks them against the
/// file's solved flag and reported value.
pub fn verify_trajectory(
    file: &StatesFile,
    scenario: &Scenario,
) -> Result<VerifyReport, HarnessError> {
    let needed = scenario.horizon() + 1;
    if file.states.len() < needed {
        return Err(HarnessError::ShortTrajectory {
            needed,
            got: file.states.len(),
        });
    }
    let trace = Trace::new(file.states.clone());
    let (phi, phi_mm) = (&scenario.formula, &scenario.minmax_formula);
    let agm = robustness(&trace, phi, Semantics::Agm)?;
    let minmax = robustness(&trace, phi_mm, Semantics::MinMax)?;
    // Both formulas are parsed from the same text, so node ids line up.
    let subformulas = top_level(phi)
        .into_iter()
        .map(|id| {
            Ok(SubformulaValue {
                text: phi.subformula_text(id),
                agm: node_robustness(&trace, phi, id, 0, Semantics::Agm)?,
                minmax: node_robustness(&trace, phi_mm, id, 0, Semantics::MinMax)?,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;

    let mut problems = Vec::new();
    if (agm > 0.0) != (minmax > 0.0) {
        problems.push(format!("AGM {agm} and min-max {minmax} disagree in sign"));
    }
    match file.solved {
        Some(true) if agm <= 0.0 || minmax <= 0.0 => problems
            .push("run reported a solution but the trajectory does not satisfy the formula".into()),
        Some(false) if agm > 0.0 && minmax > 0.0 => problems
            .push("run reported no solution but the trajectory satisfies the formula".into()),
        _ => {}
    }
    let eta_error = file.eta.map(|eta| {
        let value = match file.heuristic {
            Some(Heuristic::Minmax) => minmax,
            _ => agm,
        };
        (value - eta).abs()
    });
    if let Some(e) = eta_error {
        if !(e <= VERIFY_TOL) {
            problems.push(format!(
                "reported value differs from the recomputed one by {e:e}"
            ));
        }
    }
    Ok(VerifyReport {
        agm,
        minmax,
        subformulas,
        eta_error,
        problems,
    })
}

/// Replays `states` through a fresh monitor and emits one JSON line per live
/// instance per step: `{t, node_id, lo, hi, N}`.
pub fn monitor_debug_lines(
    phi: &Formula,
    states: &[Vec<f64>],
    sem: Semantics,
) -> Result<Vec<String>, HarnessError> {
    let mut m = MonitorState::new(phi, 0, sem);
    let mut out = Vec::new();
    for (t, s) in states.iter().enumerate() {
        m.step(phi, s, t).map_err(crate::planner::PlanError::from)?;
        for snap in m.snapshot() {
            out.push(
                serde_json::json!({
                    "t": t,
                    "node_id": snap.node_id,
                    "lo": snap.lo,
                    "hi": snap.hi,
                    "N": snap.n,
                })
                .to_string(),
            );
        }
    }
    Ok(out)
}

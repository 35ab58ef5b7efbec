//! Scenario files, seeded batch runs, metric logs and offline verification.

mod batch;
mod metrics;
mod scenario;
mod verify;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dias::CompositionMode;
use crate::dynamics::DynamicsError;
use crate::formula::FormulaError;
use crate::planner::PlanError;
use crate::robustness::{RobustnessError, Semantics};

pub use batch::{median, run_batch, summarize, HeuristicSummary, RunRecord};
pub use metrics::{
    export_metrics, export_states, import_metrics, import_states, metric_rows, MetricRow,
    MetricsFile, MetricsFormat, StatesFile, METRIC_COLUMNS,
};
pub use scenario::{
    bundled_scenario, load_bundled, load_scenario, minmax_divisor, BoundsSpec, PlannerSpec,
    PredicateSpec, Scenario, ScenarioFile, ShapeSpec, SystemKind, BUNDLED,
};
pub use verify::{
    monitor_debug_lines, verify_trajectory, SubformulaValue, VerifyReport, VERIFY_TOL,
};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("schema error at `{path}`: {msg}")]
    Schema { path: String, msg: String },
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Robustness(#[from] RobustnessError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("trajectory has {got} samples, the formula needs {needed}")]
    ShortTrajectory { needed: usize, got: usize },
    #[error("malformed file: {0}")]
    Malformed(String),
}

impl HarnessError {
    pub(crate) fn schema(path: impl Into<String>, msg: impl Into<String>) -> HarnessError {
        HarnessError::Schema {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

/// Planner variant compared in a batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heuristic {
    /// Min-max robustness intervals with stochastic choose/blend.
    Minmax,
    AgmStochastic,
    AgmFpl,
}

impl Heuristic {
    pub const ALL: [Heuristic; 3] = [
        Heuristic::Minmax,
        Heuristic::AgmStochastic,
        Heuristic::AgmFpl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Heuristic::Minmax => "minmax",
            Heuristic::AgmStochastic => "agm_stochastic",
            Heuristic::AgmFpl => "agm_fpl",
        }
    }

    pub fn semantics(self) -> Semantics {
        match self {
            Heuristic::Minmax => Semantics::MinMax,
            _ => Semantics::Agm,
        }
    }

    pub fn composition(self) -> CompositionMode {
        match self {
            Heuristic::AgmFpl => CompositionMode::Fpl,
            _ => CompositionMode::Stochastic,
        }
    }
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Heuristic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Heuristic::ALL
            .into_iter()
            .find(|h| h.as_str() == s.trim())
            .ok_or_else(|| {
                format!("unknown heuristic `{s}` (expected minmax, agm_stochastic or agm_fpl)")
            })
    }
}

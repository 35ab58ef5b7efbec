use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::monitor::Interval;
use crate::planner::{plan, IterationRecord, PlanError, PlanStatus};

use super::{Heuristic, Scenario};

/// One planner run of a batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub heuristic: Heuristic,
    pub seed: u64,
    pub rows: Vec<IterationRecord>,
    pub status: PlanStatus,
    /// Exact value of the returned solution, in the heuristic's semantics.
    pub eta: Option<f64>,
    pub best: Interval,
    pub first_solution_iter: Option<usize>,
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    pub ik_hits: u64,
    pub ik_misses: u64,
}

impl RunRecord {
    pub fn run_id(h: Heuristic, seed: u64) -> String {
        format!("{h}-{seed}")
    }

    pub fn solved(&self) -> bool {
        self.status == PlanStatus::Solved
    }

    pub fn final_lo(&self) -> f64 {
        self.rows.last().map_or(self.best.lo, |r| r.best_lo)
    }
}

impl Scenario {
    /// Plans once with `h` and `seed`, optionally overriding the iteration
    /// budget.
    pub fn run(
        &self,
        h: Heuristic,
        seed: u64,
        iters: Option<usize>,
    ) -> Result<RunRecord, PlanError> {
        let mut cfg = self.config_for(h, seed);
        if let Some(n) = iters {
            cfg.max_iters = n;
        }
        let res = plan(&self.q_init, self.formula_for(h), self.system.as_ref(), cfg)?;
        Ok(RunRecord {
            run_id: RunRecord::run_id(h, seed),
            heuristic: h,
            seed,
            rows: res.metrics,
            status: res.status,
            eta: res.eta,
            best: res.best,
            first_solution_iter: res.first_solution_iter,
            states: res.states,
            controls: res.controls,
            ik_hits: res.ik_hits,
            ik_misses: res.ik_misses,
        })
    }
}

/// Runs every `(heuristic, seed)` pair in parallel. A failing run is kept
/// as an error under its id and does not stop the others.
pub fn run_batch(
    scenario: &Scenario,
    heuristics: &[Heuristic],
    seeds: &[u64],
    iters: Option<usize>,
) -> BTreeMap<String, Result<RunRecord, PlanError>> {
    let jobs: Vec<(Heuristic, u64)> = heuristics
        .iter()
        .flat_map(|&h| seeds.iter().map(move |&s| (h, s)))
        .collect();
    jobs.into_par_iter()
        .map(|(h, s)| (RunRecord::run_id(h, s), scenario.run(h, s, iters)))
        .collect()
}

/// Median of the values, with `None` treated as +∞. `None` for an empty
/// input.
pub fn median(values: &[Option<f64>]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = values.iter().map(|x| x.unwrap_or(f64::INFINITY)).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeuristicSummary {
    pub heuristic: Heuristic,
    pub runs: usize,
    pub errors: usize,
    pub solved: usize,
    pub median_final_lo: Option<f64>,
    /// Unsolved runs count as never finding a solution.
    pub median_first_solution: Option<f64>,
    pub median_wall_ms: Option<f64>,
}

pub fn summarize(
    records: &BTreeMap<String, Result<RunRecord, PlanError>>,
    h: Heuristic,
) -> HeuristicSummary {
    let runs: Vec<&Result<RunRecord, PlanError>> = records
        .values()
        .filter(|r| r.as_ref().is_ok_and(|r| r.heuristic == h))
        .collect();
    let errors = records
        .iter()
        .filter(|(id, r)| r.is_err() && id.rsplit_once('-').is_some_and(|(p, _)| p == h.as_str()))
        .count();
    let ok: Vec<&RunRecord> = runs.iter().filter_map(|r| r.as_ref().ok()).collect();
    HeuristicSummary {
        heuristic: h,
        runs: ok.len() + errors,
        errors,
        solved: ok.iter().filter(|r| r.solved()).count(),
        median_final_lo: median(&ok.iter().map(|r| Some(r.final_lo())).collect::<Vec<_>>()),
        median_first_solution: median(
            &ok.iter()
                .map(|r| r.first_solution_iter.map(|i| i as f64))
                .collect::<Vec<_>>(),
        ),
        median_wall_ms: median(
            &ok.iter()
                .map(|r| r.rows.last().map(|x| x.wall_ms))
                .collect::<Vec<_>>(),
        ),
    }
}

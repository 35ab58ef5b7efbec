use rrt_eta::formula::Node;
use rrt_eta::harness::{
    export_metrics, export_states, import_metrics, import_states, load_bundled, metric_rows,
    run_batch, summarize, verify_trajectory, HarnessError, Heuristic, MetricsFormat, RunRecord,
    Scenario, StatesFile, BUNDLED, METRIC_COLUMNS,
};
use rrt_eta::robustness::{robustness, Semantics, Trace};

#[test]
fn bundled_scenarios_load() {
    for (name, _) in BUNDLED {
        let sc = load_bundled(name).unwrap();
        assert_eq!(sc.name(), name);
        assert!(sc.minmax_divisor > 0.0);
        assert_eq!(sc.q_init.len(), sc.system.state_dim());
    }
    let u = load_bundled("unicycle_reach_avoid").unwrap();
    assert_eq!(u.horizon(), 40);
    assert_eq!(u.seeds(), &(0..10).collect::<Vec<u64>>()[..]);
    assert_eq!(load_bundled("double_integrator_nav").unwrap().horizon(), 10);
}

#[test]
fn arm_cascade_has_two_disjunctive_phases() {
    let sc = load_bundled("arm_cascade").unwrap();
    let phi = &sc.formula;
    assert_eq!(phi.horizon(), 15);
    let Node::And(top) = phi.node(phi.root()) else {
        panic!("root is not a conjunction")
    };
    assert_eq!(top.len(), 4);
    let windows: Vec<_> = top
        .iter()
        .filter_map(|&c| match phi.node(c) {
            Node::Finally { a, b, child } => {
                assert!(matches!(phi.node(*child), Node::Or(cs) if cs.len() == 2));
                Some((*a, *b))
            }
            _ => None,
        })
        .collect();
    assert_eq!(windows, vec![(2, 7), (8, 15)]);
    // Arm scenarios give q_init in joints and get the pose appended.
    assert_eq!(sc.q_init.len(), 6);
}

const MINIMAL: &str = r#"{
  "name": "tiny",
  "system": "double_integrator",
  "dt": 1.0,
  "bounds": {
    "state": { "min": [0, 0, -1, -1], "max": [5, 5, 1, 1] },
    "control": { "min": [-1, -1], "max": [1, 1] }
  },
  "predicates": [
    { "id": "goal", "shape": { "ball": { "axes": [0, 1], "center": [3, 3], "radius": 1, "inside": true } } }
  ],
  "formula": "F[0,6](goal)",
  "q_init": [1, 1, 0, 0],
  "seeds": [0, 1, 2]
}"#;

#[test]
fn missing_predicate_is_named() {
    let text = MINIMAL.replace("F[0,6](goal)", "F[0,6](goal) & G[0,6](wall)");
    let err = Scenario::from_json(&text).unwrap_err();
    assert!(err.to_string().contains("wall"), "{err}");
}

#[test]
fn schema_errors_carry_a_path() {
    let text = MINIMAL.replace("\"inside\": true", "\"inside\": 3");
    match Scenario::from_json(&text).unwrap_err() {
        HarnessError::Schema { path, .. } => assert!(path.starts_with("predicates[0]"), "{path}"),
        e => panic!("unexpected {e}"),
    }
    let text = MINIMAL.replace("\"seeds\"", "\"seedz\"");
    assert!(matches!(
        Scenario::from_json(&text),
        Err(HarnessError::Schema { .. })
    ));
}

#[test]
fn initial_state_outside_bounds_is_rejected() {
    let text = MINIMAL.replace("[1, 1, 0, 0]", "[9, 1, 0, 0]");
    assert!(Scenario::from_json(&text).is_err());
}

#[test]
fn heuristic_and_composition_must_agree() {
    let text = MINIMAL.replace(
        "\"seeds\"",
        "\"heuristic\": \"agm_fpl\", \"planner\": { \"composition\": \"stochastic\" }, \"seeds\"",
    );
    assert!(Scenario::from_json(&text).is_err());
}

#[test]
fn batch_has_one_record_per_run_and_is_deterministic() {
    let sc = Scenario::from_json(MINIMAL).unwrap();
    let a = run_batch(&sc, &[Heuristic::AgmFpl], sc.seeds(), Some(60));
    assert_eq!(a.len(), 3);
    assert!(a.keys().all(|k| k.starts_with("agm_fpl-")));
    let b = run_batch(&sc, &[Heuristic::AgmFpl], sc.seeds(), Some(60));
    for (id, ra) in &a {
        let (ra, rb) = (ra.as_ref().unwrap(), b[id].as_ref().unwrap());
        assert_eq!(ra.states, rb.states);
        assert_eq!(ra.eta, rb.eta);
        let strip = |r: &RunRecord| {
            r.rows
                .iter()
                .map(|m| (m.best_lo, m.best_hi, m.tree_size))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(ra), strip(rb));
    }
    let s = summarize(&a, Heuristic::AgmFpl);
    assert_eq!((s.runs, s.errors), (3, 0));
    assert_eq!(summarize(&a, Heuristic::Minmax).runs, 0);
}

#[test]
fn metrics_round_trip_and_gap() {
    let sc = Scenario::from_json(MINIMAL).unwrap();
    let recs = run_batch(
        &sc,
        &[Heuristic::Minmax, Heuristic::AgmStochastic],
        &[4],
        Some(40),
    );
    let recs: Vec<_> = recs.values().map(|r| r.as_ref().unwrap()).collect();
    let rows = metric_rows(recs.iter().copied());
    assert_eq!(rows.len(), 80);
    for r in &rows {
        assert_eq!(r.gap, r.best_hi - r.best_lo);
    }
    let dir = tempfile::tempdir().unwrap();
    for format in [MetricsFormat::Csv, MetricsFormat::Json] {
        let path = dir.path().join("m");
        export_metrics(recs.iter().copied(), sc.minmax_divisor, &path, format).unwrap();
        let back = import_metrics(&path, format).unwrap();
        assert_eq!(back.minmax_divisor, sc.minmax_divisor);
        assert_eq!(back.rows, rows, "{format:?}");
    }
}

#[test]
fn empty_csv_export_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    export_metrics([], 2.5, &path, MetricsFormat::Csv).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines,
        vec!["# minmax_divisor=2.5".to_string(), METRIC_COLUMNS.join(",")]
    );
    assert!(import_metrics(&path, MetricsFormat::Csv)
        .unwrap()
        .rows
        .is_empty());
}

#[test]
fn states_round_trip() {
    let file = StatesFile {
        run_id: Some("agm_fpl-3".into()),
        heuristic: Some(Heuristic::AgmFpl),
        solved: Some(true),
        eta: Some(0.123456789012345),
        states: vec![vec![0.1, -2.5], vec![1e-17, 3.0]],
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    export_states(&file, &path).unwrap();
    assert_eq!(import_states(&path).unwrap(), file);
}

#[test]
fn planner_solution_verifies() {
    let sc = Scenario::from_json(MINIMAL).unwrap();
    for h in Heuristic::ALL {
        let rec = sc.run(h, 0, Some(300)).unwrap();
        assert!(rec.solved(), "{h} did not solve the tiny scenario");
        let report = verify_trajectory(&StatesFile::from(&rec), &sc).unwrap();
        assert!(report.ok(), "{:?}", report.problems);
        assert!(report.eta_error.unwrap() <= 1e-9);
    }
}

fn unicycle_trace(f: impl Fn(usize) -> (f64, f64)) -> StatesFile {
    StatesFile {
        states: (0..=40)
            .map(|t| {
                let (x, y) = f(t);
                vec![x, y, 0.0, 0.0, 0.0]
            })
            .collect(),
        ..StatesFile::default()
    }
}

#[test]
fn obstacle_entry_fails_the_avoid_clause() {
    let sc = load_bundled("unicycle_reach_avoid").unwrap();
    // Region1 early, through the obstacle at t = 12, then Region2.
    let file = unicycle_trace(|t| match t {
        0..=10 => (2.5, 1.5),
        11..=13 => (1.0, 1.5),
        _ => (1.0, 2.75),
    });
    let report = verify_trajectory(&file, &sc).unwrap();
    let avoid = report
        .subformulas
        .iter()
        .find(|s| s.text.starts_with("G"))
        .unwrap();
    assert!(avoid.minmax < 0.0 && avoid.agm < 0.0);
    assert!(report.minmax < 0.0 && report.agm < 0.0);
    let reach: Vec<_> = report
        .subformulas
        .iter()
        .filter(|s| s.text.starts_with("F"))
        .collect();
    assert!(reach.iter().all(|s| s.minmax > 0.0 && s.agm > 0.0));
}

#[test]
fn constant_trace_in_goal_satisfies_reach_only_spec() {
    let text = MINIMAL.replace("F[0,6](goal)", "F[2,6](goal)");
    let sc = Scenario::from_json(&text).unwrap();
    let file = StatesFile {
        states: vec![vec![3.0, 3.0, 0.0, 0.0]; 7],
        ..StatesFile::default()
    };
    let report = verify_trajectory(&file, &sc).unwrap();
    assert!(report.ok());
    assert!(report.agm > 0.0 && report.minmax > 0.0);
    // Deep inside a unit ball with γ = 1: h − ς = 2, so every sample is 1.
    let direct = robustness(
        &Trace::new(file.states.clone()),
        &sc.formula,
        Semantics::Agm,
    )
    .unwrap();
    assert_eq!(report.agm, direct);
    assert!((report.agm - 1.0).abs() < 1e-12);
}

#[test]
fn short_trajectory_is_an_error() {
    let sc = load_bundled("unicycle_reach_avoid").unwrap();
    let mut file = unicycle_trace(|_| (2.5, 1.5));
    file.states.truncate(12);
    match verify_trajectory(&file, &sc) {
        Err(HarnessError::ShortTrajectory {
            needed: 41,
            got: 12,
        }) => {}
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn reported_value_mismatch_is_flagged() {
    let sc = Scenario::from_json(MINIMAL).unwrap();
    let rec = sc.run(Heuristic::AgmStochastic, 0, Some(300)).unwrap();
    let mut file = StatesFile::from(&rec);
    file.eta = file.eta.map(|e| e + 1e-6);
    let report = verify_trajectory(&file, &sc).unwrap();
    assert!(!report.ok());
}

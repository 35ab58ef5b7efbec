use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rrt-eta"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/scenarios")
        .join(format!("{name}.json"))
}

fn scratch(name: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn plan_then_verify() {
    let out = scratch("plan_then_verify");
    let sc = scenario("double_integrator_nav");
    let st = bin()
        .args([
            "plan",
            sc.to_str().unwrap(),
            "--seed",
            "0",
            "--monitor-debug",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    for f in ["metrics.csv", "states.csv", "monitor.jsonl"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let st = bin()
        .arg("verify")
        .arg(out.join("states.csv"))
        .arg(&sc)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
}

#[test]
fn tampered_trajectory_fails_verification() {
    let out = scratch("tampered");
    let sc = scenario("double_integrator_nav");
    let st = bin()
        .args(["plan", sc.to_str().unwrap(), "--seed", "1", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    // Move every sample onto the obstacle centre.
    let path = out.join("states.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    let mut moved = vec![];
    while let Some(l) = lines.next() {
        let mut cols: Vec<String> = l.split(',').map(str::to_string).collect();
        if cols.len() >= 3 && cols[1].parse::<f64>().is_ok() {
            cols[1] = "3".into();
            cols[2] = "3".into();
        }
        moved.push(cols.join(","));
    }
    std::fs::write(&path, moved.join("\n") + "\n").unwrap();
    let st = bin().arg("verify").arg(&path).arg(&sc).status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn bench_writes_one_states_file_per_run() {
    let out = scratch("bench");
    let sc = scenario("double_integrator_nav");
    let o = bin()
        .args([
            "bench",
            sc.to_str().unwrap(),
            "--seeds",
            "0,1",
            "--heuristics",
            "agm_fpl,minmax",
        ])
        .args(["--iters", "300", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.code() == Some(0) || o.status.code() == Some(2));
    let states = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .ends_with(".states.csv")
        })
        .count();
    assert_eq!(states, 4);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("agm_fpl") && stdout.contains("minmax"));
}

#[test]
fn missing_scenario_is_an_error() {
    let st = bin()
        .args(["plan", "no/such/file.json", "--out"])
        .arg(scratch("missing"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(1));
}

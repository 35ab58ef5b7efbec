use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rrt_eta::harness::{
    export_metrics, export_states, import_states, load_scenario, monitor_debug_lines, run_batch,
    summarize, verify_trajectory, Heuristic, MetricsFormat, RunRecord, StatesFile,
};

#[derive(Parser)]
#[command(
    name = "rrt-eta",
    version,
    about = "Robustness-guided kinodynamic planning for STL tasks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Plan one run and write its metrics and trajectory.
    Plan {
        scenario: PathBuf,
        #[arg(long)]
        heuristic: Option<Heuristic>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        metrics: MetricsFormat,
        /// Also write per-step monitor intervals of the trajectory as JSON lines.
        #[arg(long)]
        monitor_debug: bool,
    },
    /// Recompute the robustness of a trajectory file.
    Verify { states: PathBuf, scenario: PathBuf },
    /// Run every heuristic/seed pair and print a summary.
    Bench {
        scenario: PathBuf,
        /// A range `a..b` (inclusive) or a comma list.
        #[arg(long, default_value = "0..9")]
        seeds: String,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "minmax,agm_stochastic,agm_fpl"
        )]
        heuristics: Vec<Heuristic>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        metrics: MetricsFormat,
    },
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
        if a > b {
            bail!("empty seed range {s}");
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|x| x.trim().parse().with_context(|| format!("bad seed `{x}`")))
        .collect()
}

fn metrics_name(format: MetricsFormat) -> &'static str {
    match format {
        MetricsFormat::Csv => "metrics.csv",
        MetricsFormat::Json => "metrics.json",
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn plan(
    path: &Path,
    heuristic: Option<Heuristic>,
    seed: Option<u64>,
    iters: Option<usize>,
    out: &Path,
    format: MetricsFormat,
    monitor_debug: bool,
) -> Result<ExitCode> {
    let sc = load_scenario(path)?;
    let h = heuristic.unwrap_or(sc.heuristic);
    let seed = seed.unwrap_or(sc.seeds()[0]);
    let rec = sc.run(h, seed, iters)?;
    create_dir(out)?;
    export_metrics(
        [&rec],
        sc.minmax_divisor,
        out.join(metrics_name(format)),
        format,
    )?;
    export_states(&StatesFile::from(&rec), out.join("states.csv"))?;
    if monitor_debug {
        let lines = monitor_debug_lines(sc.formula_for(h), &rec.states, h.semantics())?;
        std::fs::write(out.join("monitor.jsonl"), lines.join("\n") + "\n")?;
    }
    let last = rec.rows.last();
    println!(
        "{} {}: {:?} after {} iterations, interval [{:.6}, {:.6}], tree {}",
        sc.name(),
        rec.run_id,
        rec.status,
        rec.rows.len(),
        rec.best.lo,
        rec.best.hi,
        last.map_or(1, |r| r.tree_size)
    );
    if let Some(eta) = rec.eta {
        println!("eta = {eta}");
    }
    Ok(if rec.solved() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn verify(states: &Path, scenario: &Path) -> Result<ExitCode> {
    let sc = load_scenario(scenario)?;
    let file = import_states(states)?;
    let report = verify_trajectory(&file, &sc)?;
    println!("agm = {}", report.agm);
    println!(
        "minmax (normalized by {}) = {}",
        sc.minmax_divisor, report.minmax
    );
    for s in &report.subformulas {
        println!("  {}: agm {} minmax {}", s.text, s.agm, s.minmax);
    }
    if let Some(e) = report.eta_error {
        println!("|recomputed - reported| = {e:e}");
    }
    for p in &report.problems {
        eprintln!("verify: {p}");
    }
    Ok(if report.ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn bench(
    path: &Path,
    seeds: &str,
    heuristics: &[Heuristic],
    iters: Option<usize>,
    out: Option<&Path>,
    format: MetricsFormat,
) -> Result<ExitCode> {
    let sc = load_scenario(path)?;
    let seeds = parse_seeds(seeds)?;
    let records = run_batch(&sc, heuristics, &seeds, iters);
    for (id, r) in &records {
        if let Err(e) = r {
            eprintln!("{id}: {e}");
        }
    }
    println!("heuristic       solved  median_lo  median_first_solution  median_wall_ms");
    for &h in heuristics {
        let s = summarize(&records, h);
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        println!(
            "{:<15} {:>2}/{:<3}  {:>9}  {:>21}  {:>14}",
            h.as_str(),
            s.solved,
            s.runs,
            fmt(s.median_final_lo),
            fmt(s.median_first_solution),
            fmt(s.median_wall_ms)
        );
    }
    let ok: Vec<&RunRecord> = records.values().filter_map(|r| r.as_ref().ok()).collect();
    if let Some(dir) = out {
        create_dir(dir)?;
        export_metrics(
            ok.iter().copied(),
            sc.minmax_divisor,
            dir.join(metrics_name(format)),
            format,
        )?;
        for r in &ok {
            export_states(
                &StatesFile::from(*r),
                dir.join(format!("{}.states.csv", r.run_id)),
            )?;
        }
    }
    if ok.len() < records.len() {
        return Ok(ExitCode::from(1));
    }
    Ok(if ok.iter().any(|r| r.solved()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Plan {
            scenario,
            heuristic,
            seed,
            iters,
            out,
            metrics,
            monitor_debug,
        } => plan(
            scenario,
            *heuristic,
            *seed,
            *iters,
            out,
            *metrics,
            *monitor_debug,
        ),
        Cmd::Verify { states, scenario } => verify(states, scenario),
        Cmd::Bench {
            scenario,
            seeds,
            heuristics,
            iters,
            out,
            metrics,
        } => bench(
            scenario,
            seeds,
            heuristics,
            *iters,
            out.as_deref(),
            *metrics,
        ),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

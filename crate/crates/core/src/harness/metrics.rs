use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{HarnessError, Heuristic, RunRecord};

pub const METRIC_COLUMNS: [&str; 10] = [
    "run_id",
    "heuristic",
    "seed",
    "iter",
    "wall_ms",
    "best_lo",
    "best_hi",
    "gap",
    "tree_size",
    "solved",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricsFormat {
    Csv,
    Json,
}

impl FromStr for MetricsFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(MetricsFormat::Csv),
            "json" => Ok(MetricsFormat::Json),
            _ => Err(format!(
                "unknown metrics format `{s}` (expected csv or json)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub run_id: String,
    pub heuristic: Heuristic,
    pub seed: u64,
    pub iter: usize,
    pub wall_ms: f64,
    pub best_lo: f64,
    pub best_hi: f64,
    pub gap: f64,
    pub tree_size: usize,
    pub solved: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    /// Scale that min-max values were divided by.
    pub minmax_divisor: f64,
    pub rows: Vec<MetricRow>,
}

/// Flattens records into rows, ordered by run id then iteration.
pub fn metric_rows<'r>(records: impl IntoIterator<Item = &'r RunRecord>) -> Vec<MetricRow> {
    let mut recs: Vec<&RunRecord> = records.into_iter().collect();
    recs.sort_by(|a, b| a.run_id.cmp(&b.run_id));
    recs.into_iter()
        .flat_map(|r| {
            r.rows.iter().map(move |m| MetricRow {
                run_id: r.run_id.clone(),
                heuristic: r.heuristic,
                seed: r.seed,
                iter: m.iter,
                wall_ms: m.wall_ms,
                best_lo: m.best_lo,
                best_hi: m.best_hi,
                gap: m.gap,
                tree_size: m.tree_size,
                solved: m.solved,
            })
        })
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn open(path: &Path) -> Result<BufReader<File>, HarnessError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes one row per iteration per run. CSV files start with a
/// `# minmax_divisor=D` line.
pub fn export_metrics<'r>(
    records: impl IntoIterator<Item = &'r RunRecord>,
    minmax_divisor: f64,
    path: impl AsRef<Path>,
    format: MetricsFormat,
) -> Result<(), HarnessError> {
    let path = path.as_ref();
    let file = MetricsFile {
        minmax_divisor,
        rows: metric_rows(records),
    };
    let mut out = create(path)?;
    match format {
        MetricsFormat::Json => {
            serde_json::to_writer_pretty(&mut out, &file)?;
            writeln!(out).map_err(io_err(path))?;
        }
        MetricsFormat::Csv => {
            writeln!(out, "# minmax_divisor={minmax_divisor}").map_err(io_err(path))?;
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(&mut out);
            w.write_record(METRIC_COLUMNS)?;
            for row in &file.rows {
                w.serialize(row)?;
            }
            w.flush().map_err(io_err(path))?;
        }
    }
    out.flush().map_err(io_err(path))
}

pub fn import_metrics(
    path: impl AsRef<Path>,
    format: MetricsFormat,
) -> Result<MetricsFile, HarnessError> {
    let path = path.as_ref();
    let mut input = open(path)?;
    match format {
        MetricsFormat::Json => Ok(serde_json::from_reader(input)?),
        MetricsFormat::Csv => {
            let mut first = String::new();
            input.read_line(&mut first).map_err(io_err(path))?;
            let minmax_divisor = first
                .trim()
                .strip_prefix("# minmax_divisor=")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| {
                    HarnessError::Malformed("missing `# minmax_divisor=` header".into())
                })?;
            let mut r = csv::Reader::from_reader(input);
            let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
            if header != METRIC_COLUMNS {
                return Err(HarnessError::Malformed(format!(
                    "unexpected columns {header:?}"
                )));
            }
            let rows = r.deserialize().collect::<Result<Vec<MetricRow>, _>>()?;
            Ok(MetricsFile {
                minmax_divisor,
                rows,
            })
        }
    }
}

/// A trajectory file: `# key=value` lines, then `t, s0, s1, …` rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StatesFile {
    pub run_id: Option<String>,
    pub heuristic: Option<Heuristic>,
    pub solved: Option<bool>,
    /// Value the planner reported for the trajectory.
    pub eta: Option<f64>,
    pub states: Vec<Vec<f64>>,
}

impl From<&RunRecord> for StatesFile {
    fn from(r: &RunRecord) -> StatesFile {
        StatesFile {
            run_id: Some(r.run_id.clone()),
            heuristic: Some(r.heuristic),
            solved: Some(r.solved()),
            eta: r.eta,
            states: r.states.clone(),
        }
    }
}

pub fn export_states(file: &StatesFile, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let e = io_err(path);
    if let Some(v) = &file.run_id {
        writeln!(out, "# run_id={v}").map_err(&e)?;
    }
    if let Some(v) = file.heuristic {
        writeln!(out, "# heuristic={v}").map_err(&e)?;
    }
    if let Some(v) = file.solved {
        writeln!(out, "# solved={v}").map_err(&e)?;
    }
    if let Some(v) = file.eta {
        writeln!(out, "# eta={v}").map_err(&e)?;
    }
    let dim = file.states.first().map_or(0, Vec::len);
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(&mut out);
    let mut header = vec!["t".to_string()];
    header.extend((0..dim).map(|i| format!("s{i}")));
    w.write_record(&header)?;
    for (t, s) in file.states.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(s.iter().map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(&e)?;
    drop(w);
    out.flush().map_err(e)
}

pub fn import_states(path: impl AsRef<Path>) -> Result<StatesFile, HarnessError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut file = StatesFile::default();
    let bad = |m: String| HarnessError::Malformed(format!("{}: {m}", path.display()));
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let Some((k, v)) = line.trim_start_matches('#').trim().split_once('=') else {
            continue;
        };
        match k {
            "run_id" => file.run_id = Some(v.to_string()),
            "heuristic" => file.heuristic = Some(v.parse().map_err(bad)?),
            "solved" => {
                file.solved = Some(
                    v.parse()
                        .map_err(|_| bad(format!("bad solved flag `{v}`")))?,
                )
            }
            "eta" => file.eta = Some(v.parse().map_err(|_| bad(format!("bad eta `{v}`")))?),
            _ => {}
        }
    }
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let t: usize = rec
            .get(0)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(format!("row {k}: bad step index")))?;
        if t != k {
            return Err(bad(format!("row {k} has step {t}")));
        }
        let s = rec
            .iter()
            .skip(1)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| bad(format!("row {k}: bad number `{v}`")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        file.states.push(s);
    }
    Ok(file)
}

//! CSV layout of per-run traces and their cross-seed aggregate.

use std::path::Path;

use aclr_core::controller::StepRecord;

use crate::error::{Error, Result};

/// Per-seed trace columns, in file order.
pub const TRACE_COLUMNS: [&str; 7] = [
    "step",
    "train_loss",
    "test_loss",
    "lr",
    "reward",
    "td_error",
    "disagreement",
];

/// Columns averaged in the aggregate file (every trace column but `step`).
pub const METRICS: [&str; 6] = ["train_loss", "test_loss", "lr", "reward", "td_error", "disagreement"];

fn metric_values(r: &StepRecord) -> [Option<f64>; 6] {
    [
        Some(r.f_before),
        r.test_loss,
        Some(r.a),
        Some(r.r),
        r.delta,
        r.disagreement,
    ]
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn create_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    }
    let file = std::fs::File::create(path).map_err(Error::io(path))?;
    Ok(csv::Writer::from_writer(file))
}

/// One row per step: `train_loss` is the batch loss before the update,
/// `test_loss` the test-split loss after it (blank when not evaluated).
pub fn write_trace_csv(path: &Path, trace: &[StepRecord]) -> Result<()> {
    let mut w = create_writer(path)?;
    w.write_record(TRACE_COLUMNS)?;
    for r in trace {
        let mut row = vec![r.t.to_string()];
        row.extend(metric_values(r).into_iter().map(cell));
        w.write_record(&row)?;
    }
    w.flush().map_err(Error::io(path))?;
    Ok(())
}

/// Mean and population standard deviation of the present values.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// One aggregate row: the step, the number of runs contributing and a
/// `(mean, std)` per metric over the runs that have a value.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub step: usize,
    pub runs: usize,
    pub stats: [Option<(f64, f64)>; 6],
}

/// Per-step statistics across `traces`; rows run to the longest trace.
pub fn aggregate(traces: &[&[StepRecord]]) -> Vec<AggregateRow> {
    let len = traces.iter().map(|t| t.len()).max().unwrap_or(0);
    (0..len)
        .map(|k| {
            let rows: Vec<&StepRecord> = traces.iter().filter_map(|t| t.get(k)).collect();
            let stats = std::array::from_fn(|m| {
                let vals: Vec<f64> = rows.iter().filter_map(|r| metric_values(r)[m]).collect();
                mean_std(&vals)
            });
            AggregateRow {
                step: k + 1,
                runs: rows.len(),
                stats,
            }
        })
        .collect()
}

pub fn aggregate_header() -> Vec<String> {
    let mut h = vec!["step".to_string(), "runs".to_string()];
    for m in METRICS {
        h.push(format!("{m}_mean"));
        h.push(format!("{m}_std"));
    }
    h
}

pub fn write_aggregate_csv(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut w = create_writer(path)?;
    w.write_record(aggregate_header())?;
    for r in rows {
        let mut row = vec![r.step.to_string(), r.runs.to_string()];
        for s in r.stats {
            row.push(cell(s.map(|x| x.0)));
            row.push(cell(s.map(|x| x.1)));
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(Error::io(path))?;
    Ok(())
}

/// A CSV file read back as named columns of optional numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(Error::io(path))?;
        let mut r = csv::Reader::from_reader(file);
        let headers = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|c| {
                    if c.is_empty() {
                        Ok(None)
                    } else {
                        c.parse::<f64>()
                            .map(Some)
                            .map_err(|_| Error::Config(format!("non-numeric cell `{c}` in {}", path.display())))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Self { headers, rows })
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::ColumnError(format!("unknown column `{name}`")))
    }

    pub fn column(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let i = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r.get(i).copied().flatten()).collect())
    }
}

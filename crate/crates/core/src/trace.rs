//! Per-iteration run records and their CSV form.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Schema tag written as the first line of every trace CSV.
pub const TRACE_SCHEMA: &str = "# qnes-trace v1";
/// Schema tag of summary CSVs.
pub const SUMMARY_SCHEMA: &str = "# qnes-summary v1";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Cumulative objective evaluations spent by the optimizer.
    pub evaluations: u64,
    /// Objective value at the distribution center (or current iterate).
    pub loss: f64,
    pub spread_max: f64,
    /// Batch updated in this iteration; 0 outside batch mode.
    pub batch_cursor: usize,
}

/// Receives records as an optimizer produces them.
pub trait TraceSink {
    fn record(&mut self, record: &TraceRecord);
}

/// Discards every record.
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _: &TraceRecord) {}
}

impl<F: FnMut(&TraceRecord)> TraceSink for F {
    fn record(&mut self, record: &TraceRecord) {
        self(record)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
}

impl RunTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.last().map(|r| r.loss)
    }

    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss).collect()
    }

    /// Writes the CSV form. `header` lines are emitted as `# ` comments after
    /// the schema tag.
    pub fn write_csv<W: Write>(&self, mut out: W, header: &[String]) -> Result<()> {
        write_comment_header(&mut out, TRACE_SCHEMA, header)?;
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        let records = reader
            .deserialize()
            .collect::<std::result::Result<Vec<TraceRecord>, _>>()?;
        Ok(Self { records })
    }

    pub fn read_csv_file(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}

pub(crate) fn write_comment_header<W: Write>(out: &mut W, schema: &str, header: &[String]) -> Result<()> {
    let io = |e| Error::io("<csv header>", e);
    writeln!(out, "{schema}").map_err(io)?;
    for line in header {
        for part in line.lines() {
            writeln!(out, "# {part}").map_err(io)?;
        }
    }
    Ok(())
}

/// Per-iteration statistics across runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub iteration: usize,
    pub loss_mean: f64,
    pub loss_min: f64,
    pub loss_max: f64,
}

/// Mean, min and max loss per iteration across traces sharing one iteration grid.
pub fn summarize(traces: &[RunTrace]) -> Result<Vec<SummaryRow>> {
    let first = traces
        .first()
        .ok_or_else(|| Error::Alignment("no traces to summarize".into()))?;
    for (i, t) in traces.iter().enumerate().skip(1) {
        if t.records.len() != first.records.len()
            || t.records
                .iter()
                .zip(&first.records)
                .any(|(a, b)| a.iteration != b.iteration)
        {
            return Err(Error::Alignment(format!(
                "trace {i} has a different iteration grid than trace 0"
            )));
        }
    }
    Ok((0..first.records.len())
        .map(|row| {
            let losses = traces.iter().map(|t| t.records[row].loss);
            let (sum, min, max) = losses.fold((0.0, f64::INFINITY, f64::NEG_INFINITY), |(s, lo, hi), v| {
                (s + v, lo.min(v), hi.max(v))
            });
            SummaryRow {
                iteration: first.records[row].iteration,
                loss_mean: sum / traces.len() as f64,
                loss_min: min,
                loss_max: max,
            }
        })
        .collect())
}

/// Extends shorter traces by repeating their final record so runs that
/// stopped early align with the longest one.
pub fn pad_to_common_grid(traces: &[RunTrace]) -> Vec<RunTrace> {
    let len = traces.iter().map(|t| t.records.len()).max().unwrap_or(0);
    traces
        .iter()
        .map(|t| {
            let mut padded = t.clone();
            if let Some(&last) = t.last() {
                for i in t.records.len()..len {
                    padded.push(TraceRecord { iteration: i, ..last });
                }
            }
            padded
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], mut out: W, header: &[String]) -> Result<()> {
    write_comment_header(&mut out, SUMMARY_SCHEMA, header)?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<summary>", e))?;
    Ok(())
}

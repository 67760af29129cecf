//! Benchmark harness: named stopwatch, derived-ratio arithmetic,
//! benchmark records, and the CSV summary format.
//!
//! All durations come from the monotonic clock; calendar time is never
//! used for measurement.

mod runner;

pub use runner::{run_cell, run_plan, CellSpec, RunPlan};

use std::collections::HashMap;
use std::io::{Read, Write};
use std::time::{Duration, Instant};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("timer `{label}` is not running")]
    TimerNotRunning { label: String },
    #[error("timer `{label}` is already running")]
    TimerAlreadyRunning { label: String },
    #[error("no timer named `{label}`")]
    UnknownTimer { label: String },
    #[error("time {value} must be positive and finite")]
    NonPositiveTime { value: f64 },
    #[error("speedup {value} must be positive and finite")]
    NonPositiveSpeedup { value: f64 },
    #[error("efficiency needs at least one core")]
    ZeroCores,
    #[error("csv header mismatch: found `{found}`")]
    CsvHeaderMismatch { found: String },
    #[error("csv row {row}: {message}")]
    CsvField { row: usize, message: String },
    #[error("invalid plan: {message}")]
    InvalidPlan { message: String },
    #[error("cell {cell}: output failed verification against the native sort")]
    VerificationFailed { cell: String },
    #[error("cell {cell}: {message}")]
    CellFailed { cell: String, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Default)]
struct Timer {
    accumulated: Duration,
    started: Option<Instant>,
}

/// A set of named wall-clock timers. Repeated start/stop cycles on one
/// label accumulate; `elapsed` on a running timer includes the time
/// since its last start.
#[derive(Default)]
pub struct StopWatch {
    timers: HashMap<String, Timer>,
}

impl StopWatch {
    pub fn new() -> Self {
        StopWatch::default()
    }

    pub fn start(&mut self, label: &str) -> Result<(), BenchError> {
        let timer = self.timers.entry(label.to_string()).or_default();
        if timer.started.is_some() {
            return Err(BenchError::TimerAlreadyRunning {
                label: label.to_string(),
            });
        }
        timer.started = Some(Instant::now());
        Ok(())
    }

    /// Stops the named timer and returns its accumulated seconds.
    pub fn stop(&mut self, label: &str) -> Result<f64, BenchError> {
        let timer = self
            .timers
            .get_mut(label)
            .ok_or_else(|| BenchError::UnknownTimer {
                label: label.to_string(),
            })?;
        let started = timer.started.take().ok_or_else(|| BenchError::TimerNotRunning {
            label: label.to_string(),
        })?;
        timer.accumulated += started.elapsed();
        Ok(timer.accumulated.as_secs_f64())
    }

    /// Seconds accumulated under `label`, including the currently
    /// running span if the timer is live.
    pub fn elapsed(&self, label: &str) -> Result<f64, BenchError> {
        let timer = self.timers.get(label).ok_or_else(|| BenchError::UnknownTimer {
            label: label.to_string(),
        })?;
        let mut total = timer.accumulated;
        if let Some(started) = timer.started {
            total += started.elapsed();
        }
        Ok(total.as_secs_f64())
    }
}

/// Speedup of a run that took `time` seconds against a reference that
/// took `reference` seconds: `reference / time`.
pub fn speedup(reference: f64, time: f64) -> Result<f64, BenchError> {
    for value in [reference, time] {
        if !(value.is_finite() && value > 0.0) {
            return Err(BenchError::NonPositiveTime { value });
        }
    }
    Ok(reference / time)
}

/// Fraction of ideal linear scaling achieved: `speedup / cores`.
pub fn efficiency(speedup: f64, cores: usize) -> Result<f64, BenchError> {
    if cores == 0 {
        return Err(BenchError::ZeroCores);
    }
    if !(speedup.is_finite() && speedup > 0.0) {
        return Err(BenchError::NonPositiveSpeedup { value: speedup });
    }
    Ok(speedup / cores as f64)
}

/// Algorithm identifiers as they appear in the CSV `sort` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SortId {
    Seq,
    Cutoff,
    Sorted,
    Mp,
    Mpi,
}

impl SortId {
    pub fn as_str(self) -> &'static str {
        match self {
            SortId::Seq => "seq",
            SortId::Cutoff => "cutoff",
            SortId::Sorted => "sorted",
            SortId::Mp => "mp",
            SortId::Mpi => "mpi",
        }
    }

    pub const ALL: [SortId; 5] = [SortId::Seq, SortId::Cutoff, SortId::Sorted, SortId::Mp, SortId::Mpi];
}

impl std::str::FromStr for SortId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "seq" => Ok(SortId::Seq),
            "cutoff" => Ok(SortId::Cutoff),
            "sorted" => Ok(SortId::Sorted),
            "mp" => Ok(SortId::Mp),
            "mpi" => Ok(SortId::Mpi),
            other => Err(format!("unknown sort id `{other}`")),
        }
    }
}

impl std::fmt::Display for SortId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Subsort identifiers for the CSV `subsort` column; `None` renders as
/// `none` (non-mpi rows).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubsortId {
    None,
    Sorted,
    Mp,
}

impl SubsortId {
    pub fn as_str(self) -> &'static str {
        match self {
            SubsortId::None => "none",
            SubsortId::Sorted => "sorted",
            SubsortId::Mp => "mp",
        }
    }
}

impl std::str::FromStr for SubsortId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(SubsortId::None),
            "sorted" => Ok(SubsortId::Sorted),
            "mp" => Ok(SubsortId::Mp),
            other => Err(format!("unknown subsort id `{other}`")),
        }
    }
}

impl std::fmt::Display for SubsortId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One benchmark row: world size `p`, worker/core count `c`, input
/// size, algorithm, measured seconds, and the derived ratios when a
/// reference run exists. `user` and `node` are free-form metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub p: usize,
    pub c: usize,
    pub size: usize,
    pub sort: SortId,
    pub subsort: SubsortId,
    pub time: f64,
    pub speedup: Option<f64>,
    pub efficiency: Option<f64>,
    pub user: String,
    pub node: String,
}

pub const CSV_HEADER: [&str; 10] = [
    "p", "c", "size", "sort", "subsort", "time", "speedup", "efficiency", "user", "node",
];

fn format_ratio(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.3}")).unwrap_or_default()
}

/// Writes records as CSV: the fixed header, then one row per record in
/// input order. Times and ratios carry three decimal places; absent
/// ratios are empty fields. UTF-8, LF line endings.
pub fn emit_csv<W: Write>(records: &[BenchRecord], destination: W) -> Result<(), BenchError> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(destination);
    writer.write_record(CSV_HEADER)?;
    for record in records {
        writer.write_record([
            record.p.to_string(),
            record.c.to_string(),
            record.size.to_string(),
            record.sort.to_string(),
            record.subsort.to_string(),
            format!("{:.3}", record.time),
            format_ratio(record.speedup),
            format_ratio(record.efficiency),
            record.user.clone(),
            record.node.clone(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(
    row: usize,
    name: &str,
    raw: &str,
) -> Result<T, BenchError>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e| BenchError::CsvField {
        row,
        message: format!("bad {name} `{raw}`: {e}"),
    })
}

fn parse_ratio(row: usize, name: &str, raw: &str) -> Result<Option<f64>, BenchError> {
    if raw.is_empty() {
        Ok(None)
    } else {
        parse_field(row, name, raw).map(Some)
    }
}

/// Parses CSV produced by [`emit_csv`], checking the header exactly.
pub fn parse_csv<R: Read>(source: R) -> Result<Vec<BenchRecord>, BenchError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(source);
    {
        let header = reader.headers()?;
        let found: Vec<&str> = header.iter().collect();
        if found != CSV_HEADER {
            return Err(BenchError::CsvHeaderMismatch {
                found: found.join(","),
            });
        }
    }
    let mut records = Vec::new();
    for (index, row) in reader.records().enumerate() {
        let row = row?;
        let row_number = index + 2; // 1-based, after the header line
        if row.len() != CSV_HEADER.len() {
            return Err(BenchError::CsvField {
                row: row_number,
                message: format!("expected {} fields, found {}", CSV_HEADER.len(), row.len()),
            });
        }
        records.push(BenchRecord {
            p: parse_field(row_number, "p", &row[0])?,
            c: parse_field(row_number, "c", &row[1])?,
            size: parse_field(row_number, "size", &row[2])?,
            sort: parse_field(row_number, "sort", &row[3])?,
            subsort: parse_field(row_number, "subsort", &row[4])?,
            time: parse_field(row_number, "time", &row[5])?,
            speedup: parse_ratio(row_number, "speedup", &row[6])?,
            efficiency: parse_ratio(row_number, "efficiency", &row[7])?,
            user: row[8].to_string(),
            node: row[9].to_string(),
        });
    }
    Ok(records)
}

//! Derives plot-data files from a benchmark CSV.
//!
//! Two series shapes come out of the worker-pool (`mp`) rows:
//!
//! - `time_by_workers_size_<size>.dat` — one `workers time` pair per
//!   worker count, for each input size.
//! - `speedup_by_size_workers_<c>.dat` — one `size speedup` pair per
//!   size, for each worker count that carries speedup values.
//!
//! Files are plain whitespace-separated columns with a `#` header line,
//! consumable by gnuplot or any plotting tool. Output is a pure
//! function of the CSV: the same input always produces byte-identical
//! files.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sortbench::bench::{BenchRecord, SortId};

pub struct ReportOutcome {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

pub fn generate_report(records: &[BenchRecord], out_dir: &Path) -> io::Result<ReportOutcome> {
    let mp_rows: Vec<&BenchRecord> = records.iter().filter(|r| r.sort == SortId::Mp).collect();
    let mut files = Vec::new();
    let warnings = consistency_warnings(&mp_rows);

    if mp_rows.is_empty() {
        return Ok(ReportOutcome { files, warnings });
    }
    fs::create_dir_all(out_dir)?;

    let mut by_size: BTreeMap<usize, Vec<&BenchRecord>> = BTreeMap::new();
    let mut by_workers: BTreeMap<usize, Vec<&BenchRecord>> = BTreeMap::new();
    for row in &mp_rows {
        by_size.entry(row.size).or_default().push(row);
        if row.speedup.is_some() {
            by_workers.entry(row.c).or_default().push(row);
        }
    }

    for (size, mut rows) in by_size {
        rows.sort_by_key(|r| r.c);
        let mut text = String::from("# workers time_seconds\n");
        for row in rows {
            text.push_str(&format!("{} {:.3}\n", row.c, row.time));
        }
        let path = out_dir.join(format!("time_by_workers_size_{size}.dat"));
        fs::write(&path, text)?;
        files.push(path);
    }

    for (workers, mut rows) in by_workers {
        rows.sort_by_key(|r| r.size);
        let mut text = String::from("# size speedup\n");
        for row in rows {
            text.push_str(&format!("{} {:.3}\n", row.size, row.speedup.unwrap()));
        }
        let path = out_dir.join(format!("speedup_by_size_workers_{workers}.dat"));
        fs::write(&path, text)?;
        files.push(path);
    }

    Ok(ReportOutcome { files, warnings })
}

/// Recomputes each stored speedup from the time column (reference: the
/// 1-worker row of the same size) and flags disagreements beyond 0.001.
fn consistency_warnings(mp_rows: &[&BenchRecord]) -> Vec<String> {
    let mut warnings = Vec::new();
    let mut reference_by_size: BTreeMap<usize, f64> = BTreeMap::new();
    for row in mp_rows {
        if row.c == 1 {
            reference_by_size.entry(row.size).or_insert(row.time);
        }
    }
    for row in mp_rows {
        let (Some(stored), Some(reference)) = (row.speedup, reference_by_size.get(&row.size))
        else {
            continue;
        };
        // Sub-millisecond rows quantize to 0.000 in the CSV and carry no
        // recomputable signal.
        if row.time <= 0.0 || *reference <= 0.0 {
            continue;
        }
        let recomputed = reference / row.time;
        if (recomputed - stored).abs() > 0.001 {
            warnings.push(format!(
                "size={} c={}: stored speedup {stored:.3} differs from recomputed {recomputed:.3}",
                row.size, row.c
            ));
        }
    }
    warnings
}

#[cfg(test)]
mod tests {
    use super::*;
    use sortbench::bench::SubsortId;

    fn mp_row(c: usize, size: usize, time: f64, speedup: Option<f64>) -> BenchRecord {
        BenchRecord {
            p: 1,
            c,
            size,
            sort: SortId::Mp,
            subsort: SubsortId::None,
            time,
            speedup,
            efficiency: speedup.map(|s| s / c as f64),
            user: "u".into(),
            node: "n".into(),
        }
    }

    #[test]
    fn empty_records_produce_empty_report() {
        let dir = tempfile::tempdir().unwrap();
        let outcome = generate_report(&[], dir.path()).unwrap();
        assert!(outcome.files.is_empty());
        assert!(outcome.warnings.is_empty());
    }

    #[test]
    fn series_cover_each_size_and_worker_count() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![
            mp_row(1, 1000, 2.0, Some(1.0)),
            mp_row(2, 1000, 1.0, Some(2.0)),
            mp_row(1, 5000, 8.0, Some(1.0)),
        ];
        let outcome = generate_report(&records, dir.path()).unwrap();
        assert!(outcome.warnings.is_empty());
        let names: Vec<String> = outcome
            .files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(
            names,
            vec![
                "time_by_workers_size_1000.dat",
                "time_by_workers_size_5000.dat",
                "speedup_by_size_workers_1.dat",
                "speedup_by_size_workers_2.dat",
            ]
        );
        let series = fs::read_to_string(dir.path().join("time_by_workers_size_1000.dat")).unwrap();
        assert_eq!(series, "# workers time_seconds\n1 2.000\n2 1.000\n");
    }

    #[test]
    fn rerunning_is_byte_identical() {
        let records = vec![
            mp_row(1, 1000, 2.0, Some(1.0)),
            mp_row(4, 1000, 0.5, Some(4.0)),
        ];
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let a = generate_report(&records, dir_a.path()).unwrap();
        let b = generate_report(&records, dir_b.path()).unwrap();
        for (file_a, file_b) in a.files.iter().zip(&b.files) {
            assert_eq!(fs::read(file_a).unwrap(), fs::read(file_b).unwrap());
        }
    }

    #[test]
    fn stored_speedup_disagreement_is_flagged() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![
            mp_row(1, 1000, 2.0, Some(1.0)),
            mp_row(2, 1000, 1.0, Some(3.5)), // recomputed would be 2.0
        ];
        let outcome = generate_report(&records, dir.path()).unwrap();
        assert_eq!(outcome.warnings.len(), 1);
        assert!(outcome.warnings[0].contains("3.500"));
    }
}

//! CSV and JSON output.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::bench::BenchmarkReport;
use crate::error::{HarnessError, PathContext, Result};

/// One row of a co-occurrence rank/count series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoocRow {
    pub rank: usize,
    pub left: u32,
    pub right: u32,
    pub count: u64,
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).at(dir)?;
    }
    File::create(path).at(path)
}

/// Writes `rows` as a headed CSV table. Empty input is an error and leaves
/// no file behind.
pub fn emit_plot_data<T: Serialize>(rows: &[T], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if rows.is_empty() {
        return Err(HarnessError::EmptyInput("plot data has no rows"));
    }
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r).at(path)?;
    }
    w.flush().at(path)?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = BufWriter::new(create(path)?);
    serde_json::to_writer_pretty(&mut w, value).at(path)?;
    w.write_all(b"\n").at(path)?;
    w.flush().at(path)?;
    Ok(())
}

/// Writes `bench.json`, `bench_summary.csv`, `bench_runs.csv` and the
/// resolved `config.txt` into `dir`.
pub fn write_benchmark(report: &BenchmarkReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    write_json(report, dir.join("bench.json"))?;
    emit_plot_data(&report.modes, dir.join("bench_summary.csv"))?;
    emit_plot_data(&report.runs, dir.join("bench_runs.csv"))?;
    write_config(&report.config, dir)
}

pub fn write_config(cfg: &crate::ExperimentConfig, dir: impl AsRef<Path>) -> Result<()> {
    let path = dir.as_ref().join("config.txt");
    let mut f = create(&path)?;
    f.write_all(cfg.to_text().as_bytes()).at(&path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        let rows: Vec<CoocRow> = Vec::new();
        assert!(emit_plot_data(&rows, &path).is_err());
        assert!(!path.exists());
    }

    #[test]
    fn writes_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/c.csv");
        let rows = vec![
            CoocRow {
                rank: 1,
                left: 3,
                right: 4,
                count: 9,
            },
            CoocRow {
                rank: 2,
                left: 0,
                right: 1,
                count: 2,
            },
        ];
        emit_plot_data(&rows, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "rank,left,right,count\n1,3,4,9\n2,0,1,2\n");
    }
}

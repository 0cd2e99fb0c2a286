//! Writes a run report to disk: one CSV per trajectory or table and a
//! `report.json` carrying the configuration echo, results and manifest.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use plapwave_core::EnergyRecord;
use serde::Serialize;

use crate::error::CliError;
use crate::experiments::{RunReport, Table};

pub const ENERGY_COLUMNS: [&str; 8] = [
    "t",
    "kinetic",
    "potential",
    "script_E",
    "E",
    "dissipation_cum",
    "work_cum",
    "balance_residual",
];

pub const REPORT_FILE: &str = "report.json";

/// Files written by [`emit_report`], relative to the output directory, in write order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Manifest {
    pub files: Vec<String>,
}

/// Wall-clock data, kept apart so the rest of the report is reproducible.
#[derive(Debug, Clone, Serialize)]
pub struct Timestamps {
    pub emitted_unix_seconds: u64,
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    schema: &'static str,
    #[serde(flatten)]
    report: &'a RunReport,
    manifest: &'a Manifest,
    timestamps: Timestamps,
}

fn file_stem(slug: &str, run: &str) -> String {
    if run.is_empty() {
        slug.to_string()
    } else {
        format!("{slug}_{run}")
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_error(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn write_energy_csv(path: &Path, records: &[EnergyRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    w.write_record(ENERGY_COLUMNS).map_err(csv_error(path))?;
    for r in records {
        let row = [
            r.t,
            r.kinetic,
            r.potential,
            r.script_e,
            r.e,
            r.dissipation_cum,
            r.work_cum,
            r.balance_residual,
        ];
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(csv_error(path))?;
    }
    w.flush().map_err(io_error(path))
}

fn write_table_csv(path: &Path, table: &Table) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    w.write_record(&table.columns).map_err(csv_error(path))?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(csv_error(path))?;
    }
    w.flush().map_err(io_error(path))
}

/// Writes every artifact of `report` into `dir`, creating it if needed.
///
/// Trajectories go to `<experiment>_<run>.csv` (just `single.csv` for
/// SINGLE), tables to `<experiment>_<table>.csv`, and the report itself to
/// `report.json`. Names depend only on the configuration.
pub fn emit_report(report: &RunReport, dir: &Path) -> Result<Manifest, CliError> {
    std::fs::create_dir_all(dir).map_err(io_error(dir))?;
    let mut files = Vec::new();
    let mut target = |name: String| -> PathBuf {
        files.push(name.clone());
        dir.join(name)
    };
    for exp in &report.experiments {
        let slug = exp.experiment.slug();
        for run in &exp.runs {
            let path = target(format!("{}.csv", file_stem(slug, &run.name)));
            write_energy_csv(&path, &run.records)?;
        }
        for table in &exp.tables {
            let path = target(format!("{}.csv", file_stem(slug, &table.name)));
            write_table_csv(&path, table)?;
        }
    }
    files.push(REPORT_FILE.to_string());
    let manifest = Manifest { files };
    let doc = ReportDocument {
        schema: "plapwave-report",
        report,
        manifest: &manifest,
        timestamps: Timestamps {
            emitted_unix_seconds: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        },
    };
    let path = dir.join(REPORT_FILE);
    let text = serde_json::to_string_pretty(&doc)?;
    std::fs::write(&path, text + "\n").map_err(io_error(&path))?;
    Ok(manifest)
}

//! Report emission.
//!
//! CSV columns (stable): `sites,direct,pressure_origin,variational,gap,oracle`
//! with an empty `oracle` cell when no sector oracle was selected.
//! Plot data columns: `sites,direct,variational,lower_bound`, where
//! `lower_bound` is the best certified block bound (empty if none).
//! JSON is the full [`ConvergenceReport`] carrying `schema_version`.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::OutputSpec;
use super::study::ConvergenceReport;
use crate::error::Result;

/// Destinations for [`emit_report`]; `None` skips that output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportPaths {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub plotdata: Option<PathBuf>,
}

impl ReportPaths {
    /// Resolves an output section against an optional directory override.
    ///
    /// With a directory, unnamed outputs default to `<stem>.csv`,
    /// `<stem>.json` and `<stem>.plot.csv`. Without one, only named outputs
    /// are written, relative to the working directory.
    pub fn resolve(out: &OutputSpec, dir_override: Option<&Path>, stem: &str) -> Self {
        let stem = if stem.is_empty() { "report" } else { stem };
        let dir = dir_override
            .map(Path::to_path_buf)
            .or_else(|| out.dir.clone());
        let pick = |name: &Option<String>, suffix: &str| match (&dir, name) {
            (Some(d), Some(n)) => Some(d.join(n)),
            (Some(d), None) => Some(d.join(format!("{stem}{suffix}"))),
            (None, Some(n)) => Some(PathBuf::from(n)),
            (None, None) => None,
        };
        ReportPaths {
            csv: pick(&out.csv, ".csv"),
            json: pick(&out.json, ".json"),
            plotdata: pick(&out.plotdata, ".plot.csv"),
        }
    }
}

#[derive(Serialize)]
struct PlotRow {
    sites: usize,
    direct: f64,
    variational: f64,
    lower_bound: Option<f64>,
}

fn create(path: &Path) -> Result<File> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    Ok(File::create(path)?)
}

pub fn write_csv<W: Write>(report: &ConvergenceReport, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for row in &report.rows {
        wr.serialize(row)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_plotdata<W: Write>(report: &ConvergenceReport, w: W) -> Result<()> {
    let lower_bound = report.best_certified_bound();
    let mut wr = csv::Writer::from_writer(w);
    for row in &report.rows {
        wr.serialize(PlotRow {
            sites: row.sites,
            direct: row.direct,
            variational: row.variational,
            lower_bound,
        })?;
    }
    wr.flush()?;
    Ok(())
}

pub fn emit_report(report: &ConvergenceReport, paths: &ReportPaths) -> Result<()> {
    if let Some(p) = &paths.csv {
        write_csv(report, create(p)?)?;
    }
    if let Some(p) = &paths.json {
        let mut f = create(p)?;
        serde_json::to_writer_pretty(&mut f, report)?;
        writeln!(f)?;
    }
    if let Some(p) = &paths.plotdata {
        write_plotdata(report, create(p)?)?;
    }
    Ok(())
}

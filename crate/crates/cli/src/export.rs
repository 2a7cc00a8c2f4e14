//! Report files: the branch table, the full JSON report and per-branch profiles.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::sweep::{Profile, ProfileSource, SweepOutcome, SweepReport, SCHEMA_VERSION};

pub const CSV_HEADER: [&str; 8] = [
    "lambda",
    "k",
    "sup_norm",
    "energy",
    "boundary_residual",
    "sup_gt_b",
    "integral_positive",
    "ordering_ok",
];

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("report schema version {found} is not supported (expected {SCHEMA_VERSION})")]
    Schema { found: u32 },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> ExportError + '_ {
    move |source| ExportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One row per `(λ, window)` from the energy path. `boundary_residual` is `|u(R)|` of
/// the matched shooting root and is left empty when the window has none.
pub fn write_branch_csv<W: Write>(report: &SweepReport, out: W) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for p in &report.points {
        for e in &p.energy {
            let residual = e
                .matched
                .map(|i| p.radial[i].boundary_value.abs().to_string())
                .unwrap_or_default();
            w.write_record([
                p.lambda.to_string(),
                e.k.to_string(),
                e.sup_norm.to_string(),
                e.energy.to_string(),
                residual,
                e.claims.sup_gt_b.to_string(),
                e.claims.integral_positive.to_string(),
                p.ordering_ok.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| ExportError::Csv(e.into()))?;
    Ok(())
}

pub fn write_json<W: Write>(report: &SweepReport, out: W) -> Result<(), ExportError> {
    serde_json::to_writer_pretty(out, report)?;
    Ok(())
}

pub fn read_json(path: impl AsRef<Path>) -> Result<SweepReport, ExportError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io(path))?;
    let report: SweepReport = serde_json::from_str(&text)?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(ExportError::Schema {
            found: report.schema_version,
        });
    }
    Ok(report)
}

pub fn write_profile<W: Write>(profile: &Profile, out: W) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "u"])?;
    for (r, u) in profile.r.iter().zip(&profile.u) {
        w.write_record([r.to_string(), u.to_string()])?;
    }
    w.flush().map_err(|e| ExportError::Csv(e.into()))?;
    Ok(())
}

pub fn profile_file_name(profile: &Profile) -> String {
    let source = match profile.source {
        ProfileSource::Energy => "energy".to_string(),
        ProfileSource::Radial(i) => format!("radial{i}"),
    };
    format!("lambda_{}_k{}_{source}.csv", profile.lambda, profile.k)
}

pub const BRANCH_CSV: &str = "branches.csv";
pub const REPORT_JSON: &str = "report.json";
pub const PROFILE_DIR: &str = "profiles";

/// Writes `branches.csv`, `report.json` and `profiles/*.csv` under `dir`.
pub fn export_all(outcome: &SweepOutcome, dir: impl AsRef<Path>) -> Result<(), ExportError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io(dir))?;
    let create = |p: PathBuf| fs::File::create(&p).map_err(io(&p));
    write_branch_csv(&outcome.report, create(dir.join(BRANCH_CSV))?)?;
    let json = dir.join(REPORT_JSON);
    let mut f = std::io::BufWriter::new(create(json.clone())?);
    write_json(&outcome.report, &mut f)?;
    f.flush().map_err(io(&json))?;
    if !outcome.profiles.is_empty() {
        let pdir = dir.join(PROFILE_DIR);
        fs::create_dir_all(&pdir).map_err(io(&pdir))?;
        for p in &outcome.profiles {
            let file = std::io::BufWriter::new(create(pdir.join(profile_file_name(p)))?);
            write_profile(p, file)?;
        }
    }
    Ok(())
}

/// Reads an `r,u` profile file.
pub fn read_profile(path: impl AsRef<Path>) -> Result<(Vec<f64>, Vec<f64>), ExportError> {
    let path = path.as_ref();
    let mut rd = csv::Reader::from_path(path)?;
    let mut r = Vec::new();
    let mut u = Vec::new();
    for rec in rd.deserialize() {
        let (ri, ui): (f64, f64) = rec?;
        r.push(ri);
        u.push(ui);
    }
    Ok((r, u))
}

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::runner::{CellResult, ExperimentResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

pub const CSV_HEADER: [&str; 20] = [
    "scenario",
    "label",
    "n",
    "p",
    "k",
    "r",
    "noise",
    "dist",
    "spike_index",
    "reps",
    "failures",
    "mean",
    "variance",
    "ratio",
    "ks",
    "q99",
    "coverage",
    "analytic",
    "reference",
    "seed",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_row(scenario: &str, c: &CellResult) -> Vec<String> {
    vec![
        scenario.to_string(),
        c.label.clone(),
        c.n.to_string(),
        c.p.to_string(),
        c.k.to_string(),
        opt(c.r),
        c.noise.map(|t| format!("{t:?}").to_lowercase()).unwrap_or_default(),
        c.dist.clone(),
        c.spike_index.to_string(),
        c.reps.to_string(),
        c.failures.to_string(),
        opt(c.mean),
        opt(c.variance),
        opt(c.ratio),
        opt(c.ks),
        opt(c.q99),
        opt(c.coverage),
        opt(c.analytic),
        opt(c.reference),
        c.seed.to_string(),
    ]
}

/// One CSV row per cell, always starting with the header.
pub fn write_csv<W: Write>(result: &ExperimentResult, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for cell in &result.cells {
        writer.write_record(csv_row(result.scenario.name(), cell))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(result: &ExperimentResult, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, result)?;
    Ok(())
}

pub fn to_json_string(result: &ExperimentResult) -> Result<String> {
    Ok(serde_json::to_string_pretty(result)?)
}

pub fn from_json_str(text: &str) -> Result<ExperimentResult> {
    Ok(serde_json::from_str(text)?)
}

pub fn emit(result: &ExperimentResult, format: Format, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let file = std::io::BufWriter::new(fs::File::create(path)?);
    match format {
        Format::Json => write_json(result, file),
        Format::Csv => write_csv(result, file),
    }
}

/// Writes `<stem>.json` and `<stem>.csv` into `dir`; returns both paths.
pub fn emit_all(result: &ExperimentResult, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    let json = dir.join(format!("{stem}.json"));
    let csv = dir.join(format!("{stem}.csv"));
    emit(result, Format::Json, &json)?;
    emit(result, Format::Csv, &csv)?;
    Ok((json, csv))
}

//! File formats: long replicate CSVs in, density tables and study outputs out.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::density::DensityEstimate;
use crate::error::{invalid, Error, Result};
use crate::model::ReplicateDataset;
use crate::study::StudyResult;

/// Parsed long-format input: one row per measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct LongInput {
    pub data: ReplicateDataset,
    /// Per-subject error variances, when a `sigma` column was present.
    pub sigma_sq: Option<Vec<f64>>,
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name))
}

fn required(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    column(headers, name).ok_or_else(|| Error::Parse {
        line: 1,
        message: format!("missing column '{name}'"),
    })
}

fn number(record: &csv::StringRecord, idx: usize, name: &str) -> Result<f64> {
    let raw = record.get(idx).unwrap_or("").trim();
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            line: line_of(record),
            message: format!("column '{name}': cannot read '{raw}' as a number"),
        })
}

/// Groups values by id in order of first appearance.
#[derive(Default)]
struct Grouper {
    order: Vec<String>,
    index: HashMap<String, usize>,
    rows: Vec<Vec<f64>>,
    sigma: Vec<Option<f64>>,
}

impl Grouper {
    fn push(&mut self, id: &str, value: f64, sigma: Option<f64>) -> usize {
        let k = *self.index.entry(id.to_string()).or_insert_with(|| {
            self.order.push(id.to_string());
            self.rows.push(Vec::new());
            self.sigma.push(None);
            self.order.len() - 1
        });
        self.rows[k].push(value);
        if self.sigma[k].is_none() {
            self.sigma[k] = sigma;
        }
        k
    }

    fn finish(self, with_sigma: bool) -> Result<LongInput> {
        if self.rows.is_empty() {
            return Err(invalid("input has no data rows"));
        }
        let sigma_sq = if with_sigma {
            let mut out = Vec::with_capacity(self.sigma.len());
            for (id, s) in self.order.iter().zip(&self.sigma) {
                let s = s.ok_or_else(|| Error::InvalidRow {
                    id: id.clone(),
                    message: "no sigma value".into(),
                })?;
                out.push(s * s);
            }
            Some(out)
        } else {
            None
        };
        Ok(LongInput {
            data: ReplicateDataset::new(self.order, self.rows)?,
            sigma_sq,
        })
    }
}

/// Reads `id,rep,value[,sigma]`. `sigma` is an error SD; blank cells are allowed
/// as long as each id has at least one value.
pub fn read_long_csv<R: Read>(reader: R) -> Result<LongInput> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let id_col = required(&headers, "id")?;
    required(&headers, "rep")?;
    let value_col = required(&headers, "value")?;
    let sigma_col = column(&headers, "sigma");
    let mut groups = Grouper::default();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let id = record.get(id_col).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(Error::Parse {
                line: line_of(&record),
                message: "empty id".into(),
            });
        }
        let value = number(&record, value_col, "value")?;
        let sigma = match sigma_col {
            Some(c) if !record.get(c).unwrap_or("").is_empty() => {
                let s = number(&record, c, "sigma")?;
                if s < 0.0 {
                    return Err(Error::Parse {
                        line: line_of(&record),
                        message: format!("negative sigma {s}"),
                    });
                }
                Some(s)
            }
            _ => None,
        };
        groups.push(&id, value, sigma);
    }
    groups.finish(sigma_col.is_some())
}

pub fn read_long_csv_path(path: &Path) -> Result<LongInput> {
    read_long_csv(File::open(path)?)
}

/// Reads `id,exam,M` and transforms to `W = log(M - 50)`.
pub fn read_log50_csv<R: Read>(reader: R) -> Result<LongInput> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let id_col = required(&headers, "id")?;
    required(&headers, "exam")?;
    let m_col = required(&headers, "M")?;
    let mut groups = Grouper::default();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let id = record.get(id_col).unwrap_or("").to_string();
        let m = number(&record, m_col, "M")?;
        if m <= 50.0 {
            return Err(Error::InvalidRow {
                id,
                message: format!("M = {m} must exceed 50"),
            });
        }
        groups.push(&id, log50(m), None);
    }
    groups.finish(false)
}

pub fn read_log50_csv_path(path: &Path) -> Result<LongInput> {
    read_log50_csv(File::open(path)?)
}

/// `log(M - 50)`.
pub fn log50(m: f64) -> f64 {
    (m - 50.0).ln()
}

/// Writes `x,f`.
pub fn write_density_csv<W: Write>(writer: W, est: &DensityEstimate) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "f"])?;
    for (x, f) in est.xs.iter().zip(&est.fs) {
        w.write_record([x.to_string(), f.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `x` and one column per estimate, named by method. All estimates
/// must share the grid.
pub fn write_density_table<W: Write>(writer: W, estimates: &[&DensityEstimate]) -> Result<()> {
    let first = estimates.first().ok_or_else(|| invalid("no estimates to write"))?;
    if estimates.iter().any(|e| e.xs != first.xs) {
        return Err(invalid("estimates do not share an x grid"));
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["x".to_string()];
    header.extend(estimates.iter().map(|e| e.method.label().to_string()));
    w.write_record(&header)?;
    for (k, x) in first.xs.iter().enumerate() {
        let mut row = vec![x.to_string()];
        row.extend(estimates.iter().map(|e| e.fs[k].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a table written by [`write_density_table`] or [`write_density_csv`]:
/// the header names and the numeric columns.
pub fn read_density_table<R: Read>(reader: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut cols = vec![Vec::new(); headers.len()];
    for record in rdr.records() {
        let record = record?;
        for (k, name) in headers.iter().enumerate() {
            cols[k].push(number(&record, k, name)?);
        }
    }
    Ok((headers, cols))
}

pub fn write_json<W: Write, T: Serialize>(writer: W, value: &T) -> Result<()> {
    let mut writer = writer;
    serde_json::to_writer_pretty(&mut writer, value)?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// `replicates.csv` and `summary.json` under `dir`.
pub fn write_study(dir: &Path, result: &StudyResult) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("replicates.csv"))?;
    for r in &result.records {
        w.serialize(r)?;
    }
    w.flush()?;
    write_json(File::create(dir.join("summary.json"))?, &result.summary)
}

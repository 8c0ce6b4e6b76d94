//! Interchange formats.
//!
//! Datasets are NDJSON: line 1 is the [`DatasetManifest`] object, each
//! following line one [`QueryRecord`]. Keys are written in a fixed order and
//! floats in shortest round-trip form, so identical inputs give identical
//! bytes. Grids are flat row-major arrays (token outer, layer inner) next to
//! explicit `k` and `L`.
//!
//! Routing input is CSV with columns `query_id, confidence, correct_direct,
//! correct_fallback, cost_direct, cost_fallback`; booleans may be written as
//! `true`/`false` or `1`/`0`.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::metrics::EvalResult;
use crate::model::{validate_record, DatasetManifest, QueryRecord};
use crate::routing::{RoutingRecord, SweepPoint};

/// Serializes a dataset, refusing it if any record is invalid. The manifest's
/// `record_count` is set from `records`.
pub fn encode_dataset(manifest: &DatasetManifest, records: &[QueryRecord]) -> Result<Vec<u8>> {
    let manifest = DatasetManifest {
        record_count: records.len(),
        ..manifest.clone()
    };
    for (i, rec) in records.iter().enumerate() {
        let violations = validate_record(rec, &manifest);
        if !violations.is_empty() {
            return Err(Error::Validation {
                line: i + 2,
                violations,
            });
        }
    }
    let mut out = serde_json::to_vec(&manifest).map_err(|e| Error::domain(e.to_string()))?;
    out.push(b'\n');
    for rec in records {
        serde_json::to_writer(&mut out, rec).map_err(|e| Error::domain(e.to_string()))?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn write_dataset_to<W: Write>(manifest: &DatasetManifest, records: &[QueryRecord], mut out: W) -> Result<()> {
    let bytes = encode_dataset(manifest, records)?;
    out.write_all(&bytes).map_err(|e| Error::io("<output>", e))
}

/// Writes the dataset to `path`. Nothing is written if validation fails.
pub fn write_dataset(manifest: &DatasetManifest, records: &[QueryRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_dataset(manifest, records)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_dataset_from<R: BufRead>(input: R) -> Result<(DatasetManifest, Vec<QueryRecord>)> {
    let mut lines = input.lines();
    let first = match lines.next() {
        Some(line) => line.map_err(|e| Error::io("<input>", e))?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "missing manifest line".into(),
            })
        }
    };
    let manifest: DatasetManifest = serde_json::from_str(&first).map_err(|e| Error::Parse {
        line: 1,
        message: format!("invalid manifest: {e}"),
    })?;

    let mut records = Vec::with_capacity(manifest.record_count);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(|e| Error::io("<input>", e))?;
        let rec: QueryRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: format!("invalid record: {e}"),
        })?;
        let violations = validate_record(&rec, &manifest);
        if !violations.is_empty() {
            return Err(Error::Validation {
                line: line_no,
                violations,
            });
        }
        records.push(rec);
    }
    if records.len() != manifest.record_count {
        return Err(Error::CountMismatch {
            declared: manifest.record_count,
            actual: records.len(),
        });
    }
    Ok((manifest, records))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<(DatasetManifest, Vec<QueryRecord>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset_from(BufReader::new(file))
}

fn flexible_bool<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    let raw = String::deserialize(d)?;
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(serde::de::Error::custom(format!("expected boolean, got {other:?}"))),
    }
}

#[derive(Deserialize)]
struct RoutingRow {
    query_id: String,
    confidence: f64,
    #[serde(deserialize_with = "flexible_bool")]
    correct_direct: bool,
    #[serde(deserialize_with = "flexible_bool")]
    correct_fallback: bool,
    cost_direct: f64,
    cost_fallback: f64,
}

pub fn read_routing_csv<R: Read>(input: R) -> Result<Vec<RoutingRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<RoutingRow>().enumerate() {
        let row = row.map_err(|e| Error::Parse {
            line: i + 2,
            message: e.to_string(),
        })?;
        out.push(RoutingRecord {
            query_id: row.query_id,
            confidence: row.confidence,
            correct_direct: row.correct_direct,
            correct_fallback: row.correct_fallback,
            cost_direct: row.cost_direct,
            cost_fallback: row.cost_fallback,
        });
    }
    Ok(out)
}

pub fn read_routing_file(path: impl AsRef<Path>) -> Result<Vec<RoutingRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_routing_csv(file)
}

pub fn write_routing_csv<W: Write>(records: &[RoutingRecord], out: W) -> Result<()> {
    write_rows(records, out)
}

/// `threshold, accuracy, fallback_rate, expected_cost`; infinite thresholds
/// are written as `-inf` / `inf`.
pub fn write_curve_csv<W: Write>(points: &[SweepPoint], out: W) -> Result<()> {
    write_rows(points, out)
}

/// `method, auroc, prr, ece, n_pos, n_neg`; `ece` is empty where it does not apply.
pub fn write_eval_csv<W: Write>(results: &[EvalResult], out: W) -> Result<()> {
    write_rows(results, out)
}

fn write_rows<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(|e| Error::io("<output>", e))
}

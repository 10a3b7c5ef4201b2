//! CSV ingestion.
//!
//! Comma separated, one header row, decimal point, optional quoting. Every
//! column other than the configured label column is a feature column. Rows
//! with a missing or non-finite value anywhere are dropped and counted;
//! any other unparseable cell is a hard error.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::labels::LabelSpec;
use super::table::FeatureTable;
use crate::error::{Error, Result};

const CHUNK_ROWS: usize = 16_384;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    /// When set, the column must exist and is turned into the binary label.
    pub label: Option<LabelSpec>,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub table: FeatureTable,
    pub rejected_rows: usize,
}

pub fn ingest_csv(path: &Path, config: &IngestConfig) -> Result<Ingested> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    ingest_reader(file, config)
}

enum Cell {
    Value(f64),
    Missing,
}

fn parse_cell(raw: &[u8]) -> Option<Cell> {
    let text = std::str::from_utf8(raw).ok()?.trim();
    if text.is_empty() {
        return Some(Cell::Missing);
    }
    let value: f64 = text.parse().ok()?;
    Some(if value.is_finite() {
        Cell::Value(value)
    } else {
        Cell::Missing
    })
}

struct ParsedChunk {
    columns: Vec<Vec<f64>>,
    labels: Vec<bool>,
    rejected: usize,
}

pub fn ingest_reader<R: Read>(reader: R, config: &IngestConfig) -> Result<Ingested> {
    if let Some(spec) = &config.label {
        spec.validate()?;
    }
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = csv.headers()?.iter().map(str::to_owned).collect();
    {
        let mut seen = std::collections::HashSet::new();
        for name in &header {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
    }
    let label_at = match &config.label {
        Some(spec) => Some(
            header
                .iter()
                .position(|h| *h == spec.column)
                .ok_or_else(|| Error::MissingLabelColumn(spec.column.clone()))?,
        ),
        None => None,
    };
    let feature_at: Vec<usize> = (0..header.len()).filter(|&i| Some(i) != label_at).collect();
    let names: Vec<String> = feature_at.iter().map(|&i| header[i].clone()).collect();

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut labels = Vec::new();
    let mut rejected = 0;
    let mut chunk: Vec<csv::ByteRecord> = Vec::with_capacity(CHUNK_ROWS);
    let mut first_line = 1u64;
    let mut records = csv.into_byte_records();
    loop {
        chunk.clear();
        for rec in records.by_ref().take(CHUNK_ROWS) {
            chunk.push(rec?);
        }
        if chunk.is_empty() {
            break;
        }
        let parsed = parse_chunk(&chunk, first_line, &names, &feature_at, label_at, config.label.as_ref())?;
        first_line += chunk.len() as u64;
        for (dst, src) in columns.iter_mut().zip(parsed.columns) {
            dst.extend(src);
        }
        labels.extend(parsed.labels);
        rejected += parsed.rejected;
    }
    if rejected > 0 {
        log::warn!("ingestion dropped {rejected} row(s) with missing or non-finite values");
    }
    let label = config.label.as_ref().map(|_| labels);
    let table = FeatureTable::new(names, columns, label)?;
    Ok(Ingested {
        table,
        rejected_rows: rejected,
    })
}

fn parse_chunk(
    chunk: &[csv::ByteRecord],
    first_line: u64,
    names: &[String],
    feature_at: &[usize],
    label_at: Option<usize>,
    label_spec: Option<&LabelSpec>,
) -> Result<ParsedChunk> {
    // Rows parse independently; the ordered collect keeps output identical
    // to a sequential pass.
    let rows: Vec<Option<(Vec<f64>, bool)>> = chunk
        .par_iter()
        .enumerate()
        .map(|(offset, record)| {
            let line = first_line + offset as u64;
            let mut values = Vec::with_capacity(feature_at.len());
            let mut complete = true;
            for (k, &field_at) in feature_at.iter().enumerate() {
                let raw = record.get(field_at).unwrap_or(b"");
                match parse_cell(raw) {
                    Some(Cell::Value(v)) => values.push(v),
                    Some(Cell::Missing) => complete = false,
                    None => {
                        return Err(Error::NonNumeric {
                            column: names[k].clone(),
                            line,
                            value: String::from_utf8_lossy(raw).into_owned(),
                        })
                    }
                }
            }
            let label = match (label_at, label_spec) {
                (Some(at), Some(spec)) => {
                    let raw = record.get(at).unwrap_or(b"");
                    let invalid = || Error::InvalidLabel {
                        line,
                        value: String::from_utf8_lossy(raw).into_owned(),
                    };
                    match parse_cell(raw) {
                        Some(Cell::Value(v)) => spec.classify(v).ok_or_else(invalid)?,
                        Some(Cell::Missing) => {
                            complete = false;
                            false
                        }
                        None => return Err(invalid()),
                    }
                }
                _ => false,
            };
            Ok(complete.then_some((values, label)))
        })
        .collect::<Result<_>>()?;

    let mut parsed = ParsedChunk {
        columns: vec![Vec::with_capacity(chunk.len()); feature_at.len()],
        labels: Vec::with_capacity(chunk.len()),
        rejected: 0,
    };
    for row in rows {
        match row {
            Some((values, label)) => {
                for (col, v) in parsed.columns.iter_mut().zip(values) {
                    col.push(v);
                }
                parsed.labels.push(label);
            }
            None => parsed.rejected += 1,
        }
    }
    Ok(parsed)
}

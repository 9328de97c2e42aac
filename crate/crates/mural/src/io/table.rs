//! CSV ingestion and serialization for schema-typed datasets.

use std::io::{Read, Write};

use mural_core::data::{Column, ColumnKind, ColumnSpec, Dataset, Schema, Values};

use crate::error::{MuralError, Result};

fn is_missing(cell: &str, spec: &ColumnSpec) -> bool {
    cell.is_empty() || cell == spec.missing_token
}

fn parse_code(cell: &str, spec: &ColumnSpec, count: u32, row: usize) -> Result<u32> {
    let bad = || MuralError::Cell {
        row,
        column: spec.name.clone(),
        text: cell.to_string(),
        expected: match spec.kind {
            ColumnKind::Binary => "binary (0 or 1)".into(),
            _ => format!("an integer code in 0..{count}"),
        },
    };
    let v: u32 = cell.trim().parse().map_err(|_| bad())?;
    if v >= count {
        return Err(bad());
    }
    Ok(v)
}

/// Reads a CSV with a header row. Header names may be any permutation of the
/// schema's names. Empty cells and cells equal to the column's missing token
/// are masked. Rows are numbered from 1 after the header in error messages.
pub fn load_csv<R: Read>(schema: &Schema, source: R) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(source);
    let header = reader.headers()?.clone();
    let width = schema.len();
    if header.len() != width {
        return Err(MuralError::Header(format!("{} columns in file, {width} in schema", header.len())));
    }
    // position in file -> schema column
    let mut order = vec![usize::MAX; width];
    for (pos, name) in header.iter().enumerate() {
        let col = schema.index_of(name.trim()).ok_or_else(|| MuralError::Header(format!("column `{name}` is not in the schema")))?;
        if order.contains(&col) {
            return Err(MuralError::Header(format!("column `{name}` appears twice")));
        }
        order[pos] = col;
    }
    let mut cont: Vec<Vec<Option<f64>>> = vec![Vec::new(); width];
    let mut disc: Vec<Vec<Option<u32>>> = vec![Vec::new(); width];
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        if record.len() != width {
            return Err(MuralError::Ragged { row, got: record.len(), expected: width });
        }
        for (pos, cell) in record.iter().enumerate() {
            let col = order[pos];
            let spec = &schema.columns()[col];
            let missing = is_missing(cell, spec);
            match spec.kind.code_count() {
                None => {
                    let v = if missing {
                        None
                    } else {
                        let v: f64 = cell.trim().parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| MuralError::Cell {
                            row,
                            column: spec.name.clone(),
                            text: cell.to_string(),
                            expected: "a finite number".into(),
                        })?;
                        Some(v)
                    };
                    cont[col].push(v);
                }
                Some(count) => {
                    let v = if missing { None } else { Some(parse_code(cell, spec, count, row)?) };
                    disc[col].push(v);
                }
            }
        }
    }
    let columns = (0..width)
        .map(|c| match schema.kind(c) {
            ColumnKind::Continuous => Column::continuous(std::mem::take(&mut cont[c])),
            _ => Column::discrete(std::mem::take(&mut disc[c])),
        })
        .collect();
    Ok(Dataset::new(schema.clone(), columns)?)
}

/// Writes a dataset in schema order. Masked cells are written as the
/// column's missing token; continuous values use the shortest representation
/// that parses back to the same bits.
pub fn write_csv<W: Write>(d: &Dataset, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(d.schema().columns().iter().map(|c| c.name.as_str()))?;
    let mut record: Vec<String> = Vec::with_capacity(d.n_cols());
    for r in 0..d.n_rows() {
        record.clear();
        for (c, spec) in d.schema().columns().iter().enumerate() {
            let col = d.column(c);
            record.push(if col.is_masked(r) {
                spec.missing_token.clone()
            } else {
                match col.values() {
                    Values::Continuous(v) => format!("{:?}", v[r]),
                    Values::Discrete(v) => v[r].to_string(),
                }
            });
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

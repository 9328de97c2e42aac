//! Dense matrix export.
//!
//! CSV: a header `,0,1,...,n-1`, then one line per row led by its index.
//!
//! Binary (little-endian):
//!
//! | offset | size  | content                     |
//! |--------|-------|-----------------------------|
//! | 0      | 4     | magic `MRLM`                |
//! | 4      | 4     | version (`u32`, currently 1)|
//! | 8      | 8     | n (`u64`)                   |
//! | 16     | 8·n²  | row-major `f64` values      |

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{MuralError, Result};

pub const MATRIX_MAGIC: &[u8; 4] = b"MRLM";
pub const MATRIX_VERSION: u32 = 1;

pub fn write_matrix_csv<W: Write>(n: usize, data: &[f64], mut sink: W) -> Result<()> {
    let mut line = String::new();
    for j in 0..n {
        line.push(',');
        line.push_str(&j.to_string());
    }
    writeln!(sink, "{line}")?;
    for i in 0..n {
        line.clear();
        line.push_str(&i.to_string());
        for v in &data[i * n..(i + 1) * n] {
            line.push(',');
            line.push_str(&format!("{v:?}"));
        }
        writeln!(sink, "{line}")?;
    }
    sink.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(source: R) -> Result<(usize, Vec<f64>)> {
    let mut lines = BufReader::new(source).lines();
    let header = lines.next().ok_or_else(|| MuralError::MatrixFile("empty file".into()))??;
    let n = header.split(',').count() - 1;
    let mut data = Vec::with_capacity(n * n);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        fields.next();
        let before = data.len();
        for f in fields {
            data.push(f.parse::<f64>().map_err(|_| MuralError::MatrixFile(format!("row {i}: bad value `{f}`")))?);
        }
        if data.len() - before != n {
            return Err(MuralError::MatrixFile(format!("row {i} has {} values, expected {n}", data.len() - before)));
        }
    }
    if data.len() != n * n {
        return Err(MuralError::MatrixFile(format!("{} rows for n = {n}", data.len() / n.max(1))));
    }
    Ok((n, data))
}

pub fn write_matrix_bin<W: Write>(n: usize, data: &[f64], mut sink: W) -> Result<()> {
    sink.write_all(MATRIX_MAGIC)?;
    sink.write_all(&MATRIX_VERSION.to_le_bytes())?;
    sink.write_all(&(n as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * n);
    for row in data.chunks(n.max(1)) {
        buf.clear();
        for v in row {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        sink.write_all(&buf)?;
    }
    sink.flush()?;
    Ok(())
}

pub fn read_matrix_bin<R: Read>(mut source: R) -> Result<(usize, Vec<f64>)> {
    let mut header = [0u8; 16];
    source.read_exact(&mut header).map_err(|_| MuralError::MatrixFile("truncated header".into()))?;
    if &header[..4] != MATRIX_MAGIC {
        return Err(MuralError::MatrixFile("bad magic".into()));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes"));
    if version != MATRIX_VERSION {
        return Err(MuralError::Version { found: version, expected: MATRIX_VERSION });
    }
    let n = u64::from_le_bytes(header[8..16].try_into().expect("8 bytes")) as usize;
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * n * n {
        return Err(MuralError::MatrixFile(format!("{} payload bytes for n = {n}", bytes.len())));
    }
    Ok((n, bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect()))
}

pub mod forest_file;
pub mod matrix;
pub mod schema_file;
pub mod table;

use std::fs;
use std::path::Path;

use mural_core::data::{Dataset, Schema};

use crate::error::{MuralError, Result};

pub use forest_file::{deserialize_forest, serialize_forest};
pub use matrix::{read_matrix_bin, read_matrix_csv, write_matrix_bin, write_matrix_csv};
pub use schema_file::{parse_schema, render_schema};
pub use table::{load_csv, write_csv};

pub fn read_schema_file(path: &Path) -> Result<Schema> {
    let text = fs::read_to_string(path).map_err(|e| MuralError::io(path, e))?;
    parse_schema(&text)
}

pub fn read_dataset(schema: &Schema, path: &Path) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(|e| MuralError::io(path, e))?;
    load_csv(schema, file)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| MuralError::io(path, e))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| MuralError::io(path, e))
}

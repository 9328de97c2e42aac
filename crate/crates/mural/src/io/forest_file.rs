//! Versioned, checksummed forest container.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size | content                                   |
//! |--------|------|-------------------------------------------|
//! | 0      | 8    | magic `MURALFOR`                          |
//! | 8      | 4    | format version (`u32`, currently 1)       |
//! | 12     | 8    | payload length in bytes (`u64`)           |
//! | 20     | 32   | SHA-256 of the payload                    |
//! | 52     | len  | payload: UTF-8 JSON of the fitted model   |
//!
//! The payload holds the forest (config, schema, trees, standardization,
//! training leaf assignments), the missingness profile and the imputation
//! sweep count.

use sha2::{Digest, Sha256};

use crate::error::{MuralError, Result};
use crate::pipeline::FittedModel;

pub const FOREST_MAGIC: &[u8; 8] = b"MURALFOR";
pub const FOREST_VERSION: u32 = 1;
const HEADER_LEN: usize = 52;

pub fn serialize_forest(model: &FittedModel) -> Result<Vec<u8>> {
    let payload = serde_json::to_vec(model)?;
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(FOREST_MAGIC);
    out.extend_from_slice(&FOREST_VERSION.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&Sha256::digest(&payload));
    out.extend_from_slice(&payload);
    Ok(out)
}

pub fn deserialize_forest(bytes: &[u8]) -> Result<FittedModel> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != FOREST_MAGIC {
        return Err(MuralError::ForestFile("not a forest file".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != FOREST_VERSION {
        return Err(MuralError::Version { found: version, expected: FOREST_VERSION });
    }
    let len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != len {
        return Err(MuralError::ForestFile(format!("payload is {} bytes, header says {len}", payload.len())));
    }
    if Sha256::digest(payload).as_slice() != &bytes[20..52] {
        return Err(MuralError::Checksum);
    }
    let model: FittedModel = serde_json::from_slice(payload)?;
    model.forest.validate()?;
    Ok(model)
}

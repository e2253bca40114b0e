//! Stable content hashes for configurations.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// SHA-256 of the canonical JSON form of `v`. Object keys are sorted, so
/// the hash does not depend on field order in the source file.
pub fn config_hash<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    let canonical = serde_json::to_value(v)?;
    let text = serde_json::to_string(&canonical)?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

//! Versioned JSON model files.
//!
//! Floats are stored as 17-significant-digit strings and sum weights as
//! integer routing counts, so a reloaded model reproduces every prediction
//! bit for bit. Circuits are written in arena (topological) order; the
//! compiled prediction circuits are rebuilt on load.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::convert::GeF;
use crate::data::{ColumnStats, Schema};
use crate::error::{Error, Result};
use crate::forest::RandomForest;

pub const FORMAT_NAME: &str = "gefs-model";
pub const FORMAT_VERSION: u64 = 1;

/// Everything needed to answer queries in raw feature units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub schema: Arc<Schema>,
    /// Standardization applied to queries before prediction.
    pub stats: Option<ColumnStats>,
    pub forest: Option<RandomForest>,
    pub gef: Option<GeF>,
}

#[derive(Serialize)]
struct FileOut<'a> {
    format: &'static str,
    version: u64,
    model: &'a SavedModel,
}

#[derive(Deserialize)]
struct FileIn {
    model: SavedModel,
}

pub fn to_string(model: &SavedModel) -> Result<String> {
    serde_json::to_string_pretty(&FileOut {
        format: FORMAT_NAME,
        version: FORMAT_VERSION,
        model,
    })
    .map_err(|e| Error::Corrupted(e.to_string()))
}

pub fn from_str(text: &str) -> Result<SavedModel> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Corrupted(e.to_string()))?;
    if value.get("format").and_then(|f| f.as_str()) != Some(FORMAT_NAME) {
        return Err(Error::Corrupted("missing or wrong format tag".into()));
    }
    let version = value
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Corrupted("missing version".into()))?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let file: FileIn = serde_json::from_value(value).map_err(|e| Error::Corrupted(e.to_string()))?;
    Ok(file.model)
}

pub fn save_model(model: &SavedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_string(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_str(&text)
}

//! Self-contained trained-model files and atomic file output.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{ConceptSpec, Preprocessor, SplitIndices};
use crate::error::{CatError, Result};
use crate::model::CatModel;
use crate::train::{History, TrainConfig};

pub const ARCHIVE_FORMAT_VERSION: u32 = 1;

/// Summary of the training history stored with a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryDigest {
    /// SHA-256 of the history CSV.
    pub sha256: String,
    pub metric: String,
    pub epochs: usize,
    pub best_epoch: usize,
    pub best_val_metric: f64,
}

impl HistoryDigest {
    pub fn of(history: &History) -> Self {
        Self {
            sha256: sha256_hex(history.to_csv().as_bytes()),
            metric: history.metric.clone(),
            epochs: history.epochs.len(),
            best_epoch: history.best_epoch,
            best_val_metric: history.best_val_metric,
        }
    }
}

/// Everything needed to apply a trained model to a new CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatModelArchive {
    pub format_version: u32,
    pub spec: ConceptSpec,
    pub preprocessor: Preprocessor,
    pub model: CatModel,
    pub config: TrainConfig,
    pub split: SplitIndices,
    pub history: HistoryDigest,
}

impl CatModelArchive {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("archive serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Version {
            format_version: Option<u32>,
        }
        let v: Version = serde_json::from_str(text).map_err(|e| CatError::Archive(e.to_string()))?;
        match v.format_version {
            Some(ARCHIVE_FORMAT_VERSION) => {}
            Some(other) => {
                return Err(CatError::Archive(format!(
                    "format_version {other} (supported: {ARCHIVE_FORMAT_VERSION})"
                )))
            }
            None => return Err(CatError::Archive("missing format_version".into())),
        }
        let archive: Self = serde_json::from_str(text).map_err(|e| CatError::Archive(e.to_string()))?;
        archive.model.validate()?;
        if archive.model.bank.input_width() != archive.preprocessor.width() {
            return Err(CatError::Archive("model input width differs from the preprocessor".into()));
        }
        Ok(archive)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CatError::io(path, e))?;
        Self::from_json(&text)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes to a temporary sibling file, then renames it over `path`.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let name = path
        .file_name()
        .ok_or_else(|| CatError::Config(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, bytes).map_err(|e| CatError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        CatError::io(path, e)
    })
}

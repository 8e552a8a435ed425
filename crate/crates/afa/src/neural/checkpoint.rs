//! Model checkpoints: a JSON manifest paired with a raw little-endian f32
//! blob. The manifest records every tensor's name, shape, and byte range,
//! plus caller-supplied metadata; loading validates all of it against the
//! receiving model before touching any parameter.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{ParamSet, Scalar};

const FORMAT_TAG: &str = "tensor-blob-v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    byte_offset: u64,
    byte_len: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    format: String,
    blob: String,
    meta: serde_json::Value,
    tensors: Vec<TensorEntry>,
}

fn blob_path(manifest_path: &Path) -> PathBuf {
    manifest_path.with_extension("bin")
}

/// Write the model's parameters (as f32) and metadata. The blob lands next
/// to the manifest with a `.bin` extension.
pub fn save<S: Scalar>(
    manifest_path: impl AsRef<Path>,
    model: &dyn ParamSet<S>,
    meta: serde_json::Value,
) -> Result<()> {
    let manifest_path = manifest_path.as_ref();
    if let Some(parent) = manifest_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| Error::io(parent.display().to_string(), e))?;
        }
    }
    let mut tensors = Vec::new();
    let mut blob: Vec<u8> = Vec::new();
    model.visit_params(&mut |p| {
        let byte_offset = blob.len() as u64;
        for &v in &p.data {
            blob.extend_from_slice(&v.to_f32().to_le_bytes());
        }
        tensors.push(TensorEntry {
            name: p.name.clone(),
            shape: p.shape.clone(),
            byte_offset,
            byte_len: (p.data.len() * 4) as u64,
        });
    });

    let blob_file = blob_path(manifest_path);
    std::fs::write(&blob_file, &blob).map_err(|e| Error::io(blob_file.display().to_string(), e))?;

    let manifest = Manifest {
        format: FORMAT_TAG.to_string(),
        blob: blob_file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        meta,
        tensors,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(manifest_path, text)
        .map_err(|e| Error::io(manifest_path.display().to_string(), e))
}

/// Read only the metadata of a checkpoint, e.g. to decide how to build the
/// model the tensors will be loaded into.
pub fn read_meta(manifest_path: impl AsRef<Path>) -> Result<serde_json::Value> {
    let manifest_path = manifest_path.as_ref();
    let text = std::fs::read_to_string(manifest_path)
        .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.format != FORMAT_TAG {
        return Err(Error::CheckpointMismatch(format!(
            "unknown format tag {:?}",
            manifest.format
        )));
    }
    Ok(manifest.meta)
}

/// Fill the model's parameters from a checkpoint, returning the stored
/// metadata. Every model tensor must be present with a matching shape, and
/// the file must not carry extras.
pub fn load<S: Scalar>(
    manifest_path: impl AsRef<Path>,
    model: &mut dyn ParamSet<S>,
) -> Result<serde_json::Value> {
    let manifest_path = manifest_path.as_ref();
    let text = std::fs::read_to_string(manifest_path)
        .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.format != FORMAT_TAG {
        return Err(Error::CheckpointMismatch(format!(
            "unknown format tag {:?}",
            manifest.format
        )));
    }
    let blob_file = manifest_path
        .parent()
        .unwrap_or_else(|| Path::new(""))
        .join(&manifest.blob);
    let blob =
        std::fs::read(&blob_file).map_err(|e| Error::io(blob_file.display().to_string(), e))?;

    let mut entries: BTreeMap<&str, &TensorEntry> = BTreeMap::new();
    for e in &manifest.tensors {
        if entries.insert(e.name.as_str(), e).is_some() {
            return Err(Error::CheckpointMismatch(format!(
                "duplicate tensor {:?}",
                e.name
            )));
        }
    }

    let mut model_tensors = 0usize;
    let mut failure: Option<Error> = None;
    model.visit_params_mut(&mut |p| {
        if failure.is_some() {
            return;
        }
        model_tensors += 1;
        let entry = match entries.get(p.name.as_str()) {
            Some(e) => *e,
            None => {
                failure = Some(Error::CheckpointMismatch(format!(
                    "tensor {:?} missing from checkpoint",
                    p.name
                )));
                return;
            }
        };
        if entry.shape != p.shape {
            failure = Some(Error::CheckpointMismatch(format!(
                "tensor {:?}: shape {:?} in file, {:?} in model",
                p.name, entry.shape, p.shape
            )));
            return;
        }
        let expected_bytes = (p.data.len() * 4) as u64;
        let end = entry.byte_offset + entry.byte_len;
        if entry.byte_len != expected_bytes || end > blob.len() as u64 {
            failure = Some(Error::CheckpointMismatch(format!(
                "tensor {:?}: bad byte range {}..{} for blob of {} bytes",
                p.name,
                entry.byte_offset,
                end,
                blob.len()
            )));
            return;
        }
        let bytes = &blob[entry.byte_offset as usize..end as usize];
        for (i, chunk) in bytes.chunks_exact(4).enumerate() {
            p.data[i] = S::from_f32(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]));
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    if model_tensors != manifest.tensors.len() {
        return Err(Error::CheckpointMismatch(format!(
            "checkpoint has {} tensors, model has {}",
            manifest.tensors.len(),
            model_tensors
        )));
    }
    Ok(manifest.meta)
}

//! JSON checkpoints. Floats are written in shortest round-trip form, so a
//! save/load cycle is bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::net::PolicyParams;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub seed: u64,
    pub params: PolicyParams,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: unsupported checkpoint version {found}")]
    Version { path: PathBuf, found: u32 },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

pub fn save_checkpoint(path: &Path, params: &PolicyParams, seed: u64) -> Result<(), CheckpointError> {
    let io = |source| CheckpointError::Io {
        path: path.to_owned(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let ckpt = Checkpoint {
        version: CHECKPOINT_VERSION,
        seed,
        params: params.clone(),
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    serde_json::to_writer(&mut w, &ckpt).map_err(|source| CheckpointError::Json {
        path: path.to_owned(),
        source,
    })?;
    w.flush().map_err(io)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let f = File::open(path).map_err(|source| CheckpointError::Io {
        path: path.to_owned(),
        source,
    })?;
    let ckpt: Checkpoint =
        serde_json::from_reader(BufReader::new(f)).map_err(|source| CheckpointError::Json {
            path: path.to_owned(),
            source,
        })?;
    if ckpt.version != CHECKPOINT_VERSION {
        return Err(CheckpointError::Version {
            path: path.to_owned(),
            found: ckpt.version,
        });
    }
    ckpt.params
        .validate()
        .map_err(|message| CheckpointError::Invalid {
            path: path.to_owned(),
            message,
        })?;
    Ok(ckpt)
}

//! Run manifests: a content-hashed record of the fully resolved
//! configuration, written next to every command's artifacts.
//!
//! The manifest never contains wall-clock times or absolute paths, so a
//! rerun of the same invocation reproduces it byte for byte regardless of
//! where the output directory lives.

use crate::error::{CliError, CliResult};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub command: String,
    /// Fully resolved configuration (profile expanded to concrete budgets).
    pub config: serde_json::Value,
    /// SHA-256 over the canonical JSON encoding of `config`.
    pub config_hash: String,
    pub seeds: Vec<u64>,
}

/// Hash the canonical (compact) JSON encoding of a resolved configuration.
pub fn config_hash(config: &serde_json::Value) -> String {
    hex::encode(Sha256::digest(config.to_string().as_bytes()))
}

/// SHA-256 of a file's bytes.
pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn write_manifest(
    dir: &Path,
    command: &str,
    config: &impl Serialize,
    seeds: &[u64],
) -> CliResult<Manifest> {
    let value = serde_json::to_value(config)?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        command: command.to_string(),
        config_hash: config_hash(&value),
        config: value,
        seeds: seeds.to_vec(),
    };
    write_json_pretty(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> CliResult<Manifest> {
    read_json(&dir.join(MANIFEST_FILE))
}

/// Write pretty JSON terminated by a newline, creating parent directories.
pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Read JSON; a missing file is reported as a missing artifact rather than
/// a bare I/O error so callers can surface the exact path.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(CliError::MissingArtifacts(vec![PathBuf::from(path)]));
        }
        Err(e) => return Err(e.into()),
    };
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Cfg {
        alpha: f64,
        names: Vec<String>,
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = serde_json::to_value(Cfg {
            alpha: 0.5,
            names: vec!["x".into()],
        })
        .unwrap();
        let b = serde_json::to_value(Cfg {
            alpha: 0.5,
            names: vec!["x".into()],
        })
        .unwrap();
        let c = serde_json::to_value(Cfg {
            alpha: 0.25,
            names: vec!["x".into()],
        })
        .unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_ne!(config_hash(&a), config_hash(&c));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn manifest_roundtrips_and_reruns_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = Cfg {
            alpha: 1.5,
            names: vec!["a".into(), "b".into()],
        };
        let m1 = write_manifest(dir.path(), "train-rl", &cfg, &[0, 1]).unwrap();
        let bytes1 = std::fs::read(dir.path().join(MANIFEST_FILE)).unwrap();
        let m2 = write_manifest(dir.path(), "train-rl", &cfg, &[0, 1]).unwrap();
        let bytes2 = std::fs::read(dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(bytes1, bytes2);
        assert_eq!(m1.config_hash, m2.config_hash);

        let back = read_manifest(dir.path()).unwrap();
        assert_eq!(back.command, "train-rl");
        assert_eq!(back.seeds, vec![0, 1]);
        assert_eq!(back.config_hash, m1.config_hash);
    }

    #[test]
    fn missing_json_reports_the_exact_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nope.json");
        let err = read_json::<serde_json::Value>(&path).unwrap_err();
        match err {
            CliError::MissingArtifacts(paths) => assert_eq!(paths, vec![path]),
            other => panic!("unexpected error {other:?}"),
        }
    }
}

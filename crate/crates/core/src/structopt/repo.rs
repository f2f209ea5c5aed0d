//! Append-only knowledge repository.
//!
//! Every design round is archived as one JSON line: the dossier that went
//! in, the directives and proposal that came out, the verdict, and the
//! training metrics backing the round. Records are never rewritten or
//! deleted; ordering is carried by a logical 1-based timestamp assigned at
//! append time (no wall clock), so a replayed run produces a byte-identical
//! file.

use serde::{Deserialize, Serialize};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::env::EpisodeMetrics;
use crate::error::{Error, Result};
use crate::hull::HullShape;

use super::dossier::DesignDossier;
use super::pipeline::Directives;

/// One archived design round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationRecord {
    /// Logical sequence number, 1-based; assigned by the repository on
    /// append (any incoming value is overwritten).
    pub timestamp: u64,
    /// Design generation the round evaluated (the dossier's generation).
    pub generation: u32,
    pub dossier: DesignDossier,
    pub directives: Directives,
    pub proposal: HullShape,
    pub accepted: bool,
    /// Reason the proposal was rejected, when it was.
    pub rejection: Option<String>,
    /// Training metrics of the evaluated generation.
    pub metrics: EpisodeMetrics,
}

/// Append-only JSONL archive of optimization records.
#[derive(Debug)]
pub struct KnowledgeRepo {
    path: PathBuf,
    count: u64,
}

impl KnowledgeRepo {
    /// Open (or create) the repository at `path`. Existing content is fully
    /// validated: every line must parse as a record and carry the timestamp
    /// matching its position, so appends continue the sequence.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let count = if path.exists() {
            let text = std::fs::read_to_string(&path)?;
            if !text.is_empty() && !text.ends_with('\n') {
                return Err(Error::Contract(format!(
                    "knowledge repository {} is truncated (missing final newline)",
                    path.display()
                )));
            }
            let mut n = 0u64;
            for (i, line) in text.lines().enumerate() {
                let record: OptimizationRecord = serde_json::from_str(line).map_err(|e| {
                    Error::Contract(format!(
                        "knowledge repository {} line {} is corrupt: {e}",
                        path.display(),
                        i + 1
                    ))
                })?;
                n += 1;
                if record.timestamp != n {
                    return Err(Error::Contract(format!(
                        "knowledge repository {} line {} carries timestamp {}, expected {n}",
                        path.display(),
                        i + 1,
                        record.timestamp
                    )));
                }
            }
            n
        } else {
            0
        };
        Ok(Self { path, count })
    }

    /// Append one record, stamping it with the next logical timestamp, and
    /// return the stamped record.
    pub fn append(&mut self, record: OptimizationRecord) -> Result<OptimizationRecord> {
        let mut stamped = record;
        stamped.timestamp = self.count + 1;
        let mut line = serde_json::to_string(&stamped)?;
        line.push('\n');
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)?;
        file.write_all(line.as_bytes())?;
        self.count += 1;
        Ok(stamped)
    }

    /// Read back all records, oldest first.
    pub fn load(&self) -> Result<Vec<OptimizationRecord>> {
        if !self.path.exists() {
            return Ok(Vec::new());
        }
        let text = std::fs::read_to_string(&self.path)?;
        text.lines()
            .map(|line| Ok(serde_json::from_str(line)?))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.count as usize
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

#[cfg(test)]
mod tests {
    use super::super::dossier::{CurveSummary, FlowSummary};
    use super::super::pipeline::Provenance;
    use super::*;
    use crate::hull::{CurvatureClass, HullFamily};

    fn record_fixture(generation: u32) -> OptimizationRecord {
        let hull = HullShape::standard(HullFamily::Capsule);
        let dossier = DesignDossier {
            hull: hull.clone(),
            generation,
            curve: CurveSummary {
                window: 30,
                mean_cr: 100.0 + generation as f64,
                mean_sdr: 30.0,
                mean_ec: 2500.0,
                mean_success: 0.4,
            },
            flow: FlowSummary {
                mean_speed_near_hull: 0.5,
                max_speed_near_hull: 1.1,
                wake_residual_rms: 1e-3,
            },
            objectives: "reduce energy consumption".into(),
        };
        let metrics = dossier.curve.as_metrics();
        OptimizationRecord {
            timestamp: 999, // deliberately wrong; the repo must overwrite it
            generation,
            dossier,
            directives: Directives {
                target_drag_reduction: 0.3,
                curvature_class: CurvatureClass::Constant,
                keep_length: 5.0,
                keep_width: 1.5,
                rationale: "smooth the stern".into(),
                provenance: Provenance::Fallback,
            },
            proposal: HullShape::standard(HullFamily::IceCreamCone),
            accepted: true,
            rejection: None,
            metrics,
        }
    }

    #[test]
    fn append_assigns_sequential_logical_timestamps() {
        let dir = tempfile::tempdir().unwrap();
        let mut repo = KnowledgeRepo::open(dir.path().join("repo.jsonl")).unwrap();
        assert!(repo.is_empty());
        for g in 1..=3 {
            let stamped = repo.append(record_fixture(g)).unwrap();
            assert_eq!(stamped.timestamp, g as u64);
        }
        assert_eq!(repo.len(), 3);
        let records = repo.load().unwrap();
        let stamps: Vec<u64> = records.iter().map(|r| r.timestamp).collect();
        assert_eq!(stamps, vec![1, 2, 3]);
        // Content survives the round trip exactly.
        let mut expected = record_fixture(2);
        expected.timestamp = 2;
        assert_eq!(records[1], expected);
    }

    #[test]
    fn reopening_continues_the_sequence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("repo.jsonl");
        {
            let mut repo = KnowledgeRepo::open(&path).unwrap();
            repo.append(record_fixture(1)).unwrap();
            repo.append(record_fixture(2)).unwrap();
        }
        let mut repo = KnowledgeRepo::open(&path).unwrap();
        assert_eq!(repo.len(), 2);
        let stamped = repo.append(record_fixture(3)).unwrap();
        assert_eq!(stamped.timestamp, 3);
        assert_eq!(repo.load().unwrap().len(), 3);
    }

    #[test]
    fn corrupt_content_is_rejected_on_open() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("repo.jsonl");
        std::fs::write(&path, "this is not json\n").unwrap();
        let err = KnowledgeRepo::open(&path).unwrap_err();
        assert!(matches!(err, Error::Contract(_)), "{err}");
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn tampered_timestamps_are_rejected_on_open() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("repo.jsonl");
        {
            let mut repo = KnowledgeRepo::open(&path).unwrap();
            repo.append(record_fixture(1)).unwrap();
            repo.append(record_fixture(2)).unwrap();
        }
        // Drop the first line: position no longer matches the stamps.
        let text = std::fs::read_to_string(&path).unwrap();
        let second = text.lines().nth(1).unwrap();
        std::fs::write(&path, format!("{second}\n")).unwrap();
        let err = KnowledgeRepo::open(&path).unwrap_err();
        assert!(err.to_string().contains("timestamp 2"), "{err}");

        // A truncated final line is also refused.
        std::fs::write(&path, text.trim_end()).unwrap();
        let err = KnowledgeRepo::open(&path).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
    }

    #[test]
    fn replay_produces_byte_identical_archives() {
        let dir = tempfile::tempdir().unwrap();
        let (path_a, path_b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
        let mut a = KnowledgeRepo::open(&path_a).unwrap();
        let mut b = KnowledgeRepo::open(&path_b).unwrap();
        for g in 1..=3 {
            a.append(record_fixture(g)).unwrap();
        }
        for g in 1..=3 {
            b.append(record_fixture(g)).unwrap();
        }
        let bytes_a = std::fs::read(&path_a).unwrap();
        let bytes_b = std::fs::read(&path_b).unwrap();
        assert!(!bytes_a.is_empty());
        assert_eq!(bytes_a, bytes_b);
    }
}

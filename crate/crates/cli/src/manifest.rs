//! `manifest.json`: one record per pipeline stage with its configuration,
//! seed, input and output hashes, and wall time.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub command: String,
    pub seed: u64,
    pub threads: Option<usize>,
    pub config: serde_json::Value,
    /// Path → sha256 of every file read.
    pub inputs: BTreeMap<String, String>,
    /// Path → sha256 of every file written.
    pub outputs: BTreeMap<String, String>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub artifact_versions: BTreeMap<String, u32>,
    pub stages: BTreeMap<String, StageRecord>,
    /// sha256 over every stage's seed, config and file hashes. Command
    /// lines, wall times and thread counts are left out.
    pub digest: String,
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn artifact_versions() -> BTreeMap<String, u32> {
    BTreeMap::from([
        ("manifest".to_string(), MANIFEST_VERSION),
        ("feature_schema".to_string(), cqa_core::learn::FEATURE_SCHEMA_VERSION),
        ("model".to_string(), cqa_core::learn::model::MODEL_VERSION),
    ])
}

impl RunManifest {
    pub fn load_or_new(out_dir: &Path) -> anyhow::Result<RunManifest> {
        let path = out_dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(RunManifest {
                tool: "cqa".into(),
                tool_version: env!("CARGO_PKG_VERSION").into(),
                artifact_versions: artifact_versions(),
                stages: BTreeMap::new(),
                digest: String::new(),
            });
        }
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn compute_digest(&self) -> String {
        let stable: BTreeMap<&String, serde_json::Value> = self
            .stages
            .iter()
            .map(|(k, s)| {
                let v = serde_json::json!({
                    "seed": s.seed,
                    "config": s.config,
                    "inputs": s.inputs,
                    "outputs": s.outputs,
                });
                (k, v)
            })
            .collect();
        let bytes = serde_json::to_vec(&stable).expect("manifest values serialize");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn save(&mut self, out_dir: &Path) -> anyhow::Result<PathBuf> {
        self.artifact_versions = artifact_versions();
        self.digest = self.compute_digest();
        let path = out_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// Collects one stage's inputs and outputs while it runs.
pub struct Stage {
    name: String,
    record: StageRecord,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    start: Instant,
}

impl Stage {
    pub fn begin(name: &str, command: String, seed: u64, threads: Option<usize>, config: serde_json::Value) -> Stage {
        Stage {
            name: name.into(),
            record: StageRecord {
                command,
                seed,
                threads,
                config,
                inputs: BTreeMap::new(),
                outputs: BTreeMap::new(),
                wall_seconds: 0.0,
            },
            inputs: Vec::new(),
            outputs: Vec::new(),
            start: Instant::now(),
        }
    }

    pub fn input(&mut self, path: impl Into<PathBuf>) {
        self.inputs.push(path.into());
    }

    pub fn output(&mut self, path: impl Into<PathBuf>) {
        self.outputs.push(path.into());
    }

    /// Hashes every recorded file and stores the stage in the manifest of
    /// `out_dir`, replacing an earlier run of the same stage.
    pub fn finish(mut self, out_dir: &Path) -> anyhow::Result<()> {
        let key = |p: &Path| p.strip_prefix(out_dir).unwrap_or(p).to_string_lossy().replace('\\', "/");
        for p in &self.inputs {
            self.record.inputs.insert(key(p), sha256_file(p)?);
        }
        for p in &self.outputs {
            self.record.outputs.insert(key(p), sha256_file(p)?);
        }
        self.record.wall_seconds = self.start.elapsed().as_secs_f64();
        let mut m = RunManifest::load_or_new(out_dir)?;
        m.stages.insert(self.name, self.record);
        m.save(out_dir)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_ignores_wall_time() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("a.csv");
        std::fs::write(&f, "x\n1\n").unwrap();
        let run = || {
            let mut s = Stage::begin("t", "cqa t".into(), 7, None, serde_json::json!({"k": 1}));
            s.output(&f);
            s.finish(dir.path()).unwrap();
            RunManifest::load_or_new(dir.path()).unwrap()
        };
        let a = run();
        std::thread::sleep(std::time::Duration::from_millis(5));
        let b = run();
        assert_eq!(a.digest, b.digest);
        assert_eq!(a.stages["t"].outputs["a.csv"], sha256_file(&f).unwrap());
    }
}

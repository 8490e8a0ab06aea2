//! Run manifest: config hash, tool version, per-output checksums, and
//! wall-clock timings, so identical (config, seed, version) provably yield
//! identical artifacts.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub outputs: Vec<OutputRecord>,
    /// (label, milliseconds) pairs; excluded from determinism comparisons.
    pub timings_ms: Vec<(String, u64)>,
    /// Set when a run aborted mid-write and the listed outputs are partial.
    #[serde(default)]
    pub partial: bool,
}

impl RunManifest {
    pub fn new(config_text: &str, seed: u64) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: sha256_hex(config_text.as_bytes()),
            seed,
            outputs: Vec::new(),
            timings_ms: Vec::new(),
            partial: false,
        }
    }

    /// Writes `bytes` under the output directory and records its checksum.
    pub fn write_output(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(name), bytes)?;
        self.outputs.push(OutputRecord {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn record_timing(&mut self, label: &str, ms: u64) {
        self.timings_ms.push((label.to_string(), ms));
    }

    /// Serializes and writes the manifest itself as `manifest.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.join("manifest.json"), text)?;
        Ok(())
    }

    /// Checksum list with timings stripped, for determinism comparisons.
    pub fn checksums(&self) -> Vec<(String, String)> {
        self.outputs
            .iter()
            .map(|o| (o.path.clone(), o.sha256.clone()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        // FIPS 180-2 test vector for "abc"
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn identical_payloads_identical_checksums() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = RunManifest::new("{}", 5);
        let mut b = RunManifest::new("{}", 5);
        a.write_output(dir.path(), "x.json", b"payload").unwrap();
        b.write_output(dir.path(), "x.json", b"payload").unwrap();
        a.record_timing("sim", 12);
        b.record_timing("sim", 99);
        assert_eq!(a.checksums(), b.checksums());
        assert_eq!(a.config_sha256, b.config_sha256);
    }

    #[test]
    fn manifest_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::new("cfg", 1);
        m.write_output(dir.path(), "a.bin", &[1, 2, 3]).unwrap();
        m.write(dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back.outputs, m.outputs);
        assert!(!back.partial);
    }
}

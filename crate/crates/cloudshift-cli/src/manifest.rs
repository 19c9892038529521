//! Experiment manifests. Every artifact directory gets a `manifest.ini`
//! holding the tool version, the command, the seeds actually used, digests
//! of the inputs consumed, the full effective configuration, and a SHA-256
//! digest per output file. `verify` re-hashes the outputs against it.
//!
//! Manifests deliberately carry no wall-clock data: rerunning a command
//! with the same inputs and seeds must reproduce the manifest byte for byte.

use crate::config::{Config, Ini};
use crate::error::CliError;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const MANIFEST_NAME: &str = "manifest.ini";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    Ok(sha256_hex(&crate::error::read_input(path)?))
}

/// Collects what a command produced and consumed, then renders the manifest.
pub struct ManifestBuilder {
    dir: PathBuf,
    ini: Ini,
    outputs: BTreeMap<String, String>,
}

impl ManifestBuilder {
    pub fn new(dir: &Path, command: &str, cfg: &Config) -> Self {
        let mut ini = cfg.ini.clone();
        ini.set("run", "tool", format!("cloudshift {}", env!("CARGO_PKG_VERSION")));
        ini.set("run", "command", command);
        ini.set("run", "schema", "1");
        Self { dir: dir.to_path_buf(), ini, outputs: BTreeMap::new() }
    }

    pub fn seed(&mut self, which: &str, value: u64) {
        self.ini.set("seeds", which, value.to_string());
    }

    /// Record an input file by logical name, with its digest.
    pub fn input(&mut self, name: &str, path: &Path) -> Result<(), CliError> {
        self.ini.set("inputs", &format!("{name}_path"), path.display().to_string());
        self.ini.set("inputs", &format!("{name}_sha256"), sha256_file(path)?);
        Ok(())
    }

    /// Write `bytes` atomically under the output dir and record its digest.
    pub fn write_output(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::internal(format!("{}: {e}", parent.display())))?;
        }
        cloudshift::io::write_atomic(&path, bytes)
            .map_err(|e| CliError::internal(format!("{}: {e}", path.display())))?;
        self.outputs.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Write the manifest itself. Call last.
    pub fn finish(mut self) -> Result<(), CliError> {
        for (rel, digest) in &self.outputs {
            self.ini.set("outputs", rel, digest.clone());
        }
        let path = self.dir.join(MANIFEST_NAME);
        cloudshift::io::write_atomic(&path, self.ini.render().as_bytes())
            .map_err(|e| CliError::internal(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug)]
pub struct VerifyReport {
    pub checked: usize,
    pub failures: Vec<String>,
}

/// Re-hash every `[outputs]` entry of the directory's manifest.
pub fn verify_dir(dir: &Path) -> Result<VerifyReport, CliError> {
    let manifest_path = dir.join(MANIFEST_NAME);
    let text = crate::error::read_input_text(&manifest_path)?;
    let ini = Ini::parse(&text)
        .map_err(|e| CliError::data(format!("{}: {e}", manifest_path.display())))?;
    let mut report = VerifyReport { checked: 0, failures: Vec::new() };
    let outputs: Vec<(String, String)> = ini
        .sections()
        .filter(|(name, _)| *name == "outputs")
        .flat_map(|(_, entries)| entries.iter().map(|(k, v)| (k.clone(), v.clone())))
        .collect();
    if outputs.is_empty() {
        return Err(CliError::data(format!(
            "{}: manifest lists no outputs",
            manifest_path.display()
        )));
    }
    for (rel, expected) in outputs {
        report.checked += 1;
        let path = dir.join(&rel);
        match std::fs::read(&path) {
            Err(e) => report.failures.push(format!("missing {rel}: {e}")),
            Ok(bytes) => {
                let got = sha256_hex(&bytes);
                if got != expected {
                    report.failures.push(format!("mismatch {rel}: {got} != {expected}"));
                }
            }
        }
    }
    Ok(report)
}

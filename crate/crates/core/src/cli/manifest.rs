//! Run manifests: every command that writes files also writes a JSON
//! manifest with content hashes of its inputs and outputs, the tool
//! version, and phase timings, so a run can be audited and re-run.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: ToolInfo,
    pub subcommand: String,
    pub created_unix: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
    pub config_file: String,
    pub timings_ms: BTreeMap<String, u128>,
}

impl Manifest {
    pub fn new(subcommand: &str, threads: Option<usize>) -> Self {
        Self {
            tool: ToolInfo { name: "vpbounds", version: env!("CARGO_PKG_VERSION") },
            subcommand: subcommand.to_string(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            seed: None,
            threads,
            inputs: Vec::new(),
            outputs: Vec::new(),
            config_file: String::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(hash_file(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(hash_file(path)?);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        Ok(())
    }
}

/// Wall-clock phase timer feeding `timings_ms`.
pub struct Phase {
    start: Instant,
    name: &'static str,
}

impl Phase {
    pub fn start(name: &'static str) -> Self {
        Self { start: Instant::now(), name }
    }

    pub fn stop(self, manifest: &mut Manifest) {
        manifest.timings_ms.insert(self.name.to_string(), self.start.elapsed().as_millis());
    }
}

pub fn hash_file(path: &Path) -> Result<FileEntry> {
    let mut f = File::open(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 65536];
    let mut bytes = 0u64;
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        bytes += n as u64;
    }
    let digest = hasher.finalize();
    let mut sha256 = String::with_capacity(64);
    for b in digest {
        use std::fmt::Write as _;
        let _ = write!(sha256, "{b:02x}");
    }
    Ok(FileEntry { path: path.display().to_string(), bytes, sha256 })
}

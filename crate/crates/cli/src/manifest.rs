use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Record of one invocation, written next to its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a, T: Serialize> {
    pub subcommand: &'a str,
    pub argv: Vec<String>,
    pub flags: &'a T,
    pub jobs: Option<usize>,
    pub rng_seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub version: &'static str,
    pub timestamp: String,
}

impl<'a, T: Serialize> RunManifest<'a, T> {
    pub fn new(subcommand: &'a str, flags: &'a T, jobs: Option<usize>) -> Self {
        RunManifest {
            subcommand,
            argv: std::env::args().collect(),
            flags,
            jobs,
            rng_seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        fs::write(dir.join("manifest.json"), text + "\n")
    }
}

//! Run manifests, written next to every artifact as `<artifact>.manifest.json`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SolveError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    /// Command-line arguments after the program name; replaying them reproduces the outputs.
    pub args: Vec<String>,
    pub version: String,
    /// `null` for commands that draw no random numbers.
    pub seed: Option<u64>,
    /// Every setting the command ran with, defaults included.
    pub config: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    /// Seconds since the Unix epoch at start.
    pub started_at: u64,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn path_for(artifact: &Path) -> PathBuf {
        let mut name = artifact.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifests always serialize");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(SolveError::io(path))?;
        Self::from_json(&text).map_err(|m| SolveError::parse(path, 0, m))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(SolveError::io(path))
    }
}

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to rerun a command: the effective configuration is copied next to the
/// outputs and `args` holds the command line.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    /// Config file given on the command line, if any.
    pub config_path: Option<PathBuf>,
    /// Effective configuration written into the output directory.
    pub effective_config: String,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub tool_version: String,
    pub wall_clock_s: f64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    /// Writes via a temporary file and a rename, so readers never see a partial manifest.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let tmp = dir.join(format!(".{MANIFEST_FILE}.tmp"));
        let json = serde_json::to_string_pretty(self)?;
        fs::write(&tmp, json + "\n").with_context(|| format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, dir.join(MANIFEST_FILE)).context("publishing the manifest")?;
        Ok(())
    }
}

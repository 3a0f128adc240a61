use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Single writer for everything an experiment emits under the output directory.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<(String, String)>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.push((name.to_string(), sha256_hex(bytes)));
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        self.write_bytes(name, text.as_bytes())
    }

    /// One JSON record per line.
    pub fn write_jsonl<S: Serialize>(&mut self, name: &str, records: &[S]) -> Result<(), CliError> {
        let mut text = String::new();
        for r in records {
            text.push_str(&serde_json::to_string(r)?);
            text.push('\n');
        }
        self.write_text(name, &text)
    }

    pub fn write_json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn finish(mut self, manifest: Manifest) -> Result<(), CliError> {
        let files: Vec<Value> = self
            .files
            .iter()
            .map(|(name, hash)| json!({"file": name, "sha256": hash}))
            .collect();
        let value = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": manifest.subcommand,
            "config_hash": manifest.config_hash,
            "seed": manifest.seed,
            "estimated_constants": manifest.constants,
            "wall_clock_s": manifest.wall_clock_s,
            "paths": manifest.paths,
            "steps": manifest.steps,
            "status": manifest.status,
            "files": files,
        });
        self.write_json("manifest.json", &value)
    }
}

pub struct Manifest {
    pub subcommand: String,
    pub config_hash: String,
    pub seed: u64,
    pub constants: Value,
    pub wall_clock_s: f64,
    pub paths: usize,
    pub steps: u64,
    pub status: String,
}

/// CSV text from a header and rows of displayable cells.
pub fn csv<I, R>(header: &str, rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: std::fmt::Display,
{
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(|c| c.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

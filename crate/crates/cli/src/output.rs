//! In-memory artifact set and its manifest. Nothing touches the output
//! directory until a scenario has finished, so a failed run leaves no files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use psq_core::grid::PhaseField;
use psq_core::io::{encode_binary, encode_csv, encode_dat, fmt_f64, FORMAT_VERSION};
use psq_core::wigner::QuasiDistribution;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::Format;
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Default)]
pub struct Artifacts {
    files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        let name = name.into();
        assert!(
            self.files.insert(name.clone(), bytes).is_none(),
            "artifact {name} emitted twice"
        );
    }

    pub fn add_text(&mut self, name: impl Into<String>, text: String) {
        self.add(name, text.into_bytes());
    }

    pub fn add_json(&mut self, name: impl Into<String>, v: &Value) {
        let mut text = serde_json::to_string_pretty(v).expect("json value serialises");
        text.push('\n');
        self.add_text(name, text);
    }

    /// One file per requested format; `.bin` comes with a JSON sidecar when
    /// the field is a quasi-distribution.
    pub fn add_field(
        &mut self,
        stem: &str,
        field: &PhaseField,
        state: Option<&QuasiDistribution>,
        formats: &[Format],
    ) -> Result<(), CliError> {
        for f in formats {
            match f {
                Format::Bin => {
                    self.add(format!("{stem}.bin"), encode_binary(field)?);
                    if let Some(q) = state {
                        self.add_json(format!("{stem}.json"), &q.sidecar());
                    }
                }
                Format::Csv => self.add_text(format!("{stem}.csv"), encode_csv(field)?),
                Format::Dat => self.add_text(format!("{stem}.dat"), encode_dat(field)),
            }
        }
        Ok(())
    }

    pub fn add_state(
        &mut self,
        stem: &str,
        state: &QuasiDistribution,
        formats: &[Format],
    ) -> Result<(), CliError> {
        self.add_field(stem, &state.field, Some(state), formats)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    pub fn manifest(&self, scenario: &str, config_hash: &str) -> Value {
        let files: Vec<Value> = self
            .files
            .iter()
            .map(|(name, bytes)| {
                json!({
                    "path": name,
                    "bytes": bytes.len(),
                    "sha256": sha256_hex(bytes),
                })
            })
            .collect();
        json!({
            "scenario": scenario,
            "library_version": psq_core::VERSION,
            "format_version": FORMAT_VERSION,
            "config_sha256": config_hash,
            "files": files,
        })
    }

    /// Writes every artifact and then `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path, manifest: &Value) -> Result<(), CliError> {
        let io = |what: &str, p: &Path, e: std::io::Error| {
            CliError::Io(format!("{what} {}: {e}", p.display()))
        };
        fs::create_dir_all(dir).map_err(|e| io("cannot create", dir, e))?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| io("cannot write", &path, e))?;
        }
        let path = dir.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(manifest).expect("manifest serialises");
        text.push('\n');
        fs::write(&path, text).map_err(|e| io("cannot write", &path, e))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Comma-separated table with every float printed by [`fmt_f64`].
pub struct Table {
    text: String,
    width: usize,
}

pub enum Cell {
    F(f64),
    I(usize),
    S(String),
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self::with_header(header.iter().map(|s| s.to_string()).collect())
    }

    pub fn with_header(header: Vec<String>) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self {
            text,
            width: header.len(),
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.width, "row width");
        let parts: Vec<String> = cells
            .into_iter()
            .map(|c| match c {
                Cell::F(v) => fmt_f64(v),
                Cell::I(n) => n.to_string(),
                Cell::S(s) => s,
            })
            .collect();
        self.text.push_str(&parts.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

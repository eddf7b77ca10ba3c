use crate::error::CliError;
use fwdsig::io::{sha256_hex, write_columnar, write_records, Column, RecordMeta};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.json";

/// What produced a directory of outputs, and their checksums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub run_digest: String,
    pub input_digest: String,
    /// Bars after regularization, for commands that read candles.
    pub input_bars: Option<usize>,
    /// Minutes absent from the source; loaders fill them with flat bars.
    pub missing_minutes: Option<usize>,
    /// Effective configuration, TOML.
    pub config: String,
    /// Relative path to SHA-256 of the file contents.
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    /// Names of outputs whose current contents no longer match.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.outputs
            .iter()
            .filter(|(name, sum)| std::fs::read(dir.join(name)).map(|b| sha256_hex(&b)).ok().as_ref() != Some(*sum))
            .map(|(name, _)| name.clone())
            .collect()
    }
}

/// `sha256(command, version, config, input digest)`.
pub fn run_digest(command: &str, config_toml: &str, input_digest: &str) -> String {
    sha256_hex(format!("{command}\n{}\n{config_toml}\n{input_digest}", env!("CARGO_PKG_VERSION")).as_bytes())
}

/// Writes files under one directory and tracks their checksums.
pub struct Outputs {
    dir: PathBuf,
    digest: String,
    files: BTreeMap<String, String>,
    input: Option<(usize, usize)>,
}

impl Outputs {
    pub fn create(dir: &Path, digest: String) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Pipeline(format!("cannot create {}: {e}", dir.display())))?;
        // a manifest marks a complete directory; drop a stale one until this run finishes
        let stale = dir.join(MANIFEST);
        if stale.exists() {
            std::fs::remove_file(&stale).map_err(|e| CliError::Pipeline(format!("cannot remove {}: {e}", stale.display())))?;
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            digest,
            files: BTreeMap::new(),
            input: None,
        })
    }

    /// Notes the input size and missing minutes in the manifest.
    pub fn input(&mut self, bars: usize, missing: usize) {
        self.input = Some((bars, missing));
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Pipeline(format!("cannot create {}: {e}", parent.display())))?;
        }
        std::fs::write(&path, bytes).map_err(|e| CliError::Pipeline(format!("cannot write {}: {e}", path.display())))?;
        self.files.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Records the checksum of a file written elsewhere, e.g. incrementally.
    pub fn track(&mut self, name: &str) -> Result<(), CliError> {
        let path = self.path(name);
        let bytes = std::fs::read(&path).map_err(|e| CliError::Pipeline(format!("cannot read {}: {e}", path.display())))?;
        self.files.insert(name.to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn columnar(&mut self, name: &str, columns: &[Column<'_>]) -> Result<(), CliError> {
        let mut buf = Vec::new();
        write_columnar(&mut buf, Some(&self.digest), columns).map_err(CliError::pipeline)?;
        self.bytes(name, &buf)
    }

    pub fn records<T: Serialize>(&mut self, name: &str, schema: &str, records: &[T]) -> Result<(), CliError> {
        let meta = self.meta(schema);
        let mut buf = Vec::new();
        write_records(&mut buf, Some(&meta), records).map_err(CliError::pipeline)?;
        self.bytes(name, &buf)
    }

    pub fn meta(&self, schema: &str) -> RecordMeta {
        RecordMeta {
            schema: schema.to_string(),
            run_digest: Some(self.digest.clone()),
        }
    }

    /// Writes the manifest last, so a directory with a manifest is complete.
    pub fn finish(mut self, command: &str, config: &str, input_digest: &str) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            run_digest: self.digest.clone(),
            input_digest: input_digest.to_string(),
            input_bars: self.input.map(|i| i.0),
            missing_minutes: self.input.map(|i| i.1),
            config: config.to_string(),
            outputs: std::mem::take(&mut self.files),
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(CliError::pipeline)?;
        text.push('\n');
        let path = self.path(MANIFEST);
        std::fs::write(&path, text).map_err(|e| CliError::Pipeline(format!("cannot write {}: {e}", path.display())))?;
        Ok(manifest)
    }
}

/// Directory name for one threshold, e.g. `theta_1.4`.
pub fn theta_dir(theta: f64) -> String {
    format!("theta_{theta}")
}

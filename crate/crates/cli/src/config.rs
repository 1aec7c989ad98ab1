//! Flag/file merging, config hashing and artifact emission.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const SCHEMA: u32 = 1;

/// Overlays the flags onto the config file's parameters. Flags left unset
/// (serialized as null) keep the file value; unknown keys are rejected.
pub fn merge<T: Serialize + DeserializeOwned>(
    command: &str,
    flags: &T,
    file: Option<&Map<String, Value>>,
) -> Result<T, CliError> {
    let mut merged = file.cloned().unwrap_or_default();
    if let Some(cmd) = merged.remove("command") {
        if cmd.as_str() != Some(command) {
            return Err(CliError::Config(format!(
                "config file is for command {cmd}, not '{command}'"
            )));
        }
    }
    merged.remove("seed");
    merged.remove("output_dir");
    let Value::Object(over) =
        serde_json::to_value(flags).map_err(|e| CliError::Config(e.to_string()))?
    else {
        unreachable!("parameter structs serialize to objects")
    };
    merged.extend(over.into_iter().filter(|(_, v)| !v.is_null()));
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::Config(format!("{command}: {e}")))
}

/// Reads a JSON config file; it must hold an object.
pub fn read_config(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::Config(
            "config file must hold a JSON object".into(),
        )),
        Err(e) => Err(CliError::Config(format!("{}: {e}", path.display()))),
    }
}

/// Destination for the artifacts of one run, named `{command}_{hash}`.
pub struct Emitter {
    dir: PathBuf,
    stem: String,
    command: String,
    config: Value,
}

impl Emitter {
    pub fn new(
        dir: &Path,
        command: &str,
        params: &impl Serialize,
        seed: u64,
    ) -> Result<Self, CliError> {
        let config = json!({ "command": command, "seed": seed, "params": params });
        let canonical =
            serde_json::to_string(&config).map_err(|e| CliError::Config(e.to_string()))?;
        let digest = Sha256::digest(canonical.as_bytes());
        let hash: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
        Ok(Emitter {
            dir: dir.to_path_buf(),
            stem: format!("{command}_{hash}"),
            command: command.into(),
            config,
        })
    }

    pub fn path(&self, ext: &str) -> PathBuf {
        self.dir.join(format!("{}.{ext}", self.stem))
    }

    fn write(&self, ext: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.path(ext);
        fs::write(&path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    /// The versioned JSON report.
    pub fn json(&self, pass: bool, results: Value) -> Result<PathBuf, CliError> {
        let doc = json!({
            "schema": SCHEMA,
            "command": self.command,
            "config": self.config,
            "pass": pass,
            "results": results,
            "metadata": { "version": env!("CARGO_PKG_VERSION") },
        });
        let mut text =
            serde_json::to_string_pretty(&doc).map_err(|e| CliError::Output(e.to_string()))?;
        text.push('\n');
        self.write("json", &text)
    }

    pub fn csv(&self, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write("csv", &text)
    }

    pub fn jsonl(&self, records: &[Value]) -> Result<PathBuf, CliError> {
        let mut text = String::new();
        for r in records {
            text.push_str(&r.to_string());
            text.push('\n');
        }
        self.write("jsonl", &text)
    }

    pub fn svg(&self, text: &str) -> Result<PathBuf, CliError> {
        self.write("svg", text)
    }
}

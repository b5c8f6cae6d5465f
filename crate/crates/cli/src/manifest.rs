use std::path::{Path, PathBuf};
use std::time::SystemTime;

use serde::Serialize;

/// Provenance record embedded in every JSON summary.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: serde_json::Value,
    pub version: String,
    pub timestamp: String,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, params: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            params,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: humantime::format_rfc3339_seconds(SystemTime::now()).to_string(),
            outputs: Vec::new(),
        }
    }

    /// Writes `contents` to `path` and records it as an output.
    pub fn write(&mut self, path: &Path, contents: &str) -> std::io::Result<()> {
        std::fs::write(path, contents)?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }

    /// Writes the JSON summary `{ "manifest": ..., <body fields> }` to
    /// `path`, listing `path` itself among the outputs.
    pub fn write_summary<T: Serialize>(mut self, path: &Path, body: &T) -> std::io::Result<serde_json::Value> {
        self.outputs.push(path.to_path_buf());
        let mut value = serde_json::to_value(body).map_err(std::io::Error::other)?;
        let manifest = serde_json::to_value(&self).map_err(std::io::Error::other)?;
        match value.as_object_mut() {
            Some(map) => {
                map.insert("manifest".to_string(), manifest);
            }
            None => value = serde_json::json!({ "manifest": manifest, "result": value }),
        }
        let text = serde_json::to_string_pretty(&value).map_err(std::io::Error::other)?;
        std::fs::write(path, text + "\n")?;
        Ok(value)
    }
}

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Kernels,
    Slip,
    Profile,
    Oracle,
    Convergence,
}

/// Record of one invocation: what was asked for and which files came out.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: CommandKind,
    pub parameters: Map<String, Value>,
    pub outputs: Vec<String>,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: CommandKind, parameters: Value) -> Self {
        let parameters = match parameters {
            Value::Object(m) => m,
            other => Map::from_iter([("value".to_string(), other)]),
        };
        Self {
            command,
            parameters,
            outputs: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn push_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Explicit path wins; otherwise `<first output>.manifest.json`. Nothing
    /// is written when the run produced no files and no path was given.
    pub fn target(&self, explicit: Option<&Path>) -> Option<PathBuf> {
        explicit
            .map(Path::to_path_buf)
            .or_else(|| self.outputs.first().map(|o| PathBuf::from(format!("{o}.manifest.json"))))
    }

    pub fn write(&self, explicit: Option<&Path>) -> anyhow::Result<Option<PathBuf>> {
        let Some(path) = self.target(explicit) else {
            return Ok(None);
        };
        for o in &self.outputs {
            anyhow::ensure!(Path::new(o).exists(), "listed output {o} is missing");
        }
        let json = serde_json::to_string_pretty(self)?;
        kramers_core::output::write_file(&path, &(json + "\n")).with_context(|| format!("writing {}", path.display()))?;
        Ok(Some(path))
    }
}

//! Per-command record of runs, timings and outputs.

use std::path::{Path, PathBuf};

use crate::io::Table;
use crate::LabError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub name: String,
    /// `ok` or `failed`.
    pub status: String,
    pub seconds: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub runs: Vec<RunRecord>,
    /// Every file written, `manifest.csv` excluded.
    pub outputs: Vec<PathBuf>,
    /// The first failure; outputs written before it are kept.
    pub failure: Option<LabError>,
}

impl RunManifest {
    pub fn new(command: &str, config_hash: &str) -> Self {
        Self {
            command: command.into(),
            config_hash: config_hash.into(),
            runs: Vec::new(),
            outputs: Vec::new(),
            failure: None,
        }
    }

    pub fn record(&mut self, name: impl Into<String>, ok: bool, seconds: f64, detail: impl Into<String>) {
        self.runs.push(RunRecord {
            name: name.into(),
            status: if ok { "ok" } else { "failed" }.into(),
            seconds,
            detail: detail.into(),
        });
    }

    /// Keeps the first failure.
    pub fn fail(&mut self, e: LabError) {
        if self.failure.is_none() {
            self.failure = Some(e);
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.failure.as_ref().map_or(0, LabError::exit_code)
    }

    /// Writes `manifest.csv` with columns `item,status,seconds,detail`,
    /// after checking that every declared output exists.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, LabError> {
        let mut t = Table::new(&["item", "status", "seconds", "detail"]);
        t.push(vec!["command".into(), String::new(), String::new(), self.command.clone()]);
        t.push(vec!["config_hash".into(), String::new(), String::new(), self.config_hash.clone()]);
        for r in &self.runs {
            t.push(vec![format!("run:{}", r.name), r.status.clone(), format!("{:.3}", r.seconds), r.detail.clone()]);
        }
        for p in &self.outputs {
            if !p.exists() {
                return Err(LabError::Io(format!("declared output {} is missing", p.display())));
            }
            t.push(vec![
                format!("output:{}", p.file_name().map(|s| s.to_string_lossy()).unwrap_or_default()),
                "present".into(),
                String::new(),
                p.display().to_string(),
            ]);
        }
        let status = match &self.failure {
            None => "ok".to_string(),
            Some(e) => format!("exit {}", e.exit_code()),
        };
        let detail = self.failure.as_ref().map(|e| e.to_string()).unwrap_or_default();
        t.push(vec!["result".into(), status, String::new(), detail]);
        let path = dir.join("manifest.csv");
        t.write(&path)?;
        Ok(path)
    }
}

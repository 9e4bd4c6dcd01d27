//! Optional JSON run configuration; explicit flags override file fields.

use std::path::PathBuf;

use serde::Deserialize;

use crate::Failure;

/// File-form of the command-line options. Every field is optional: the
/// effective value is flag, else file, else built-in default.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lengths: Option<String>,
    pub window: Option<String>,
    pub budget_k: Option<u32>,
    pub guard: Option<f64>,
    pub unions: Option<String>,
    pub truncations: Option<String>,
    pub expect_fail: Option<bool>,
    pub out: Option<String>,
}

impl RunConfig {
    pub fn load(path: Option<&PathBuf>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            Failure::malformed(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text).map_err(|e| {
            Failure::malformed(format!("bad config {}: {e}", path.display()))
        })
    }

    pub fn out_path(&self) -> Option<PathBuf> {
        self.out.as_ref().map(PathBuf::from)
    }
}

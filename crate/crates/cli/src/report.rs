//! Experiment reports: named pass/fail checks plus artifact bookkeeping,
//! serialized as a deterministic summary.

use anyhow::Result;
use std::path::PathBuf;

use crate::experiments::Ctx;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct Report {
    pub checks: Vec<Check>,
    pub artifacts: Vec<PathBuf>,
    pub numbers: Vec<(String, f64)>,
}

impl Report {
    pub fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    pub fn number(&mut self, name: &str, value: f64) {
        self.numbers.push((name.to_string(), value));
    }

    pub fn artifact(&mut self, path: PathBuf) {
        self.artifacts.push(path);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Summary JSON: versions, config hash, per-check outcomes, measured
    /// numbers and artifact list. Field order is fixed and no timestamps
    /// are included, so equal configurations produce identical bytes.
    pub fn write_summary(&self, experiment: &str, ctx: &Ctx) -> Result<()> {
        let checks: Vec<serde_json::Value> = self
            .checks
            .iter()
            .map(|c| {
                serde_json::json!({
                    "name": c.name,
                    "passed": c.passed,
                    "detail": c.detail,
                })
            })
            .collect();
        let numbers: serde_json::Map<String, serde_json::Value> = self
            .numbers
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::json!(v)))
            .collect();
        let artifacts: Vec<String> = self
            .artifacts
            .iter()
            .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
            .collect();
        let summary = serde_json::json!({
            "experiment": experiment,
            "version": env!("CARGO_PKG_VERSION"),
            "config_hash": ctx.cfg.hash(),
            "seed": ctx.cfg.run.seed,
            "defaulted_keys": ctx.cfg.defaulted,
            "passed": self.all_passed(),
            "checks": checks,
            "numbers": numbers,
            "artifacts": artifacts,
        });
        geodlab_core::export::write_json(&ctx.out.join("summary.json"), &summary)?;
        Ok(())
    }
}

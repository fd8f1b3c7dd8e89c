//! Run reports: scalar metrics, mass ledger, and provenance.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

/// Mass bookkeeping for a lattice run.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct MassLedger {
    pub initial: f64,
    /// Mass inside the declared interior at the end of the run.
    pub interior: f64,
    /// Mass on the grid but outside the interior.
    pub exterior: f64,
    /// Mass lost off the grid (open closure only).
    pub escaped: f64,
}

impl MassLedger {
    pub fn new(initial: f64, interior: f64, total_on_grid: f64) -> Self {
        Self {
            initial,
            interior,
            exterior: total_on_grid - interior,
            escaped: initial - total_on_grid,
        }
    }

    /// `interior + exterior + escaped` must return the initial mass.
    pub fn closure_defect(&self) -> f64 {
        (self.interior + self.exterior + self.escaped - self.initial).abs()
    }
}

/// Provenance block tying artifacts to their configuration.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Provenance {
    pub config_sha256: String,
    pub core_version: String,
    pub cli_version: String,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new<T: Serialize>(config: &T, seed: Option<u64>) -> Result<Self> {
        let bytes = serde_json::to_vec(config)
            .map_err(|e| CliError::validation(format!("cannot serialize config: {e}")))?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        Ok(Self {
            config_sha256: hex,
            core_version: jumplab_core::VERSION.to_string(),
            cli_version: crate::VERSION.to_string(),
            seed,
        })
    }
}

/// Scalar outcome of a run, serialized as `report.json` next to the CSVs.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ComparisonReport {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Sorted scalar metrics; keys are stable across runs.
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<MassLedger>,
    /// Artifact files written by the run, relative to the output directory.
    pub artifacts: Vec<String>,
    pub provenance: Provenance,
}

impl ComparisonReport {
    pub fn new(command: &str, scenario: Option<&str>, provenance: Provenance) -> Self {
        Self {
            command: command.to_string(),
            scenario: scenario.map(str::to_string),
            status: "ok".to_string(),
            failed_stage: None,
            error: None,
            metrics: BTreeMap::new(),
            mass: None,
            artifacts: Vec::new(),
            provenance,
        }
    }

    pub fn insert(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    pub fn mark_failed(&mut self, stage: &str, error: &str) {
        self.status = "failed".to_string();
        self.failed_stage = Some(stage.to_string());
        self.error = Some(error.to_string());
    }

    pub fn push_artifact(&mut self, name: &str) {
        self.artifacts.push(name.to_string());
    }

    /// All metrics must be finite before the report can be written.
    pub fn validate_finite(&self) -> Result<()> {
        for (k, v) in &self.metrics {
            if !v.is_finite() {
                return Err(CliError::numerical(format!("metric {k} is not finite ({v})")));
            }
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::numerical(format!("cannot serialize report: {e}")))?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ledger_closes_by_construction() {
        let ledger = MassLedger::new(1.0, 0.4, 0.9);
        assert!((ledger.exterior - 0.5).abs() < 1e-15);
        assert!((ledger.escaped - 0.1).abs() < 1e-15);
        assert!(ledger.closure_defect() < 1e-15);
    }

    #[test]
    fn provenance_hash_is_stable_and_seed_sensitive() {
        #[derive(Serialize)]
        struct Cfg {
            a: f64,
            seed: u64,
        }
        let p1 = Provenance::new(&Cfg { a: 1.0, seed: 7 }, Some(7)).unwrap();
        let p2 = Provenance::new(&Cfg { a: 1.0, seed: 7 }, Some(7)).unwrap();
        let p3 = Provenance::new(&Cfg { a: 1.0, seed: 8 }, Some(8)).unwrap();
        assert_eq!(p1.config_sha256, p2.config_sha256);
        assert_ne!(p1.config_sha256, p3.config_sha256);
        assert_eq!(p1.config_sha256.len(), 64);
    }

    #[test]
    fn non_finite_metrics_are_rejected() {
        let prov = Provenance::new(&serde_json::json!({}), None).unwrap();
        let mut report = ComparisonReport::new("test", None, prov);
        report.insert("bad", f64::NAN);
        assert!(report.validate_finite().is_err());
    }
}

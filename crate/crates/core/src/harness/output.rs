use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

use super::config::ExperimentConfig;

/// Writes rows as RFC-4180 CSV with a header; `None` fields are empty.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut out = csv::Writer::from_path(path)?;
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// SHA-256 of the config's canonical JSON serialization.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let text = serde_json::to_string(cfg).expect("config serializes");
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Run metadata. Everything except the timing fields is a function of the
/// config and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub crate_version: String,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub target_seeds: Vec<u64>,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
    pub threads: Option<usize>,
    pub created_unix: u64,
    pub wall_time_s: f64,
    pub job_wall_times_s: Vec<f64>,
}

impl Manifest {
    pub fn new(command: &str, cfg: &ExperimentConfig, threads: Option<usize>) -> Self {
        let target_seeds = (0..cfg.ensemble_size)
            .map(|id| super::seeds::target_seed(cfg.seed, id as u64))
            .collect();
        Manifest {
            command: command.to_string(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: config_hash(cfg),
            config: cfg.clone(),
            master_seed: cfg.seed,
            target_seeds,
            files: Vec::new(),
            warnings: Vec::new(),
            threads,
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            wall_time_s: 0.0,
            job_wall_times_s: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

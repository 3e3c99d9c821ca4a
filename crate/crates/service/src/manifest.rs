//! Run manifests (TOML) and per-seed episode logs (CSV).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use udrl_core::udrl::{Command, EpisodeRecord, TrainingConfig, TrainingLog};

use crate::error::{Result, ServiceError};
use crate::fsutil::write_atomic;

pub const MANIFEST_FILE: &str = "manifest.toml";

/// Artifacts of one training seed, relative to the manifest directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub model: PathBuf,
    pub log: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub training_csv: PathBuf,
    #[serde(default)]
    pub importance: Vec<PathBuf>,
    pub runs: Vec<SeedRun>,
    /// Shared configuration; `config.seed` is replaced by each run's seed.
    pub config: TrainingConfig,
}

impl RunManifest {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| ServiceError::Manifest {
            path: self.out_dir.join(MANIFEST_FILE),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_toml()?.as_bytes())
    }

    /// Accepts the manifest file itself or the directory holding it.
    pub fn load(path: &Path) -> Result<(RunManifest, PathBuf)> {
        let file = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
        let text = fs::read_to_string(&file).map_err(|e| ServiceError::io(&file, e))?;
        let manifest = toml::from_str(&text).map_err(|e| ServiceError::Manifest {
            path: file.clone(),
            message: e.to_string(),
        })?;
        let dir = file.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((manifest, dir))
    }

    /// Config for `seed` with the model seed following the run seed.
    pub fn config_for(&self, seed: u64) -> TrainingConfig {
        seeded_config(&self.config, seed)
    }
}

pub fn seeded_config(base: &TrainingConfig, seed: u64) -> TrainingConfig {
    let mut c = base.clone();
    c.seed = seed;
    c.model.seed = seed;
    c
}

#[derive(Debug, Serialize, Deserialize)]
struct LogRow {
    episode: usize,
    total_return: f64,
    length: usize,
    d_r: Option<f64>,
    d_t: Option<u32>,
    epsilon: f64,
    wall_time_s: f64,
}

pub fn save_log(log: &TrainingLog, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| ServiceError::io(path, e.into());
    for r in &log.records {
        w.serialize(LogRow {
            episode: r.episode,
            total_return: r.total_return,
            length: r.length,
            d_r: r.command.map(|c| c.d_r),
            d_t: r.command.map(|c| c.d_t),
            epsilon: r.epsilon,
            wall_time_s: r.wall_time_s,
        })
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| ServiceError::io(path, e.into_error()))?;
    write_atomic(path, &bytes)
}

pub fn load_log(path: &Path, seed: u64) -> Result<TrainingLog> {
    let mut r = csv::Reader::from_path(path).map_err(|e| ServiceError::io(path, e.into()))?;
    let mut records = Vec::new();
    for row in r.deserialize::<LogRow>() {
        let row = row.map_err(|e| ServiceError::Manifest {
            path: path.into(),
            message: e.to_string(),
        })?;
        let command = match (row.d_r, row.d_t) {
            (Some(d_r), Some(d_t)) => Some(Command::new(d_r, d_t)),
            _ => None,
        };
        records.push(EpisodeRecord {
            episode: row.episode,
            total_return: row.total_return,
            length: row.length,
            command,
            epsilon: row.epsilon,
            wall_time_s: row.wall_time_s,
        });
    }
    Ok(TrainingLog { seed, records })
}

//! Run configuration, manifests and checkpointing.
//!
//! Configs are human-editable TOML (`key = value`, flat). Every output file
//! is accompanied by a JSON manifest capturing the config echo, seeds,
//! resolved quadrature settings, timings and the crate version, enough to
//! reproduce the run exactly.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_c() -> f64 {
    1.0
}
fn default_ng() -> usize {
    20
}
fn default_realizations() -> usize {
    100
}
fn default_threads() -> usize {
    0 // 0 = all physical cores
}
fn default_out() -> String {
    "out".into()
}
fn default_eps() -> f64 {
    8.0
}
fn default_disk_diameter() -> f64 {
    16.0
}
fn default_disk_thickness() -> usize {
    2
}
fn default_disk_gap() -> usize {
    2
}
fn default_eps_a() -> f64 {
    5.0
}
fn default_eps_b() -> f64 {
    10.0
}

/// Full run description; round-trips through TOML unchanged.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// torque3d | crossover2d | rough2d | flat2d
    pub experiment: String,
    /// Per-axis lattice extents: two entries for 2D, three for 3D.
    pub extents: Vec<usize>,
    /// Speed of light in lattice units.
    #[serde(default = "default_c")]
    pub c: f64,
    /// Quadrature node count N_g.
    #[serde(default = "default_ng")]
    pub ng: usize,
    /// Frequency scale; omitted = automatic selection.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Zero-frequency permittivity of particles/surfaces (constant model
    /// when no omega0 list is given).
    #[serde(default = "default_eps")]
    pub epsilon: f64,
    /// Single-pole crossover list omega0/c; one curve per value. Empty
    /// means a frequency-independent permittivity.
    #[serde(default)]
    pub omega0: Vec<f64>,
    /// Probe/particle separation ladder; empty = geometric ladder.
    #[serde(default)]
    pub separations: Vec<usize>,
    /// Torque angle grid in radians; empty = multiples of pi/8 up to pi/2.
    #[serde(default)]
    pub angles: Vec<f64>,
    #[serde(default = "default_disk_diameter")]
    pub disk_diameter: f64,
    #[serde(default = "default_disk_thickness")]
    pub disk_thickness: usize,
    #[serde(default = "default_disk_gap")]
    pub disk_gap: usize,
    #[serde(default = "default_eps_a")]
    pub eps_a: f64,
    #[serde(default = "default_eps_b")]
    pub eps_b: f64,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    /// Power-law fit window [r_lo, r_hi]; omitted = ladder minus lattice
    /// artifacts (r < 6) and the two largest points.
    #[serde(default)]
    pub fit_window: Option<[f64; 2]>,
    #[serde(default = "default_out")]
    pub out_dir: String,
    #[serde(default)]
    pub resume: bool,
    #[serde(default = "default_threads")]
    pub threads: usize,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let want_dim = match self.experiment.as_str() {
            "torque3d" => 3,
            "crossover2d" | "rough2d" | "flat2d" => 2,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown experiment '{other}' (torque3d, crossover2d, rough2d, flat2d)"
                )))
            }
        };
        if self.extents.len() != want_dim {
            return Err(Error::InvalidConfig(format!(
                "experiment '{}' needs {want_dim} extents, got {}",
                self.experiment,
                self.extents.len()
            )));
        }
        for (axis, &e) in self.extents.iter().enumerate() {
            if e < 4 {
                return Err(Error::InvalidConfig(format!(
                    "extent {e} on axis {axis} below minimum 4"
                )));
            }
        }
        if self.c <= 0.0 || self.epsilon <= 0.0 {
            return Err(Error::InvalidConfig(
                "c and epsilon must be positive".into(),
            ));
        }
        if let Some(a) = self.alpha {
            if a <= 0.0 {
                return Err(Error::InvalidConfig("alpha must be positive".into()));
            }
        }
        if self.ng < 2 {
            return Err(Error::InvalidConfig("ng must be at least 2".into()));
        }
        if self.omega0.iter().any(|&w| w <= 0.0) {
            return Err(Error::InvalidConfig("omega0 values must be positive".into()));
        }
        Ok(())
    }
}

/// Manifest persisted next to every result file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub experiment: String,
    pub config: RunConfig,
    /// Resolved frequency scale(s) actually used, keyed by curve label.
    pub alpha_used: HashMap<String, f64>,
    pub seeds: Vec<u64>,
    pub timings_seconds: HashMap<String, f64>,
    /// Extra counters: factorizations, effective realization counts, ...
    pub counters: HashMap<String, u64>,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            experiment: config.experiment.clone(),
            config: config.clone(),
            alpha_used: HashMap::new(),
            seeds: Vec::new(),
            timings_seconds: HashMap::new(),
            counters: HashMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// CSV with '#'-prefixed metadata lines, a header row, then data rows.
pub struct CsvWriter {
    file: File,
}

impl CsvWriter {
    pub fn create(path: &Path, metadata: &[String], header: &[&str]) -> Result<Self> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut file = File::create(path)?;
        for line in metadata {
            writeln!(file, "# {line}")?;
        }
        writeln!(file, "{}", header.join(","))?;
        Ok(Self { file })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        writeln!(self.file, "{}", fields.join(","))?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointRecord {
    key: String,
    node: usize,
    value: f64,
}

/// Append-only store of per-(experiment point, frequency node) scalars,
/// backed by a JSON-lines file so interrupted sweeps resume without
/// refactorizing completed nodes.
pub struct Checkpoint {
    entries: Mutex<HashMap<(String, usize), f64>>,
    file: Mutex<File>,
    pub path: PathBuf,
}

impl Checkpoint {
    pub fn open(path: &Path, resume: bool) -> Result<Self> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut entries = HashMap::new();
        if resume && path.exists() {
            let reader = BufReader::new(File::open(path)?);
            for line in reader.lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: CheckpointRecord =
                    serde_json::from_str(&line).map_err(|e| Error::Serde(e.to_string()))?;
                entries.insert((rec.key, rec.node), rec.value);
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .truncate(false)
            .open(path)?;
        Ok(Self {
            entries: Mutex::new(entries),
            file: Mutex::new(file),
            path: path.to_path_buf(),
        })
    }

    pub fn get(&self, key: &str, node: usize) -> Option<f64> {
        self.entries
            .lock()
            .unwrap()
            .get(&(key.to_string(), node))
            .copied()
    }

    pub fn put(&self, key: &str, node: usize, value: f64) {
        let rec = CheckpointRecord {
            key: key.to_string(),
            node,
            value,
        };
        let line = serde_json::to_string(&rec).expect("record serializes");
        {
            let mut f = self.file.lock().unwrap();
            let _ = writeln!(f, "{line}");
            let _ = f.flush();
        }
        self.entries
            .lock()
            .unwrap()
            .insert((rec.key, rec.node), rec.value);
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

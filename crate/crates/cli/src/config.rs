//! Run configuration: a JSON file with a versioned `schema` field. Every
//! section is optional; the resolved configuration, defaults included, is
//! written into each output's metadata.

use std::path::{Path, PathBuf};

use ecdwit_core::optimizer::OptimizerConfig;
use ecdwit_core::phase_space::GridConfig;
use ecdwit_core::shot::Layout;
use ecdwit_core::StateSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA: &str = "ecdwit/1";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    #[serde(default = "default_state")]
    pub state: StateSpec,
    /// Per-mode Fock cutoff; automatic when absent.
    #[serde(default)]
    pub cutoff: Option<usize>,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub points: PointsConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub shots: ShotConfig,
    #[serde(default)]
    pub reproduce: ReproduceConfig,
}

fn default_state() -> StateSpec {
    StateSpec::FockBell {
        theta: std::f64::consts::FRAC_PI_4,
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA.into(),
            state: default_state(),
            cutoff: None,
            noise: NoiseConfig::default(),
            points: PointsConfig::default(),
            optimizer: OptimizerConfig::default(),
            grid: GridConfig::default(),
            shots: ShotConfig::default(),
            reproduce: ReproduceConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Photon loss applied to every mode.
    pub eta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointsSource {
    /// Closed-form four-point sets of the example families.
    Paper,
    /// A point-set JSON file.
    File,
    /// Heuristic start followed by gradient descent.
    Optimize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointsConfig {
    pub source: PointsSource,
    pub n: usize,
    pub path: Option<PathBuf>,
}

impl Default for PointsConfig {
    fn default() -> Self {
        Self {
            source: PointsSource::Paper,
            n: 4,
            path: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShotConfig {
    pub layout: Layout,
    pub shots: u64,
    pub confidence: f64,
    /// Reuse settings of pairs with equal (or opposite) displacement.
    pub dedup: bool,
}

impl Default for ShotConfig {
    fn default() -> Self {
        Self {
            layout: Layout::Chained,
            shots: 10_000,
            confidence: 0.95,
            dedup: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => vec![],
            1 => vec![self.start],
            n => (0..n)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReproduceConfig {
    /// Replaces the figure's default sweep.
    pub sweep: Option<Sweep>,
    /// Size of the optimised point set for the extra fig2 column; 0 skips it.
    pub large_n: usize,
    /// Size of the point set optimised on the lossless state for the noise figure.
    pub noisy_n: usize,
    /// Side of the square lattice used as an extra start when re-optimising
    /// for a noisy state; 0 disables it.
    pub lattice_side: usize,
}

impl Default for ReproduceConfig {
    fn default() -> Self {
        Self {
            sweep: None,
            large_n: 100,
            noisy_n: 16,
            lattice_side: 10,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let cfg: RunConfig = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.schema != SCHEMA {
            return bad(format!(
                "unsupported schema {:?}, expected {SCHEMA:?}",
                self.schema
            ));
        }
        if !(0.0..=1.0).contains(&self.noise.eta) {
            return bad(format!("noise.eta = {} outside [0, 1]", self.noise.eta));
        }
        if self.points.n < 2 {
            return bad("points.n must be at least 2".into());
        }
        if self.points.source == PointsSource::File && self.points.path.is_none() {
            return bad("points.source = file needs points.path".into());
        }
        if self.shots.shots == 0 {
            return bad("shots.shots must be positive".into());
        }
        if !(self.shots.confidence > 0.0 && self.shots.confidence < 1.0) {
            return bad("shots.confidence must lie in (0, 1)".into());
        }
        if let Some(s) = &self.reproduce.sweep {
            if s.points == 0 || !s.start.is_finite() || !s.stop.is_finite() {
                return bad("reproduce.sweep needs finite bounds and at least one point".into());
            }
        }
        if self.reproduce.noisy_n < 2 {
            return bad("reproduce.noisy_n must be at least 2".into());
        }
        self.optimizer
            .validate()
            .map_err(|e| CliError::Config(format!("optimizer: {e}")))
    }
}

//! Run configuration read from TOML.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use coastopt_core::fem::Order;
use coastopt_core::mesh::{BoundaryTag, GroupRole, PhysicalNames, Region};
use coastopt_core::objective::ObjectiveSpec;
use coastopt_core::optimize::{OptimizeConfig, StepNormalization, TopologyConfig};
use coastopt_core::state::Regime;
use coastopt_core::wave::{berkhoff_alpha, isaacson_alpha, WaveSpec};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

/// Absorption coefficient: a complex number `[re, im]`, or derived from a
/// reflection coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Alpha {
    Value([f64; 2]),
    Isaacson { reflection: f64 },
    Berkhoff { reflection: f64, beta: f64, gamma: f64 },
}

impl Default for Alpha {
    fn default() -> Self {
        Alpha::Value([0.0, 0.0])
    }
}

impl Alpha {
    fn resolve(&self) -> Result<Complex<f64>, ConfigError> {
        match *self {
            Alpha::Value([re, im]) => Ok(Complex::new(re, im)),
            Alpha::Isaacson { reflection } => Ok(isaacson_alpha(reflection)),
            Alpha::Berkhoff { reflection, beta, gamma } => {
                berkhoff_alpha(reflection, beta, gamma).map_err(|e| invalid(e.to_string()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveConfig {
    pub k: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Propagation angle in multiples of pi.
    pub angle_pi: f64,
    #[serde(default)]
    pub alpha_coast: Alpha,
    #[serde(default)]
    pub alpha_obstacle: Alpha,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RegimeConfig {
    #[default]
    Scatterer,
    Transmissive { phi1: f64, phi2: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub u_target: f64,
    pub xi: f64,
    pub nu1: f64,
    pub nu2: f64,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            u_target: 0.0,
            xi: 0.0,
            nu1: 0.0,
            nu2: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElasticityConfig {
    pub mu_min: f64,
    pub mu_max: f64,
}

impl Default for ElasticityConfig {
    fn default() -> Self {
        Self {
            mu_min: 10.0,
            mu_max: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    Raw,
    #[default]
    MaxNorm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineSearchConfig {
    pub rho: f64,
    pub shrink: f64,
    pub max_trials: usize,
    pub normalization: Normalization,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            rho: 0.04,
            shrink: 0.5,
            max_trials: 25,
            normalization: Normalization::MaxNorm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoppingConfig {
    pub eps_stop: f64,
    pub max_iterations: usize,
}

impl Default for StoppingConfig {
    fn default() -> Self {
        Self {
            eps_stop: 1e-6,
            max_iterations: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfigFile {
    pub quantile: f64,
    pub eps: Option<f64>,
    pub min_points: usize,
    pub pad: Option<f64>,
    pub margin: Option<f64>,
}

impl Default for TopologyConfigFile {
    fn default() -> Self {
        let d = TopologyConfig::<f64>::default();
        Self {
            quantile: d.quantile,
            eps: d.eps,
            min_points: d.min_points,
            pad: d.pad,
            margin: d.margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write a VTK snapshot every this many iterations; 0 disables them.
    pub snapshot_stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            snapshot_stride: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: PathBuf,
    /// Finite element order, 1 or 2.
    #[serde(default = "default_order")]
    pub order: u8,
    /// Extra physical-group names mapped to `G1`..`G5`, `OMEGA` or `D`.
    #[serde(default)]
    pub physical_names: BTreeMap<String, String>,
    pub waves: Vec<WaveConfig>,
    #[serde(default)]
    pub regime: RegimeConfig,
    #[serde(default)]
    pub objective: ObjectiveConfig,
    #[serde(default)]
    pub elasticity: ElasticityConfig,
    #[serde(default)]
    pub line_search: LineSearchConfig,
    #[serde(default)]
    pub stopping: StoppingConfig,
    #[serde(default)]
    pub topology: TopologyConfigFile,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_order() -> u8 {
    1
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Reads the file; a relative mesh path is taken relative to it.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut c = Self::from_toml(&text, path)?;
        if c.mesh.is_relative() {
            if let Some(dir) = path.parent() {
                c.mesh = dir.join(&c.mesh);
            }
        }
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    pub fn physical_names(&self) -> Result<PhysicalNames, ConfigError> {
        let mut names = PhysicalNames::default();
        for (name, role) in &self.physical_names {
            let r = match role.as_str() {
                "OMEGA" => GroupRole::Region(Region::Omega),
                "D" => GroupRole::Region(Region::Obstacle),
                other => GroupRole::Boundary(
                    *BoundaryTag::ALL
                        .iter()
                        .find(|t| t.name() == other)
                        .ok_or_else(|| invalid(format!("physical name `{name}` maps to unknown role `{other}`")))?,
                ),
            };
            names.insert(name, r);
        }
        Ok(names)
    }

    pub fn waves(&self) -> Result<Vec<WaveSpec<f64>>, ConfigError> {
        if self.waves.is_empty() {
            return Err(invalid("at least one [[waves]] entry is required"));
        }
        self.waves
            .iter()
            .map(|w| {
                let mut s = WaveSpec::new(w.k, w.amplitude, w.angle_pi * PI, w.alpha_coast.resolve()?).with_weight(w.weight);
                s.alpha_obstacle = w.alpha_obstacle.resolve()?;
                s.validate().map_err(|e| invalid(e.to_string()))?;
                Ok(s)
            })
            .collect()
    }

    pub fn optimize_config(&self) -> Result<OptimizeConfig<f64>, ConfigError> {
        let mut spec = ObjectiveSpec::new(self.waves()?);
        spec.u_target = self.objective.u_target;
        spec.xi = self.objective.xi;
        spec.nu1 = self.objective.nu1;
        spec.nu2 = self.objective.nu2;
        let regime = match self.regime {
            RegimeConfig::Scatterer => Regime::Scatterer,
            RegimeConfig::Transmissive { phi1, phi2 } => Regime::Transmissive { phi1, phi2 },
        };
        let mut c = OptimizeConfig::new(spec, regime);
        c.order = match self.order {
            1 => Order::P1,
            2 => Order::P2,
            o => return Err(invalid(format!("order must be 1 or 2, got {o}"))),
        };
        c.mu_min = self.elasticity.mu_min;
        c.mu_max = self.elasticity.mu_max;
        c.line_search.rho = self.line_search.rho;
        c.line_search.shrink = self.line_search.shrink;
        c.line_search.max_trials = self.line_search.max_trials;
        c.normalization = match self.line_search.normalization {
            Normalization::Raw => StepNormalization::Raw,
            Normalization::MaxNorm => StepNormalization::MaxNorm,
        };
        c.eps_stop = self.stopping.eps_stop;
        c.max_iterations = self.stopping.max_iterations;
        c.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(c)
    }

    pub fn topology_config(&self) -> Result<TopologyConfig<f64>, ConfigError> {
        let t = &self.topology;
        if !(t.quantile > 0.0 && t.quantile < 1.0) {
            return Err(invalid(format!("topology.quantile must lie in (0, 1), got {}", t.quantile)));
        }
        if t.eps.is_some_and(|e| !(e > 0.0)) || t.min_points == 0 {
            return Err(invalid("topology.eps must be positive and topology.min_points at least 1"));
        }
        Ok(TopologyConfig {
            quantile: t.quantile,
            eps: t.eps,
            min_points: t.min_points,
            pad: t.pad,
            margin: t.margin,
        })
    }
}

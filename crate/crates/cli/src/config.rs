//! Experiment configuration, parsed strictly.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 7;
pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_DIM: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Frames,
    Wasserstein,
    Decay,
    Markov,
    Dpp,
    Gaussian,
    Translate,
    Kl,
    VerifyAll,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Command::Frames => "frames",
            Command::Wasserstein => "wasserstein",
            Command::Decay => "decay",
            Command::Markov => "markov",
            Command::Dpp => "dpp",
            Command::Gaussian => "gaussian",
            Command::Translate => "translate",
            Command::Kl => "kl",
            Command::VerifyAll => "verify-all",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GaussianCheck {
    Isometry,
    Charfn,
    Moments,
    Covariance,
    Reconstruct,
    Projection,
}

impl GaussianCheck {
    pub const ALL: [GaussianCheck; 6] = [
        GaussianCheck::Isometry,
        GaussianCheck::Charfn,
        GaussianCheck::Moments,
        GaussianCheck::Covariance,
        GaussianCheck::Reconstruct,
        GaussianCheck::Projection,
    ];
}

/// Command-specific settings. Unused fields are ignored by other commands.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    /// Zero-based frame index used as the chain's start state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_vector: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub bruteforce: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<GaussianCheck>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Overrides of [`Tolerances`] by key.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<PathBuf>,
    #[serde(default)]
    pub options: Options,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

fn default_dim() -> usize {
    DEFAULT_DIM
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            dim: DEFAULT_DIM,
            tolerances: BTreeMap::new(),
            inputs: Vec::new(),
            options: Options::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: Self = serde_json::from_str(text)
            .map_err(|source| ConfigError::Json { context: "config".into(), source })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.samples == 0 {
            return Err(ConfigError::Invalid("samples must be positive".into()));
        }
        if self.dim == 0 {
            return Err(ConfigError::Invalid("dim must be positive".into()));
        }
        if self.options.horizon == Some(0) {
            return Err(ConfigError::Invalid("horizon must be positive".into()));
        }
        if self.options.paths == Some(0) {
            return Err(ConfigError::Invalid("paths must be positive".into()));
        }
        if self.options.start_index.is_some() && self.options.start_vector.is_some() {
            return Err(ConfigError::Invalid("start_index and start_vector are exclusive".into()));
        }
        Tolerances::resolve(&self.tolerances)?;
        let needed = match self.command {
            Command::Frames | Command::Decay | Command::Markov | Command::Dpp | Command::Kl => 1,
            Command::Wasserstein => 2,
            Command::Gaussian | Command::Translate | Command::VerifyAll => 0,
        };
        if self.inputs.len() != needed {
            return Err(ConfigError::Invalid(format!(
                "{} takes {needed} input file(s), got {}",
                self.command,
                self.inputs.len()
            )));
        }
        if self.command == Command::Kl && self.options.x.is_none() {
            return Err(ConfigError::Invalid("kl requires x".into()));
        }
        if self.command == Command::Translate && (self.options.x.is_none() || self.options.y.is_none()) {
            return Err(ConfigError::Invalid("translate requires x and y".into()));
        }
        Ok(())
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances::resolve(&self.tolerances).expect("validated")
    }
}

/// Pass thresholds used by the suites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Largest accepted `|z|` for Monte-Carlo estimates.
    pub z_max: f64,
    /// Absolute or relative slack for identities exact in exact arithmetic.
    pub exact: f64,
    /// Slack in frame inequalities.
    pub ineq: f64,
    /// Agreement of eigenvalues and reconstructions.
    pub spectrum: f64,
    /// Agreement of transport costs.
    pub w2: f64,
    /// Largest accepted total-variation distance for sampler checks.
    pub tv_max: f64,
    /// Smallest accepted chi-square p-value.
    pub p_min: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { z_max: 4.0, exact: 1e-12, ineq: 1e-10, spectrum: 1e-9, w2: 1e-9, tv_max: 0.02, p_min: 1e-3 }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 7] = ["z_max", "exact", "ineq", "spectrum", "w2", "tv_max", "p_min"];

    pub fn resolve(overrides: &BTreeMap<String, f64>) -> Result<Self, ConfigError> {
        let mut t = Self::default();
        for (key, &value) in overrides {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError::Invalid(format!("tolerance {key} must be positive and finite")));
            }
            let slot = match key.as_str() {
                "z_max" => &mut t.z_max,
                "exact" => &mut t.exact,
                "ineq" => &mut t.ineq,
                "spectrum" => &mut t.spectrum,
                "w2" => &mut t.w2,
                "tv_max" => &mut t.tv_max,
                "p_min" => &mut t.p_min,
                _ => {
                    return Err(ConfigError::Invalid(format!(
                        "unknown tolerance key `{key}`, expected one of {}",
                        Self::KEYS.join(", ")
                    )))
                }
            };
            *slot = value;
        }
        Ok(t)
    }
}

pub fn read_text(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })
}

/// Reads and strictly parses a JSON input file.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| ConfigError::Json { context: path.display().to_string(), source })
}

/// A vector given inline as a JSON array or as a path to a file holding one.
pub fn parse_vector_arg(arg: &str) -> Result<Vec<f64>, ConfigError> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('[') {
        serde_json::from_str(trimmed).map_err(|source| ConfigError::Json { context: "inline vector".into(), source })
    } else {
        load_json(Path::new(arg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_top_level_key_is_rejected() {
        let err = ExperimentConfig::from_json(r#"{"command": "gaussian", "sede": 3}"#).unwrap_err();
        assert!(err.to_string().contains("sede"), "{err}");
    }

    #[test]
    fn unknown_option_is_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"command": "gaussian", "options": {"horizn": 2}}"#).is_err());
    }

    #[test]
    fn unknown_tolerance_key_is_rejected() {
        let err = ExperimentConfig::from_json(r#"{"command": "gaussian", "tolerances": {"zmax": 3}}"#).unwrap_err();
        assert!(err.to_string().contains("zmax"));
    }

    #[test]
    fn tolerance_override_applies() {
        let c = ExperimentConfig::from_json(r#"{"command": "gaussian", "tolerances": {"z_max": 5}}"#).unwrap();
        assert_eq!(c.tolerances().z_max, 5.0);
        assert_eq!(c.tolerances().exact, 1e-12);
    }

    #[test]
    fn defaults_and_positivity() {
        let c = ExperimentConfig::from_json(r#"{"command": "verify-all"}"#).unwrap();
        assert_eq!((c.seed, c.samples, c.dim), (DEFAULT_SEED, DEFAULT_SAMPLES, DEFAULT_DIM));
        assert!(ExperimentConfig::from_json(r#"{"command": "verify-all", "samples": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"command": "frames"}"#).is_err());
    }

    #[test]
    fn json_errors_carry_position() {
        let err = ExperimentConfig::from_json("{\n  \"command\": \"gaussian\",\n  \"seed\": x\n}").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn inline_vectors() {
        assert_eq!(parse_vector_arg("[1, 2.5]").unwrap(), vec![1.0, 2.5]);
        assert!(parse_vector_arg("[1, ").is_err());
    }
}

//! Run configuration: JSON ingestion, defaults, validation, manifests.
//!
//! Parsing is strict: unknown fields are rejected everywhere, since a silent
//! typo in a Greek-letter coefficient is the dominant operator error.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

use crate::dynamics::SecurityTiming;
use crate::mechanisms::{MechanismConfig, MechanismError};
use crate::params::{OutOfRange, Parameters};
use crate::strategy::StrategySpec;

/// Pinned traits for one founder; when present, founders are not sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FounderSpec {
    pub compute: f64,
    pub expertise: f64,
    pub risk_tolerance: f64,
}

impl Default for FounderSpec {
    fn default() -> Self {
        FounderSpec {
            compute: 1.0,
            expertise: 0.5,
            risk_tolerance: 0.5,
        }
    }
}

/// Everything a run needs. A config plus a master seed reproduces every
/// trajectory byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub schema_version: u32,
    /// Master seed; every stream in the run derives from it.
    pub seed: u64,
    /// Monte Carlo ensemble size.
    pub episodes: u32,
    pub params: Parameters,
    pub mechanisms: MechanismConfig,
    /// Strategy for every player without an explicit override.
    pub default_strategy: StrategySpec,
    /// Per-founder strategy overrides, keyed by player id.
    pub player_strategies: BTreeMap<u32, StrategySpec>,
    /// Pinned founder traits; omit to sample them from the configured
    /// distributions. Length must equal `params.n_initial` when present.
    pub founders: Option<Vec<FounderSpec>>,
    /// Which snapshots the security-stock update reads.
    pub security_timing: SecurityTiming,
    /// Founders' initial capability.
    pub initial_capability: f64,
    /// Largest acceptable truncation-tail bound in analysis runs.
    pub tail_tolerance: f64,
    /// Required precision (CI width) for deviation tests, if any.
    pub target_ci_width: Option<f64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            schema_version: 1,
            seed: 0,
            episodes: 1,
            params: Parameters::default(),
            mechanisms: MechanismConfig::default(),
            default_strategy: StrategySpec::default(),
            player_strategies: BTreeMap::new(),
            founders: None,
            security_timing: SecurityTiming::Eq4,
            initial_capability: 0.0,
            tail_tolerance: 1e-3,
            target_ci_width: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    OutOfRange(#[from] OutOfRange),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl SimulationConfig {
    /// Default config with a chosen master seed.
    pub fn with_seed(seed: u64) -> Self {
        SimulationConfig {
            seed,
            ..SimulationConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != 1 {
            return Err(ConfigError::Invalid(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        if self.episodes < 1 {
            return Err(ConfigError::Invalid("episodes must be at least 1".into()));
        }
        self.params.validate()?;
        self.mechanisms.validate()?;
        self.default_strategy.validate()?;
        for (player, spec) in &self.player_strategies {
            if *player >= self.params.n_initial {
                return Err(ConfigError::Invalid(format!(
                    "player_strategies key {player} is not a founder (n_initial = {})",
                    self.params.n_initial
                )));
            }
            spec.validate()?;
        }
        if let Some(founders) = &self.founders {
            if founders.len() != self.params.n_initial as usize {
                return Err(ConfigError::Invalid(format!(
                    "founders has {} entries but n_initial = {}",
                    founders.len(),
                    self.params.n_initial
                )));
            }
            for (i, f) in founders.iter().enumerate() {
                if !(f.compute > 0.0 && f.compute.is_finite()) {
                    return Err(ConfigError::Invalid(format!(
                        "founder {i}: compute must be strictly positive"
                    )));
                }
                if !(0.0..=1.0).contains(&f.expertise) {
                    return Err(ConfigError::Invalid(format!(
                        "founder {i}: expertise must lie in [0, 1]"
                    )));
                }
                if !(0.0..=1.0).contains(&f.risk_tolerance) {
                    return Err(ConfigError::Invalid(format!(
                        "founder {i}: risk_tolerance must lie in [0, 1]"
                    )));
                }
            }
        }
        if !(self.initial_capability >= 0.0 && self.initial_capability.is_finite()) {
            return Err(ConfigError::Invalid(
                "initial_capability must be nonnegative and finite".into(),
            ));
        }
        if !(self.tail_tolerance > 0.0) {
            return Err(ConfigError::Invalid(
                "tail_tolerance must be strictly positive".into(),
            ));
        }
        Ok(())
    }

    /// Strategy spec in force for a player id.
    pub fn strategy_for(&self, player: u32) -> &StrategySpec {
        self.player_strategies
            .get(&player)
            .unwrap_or(&self.default_strategy)
    }
}

/// Set a model coefficient or mechanism field by name, as used by parameter
/// sweeps. Count-valued fields take nonnegative integers.
pub fn set_parameter(
    config: &mut SimulationConfig,
    name: &str,
    value: f64,
) -> Result<(), ConfigError> {
    let p = &mut config.params;
    let m = &mut config.mechanisms;
    let as_count = |value: f64| -> Result<u32, ConfigError> {
        if value >= 0.0 && value.fract() == 0.0 && value <= f64::from(u32::MAX) {
            Ok(value as u32)
        } else {
            Err(ConfigError::Invalid(format!(
                "`{name}` takes a nonnegative integer, got {value}"
            )))
        }
    };
    match name {
        "alpha" => p.alpha = value,
        "beta" => p.beta = value,
        "gamma" => p.gamma = value,
        "lambda_econ" => p.lambda_econ = value,
        "mu" => p.mu = value,
        "phi" => p.phi = value,
        "sigma" => p.sigma = value,
        "xi" => p.xi = value,
        "eta" => p.eta = value,
        "theta" => p.theta = value,
        "delta" => p.delta = value,
        "mu_c" => p.mu_c = value,
        "sigma_c" => p.sigma_c = value,
        "p_audit" => p.p_audit = value,
        "p_detection" => p.p_detection = value,
        "lambda_entry" => p.lambda_entry = value,
        "t_bar" => p.t_bar = value,
        "horizon" => p.horizon = as_count(value)?,
        "n_initial" => p.n_initial = as_count(value)?,
        "base_audit_frequency" => m.base_audit_frequency = value,
        "prereg_audit_boost" => m.prereg_audit_boost = value,
        "tau" => m.tau = as_count(value)?,
        "sanction_delay" => m.sanction_delay = as_count(value)?,
        "redemption_steps" => m.redemption_steps = as_count(value)?,
        "r_cap" => m.r_cap = value,
        other => {
            return Err(ConfigError::Invalid(format!(
                "unknown sweep parameter `{other}`"
            )))
        }
    }
    Ok(())
}

/// Build identity recorded in manifests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildInfo {
    pub name: String,
    pub version: String,
}

impl Default for BuildInfo {
    fn default() -> Self {
        BuildInfo {
            name: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Output files written by a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ManifestOutputs {
    pub trajectory: String,
    pub stats: String,
}

/// Everything needed to reproduce a run bit-exactly: the fully resolved
/// config (defaults applied), the build that produced it, and the outputs
/// it wrote. Feeding a manifest back in as `--config` replays the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub build: BuildInfo,
    pub config: SimulationConfig,
    pub outputs: ManifestOutputs,
}

impl Manifest {
    pub fn new(config: SimulationConfig, outputs: ManifestOutputs) -> Self {
        Manifest {
            schema_version: 1,
            build: BuildInfo::default(),
            config,
            outputs,
        }
    }
}

/// Parse a config file (or a manifest; its embedded config is used), apply
/// defaults, and validate.
pub fn parse_config(path: &Path) -> Result<SimulationConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

/// As [`parse_config`], for in-memory JSON.
pub fn parse_config_str(text: &str) -> Result<SimulationConfig, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let config = if value.get("config").is_some() {
        serde_json::from_value::<Manifest>(value)?.config
    } else {
        serde_json::from_value::<SimulationConfig>(value)?
    };
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_all_defaults() {
        let config = parse_config_str(r#"{"seed": 42}"#).unwrap();
        assert_eq!(config.seed, 42);
        assert_eq!(config.episodes, 1);
        assert_eq!(config.params, Parameters::default());
        assert_eq!(config.params.phi, 0.1);
        assert_eq!(config.params.p_detection, 0.8);
        assert_eq!(config.params.lambda_entry, 0.05);
        assert_eq!(config.security_timing, SecurityTiming::Eq4);
    }

    #[test]
    fn out_of_range_delta_is_a_validation_error() {
        let err = parse_config_str(r#"{"seed": 1, "params": {"delta": 1.5}}"#).unwrap_err();
        match err {
            ConfigError::OutOfRange(e) => assert_eq!(e.field, "delta"),
            other => panic!("expected OutOfRange, got {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected_by_name() {
        let err = parse_config_str(r#"{"seed": 1, "gamma": 0.3}"#).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("gamma"), "message: {message}");
        let err = parse_config_str(r#"{"seed": 1, "params": {"gama": 0.3}}"#).unwrap_err();
        assert!(err.to_string().contains("gama"));
    }

    #[test]
    fn manifest_round_trips_through_parse() {
        let config = SimulationConfig::with_seed(7);
        let manifest = Manifest::new(config.clone(), ManifestOutputs::default());
        let text = serde_json::to_string_pretty(&manifest).unwrap();
        let reparsed = parse_config_str(&text).unwrap();
        assert_eq!(reparsed, config);
    }

    #[test]
    fn founder_count_must_match_n_initial() {
        let text = r#"{"seed": 1, "founders": [{"compute": 1.0}]}"#;
        let err = parse_config_str(text).unwrap_err();
        assert!(err.to_string().contains("n_initial"));
    }

    #[test]
    fn player_strategy_keys_must_be_founders() {
        let text = r#"{"seed": 1, "player_strategies": {"9": {"kind": "always-defect"}}}"#;
        let err = parse_config_str(text).unwrap_err();
        assert!(err.to_string().contains("founder"));
    }

    #[test]
    fn config_json_round_trip_preserves_value() {
        let mut config = SimulationConfig::with_seed(3);
        config.episodes = 12;
        config.params.xi = 0.07;
        config
            .player_strategies
            .insert(2, StrategySpec::of_kind(crate::strategy::StrategyKind::AlwaysDefect));
        let text = serde_json::to_string(&config).unwrap();
        let back = parse_config_str(&text).unwrap();
        assert_eq!(back, config);
    }
}

//! Run configuration and the persisted model artifact.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detector::{Averaging, ThresholdModel};
use crate::error::{Error, Result};
use crate::features::{PreprocessModel, FEATURE_SCHEMA};
use crate::federated::AggregationTree;
use crate::optimizer::OptimizerSettings;
use crate::qae::{ParamVector, QaeConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainingMode {
    Centralized,
    Fedavg,
    Hierarchical,
}

impl TrainingMode {
    pub const ALL: [TrainingMode; 3] = [
        TrainingMode::Centralized,
        TrainingMode::Fedavg,
        TrainingMode::Hierarchical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TrainingMode::Centralized => "centralized",
            TrainingMode::Fedavg => "fedavg",
            TrainingMode::Hierarchical => "hierarchical",
        }
    }

    pub fn is_federated(self) -> bool {
        self != TrainingMode::Centralized
    }
}

impl fmt::Display for TrainingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrainingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TrainingMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode `{s}` (centralized, fedavg, hierarchical)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Multiplies every session duration of the standard corpus.
    pub scale: f64,
    /// Topology TOML; the built-in testbed when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topology: Option<PathBuf>,
    pub mode: TrainingMode,
    pub rounds: usize,
    /// Optimizer iterations per client per round.
    pub local_iters: usize,
    /// Optimizer iterations for the centralized baseline.
    pub central_iters: usize,
    pub rho_begin: f64,
    pub rho_end: f64,
    pub optimizer: String,
    /// PCA components kept (one per qubit).
    pub components: usize,
    pub tree: String,
    pub averaging: Averaging,
    pub output_dir: PathBuf,
    pub qae: QaeConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 2024,
            scale: 1.0,
            topology: None,
            mode: TrainingMode::Hierarchical,
            rounds: 5,
            local_iters: 50,
            central_iters: 100,
            rho_begin: 1.0,
            rho_end: 1e-4,
            optimizer: "cobyla".into(),
            components: 10,
            tree: AggregationTree::default().to_string(),
            averaging: Averaging::Weighted,
            output_dir: PathBuf::from("qfad-out"),
            qae: QaeConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.qae.validate()?;
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Config(format!("scale must be positive (got {})", self.scale)));
        }
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        if self.components != self.qae.num_qubits {
            return Err(Error::Config(format!(
                "components ({}) must equal num_qubits ({})",
                self.components, self.qae.num_qubits
            )));
        }
        self.local_settings().validate()?;
        self.central_settings().validate()?;
        crate::optimizer::registry().get(&self.optimizer)?;
        self.aggregation_tree()?;
        Ok(())
    }

    pub fn local_settings(&self) -> OptimizerSettings {
        OptimizerSettings {
            max_iters: self.local_iters,
            rho_begin: self.rho_begin,
            rho_end: self.rho_end,
        }
    }

    pub fn central_settings(&self) -> OptimizerSettings {
        OptimizerSettings {
            max_iters: self.central_iters,
            ..self.local_settings()
        }
    }

    pub fn aggregation_tree(&self) -> Result<AggregationTree> {
        self.tree.parse()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

pub const ARTIFACT_VERSION: u32 = 1;

/// How iteration budgets are counted: one trust-region step plus any
/// geometry repairs preceding it.
pub const ITERATION_SEMANTICS: &str = "trust-step";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunMetadata {
    pub seed: u64,
    pub scale: f64,
    pub mode: TrainingMode,
    pub optimizer: String,
    pub iteration_semantics: String,
    pub feature_schema: String,
    pub threshold_sigma: String,
    pub averaging: Averaging,
    pub rounds: usize,
    pub local_iters: usize,
    pub central_iters: usize,
    pub tree: String,
}

/// Preprocessing and threshold shared by a set of routers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouterModel {
    pub routers: Vec<String>,
    pub threshold: ThresholdModel,
    pub preprocess: PreprocessModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub metadata: RunMetadata,
    pub qae: QaeConfig,
    pub params: ParamVector,
    pub models: Vec<RouterModel>,
}

impl ModelArtifact {
    pub fn metadata_for(cfg: &RunConfig) -> RunMetadata {
        RunMetadata {
            seed: cfg.seed,
            scale: cfg.scale,
            mode: cfg.mode,
            optimizer: cfg.optimizer.clone(),
            iteration_semantics: ITERATION_SEMANTICS.into(),
            feature_schema: FEATURE_SCHEMA.into(),
            threshold_sigma: "population".into(),
            averaging: cfg.averaging,
            rounds: cfg.rounds,
            local_iters: cfg.local_iters,
            central_iters: cfg.central_iters,
            tree: cfg.tree.clone(),
        }
    }

    pub fn model_for(&self, router: &str) -> Result<&RouterModel> {
        self.models
            .iter()
            .find(|m| m.routers.iter().any(|r| r == router))
            .ok_or_else(|| Error::Schema(format!("artifact has no model for router {router}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.metadata.feature_schema != FEATURE_SCHEMA {
            return Err(Error::Schema(format!(
                "artifact uses feature schema {}, this build reads {FEATURE_SCHEMA}",
                self.metadata.feature_schema
            )));
        }
        self.qae.validate()?;
        self.params.check_len(&self.qae)?;
        for m in &self.models {
            m.preprocess.validate()?;
            if m.preprocess.d != self.qae.num_qubits {
                return Err(Error::Schema("preprocessing output size differs from qubit count".into()));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        match raw.get("format_version").and_then(toml::Value::as_integer) {
            Some(v) if v == ARTIFACT_VERSION as i64 => {}
            Some(v) => {
                return Err(Error::Schema(format!(
                    "artifact format version {v} is not supported (expected {ARTIFACT_VERSION})"
                )))
            }
            None => return Err(Error::Schema("artifact has no format_version".into())),
        }
        let artifact: ModelArtifact = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        artifact.validate()?;
        Ok(artifact)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

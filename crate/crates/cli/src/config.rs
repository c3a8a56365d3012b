//! Flat run configuration: JSON file keys mirror the struct fields, and
//! command-line flags override file values, so a run is reproducible from
//! the single resolved config recorded in `run_meta.json`.

use std::path::{Path, PathBuf};

use pandora_core::error::{Error, Result};
use pandora_core::features::Chi2Config;
use pandora_core::model::Architecture;
use pandora_core::nn::OptimizerKind;
use pandora_core::pipeline::PipelineConfig;
use serde::{Deserialize, Serialize};

fn default_out_dir() -> String {
    "out".to_string()
}
fn default_aggregator() -> String {
    "ha".to_string()
}
fn default_alpha() -> f64 {
    0.01
}
fn default_max_epoch() -> usize {
    300
}
fn default_patience() -> usize {
    50
}
fn default_hidden() -> usize {
    64
}
fn default_embedding() -> usize {
    64
}
fn default_class_count() -> usize {
    4
}
fn default_optimizer() -> String {
    "adam".to_string()
}
fn default_true() -> bool {
    true
}
fn default_max_bins() -> usize {
    10
}
fn default_inconsistency_limit() -> f64 {
    0.05
}
fn default_train_ratio() -> f64 {
    0.6
}
fn default_split_ratio() -> f64 {
    0.2
}

/// Resolved run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub nodes: Option<String>,
    #[serde(default)]
    pub edges: Option<String>,
    #[serde(default)]
    pub timeseries_dir: Option<String>,
    #[serde(default)]
    pub schemes: Option<String>,
    #[serde(default)]
    pub checkpoint: Option<String>,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,

    #[serde(default = "default_aggregator")]
    pub aggregator: String,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_max_epoch")]
    pub max_epoch: usize,
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_embedding")]
    pub embedding: usize,
    #[serde(default = "default_class_count")]
    pub class_count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub dynamic: bool,
    #[serde(default = "default_optimizer")]
    pub optimizer: String,
    #[serde(default)]
    pub weighted_propagation: bool,
    #[serde(default = "default_true")]
    pub use_boxcox: bool,

    #[serde(default = "default_max_bins")]
    pub max_bins: usize,
    #[serde(default = "default_inconsistency_limit")]
    pub inconsistency_limit: f64,

    #[serde(default = "default_train_ratio")]
    pub train_ratio: f64,
    #[serde(default = "default_split_ratio")]
    pub val_ratio: f64,
    #[serde(default = "default_split_ratio")]
    pub test_ratio: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|e| Error::BadConfig {
            reason: format!("{}: {e}", path.display()),
        })?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha <= 0.0 {
            return Err(Error::BadConfig {
                reason: format!("alpha must be positive, got {}", self.alpha),
            });
        }
        if self.max_epoch < 1 {
            return Err(Error::BadConfig {
                reason: "max_epoch must be at least 1".to_string(),
            });
        }
        if self.hidden < 1 || self.embedding < 1 {
            return Err(Error::BadConfig {
                reason: "hidden and embedding widths must be at least 1".to_string(),
            });
        }
        self.architecture()?;
        self.optimizer_kind()?;
        Ok(())
    }

    pub fn architecture(&self) -> Result<Architecture> {
        Architecture::parse(&self.aggregator)
    }

    pub fn optimizer_kind(&self) -> Result<OptimizerKind> {
        match self.optimizer.as_str() {
            "adam" => Ok(OptimizerKind::Adam),
            "sgd" => Ok(OptimizerKind::Sgd),
            other => Err(Error::BadConfig {
                reason: format!("unknown optimizer `{other}` (expected adam or sgd)"),
            }),
        }
    }

    pub fn pipeline(&self) -> Result<PipelineConfig> {
        Ok(PipelineConfig {
            arch: self.architecture()?,
            optimizer: self.optimizer_kind()?,
            alpha: self.alpha,
            max_epoch: self.max_epoch,
            patience: self.patience,
            hidden: self.hidden,
            embedding: self.embedding,
            class_count: self.class_count,
            seed: self.seed,
            dynamic: self.dynamic,
            weighted_propagation: self.weighted_propagation,
            use_boxcox: self.use_boxcox,
            chi2: Chi2Config {
                max_bins: self.max_bins,
                inconsistency_limit: self.inconsistency_limit,
                ..Chi2Config::default()
            },
            ratios: (self.train_ratio, self.val_ratio, self.test_ratio),
        })
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(&self.out_dir)
    }

    pub fn require_nodes(&self) -> Result<PathBuf> {
        self.nodes
            .as_ref()
            .map(PathBuf::from)
            .ok_or_else(|| Error::BadConfig {
                reason: "missing nodes path (--nodes or config key `nodes`)".to_string(),
            })
    }

    pub fn require_edges(&self) -> Result<PathBuf> {
        self.edges
            .as_ref()
            .map(PathBuf::from)
            .ok_or_else(|| Error::BadConfig {
                reason: "missing edges path (--edges or config key `edges`)".to_string(),
            })
    }

    pub fn require_checkpoint(&self) -> Result<PathBuf> {
        self.checkpoint
            .as_ref()
            .map(PathBuf::from)
            .ok_or_else(|| Error::BadConfig {
                reason: "missing checkpoint path (--checkpoint or config key `checkpoint`)"
                    .to_string(),
            })
    }
}

/// Apply one JSON object over another (shallow: flat keys).
pub fn merge_json(base: &serde_json::Value, overrides: &serde_json::Value) -> serde_json::Value {
    let mut merged = base.clone();
    if let (Some(target), Some(source)) = (merged.as_object_mut(), overrides.as_object()) {
        for (k, v) in source {
            target.insert(k.clone(), v.clone());
        }
    }
    merged
}

/// Re-parse a config after applying flat JSON overrides.
pub fn with_overrides(base: &RunConfig, overrides: serde_json::Value) -> Result<RunConfig> {
    let base_value = serde_json::to_value(base)?;
    let merged = merge_json(&base_value, &overrides);
    let config: RunConfig = serde_json::from_value(merged).map_err(|e| Error::BadConfig {
        reason: format!("invalid override: {e}"),
    })?;
    Ok(config)
}

//! Run artifacts: checkpoints, training history, metrics, embeddings, and
//! prediction tables. Files are written atomically (temp file plus rename)
//! and deterministically, so reruns with identical inputs produce
//! byte-identical output.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::model::{EpochRecord, Metrics, ModelConfig, PandoraModel, RiskLevel};
use crate::nn::{OptimizerState, Parameter};

/// Write `bytes` to `path` via a temp file in the same directory.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let display = path.display().to_string();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(&display, e))?;
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(tmp.display().to_string(), e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(&display, e))?;
    Ok(())
}

/// Hex SHA-256 of a canonical config string, stored in checkpoints so a
/// model can be matched back to the run that produced it.
pub fn config_hash(config_json: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(config_json.as_bytes());
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        write!(out, "{b:02x}").expect("string write");
    }
    out
}

/// Serialized model state: shapes travel inside the parameter matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub model: ModelConfig,
    pub parameters: Vec<Parameter>,
    pub optimizer: Option<OptimizerState>,
    pub config_hash: String,
}

impl Checkpoint {
    pub fn from_model(
        model: &PandoraModel,
        optimizer: Option<OptimizerState>,
        config_json: &str,
    ) -> Checkpoint {
        Checkpoint {
            model: model.config.clone(),
            parameters: model.params().to_vec(),
            optimizer,
            config_hash: config_hash(config_json),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        atomic_write(path, json.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Rebuild the model, validating parameter shapes against the config.
    pub fn into_model(self) -> Result<PandoraModel> {
        PandoraModel::from_parts(self.model, self.parameters)
    }
}

/// `history.csv`: one row per epoch.
pub fn write_history_csv(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut text = String::from("epoch,train_loss,val_loss,train_acc,val_acc\n");
    for r in history {
        writeln!(
            text,
            "{},{},{},{},{}",
            r.epoch, r.train_loss, r.val_loss, r.train_acc, r.val_acc
        )
        .expect("string write");
    }
    atomic_write(path, text.as_bytes())
}

/// `metrics.json`.
pub fn write_metrics_json(path: &Path, metrics: &Metrics) -> Result<()> {
    let json = serde_json::to_string_pretty(metrics)?;
    atomic_write(path, json.as_bytes())
}

/// `embeddings.csv`: node id plus its aggregated-embedding row, for
/// external projection tools.
pub fn write_embeddings_csv(path: &Path, node_ids: &[String], embedding: &DenseMatrix) -> Result<()> {
    assert_eq!(node_ids.len(), embedding.rows());
    let mut text = String::from("node_id");
    for j in 0..embedding.cols() {
        write!(text, ",e{j}").expect("string write");
    }
    text.push('\n');
    for (i, id) in node_ids.iter().enumerate() {
        write!(text, "{id}").expect("string write");
        for v in embedding.row(i) {
            write!(text, ",{v}").expect("string write");
        }
        text.push('\n');
    }
    atomic_write(path, text.as_bytes())
}

/// `predictions.csv`: node id, predicted label, and the class distribution.
/// Four-class outputs use the risk-level names; other widths use indices.
pub fn write_predictions_csv(
    path: &Path,
    node_ids: &[String],
    probabilities: &DenseMatrix,
) -> Result<()> {
    assert_eq!(node_ids.len(), probabilities.rows());
    let classes = probabilities.cols();
    let class_name = |c: usize| -> String {
        if classes == RiskLevel::ALL.len() {
            RiskLevel::from_index(c).expect("class in range").name().to_string()
        } else {
            format!("class_{c}")
        }
    };
    let mut text = String::from("node_id,label");
    for c in 0..classes {
        write!(text, ",p_{}", class_name(c)).expect("string write");
    }
    text.push('\n');
    let predicted = crate::model::argmax_rows(probabilities);
    for (i, id) in node_ids.iter().enumerate() {
        write!(text, "{id},{}", class_name(predicted[i])).expect("string write");
        for v in probabilities.row(i) {
            write!(text, ",{v}").expect("string write");
        }
        text.push('\n');
    }
    atomic_write(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Architecture, AggregatorMode};
    use tempfile::TempDir;

    #[test]
    fn checkpoint_round_trip() {
        let config = ModelConfig {
            hidden: 5,
            embedding: 4,
            class_count: 3,
            seed: 11,
            ..ModelConfig::new(Architecture::Dual(AggregatorMode::Co), 6, 4)
        };
        let model = PandoraModel::new(config);
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("model.json");
        Checkpoint::from_model(&model, None, "{\"alpha\":0.01}")
            .save(&path)
            .unwrap();
        let restored = Checkpoint::load(&path).unwrap().into_model().unwrap();
        for (a, b) in model.params().iter().zip(restored.params()) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.value, b.value);
        }
    }

    #[test]
    fn checkpoint_rejects_mismatched_shapes() {
        let config = ModelConfig::new(Architecture::AftOnly, 6, 4);
        let model = PandoraModel::new(config);
        let mut checkpoint = Checkpoint::from_model(&model, None, "{}");
        checkpoint.parameters.pop();
        assert!(checkpoint.into_model().is_err());
    }

    #[test]
    fn config_hash_is_stable() {
        let a = config_hash("{\"seed\":1}");
        let b = config_hash("{\"seed\":1}");
        let c = config_hash("{\"seed\":2}");
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("out.txt");
        atomic_write(&path, b"first").unwrap();
        atomic_write(&path, b"second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
        assert!(!path.with_extension("tmp").exists());
    }

    #[test]
    fn history_csv_format() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("history.csv");
        write_history_csv(
            &path,
            &[EpochRecord {
                epoch: 1,
                train_loss: 0.5,
                val_loss: 0.625,
                train_acc: 0.75,
                val_acc: 0.5,
            }],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "epoch,train_loss,val_loss,train_acc,val_acc\n1,0.5,0.625,0.75,0.5\n");
    }
}

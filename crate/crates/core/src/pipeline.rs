//! End-to-end wiring: dataset to feature tensors to trained model to run
//! artifacts. The command-line tool and the acceptance suite both drive
//! this module, so a library run and a CLI run share byte-identical
//! outputs.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::features::{build_aft, build_sft, AttrKind, Chi2Config, SchemeSet};
use crate::graph::renormalized_propagation_with;
use crate::matrix::DenseMatrix;
use crate::model::{
    evaluate, grad_check_model, train, Architecture, Metrics, ModelConfig, PandoraModel,
    StepInputs, TrainConfig, TrainReport,
};
use crate::motifs::{count_nmd, NmdVector};
use crate::nn::{OptimizerConfig, OptimizerKind};

/// Everything a full run needs beyond the dataset itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub arch: Architecture,
    pub optimizer: OptimizerKind,
    pub alpha: f64,
    pub max_epoch: usize,
    pub patience: usize,
    pub hidden: usize,
    pub embedding: usize,
    pub class_count: usize,
    pub seed: u64,
    /// Train on the per-timestamp frames instead of the static tensors.
    pub dynamic: bool,
    pub weighted_propagation: bool,
    pub use_boxcox: bool,
    pub chi2: Chi2Config,
    pub ratios: (f64, f64, f64),
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            arch: Architecture::Dual(crate::model::AggregatorMode::Ha),
            optimizer: OptimizerKind::Adam,
            alpha: 0.01,
            max_epoch: 300,
            patience: 50,
            hidden: 64,
            embedding: 64,
            class_count: 4,
            seed: 0,
            dynamic: false,
            weighted_propagation: false,
            use_boxcox: true,
            chi2: Chi2Config::default(),
            ratios: (0.6, 0.2, 0.2),
        }
    }
}

impl PipelineConfig {
    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            optimizer: match self.optimizer {
                OptimizerKind::Adam => OptimizerConfig::adam(self.alpha),
                OptimizerKind::Sgd => OptimizerConfig::sgd(self.alpha),
            },
            max_epoch: self.max_epoch,
            patience: self.patience,
        }
    }
}

/// Tensors for one frame (the static case has exactly one).
#[derive(Debug, Clone)]
pub struct FrameTensors {
    pub propagation: DenseMatrix,
    pub aft: DenseMatrix,
    pub sft: DenseMatrix,
}

/// Featurization output.
#[derive(Debug, Clone)]
pub struct Features {
    pub schemes: SchemeSet,
    pub nmd: Vec<NmdVector>,
    pub frames: Vec<FrameTensors>,
}

impl Features {
    /// Borrow the frames as model step inputs.
    pub fn steps(&self) -> Vec<StepInputs<'_>> {
        self.frames
            .iter()
            .map(|f| StepInputs {
                propagation: &f.propagation,
                aft: &f.aft,
                sft: &f.sft,
            })
            .collect()
    }

    pub fn aft_dim(&self) -> usize {
        self.frames[0].aft.cols()
    }

    pub fn sft_dim(&self) -> usize {
        self.frames[0].sft.cols()
    }
}

/// Build the feature tensors for a dataset. A scheme set fitted at train
/// time can be supplied for reuse; otherwise schemes are fitted here from
/// the dataset's labels.
pub fn featurize(
    dataset: &Dataset,
    config: &PipelineConfig,
    schemes: Option<SchemeSet>,
) -> Result<Features> {
    let labels = dataset.label_indices();
    let schemes = match schemes {
        Some(s) => s,
        None if config.use_boxcox => {
            SchemeSet::fit_with_boxcox(&dataset.attributes, &labels, &AttrKind::ALL, &config.chi2)?
        }
        None => SchemeSet::fit(&dataset.attributes, &labels, &AttrKind::ALL, &config.chi2)?,
    };

    let node_ids = dataset.graph.node_ids();
    let nmd = count_nmd(&dataset.graph);
    let static_frame = FrameTensors {
        propagation: renormalized_propagation_with(&dataset.graph, config.weighted_propagation),
        aft: build_aft(node_ids, &dataset.attributes, &schemes, &AttrKind::ALL)?
            .matrix,
        sft: build_sft(&dataset.graph, &nmd, &dataset.transport_freq())?.matrix,
    };

    let mut frames = Vec::new();
    if config.dynamic {
        if dataset.timestamps.is_empty() {
            return Err(Error::BadConfig {
                reason: "dynamic run requested but the dataset has no timestamps".to_string(),
            });
        }
        for frame in &dataset.timestamps {
            let mut attrs = dataset.attributes.clone();
            for (node, varying) in frame.attrs.iter().enumerate() {
                attrs[node].mobility_mean = varying.mobility_mean;
                attrs[node].temperature_c = varying.temperature_c;
                attrs[node].confirmed_14d = varying.confirmed_14d;
            }
            let aft = build_aft(node_ids, &attrs, &schemes, &AttrKind::ALL)?.matrix;
            let tensors = match &frame.edge_overlay {
                Some(specs) => {
                    let g = crate::graph::build_graph(node_ids, specs)?;
                    let frame_nmd = count_nmd(&g);
                    let transport: Vec<f64> =
                        (0..g.node_count()).map(|v| g.flight_weight(v)).collect();
                    FrameTensors {
                        propagation: renormalized_propagation_with(
                            &g,
                            config.weighted_propagation,
                        ),
                        aft,
                        sft: build_sft(&g, &frame_nmd, &transport)?.matrix,
                    }
                }
                None => FrameTensors {
                    propagation: static_frame.propagation.clone(),
                    aft,
                    sft: static_frame.sft.clone(),
                },
            };
            frames.push(tensors);
        }
    } else {
        frames.push(static_frame);
    }

    Ok(Features {
        schemes,
        nmd,
        frames,
    })
}

/// Result of a full training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: PandoraModel,
    pub report: TrainReport,
    pub features: Features,
    pub split: crate::data::SplitAssignment,
    /// Test metrics with timing and iteration fields filled in.
    pub metrics: Metrics,
    pub embedding: DenseMatrix,
    pub probabilities: DenseMatrix,
}

/// Featurize, split, train, and evaluate on the held-out test rows.
pub fn run_training(dataset: &Dataset, config: &PipelineConfig) -> Result<TrainOutcome> {
    let features = featurize(dataset, config, None)?;
    let split = crate::data::split_dataset(dataset, config.ratios, config.seed)?;
    let labels = dataset.label_indices();

    let model_config = ModelConfig {
        hidden: config.hidden,
        embedding: config.embedding,
        class_count: config.class_count,
        seed: config.seed,
        ..ModelConfig::new(config.arch, features.aft_dim(), features.sft_dim())
    };
    let mut model = PandoraModel::new(model_config);

    let steps = features.steps();
    let train_rows = split.rows(crate::data::Split::Train);
    let val_rows = split.rows(crate::data::Split::Validation);
    let test_rows = split.rows(crate::data::Split::Test);
    let report = train(
        &mut model,
        &steps,
        &labels,
        &train_rows,
        &val_rows,
        &config.train_config(),
    )?;

    let test_started = Instant::now();
    let prediction = model.predict(&steps)?;
    let tet = test_started.elapsed().as_secs_f64();
    let mut metrics = evaluate(&prediction.probabilities, &labels, &test_rows)?;
    metrics.iterations_to_converge = report.iterations_to_converge;
    metrics.astt_seconds = report.astt_seconds;
    metrics.oit_seconds = report.oit_seconds;
    metrics.tet_seconds = tet;

    Ok(TrainOutcome {
        model,
        report,
        features,
        split,
        metrics,
        embedding: prediction.embedding,
        probabilities: prediction.probabilities,
    })
}

impl Metrics {
    /// Copy with the wall-clock fields cleared. Run artifacts stay
    /// byte-identical across reruns; measured timings live in
    /// `run_meta.json` instead.
    pub fn without_wall_clock(&self) -> Metrics {
        Metrics {
            astt_seconds: 0.0,
            oit_seconds: 0.0,
            tet_seconds: 0.0,
            ..self.clone()
        }
    }
}

/// Write the training artifacts: `history.csv`, `metrics.json`,
/// `embeddings.csv`, `predictions.csv`, `checkpoint.json`, `schemes.json`,
/// and `split.json`.
pub fn write_training_artifacts(
    out_dir: &Path,
    dataset: &Dataset,
    outcome: &TrainOutcome,
    config_json: &str,
) -> Result<()> {
    use crate::artifacts;

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    artifacts::write_history_csv(&out_dir.join("history.csv"), &outcome.report.history)?;
    artifacts::write_metrics_json(
        &out_dir.join("metrics.json"),
        &outcome.metrics.without_wall_clock(),
    )?;
    let node_ids = dataset.graph.node_ids();
    artifacts::write_embeddings_csv(&out_dir.join("embeddings.csv"), node_ids, &outcome.embedding)?;
    artifacts::write_predictions_csv(
        &out_dir.join("predictions.csv"),
        node_ids,
        &outcome.probabilities,
    )?;
    artifacts::Checkpoint::from_model(
        &outcome.model,
        Some(outcome.report.optimizer_state.clone()),
        config_json,
    )
    .save(&out_dir.join("checkpoint.json"))?;
    artifacts::atomic_write(
        &out_dir.join("schemes.json"),
        outcome.features.schemes.to_json().as_bytes(),
    )?;
    let split_json = serde_json::to_string_pretty(&outcome.split)?;
    artifacts::atomic_write(&out_dir.join("split.json"), split_json.as_bytes())?;
    Ok(())
}

/// Run the finite-difference gradient check on a small synthetic dataset
/// for one architecture; returns the max relative error.
pub fn gradcheck_architecture(arch: Architecture, seed: u64) -> Result<f64> {
    let dataset = crate::data::synth_dataset(&crate::data::SynthConfig {
        nodes: 20,
        communities: 4,
        edge_prob_in: 0.5,
        edge_prob_out: 0.15,
        seed,
        ..crate::data::SynthConfig::default()
    })?;
    let config = PipelineConfig {
        arch,
        hidden: 8,
        embedding: 8,
        seed,
        ..PipelineConfig::default()
    };
    let features = featurize(&dataset, &config, None)?;
    let mut model = PandoraModel::new(ModelConfig {
        hidden: config.hidden,
        embedding: config.embedding,
        class_count: config.class_count,
        seed,
        ..ModelConfig::new(arch, features.aft_dim(), features.sft_dim())
    });
    let labels = dataset.label_indices();
    let rows: Vec<usize> = (0..dataset.node_count()).collect();
    grad_check_model(&mut model, &features.steps(), &labels, &rows, 1e-5, 120, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_dataset, SynthConfig};
    use crate::model::AggregatorMode;

    fn small_synth(seed: u64, timestamps: usize) -> Dataset {
        synth_dataset(&SynthConfig {
            nodes: 48,
            communities: 4,
            edge_prob_in: 0.3,
            edge_prob_out: 0.05,
            timestamps,
            seed,
            ..SynthConfig::default()
        })
        .unwrap()
    }

    fn quick_config(arch: Architecture) -> PipelineConfig {
        PipelineConfig {
            arch,
            hidden: 8,
            embedding: 8,
            max_epoch: 60,
            patience: 20,
            alpha: 0.05,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn featurize_shapes() {
        let dataset = small_synth(3, 0);
        let features = featurize(&dataset, &quick_config(Architecture::AftOnly), None).unwrap();
        assert_eq!(features.frames.len(), 1);
        let frame = &features.frames[0];
        assert_eq!(frame.propagation.rows(), 48);
        assert_eq!(frame.aft.rows(), 48);
        assert_eq!(frame.sft.cols(), crate::features::SFT_WIDTH);
        // one-hot blocks: every AFT row sums to the number of attributes
        for i in 0..48 {
            let sum: f64 = frame.aft.row(i).iter().sum();
            assert_eq!(sum, AttrKind::ALL.len() as f64);
        }
    }

    #[test]
    fn featurize_dynamic_produces_frames() {
        let dataset = small_synth(4, 3);
        let mut config = quick_config(Architecture::Dual(AggregatorMode::Su));
        config.dynamic = true;
        let features = featurize(&dataset, &config, None).unwrap();
        assert_eq!(features.frames.len(), 3);
        // static graph: propagation shared across frames
        assert_eq!(features.frames[0].propagation, features.frames[1].propagation);
        // varying attributes show up in the per-frame tensors
        assert_ne!(features.frames[0].aft, features.frames[2].aft);
    }

    #[test]
    fn dynamic_without_timestamps_is_rejected() {
        let dataset = small_synth(5, 0);
        let mut config = quick_config(Architecture::AftOnly);
        config.dynamic = true;
        assert!(featurize(&dataset, &config, None).is_err());
    }

    #[test]
    fn training_run_produces_consistent_outcome() {
        let dataset = small_synth(7, 0);
        let outcome = run_training(&dataset, &quick_config(Architecture::Dual(AggregatorMode::Co)))
            .unwrap();
        assert!(outcome.metrics.accuracy >= 0.25, "above chance");
        assert_eq!(outcome.probabilities.rows(), 48);
        assert_eq!(
            outcome.metrics.iterations_to_converge,
            outcome.report.iterations_to_converge
        );
        let confusion_total: u64 = outcome.metrics.confusion.iter().flatten().sum();
        assert_eq!(confusion_total as usize, outcome.split.rows(crate::data::Split::Test).len());
    }

    #[test]
    fn artifacts_are_deterministic_across_runs() {
        let dataset = small_synth(9, 0);
        let config = quick_config(Architecture::Dual(AggregatorMode::Ha));
        let dir_a = tempfile::TempDir::new().unwrap();
        let dir_b = tempfile::TempDir::new().unwrap();
        for dir in [&dir_a, &dir_b] {
            let outcome = run_training(&dataset, &config).unwrap();
            write_training_artifacts(dir.path(), &dataset, &outcome, "{}").unwrap();
        }
        for name in [
            "history.csv",
            "metrics.json",
            "embeddings.csv",
            "predictions.csv",
            "checkpoint.json",
            "schemes.json",
            "split.json",
        ] {
            let a = std::fs::read(dir_a.path().join(name)).unwrap();
            let b = std::fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }

    #[test]
    fn checkpoint_reload_predicts_identically() {
        let dataset = small_synth(11, 0);
        let config = quick_config(Architecture::Dual(AggregatorMode::Su));
        let outcome = run_training(&dataset, &config).unwrap();
        let dir = tempfile::TempDir::new().unwrap();
        write_training_artifacts(dir.path(), &dataset, &outcome, "{}").unwrap();

        let checkpoint =
            crate::artifacts::Checkpoint::load(&dir.path().join("checkpoint.json")).unwrap();
        let restored = checkpoint.into_model().unwrap();
        let schemes = SchemeSet::from_json(
            &std::fs::read_to_string(dir.path().join("schemes.json")).unwrap(),
        )
        .unwrap();
        let features = featurize(&dataset, &config, Some(schemes)).unwrap();
        let prediction = restored.predict(&features.steps()).unwrap();
        assert_eq!(prediction.probabilities, outcome.probabilities);
    }

    #[test]
    fn gradcheck_architectures_pass() {
        for arch in [
            Architecture::Dual(AggregatorMode::Ha),
            Architecture::AftOnly,
        ] {
            let err = gradcheck_architecture(arch, 13).unwrap();
            assert!(err < 1e-5, "{} rel err {err}", arch.name());
        }
    }
}

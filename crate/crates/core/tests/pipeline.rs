//! Library-level end-to-end flow: generate, serialize, reload, featurize,
//! train, evaluate, checkpoint, and predict again — static and dynamic.

use pandora_core::artifacts::Checkpoint;
use pandora_core::data::{load_dataset, synth_dataset, write_dataset, write_timeframes, SynthConfig};
use pandora_core::features::SchemeSet;
use pandora_core::model::{AggregatorMode, Architecture};
use pandora_core::pipeline::{featurize, run_training, write_training_artifacts, PipelineConfig};
use tempfile::TempDir;

#[test]
fn static_flow_through_csv_and_checkpoint() {
    let dir = TempDir::new().unwrap();
    let dataset = synth_dataset(&SynthConfig {
        nodes: 64,
        communities: 4,
        edge_prob_in: 0.25,
        edge_prob_out: 0.04,
        seed: 21,
        ..SynthConfig::default()
    })
    .unwrap();
    let nodes = dir.path().join("nodes.csv");
    let edges = dir.path().join("edges.csv");
    write_dataset(&dataset, &nodes, &edges).unwrap();
    let reloaded = load_dataset(&nodes, &edges, None).unwrap();
    assert_eq!(reloaded, dataset);

    let config = PipelineConfig {
        arch: Architecture::Dual(AggregatorMode::Su),
        hidden: 8,
        embedding: 8,
        max_epoch: 40,
        patience: 40,
        alpha: 0.05,
        seed: 2,
        ..PipelineConfig::default()
    };
    let outcome = run_training(&reloaded, &config).unwrap();
    assert!(
        outcome.metrics.accuracy > 0.5,
        "test accuracy {} barely above chance",
        outcome.metrics.accuracy
    );

    let run_dir = dir.path().join("run");
    write_training_artifacts(&run_dir, &reloaded, &outcome, "{}").unwrap();

    // reload the checkpoint and the schemes; predictions must agree
    let model = Checkpoint::load(&run_dir.join("checkpoint.json"))
        .unwrap()
        .into_model()
        .unwrap();
    let schemes =
        SchemeSet::from_json(&std::fs::read_to_string(run_dir.join("schemes.json")).unwrap())
            .unwrap();
    let features = featurize(&reloaded, &config, Some(schemes)).unwrap();
    let prediction = model.predict(&features.steps()).unwrap();
    assert_eq!(prediction.probabilities, outcome.probabilities);
}

#[test]
fn dynamic_flow_with_timeframes() {
    let dir = TempDir::new().unwrap();
    let dataset = synth_dataset(&SynthConfig {
        nodes: 48,
        communities: 4,
        edge_prob_in: 0.3,
        edge_prob_out: 0.05,
        timestamps: 4,
        seed: 33,
        ..SynthConfig::default()
    })
    .unwrap();
    let nodes = dir.path().join("nodes.csv");
    let edges = dir.path().join("edges.csv");
    let ts = dir.path().join("ts");
    write_dataset(&dataset, &nodes, &edges).unwrap();
    write_timeframes(&dataset, &ts).unwrap();
    let reloaded = load_dataset(&nodes, &edges, Some(&ts)).unwrap();
    assert_eq!(reloaded.timestamps.len(), 4);

    let config = PipelineConfig {
        arch: Architecture::Dual(AggregatorMode::Ha),
        hidden: 8,
        embedding: 8,
        max_epoch: 30,
        patience: 30,
        alpha: 0.05,
        dynamic: true,
        seed: 5,
        ..PipelineConfig::default()
    };
    let outcome = run_training(&reloaded, &config).unwrap();
    assert_eq!(outcome.features.frames.len(), 4);
    assert!(outcome.metrics.accuracy > 0.25, "above 4-class chance");
    assert_eq!(outcome.probabilities.rows(), 48);
}

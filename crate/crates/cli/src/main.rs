//! Command-line pipeline: `synth`, `motifs`, `featurize`, `train`,
//! `evaluate`, `predict`, and `gradcheck`.
//!
//! Every subcommand resolves its configuration as JSON-file values
//! overridden by flags, writes its artifacts atomically under the output
//! directory, and records the resolved config, seed, version, and wall
//! timings in `run_meta.json`. Reruns with identical inputs and seed
//! produce byte-identical outputs apart from the wall-clock fields.

mod config;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use pandora_core::artifacts::{atomic_write, Checkpoint};
use pandora_core::data::{
    load_dataset, synth_dataset, write_dataset, write_timeframes, LabelRule, Split, SynthConfig,
};
use pandora_core::error::{Error, Result};
use pandora_core::features::SchemeSet;
use pandora_core::model::{evaluate, Architecture};
use pandora_core::motifs::{
    count_nmd, motif_significance, write_nmd_csv, MotifKind, SignificanceThresholds,
};
use pandora_core::pipeline::{
    featurize, gradcheck_architecture, run_training, write_training_artifacts, PipelineConfig,
};

use config::{with_overrides, RunConfig};

#[derive(Parser)]
#[command(name = "pandora", version, about = "Infection-risk classification on region graphs")]
struct Cli {
    /// Only report errors on the log stream.
    #[arg(long, global = true)]
    quiet: bool,
    /// Master random seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the config file).
    #[arg(long, global = true)]
    out_dir: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write per-node transmission-motif degrees as CSV.
    Motifs {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        nodes: Option<String>,
        #[arg(long)]
        edges: Option<String>,
        /// Output CSV path (default: <out_dir>/nmd.csv).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Null-model ensemble size; when positive, also writes
        /// significance.json for all five motifs.
        #[arg(long, default_value_t = 0)]
        ensemble: usize,
        #[arg(long, default_value_t = 2.0)]
        z_cutoff: f64,
        #[arg(long, default_value_t = 4)]
        u_min: u64,
        #[arg(long, default_value_t = 0.1)]
        d_ratio: f64,
    },
    /// Build and export the feature tensors and discretization schemes.
    Featurize {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        nodes: Option<String>,
        #[arg(long)]
        edges: Option<String>,
        #[arg(long)]
        timeseries: Option<String>,
    },
    /// Train a model and write history, metrics, embeddings, checkpoint.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        nodes: Option<String>,
        #[arg(long)]
        edges: Option<String>,
        #[arg(long)]
        timeseries: Option<String>,
        /// Aggregator: ha, su, co, or gcn (single-branch baseline).
        #[arg(long)]
        aggregator: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        max_epoch: Option<usize>,
        #[arg(long)]
        patience: Option<usize>,
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long)]
        class_count: Option<usize>,
        /// Train on per-timestamp frames.
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        dynamic: Option<bool>,
        /// JSON array of flat config overrides; runs each entry into
        /// <out_dir>/run_<i>.
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on one split of a dataset.
    Evaluate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<String>,
        #[arg(long)]
        schemes: Option<String>,
        #[arg(long)]
        nodes: Option<String>,
        #[arg(long)]
        edges: Option<String>,
        #[arg(long)]
        timeseries: Option<String>,
        /// Split to evaluate: train, validation, or test.
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Predict risk levels for a dataset with a trained checkpoint.
    Predict {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<String>,
        #[arg(long)]
        schemes: Option<String>,
        #[arg(long)]
        nodes: Option<String>,
        #[arg(long)]
        edges: Option<String>,
        #[arg(long)]
        timeseries: Option<String>,
    },
    /// Generate a synthetic block-model dataset.
    Synth {
        /// SynthConfig JSON file; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        communities: Option<usize>,
        #[arg(long)]
        edge_prob_in: Option<f64>,
        #[arg(long)]
        edge_prob_out: Option<f64>,
        /// community | confirmed
        #[arg(long)]
        label_rule: Option<String>,
        #[arg(long)]
        timestamps: Option<usize>,
        #[arg(long)]
        attr_noise: Option<f64>,
    },
    /// Finite-difference check of the model gradients; exits nonzero if
    /// the max relative error reaches 1e-5.
    Gradcheck {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct RunMeta<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config: serde_json::Value,
    timings: BTreeMap<&'a str, f64>,
    outputs: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn load_config(path: &Option<PathBuf>, cli: &Cli) -> Result<RunConfig> {
    let base = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mut overrides = serde_json::Map::new();
    if let Some(seed) = cli.seed {
        overrides.insert("seed".into(), json!(seed));
    }
    if let Some(out_dir) = &cli.out_dir {
        overrides.insert("out_dir".into(), json!(out_dir));
    }
    with_overrides(&base, serde_json::Value::Object(overrides))
}

fn write_run_meta(
    out_dir: &Path,
    command: &str,
    config: &RunConfig,
    started: Instant,
    mut timings: BTreeMap<&str, f64>,
    outputs: Vec<String>,
) -> Result<()> {
    timings.insert("wall_seconds", started.elapsed().as_secs_f64());
    let meta = RunMeta {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        config: serde_json::to_value(config)?,
        timings,
        outputs,
    };
    atomic_write(
        &out_dir.join("run_meta.json"),
        serde_json::to_string_pretty(&meta)?.as_bytes(),
    )
}

fn run(cli: Cli) -> Result<ExitCode> {
    let started = Instant::now();
    match &cli.command {
        Command::Motifs {
            config,
            nodes,
            edges,
            out,
            ensemble,
            z_cutoff,
            u_min,
            d_ratio,
        } => {
            let mut overrides = serde_json::Map::new();
            if let Some(v) = nodes {
                overrides.insert("nodes".into(), json!(v));
            }
            if let Some(v) = edges {
                overrides.insert("edges".into(), json!(v));
            }
            let config = load_config(config, &cli)?;
            let config = with_overrides(&config, serde_json::Value::Object(overrides))?;
            let dataset = load_dataset(&config.require_nodes()?, &config.require_edges()?, None)?;
            let nmd = count_nmd(&dataset.graph);
            let out_dir = config.out_dir();
            let out_path = out.clone().unwrap_or_else(|| out_dir.join("nmd.csv"));
            let mut buffer = Vec::new();
            write_nmd_csv(&dataset.graph, &nmd, &mut buffer)?;
            atomic_write(&out_path, &buffer)?;
            let mut outputs = vec![out_path.display().to_string()];

            if *ensemble > 0 {
                let thresholds = SignificanceThresholds {
                    z_cutoff: *z_cutoff,
                    u_min: *u_min,
                    d_ratio: *d_ratio,
                };
                let reports: Vec<_> = MotifKind::ALL
                    .into_iter()
                    .map(|kind| {
                        motif_significance(&dataset.graph, kind, *ensemble, config.seed, thresholds)
                    })
                    .collect::<Result<_>>()?;
                let path = out_dir.join("significance.json");
                atomic_write(&path, serde_json::to_string_pretty(&reports)?.as_bytes())?;
                outputs.push(path.display().to_string());
            }
            log::info!("wrote motif degrees for {} nodes", dataset.node_count());
            write_run_meta(&out_dir, "motifs", &config, started, BTreeMap::new(), outputs)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Featurize {
            config,
            nodes,
            edges,
            timeseries,
        } => {
            let mut overrides = serde_json::Map::new();
            if let Some(v) = nodes {
                overrides.insert("nodes".into(), json!(v));
            }
            if let Some(v) = edges {
                overrides.insert("edges".into(), json!(v));
            }
            if let Some(v) = timeseries {
                overrides.insert("timeseries_dir".into(), json!(v));
            }
            let config = load_config(config, &cli)?;
            let config = with_overrides(&config, serde_json::Value::Object(overrides))?;
            config.validate()?;
            let dataset = load_dataset(
                &config.require_nodes()?,
                &config.require_edges()?,
                config.timeseries_dir.as_deref().map(Path::new),
            )?;
            let pipeline_config = config.pipeline()?;
            let features = featurize(&dataset, &pipeline_config, None)?;
            let out_dir = config.out_dir();

            atomic_write(
                &out_dir.join("schemes.json"),
                features.schemes.to_json().as_bytes(),
            )?;
            let mut buffer = Vec::new();
            write_nmd_csv(&dataset.graph, &features.nmd, &mut buffer)?;
            atomic_write(&out_dir.join("nmd.csv"), &buffer)?;
            write_feature_csvs(&out_dir, &dataset, &features)?;
            let outputs = vec![
                "schemes.json".into(),
                "nmd.csv".into(),
                "aft.csv".into(),
                "sft.csv".into(),
            ];
            log::info!(
                "featurized {} nodes: aft {} cols, sft {} cols",
                dataset.node_count(),
                features.aft_dim(),
                features.sft_dim()
            );
            write_run_meta(&out_dir, "featurize", &config, started, BTreeMap::new(), outputs)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Train {
            config,
            nodes,
            edges,
            timeseries,
            aggregator,
            alpha,
            max_epoch,
            patience,
            hidden,
            class_count,
            dynamic,
            grid,
        } => {
            let mut overrides = serde_json::Map::new();
            if let Some(v) = nodes {
                overrides.insert("nodes".into(), json!(v));
            }
            if let Some(v) = edges {
                overrides.insert("edges".into(), json!(v));
            }
            if let Some(v) = timeseries {
                overrides.insert("timeseries_dir".into(), json!(v));
            }
            if let Some(v) = aggregator {
                overrides.insert("aggregator".into(), json!(v));
            }
            if let Some(v) = alpha {
                overrides.insert("alpha".into(), json!(v));
            }
            if let Some(v) = max_epoch {
                overrides.insert("max_epoch".into(), json!(v));
            }
            if let Some(v) = patience {
                overrides.insert("patience".into(), json!(v));
            }
            if let Some(v) = hidden {
                overrides.insert("hidden".into(), json!(v));
            }
            if let Some(v) = class_count {
                overrides.insert("class_count".into(), json!(v));
            }
            if let Some(v) = dynamic {
                overrides.insert("dynamic".into(), json!(v));
            }
            let config = load_config(config, &cli)?;
            let config = with_overrides(&config, serde_json::Value::Object(overrides))?;

            if let Some(grid_path) = grid {
                return run_grid(&config, grid_path, started);
            }
            config.validate()?;
            let metrics = train_once(&config, &config.out_dir(), started)?;
            log::info!(
                "test accuracy {:.4}, macro f1 {:.4}, converged at epoch {}",
                metrics.0,
                metrics.1,
                metrics.2
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Evaluate {
            config,
            checkpoint,
            schemes,
            nodes,
            edges,
            timeseries,
            split,
        } => {
            let mut overrides = serde_json::Map::new();
            if let Some(v) = checkpoint {
                overrides.insert("checkpoint".into(), json!(v));
            }
            if let Some(v) = schemes {
                overrides.insert("schemes".into(), json!(v));
            }
            if let Some(v) = nodes {
                overrides.insert("nodes".into(), json!(v));
            }
            if let Some(v) = edges {
                overrides.insert("edges".into(), json!(v));
            }
            if let Some(v) = timeseries {
                overrides.insert("timeseries_dir".into(), json!(v));
            }
            let config = load_config(config, &cli)?;
            let config = with_overrides(&config, serde_json::Value::Object(overrides))?;
            let split = match split.as_str() {
                "train" => Split::Train,
                "validation" => Split::Validation,
                "test" => Split::Test,
                other => {
                    return Err(Error::BadConfig {
                        reason: format!("unknown split `{other}`"),
                    })
                }
            };

            let (dataset, model, features) = load_model_and_features(&config)?;
            let assignment =
                pandora_core::data::split_dataset(&dataset, config.pipeline()?.ratios, config.seed)?;
            let rows = assignment.rows(split);
            let test_started = Instant::now();
            let prediction = model.predict(&features.steps())?;
            let tet = test_started.elapsed().as_secs_f64();
            let metrics = evaluate(&prediction.probabilities, &dataset.label_indices(), &rows)?;

            let out_dir = config.out_dir();
            pandora_core::artifacts::write_metrics_json(
                &out_dir.join("metrics.json"),
                &metrics.without_wall_clock(),
            )?;
            log::info!("accuracy {:.4}, macro f1 {:.4}", metrics.accuracy, metrics.macro_f1);
            let mut timings = BTreeMap::new();
            timings.insert("tet_seconds", tet);
            write_run_meta(
                &out_dir,
                "evaluate",
                &config,
                started,
                timings,
                vec!["metrics.json".into()],
            )?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Predict {
            config,
            checkpoint,
            schemes,
            nodes,
            edges,
            timeseries,
        } => {
            let mut overrides = serde_json::Map::new();
            if let Some(v) = checkpoint {
                overrides.insert("checkpoint".into(), json!(v));
            }
            if let Some(v) = schemes {
                overrides.insert("schemes".into(), json!(v));
            }
            if let Some(v) = nodes {
                overrides.insert("nodes".into(), json!(v));
            }
            if let Some(v) = edges {
                overrides.insert("edges".into(), json!(v));
            }
            if let Some(v) = timeseries {
                overrides.insert("timeseries_dir".into(), json!(v));
            }
            let config = load_config(config, &cli)?;
            let config = with_overrides(&config, serde_json::Value::Object(overrides))?;

            let (dataset, model, features) = load_model_and_features(&config)?;
            let prediction = model.predict(&features.steps())?;
            let out_dir = config.out_dir();
            pandora_core::artifacts::write_predictions_csv(
                &out_dir.join("predictions.csv"),
                dataset.graph.node_ids(),
                &prediction.probabilities,
            )?;
            pandora_core::artifacts::write_embeddings_csv(
                &out_dir.join("embeddings.csv"),
                dataset.graph.node_ids(),
                &prediction.embedding,
            )?;
            log::info!("predicted {} nodes", dataset.node_count());
            write_run_meta(
                &out_dir,
                "predict",
                &config,
                started,
                BTreeMap::new(),
                vec!["predictions.csv".into(), "embeddings.csv".into()],
            )?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Synth {
            config,
            n,
            communities,
            edge_prob_in,
            edge_prob_out,
            label_rule,
            timestamps,
            attr_noise,
        } => {
            let mut synth_config = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| Error::io(path.display().to_string(), e))?;
                    serde_json::from_str::<SynthConfig>(&text).map_err(|e| Error::BadConfig {
                        reason: format!("{}: {e}", path.display()),
                    })?
                }
                None => SynthConfig::default(),
            };
            if let Some(v) = n {
                synth_config.nodes = *v;
            }
            if let Some(v) = communities {
                synth_config.communities = *v;
            }
            if let Some(v) = edge_prob_in {
                synth_config.edge_prob_in = *v;
            }
            if let Some(v) = edge_prob_out {
                synth_config.edge_prob_out = *v;
            }
            if let Some(v) = timestamps {
                synth_config.timestamps = *v;
            }
            if let Some(v) = attr_noise {
                synth_config.attr_noise = *v;
            }
            if let Some(rule) = label_rule {
                synth_config.label_rule = match rule.as_str() {
                    "community" => LabelRule::Community,
                    "confirmed" => LabelRule::Confirmed,
                    other => {
                        return Err(Error::BadConfig {
                            reason: format!("unknown label rule `{other}`"),
                        })
                    }
                };
            }
            if let Some(seed) = cli.seed {
                synth_config.seed = seed;
            }
            let out_dir = PathBuf::from(cli.out_dir.clone().unwrap_or_else(|| "out".to_string()));

            let dataset = synth_dataset(&synth_config)?;
            std::fs::create_dir_all(&out_dir)
                .map_err(|e| Error::io(out_dir.display().to_string(), e))?;
            write_dataset(&dataset, &out_dir.join("nodes.csv"), &out_dir.join("edges.csv"))?;
            let mut outputs = vec!["nodes.csv".to_string(), "edges.csv".to_string()];
            if synth_config.timestamps > 0 {
                write_timeframes(&dataset, &out_dir.join("ts"))?;
                outputs.push("ts/".to_string());
            }
            log::info!(
                "generated {} nodes, {} edges (nearest-centroid attr accuracy {:.3})",
                dataset.node_count(),
                dataset.graph.edge_count(),
                pandora_core::data::nearest_centroid_accuracy(&dataset)
            );
            let meta = RunMeta {
                command: "synth",
                version: env!("CARGO_PKG_VERSION"),
                seed: synth_config.seed,
                config: serde_json::to_value(&synth_config)?,
                timings: {
                    let mut t = BTreeMap::new();
                    t.insert("wall_seconds", started.elapsed().as_secs_f64());
                    t
                },
                outputs,
            };
            atomic_write(
                &out_dir.join("run_meta.json"),
                serde_json::to_string_pretty(&meta)?.as_bytes(),
            )?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Gradcheck { config } => {
            let config = load_config(config, &cli)?;
            let mut max_err = 0.0f64;
            for arch in [
                Architecture::Dual(pandora_core::model::AggregatorMode::Ha),
                Architecture::Dual(pandora_core::model::AggregatorMode::Su),
                Architecture::Dual(pandora_core::model::AggregatorMode::Co),
                Architecture::AftOnly,
            ] {
                let err = gradcheck_architecture(arch, config.seed)?;
                log::info!("{}: max relative error {err:.3e}", arch.name());
                max_err = max_err.max(err);
            }
            println!("gradcheck max_rel_error={max_err:.6e}");
            let out_dir = config.out_dir();
            write_run_meta(&out_dir, "gradcheck", &config, started, BTreeMap::new(), vec![])?;
            Ok(if max_err < 1e-5 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

/// Shared loading path for `evaluate` and `predict`: checkpoint, schemes
/// (default: `schemes.json` next to the checkpoint), dataset, features.
fn load_model_and_features(
    config: &RunConfig,
) -> Result<(
    pandora_core::data::Dataset,
    pandora_core::model::PandoraModel,
    pandora_core::pipeline::Features,
)> {
    let checkpoint_path = config.require_checkpoint()?;
    let checkpoint = Checkpoint::load(&checkpoint_path)?;
    let model = checkpoint.into_model()?;

    let schemes_path = match &config.schemes {
        Some(p) => PathBuf::from(p),
        None => checkpoint_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join("schemes.json"),
    };
    let schemes_text = std::fs::read_to_string(&schemes_path)
        .map_err(|e| Error::io(schemes_path.display().to_string(), e))?;
    let schemes = SchemeSet::from_json(&schemes_text)?;

    let dataset = load_dataset(
        &config.require_nodes()?,
        &config.require_edges()?,
        config.timeseries_dir.as_deref().map(Path::new),
    )?;
    let pipeline_config = PipelineConfig {
        dynamic: config.dynamic,
        ..config.pipeline()?
    };
    let features = featurize(&dataset, &pipeline_config, Some(schemes))?;
    if features.aft_dim() != model.config.aft_dim {
        return Err(Error::BadCheckpoint {
            reason: format!(
                "checkpoint expects aft width {}, features have {}",
                model.config.aft_dim,
                features.aft_dim()
            ),
        });
    }
    Ok((dataset, model, features))
}

fn train_once(
    config: &RunConfig,
    out_dir: &Path,
    started: Instant,
) -> Result<(f64, f64, usize)> {
    let dataset = load_dataset(
        &config.require_nodes()?,
        &config.require_edges()?,
        config.timeseries_dir.as_deref().map(Path::new),
    )?;
    let pipeline_config = config.pipeline()?;
    let outcome = run_training(&dataset, &pipeline_config)?;
    let config_json = serde_json::to_string(config)?;
    write_training_artifacts(out_dir, &dataset, &outcome, &config_json)?;

    let mut timings = BTreeMap::new();
    timings.insert("astt_seconds", outcome.metrics.astt_seconds);
    timings.insert("oit_seconds", outcome.metrics.oit_seconds);
    timings.insert("tet_seconds", outcome.metrics.tet_seconds);
    write_run_meta(
        out_dir,
        "train",
        config,
        started,
        timings,
        vec![
            "history.csv".into(),
            "metrics.json".into(),
            "embeddings.csv".into(),
            "predictions.csv".into(),
            "checkpoint.json".into(),
            "schemes.json".into(),
            "split.json".into(),
        ],
    )?;
    Ok((
        outcome.metrics.accuracy,
        outcome.metrics.macro_f1,
        outcome.metrics.iterations_to_converge,
    ))
}

fn run_grid(base: &RunConfig, grid_path: &Path, started: Instant) -> Result<ExitCode> {
    let text = std::fs::read_to_string(grid_path)
        .map_err(|e| Error::io(grid_path.display().to_string(), e))?;
    let entries: Vec<serde_json::Value> =
        serde_json::from_str(&text).map_err(|e| Error::BadConfig {
            reason: format!("{}: expected a JSON array of overrides: {e}", grid_path.display()),
        })?;
    let base_out = base.out_dir();
    let mut summary = String::from("[\n");
    for (i, overrides) in entries.iter().enumerate() {
        let run_config = with_overrides(base, overrides.clone())?;
        run_config.validate()?;
        let run_dir = base_out.join(format!("run_{i:03}"));
        let run_started = Instant::now();
        let (accuracy, macro_f1, iterations) = train_once(&run_config, &run_dir, run_started)?;
        log::info!(
            "grid run {i}: accuracy {accuracy:.4}, macro f1 {macro_f1:.4}, iterations {iterations}"
        );
        let entry = json!({
            "index": i,
            "overrides": overrides,
            "out_dir": run_dir.display().to_string(),
            "accuracy": accuracy,
            "macro_f1": macro_f1,
            "iterations_to_converge": iterations,
        });
        write!(summary, "{}", serde_json::to_string_pretty(&entry)?).expect("string write");
        summary.push_str(if i + 1 < entries.len() { ",\n" } else { "\n" });
    }
    summary.push_str("]\n");
    atomic_write(&base_out.join("grid_summary.json"), summary.as_bytes())?;
    write_run_meta(
        &base_out,
        "train --grid",
        base,
        started,
        BTreeMap::new(),
        vec!["grid_summary.json".into()],
    )?;
    Ok(ExitCode::SUCCESS)
}

fn write_feature_csvs(
    out_dir: &Path,
    dataset: &pandora_core::data::Dataset,
    features: &pandora_core::pipeline::Features,
) -> Result<()> {
    use pandora_core::features::AttrKind;

    let frame = &features.frames[0];
    let mut aft = String::from("node_id");
    for kind in AttrKind::ALL {
        let bins = features
            .schemes
            .get(kind)
            .map(|s| s.bin_count())
            .unwrap_or(0);
        for b in 0..bins {
            write!(aft, ",{}_b{b}", kind.name()).expect("string write");
        }
    }
    aft.push('\n');
    for (i, id) in dataset.graph.node_ids().iter().enumerate() {
        write!(aft, "{id}").expect("string write");
        for v in frame.aft.row(i) {
            write!(aft, ",{v}").expect("string write");
        }
        aft.push('\n');
    }
    atomic_write(&out_dir.join("aft.csv"), aft.as_bytes())?;

    let mut sft = String::from(
        "node_id,degree,flight_degree,transport_freq,mt31,mt32,mt41,mt42,mt43\n",
    );
    for (i, id) in dataset.graph.node_ids().iter().enumerate() {
        write!(sft, "{id}").expect("string write");
        for v in frame.sft.row(i) {
            write!(sft, ",{v}").expect("string write");
        }
        sft.push('\n');
    }
    atomic_write(&out_dir.join("sft.csv"), sft.as_bytes())?;
    Ok(())
}

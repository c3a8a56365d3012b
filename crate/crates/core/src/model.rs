//! The dual-branch risk classifier: two-layer graph convolutions over the
//! attribute and structural tensors, one of three aggregators, a linear
//! classifier head, full-batch training with validation patience, and the
//! evaluation metrics.
//!
//! The static forward is `softmax(Agg(GCN(AFT), GCN(SFT)) * Theta)`; the
//! dynamic forward sums the per-timestamp aggregated embeddings before the
//! classifier, so a single timestamp reduces to the static path exactly.
//! A single-branch variant (attribute tensor only) serves as the baseline
//! configuration.

use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::nn::{
    activation_grad, apply_activation, cross_entropy_masked, optimizer_step, softmax_cross_entropy_grad,
    softmax_rows, Activation, OptimizerConfig, OptimizerState, Parameter,
};

/// How the two branch embeddings combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregatorMode {
    /// Entrywise product.
    Ha,
    /// Entrywise sum.
    Su,
    /// Column concatenation.
    Co,
}

/// Dual-branch model or the single-branch baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    Dual(AggregatorMode),
    AftOnly,
}

impl Architecture {
    pub fn name(&self) -> &'static str {
        match self {
            Architecture::Dual(AggregatorMode::Ha) => "ha",
            Architecture::Dual(AggregatorMode::Su) => "su",
            Architecture::Dual(AggregatorMode::Co) => "co",
            Architecture::AftOnly => "gcn",
        }
    }

    pub fn parse(name: &str) -> Result<Architecture> {
        match name {
            "ha" => Ok(Architecture::Dual(AggregatorMode::Ha)),
            "su" => Ok(Architecture::Dual(AggregatorMode::Su)),
            "co" => Ok(Architecture::Dual(AggregatorMode::Co)),
            "gcn" => Ok(Architecture::AftOnly),
            other => Err(Error::BadConfig {
                reason: format!("unknown architecture `{other}` (expected ha, su, co, or gcn)"),
            }),
        }
    }
}

impl Serialize for Architecture {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Architecture {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        Architecture::parse(&name).map_err(serde::de::Error::custom)
    }
}

/// Combine two equal-height embedding tensors.
pub fn aggregate(
    afet: &DenseMatrix,
    sfet: &DenseMatrix,
    mode: AggregatorMode,
) -> Result<DenseMatrix> {
    match mode {
        AggregatorMode::Ha => afet.hadamard(sfet),
        AggregatorMode::Su => afet.add(sfet),
        AggregatorMode::Co => afet.concat_cols(sfet),
    }
}

/// WHO-derived four-level infection risk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskLevel {
    RiskFree,
    Low,
    Medium,
    High,
}

impl RiskLevel {
    pub const ALL: [RiskLevel; 4] = [
        RiskLevel::RiskFree,
        RiskLevel::Low,
        RiskLevel::Medium,
        RiskLevel::High,
    ];

    pub fn index(self) -> usize {
        match self {
            RiskLevel::RiskFree => 0,
            RiskLevel::Low => 1,
            RiskLevel::Medium => 2,
            RiskLevel::High => 3,
        }
    }

    pub fn from_index(index: usize) -> Option<RiskLevel> {
        RiskLevel::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            RiskLevel::RiskFree => "risk_free",
            RiskLevel::Low => "low",
            RiskLevel::Medium => "medium",
            RiskLevel::High => "high",
        }
    }

    pub fn from_name(name: &str) -> Option<RiskLevel> {
        RiskLevel::ALL.into_iter().find(|l| l.name() == name)
    }
}

/// Map a two-week infection count to its risk level: 0 is risk-free,
/// up to 150 low, up to 750 medium, above that high.
pub fn assign_risk_label(n_infected_14d: i64) -> Result<RiskLevel> {
    match n_infected_14d {
        n if n < 0 => Err(Error::NegativeInfections { value: n }),
        0 => Ok(RiskLevel::RiskFree),
        1..=150 => Ok(RiskLevel::Low),
        151..=750 => Ok(RiskLevel::Medium),
        _ => Ok(RiskLevel::High),
    }
}

/// Model shape configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub arch: Architecture,
    pub aft_dim: usize,
    pub sft_dim: usize,
    /// First-layer output width.
    pub hidden: usize,
    /// Second-layer (embedding) width per branch.
    pub embedding: usize,
    pub class_count: usize,
    /// Weight-initialization seed.
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(arch: Architecture, aft_dim: usize, sft_dim: usize) -> Self {
        ModelConfig {
            arch,
            aft_dim,
            sft_dim,
            hidden: 64,
            embedding: 64,
            class_count: 4,
            seed: 0,
        }
    }

    fn classifier_input(&self) -> usize {
        match self.arch {
            Architecture::Dual(AggregatorMode::Co) => 2 * self.embedding,
            _ => self.embedding,
        }
    }
}

/// One timestamp of model input: the propagation operator plus the two
/// feature tensors. The structural tensor is ignored by the single-branch
/// baseline.
#[derive(Debug, Clone, Copy)]
pub struct StepInputs<'a> {
    pub propagation: &'a DenseMatrix,
    pub aft: &'a DenseMatrix,
    pub sft: &'a DenseMatrix,
}

#[derive(Debug, Clone)]
struct BranchTrace {
    z1: DenseMatrix,
    a1: DenseMatrix,
    a2: DenseMatrix,
}

#[derive(Debug, Clone)]
struct StepTrace {
    aft: BranchTrace,
    sft: Option<BranchTrace>,
    embedding: DenseMatrix,
}

#[derive(Debug, Clone)]
struct ForwardTrace {
    steps: Vec<StepTrace>,
    embedding_sum: DenseMatrix,
    probabilities: DenseMatrix,
}

/// Forward output: class distributions per node and the aggregated
/// embedding (pre-classifier) for export.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub probabilities: DenseMatrix,
    pub embedding: DenseMatrix,
}

const AFT_W1: usize = 0;
const AFT_W2: usize = 1;

/// Dual-branch graph-convolutional classifier.
#[derive(Debug, Clone)]
pub struct PandoraModel {
    pub config: ModelConfig,
    params: Vec<Parameter>,
    trace: Option<ForwardTrace>,
}

impl PandoraModel {
    /// Fresh model with seeded Glorot-initialized weights.
    pub fn new(config: ModelConfig) -> PandoraModel {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = vec![
            Parameter::glorot("aft.w1", config.aft_dim, config.hidden, &mut rng),
            Parameter::glorot("aft.w2", config.hidden, config.embedding, &mut rng),
        ];
        if matches!(config.arch, Architecture::Dual(_)) {
            params.push(Parameter::glorot(
                "sft.w1",
                config.sft_dim,
                config.hidden,
                &mut rng,
            ));
            params.push(Parameter::glorot(
                "sft.w2",
                config.hidden,
                config.embedding,
                &mut rng,
            ));
        }
        params.push(Parameter::glorot(
            "theta",
            config.classifier_input(),
            config.class_count,
            &mut rng,
        ));
        PandoraModel {
            config,
            params,
            trace: None,
        }
    }

    /// Rebuild a model from a checkpoint's config and parameters,
    /// validating the expected layout and shapes. Gradients reset to zero.
    pub fn from_parts(config: ModelConfig, mut params: Vec<Parameter>) -> Result<PandoraModel> {
        let expected: Vec<(&str, usize, usize)> = match config.arch {
            Architecture::Dual(_) => vec![
                ("aft.w1", config.aft_dim, config.hidden),
                ("aft.w2", config.hidden, config.embedding),
                ("sft.w1", config.sft_dim, config.hidden),
                ("sft.w2", config.hidden, config.embedding),
                ("theta", config.classifier_input(), config.class_count),
            ],
            Architecture::AftOnly => vec![
                ("aft.w1", config.aft_dim, config.hidden),
                ("aft.w2", config.hidden, config.embedding),
                ("theta", config.classifier_input(), config.class_count),
            ],
        };
        if params.len() != expected.len() {
            return Err(Error::BadCheckpoint {
                reason: format!(
                    "expected {} parameters for `{}`, found {}",
                    expected.len(),
                    config.arch.name(),
                    params.len()
                ),
            });
        }
        for (p, (name, rows, cols)) in params.iter_mut().zip(expected) {
            if p.name != name || p.value.rows() != rows || p.value.cols() != cols {
                return Err(Error::BadCheckpoint {
                    reason: format!(
                        "parameter `{}` ({}x{}) does not match expected `{name}` ({rows}x{cols})",
                        p.name,
                        p.value.rows(),
                        p.value.cols()
                    ),
                });
            }
            p.grad = DenseMatrix::zeros(rows, cols);
        }
        Ok(PandoraModel {
            config,
            params,
            trace: None,
        })
    }

    fn theta_index(&self) -> usize {
        self.params.len() - 1
    }

    /// Classifier weights.
    pub fn classifier(&self) -> &Parameter {
        &self.params[self.theta_index()]
    }

    /// Attribute-branch weights `(w1, w2)`.
    pub fn branch_a(&self) -> (&Parameter, &Parameter) {
        (&self.params[AFT_W1], &self.params[AFT_W2])
    }

    /// Structural-branch weights, absent in the single-branch baseline.
    pub fn branch_s(&self) -> Option<(&Parameter, &Parameter)> {
        matches!(self.config.arch, Architecture::Dual(_)).then(|| (&self.params[2], &self.params[3]))
    }

    pub fn params(&self) -> &[Parameter] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Parameter] {
        &mut self.params
    }

    pub(crate) fn set_param_values(&mut self, values: &[DenseMatrix]) {
        assert_eq!(values.len(), self.params.len());
        for (p, v) in self.params.iter_mut().zip(values) {
            p.value = v.clone();
        }
    }

    pub(crate) fn param_values(&self) -> Vec<DenseMatrix> {
        self.params.iter().map(|p| p.value.clone()).collect()
    }

    fn branch_forward(
        &self,
        w1: &DenseMatrix,
        w2: &DenseMatrix,
        propagation: &DenseMatrix,
        h0: &DenseMatrix,
        canonical: bool,
    ) -> Result<BranchTrace> {
        let propagate = |m: &DenseMatrix| {
            if canonical {
                propagation.matmul_canonical(m)
            } else {
                propagation.matmul(m)
            }
        };
        let m1 = h0.matmul(w1)?;
        let z1 = propagate(&m1)?;
        let a1 = apply_activation(&z1, Activation::Relu);
        let m2 = a1.matmul(w2)?;
        let a2 = propagate(&m2)?;
        Ok(BranchTrace { z1, a1, a2 })
    }

    fn embed_step(&self, inputs: &StepInputs, canonical: bool) -> Result<StepTrace> {
        let aft = self.branch_forward(
            &self.params[AFT_W1].value,
            &self.params[AFT_W2].value,
            inputs.propagation,
            inputs.aft,
            canonical,
        )?;
        match self.config.arch {
            Architecture::AftOnly => {
                let embedding = aft.a2.clone();
                Ok(StepTrace {
                    aft,
                    sft: None,
                    embedding,
                })
            }
            Architecture::Dual(mode) => {
                let sft = self.branch_forward(
                    &self.params[2].value,
                    &self.params[3].value,
                    inputs.propagation,
                    inputs.sft,
                    canonical,
                )?;
                let embedding = aggregate(&aft.a2, &sft.a2, mode)?;
                Ok(StepTrace {
                    aft,
                    sft: Some(sft),
                    embedding,
                })
            }
        }
    }

    fn run_forward(&self, steps: &[StepInputs], canonical: bool) -> Result<ForwardTrace> {
        if steps.is_empty() {
            return Err(Error::NoTimestamps);
        }
        let nodes = steps[0].propagation.rows();
        for (index, s) in steps.iter().enumerate() {
            if s.propagation.rows() != nodes || s.aft.rows() != nodes || s.sft.rows() != nodes {
                return Err(Error::TimestampNodeMismatch {
                    index,
                    got: s.aft.rows().min(s.propagation.rows()).min(s.sft.rows()),
                    expected: nodes,
                });
            }
        }
        let mut step_traces = Vec::with_capacity(steps.len());
        for s in steps {
            step_traces.push(self.embed_step(s, canonical)?);
        }
        let mut embedding_sum = step_traces[0].embedding.clone();
        for t in &step_traces[1..] {
            embedding_sum = embedding_sum.add(&t.embedding)?;
        }
        let logits = embedding_sum.matmul(&self.params[self.theta_index()].value)?;
        let probabilities = softmax_rows(&logits);
        Ok(ForwardTrace {
            steps: step_traces,
            embedding_sum,
            probabilities,
        })
    }

    /// Static forward pass; records the trace consumed by [`Self::backward`].
    ///
    /// Propagation sums accumulate in value order, so node relabeling
    /// commutes with this pass bit-for-bit.
    pub fn forward_static(&mut self, inputs: &StepInputs) -> Result<Prediction> {
        self.forward_dynamic(std::slice::from_ref(inputs))
    }

    /// Dynamic forward pass: per-timestamp embeddings summed before the
    /// classifier. With one timestamp this is exactly the static pass.
    pub fn forward_dynamic(&mut self, steps: &[StepInputs]) -> Result<Prediction> {
        let trace = self.run_forward(steps, true)?;
        let prediction = Prediction {
            probabilities: trace.probabilities.clone(),
            embedding: trace.embedding_sum.clone(),
        };
        self.trace = Some(trace);
        Ok(prediction)
    }

    /// Forward pass for the training loop: index-order accumulation, which
    /// is faster and still deterministic for fixed inputs.
    pub(crate) fn forward_training(&mut self, steps: &[StepInputs]) -> Result<Prediction> {
        let trace = self.run_forward(steps, false)?;
        let prediction = Prediction {
            probabilities: trace.probabilities.clone(),
            embedding: trace.embedding_sum.clone(),
        };
        self.trace = Some(trace);
        Ok(prediction)
    }

    /// Forward pass without recording a trace.
    pub fn predict(&self, steps: &[StepInputs]) -> Result<Prediction> {
        let trace = self.run_forward(steps, true)?;
        Ok(Prediction {
            probabilities: trace.probabilities,
            embedding: trace.embedding_sum,
        })
    }

    fn branch_backward(
        &mut self,
        w_indices: (usize, usize),
        trace: &BranchTrace,
        propagation: &DenseMatrix,
        h0: &DenseMatrix,
        d_a2: &DenseMatrix,
    ) -> Result<()> {
        // z2 = P (a1 w2), a2 = z2 (identity second layer); P is symmetric
        let d_m2 = propagation.matmul(d_a2)?;
        let d_w2 = trace.a1.transpose().matmul(&d_m2)?;
        let d_a1 = d_m2.matmul(&self.params[w_indices.1].value.transpose())?;
        let d_z1 = d_a1.hadamard(&activation_grad(&trace.z1, Activation::Relu))?;
        let d_m1 = propagation.matmul(&d_z1)?;
        let d_w1 = h0.transpose().matmul(&d_m1)?;
        self.params[w_indices.1].grad = self.params[w_indices.1].grad.add(&d_w2)?;
        self.params[w_indices.0].grad = self.params[w_indices.0].grad.add(&d_w1)?;
        Ok(())
    }

    /// Exact gradients of the mean training-row cross-entropy with respect
    /// to every parameter. Consumes the trace stored by the last forward
    /// pass; `steps` must be the same inputs that produced it.
    pub fn backward(
        &mut self,
        steps: &[StepInputs],
        targets: &DenseMatrix,
        train_rows: &[usize],
    ) -> Result<()> {
        let trace = self.trace.take().ok_or(Error::BackwardBeforeForward)?;
        assert_eq!(
            steps.len(),
            trace.steps.len(),
            "backward inputs do not match the recorded forward"
        );
        for p in &mut self.params {
            p.zero_grad();
        }

        let d_logits = softmax_cross_entropy_grad(targets, &trace.probabilities, train_rows);
        let theta = self.theta_index();
        self.params[theta].grad = trace.embedding_sum.transpose().matmul(&d_logits)?;
        let d_embedding = d_logits.matmul(&self.params[theta].value.transpose())?;

        for (step_trace, inputs) in trace.steps.iter().zip(steps) {
            match self.config.arch {
                Architecture::AftOnly => {
                    self.branch_backward(
                        (AFT_W1, AFT_W2),
                        &step_trace.aft,
                        inputs.propagation,
                        inputs.aft,
                        &d_embedding,
                    )?;
                }
                Architecture::Dual(mode) => {
                    let sft_trace = step_trace.sft.as_ref().expect("dual trace has sft branch");
                    let (d_aft, d_sft) = match mode {
                        AggregatorMode::Ha => (
                            d_embedding.hadamard(&sft_trace.a2)?,
                            d_embedding.hadamard(&step_trace.aft.a2)?,
                        ),
                        AggregatorMode::Su => (d_embedding.clone(), d_embedding.clone()),
                        AggregatorMode::Co => {
                            let e = self.config.embedding;
                            (
                                d_embedding.slice_cols(0, e),
                                d_embedding.slice_cols(e, 2 * e),
                            )
                        }
                    };
                    self.branch_backward(
                        (AFT_W1, AFT_W2),
                        &step_trace.aft,
                        inputs.propagation,
                        inputs.aft,
                        &d_aft,
                    )?;
                    self.branch_backward(
                        (2, 3),
                        sft_trace,
                        inputs.propagation,
                        inputs.sft,
                        &d_sft,
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// One-hot target matrix from class labels.
pub fn one_hot_targets(labels: &[usize], class_count: usize) -> Result<DenseMatrix> {
    let mut m = DenseMatrix::zeros(labels.len(), class_count);
    for (i, &label) in labels.iter().enumerate() {
        if label >= class_count {
            return Err(Error::LabelOutOfRange {
                label,
                classes: class_count,
            });
        }
        m.set(i, label, 1.0);
    }
    Ok(m)
}

/// Row-wise argmax of a probability matrix.
pub fn argmax_rows(probabilities: &DenseMatrix) -> Vec<usize> {
    (0..probabilities.rows())
        .map(|i| {
            let row = probabilities.row(i);
            row.iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite probabilities"))
                .map(|(j, _)| j)
                .expect("non-empty row")
        })
        .collect()
}

fn accuracy_on(probabilities: &DenseMatrix, labels: &[usize], rows: &[usize]) -> f64 {
    let predicted = argmax_rows(probabilities);
    let hits = rows.iter().filter(|&&i| predicted[i] == labels[i]).count();
    hits as f64 / rows.len() as f64
}

/// Training hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerConfig,
    pub max_epoch: usize,
    /// Epochs without validation-loss improvement before stopping.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: OptimizerConfig::adam(0.01),
            max_epoch: 300,
            patience: 50,
        }
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
}

/// Outcome of one training run. The model is left holding the parameters
/// of the best validation epoch.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub history: Vec<EpochRecord>,
    /// Epoch (1-based) of the restored best-validation checkpoint.
    pub iterations_to_converge: usize,
    pub epochs_run: usize,
    pub best_val_loss: f64,
    /// Mean wall-clock seconds per epoch.
    pub astt_seconds: f64,
    /// Total wall-clock seconds over all epochs.
    pub oit_seconds: f64,
    /// Final optimizer state, for checkpointing.
    pub optimizer_state: OptimizerState,
}

/// Full-batch training with validation patience and best-checkpoint restore.
pub fn train(
    model: &mut PandoraModel,
    steps: &[StepInputs],
    labels: &[usize],
    train_rows: &[usize],
    val_rows: &[usize],
    config: &TrainConfig,
) -> Result<TrainReport> {
    if train_rows.is_empty() {
        return Err(Error::EmptyTrainSplit);
    }
    if val_rows.is_empty() {
        return Err(Error::EmptyValidationSplit);
    }
    let targets = one_hot_targets(labels, model.config.class_count)?;
    let mut opt_state = OptimizerState::new(config.optimizer, model.params());

    let mut history = Vec::new();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut best_params = model.param_values();
    let mut stale = 0usize;
    let started = Instant::now();

    for epoch in 1..=config.max_epoch {
        let prediction = model.forward_training(steps)?;
        let (train_loss, _) = cross_entropy_masked(&targets, &prediction.probabilities, train_rows);
        if !train_loss.is_finite() {
            model.set_param_values(&best_params);
            return Err(Error::NonFiniteLoss { epoch });
        }
        let (val_loss, _) = cross_entropy_masked(&targets, &prediction.probabilities, val_rows);
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            train_acc: accuracy_on(&prediction.probabilities, labels, train_rows),
            val_acc: accuracy_on(&prediction.probabilities, labels, val_rows),
        });

        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best_params = model.param_values();
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }

        let step_result = model
            .backward(steps, &targets, train_rows)
            .and_then(|()| optimizer_step(model.params_mut(), &mut opt_state));
        if let Err(e) = step_result {
            model.set_param_values(&best_params);
            return Err(e);
        }
    }

    let oit = started.elapsed().as_secs_f64();
    model.set_param_values(&best_params);
    let epochs_run = history.len();
    Ok(TrainReport {
        iterations_to_converge: best_epoch,
        epochs_run,
        best_val_loss: best_val,
        astt_seconds: oit / epochs_run.max(1) as f64,
        oit_seconds: oit,
        history,
        optimizer_state: opt_state,
    })
}

/// Classification quality plus run-efficiency figures. The timing and
/// iteration fields are filled by the training pipeline; plain evaluation
/// leaves them zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub confusion: Vec<Vec<u64>>,
    pub iterations_to_converge: usize,
    pub astt_seconds: f64,
    pub oit_seconds: f64,
    pub tet_seconds: f64,
}

/// Accuracy, confusion matrix, and macro precision/recall/F1 over the
/// given rows. Macro averages run over classes present in the labels or
/// the predictions; empty per-class ratios count as zero.
pub fn evaluate(
    probabilities: &DenseMatrix,
    labels: &[usize],
    rows: &[usize],
) -> Result<Metrics> {
    if rows.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let classes = probabilities.cols();
    for &i in rows {
        if labels[i] >= classes {
            return Err(Error::LabelOutOfRange {
                label: labels[i],
                classes,
            });
        }
    }
    let predicted = argmax_rows(probabilities);
    let mut confusion = vec![vec![0u64; classes]; classes];
    for &i in rows {
        confusion[labels[i]][predicted[i]] += 1;
    }
    let correct: u64 = (0..classes).map(|c| confusion[c][c]).sum();
    let accuracy = correct as f64 / rows.len() as f64;

    let mut precisions = Vec::new();
    let mut recalls = Vec::new();
    let mut f1s = Vec::new();
    for (c, row) in confusion.iter().enumerate() {
        let tp = row[c];
        let fp: u64 = (0..classes).filter(|&r| r != c).map(|r| confusion[r][c]).sum();
        let fn_: u64 = (0..classes).filter(|&p| p != c).map(|p| row[p]).sum();
        let present = tp + fp + fn_ > 0;
        if !present {
            continue;
        }
        let precision = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = if tp + fn_ == 0 {
            0.0
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        precisions.push(precision);
        recalls.push(recall);
        f1s.push(f1);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;

    Ok(Metrics {
        accuracy,
        macro_precision: mean(&precisions),
        macro_recall: mean(&recalls),
        macro_f1: mean(&f1s),
        confusion,
        iterations_to_converge: 0,
        astt_seconds: 0.0,
        oit_seconds: 0.0,
        tet_seconds: 0.0,
    })
}

/// Finite-difference check of the model gradients: forward/backward once,
/// then compare stored gradients against central differences of the
/// training loss on `min_samples` sampled parameter entries.
pub fn grad_check_model(
    model: &mut PandoraModel,
    steps: &[StepInputs],
    labels: &[usize],
    train_rows: &[usize],
    h: f64,
    min_samples: usize,
    seed: u64,
) -> Result<f64> {
    use rand::Rng;

    let targets = one_hot_targets(labels, model.config.class_count)?;
    model.forward_dynamic(steps)?;
    model.backward(steps, &targets, train_rows)?;
    let analytic: Vec<DenseMatrix> = model.params().iter().map(|p| p.grad.clone()).collect();

    let sizes: Vec<usize> = model.params().iter().map(|p| p.value.data().len()).collect();
    let total: usize = sizes.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<(usize, usize)> = if total <= min_samples {
        sizes
            .iter()
            .enumerate()
            .flat_map(|(pi, &len)| (0..len).map(move |ei| (pi, ei)))
            .collect()
    } else {
        (0..min_samples)
            .map(|_| {
                let mut flat = rng.random_range(0..total);
                for (pi, &len) in sizes.iter().enumerate() {
                    if flat < len {
                        return (pi, flat);
                    }
                    flat -= len;
                }
                unreachable!("flat index within total")
            })
            .collect()
    };

    let loss_at = |model: &PandoraModel| -> Result<f64> {
        let prediction = model.predict(steps)?;
        Ok(cross_entropy_masked(&targets, &prediction.probabilities, train_rows).0)
    };

    let mut max_rel = 0.0f64;
    for (pi, ei) in picks {
        let original = model.params[pi].value.data()[ei];
        model.params[pi].value.data_mut()[ei] = original + h;
        let plus = loss_at(model)?;
        model.params[pi].value.data_mut()[ei] = original - h;
        let minus = loss_at(model)?;
        model.params[pi].value.data_mut()[ei] = original;

        let numeric = (plus - minus) / (2.0 * h);
        let rel = (analytic[pi].data()[ei] - numeric).abs() / numeric.abs().max(crate::nn::GRAD_CHECK_FLOOR);
        max_rel = max_rel.max(rel);
    }
    Ok(max_rel)
}

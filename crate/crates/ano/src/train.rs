//! Loss functions, optimizers, the training loop, evaluation metrics and run
//! logging.
//!
//! Everything here is deterministic given (seed, config, data): parameter
//! initialization, epoch shuffling and batching all derive from the run seed,
//! per-sample work is parallel but accumulated in index order, and optimizer
//! state updates are serialized.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::autodiff::{grad_model, ThetaGradMethod};
use crate::circuit::{forward, CircuitConfig, InitSpec, ModelParams};
use crate::data::{Dataset, Standardizer};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    CrossEntropy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

/// Supervision for a single sample: a class index, or an explicit target
/// vector (regression / one-hot).
#[derive(Clone, Debug)]
pub enum LossTarget {
    Label(usize),
    Vector(Vec<f64>),
}

pub fn one_hot(label: usize, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[label] = 1.0;
    v
}

/// Squared-norm loss of a single sample: ||outputs - target||^2. Batch means
/// are taken by the caller.
pub fn mse_loss(outputs: &[f64], target: &[f64]) -> Result<f64> {
    if outputs.len() != target.len() {
        return Err(Error::input(format!(
            "output length {} does not match target length {}",
            outputs.len(),
            target.len()
        )));
    }
    Ok(outputs
        .iter()
        .zip(target.iter())
        .map(|(o, t)| (o - t) * (o - t))
        .sum())
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// -log softmax(outputs)[label], computed with max subtraction.
pub fn cross_entropy_loss(logits: &[f64], label: usize) -> Result<f64> {
    if label >= logits.len() {
        return Err(Error::input(format!(
            "label {label} out of range for {} outputs",
            logits.len()
        )));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    Ok(-(logits[label] - max - log_sum))
}

/// Loss value and its gradient with respect to the model outputs.
pub fn loss_and_output_grad(
    outputs: &[f64],
    target: &LossTarget,
    kind: LossKind,
) -> Result<(f64, Vec<f64>)> {
    match kind {
        LossKind::Mse => {
            let t: Vec<f64> = match target {
                LossTarget::Label(l) => {
                    if *l >= outputs.len() {
                        return Err(Error::input(format!(
                            "label {l} out of range for {} outputs",
                            outputs.len()
                        )));
                    }
                    one_hot(*l, outputs.len())
                }
                LossTarget::Vector(v) => v.clone(),
            };
            let loss = mse_loss(outputs, &t)?;
            let grad = outputs.iter().zip(t.iter()).map(|(o, y)| 2.0 * (o - y)).collect();
            Ok((loss, grad))
        }
        LossKind::CrossEntropy => {
            let label = match target {
                LossTarget::Label(l) => *l,
                LossTarget::Vector(_) => {
                    return Err(Error::input(
                        "cross-entropy expects a class label target".to_string(),
                    ))
                }
            };
            let loss = cross_entropy_loss(outputs, label)?;
            let mut grad = softmax(outputs);
            grad[label] -= 1.0;
            Ok((loss, grad))
        }
    }
}

/// First/second moment estimates for Adam.
#[derive(Clone, Debug, Default)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One Adam update with bias correction; `t` is the 1-based step count.
#[allow(clippy::too_many_arguments)]
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    t: usize,
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
) {
    let bc1 = 1.0 - beta1.powi(t as i32);
    let bc2 = 1.0 - beta2.powi(t as i32);
    for i in 0..params.len() {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
    }
}

pub fn sgd_step(params: &mut [f64], grads: &[f64], learning_rate: f64) {
    for (p, g) in params.iter_mut().zip(grads.iter()) {
        *p -= learning_rate * g;
    }
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_epsilon() -> f64 {
    1e-8
}
fn default_epochs() -> usize {
    100
}
fn default_batch_size() -> usize {
    32
}
fn default_learning_rate() -> f64 {
    0.01
}
fn default_optimizer() -> OptimizerKind {
    OptimizerKind::Adam
}
fn default_loss() -> LossKind {
    LossKind::CrossEntropy
}
fn default_seed() -> u64 {
    42
}
fn default_theta_half_range() -> f64 {
    std::f64::consts::PI
}
fn default_phi_std() -> f64 {
    0.1
}
fn default_head_std() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerKind,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_loss")]
    pub loss: LossKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub theta_grad: ThetaGradMethod,
    /// theta ~ Uniform(-r, r).
    #[serde(default = "default_theta_half_range")]
    pub init_theta_half_range: f64,
    /// phi ~ Normal(0, std).
    #[serde(default = "default_phi_std")]
    pub init_phi_std: f64,
    /// head weights ~ Normal(0, std), bias 0.
    #[serde(default = "default_head_std")]
    pub init_head_std: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1".to_string()));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1".to_string()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }

    pub fn init_spec(&self) -> InitSpec {
        InitSpec {
            theta_half_range: self.init_theta_half_range,
            phi_std: self.init_phi_std,
            head_std: self.init_head_std,
        }
    }
}

/// One row of the training log.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_accuracy: f64,
    pub wall_time_s: f64,
}

fn target_for(label: usize, kind: LossKind, d_out: usize) -> LossTarget {
    match kind {
        LossKind::Mse => LossTarget::Vector(one_hot(label, d_out)),
        LossKind::CrossEntropy => LossTarget::Label(label),
    }
}

/// Train a model. Test accuracy is logged after every epoch.
pub fn fit(
    train_set: &Dataset,
    test_set: &Dataset,
    tc: &TrainConfig,
    cc: &CircuitConfig,
) -> Result<(ModelParams, Vec<EpochMetrics>)> {
    tc.validate()?;
    cc.validate()?;
    if train_set.feature_dim() != cc.n_qubits {
        return Err(Error::config(format!(
            "feature dimension {} does not match n_qubits {}",
            train_set.feature_dim(),
            cc.n_qubits
        )));
    }
    for ds in [train_set, test_set] {
        if let Some(&bad) = ds.labels.iter().find(|&&l| l >= cc.d_out) {
            return Err(Error::config(format!(
                "label {bad} needs d_out > {bad}, model has d_out = {}",
                cc.d_out
            )));
        }
    }

    let mut master = ChaCha8Rng::seed_from_u64(tc.seed);
    let mut init_rng = ChaCha8Rng::seed_from_u64(master.next_u64());
    let params0 = ModelParams::init(cc, &tc.init_spec(), &mut init_rng)?;
    let mut flat = params0.flatten();
    let mut adam = AdamState::new(flat.len());
    let mut step = 0usize;

    let mut indices: Vec<usize> = (0..train_set.len()).collect();
    let mut metrics = Vec::with_capacity(tc.epochs);
    for epoch in 1..=tc.epochs {
        let t0 = Instant::now();
        indices.shuffle(&mut master);
        let mut loss_sum = 0.0;
        for batch in indices.chunks(tc.batch_size) {
            let params = ModelParams::from_flat(cc, &flat)?;
            let per_sample: Vec<_> = batch
                .par_iter()
                .map(|&i| {
                    let target = target_for(train_set.labels[i], tc.loss, cc.d_out);
                    grad_model(
                        &train_set.features[i],
                        &target,
                        &params,
                        cc,
                        tc.loss,
                        tc.theta_grad,
                    )
                })
                .collect::<Result<_>>()?;
            let scale = 1.0 / batch.len() as f64;
            let mut grad_flat = vec![0.0; flat.len()];
            for (loss, grad) in &per_sample {
                loss_sum += loss;
                for (acc, g) in grad_flat.iter_mut().zip(grad.flatten().iter()) {
                    *acc += g * scale;
                }
            }
            step += 1;
            match tc.optimizer {
                OptimizerKind::Adam => adam_step(
                    &mut flat,
                    &grad_flat,
                    &mut adam,
                    step,
                    tc.learning_rate,
                    tc.beta1,
                    tc.beta2,
                    tc.epsilon,
                ),
                OptimizerKind::Sgd => sgd_step(&mut flat, &grad_flat, tc.learning_rate),
            }
        }
        let params = ModelParams::from_flat(cc, &flat)?;
        let test_accuracy = evaluate_accuracy(&params, cc, test_set)?;
        metrics.push(EpochMetrics {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            test_accuracy,
            wall_time_s: t0.elapsed().as_secs_f64(),
        });
    }
    Ok((ModelParams::from_flat(cc, &flat)?, metrics))
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Fraction of samples whose argmax output matches the label; ties break to
/// the lowest class index.
pub fn evaluate_accuracy(params: &ModelParams, cc: &CircuitConfig, ds: &Dataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::input("empty dataset".to_string()));
    }
    let hits: Vec<bool> = (0..ds.len())
        .into_par_iter()
        .map(|i| Ok(argmax(&forward(&ds.features[i], params, cc)?) == ds.labels[i]))
        .collect::<Result<_>>()?;
    Ok(hits.iter().filter(|h| **h).count() as f64 / ds.len() as f64)
}

/// Per-class accuracy; `None` for classes absent from the dataset.
pub fn per_class_accuracy(
    params: &ModelParams,
    cc: &CircuitConfig,
    ds: &Dataset,
) -> Result<Vec<Option<f64>>> {
    if ds.is_empty() {
        return Err(Error::input("empty dataset".to_string()));
    }
    let predictions: Vec<usize> = (0..ds.len())
        .into_par_iter()
        .map(|i| Ok(argmax(&forward(&ds.features[i], params, cc)?)))
        .collect::<Result<_>>()?;
    let mut correct = vec![0usize; ds.n_classes];
    let mut total = vec![0usize; ds.n_classes];
    for (pred, &label) in predictions.iter().zip(ds.labels.iter()) {
        total[label] += 1;
        if *pred == label {
            correct[label] += 1;
        }
    }
    Ok(correct
        .iter()
        .zip(total.iter())
        .map(|(&c, &t)| if t == 0 { None } else { Some(c as f64 / t as f64) })
        .collect())
}

/// JSON-lines rendering of the epoch log, one object per epoch.
pub fn metrics_to_jsonl(metrics: &[EpochMetrics]) -> String {
    let mut out = String::new();
    for m in metrics {
        out.push_str(&serde_json::to_string(m).expect("metrics serialize"));
        out.push('\n');
    }
    out
}

/// Everything needed to reload and re-evaluate a trained model, including the
/// exact preprocessing and split that produced its test set.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct Checkpoint {
    pub circuit: CircuitConfig,
    /// Flat parameters in the canonical order (theta, per-group phi, head).
    pub params: Vec<f64>,
    pub meta: CheckpointMeta,
}

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct CheckpointMeta {
    pub task: String,
    pub trial_seed: u64,
    pub test_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset_prefix: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardizer: Option<Standardizer>,
    pub final_test_accuracy: f64,
}

impl Checkpoint {
    pub fn model_params(&self) -> Result<ModelParams> {
        ModelParams::from_flat(&self.circuit, &self.params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::input(format!("checkpoint serialization failed: {e}")))?;
        let mut f = std::fs::File::create(path)?;
        f.write_all(text.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let ckpt: Checkpoint = serde_json::from_str(&text)
            .map_err(|e| Error::input(format!("corrupt checkpoint {}: {e}", path.display())))?;
        ckpt.circuit.validate()?;
        // Shape check up front so a truncated parameter list fails loudly.
        ckpt.model_params()?;
        Ok(ckpt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::SchemeKind;
    use crate::data::SplitTag;
    use crate::statevec::RotationAxis;

    #[test]
    fn mse_examples() {
        assert_eq!(mse_loss(&[0.3, -0.4], &[0.3, -0.4]).unwrap(), 0.0);
        assert_eq!(mse_loss(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
        assert!(mse_loss(&[1.0], &[0.0, 1.0]).is_err());

        // Independent scalar-loop computation.
        let o = [0.2, -1.3, 0.77];
        let t = [1.0, 0.0, -0.5];
        let mut expected = 0.0;
        for i in 0..3 {
            let d = o[i] - t[i];
            expected += d * d;
        }
        assert!((mse_loss(&o, &t).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn cross_entropy_examples() {
        let uniform = vec![0.7; 10];
        assert!((cross_entropy_loss(&uniform, 3).unwrap() - (10.0f64).ln()).abs() < 1e-12);

        // Stability: huge logit must not overflow.
        let v = cross_entropy_loss(&[1000.0, 0.0], 0).unwrap();
        assert!(v.is_finite() && v.abs() < 1e-12);

        assert!(cross_entropy_loss(&[0.0, 0.0], 2).is_err());

        // Compensated-summation reference on random logits.
        let logits = [2.3f64, -1.1, 0.4, 3.9, -0.2];
        for label in 0..logits.len() {
            let mut terms: Vec<f64> = logits.iter().map(|l| l.exp()).collect();
            terms.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut sum = 0.0;
            let mut comp = 0.0;
            for t in terms {
                let y = t - comp;
                let s = sum + y;
                comp = (s - sum) - y;
                sum = s;
            }
            let reference = sum.ln() - logits[label];
            assert!((cross_entropy_loss(&logits, label).unwrap() - reference).abs() < 1e-12);
        }
    }

    #[test]
    fn adam_zero_gradient_keeps_params() {
        let mut p = vec![0.5, -0.25];
        let mut st = AdamState::new(2);
        for t in 1..=10 {
            adam_step(&mut p, &[0.0, 0.0], &mut st, t, 0.1, 0.9, 0.999, 1e-8);
        }
        assert_eq!(p, vec![0.5, -0.25]);
    }

    #[test]
    fn adam_step_size_approaches_lr_times_sign() {
        let mut p = vec![0.0];
        let mut st = AdamState::new(1);
        let lr = 0.01;
        let mut prev = p[0];
        for t in 1..=500 {
            adam_step(&mut p, &[3.0], &mut st, t, lr, 0.9, 0.999, 1e-8);
            if t > 400 {
                let step = prev - p[0];
                assert!((step - lr).abs() < 1e-4, "step {step}");
            }
            prev = p[0];
        }
    }

    #[test]
    fn adam_three_step_trace() {
        // Hand-computed trace for g = 1 each step, lr = 0.1 and defaults.
        // Bias correction makes the very first step exactly lr.
        let mut p = vec![0.0];
        let mut st = AdamState::new(1);
        let (b1, b2, eps) = (0.9, 0.999, 1e-8);
        let lr = 0.1;

        adam_step(&mut p, &[1.0], &mut st, 1, lr, b1, b2, eps);
        // m=0.1, v=0.001, m_hat=1, v_hat=1 -> p = -lr/(1+eps).
        assert!((p[0] + 0.1 / (1.0 + 1e-8)).abs() < 1e-15);

        adam_step(&mut p, &[1.0], &mut st, 2, lr, b1, b2, eps);
        let m2 = 0.9 * 0.1 + 0.1;
        let v2 = 0.999 * 0.001 + 0.001;
        let m2h = m2 / (1.0 - 0.9f64.powi(2));
        let v2h = v2 / (1.0 - 0.999f64.powi(2));
        let expected2 = -0.1 / (1.0 + 1e-8) - lr * m2h / (v2h.sqrt() + eps);
        assert!((p[0] - expected2).abs() < 1e-15);

        adam_step(&mut p, &[1.0], &mut st, 3, lr, b1, b2, eps);
        let m3 = 0.9 * m2 + 0.1;
        let v3 = 0.999 * v2 + 0.001;
        let m3h = m3 / (1.0 - 0.9f64.powi(3));
        let v3h = v3 / (1.0 - 0.999f64.powi(3));
        let expected3 = expected2 - lr * m3h / (v3h.sqrt() + eps);
        assert!((p[0] - expected3).abs() < 1e-15);
    }

    fn toy_dataset(features: Vec<Vec<f64>>, labels: Vec<usize>, n_classes: usize) -> Dataset {
        Dataset::new(features, labels, n_classes, SplitTag::Train).unwrap()
    }

    fn tiny_circuit() -> CircuitConfig {
        CircuitConfig {
            n_qubits: 2,
            n_layers: 1,
            use_rotations: true,
            scheme: SchemeKind::SlidingKLocal,
            k: Some(1),
            subset: None,
            d_out: 2,
            encoding_axis: RotationAxis::Y,
        }
    }

    #[test]
    fn zero_learning_rate_is_rejected_and_sgd_identity() {
        let tc = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        assert!(tc.validate().is_err());

        // The spirit of the example: no update means parameters stay at
        // initialization. SGD with zero gradient is an exact identity.
        let mut p = vec![1.0, 2.0];
        sgd_step(&mut p, &[0.0, 0.0], 0.5);
        assert_eq!(p, vec![1.0, 2.0]);
    }

    #[test]
    fn single_sample_overfit() {
        // Plain gradient descent so the descent is smooth enough to assert
        // monotonicity; Adam's step-size adaptation oscillates near minima.
        let ds = toy_dataset(vec![vec![0.4, -0.3]], vec![1], 2);
        let tc = TrainConfig {
            epochs: 400,
            batch_size: 1,
            learning_rate: 0.1,
            optimizer: OptimizerKind::Sgd,
            loss: LossKind::Mse,
            seed: 3,
            ..TrainConfig::default()
        };
        let cc = tiny_circuit();
        let (params, metrics) = fit(&ds, &ds, &tc, &cc).unwrap();
        let final_loss = metrics.last().unwrap().train_loss;
        assert!(final_loss <= 1e-3, "final loss {final_loss}");
        // The memorized point is classified perfectly.
        assert_eq!(evaluate_accuracy(&params, &cc, &ds).unwrap(), 1.0);
        // Loss is non-increasing (within float noise) after the warmup.
        for w in metrics[3..].windows(2) {
            assert!(
                w[1].train_loss <= w[0].train_loss + 1e-9,
                "epoch {}: {} -> {}",
                w[0].epoch,
                w[0].train_loss,
                w[1].train_loss
            );
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let ds = toy_dataset(
            vec![
                vec![0.4, -0.3],
                vec![1.2, 0.8],
                vec![-0.6, 0.1],
                vec![0.0, -1.5],
            ],
            vec![0, 1, 0, 1],
            2,
        );
        let tc = TrainConfig {
            epochs: 5,
            batch_size: 2,
            seed: 99,
            ..TrainConfig::default()
        };
        let cc = tiny_circuit();
        let (p1, m1) = fit(&ds, &ds, &tc, &cc).unwrap();
        let (p2, m2) = fit(&ds, &ds, &tc, &cc).unwrap();
        assert_eq!(p1.flatten(), p2.flatten());
        for (a, b) in m1.iter().zip(m2.iter()) {
            assert_eq!(a.train_loss.to_bits(), b.train_loss.to_bits());
            assert_eq!(a.test_accuracy.to_bits(), b.test_accuracy.to_bits());
        }
    }

    #[test]
    fn accuracy_examples() {
        // Constant outputs predict class 0; balanced binary set -> 0.5.
        let ds = toy_dataset(
            vec![vec![0.1, 0.2], vec![0.3, 0.4], vec![0.5, 0.6], vec![0.7, 0.8]],
            vec![0, 0, 1, 1],
            2,
        );
        let cc = CircuitConfig {
            use_rotations: false,
            n_layers: 0,
            ..tiny_circuit()
        };
        let params = ModelParams::zeros(&cc).unwrap();
        // All-zero observables give identical (zero) outputs for every class.
        let acc = evaluate_accuracy(&params, &cc, &ds).unwrap();
        assert_eq!(acc, 0.5);

        let empty = Dataset::new(vec![], vec![], 2, SplitTag::Test);
        assert!(empty.is_err());
    }

    #[test]
    fn range_extension_toy() {
        // MSE target 2.0 on one qubit. A fixed Pauli observable is pinned to
        // [-1, 1], so the loss cannot drop below (2 - 1)^2; a trainable
        // 1-local observable expands its spectrum and reaches the target.
        use crate::autodiff::{grad_model, ThetaGradMethod};

        let x = [0.4];
        let target = LossTarget::Vector(vec![2.0]);

        let run = |cc: &CircuitConfig, epochs: usize, lr: f64| -> f64 {
            let mut rng = ChaCha8Rng::seed_from_u64(10);
            let params = ModelParams::init(cc, &InitSpec::default(), &mut rng).unwrap();
            let mut flat = params.flatten();
            let mut adam = AdamState::new(flat.len());
            let mut last = f64::INFINITY;
            for t in 1..=epochs {
                let p = ModelParams::from_flat(cc, &flat).unwrap();
                let (loss, grad) =
                    grad_model(&x, &target, &p, cc, LossKind::Mse, ThetaGradMethod::Shift)
                        .unwrap();
                last = loss;
                adam_step(
                    &mut flat,
                    &grad.flatten(),
                    &mut adam,
                    t,
                    lr,
                    0.9,
                    0.999,
                    1e-8,
                );
            }
            last
        };

        let pauli = CircuitConfig {
            n_qubits: 1,
            n_layers: 1,
            use_rotations: true,
            scheme: SchemeKind::FixedPauliZ,
            k: None,
            subset: None,
            d_out: 1,
            encoding_axis: RotationAxis::Y,
        };
        let pauli_loss = run(&pauli, 400, 0.05);
        assert!(pauli_loss >= (2.0 - 1.0) * (2.0 - 1.0) - 0.01, "{pauli_loss}");

        let ano = CircuitConfig {
            scheme: SchemeKind::SlidingKLocal,
            k: Some(1),
            ..pauli
        };
        let ano_loss = run(&ano, 400, 0.05);
        assert!(ano_loss <= 1e-3, "{ano_loss}");
    }
}

//! The `ano` command line: train, eval, gradcheck, spectrum, oracle,
//! paramcount.
//!
//! Exit codes: 0 success; 1 a verification command found violations;
//! 2 configuration or input errors; 3 data errors (missing, unreadable or
//! malformed files).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::autodiff::{finite_difference_gradient, grad_model, loss_of_flat, ThetaGradMethod};
use crate::circuit::{
    count_parameters, parameter_breakdown, CircuitConfig, InitSpec, ModelParams, SchemeKind,
};
use crate::config::{load_run_config, render_config, resolve_data_dir, RunConfig, Task};
use crate::data::{
    load_banknote_csv, load_mnist_idx, resize_dataset_4x4, split, take_prefix, Dataset,
    Standardizer,
};
use crate::dense::{run_closed_form_suite, run_dense_kron_suite};
use crate::error::{Error, Result};
use crate::observables::{eigen_spectrum, rayleigh_bounds, to_matrix};
use crate::statevec::RotationAxis;
use crate::train::{
    evaluate_accuracy, fit, metrics_to_jsonl, per_class_accuracy, Checkpoint, CheckpointMeta,
    LossKind, LossTarget, TrainConfig,
};

#[derive(Parser, Debug)]
#[command(
    name = "ano",
    version,
    about = "Variational quantum circuits with trainable k-local observables"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run seeded training trials; writes metrics, checkpoints and a summary
    Train(TrainArgs),
    /// Evaluate a checkpoint on its recorded test split
    Eval(EvalArgs),
    /// Compare analytic gradients against central finite differences
    Gradcheck(ConfigArgs),
    /// Print the eigen-spectrum of a trained group observable
    Spectrum(SpectrumArgs),
    /// Run an oracle-equivalence suite (closedform, densekron, all)
    Oracle(OracleArgs),
    /// Print the exact trainable-parameter count of a configuration
    Paramcount(ConfigArgs),
}

#[derive(Args, Debug, Default)]
pub struct ConfigArgs {
    /// TOML run configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Task defaults to start from when no config file is given
    #[arg(long, value_enum)]
    pub task: Option<Task>,
    /// Dotted-path overrides, e.g. circuit.k=3 train.epochs=50
    #[arg(value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        load_run_config(self.config.as_deref(), self.task, &self.overrides)
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output directory (overrides the config)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Base seed (trial i uses seed + i)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of independent trials
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    pub checkpoint: PathBuf,
    /// Data root (defaults to $ANO_DATA_DIR, then ./data)
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    pub checkpoint: PathBuf,
    /// Measurement group index (0-based)
    #[arg(long, default_value_t = 0)]
    pub group: usize,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// closedform | densekron | all
    pub suite: String,
    /// Number of random cases (defaults: closedform 1000, densekron 200)
    #[arg(long)]
    pub cases: Option<usize>,
    #[arg(long, default_value_t = 20260810)]
    pub seed: u64,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Input(_) => 2,
        Error::Parse { .. } | Error::Format(_) | Error::Io(_) => 3,
    }
}

pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Train(args) => cmd_train(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Gradcheck(args) => cmd_gradcheck(&args),
        Command::Spectrum(args) => cmd_spectrum(&args),
        Command::Oracle(args) => cmd_oracle(&args),
        Command::Paramcount(args) => cmd_paramcount(&args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Load and preprocess the raw dataset of a task (before split and scaling).
pub fn load_task_dataset(rc: &RunConfig) -> Result<Dataset> {
    match rc.task {
        Task::Banknote => load_banknote_csv(&rc.banknote_csv_path()),
        Task::Mnist => {
            let (images, labels) = rc.mnist_paths();
            let ds = load_mnist_idx(&images, &labels)?;
            let ds = resize_dataset_4x4(&ds)?;
            match rc.data.subset_prefix {
                Some(n) => take_prefix(&ds, n),
                None => Ok(ds),
            }
        }
    }
}

#[derive(Debug, serde::Serialize)]
struct TrialSummary {
    trial: usize,
    seed: u64,
    final_test_accuracy: f64,
    final_train_loss: f64,
    metrics_file: String,
    checkpoint_file: String,
}

#[derive(Debug, serde::Serialize)]
struct RunSummary {
    task: Task,
    n_trials: usize,
    param_count: usize,
    rotations: usize,
    observables: usize,
    head: usize,
    mean_test_accuracy: f64,
    std_test_accuracy: f64,
    trials: Vec<TrialSummary>,
}

/// One seeded trial: split, standardize, fit, persist.
pub fn run_trial(rc: &RunConfig, full: &Dataset, trial: usize) -> Result<TrainedTrial> {
    let trial_seed = rc.train.seed.wrapping_add(trial as u64);
    let (train_raw, test_raw) = split(full, rc.data.test_fraction, trial_seed)?;
    let standardizer = match rc.task {
        Task::Banknote => Standardizer::fit_zscore(&train_raw)?,
        Task::Mnist => Standardizer::AngleScale,
    };
    let train_set = standardizer.apply(&train_raw)?;
    let test_set = standardizer.apply(&test_raw)?;
    let tc = TrainConfig {
        seed: trial_seed,
        ..rc.train.clone()
    };
    let (params, metrics) = fit(&train_set, &test_set, &tc, &rc.circuit)?;
    Ok(TrainedTrial {
        trial,
        seed: trial_seed,
        standardizer,
        params,
        metrics,
    })
}

pub struct TrainedTrial {
    pub trial: usize,
    pub seed: u64,
    pub standardizer: Standardizer,
    pub params: ModelParams,
    pub metrics: Vec<crate::train::EpochMetrics>,
}

pub fn cmd_train(args: &TrainArgs) -> Result<i32> {
    let mut rc = args.config.load()?;
    if let Some(out) = &args.out {
        rc.out_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        rc.train.seed = seed;
    }
    if let Some(trials) = args.trials {
        rc.n_trials = trials;
    }
    rc.validate()?;

    let full = load_task_dataset(&rc)?;
    std::fs::create_dir_all(&rc.out_dir)?;
    std::fs::write(rc.out_dir.join("config.toml"), render_config(&rc)?)?;

    let trials: Vec<TrainedTrial> = (0..rc.n_trials)
        .into_par_iter()
        .map(|t| run_trial(&rc, &full, t))
        .collect::<Result<_>>()?;

    let mut summaries = Vec::with_capacity(trials.len());
    for t in &trials {
        let (metrics_file, checkpoint_file) = if rc.n_trials == 1 {
            ("metrics.jsonl".to_string(), "checkpoint.json".to_string())
        } else {
            (
                format!("metrics_trial{}.jsonl", t.trial),
                format!("checkpoint_trial{}.json", t.trial),
            )
        };
        std::fs::write(rc.out_dir.join(&metrics_file), metrics_to_jsonl(&t.metrics))?;
        let final_acc = t.metrics.last().map(|m| m.test_accuracy).unwrap_or(0.0);
        let ckpt = Checkpoint {
            circuit: rc.circuit.clone(),
            params: t.params.flatten(),
            meta: CheckpointMeta {
                task: rc.task.to_string(),
                trial_seed: t.seed,
                test_fraction: rc.data.test_fraction,
                subset_prefix: rc.data.subset_prefix,
                standardizer: Some(t.standardizer.clone()),
                final_test_accuracy: final_acc,
            },
        };
        ckpt.save(&rc.out_dir.join(&checkpoint_file))?;
        summaries.push(TrialSummary {
            trial: t.trial,
            seed: t.seed,
            final_test_accuracy: final_acc,
            final_train_loss: t.metrics.last().map(|m| m.train_loss).unwrap_or(f64::NAN),
            metrics_file,
            checkpoint_file,
        });
    }

    let accs: Vec<f64> = summaries.iter().map(|s| s.final_test_accuracy).collect();
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    let std = if accs.len() > 1 {
        (accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (accs.len() - 1) as f64)
            .sqrt()
    } else {
        0.0
    };
    let breakdown = parameter_breakdown(&rc.circuit)?;
    let summary = RunSummary {
        task: rc.task,
        n_trials: rc.n_trials,
        param_count: breakdown.total(),
        rotations: breakdown.rotations,
        observables: breakdown.observables,
        head: breakdown.head,
        mean_test_accuracy: mean,
        std_test_accuracy: std,
        trials: summaries,
    };
    let text = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::input(format!("summary serialization: {e}")))?;
    std::fs::write(rc.out_dir.join("summary.json"), &text)?;
    println!("{text}");
    Ok(0)
}

fn dataset_for_meta(meta: &CheckpointMeta, data_dir: &Path) -> Result<Dataset> {
    match meta.task.as_str() {
        "banknote" => load_banknote_csv(
            &data_dir
                .join("banknote")
                .join("data_banknote_authentication.txt"),
        ),
        "mnist" => {
            let dir = data_dir.join("mnist");
            let ds = load_mnist_idx(
                &dir.join("train-images-idx3-ubyte"),
                &dir.join("train-labels-idx1-ubyte"),
            )?;
            let ds = resize_dataset_4x4(&ds)?;
            match meta.subset_prefix {
                Some(n) => take_prefix(&ds, n),
                None => Ok(ds),
            }
        }
        other => Err(Error::input(format!("checkpoint has unknown task `{other}`"))),
    }
}

pub fn cmd_eval(args: &EvalArgs) -> Result<i32> {
    let ckpt = Checkpoint::load(&args.checkpoint)?;
    let params = ckpt.model_params()?;
    let data_dir = resolve_data_dir(args.data.as_deref());
    let full = dataset_for_meta(&ckpt.meta, &data_dir)?;
    let (_, test_raw) = split(&full, ckpt.meta.test_fraction, ckpt.meta.trial_seed)?;
    let standardizer = ckpt
        .meta
        .standardizer
        .clone()
        .ok_or_else(|| Error::input("checkpoint lacks preprocessing metadata".to_string()))?;
    let test_set = standardizer.apply(&test_raw)?;

    let accuracy = evaluate_accuracy(&params, &ckpt.circuit, &test_set)?;
    let per_class = per_class_accuracy(&params, &ckpt.circuit, &test_set)?;
    let report = serde_json::json!({
        "checkpoint": args.checkpoint.display().to_string(),
        "n_test": test_set.len(),
        "test_accuracy": accuracy,
        "per_class_accuracy": per_class,
        "recorded_test_accuracy": ckpt.meta.final_test_accuracy,
    });
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    Ok(0)
}

/// Deliberate gradient corruption, used as a negative control in tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftFault {
    None,
    /// Scales theta gradients, simulating a wrong shift constant.
    Exaggerate,
}

#[derive(Debug, serde::Serialize)]
pub struct GradcheckReport {
    pub tolerance: f64,
    pub max_scaled_error_theta: Option<f64>,
    pub max_scaled_error_phi: Option<f64>,
    pub max_scaled_error_head: Option<f64>,
    pub configs_checked: usize,
    pub pass: bool,
}

pub const GRADCHECK_TOL: f64 = 1e-5;

fn gradcheck_battery() -> Vec<CircuitConfig> {
    let mut configs = Vec::new();
    for n in [2usize, 3, 4] {
        for k in [1usize, 2] {
            configs.push(CircuitConfig {
                n_qubits: n,
                n_layers: 2,
                use_rotations: true,
                scheme: SchemeKind::SlidingKLocal,
                k: Some(k),
                subset: None,
                d_out: n.min(2),
                encoding_axis: RotationAxis::Y,
            });
        }
        configs.push(CircuitConfig {
            n_qubits: n,
            n_layers: 1,
            use_rotations: true,
            scheme: SchemeKind::FixedPauliZ,
            k: None,
            subset: None,
            d_out: n.min(2),
            encoding_axis: RotationAxis::Y,
        });
        configs.push(CircuitConfig {
            n_qubits: n,
            n_layers: 1,
            use_rotations: true,
            scheme: SchemeKind::PairwiseCombinatorial,
            k: None,
            subset: Some((1..=n).collect()),
            d_out: 3,
            encoding_axis: RotationAxis::Y,
        });
        configs.push(CircuitConfig {
            n_qubits: n,
            n_layers: 0,
            use_rotations: false,
            scheme: SchemeKind::PairwiseCombinatorial,
            k: None,
            subset: Some((1..=n).collect()),
            d_out: 2,
            encoding_axis: RotationAxis::Y,
        });
    }
    configs
}

/// Check analytic gradients (theta via parameter shift, phi closed-form,
/// head analytic) against central finite differences with h = 1e-4.
///
/// The scaled error |a - fd| / max(|fd|, 1e-2) folds the spec's relative
/// tolerance and its absolute floor for near-zero components into one
/// number compared against [`GRADCHECK_TOL`].
pub fn run_gradcheck(
    custom: Option<&CircuitConfig>,
    fault: ShiftFault,
    seed: u64,
) -> Result<GradcheckReport> {
    let configs = match custom {
        Some(c) => vec![c.clone()],
        None => gradcheck_battery(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_theta: Option<f64> = None;
    let mut max_phi: Option<f64> = None;
    let mut max_head: Option<f64> = None;

    for cc in &configs {
        cc.validate()?;
        for loss_kind in [LossKind::Mse, LossKind::CrossEntropy] {
            let params = ModelParams::init(cc, &InitSpec::default(), &mut rng)?;
            let x: Vec<f64> = (0..cc.n_qubits).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let target = LossTarget::Label(rng.gen_range(0..cc.d_out));

            let (_, mut grad) = grad_model(
                &x,
                &target,
                &params,
                cc,
                loss_kind,
                ThetaGradMethod::Shift,
            )?;
            if fault == ShiftFault::Exaggerate {
                for layer in &mut grad.d_theta {
                    for g in layer.iter_mut() {
                        *g *= 1.02;
                    }
                }
            }
            let flat = params.flatten();
            let fd = finite_difference_gradient(
                |p| loss_of_flat(cc, &x, &target, loss_kind, p).unwrap_or(f64::NAN),
                &flat,
                1e-4,
            );
            let analytic = grad.flatten();

            let (layers, width) = cc.theta_shape();
            let n_theta = layers * width;
            let n_phi: usize = params.phi_groups.iter().map(|g| g.len()).sum();
            for (i, (a, f)) in analytic.iter().zip(fd.iter()).enumerate() {
                let scaled = (a - f).abs() / f.abs().max(1e-2);
                let slot = if i < n_theta {
                    &mut max_theta
                } else if i < n_theta + n_phi {
                    &mut max_phi
                } else {
                    &mut max_head
                };
                *slot = Some(slot.unwrap_or(0.0).max(scaled));
            }
        }
    }
    let pass = [max_theta, max_phi, max_head]
        .iter()
        .all(|m| m.is_none_or(|v| v <= GRADCHECK_TOL));
    Ok(GradcheckReport {
        tolerance: GRADCHECK_TOL,
        max_scaled_error_theta: max_theta,
        max_scaled_error_phi: max_phi,
        max_scaled_error_head: max_head,
        configs_checked: configs.len(),
        pass,
    })
}

pub fn cmd_gradcheck(args: &ConfigArgs) -> Result<i32> {
    let custom = match (&args.config, args.task, args.overrides.is_empty()) {
        (None, None, true) => None,
        _ => Some(args.load()?.circuit),
    };
    let report = run_gradcheck(custom.as_ref(), ShiftFault::None, 31415)?;
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    Ok(if report.pass { 0 } else { 1 })
}

pub fn cmd_spectrum(args: &SpectrumArgs) -> Result<i32> {
    let ckpt = Checkpoint::load(&args.checkpoint)?;
    let params = ckpt.model_params()?;
    if params.phi_groups.is_empty() {
        return Err(Error::input(
            "checkpoint has no trainable observables (fixed Pauli scheme)".to_string(),
        ));
    }
    if args.group >= params.phi_groups.len() {
        return Err(Error::input(format!(
            "group index {} out of range 0..{}",
            args.group,
            params.phi_groups.len()
        )));
    }
    let groups = ckpt.circuit.groups()?;
    let h = to_matrix(&params.phi_groups[args.group]);
    let spectrum = eigen_spectrum(&h);
    let (lo, hi) = rayleigh_bounds(&h);
    let within_pauli_class = lo >= -1.0 - 1e-9 && hi <= 1.0 + 1e-9;
    let report = serde_json::json!({
        "group": args.group,
        "qubits": groups[args.group],
        "eigenvalues": spectrum,
        "rayleigh_bounds": [lo, hi],
        "within_pauli_class": within_pauli_class,
    });
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    Ok(0)
}

pub const ORACLE_TOL: f64 = 1e-10;

pub fn cmd_oracle(args: &OracleArgs) -> Result<i32> {
    let mut results: Vec<(&str, f64)> = Vec::new();
    match args.suite.as_str() {
        "closedform" => {
            results.push((
                "closedform",
                run_closed_form_suite(args.cases.unwrap_or(1000), args.seed)?,
            ));
        }
        "densekron" => {
            results.push((
                "densekron",
                run_dense_kron_suite(args.cases.unwrap_or(200), args.seed)?,
            ));
        }
        "all" => {
            results.push((
                "closedform",
                run_closed_form_suite(args.cases.unwrap_or(1000), args.seed)?,
            ));
            results.push((
                "densekron",
                run_dense_kron_suite(args.cases.unwrap_or(200), args.seed)?,
            ));
        }
        other => {
            return Err(Error::input(format!(
                "unknown oracle suite `{other}` (expected closedform, densekron or all)"
            )))
        }
    }
    let mut pass = true;
    for (name, dev) in &results {
        let ok = *dev <= ORACLE_TOL;
        pass &= ok;
        println!(
            "{name}: max deviation {dev:.3e} (tolerance {ORACLE_TOL:.0e}) {}",
            if ok { "PASS" } else { "FAIL" }
        );
    }
    Ok(if pass { 0 } else { 1 })
}

pub fn cmd_paramcount(args: &ConfigArgs) -> Result<i32> {
    let rc = args.load()?;
    let breakdown = parameter_breakdown(&rc.circuit)?;
    let report = serde_json::json!({
        "task": rc.task,
        "rotations": breakdown.rotations,
        "observables": breakdown.observables,
        "head": breakdown.head,
        "total": count_parameters(&rc.circuit)?,
    });
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    Ok(0)
}

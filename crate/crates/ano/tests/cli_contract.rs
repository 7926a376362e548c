//! End-to-end contract tests for the `ano` binary: exit codes, artifact
//! layout, determinism and the config echo.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ano::circuit::{CircuitConfig, ModelParams, SchemeKind};
use ano::observables::HermitianParams;
use ano::statevec::RotationAxis;
use ano::train::{Checkpoint, CheckpointMeta};

fn ano_bin() -> &'static str {
    env!("CARGO_BIN_EXE_ano")
}

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(ano_bin());
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

/// A linearly separable stand-in with the banknote CSV layout (4 features,
/// binary label), used to exercise the pipeline without the real dataset.
fn write_synthetic_banknote(data_dir: &Path) -> PathBuf {
    let dir = data_dir.join("banknote");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("data_banknote_authentication.txt");
    let mut text = String::new();
    // Deterministic pseudo-noise, class-separable along feature 0.
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    for i in 0..60 {
        let label = i % 2;
        let center = if label == 0 { 2.0 } else { -2.0 };
        text.push_str(&format!(
            "{:.6},{:.6},{:.6},{:.6},{label}\n",
            center + next(),
            next() * 2.0,
            next() * 2.0 - center * 0.5,
            next(),
        ));
    }
    std::fs::write(&path, text).unwrap();
    path
}

fn metrics_without_walltime(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| {
            let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
            let obj = v.as_object_mut().unwrap();
            assert!(obj.contains_key("wall_time_s"));
            assert!(obj.contains_key("epoch"));
            assert!(obj.contains_key("train_loss"));
            assert!(obj.contains_key("test_accuracy"));
            obj.remove("wall_time_s");
            v
        })
        .collect()
}

#[test]
fn train_artifacts_determinism_and_config_echo() {
    let tmp = tempfile::tempdir().unwrap();
    let data_dir = tmp.path().join("data");
    write_synthetic_banknote(&data_dir);
    let data = data_dir.to_str().unwrap();

    let out1 = tmp.path().join("out1");
    let base_args = [
        "train",
        "--task",
        "banknote",
        "--seed",
        "11",
        "--trials",
        "1",
        "circuit.k=1",
        "train.epochs=4",
        "data.test_fraction=0.2",
    ];
    let mut args: Vec<&str> = base_args.to_vec();
    let out1_s = out1.to_str().unwrap().to_string();
    args.extend(["--out", &out1_s]);
    let output = run(&args, &[("ANO_DATA_DIR", data)]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );

    for f in ["config.toml", "metrics.jsonl", "checkpoint.json", "summary.json"] {
        assert!(out1.join(f).exists(), "{f} missing");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out1.join("summary.json")).unwrap())
            .unwrap();
    // 1-local sliding on 4 qubits with rotations: 16 + 2*4 = 24.
    assert_eq!(summary["param_count"], 24);

    // Same seed and config: bit-identical metrics up to wall time.
    let out2 = tmp.path().join("out2");
    let out2_s = out2.to_str().unwrap().to_string();
    let mut args: Vec<&str> = base_args.to_vec();
    args.extend(["--out", &out2_s]);
    let output = run(&args, &[("ANO_DATA_DIR", data)]);
    assert!(output.status.success());
    assert_eq!(
        metrics_without_walltime(&out1.join("metrics.jsonl")),
        metrics_without_walltime(&out2.join("metrics.jsonl"))
    );

    // The echoed config reproduces the run verbatim.
    let out3 = tmp.path().join("out3");
    let out3_s = out3.to_str().unwrap().to_string();
    let cfg = out1.join("config.toml");
    let output = run(
        &[
            "train",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            &out3_s,
        ],
        &[("ANO_DATA_DIR", data)],
    );
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert_eq!(
        metrics_without_walltime(&out1.join("metrics.jsonl")),
        metrics_without_walltime(&out3.join("metrics.jsonl"))
    );

    // Evaluating the checkpoint reproduces the final logged accuracy exactly,
    // and evaluation is idempotent.
    let ckpt = out1.join("checkpoint.json");
    let eval1 = run(
        &["eval", ckpt.to_str().unwrap(), "--data", data],
        &[],
    );
    assert!(eval1.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&eval1.stdout)).unwrap();
    let logged = metrics_without_walltime(&out1.join("metrics.jsonl"))
        .last()
        .unwrap()["test_accuracy"]
        .as_f64()
        .unwrap();
    assert_eq!(report["test_accuracy"].as_f64().unwrap(), logged);
    assert_eq!(
        report["per_class_accuracy"].as_array().unwrap().len(),
        2
    );
    let eval2 = run(&["eval", ckpt.to_str().unwrap(), "--data", data], &[]);
    assert_eq!(eval1.stdout, eval2.stdout);
}

#[test]
fn train_error_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let data_dir = tmp.path().join("data");
    std::fs::create_dir_all(&data_dir).unwrap();

    // Missing data file -> 3.
    let out = tmp.path().join("out");
    let output = run(
        &[
            "train",
            "--task",
            "banknote",
            "--out",
            out.to_str().unwrap(),
        ],
        &[("ANO_DATA_DIR", data_dir.to_str().unwrap())],
    );
    assert_eq!(output.status.code(), Some(3));

    // Invalid configuration -> 2 (k exceeds n_qubits).
    write_synthetic_banknote(&data_dir);
    let output = run(
        &[
            "train",
            "--task",
            "banknote",
            "--out",
            out.to_str().unwrap(),
            "circuit.k=9",
        ],
        &[("ANO_DATA_DIR", data_dir.to_str().unwrap())],
    );
    assert_eq!(output.status.code(), Some(2));

    // No task and no config -> 2.
    let output = run(&["train"], &[]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn spectrum_reports_pauli_class_and_rejects_bad_group() {
    let tmp = tempfile::tempdir().unwrap();
    let circuit = CircuitConfig {
        n_qubits: 2,
        n_layers: 0,
        use_rotations: false,
        scheme: SchemeKind::SlidingKLocal,
        k: Some(1),
        subset: None,
        d_out: 2,
        encoding_axis: RotationAxis::Y,
    };
    let mut params = ModelParams::zeros(&circuit).unwrap();
    for g in &mut params.phi_groups {
        *g = HermitianParams::pauli_z();
    }
    let ckpt = Checkpoint {
        circuit,
        params: params.flatten(),
        meta: CheckpointMeta {
            task: "banknote".to_string(),
            trial_seed: 0,
            test_fraction: 0.1,
            subset_prefix: None,
            standardizer: None,
            final_test_accuracy: 0.0,
        },
    };
    let path = tmp.path().join("ckpt.json");
    ckpt.save(&path).unwrap();

    let output = run(&["spectrum", path.to_str().unwrap(), "--group", "0"], &[]);
    assert!(output.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&output.stdout)).unwrap();
    assert_eq!(report["within_pauli_class"], true);
    let eig = report["eigenvalues"].as_array().unwrap();
    assert!((eig[0].as_f64().unwrap() + 1.0).abs() < 1e-12);
    assert!((eig[1].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let output = run(&["spectrum", path.to_str().unwrap(), "--group", "99"], &[]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn eval_corrupt_checkpoint_is_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.json");
    std::fs::write(&path, "{ not json").unwrap();
    let output = run(&["eval", path.to_str().unwrap()], &[]);
    assert_eq!(output.status.code(), Some(2));

    // Truncated parameter vector is also a shape error.
    let circuit = CircuitConfig {
        n_qubits: 2,
        n_layers: 0,
        use_rotations: false,
        scheme: SchemeKind::SlidingKLocal,
        k: Some(1),
        subset: None,
        d_out: 2,
        encoding_axis: RotationAxis::Y,
    };
    let bad = serde_json::json!({
        "circuit": circuit,
        "params": [0.0, 0.0],
        "meta": {
            "task": "banknote",
            "trial_seed": 0,
            "test_fraction": 0.1,
            "final_test_accuracy": 0.0
        }
    });
    let path = tmp.path().join("short.json");
    std::fs::write(&path, serde_json::to_string(&bad).unwrap()).unwrap();
    let output = run(&["eval", path.to_str().unwrap()], &[]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn oracle_and_paramcount_commands() {
    let output = run(&["oracle", "closedform", "--cases", "50"], &[]);
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stdout).contains("PASS"));

    let output = run(&["oracle", "densekron", "--cases", "10"], &[]);
    assert!(output.status.success());

    let output = run(&["oracle", "nonsense"], &[]);
    assert_eq!(output.status.code(), Some(2));

    let output = run(&["paramcount", "--task", "banknote"], &[]);
    assert!(output.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&output.stdout)).unwrap();
    assert_eq!(report["total"], 48);

    let output = run(&["paramcount", "--task", "mnist"], &[]);
    let report: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&output.stdout)).unwrap();
    assert_eq!(report["total"], 3130);
}

#[test]
fn gradcheck_command_passes() {
    let output = run(&["gradcheck"], &[]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&output.stdout)).unwrap();
    assert_eq!(report["pass"], true);
}

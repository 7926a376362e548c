//! Run configuration: per-task defaults, TOML files, dotted-path overrides
//! (`circuit.k=3`), and the config echo that makes runs reproducible.

use std::path::{Path, PathBuf};

use crate::circuit::{CircuitConfig, SchemeKind};
use crate::error::{Error, Result};
use crate::statevec::RotationAxis;
use crate::train::TrainConfig;

/// Environment variable naming the default data root.
pub const DATA_DIR_ENV: &str = "ANO_DATA_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Banknote,
    Mnist,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Task::Banknote => write!(f, "banknote"),
            Task::Mnist => write!(f, "mnist"),
        }
    }
}

fn default_test_fraction() -> f64 {
    0.1
}

#[derive(Clone, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DataConfig {
    /// Data root; falls back to $ANO_DATA_DIR, then ./data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    /// Take the first N samples before splitting (MNIST subset).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset_prefix: Option<usize>,
}

fn default_trials() -> usize {
    1
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs/ano")
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunConfig {
    pub task: Task,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub data: DataConfig,
    pub circuit: CircuitConfig,
    #[serde(default)]
    pub train: TrainConfig,
}

impl RunConfig {
    /// Banknote defaults: the 2-local sliding model with rotations.
    pub fn banknote_default() -> Self {
        RunConfig {
            task: Task::Banknote,
            n_trials: 10,
            out_dir: PathBuf::from("runs/banknote"),
            data: DataConfig {
                dir: None,
                test_fraction: 0.1,
                subset_prefix: None,
            },
            circuit: CircuitConfig {
                n_qubits: 4,
                n_layers: 4,
                use_rotations: true,
                scheme: SchemeKind::SlidingKLocal,
                k: Some(2),
                subset: None,
                d_out: 2,
                encoding_axis: RotationAxis::Y,
            },
            train: TrainConfig {
                epochs: 100,
                ..TrainConfig::default()
            },
        }
    }

    /// MNIST defaults: pairwise measurements over all 16 qubits, rotation
    /// gates removed, linear head to 10 classes.
    pub fn mnist_default() -> Self {
        RunConfig {
            task: Task::Mnist,
            n_trials: 5,
            out_dir: PathBuf::from("runs/mnist"),
            data: DataConfig {
                dir: None,
                test_fraction: 0.1,
                subset_prefix: Some(10_000),
            },
            circuit: CircuitConfig {
                n_qubits: 16,
                n_layers: 4,
                use_rotations: false,
                scheme: SchemeKind::PairwiseCombinatorial,
                k: None,
                subset: Some((1..=16).collect()),
                d_out: 10,
                encoding_axis: RotationAxis::Y,
            },
            train: TrainConfig {
                epochs: 30,
                ..TrainConfig::default()
            },
        }
    }

    pub fn default_for(task: Task) -> Self {
        match task {
            Task::Banknote => RunConfig::banknote_default(),
            Task::Mnist => RunConfig::mnist_default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::config("n_trials must be at least 1".to_string()));
        }
        self.circuit.validate()?;
        self.train.validate()?;
        if !(self.data.test_fraction > 0.0 && self.data.test_fraction < 1.0) {
            return Err(Error::config(format!(
                "test_fraction must lie strictly between 0 and 1, got {}",
                self.data.test_fraction
            )));
        }
        Ok(())
    }

    /// Resolved data root: explicit config, then $ANO_DATA_DIR, then ./data.
    pub fn data_dir(&self) -> PathBuf {
        resolve_data_dir(self.data.dir.as_deref())
    }

    pub fn banknote_csv_path(&self) -> PathBuf {
        self.data_dir()
            .join("banknote")
            .join("data_banknote_authentication.txt")
    }

    pub fn mnist_paths(&self) -> (PathBuf, PathBuf) {
        let dir = self.data_dir().join("mnist");
        (
            dir.join("train-images-idx3-ubyte"),
            dir.join("train-labels-idx1-ubyte"),
        )
    }
}

pub fn resolve_data_dir(explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    if let Ok(env) = std::env::var(DATA_DIR_ENV) {
        if !env.is_empty() {
            return PathBuf::from(env);
        }
    }
    PathBuf::from("data")
}

fn toml_of(rc: &RunConfig) -> Result<toml::Value> {
    toml::Value::try_from(rc).map_err(|e| Error::config(format!("config serialization: {e}")))
}

/// Recursively overlay `src` onto `dst` (tables merge, scalars replace).
fn merge_value(dst: &mut toml::Value, src: toml::Value) {
    match (dst, src) {
        (toml::Value::Table(d), toml::Value::Table(s)) => {
            for (k, v) in s {
                match d.get_mut(&k) {
                    Some(slot) => merge_value(slot, v),
                    None => {
                        d.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Set one dotted-path override like `circuit.k=3` or `train.loss="mse"`.
/// The right-hand side is parsed as a TOML literal, falling back to a bare
/// string.
pub fn apply_override(root: &mut toml::Value, spec: &str) -> Result<()> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| {
        Error::config(format!("override `{spec}` is not of the form key.path=value"))
    })?;
    let path = path.trim();
    let raw = raw.trim();
    if path.is_empty() {
        return Err(Error::config(format!("override `{spec}` has an empty path")));
    }
    let value: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    };

    let mut cursor = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let table = cursor.as_table_mut().ok_or_else(|| {
            Error::config(format!("override `{spec}`: `{seg}` is not a table"))
        })?;
        if i + 1 == segments.len() {
            table.insert(seg.to_string(), value);
            break;
        }
        cursor = table
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    Ok(())
}

/// Build the effective run configuration.
///
/// Precedence, lowest to highest: task defaults, the config file, dotted
/// overrides. The task comes from the file when present, otherwise from
/// `task`.
pub fn load_run_config(
    config_path: Option<&Path>,
    task: Option<Task>,
    overrides: &[String],
) -> Result<RunConfig> {
    let file_value: Option<toml::Value> = match config_path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            Some(
                toml::from_str(&text)
                    .map_err(|e| Error::config(format!("{}: {e}", p.display())))?,
            )
        }
        None => None,
    };

    let effective_task = match (&file_value, task) {
        (Some(v), _) => {
            let t = v
                .get("task")
                .and_then(|t| t.as_str())
                .ok_or_else(|| Error::config("config file must set `task`".to_string()))?;
            match t {
                "banknote" => Task::Banknote,
                "mnist" => Task::Mnist,
                other => return Err(Error::config(format!("unknown task `{other}`"))),
            }
        }
        (None, Some(t)) => t,
        (None, None) => {
            return Err(Error::config(
                "either a config file or --task is required".to_string(),
            ))
        }
    };

    let mut value = toml_of(&RunConfig::default_for(effective_task))?;
    if let Some(fv) = file_value {
        merge_value(&mut value, fv);
    }
    for spec in overrides {
        apply_override(&mut value, spec)?;
    }
    let rc: RunConfig = value
        .try_into()
        .map_err(|e| Error::config(format!("invalid configuration: {e}")))?;
    rc.validate()?;
    Ok(rc)
}

/// The resolved configuration as TOML; written into the output directory so
/// a run can be reproduced by feeding the file back verbatim.
pub fn render_config(rc: &RunConfig) -> Result<String> {
    toml::to_string_pretty(rc).map_err(|e| Error::config(format!("config render: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::LossKind;

    #[test]
    fn defaults_are_valid_and_match_paper_setups() {
        let b = RunConfig::banknote_default();
        b.validate().unwrap();
        assert_eq!(crate::circuit::count_parameters(&b.circuit).unwrap(), 48);

        let m = RunConfig::mnist_default();
        m.validate().unwrap();
        assert_eq!(crate::circuit::count_parameters(&m.circuit).unwrap(), 3130);
    }

    #[test]
    fn overrides_can_switch_schemes() {
        // Stale pairwise fields must not block a switch to sliding.
        let rc = load_run_config(
            None,
            Some(Task::Mnist),
            &[
                "circuit.scheme=\"sliding_k_local\"".to_string(),
                "circuit.k=5".to_string(),
                "circuit.use_rotations=true".to_string(),
            ],
        )
        .unwrap();
        assert_eq!(crate::circuit::count_parameters(&rc.circuit).unwrap(), 10304);
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let mut v = toml_of(&RunConfig::banknote_default()).unwrap();
        apply_override(&mut v, "circuit.k=3").unwrap();
        apply_override(&mut v, "train.loss=\"mse\"").unwrap();
        apply_override(&mut v, "train.learning_rate=0.05").unwrap();
        let rc: RunConfig = v.try_into().unwrap();
        assert_eq!(rc.circuit.k, Some(3));
        assert_eq!(rc.train.loss, LossKind::Mse);
        assert!((rc.train.learning_rate - 0.05).abs() < 1e-15);
    }

    #[test]
    fn override_without_equals_is_rejected ()  {
        let mut v = toml_of(&RunConfig::banknote_default()).unwrap();
        assert!(apply_override(&mut v, "circuit.k").is_err());
    }

    #[test]
    fn config_roundtrips_through_render() {
        for rc in [RunConfig::banknote_default(), RunConfig::mnist_default()] {
            let text = render_config(&rc).unwrap();
            let back: RunConfig = toml::from_str(&text).unwrap();
            assert_eq!(rc, back);
        }
    }

    #[test]
    fn load_requires_task_or_file() {
        assert!(load_run_config(None, None, &[]).is_err());
        let rc = load_run_config(None, Some(Task::Banknote), &["circuit.k=1".to_string()])
            .unwrap();
        assert_eq!(rc.circuit.k, Some(1));
    }

    #[test]
    fn bad_override_target_is_a_config_error() {
        // Setting a subtable under a scalar must fail, not panic.
        let mut v = toml_of(&RunConfig::banknote_default()).unwrap();
        assert!(apply_override(&mut v, "task.sub=1").is_err());
    }
}

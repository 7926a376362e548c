//! Full VQC forward pass: feature encoding, variational layers, measurement
//! schemes and output heads, plus the closed-form 2-qubit cross-check.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::observables::{
    expectation_from_rdm, rdm_with_index, to_matrix, HermitianMatrix, HermitianParams,
};
use crate::statevec::{
    gate_rotation, hadamard, RotationAxis, StateVector, SubsetIndex, MAX_QUBITS,
};

/// Measurement scheme selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    /// Fixed sigma_z on qubits 1..=d_out; no trainable observable parameters.
    FixedPauliZ,
    /// n cyclic k-qubit windows, each with its own trainable observable; the
    /// first d_out outputs are retained.
    SlidingKLocal,
    /// One trainable 2-local observable per unordered qubit pair inside a
    /// chosen subset, followed by a linear head when the pair count differs
    /// from d_out.
    PairwiseCombinatorial,
}

/// Static description of a circuit: sizes, scheme and encoding choices.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CircuitConfig {
    pub n_qubits: usize,
    pub n_layers: usize,
    pub use_rotations: bool,
    pub scheme: SchemeKind,
    /// Window locality; sliding scheme only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Observed qubit subset; pairwise scheme only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<Vec<usize>>,
    pub d_out: usize,
    #[serde(default = "default_encoding_axis")]
    pub encoding_axis: RotationAxis,
}

fn default_encoding_axis() -> RotationAxis {
    RotationAxis::Y
}

impl CircuitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > MAX_QUBITS {
            return Err(Error::config(format!(
                "n_qubits {} outside supported range 1..={MAX_QUBITS}",
                self.n_qubits
            )));
        }
        if self.d_out == 0 {
            return Err(Error::config("d_out must be at least 1".to_string()));
        }
        // Fields belonging to the other scheme are ignored, so a config can
        // switch schemes with a single override.
        match self.scheme {
            SchemeKind::FixedPauliZ | SchemeKind::SlidingKLocal => {
                if self.d_out > self.n_qubits {
                    return Err(Error::config(format!(
                        "d_out {} exceeds n_qubits {} and this scheme has no head",
                        self.d_out, self.n_qubits
                    )));
                }
                if self.scheme == SchemeKind::SlidingKLocal {
                    let k = self
                        .k
                        .ok_or_else(|| Error::config("sliding scheme requires `k`".to_string()))?;
                    if k == 0 || k > self.n_qubits {
                        return Err(Error::config(format!(
                            "window locality k={k} outside 1..={}",
                            self.n_qubits
                        )));
                    }
                }
            }
            SchemeKind::PairwiseCombinatorial => {
                let subset = self.subset.as_ref().ok_or_else(|| {
                    Error::config("pairwise scheme requires `subset`".to_string())
                })?;
                if subset.len() < 2 {
                    return Err(Error::config(
                        "pairwise subset needs at least 2 qubits".to_string(),
                    ));
                }
                let mut seen = vec![false; self.n_qubits + 1];
                for &q in subset {
                    if q == 0 || q > self.n_qubits {
                        return Err(Error::config(format!(
                            "subset qubit {q} out of range 1..={}",
                            self.n_qubits
                        )));
                    }
                    if seen[q] {
                        return Err(Error::config(format!("duplicate subset qubit {q}")));
                    }
                    seen[q] = true;
                }
            }
        }
        Ok(())
    }

    /// The measurement groups this model actually evaluates (and trains).
    /// For the sliding scheme these are the first d_out of the n cyclic
    /// windows; windows whose outputs would be discarded carry no parameters.
    pub fn groups(&self) -> Result<Vec<Vec<usize>>> {
        self.validate()?;
        Ok(match self.scheme {
            SchemeKind::FixedPauliZ => (1..=self.d_out).map(|q| vec![q]).collect(),
            SchemeKind::SlidingKLocal => {
                let all = sliding_groups(self.n_qubits, self.k.unwrap())?;
                all.into_iter().take(self.d_out).collect()
            }
            SchemeKind::PairwiseCombinatorial => pairwise_groups(self.subset.as_ref().unwrap())?,
        })
    }

    /// Locality of each group observable.
    pub fn group_locality(&self) -> usize {
        match self.scheme {
            SchemeKind::FixedPauliZ => 1,
            SchemeKind::SlidingKLocal => self.k.unwrap_or(1),
            SchemeKind::PairwiseCombinatorial => 2,
        }
    }

    pub fn n_pairs(&self) -> usize {
        match (&self.scheme, &self.subset) {
            (SchemeKind::PairwiseCombinatorial, Some(s)) => s.len() * (s.len() - 1) / 2,
            _ => 0,
        }
    }

    /// The linear head exists exactly when the pairwise output dimension
    /// differs from d_out; the sliding and fixed schemes never project.
    pub fn has_head(&self) -> bool {
        self.scheme == SchemeKind::PairwiseCombinatorial && self.n_pairs() != self.d_out
    }

    pub fn trainable_observables(&self) -> bool {
        self.scheme != SchemeKind::FixedPauliZ
    }

    /// True when the variational block contributes gates to the circuit.
    pub fn blocks_active(&self) -> bool {
        self.use_rotations && self.n_layers > 0
    }

    /// Shape of the rotation-angle tensor: (layers, qubits).
    pub fn theta_shape(&self) -> (usize, usize) {
        if self.use_rotations {
            (self.n_layers, self.n_qubits)
        } else {
            (0, 0)
        }
    }
}

/// Cyclic sliding windows: group i = (i, i+1, ..., i+k-1) wrapping modulo n,
/// for i = 1..=n.
pub fn sliding_groups(n: usize, k: usize) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > n {
        return Err(Error::config(format!(
            "window locality k={k} outside 1..={n}"
        )));
    }
    Ok((1..=n)
        .map(|start| (0..k).map(|o| 1 + (start - 1 + o) % n).collect())
        .collect())
}

/// All unordered pairs (i, j) with i before j in subset order, lexicographic.
pub fn pairwise_groups(subset: &[usize]) -> Result<Vec<Vec<usize>>> {
    if subset.len() < 2 {
        return Err(Error::config(format!(
            "pairwise subset needs at least 2 qubits, got {}",
            subset.len()
        )));
    }
    let mut pairs = Vec::with_capacity(subset.len() * (subset.len() - 1) / 2);
    for i in 0..subset.len() {
        for j in (i + 1)..subset.len() {
            pairs.push(vec![subset[i], subset[j]]);
        }
    }
    Ok(pairs)
}

/// Linear projection from group expectations to model outputs:
/// out[o] = sum_p weights[o][p] * v[p] + bias[o].
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LinearHead {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl LinearHead {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(self.bias.iter())
            .map(|(row, b)| row.iter().zip(v.iter()).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }
}

/// Initialization widths for [`ModelParams::init`].
#[derive(Clone, Copy, Debug)]
pub struct InitSpec {
    /// theta ~ Uniform(-theta_half_range, theta_half_range).
    pub theta_half_range: f64,
    /// phi ~ Normal(0, phi_std).
    pub phi_std: f64,
    /// head weights ~ Normal(0, head_std); bias starts at zero.
    pub head_std: f64,
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec {
            theta_half_range: std::f64::consts::PI,
            phi_std: 0.1,
            head_std: 0.1,
        }
    }
}

/// All trainable values of a model.
///
/// The canonical flat order (used by checkpoints, optimizers and gradient
/// vectors) is: theta layer by layer, each layer qubit 1..=n; then each
/// group's phi vector in group order; then head weights output-major,
/// then head bias.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelParams {
    pub theta: Vec<Vec<f64>>,
    pub phi_groups: Vec<HermitianParams>,
    pub head: Option<LinearHead>,
}

impl ModelParams {
    pub fn zeros(config: &CircuitConfig) -> Result<Self> {
        let groups = config.groups()?;
        let (layers, width) = config.theta_shape();
        let theta = vec![vec![0.0; width]; layers];
        let phi_groups = if config.trainable_observables() {
            groups
                .iter()
                .map(|g| HermitianParams::zeros(g.len()))
                .collect()
        } else {
            Vec::new()
        };
        let head = if config.has_head() {
            Some(LinearHead {
                weights: vec![vec![0.0; config.n_pairs()]; config.d_out],
                bias: vec![0.0; config.d_out],
            })
        } else {
            None
        };
        Ok(ModelParams {
            theta,
            phi_groups,
            head,
        })
    }

    pub fn init<R: Rng>(config: &CircuitConfig, spec: &InitSpec, rng: &mut R) -> Result<Self> {
        let mut params = ModelParams::zeros(config)?;
        for layer in &mut params.theta {
            for t in layer.iter_mut() {
                *t = rng.gen_range(-spec.theta_half_range..spec.theta_half_range);
            }
        }
        let phi_dist = Normal::new(0.0, spec.phi_std)
            .map_err(|e| Error::config(format!("bad phi init std: {e}")))?;
        for group in &mut params.phi_groups {
            for p in group.phi_mut() {
                *p = phi_dist.sample(rng);
            }
        }
        if let Some(head) = &mut params.head {
            let head_dist = Normal::new(0.0, spec.head_std)
                .map_err(|e| Error::config(format!("bad head init std: {e}")))?;
            for row in &mut head.weights {
                for w in row.iter_mut() {
                    *w = head_dist.sample(rng);
                }
            }
            // bias stays zero
        }
        Ok(params)
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.theta {
            out.extend_from_slice(layer);
        }
        for group in &self.phi_groups {
            out.extend_from_slice(group.phi());
        }
        if let Some(head) = &self.head {
            for row in &head.weights {
                out.extend_from_slice(row);
            }
            out.extend_from_slice(&head.bias);
        }
        out
    }

    pub fn from_flat(config: &CircuitConfig, flat: &[f64]) -> Result<Self> {
        let mut params = ModelParams::zeros(config)?;
        let expected = count_parameters(config)?;
        if flat.len() != expected {
            return Err(Error::input(format!(
                "expected {expected} parameters, got {}",
                flat.len()
            )));
        }
        let mut it = flat.iter().copied();
        for layer in &mut params.theta {
            for t in layer.iter_mut() {
                *t = it.next().unwrap();
            }
        }
        for group in &mut params.phi_groups {
            for p in group.phi_mut() {
                *p = it.next().unwrap();
            }
        }
        if let Some(head) = &mut params.head {
            for row in &mut head.weights {
                for w in row.iter_mut() {
                    *w = it.next().unwrap();
                }
            }
            for b in head.bias.iter_mut() {
                *b = it.next().unwrap();
            }
        }
        Ok(params)
    }

    /// Shape consistency against a config.
    pub fn check_shapes(&self, config: &CircuitConfig) -> Result<()> {
        let (layers, width) = config.theta_shape();
        if self.theta.len() != layers || self.theta.iter().any(|l| l.len() != width) {
            return Err(Error::input(format!(
                "theta shape mismatch: expected {layers}x{width}"
            )));
        }
        let groups = config.groups()?;
        if config.trainable_observables() {
            if self.phi_groups.len() != groups.len() {
                return Err(Error::input(format!(
                    "expected {} observable groups, got {}",
                    groups.len(),
                    self.phi_groups.len()
                )));
            }
            for (g, p) in groups.iter().zip(self.phi_groups.iter()) {
                if p.k() != g.len() {
                    return Err(Error::input(format!(
                        "group locality mismatch: observable is {}-local, group has {} qubits",
                        p.k(),
                        g.len()
                    )));
                }
            }
        } else if !self.phi_groups.is_empty() {
            return Err(Error::input(
                "fixed-Pauli scheme carries no observable parameters".to_string(),
            ));
        }
        match (&self.head, config.has_head()) {
            (Some(h), true) => {
                if h.weights.len() != config.d_out
                    || h.weights.iter().any(|r| r.len() != config.n_pairs())
                    || h.bias.len() != config.d_out
                {
                    return Err(Error::input("head shape mismatch".to_string()));
                }
            }
            (None, false) => {}
            _ => return Err(Error::input("head presence mismatch".to_string())),
        }
        Ok(())
    }
}

/// Number of parameters, split by origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct ParamBreakdown {
    pub rotations: usize,
    pub observables: usize,
    pub head: usize,
}

impl ParamBreakdown {
    pub fn total(&self) -> usize {
        self.rotations + self.observables + self.head
    }
}

pub fn parameter_breakdown(config: &CircuitConfig) -> Result<ParamBreakdown> {
    config.validate()?;
    let rotations = if config.use_rotations {
        config.n_layers * config.n_qubits
    } else {
        0
    };
    let observables = if config.trainable_observables() {
        let per_group = {
            let dim = 1usize << config.group_locality();
            dim * dim
        };
        config.groups()?.len() * per_group
    } else {
        0
    };
    let head = if config.has_head() {
        config.n_pairs() * config.d_out + config.d_out
    } else {
        0
    };
    Ok(ParamBreakdown {
        rotations,
        observables,
        head,
    })
}

pub fn count_parameters(config: &CircuitConfig) -> Result<usize> {
    Ok(parameter_breakdown(config)?.total())
}

/// Per-qubit factor states of the encoding: R_axis(x_q) H |0>.
pub(crate) fn encode_factors(x: &[f64], config: &CircuitConfig) -> Result<Vec<[Complex64; 2]>> {
    if x.len() != config.n_qubits {
        return Err(Error::input(format!(
            "feature length {} does not match n_qubits {}",
            x.len(),
            config.n_qubits
        )));
    }
    let h = hadamard();
    let plus = h.mul_vec([Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
    x.iter()
        .map(|&xi| {
            if !xi.is_finite() {
                return Err(Error::input(format!("non-finite feature value {xi}")));
            }
            Ok(gate_rotation(config.encoding_axis, xi)?.mul_vec(plus))
        })
        .collect()
}

/// Encoded state (x -> per-qubit Hadamard then rotation), a product state.
pub fn encode(x: &[f64], config: &CircuitConfig) -> Result<StateVector> {
    config.validate()?;
    StateVector::from_qubit_factors(&encode_factors(x, config)?)
}

/// One variational layer: the CNOT chain (1,2), (2,3), ..., (n-1,n) followed
/// by an Ry rotation on every qubit. `layer_index` is accepted for interface
/// symmetry; the chain pattern does not currently depend on it.
pub fn variational_block(
    state: &mut StateVector,
    theta_layer: &[f64],
    _layer_index: usize,
) -> Result<()> {
    let n = state.n_qubits();
    if theta_layer.len() != n {
        return Err(Error::input(format!(
            "theta layer has {} angles for {n} qubits",
            theta_layer.len()
        )));
    }
    if n >= 2 {
        state.apply_cnot_chain();
    }
    for (q, &t) in theta_layer.iter().enumerate() {
        if !t.is_finite() {
            return Err(Error::input(format!("non-finite rotation angle {t}")));
        }
        state.apply_ry(t, q + 1)?;
    }
    Ok(())
}

/// Encoded state pushed through all active variational layers.
pub(crate) fn evolved_state(
    x: &[f64],
    params: &ModelParams,
    config: &CircuitConfig,
) -> Result<StateVector> {
    let mut state = encode(x, config)?;
    if config.blocks_active() {
        for (l, layer) in params.theta.iter().enumerate() {
            variational_block(&mut state, layer, l)?;
        }
    }
    Ok(state)
}

/// Reduced density matrices of every measurement group, taken from an
/// explicit statevector.
pub(crate) fn rdms_from_state(
    state: &StateVector,
    groups: &[Vec<usize>],
) -> Result<Vec<DMatrix<Complex64>>> {
    groups
        .iter()
        .map(|g| {
            let idx = SubsetIndex::new(state.n_qubits(), g)?;
            Ok(rdm_with_index(state, &idx))
        })
        .collect()
}

/// Group density matrices of a product state, built as Kronecker products of
/// single-qubit density matrices. Valid only when no entangling gates ran.
pub(crate) fn rdms_from_factors(
    factors: &[[Complex64; 2]],
    groups: &[Vec<usize>],
) -> Vec<DMatrix<Complex64>> {
    let singles: Vec<DMatrix<Complex64>> = factors
        .iter()
        .map(|f| {
            DMatrix::from_row_slice(
                2,
                2,
                &[
                    f[0] * f[0].conj(),
                    f[0] * f[1].conj(),
                    f[1] * f[0].conj(),
                    f[1] * f[1].conj(),
                ],
            )
        })
        .collect();
    groups
        .iter()
        .map(|g| {
            let mut rho = singles[g[0] - 1].clone();
            for &q in &g[1..] {
                rho = rho.kronecker(&singles[q - 1]);
            }
            rho
        })
        .collect()
}

/// Group density matrices for an input, choosing the product-state shortcut
/// when the variational block is absent.
pub(crate) fn input_group_rdms(
    x: &[f64],
    params: &ModelParams,
    config: &CircuitConfig,
) -> Result<Vec<DMatrix<Complex64>>> {
    let groups = config.groups()?;
    if config.blocks_active() {
        let state = evolved_state(x, params, config)?;
        rdms_from_state(&state, &groups)
    } else {
        Ok(rdms_from_factors(&encode_factors(x, config)?, &groups))
    }
}

/// Group expectation values (before any head).
pub(crate) fn group_values_from_rdms(
    rdms: &[DMatrix<Complex64>],
    params: &ModelParams,
    config: &CircuitConfig,
) -> Result<Vec<f64>> {
    if config.trainable_observables() {
        rdms.iter()
            .zip(params.phi_groups.iter())
            .map(|(rho, phi)| expectation_from_rdm(rho, &to_matrix(phi)))
            .collect()
    } else {
        let z = HermitianMatrix::pauli_z();
        rdms.iter()
            .map(|rho| expectation_from_rdm(rho, &z))
            .collect()
    }
}

/// Head stage: identity for headless schemes.
pub(crate) fn apply_head(
    values: Vec<f64>,
    params: &ModelParams,
    config: &CircuitConfig,
) -> Result<Vec<f64>> {
    match (&params.head, config.has_head()) {
        (Some(head), true) => Ok(head.apply(&values)),
        (None, false) => Ok(values),
        _ => Err(Error::input("head presence mismatch".to_string())),
    }
}

/// Measurement stage: group expectations, then the head.
pub(crate) fn outputs_from_rdms(
    rdms: &[DMatrix<Complex64>],
    params: &ModelParams,
    config: &CircuitConfig,
) -> Result<Vec<f64>> {
    let values = group_values_from_rdms(rdms, params, config)?;
    apply_head(values, params, config)
}

/// Full model evaluation: encode, variational layers, measurements, head.
pub fn forward(x: &[f64], params: &ModelParams, config: &CircuitConfig) -> Result<Vec<f64>> {
    params.check_shapes(config)?;
    let rdms = input_group_rdms(x, params, config)?;
    outputs_from_rdms(&rdms, params, config)
}

/// Model evaluation on an externally prepared state (encoding replaced by
/// direct state injection). Variational layers still apply when active.
pub fn forward_from_state(
    state: &StateVector,
    params: &ModelParams,
    config: &CircuitConfig,
) -> Result<Vec<f64>> {
    params.check_shapes(config)?;
    if state.n_qubits() != config.n_qubits {
        return Err(Error::input(format!(
            "state has {} qubits, config expects {}",
            state.n_qubits(),
            config.n_qubits
        )));
    }
    let mut state = state.clone();
    if config.blocks_active() {
        for (l, layer) in params.theta.iter().enumerate() {
            variational_block(&mut state, layer, l)?;
        }
    }
    let groups = config.groups()?;
    let rdms = rdms_from_state(&state, &groups)?;
    outputs_from_rdms(&rdms, params, config)
}

/// Closed-form expectations of 1-local observables on a real 2-qubit state
/// after the rotation Ry(theta1) x Ry(theta2).
///
/// Returns (<R^t (H1 x I) R>, <R^t (I x H2) R>) evaluated on v. At
/// theta1 = theta2 = 0 this reduces to the bare 1-local expectations.
pub fn closed_form_example(
    v: &[f64],
    h1: &HermitianMatrix,
    h2: &HermitianMatrix,
    theta1: f64,
    theta2: f64,
) -> Result<(f64, f64)> {
    if v.len() != 4 {
        return Err(Error::input(format!(
            "expected a 4-component real state, got {}",
            v.len()
        )));
    }
    let norm: f64 = v.iter().map(|a| a * a).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::input(format!(
            "state is not normalized: |v|^2 = {norm}"
        )));
    }
    if h1.dim() != 2 || h2.dim() != 2 {
        return Err(Error::input("observables must be 2x2".to_string()));
    }
    let (v1, v2, v3, v4) = (v[0], v[1], v[2], v[3]);

    let eval = |h: &HermitianMatrix, theta: f64, sq_a: f64, sq_b: f64, cross: f64, asym: f64| {
        let h11 = h.as_matrix()[(0, 0)].re;
        let h22 = h.as_matrix()[(1, 1)].re;
        let re12 = h.as_matrix()[(0, 1)].re;
        let (c2, s2) = ((theta / 2.0).cos().powi(2), (theta / 2.0).sin().powi(2));
        let sin_t = theta.sin();
        let cos_t = theta.cos();
        h11 * (sq_a * c2 + sq_b * s2 - cross * sin_t)
            + re12 * (2.0 * cos_t * cross + asym * sin_t)
            + h22 * (sq_a * s2 + sq_b * c2 + cross * sin_t)
    };

    // Qubit 1 pairs amplitudes (v1, v2) against (v3, v4).
    let e1 = eval(
        h1,
        theta1,
        v1 * v1 + v2 * v2,
        v3 * v3 + v4 * v4,
        v1 * v3 + v2 * v4,
        v1 * v1 + v2 * v2 - v3 * v3 - v4 * v4,
    );
    // Qubit 2 pairs (v1, v3) against (v2, v4).
    let e2 = eval(
        h2,
        theta2,
        v1 * v1 + v3 * v3,
        v2 * v2 + v4 * v4,
        v1 * v2 + v3 * v4,
        v1 * v1 - v2 * v2 + v3 * v3 - v4 * v4,
    );
    Ok((e1, e2))
}

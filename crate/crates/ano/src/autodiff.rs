//! Exact gradients of model outputs and losses with respect to every
//! trainable parameter.
//!
//! Three ingredients:
//!
//! - observable parameters: the expectation is linear in phi, so the gradient
//!   is closed-form and comes from the same reduced density matrix as the
//!   forward value;
//! - rotation angles: the parameter-shift rule (two shifted evaluations per
//!   angle, exact for gates generated by Pauli matrices), or an adjoint
//!   sweep that computes all angle gradients in a constant number of state
//!   passes. Both are exact; the adjoint backend exists because the shift
//!   rule costs 2 L n forward passes per sample, which is prohibitive at
//!   n = 16;
//! - head weights: ordinary linear-layer calculus.
//!
//! A central finite-difference oracle is included for verification and the
//! `gradcheck` command.

use num_complex::Complex64;

use crate::circuit::{
    apply_head, encode_factors, evolved_state, group_values_from_rdms, input_group_rdms,
    rdms_from_factors, rdms_from_state, CircuitConfig, ModelParams,
};
use crate::error::{Error, Result};
use crate::observables::{gradient_phi_from_rdm, to_matrix, HermitianMatrix};
use crate::statevec::{accumulate_klocal, adjoint_ry_step, StateVector, SubsetIndex};
use crate::train::{loss_and_output_grad, LossKind, LossTarget};

/// Which backend computes rotation-angle gradients.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaGradMethod {
    /// Parameter shift for small circuits, adjoint once the shift rule's
    /// 2 L n forward passes dominate.
    #[default]
    Auto,
    Shift,
    Adjoint,
}

impl ThetaGradMethod {
    pub fn resolve(self, config: &CircuitConfig) -> ResolvedThetaGrad {
        match self {
            ThetaGradMethod::Shift => ResolvedThetaGrad::Shift,
            ThetaGradMethod::Adjoint => ResolvedThetaGrad::Adjoint,
            ThetaGradMethod::Auto => {
                if config.n_qubits >= 8 {
                    ResolvedThetaGrad::Adjoint
                } else {
                    ResolvedThetaGrad::Shift
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResolvedThetaGrad {
    Shift,
    Adjoint,
}

/// Gradient of the head parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadGrad {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

/// Gradients mirroring the shapes of [`ModelParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradientRecord {
    pub d_theta: Vec<Vec<f64>>,
    pub d_phi_groups: Vec<Vec<f64>>,
    pub d_head: Option<HeadGrad>,
}

impl GradientRecord {
    pub fn zeros_like(params: &ModelParams) -> Self {
        GradientRecord {
            d_theta: params.theta.iter().map(|l| vec![0.0; l.len()]).collect(),
            d_phi_groups: params
                .phi_groups
                .iter()
                .map(|g| vec![0.0; g.len()])
                .collect(),
            d_head: params.head.as_ref().map(|h| HeadGrad {
                weights: h.weights.iter().map(|r| vec![0.0; r.len()]).collect(),
                bias: vec![0.0; h.bias.len()],
            }),
        }
    }

    /// Same canonical order as [`ModelParams::flatten`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.d_theta {
            out.extend_from_slice(layer);
        }
        for group in &self.d_phi_groups {
            out.extend_from_slice(group);
        }
        if let Some(h) = &self.d_head {
            for row in &h.weights {
                out.extend_from_slice(row);
            }
            out.extend_from_slice(&h.bias);
        }
        out
    }

    pub fn add_scaled(&mut self, other: &GradientRecord, s: f64) {
        for (a, b) in self.d_theta.iter_mut().zip(other.d_theta.iter()) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += s * y;
            }
        }
        for (a, b) in self.d_phi_groups.iter_mut().zip(other.d_phi_groups.iter()) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += s * y;
            }
        }
        if let (Some(a), Some(b)) = (&mut self.d_head, &other.d_head) {
            for (ra, rb) in a.weights.iter_mut().zip(b.weights.iter()) {
                for (x, y) in ra.iter_mut().zip(rb.iter()) {
                    *x += s * y;
                }
            }
            for (x, y) in a.bias.iter_mut().zip(b.bias.iter()) {
                *x += s * y;
            }
        }
    }
}

/// Parameter-shift gradient of one model output with respect to every
/// rotation angle: [f(theta + pi/2) - f(theta - pi/2)] / 2 per slot.
#[allow(clippy::needless_range_loop)]
pub fn grad_theta_parameter_shift(
    x: &[f64],
    params: &ModelParams,
    config: &CircuitConfig,
    output_index: usize,
) -> Result<Vec<Vec<f64>>> {
    if !config.use_rotations {
        return Err(Error::config(
            "parameter-shift gradient requested but rotations are disabled".to_string(),
        ));
    }
    if output_index >= config.d_out {
        return Err(Error::input(format!(
            "output index {output_index} out of range 0..{}",
            config.d_out
        )));
    }
    let shift = std::f64::consts::FRAC_PI_2;
    let mut grads = vec![vec![0.0; config.n_qubits]; params.theta.len()];
    let mut work = params.clone();
    for l in 0..params.theta.len() {
        for q in 0..config.n_qubits {
            let orig = work.theta[l][q];
            work.theta[l][q] = orig + shift;
            let plus = crate::circuit::forward(x, &work, config)?[output_index];
            work.theta[l][q] = orig - shift;
            let minus = crate::circuit::forward(x, &work, config)?[output_index];
            work.theta[l][q] = orig;
            grads[l][q] = (plus - minus) / 2.0;
        }
    }
    Ok(grads)
}

/// dLoss/dtheta via the shift rule, chained through the fixed cotangent `w`
/// on the group expectation values. Each slot costs two evaluations of all
/// group values.
#[allow(clippy::needless_range_loop)]
fn shift_loss_theta_grad(
    x: &[f64],
    params: &ModelParams,
    config: &CircuitConfig,
    w: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let shift = std::f64::consts::FRAC_PI_2;
    let mut grads = vec![vec![0.0; config.n_qubits]; params.theta.len()];
    let mut work = params.clone();
    for l in 0..params.theta.len() {
        for q in 0..config.n_qubits {
            let orig = work.theta[l][q];
            work.theta[l][q] = orig + shift;
            let vp = group_values_for(x, &work, config)?;
            work.theta[l][q] = orig - shift;
            let vm = group_values_for(x, &work, config)?;
            work.theta[l][q] = orig;
            grads[l][q] = w
                .iter()
                .zip(vp.iter().zip(vm.iter()))
                .map(|(wi, (p, m))| wi * (p - m) / 2.0)
                .sum();
        }
    }
    Ok(grads)
}

fn group_values_for(x: &[f64], params: &ModelParams, config: &CircuitConfig) -> Result<Vec<f64>> {
    let rdms = input_group_rdms(x, params, config)?;
    group_values_from_rdms(&rdms, params, config)
}

/// dLoss/dtheta via one adjoint sweep: J = <psi|M|psi> with the weighted
/// observable M = sum_g w_g H_g, differentiated through every variational
/// layer in reverse.
fn adjoint_loss_theta_grad(
    final_state: &StateVector,
    params: &ModelParams,
    config: &CircuitConfig,
    w: &[f64],
    groups: &[Vec<usize>],
) -> Result<Vec<Vec<f64>>> {
    let n = config.n_qubits;
    let dim = final_state.amplitudes().len();

    // lambda = M |psi>.
    let mut lambda_amps = vec![Complex64::new(0.0, 0.0); dim];
    let pauli_z = HermitianMatrix::pauli_z();
    for (g, group) in groups.iter().enumerate() {
        let idx = SubsetIndex::new(n, group)?;
        let h = if config.trainable_observables() {
            to_matrix(&params.phi_groups[g]).to_row_major()
        } else {
            pauli_z.to_row_major()
        };
        accumulate_klocal(final_state, &idx, &h, w[g], &mut lambda_amps);
    }
    let mut lambda = StateVector::from_amplitudes(lambda_amps)?;
    let mut phi = final_state.clone();

    let mut grads = vec![vec![0.0; n]; params.theta.len()];
    for l in (0..params.theta.len()).rev() {
        // Undo the layer: rotations first (they were applied last). Each
        // fused step yields Im(<lambda|Y_q|phi>) — the gradient of the gate
        // it removes — while rotating both states back.
        for q in (1..=n).rev() {
            grads[l][q - 1] = adjoint_ry_step(&mut phi, &mut lambda, params.theta[l][q - 1], q)?;
        }
        if n >= 2 {
            phi.apply_cnot_chain_adjoint();
            lambda.apply_cnot_chain_adjoint();
        }
    }
    Ok(grads)
}

/// Loss and full gradient record for one sample.
///
/// phi gradients are closed-form from the group density matrices, head
/// gradients are analytic, theta gradients use the requested backend.
pub fn grad_model(
    x: &[f64],
    target: &LossTarget,
    params: &ModelParams,
    config: &CircuitConfig,
    loss_kind: LossKind,
    method: ThetaGradMethod,
) -> Result<(f64, GradientRecord)> {
    params.check_shapes(config)?;
    let groups = config.groups()?;

    // Forward pass, keeping the evolved state when theta gradients need it.
    let (rdms, state) = if config.blocks_active() {
        let state = evolved_state(x, params, config)?;
        (rdms_from_state(&state, &groups)?, Some(state))
    } else {
        (
            rdms_from_factors(&encode_factors(x, config)?, &groups),
            None,
        )
    };
    let values = group_values_from_rdms(&rdms, params, config)?;
    let outputs = apply_head(values.clone(), params, config)?;
    let (loss, d_out) = loss_and_output_grad(&outputs, target, loss_kind)?;

    // Cotangent on the group expectation values.
    let w: Vec<f64> = match &params.head {
        Some(head) => (0..values.len())
            .map(|p| {
                head.weights
                    .iter()
                    .zip(d_out.iter())
                    .map(|(row, d)| row[p] * d)
                    .sum()
            })
            .collect(),
        None => d_out.clone(),
    };

    let mut grad = GradientRecord::zeros_like(params);
    if config.trainable_observables() {
        for (g, rho) in rdms.iter().enumerate() {
            let base = gradient_phi_from_rdm(rho);
            for (slot, b) in grad.d_phi_groups[g].iter_mut().zip(base.iter()) {
                *slot = w[g] * b;
            }
        }
    }
    if let Some(hg) = &mut grad.d_head {
        for (o, d) in d_out.iter().enumerate() {
            for (p, v) in values.iter().enumerate() {
                hg.weights[o][p] = d * v;
            }
            hg.bias[o] = *d;
        }
    }
    if config.blocks_active() {
        grad.d_theta = match method.resolve(config) {
            ResolvedThetaGrad::Shift => shift_loss_theta_grad(x, params, config, &w)?,
            ResolvedThetaGrad::Adjoint => {
                adjoint_loss_theta_grad(state.as_ref().unwrap(), params, config, &w, &groups)?
            }
        };
    }
    Ok((loss, grad))
}

/// Single-sample loss as a function of the flat parameter vector; the
/// reference objective for finite-difference checks.
pub fn loss_of_flat(
    config: &CircuitConfig,
    x: &[f64],
    target: &LossTarget,
    loss_kind: LossKind,
    flat: &[f64],
) -> Result<f64> {
    let params = ModelParams::from_flat(config, flat)?;
    let outputs = crate::circuit::forward(x, &params, config)?;
    Ok(loss_and_output_grad(&outputs, target, loss_kind)?.0)
}

/// Central finite differences: [f(p + h e_i) - f(p - h e_i)] / (2 h).
pub fn finite_difference_gradient<F: Fn(&[f64]) -> f64>(
    objective: F,
    params: &[f64],
    h: f64,
) -> Vec<f64> {
    let mut grad = vec![0.0; params.len()];
    let mut work = params.to_vec();
    for i in 0..params.len() {
        let orig = work[i];
        work[i] = orig + h;
        let plus = objective(&work);
        work[i] = orig - h;
        let minus = objective(&work);
        work[i] = orig;
        grad[i] = (plus - minus) / (2.0 * h);
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{forward, InitSpec, SchemeKind};
    use crate::statevec::RotationAxis as Axis;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn one_qubit_pauli(layers: usize) -> CircuitConfig {
        CircuitConfig {
            n_qubits: 1,
            n_layers: layers,
            use_rotations: true,
            scheme: SchemeKind::FixedPauliZ,
            k: None,
            subset: None,
            d_out: 1,
            encoding_axis: Axis::Y,
        }
    }

    #[test]
    fn shift_gradient_matches_analytic_one_qubit() {
        // Circuit: H |0> then Ry(theta); <sigma_z>(theta) = -sin(theta).
        let cfg = one_qubit_pauli(1);
        let mut params = ModelParams::zeros(&cfg).unwrap();
        for theta in [-1.2, 0.0, 0.7, 2.4] {
            params.theta[0][0] = theta;
            let out = forward(&[0.0], &params, &cfg).unwrap()[0];
            assert!((out + theta.sin()).abs() < 1e-12);
            let g = grad_theta_parameter_shift(&[0.0], &params, &cfg, 0).unwrap();
            assert!(
                (g[0][0] + theta.cos()).abs() < 1e-12,
                "theta {theta}: got {}",
                g[0][0]
            );
        }
    }

    #[test]
    fn shift_gradient_zero_for_unused_qubit() {
        // d_out = 1 measures qubit 1 only; a rotation on qubit 2 after the
        // CNOT chain cannot influence it.
        let cfg = CircuitConfig {
            n_qubits: 2,
            ..one_qubit_pauli(1)
        };
        let mut params = ModelParams::zeros(&cfg).unwrap();
        params.theta[0] = vec![0.3, 1.1];
        let g = grad_theta_parameter_shift(&[0.2, -0.4], &params, &cfg, 0).unwrap();
        assert!(g[0][1].abs() < 1e-12);
        assert!(g[0][0].abs() > 1e-3);
    }

    #[test]
    fn shift_requires_rotations() {
        let mut cfg = one_qubit_pauli(1);
        cfg.use_rotations = false;
        let params = ModelParams::zeros(&cfg).unwrap();
        assert!(matches!(
            grad_theta_parameter_shift(&[0.0], &params, &cfg, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn finite_difference_examples() {
        let g = finite_difference_gradient(|p| p[0] * p[0], &[3.0], 1e-4);
        assert!((g[0] - 6.0).abs() < 1e-7);
        let g = finite_difference_gradient(|_| 42.0, &[1.0, 2.0], 1e-4);
        assert!(g.iter().all(|v| v.abs() < 1e-8));
    }

    fn random_config(rng: &mut ChaCha8Rng) -> CircuitConfig {
        let n = rng.gen_range(2usize..=4);
        let scheme = rng.gen_range(0..3);
        match scheme {
            0 => CircuitConfig {
                n_qubits: n,
                n_layers: rng.gen_range(1..=2),
                use_rotations: true,
                scheme: SchemeKind::FixedPauliZ,
                k: None,
                subset: None,
                d_out: rng.gen_range(1..=n),
                encoding_axis: Axis::Y,
            },
            1 => CircuitConfig {
                n_qubits: n,
                n_layers: rng.gen_range(1..=2),
                use_rotations: rng.gen_bool(0.7),
                scheme: SchemeKind::SlidingKLocal,
                k: Some(rng.gen_range(1..=2.min(n))),
                subset: None,
                d_out: rng.gen_range(1..=n),
                encoding_axis: Axis::Y,
            },
            _ => {
                let mut subset: Vec<usize> = (1..=n).collect();
                subset.shuffle(rng);
                let keep = rng.gen_range(2..=n);
                subset.truncate(keep);
                CircuitConfig {
                    n_qubits: n,
                    n_layers: rng.gen_range(1..=2),
                    use_rotations: rng.gen_bool(0.5),
                    scheme: SchemeKind::PairwiseCombinatorial,
                    k: None,
                    subset: Some(subset),
                    d_out: rng.gen_range(1..=3),
                    encoding_axis: Axis::Y,
                }
            }
        }
    }

    fn check_against_fd(cfg: &CircuitConfig, rng: &mut ChaCha8Rng, method: ThetaGradMethod) {
        let params = ModelParams::init(cfg, &InitSpec::default(), rng).unwrap();
        let x: Vec<f64> = (0..cfg.n_qubits).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let loss_kind = if rng.gen_bool(0.5) {
            LossKind::Mse
        } else {
            LossKind::CrossEntropy
        };
        let target = LossTarget::Label(rng.gen_range(0..cfg.d_out));

        let (_, grad) = grad_model(&x, &target, &params, cfg, loss_kind, method).unwrap();
        let flat = params.flatten();
        let fd = finite_difference_gradient(
            |p| loss_of_flat(cfg, &x, &target, loss_kind, p).unwrap(),
            &flat,
            1e-4,
        );
        let analytic = grad.flatten();
        assert_eq!(analytic.len(), fd.len());
        for (i, (a, f)) in analytic.iter().zip(fd.iter()).enumerate() {
            let denom = f.abs().max(1e-2);
            assert!(
                ((a - f) / denom).abs() <= 1e-5 || (a - f).abs() <= 1e-7,
                "cfg {cfg:?} param {i}: analytic {a} vs fd {f}"
            );
        }
    }

    #[test]
    fn gradients_match_finite_differences_across_configs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..24 {
            let cfg = random_config(&mut rng);
            let method = if trial % 2 == 0 {
                ThetaGradMethod::Shift
            } else {
                ThetaGradMethod::Adjoint
            };
            check_against_fd(&cfg, &mut rng, method);
        }
    }

    #[test]
    fn adjoint_equals_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        for _ in 0..10 {
            let mut cfg = random_config(&mut rng);
            cfg.use_rotations = true;
            if cfg.n_layers == 0 {
                cfg.n_layers = 1;
            }
            let params = ModelParams::init(&cfg, &InitSpec::default(), &mut rng).unwrap();
            let x: Vec<f64> = (0..cfg.n_qubits).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let target = LossTarget::Label(0);
            let (l1, g1) = grad_model(
                &x,
                &target,
                &params,
                &cfg,
                LossKind::Mse,
                ThetaGradMethod::Shift,
            )
            .unwrap();
            let (l2, g2) = grad_model(
                &x,
                &target,
                &params,
                &cfg,
                LossKind::Mse,
                ThetaGradMethod::Adjoint,
            )
            .unwrap();
            assert!((l1 - l2).abs() < 1e-12);
            for (a, b) in g1.flatten().iter().zip(g2.flatten().iter()) {
                assert!((a - b).abs() < 1e-9, "shift {a} vs adjoint {b}");
            }
        }
    }

    #[test]
    fn phi_gradient_is_independent_of_phi() {
        let mut rng = ChaCha8Rng::seed_from_u64(88);
        let cfg = CircuitConfig {
            n_qubits: 3,
            n_layers: 1,
            use_rotations: true,
            scheme: SchemeKind::SlidingKLocal,
            k: Some(2),
            subset: None,
            d_out: 2,
            encoding_axis: Axis::Y,
        };
        let x = [0.5, -1.0, 0.3];
        // The expectation is linear in phi, so dOut/dphi must be identical
        // at two different phi draws (same theta).
        let p1 = ModelParams::init(&cfg, &InitSpec::default(), &mut rng).unwrap();
        let mut p2 = ModelParams::init(&cfg, &InitSpec::default(), &mut rng).unwrap();
        p2.theta = p1.theta.clone();
        let probe = |params: &ModelParams, g: usize, i: usize| {
            let h = 1e-5;
            let mut plus = params.clone();
            plus.phi_groups[g].phi_mut()[i] += h;
            let mut minus = params.clone();
            minus.phi_groups[g].phi_mut()[i] -= h;
            (forward(&x, &plus, &cfg).unwrap()[g] - forward(&x, &minus, &cfg).unwrap()[g])
                / (2.0 * h)
        };
        for g in 0..2 {
            for i in 0..16 {
                let a = probe(&p1, g, i);
                let b = probe(&p2, g, i);
                assert!((a - b).abs() < 1e-9, "group {g} phi {i}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn frozen_observable_mse_chain_rule() {
        // d_out = 1, MSE: dLoss/dphi = 2 (<H> - y) * dExpectation/dphi.
        let cfg = CircuitConfig {
            n_qubits: 2,
            n_layers: 1,
            use_rotations: true,
            scheme: SchemeKind::SlidingKLocal,
            k: Some(1),
            subset: None,
            d_out: 1,
            encoding_axis: Axis::Y,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = ModelParams::init(&cfg, &InitSpec::default(), &mut rng).unwrap();
        let x = [0.9, -0.2];
        let y = 0.37;
        let out = forward(&x, &params, &cfg).unwrap()[0];
        let (_, grad) = grad_model(
            &x,
            &LossTarget::Vector(vec![y]),
            &params,
            &cfg,
            LossKind::Mse,
            ThetaGradMethod::Shift,
        )
        .unwrap();
        let state = evolved_state(&x, &params, &cfg).unwrap();
        let base = crate::observables::expectation_gradient_phi(&state, &[1], 1).unwrap();
        for (g, b) in grad.d_phi_groups[0].iter().zip(base.iter()) {
            assert!((g - 2.0 * (out - y) * b).abs() < 1e-10);
        }
    }

    #[test]
    fn stationary_point_has_zero_gradient() {
        // <sigma_z>(theta) = -sin(theta) for the H-then-Ry circuit; the MSE
        // against target 1 is minimized at theta = -pi/2 where the gradient
        // vanishes.
        let cfg = one_qubit_pauli(1);
        let mut params = ModelParams::zeros(&cfg).unwrap();
        params.theta[0][0] = -std::f64::consts::FRAC_PI_2;
        let (loss, grad) = grad_model(
            &[0.0],
            &LossTarget::Vector(vec![1.0]),
            &params,
            &cfg,
            LossKind::Mse,
            ThetaGradMethod::Shift,
        )
        .unwrap();
        assert!(loss < 1e-20);
        assert!(grad.flatten().iter().all(|g| g.abs() <= 1e-8));
    }
}

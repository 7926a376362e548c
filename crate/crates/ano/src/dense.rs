//! Dense Kronecker-product reference route.
//!
//! Everything in this module is deliberately slow and obvious: full
//! 2^n x 2^n operator matrices, entrywise embeddings, explicit partial
//! traces. The fast kernels elsewhere in the crate are cross-checked against
//! this route (usable up to n = 6 or so), both from the test suite and from
//! `ano oracle`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::circuit::closed_form_example;
use crate::error::{Error, Result};
use crate::observables::{expectation, to_matrix, HermitianMatrix, HermitianParams};
use crate::statevec::{gate_rotation, Gate2x2, RotationAxis, StateVector};

pub fn identity(dim: usize) -> DMatrix<Complex64> {
    DMatrix::identity(dim, dim)
}

pub fn gate_matrix(g: &Gate2x2) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &[g.m[0][0], g.m[0][1], g.m[1][0], g.m[1][1]])
}

fn bit_of(index: usize, qubit: usize, n: usize) -> usize {
    (index >> (n - qubit)) & 1
}

fn check_qubit(q: usize, n: usize) -> Result<()> {
    if q == 0 || q > n {
        return Err(Error::input(format!("qubit {q} out of range 1..={n}")));
    }
    Ok(())
}

/// I (x) ... (x) G (x) ... (x) I with G at 1-based `target`.
pub fn embed_single_qubit(g: &Gate2x2, target: usize, n: usize) -> Result<DMatrix<Complex64>> {
    check_qubit(target, n)?;
    let mut m = identity(1);
    for q in 1..=n {
        let factor = if q == target {
            gate_matrix(g)
        } else {
            identity(2)
        };
        m = m.kronecker(&factor);
    }
    Ok(m)
}

/// Permutation matrix of CNOT(control -> target).
pub fn embed_cnot(control: usize, target: usize, n: usize) -> Result<DMatrix<Complex64>> {
    check_qubit(control, n)?;
    check_qubit(target, n)?;
    if control == target {
        return Err(Error::input("cnot control equals target".to_string()));
    }
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let row = if bit_of(col, control, n) == 1 {
            col ^ (1 << (n - target))
        } else {
            col
        };
        m[(row, col)] = Complex64::new(1.0, 0.0);
    }
    Ok(m)
}

/// Subset bits of a full index, read in subset order (subset[0] gives the
/// most significant bit of the result).
fn subset_bits(index: usize, subset: &[usize], n: usize) -> usize {
    let mut out = 0usize;
    for &q in subset {
        out = (out << 1) | bit_of(index, q, n);
    }
    out
}

fn subset_mask(subset: &[usize], n: usize) -> Result<usize> {
    let mut mask = 0usize;
    for &q in subset {
        check_qubit(q, n)?;
        let bit = 1usize << (n - q);
        if mask & bit != 0 {
            return Err(Error::input(format!("duplicate qubit {q} in subset")));
        }
        mask |= bit;
    }
    Ok(mask)
}

/// Entrywise embedding of a K x K operator acting on `subset` (identity on
/// the rest): M[r][s] = H[a_r][a_s] when the non-subset bits of r and s
/// agree, else 0.
pub fn embed_klocal(
    h: &DMatrix<Complex64>,
    subset: &[usize],
    n: usize,
) -> Result<DMatrix<Complex64>> {
    let mask = subset_mask(subset, n)?;
    let dim = 1usize << n;
    if h.nrows() != (1 << subset.len()) || h.ncols() != h.nrows() {
        return Err(Error::input(format!(
            "operator is {}x{}, expected {0}x{0} for a subset of {} qubits",
            h.nrows(),
            h.ncols(),
            subset.len()
        )));
    }
    let mut m = DMatrix::zeros(dim, dim);
    for r in 0..dim {
        for s in 0..dim {
            if r & !mask == s & !mask {
                m[(r, s)] = h[(subset_bits(r, subset, n), subset_bits(s, subset, n))];
            }
        }
    }
    Ok(m)
}

pub fn apply_matrix(m: &DMatrix<Complex64>, amps: &[Complex64]) -> Vec<Complex64> {
    let dim = amps.len();
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for (r, slot) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..dim {
            acc += m[(r, c)] * amps[c];
        }
        *slot = acc;
    }
    out
}

/// Partial trace of |psi><psi| onto `subset`, computed from full indices.
pub fn partial_trace(
    amps: &[Complex64],
    n: usize,
    subset: &[usize],
) -> Result<DMatrix<Complex64>> {
    let mask = subset_mask(subset, n)?;
    let dim = 1usize << n;
    let kk = 1usize << subset.len();
    let mut rho = DMatrix::zeros(kk, kk);
    for r in 0..dim {
        for s in 0..dim {
            if r & !mask == s & !mask {
                rho[(subset_bits(r, subset, n), subset_bits(s, subset, n))] +=
                    amps[r] * amps[s].conj();
            }
        }
    }
    Ok(rho)
}

/// <psi| embed(H on subset) |psi>, real part (the residue is checked).
pub fn expectation_dense(
    amps: &[Complex64],
    n: usize,
    subset: &[usize],
    h: &HermitianMatrix,
) -> Result<f64> {
    let m = embed_klocal(h.as_matrix(), subset, n)?;
    let hv = apply_matrix(&m, amps);
    let val: Complex64 = amps
        .iter()
        .zip(hv.iter())
        .map(|(a, b)| a.conj() * b)
        .sum();
    if val.im.abs() > 1e-10 {
        return Err(Error::input(format!(
            "dense expectation has imaginary residue {}",
            val.im
        )));
    }
    Ok(val.re)
}

pub fn random_state<R: Rng>(n: usize, rng: &mut R) -> Result<StateVector> {
    let dim = 1usize << n;
    let mut amps: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    StateVector::from_amplitudes(amps)
}

pub fn random_hermitian<R: Rng>(k: usize, rng: &mut R) -> HermitianMatrix {
    let dim = 1usize << k;
    let phi: Vec<f64> = (0..dim * dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
    to_matrix(&HermitianParams::new(k, phi).expect("length is K^2 by construction"))
}

/// A Haar-ish k-qubit unitary built as a product of random rotations and
/// CNOTs (dense route).
pub fn random_unitary<R: Rng>(k: usize, rng: &mut R) -> Result<DMatrix<Complex64>> {
    let dim = 1usize << k;
    let mut u = identity(dim);
    let layers = 3 * k.max(1);
    for _ in 0..layers {
        for q in 1..=k {
            let axis = match rng.gen_range(0..3) {
                0 => RotationAxis::X,
                1 => RotationAxis::Y,
                _ => RotationAxis::Z,
            };
            let g = gate_rotation(axis, rng.gen_range(-3.15..3.15))?;
            u = embed_single_qubit(&g, q, k)? * u;
        }
        if k >= 2 {
            let c = rng.gen_range(1..=k);
            let mut t = rng.gen_range(1..=k);
            while t == c {
                t = rng.gen_range(1..=k);
            }
            u = embed_cnot(c, t, k)? * u;
        }
    }
    Ok(u)
}

fn random_subset<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut qubits: Vec<usize> = (1..=n).collect();
    qubits.shuffle(rng);
    qubits.truncate(k);
    qubits
}

/// Cross-check every fast kernel against the dense route on random cases
/// with n <= 6. Returns the maximum deviation observed.
pub fn run_dense_kron_suite(cases: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_dev: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.gen_range(2usize..=6);
        let state = random_state(n, &mut rng)?;

        // Single-qubit gate kernel vs dense matvec.
        let axis = match rng.gen_range(0..3) {
            0 => RotationAxis::X,
            1 => RotationAxis::Y,
            _ => RotationAxis::Z,
        };
        let g = gate_rotation(axis, rng.gen_range(-3.15..3.15))?;
        let target = rng.gen_range(1..=n);
        let mut fast = state.clone();
        fast.apply_single_qubit(&g, target)?;
        let dense = apply_matrix(&embed_single_qubit(&g, target, n)?, state.amplitudes());
        for (a, b) in fast.amplitudes().iter().zip(dense.iter()) {
            max_dev = max_dev.max((a - b).norm());
        }

        // CNOT kernel vs dense permutation.
        let control = rng.gen_range(1..=n);
        let mut tgt = rng.gen_range(1..=n);
        while tgt == control {
            tgt = rng.gen_range(1..=n);
        }
        let mut fast = state.clone();
        fast.apply_cnot(control, tgt)?;
        let dense = apply_matrix(&embed_cnot(control, tgt, n)?, state.amplitudes());
        for (a, b) in fast.amplitudes().iter().zip(dense.iter()) {
            max_dev = max_dev.max((a - b).norm());
        }

        // Reduced density matrix vs dense partial trace, arbitrary order.
        let k = rng.gen_range(1..=3.min(n));
        let subset = random_subset(n, k, &mut rng);
        let rho_fast = crate::observables::reduced_density_matrix(&state, &subset)?;
        let rho_dense = partial_trace(state.amplitudes(), n, &subset)?;
        for (a, b) in rho_fast.iter().zip(rho_dense.iter()) {
            max_dev = max_dev.max((a - b).norm());
        }

        // Expectation via reduced density matrix vs dense embedding.
        let h = random_hermitian(k, &mut rng);
        let e_fast = expectation(&state, &subset, &h)?;
        let e_dense = expectation_dense(state.amplitudes(), n, &subset, &h)?;
        max_dev = max_dev.max((e_fast - e_dense).abs());
    }
    Ok(max_dev)
}

/// Check the 2-qubit closed-form expectation formulas against the simulator
/// route (state injection, Ry rotations, reduced-density-matrix
/// measurement). Also checks the rotation-off reduction. Returns the maximum
/// deviation observed.
pub fn run_closed_form_suite(cases: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_dev: f64 = 0.0;
    for _ in 0..cases {
        let mut v = [0.0f64; 4];
        loop {
            for slot in v.iter_mut() {
                *slot = rng.gen_range(-1.0..1.0);
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-3 {
                for slot in v.iter_mut() {
                    *slot /= norm;
                }
                break;
            }
        }
        let h1 = random_hermitian(1, &mut rng);
        let h2 = random_hermitian(1, &mut rng);
        let t1 = rng.gen_range(-3.15..3.15);
        let t2 = rng.gen_range(-3.15..3.15);

        let amps: Vec<Complex64> = v.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        let mut state = StateVector::from_amplitudes(amps)?;
        state.apply_single_qubit(&gate_rotation(RotationAxis::Y, t1)?, 1)?;
        state.apply_single_qubit(&gate_rotation(RotationAxis::Y, t2)?, 2)?;
        let sim1 = expectation(&state, &[1], &h1)?;
        let sim2 = expectation(&state, &[2], &h2)?;

        let (f1, f2) = closed_form_example(&v, &h1, &h2, t1, t2)?;
        max_dev = max_dev.max((sim1 - f1).abs()).max((sim2 - f2).abs());

        // Rotation off: the formulas must reduce to the bare 1-local
        // expectations of the injected state.
        let (z1, z2) = closed_form_example(&v, &h1, &h2, 0.0, 0.0)?;
        let bare = StateVector::from_amplitudes(
            v.iter().map(|&r| Complex64::new(r, 0.0)).collect(),
        )?;
        let b1 = expectation(&bare, &[1], &h1)?;
        let b2 = expectation(&bare, &[2], &h2)?;
        max_dev = max_dev.max((z1 - b1).abs()).max((z2 - b2).abs());

        // And to the explicit quadratic forms.
        let q1 = h1.as_matrix()[(0, 0)].re * (v[0] * v[0] + v[1] * v[1])
            + 2.0 * h1.as_matrix()[(0, 1)].re * (v[0] * v[2] + v[1] * v[3])
            + h1.as_matrix()[(1, 1)].re * (v[2] * v[2] + v[3] * v[3]);
        let q2 = h2.as_matrix()[(0, 0)].re * (v[0] * v[0] + v[2] * v[2])
            + 2.0 * h2.as_matrix()[(0, 1)].re * (v[0] * v[1] + v[2] * v[3])
            + h2.as_matrix()[(1, 1)].re * (v[1] * v[1] + v[3] * v[3]);
        max_dev = max_dev.max((z1 - q1).abs()).max((z2 - q2).abs());
    }
    Ok(max_dev)
}

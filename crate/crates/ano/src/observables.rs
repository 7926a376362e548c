//! Trainable k-local Hermitian observables: parameterization, measurement,
//! and spectral analysis.
//!
//! A k-local observable on K = 2^k dimensions is described by K^2 real
//! parameters `phi`, stored in a fixed canonical order: the K diagonal
//! entries first, then for each upper-triangle position (i, j) with i < j in
//! row-major order the pair (a_ij, b_ij) with H_ij = a_ij + i b_ij. The lower
//! triangle is the conjugate mirror, so the matrix is Hermitian by
//! construction. This ordering is load-bearing: checkpoints, gradients and
//! flattened parameter vectors all rely on it.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::statevec::{StateVector, SubsetIndex};

/// Tolerance used when validating that a user-supplied matrix is Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// K^2 real parameters describing a k-local Hermitian observable.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HermitianParams {
    k: usize,
    phi: Vec<f64>,
}

/// Rank of the (a, b) pair for upper-triangle position (i, j), 0-based i < j.
pub(crate) fn offdiag_rank(i: usize, j: usize, dim: usize) -> usize {
    debug_assert!(i < j && j < dim);
    i * (2 * dim - i - 1) / 2 + (j - i - 1)
}

impl HermitianParams {
    pub fn new(k: usize, phi: Vec<f64>) -> Result<Self> {
        let dim = 1usize << k;
        if phi.len() != dim * dim {
            return Err(Error::input(format!(
                "expected {} parameters for a {k}-local observable, got {}",
                dim * dim,
                phi.len()
            )));
        }
        Ok(HermitianParams { k, phi })
    }

    pub fn zeros(k: usize) -> Self {
        let dim = 1usize << k;
        HermitianParams {
            k,
            phi: vec![0.0; dim * dim],
        }
    }

    /// The 1-qubit Pauli-Z observable: phi = (1, -1, 0, 0).
    pub fn pauli_z() -> Self {
        HermitianParams {
            k: 1,
            phi: vec![1.0, -1.0, 0.0, 0.0],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        1 << self.k
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn phi_mut(&mut self) -> &mut [f64] {
        &mut self.phi
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }
}

/// A K x K Hermitian matrix. Instances are Hermitian by construction: the
/// lower triangle is always the exact conjugate of the upper one.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    m: DMatrix<Complex64>,
}

impl HermitianMatrix {
    /// Validate hermiticity of an arbitrary matrix within [`HERMITICITY_TOL`].
    pub fn try_from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::input(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        for i in 0..m.nrows() {
            for j in i..m.ncols() {
                if (m[(i, j)] - m[(j, i)].conj()).norm() > HERMITICITY_TOL {
                    return Err(Error::input(format!(
                        "matrix is not Hermitian at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(HermitianMatrix { m })
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let dim = entries.len();
        let mut m = DMatrix::zeros(dim, dim);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = Complex64::new(e, 0.0);
        }
        HermitianMatrix { m }
    }

    pub fn pauli_x() -> Self {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        m[(1, 0)] = Complex64::new(1.0, 0.0);
        HermitianMatrix { m }
    }

    pub fn pauli_y() -> Self {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = Complex64::new(0.0, -1.0);
        m[(1, 0)] = Complex64::new(0.0, 1.0);
        HermitianMatrix { m }
    }

    pub fn pauli_z() -> Self {
        HermitianMatrix::diagonal(&[1.0, -1.0])
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn to_row_major(&self) -> Vec<Complex64> {
        let dim = self.dim();
        let mut out = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                out.push(self.m[(i, j)]);
            }
        }
        out
    }
}

/// Build the Hermitian matrix of a parameter vector (the forward direction of
/// the phi <-> H isomorphism).
pub fn to_matrix(params: &HermitianParams) -> HermitianMatrix {
    let dim = params.dim();
    let phi = params.phi();
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = Complex64::new(phi[i], 0.0);
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            let r = dim + 2 * offdiag_rank(i, j, dim);
            let entry = Complex64::new(phi[r], phi[r + 1]);
            m[(i, j)] = entry;
            m[(j, i)] = entry.conj();
        }
    }
    HermitianMatrix { m }
}

/// Recover the parameter vector of a Hermitian matrix (the inverse of
/// [`to_matrix`]). The matrix dimension must be a power of two.
pub fn from_matrix(h: &HermitianMatrix) -> Result<HermitianParams> {
    let dim = h.dim();
    if !dim.is_power_of_two() {
        return Err(Error::input(format!(
            "matrix dimension {dim} is not a power of two"
        )));
    }
    let k = dim.trailing_zeros() as usize;
    let mut phi = vec![0.0; dim * dim];
    for (i, slot) in phi.iter_mut().enumerate().take(dim) {
        *slot = h.m[(i, i)].re;
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            let r = dim + 2 * offdiag_rank(i, j, dim);
            phi[r] = h.m[(i, j)].re;
            phi[r + 1] = h.m[(i, j)].im;
        }
    }
    HermitianParams::new(k, phi)
}

/// Partial trace of |psi><psi| onto `subset` (1-based qubit indices, in the
/// order the observable's tensor factors should see them).
pub fn reduced_density_matrix(
    state: &StateVector,
    subset: &[usize],
) -> Result<DMatrix<Complex64>> {
    let idx = SubsetIndex::new(state.n_qubits(), subset)?;
    Ok(rdm_with_index(state, &idx))
}

pub(crate) fn rdm_with_index(state: &StateVector, idx: &SubsetIndex) -> DMatrix<Complex64> {
    let dim = idx.dim();
    let amps = state.amplitudes();
    // Accumulate the upper triangle in a flat row-major buffer; DMatrix
    // indexing is too slow for the inner loop.
    let mut upper = vec![Complex64::new(0.0, 0.0); dim * dim];
    let mut g = vec![Complex64::new(0.0, 0.0); dim];
    idx.for_each_base(|base| {
        for (slot, &spread) in g.iter_mut().zip(idx.spread.iter()) {
            *slot = amps[base | spread];
        }
        for a in 0..dim {
            let ga = g[a];
            let row = &mut upper[a * dim..(a + 1) * dim];
            for c in a..dim {
                row[c] += ga * g[c].conj();
            }
        }
    });
    let mut rho = DMatrix::<Complex64>::zeros(dim, dim);
    for a in 0..dim {
        rho[(a, a)] = Complex64::new(upper[a * dim + a].re, 0.0);
        for c in (a + 1)..dim {
            rho[(a, c)] = upper[a * dim + c];
            rho[(c, a)] = upper[a * dim + c].conj();
        }
    }
    rho
}

/// Expectation value <psi| H on subset |psi> = Tr(H rho_subset).
pub fn expectation(state: &StateVector, subset: &[usize], h: &HermitianMatrix) -> Result<f64> {
    let dim = 1usize << subset.len();
    if h.dim() != dim {
        return Err(Error::input(format!(
            "observable dimension {} does not match subset size {} (expected {dim})",
            h.dim(),
            subset.len()
        )));
    }
    let rho = reduced_density_matrix(state, subset)?;
    expectation_from_rdm(&rho, h)
}

/// Tr(H rho) for a Hermitian H and Hermitian rho; the imaginary residue is
/// checked against 1e-10 then discarded.
pub fn expectation_from_rdm(rho: &DMatrix<Complex64>, h: &HermitianMatrix) -> Result<f64> {
    if rho.nrows() != h.dim() {
        return Err(Error::input(format!(
            "density matrix dimension {} does not match observable dimension {}",
            rho.nrows(),
            h.dim()
        )));
    }
    let dim = h.dim();
    let mut tr = Complex64::new(0.0, 0.0);
    for i in 0..dim {
        for j in 0..dim {
            tr += h.m[(i, j)] * rho[(j, i)];
        }
    }
    if tr.im.abs() > 1e-10 {
        return Err(Error::input(format!(
            "expectation has imaginary residue {}",
            tr.im
        )));
    }
    Ok(tr.re)
}

/// Gradient of Tr(H(phi) rho) with respect to phi. The expectation is linear
/// in phi, so the gradient depends only on rho:
/// d/dc_ii = Re(rho_ii), d/da_ij = 2 Re(rho_ji), d/db_ij = -2 Im(rho_ji).
pub fn gradient_phi_from_rdm(rho: &DMatrix<Complex64>) -> Vec<f64> {
    let dim = rho.nrows();
    let mut grad = vec![0.0; dim * dim];
    for i in 0..dim {
        grad[i] = rho[(i, i)].re;
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            let r = dim + 2 * offdiag_rank(i, j, dim);
            grad[r] = 2.0 * rho[(j, i)].re;
            grad[r + 1] = -2.0 * rho[(j, i)].im;
        }
    }
    grad
}

/// Gradient of the expectation of a k-local observable with respect to its
/// phi parameters, evaluated on `state`. Independent of phi itself.
pub fn expectation_gradient_phi(
    state: &StateVector,
    subset: &[usize],
    k: usize,
) -> Result<Vec<f64>> {
    if k != subset.len() {
        return Err(Error::input(format!(
            "locality {k} does not match subset size {}",
            subset.len()
        )));
    }
    let rho = reduced_density_matrix(state, subset)?;
    Ok(gradient_phi_from_rdm(&rho))
}

/// Real eigenvalues in ascending order.
pub fn eigen_spectrum(h: &HermitianMatrix) -> Vec<f64> {
    let eig = h.m.clone().symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals
}

/// Scale-aware default tolerance for spectrum comparison.
pub fn default_similarity_tol(h1: &HermitianMatrix, h2: &HermitianMatrix) -> f64 {
    let inf = |h: &HermitianMatrix| {
        eigen_spectrum(h)
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    };
    1e-8 * 1.0f64.max(inf(h1)).max(inf(h2))
}

/// Two Hermitian matrices are unitarily similar iff their sorted spectra
/// agree elementwise within `tol`.
pub fn unitarily_similar(h1: &HermitianMatrix, h2: &HermitianMatrix, tol: f64) -> Result<bool> {
    if h1.dim() != h2.dim() {
        return Err(Error::input(format!(
            "dimension mismatch: {} vs {}",
            h1.dim(),
            h2.dim()
        )));
    }
    let s1 = eigen_spectrum(h1);
    let s2 = eigen_spectrum(h2);
    Ok(s1
        .iter()
        .zip(s2.iter())
        .all(|(a, b)| (a - b).abs() <= tol))
}

/// (lambda_min, lambda_max); every expectation of H on a normalized state
/// lies in this closed interval.
pub fn rayleigh_bounds(h: &HermitianMatrix) -> (f64, f64) {
    let spec = eigen_spectrum(h);
    (spec[0], spec[spec.len() - 1])
}

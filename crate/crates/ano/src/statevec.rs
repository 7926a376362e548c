//! Dense statevector representation and gate kernels for n-qubit systems.
//!
//! Convention used everywhere in this crate: qubits are numbered `1..=n` and
//! qubit 1 is the *most significant* bit of a basis index. A basis index `b`
//! therefore encodes the ket `|i_1 i_2 ... i_n>` with `i_q = (b >> (n - q)) & 1`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Memory guard: 2^20 amplitudes (16 MiB) is the largest state we allow.
pub const MAX_QUBITS: usize = 20;

/// Rotation generator axis for single-qubit rotation gates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationAxis {
    X,
    Y,
    Z,
}

impl std::str::FromStr for RotationAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(RotationAxis::X),
            "y" | "Y" => Ok(RotationAxis::Y),
            "z" | "Z" => Ok(RotationAxis::Z),
            other => Err(Error::input(format!("unknown rotation axis `{other}`"))),
        }
    }
}

/// A single-qubit gate as a 2x2 complex matrix, row major.
#[derive(Clone, Copy, Debug)]
pub struct Gate2x2 {
    pub m: [[Complex64; 2]; 2],
}

impl Gate2x2 {
    pub fn adjoint(&self) -> Gate2x2 {
        Gate2x2 {
            m: [
                [self.m[0][0].conj(), self.m[1][0].conj()],
                [self.m[0][1].conj(), self.m[1][1].conj()],
            ],
        }
    }

    /// Max elementwise deviation of G G† from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..2 {
                    s += self.m[i][k] * self.m[j][k].conj();
                }
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((s - target).norm());
            }
        }
        err
    }

    pub fn mul_vec(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }
}

/// Rotation gate exp(-i * angle * sigma_axis / 2).
pub fn gate_rotation(axis: RotationAxis, angle: f64) -> Result<Gate2x2> {
    if !angle.is_finite() {
        return Err(Error::input(format!("non-finite rotation angle {angle}")));
    }
    let c = (angle / 2.0).cos();
    let s = (angle / 2.0).sin();
    let zero = Complex64::new(0.0, 0.0);
    let m = match axis {
        RotationAxis::X => [
            [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
            [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
        ],
        RotationAxis::Y => [
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ],
        RotationAxis::Z => [
            [Complex64::new(c, -s), zero],
            [zero, Complex64::new(c, s)],
        ],
    };
    Ok(Gate2x2 { m })
}

pub fn hadamard() -> Gate2x2 {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Gate2x2 {
        m: [[h, h], [h, -h]],
    }
}

/// Pure n-qubit state as 2^n complex amplitudes.
#[derive(Clone, Debug)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

/// |0...0> on n qubits.
pub fn zero_state(n: usize) -> Result<StateVector> {
    StateVector::zero(n)
}

impl StateVector {
    pub fn zero(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::config(format!(
                "qubit count {n} outside supported range 1..={MAX_QUBITS}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits: n, amps })
    }

    /// Build a state from explicit amplitudes. The length must be a power of
    /// two; the amplitudes are taken as-is (no normalization).
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::input(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let n = len.trailing_zeros() as usize;
        if n > MAX_QUBITS {
            return Err(Error::config(format!(
                "qubit count {n} outside supported range 1..={MAX_QUBITS}"
            )));
        }
        Ok(StateVector { n_qubits: n, amps })
    }

    /// Tensor product of per-qubit 2-vectors; `factors[0]` belongs to qubit 1.
    pub fn from_qubit_factors(factors: &[[Complex64; 2]]) -> Result<Self> {
        let n = factors.len();
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::config(format!(
                "qubit count {n} outside supported range 1..={MAX_QUBITS}"
            )));
        }
        let mut amps = Vec::with_capacity(1 << n);
        amps.push(Complex64::new(1.0, 0.0));
        for f in factors {
            let mut next = Vec::with_capacity(amps.len() * 2);
            for a in &amps {
                next.push(a * f[0]);
                next.push(a * f[1]);
            }
            amps = next;
        }
        Ok(StateVector { n_qubits: n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()) .sum()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Basis-index bit mask of a 1-based qubit index.
    pub fn qubit_mask(&self, qubit: usize) -> Result<usize> {
        qubit_mask(self.n_qubits, qubit)
    }

    /// Apply a single-qubit gate to `target` (1-based).
    pub fn apply_single_qubit(&mut self, gate: &Gate2x2, target: usize) -> Result<()> {
        let step = self.qubit_mask(target)?;
        let [[u00, u01], [u10, u11]] = gate.m;
        for chunk in self.amps.chunks_exact_mut(2 * step) {
            let (lo, hi) = chunk.split_at_mut(step);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let x = *a;
                let y = *b;
                *a = u00 * x + u01 * y;
                *b = u10 * x + u11 * y;
            }
        }
        Ok(())
    }

    /// Ry(theta) on `target`: the real-coefficient special case of
    /// [`StateVector::apply_single_qubit`], used by the variational layers.
    pub(crate) fn apply_ry(&mut self, theta: f64, target: usize) -> Result<()> {
        let step = self.qubit_mask(target)?;
        let c = (theta / 2.0).cos();
        let s = (theta / 2.0).sin();
        for chunk in self.amps.chunks_exact_mut(2 * step) {
            let (lo, hi) = chunk.split_at_mut(step);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let x = *a;
                let y = *b;
                *a = Complex64::new(c * x.re - s * y.re, c * x.im - s * y.im);
                *b = Complex64::new(s * x.re + c * y.re, s * x.im + c * y.im);
            }
        }
        Ok(())
    }

    /// CNOT with 1-based control and target qubits.
    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        if control == target {
            return Err(Error::input(format!(
                "cnot control and target may not coincide (both {control})"
            )));
        }
        let cmask = self.qubit_mask(control)?;
        let tmask = self.qubit_mask(target)?;
        for i in 0..self.amps.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amps.swap(i, i | tmask);
            }
        }
        Ok(())
    }

    /// ⟨self| sigma_axis on `target` |other⟩ without materializing the
    /// intermediate state. Reference route for the fused adjoint step.
    #[cfg(test)]
    pub(crate) fn pauli_sandwich(
        &self,
        other: &StateVector,
        axis: RotationAxis,
        target: usize,
    ) -> Result<Complex64> {
        let step = self.qubit_mask(target)?;
        let len = self.amps.len();
        let mut acc = Complex64::new(0.0, 0.0);
        let i_pos = Complex64::new(0.0, 1.0);
        let i_neg = Complex64::new(0.0, -1.0);
        let mut base = 0;
        while base < len {
            for i in base..base + step {
                let j = i + step;
                let l0 = self.amps[i].conj();
                let l1 = self.amps[j].conj();
                let p0 = other.amps[i];
                let p1 = other.amps[j];
                acc += match axis {
                    RotationAxis::X => l0 * p1 + l1 * p0,
                    RotationAxis::Y => l0 * (i_neg * p1) + l1 * (i_pos * p0),
                    RotationAxis::Z => l0 * p0 - l1 * p1,
                };
            }
            base += 2 * step;
        }
        Ok(acc)
    }
}

thread_local! {
    static PERM_SCRATCH: std::cell::RefCell<Vec<Complex64>> =
        const { std::cell::RefCell::new(Vec::new()) };
}

/// The linear CNOT chain (1,2), (2,3), ..., (n-1,n) maps basis index i to
/// T(i) where bit p of T(i) is the XOR of bits p..=n-1 of i (each control is
/// the already-updated bit). T is exactly Gray-code decoding, and its
/// inverse is Gray-code encoding, so the whole chain is one permutation
/// pass instead of n-1 gate passes.
#[inline]
fn gray_encode(i: usize) -> usize {
    i ^ (i >> 1)
}

#[inline]
fn gray_decode(mut i: usize) -> usize {
    i ^= i >> 1;
    i ^= i >> 2;
    i ^= i >> 4;
    i ^= i >> 8;
    i ^= i >> 16;
    i
}

impl StateVector {
    fn permute_with(&mut self, index_of_source: impl Fn(usize) -> usize) {
        PERM_SCRATCH.with(|cell| {
            let mut scratch = cell.borrow_mut();
            scratch.clear();
            scratch.extend((0..self.amps.len()).map(|j| self.amps[index_of_source(j)]));
            std::mem::swap(&mut *scratch, &mut self.amps);
        });
    }

    /// Apply the full CNOT chain (1,2), ..., (n-1,n) in one pass.
    pub(crate) fn apply_cnot_chain(&mut self) {
        // new[T(i)] = old[i]  <=>  new[j] = old[T^{-1}(j)] = old[encode(j)].
        self.permute_with(gray_encode);
    }

    /// Apply the inverse chain (n-1,n), ..., (1,2) in one pass.
    pub(crate) fn apply_cnot_chain_adjoint(&mut self) {
        self.permute_with(gray_decode);
    }
}

/// One fused adjoint step for an Ry gate on `target`: returns
/// Im(<lambda| Y_target |phi>) evaluated on the incoming states, and applies
/// Ry(-theta) to both states, all in a single traversal.
pub(crate) fn adjoint_ry_step(
    phi: &mut StateVector,
    lambda: &mut StateVector,
    theta: f64,
    target: usize,
) -> Result<f64> {
    let step = phi.qubit_mask(target)?;
    let c = (theta / 2.0).cos();
    let s = (theta / 2.0).sin();
    let mut acc = 0.0;
    for (pc, lc) in phi
        .amps
        .chunks_exact_mut(2 * step)
        .zip(lambda.amps.chunks_exact_mut(2 * step))
    {
        let (p_lo, p_hi) = pc.split_at_mut(step);
        let (l_lo, l_hi) = lc.split_at_mut(step);
        for ((a, b), (u, v)) in p_lo
            .iter_mut()
            .zip(p_hi.iter_mut())
            .zip(l_lo.iter_mut().zip(l_hi.iter_mut()))
        {
            let p0 = *a;
            let p1 = *b;
            let l0 = *u;
            let l1 = *v;
            // Im(<l|Y|p>) pairs as Re(conj(l1) p0) - Re(conj(l0) p1).
            acc += l1.re * p0.re + l1.im * p0.im - (l0.re * p1.re + l0.im * p1.im);
            // Ry(-theta) = [[c, s], [-s, c]].
            *a = Complex64::new(c * p0.re + s * p1.re, c * p0.im + s * p1.im);
            *b = Complex64::new(c * p1.re - s * p0.re, c * p1.im - s * p0.im);
            *u = Complex64::new(c * l0.re + s * l1.re, c * l0.im + s * l1.im);
            *v = Complex64::new(c * l1.re - s * l0.re, c * l1.im - s * l0.im);
        }
    }
    Ok(acc)
}

pub(crate) fn qubit_mask(n_qubits: usize, qubit: usize) -> Result<usize> {
    if qubit == 0 || qubit > n_qubits {
        return Err(Error::input(format!(
            "qubit index {qubit} out of range 1..={n_qubits}"
        )));
    }
    Ok(1usize << (n_qubits - qubit))
}

/// Index arithmetic for a subset of qubits.
///
/// `spread[a]` places the k bits of `a` at the subset's bit positions, with
/// the most significant bit of `a` going to `subset[0]`. Basis indices with
/// all subset bits cleared ("bases") enumerate the remaining qubits.
pub(crate) struct SubsetIndex {
    pub n: usize,
    pub k: usize,
    pub subset_mask: usize,
    pub spread: Vec<usize>,
}

impl SubsetIndex {
    pub fn new(n: usize, subset: &[usize]) -> Result<Self> {
        let k = subset.len();
        if k == 0 || k > n {
            return Err(Error::input(format!(
                "subset size {k} out of range 1..={n}"
            )));
        }
        let mut subset_mask = 0usize;
        let mut masks = Vec::with_capacity(k);
        for &q in subset {
            let m = qubit_mask(n, q)?;
            if subset_mask & m != 0 {
                return Err(Error::input(format!("duplicate qubit {q} in subset")));
            }
            subset_mask |= m;
            masks.push(m);
        }
        let kk = 1usize << k;
        let mut spread = vec![0usize; kk];
        for (a, slot) in spread.iter_mut().enumerate() {
            let mut idx = 0usize;
            for (j, &m) in masks.iter().enumerate() {
                if a & (1 << (k - 1 - j)) != 0 {
                    idx |= m;
                }
            }
            *slot = idx;
        }
        Ok(SubsetIndex {
            n,
            k,
            subset_mask,
            spread,
        })
    }

    pub fn dim(&self) -> usize {
        1 << self.k
    }

    /// Visit every basis index whose subset bits are all zero.
    #[inline]
    pub fn for_each_base(&self, mut f: impl FnMut(usize)) {
        let full = 1usize << self.n;
        let m = self.subset_mask;
        let mut b = 0usize;
        loop {
            f(b);
            b = ((b | m) + 1) & !m;
            if b == 0 || b >= full {
                break;
            }
        }
    }
}

/// out += weight * (H acting on `subset`, identity elsewhere) |psi>.
///
/// `h` is a K x K matrix in row-major order with K = 2^subset.len().
pub(crate) fn accumulate_klocal(
    psi: &StateVector,
    idx: &SubsetIndex,
    h: &[Complex64],
    weight: f64,
    out: &mut [Complex64],
) {
    let kk = idx.dim();
    debug_assert_eq!(h.len(), kk * kk);
    debug_assert_eq!(out.len(), psi.amps.len());
    let w = Complex64::new(weight, 0.0);
    let mut gathered = vec![Complex64::new(0.0, 0.0); kk];
    idx.for_each_base(|base| {
        for (slot, &spread) in gathered.iter_mut().zip(idx.spread.iter()) {
            *slot = psi.amps[base | spread];
        }
        for a in 0..kk {
            let row = &h[a * kk..(a + 1) * kk];
            let mut s = Complex64::new(0.0, 0.0);
            for (c, g) in row.iter().zip(gathered.iter()) {
                s += c * g;
            }
            out[base | idx.spread[a]] += w * s;
        }
    });
}

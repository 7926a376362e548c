//! Observable space is partitioned by eigen-spectra: conjugating by any
//! unitary stays inside a class, while a trainable observable can leave the
//! Pauli class { -1, +1 } entirely. Expectations always stay inside the
//! Rayleigh bounds.
//!
//!     cargo run --release --example spectrum_classes

use ano::dense::{random_hermitian, random_state, random_unitary};
use ano::observables::{
    default_similarity_tol, eigen_spectrum, expectation, rayleigh_bounds, unitarily_similar,
    HermitianMatrix,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);

    // sigma_z and sigma_x share the spectrum {-1, +1}: one class.
    let z = HermitianMatrix::pauli_z();
    let x = HermitianMatrix::pauli_x();
    println!(
        "sigma_z ~ sigma_x: {}",
        unitarily_similar(&z, &x, 1e-8).unwrap()
    );
    // diag(2, -1) lives in a different class.
    let d = HermitianMatrix::diagonal(&[2.0, -1.0]);
    println!("sigma_z ~ diag(2,-1): {}", unitarily_similar(&z, &d, 1e-8).unwrap());

    // Conjugation never changes the class.
    let mut all_similar = true;
    for _ in 0..100 {
        let h = random_hermitian(2, &mut rng);
        let u = random_unitary(2, &mut rng).unwrap();
        let hc = HermitianMatrix::try_from_matrix(u.adjoint() * h.as_matrix() * &u).unwrap();
        all_similar &= unitarily_similar(&h, &hc, default_similarity_tol(&h, &hc)).unwrap();
    }
    println!("100 random conjugations stay unitarily similar: {all_similar}");

    // A random trainable observable typically escapes [-1, 1].
    let h = random_hermitian(2, &mut rng);
    let (lo, hi) = rayleigh_bounds(&h);
    println!(
        "random 2-local observable: spectrum {:?}, Rayleigh bounds [{lo:.3}, {hi:.3}]",
        eigen_spectrum(&h)
    );

    // Expectations respect the bounds on every state.
    let mut worst_margin = f64::INFINITY;
    for _ in 0..1000 {
        let state = random_state(4, &mut rng).unwrap();
        let v = expectation(&state, &[2, 3], &h).unwrap();
        worst_margin = worst_margin.min(v - lo).min(hi - v);
    }
    println!("1000 random states: smallest distance to a Rayleigh bound = {worst_margin:.3e}");
    assert!(worst_margin >= -1e-10);
}

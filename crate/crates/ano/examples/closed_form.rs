//! Cross-check the simulator against the closed-form 2-qubit expectation
//! formulas for 1-local observables under Ry(theta1) x Ry(theta2).
//!
//!     cargo run --release --example closed_form

use ano::circuit::closed_form_example;
use ano::dense::run_closed_form_suite;
use ano::observables::HermitianMatrix;

fn main() {
    // One worked instance: |00> with sigma_z observables and no rotation.
    let z = HermitianMatrix::pauli_z();
    let (e1, e2) = closed_form_example(&[1.0, 0.0, 0.0, 0.0], &z, &z, 0.0, 0.0).unwrap();
    println!("<Z x I> = {e1}, <I x Z> = {e2} on |00> (both should be 1)");

    // Rotating qubit 1 by pi flips its expectation.
    let (e1, e2) =
        closed_form_example(&[1.0, 0.0, 0.0, 0.0], &z, &z, std::f64::consts::PI, 0.0).unwrap();
    println!("after Ry(pi) on qubit 1: {e1:.6}, {e2:.6} (expect -1, 1)");

    let cases = 1000;
    let dev = run_closed_form_suite(cases, 20260810).unwrap();
    println!("{cases} random (state, H1, H2, theta1, theta2) draws");
    println!("max |simulator - formula| = {dev:.3e}");
    assert!(dev <= 1e-10);
    println!("closed-form oracle agrees to 1e-10");
}

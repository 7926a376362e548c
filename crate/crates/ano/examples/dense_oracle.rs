//! Check every fast kernel (gate application, CNOT, reduced density matrix,
//! k-local expectation) against dense Kronecker-product arithmetic on random
//! states with up to 6 qubits.
//!
//!     cargo run --release --example dense_oracle

use ano::dense::run_dense_kron_suite;

fn main() {
    let cases = 200;
    let dev = run_dense_kron_suite(cases, 20260810).unwrap();
    println!("{cases} random cases, n <= 6");
    println!("max |kernel - dense| = {dev:.3e}");
    assert!(dev <= 1e-10);
    println!("kernels match the dense route to 1e-10");
}

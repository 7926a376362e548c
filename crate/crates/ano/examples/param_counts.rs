//! Reproduce the exact trainable-parameter counts of every experimental
//! configuration: the 4-qubit banknote models and the 16-qubit MNIST models.
//!
//!     cargo run --release --example param_counts

use ano::circuit::{parameter_breakdown, CircuitConfig, SchemeKind};
use ano::statevec::RotationAxis;

fn sliding(n: usize, k: usize, d_out: usize, rotations: bool) -> CircuitConfig {
    CircuitConfig {
        n_qubits: n,
        n_layers: 4,
        use_rotations: rotations,
        scheme: SchemeKind::SlidingKLocal,
        k: Some(k),
        subset: None,
        d_out,
        encoding_axis: RotationAxis::Y,
    }
}

fn pairwise(subset: Vec<usize>) -> CircuitConfig {
    CircuitConfig {
        n_qubits: 16,
        n_layers: 4,
        use_rotations: false,
        scheme: SchemeKind::PairwiseCombinatorial,
        k: None,
        subset: Some(subset),
        d_out: 10,
        encoding_axis: RotationAxis::Y,
    }
}

fn show(label: &str, cc: &CircuitConfig) {
    let b = parameter_breakdown(cc).unwrap();
    println!(
        "{label:<28} total {:>6}  (rotations {:>3} + observables {:>5} + head {:>4})",
        b.total(),
        b.rotations,
        b.observables,
        b.head
    );
}

fn main() {
    println!("banknote (n=4, L=4, d_out=2):");
    let pauli = CircuitConfig {
        scheme: SchemeKind::FixedPauliZ,
        k: None,
        ..sliding(4, 1, 2, true)
    };
    show("  fixed Pauli", &pauli);
    for k in 1..=3 {
        show(&format!("  {k}-local"), &sliding(4, k, 2, true));
        show(&format!("  {k}-local, no rotations"), &sliding(4, k, 2, false));
    }

    println!("mnist sliding (n=16, L=4, d_out=10):");
    for k in 1..=5 {
        show(&format!("  {k}-local"), &sliding(16, k, 10, true));
    }

    println!("mnist pairwise (no rotations, linear head to 10):");
    show("  6 qubits", &pairwise(vec![1, 4, 7, 10, 13, 16]));
    show("  8 qubits", &pairwise(vec![1, 3, 5, 7, 9, 11, 13, 15]));
    show("  16 qubits (all)", &pairwise((1..=16).collect()));
}

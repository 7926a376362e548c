//! Statevector simulation and training for variational quantum circuits with
//! adaptive (trainable) k-local Hermitian observables.
//!
//! Instead of measuring a fixed Pauli operator, every measurement group of a
//! circuit carries its own K^2-parameter Hermitian observable that is trained
//! jointly with the circuit's rotation angles. Two grouping schemes are
//! provided: cyclic sliding k-qubit windows and pairwise combinatorial
//! measurements over a chosen qubit subset with a linear head.
//!
//! ## Crate tour
//!
//! - [`statevec`] — dense statevector and gate kernels (qubit 1 = most
//!   significant bit).
//! - [`observables`] — the phi <-> Hermitian-matrix isomorphism, reduced
//!   density matrices, expectations, spectra and Rayleigh bounds.
//! - [`circuit`] — encoding, variational layers, measurement schemes, output
//!   heads and exact parameter counting.
//! - [`autodiff`] — exact gradients: parameter-shift and adjoint backends for
//!   rotation angles, closed-form gradients for observable parameters, plus a
//!   finite-difference oracle.
//! - [`train`] — losses, Adam/SGD, the training loop, metrics and
//!   checkpoints.
//! - [`data`] — banknote CSV and MNIST IDX loaders, block-mean resizing,
//!   standardization and seeded splits.
//! - [`dense`] — slow, obviously-correct dense Kronecker reference
//!   implementations used to cross-check every fast kernel.
//! - [`config`] / [`cli`] — run configuration (TOML + dotted overrides) and
//!   the `ano` command-line tool.
//!
//! Each major capability has a runnable example under `examples/`; start with
//! `cargo run --release --example closed_form`.

pub mod autodiff;
pub mod circuit;
pub mod cli;
pub mod config;
pub mod data;
pub mod dense;
pub mod error;
pub mod observables;
pub mod statevec;
pub mod train;

pub use error::{Error, Result};

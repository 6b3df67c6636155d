//! Dense state-vector simulation of qudit chains and gate synthesis for
//! the quantum Potts chain.
//!
//! Layers, bottom up:
//!
//! - [`linalg`]: dense complex operators, state vectors, local gate
//!   application, Hermitian exponentials and phase-insensitive distances.
//! - [`gates`]: closed-form clock, shift, Fourier, two-level rotation,
//!   light-shift and Mølmer-Sørensen matrices.
//! - [`synth`]: circuits, Givens decomposition and the mixer / LS /
//!   MS-with-ancilla synthesis routines.
//! - [`model`]: Potts chain Hamiltonian and exact spectral evolution.
//! - [`trotter`]: first- and second-order Trotter step circuits and evolution.
//! - [`observables`]: Loschmidt echo, rate function, infidelity series.
//! - [`cli`]: the `dqpt`, `verify` and `scaling` experiment drivers.

pub mod cli;
pub mod error;
pub mod gates;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod synth;
pub mod trotter;

pub use error::{Error, Result};
pub use linalg::{
    apply_local, hermitian_expm, kron, phase_aligned_distance, state_fidelity, DenseOperator,
    StateVector, C64,
};

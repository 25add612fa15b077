//! Exact few-qubit simulation.
//!
//! Qubit `0` is the most significant bit of a basis index, so the tensor
//! product `a ⊗ b` places `a`'s qubits first. Operators acting on a subset
//! of qubits take their targets in the same order: `targets[0]` is the most
//! significant bit of the operator's local index.

mod gates;
mod povm;
mod range;
mod register;
mod state;

pub use gates::{bell_ket, check_unitary, cnot, hadamard, identity, pauli_x, pauli_z, BellState};
pub use povm::{apply_povm, PovmElementSet, PovmOutcome};
pub use range::{classify_two_qubit_range, RangeClass};
pub use state::{build_pms, DensityMatrix, KetState};

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Complex scalar used throughout the simulator.
pub type C64 = Complex64;
/// Dense complex matrix.
pub type CMatrix = DMatrix<C64>;

/// Largest register the dense simulator accepts (4096 × 4096 density matrix).
pub const MAX_QUBITS: usize = 10;
/// Hermiticity and trace tolerance for normalized states.
pub const STATE_TOL: f64 = 1e-12;
/// Minimum eigenvalue accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-10;
/// Completeness tolerance for POVMs.
pub const POVM_TOL: f64 = 1e-10;
/// Branches at or below this probability are not renormalized.
pub const ZERO_PROB: f64 = 1e-12;

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

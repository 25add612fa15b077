use std::f64::consts::FRAC_1_SQRT_2;

use super::{c, CMatrix, KetState, C64};
use crate::error::{Error, Result};

/// Bell basis in the labelling used by the swapping formulas:
/// the `Psi` states have even parity, the `Phi` states odd parity.
///
/// * `PsiPlus  = (|00⟩ + |11⟩)/√2`
/// * `PsiMinus = (|00⟩ − |11⟩)/√2`
/// * `PhiPlus  = (|01⟩ + |10⟩)/√2`
/// * `PhiMinus = (|01⟩ − |10⟩)/√2`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum BellState {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PsiPlus,
        BellState::PsiMinus,
        BellState::PhiPlus,
        BellState::PhiMinus,
    ];

    /// Two-bit code: high bit = odd parity, low bit = minus sign.
    pub fn code(self) -> u8 {
        match self {
            BellState::PsiPlus => 0,
            BellState::PsiMinus => 1,
            BellState::PhiPlus => 2,
            BellState::PhiMinus => 3,
        }
    }

    pub fn from_code(code: u8) -> Self {
        Self::ALL[(code & 3) as usize]
    }

    pub fn is_even(self) -> bool {
        matches!(self, BellState::PsiPlus | BellState::PsiMinus)
    }

    pub fn is_minus(self) -> bool {
        matches!(self, BellState::PsiMinus | BellState::PhiMinus)
    }
}

/// Amplitudes of a Bell state as a 2-qubit ket.
pub fn bell_ket(which: BellState) -> KetState {
    let h = FRAC_1_SQRT_2;
    let sign = if which.is_minus() { -h } else { h };
    let amps = if which.is_even() {
        [h, 0.0, 0.0, sign]
    } else {
        [0.0, h, sign, 0.0]
    };
    KetState::from_real(&amps).expect("Bell states are normalized")
}

pub fn identity(num_qubits: usize) -> CMatrix {
    CMatrix::identity(1 << num_qubits, 1 << num_qubits)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
}

pub fn hadamard() -> CMatrix {
    let h = FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(h), c(h), c(h), c(-h)])
}

/// CNOT with the first target as control.
pub fn cnot() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = c(1.0);
    m[(1, 1)] = c(1.0);
    m[(2, 3)] = c(1.0);
    m[(3, 2)] = c(1.0);
    m
}

/// Fails unless `u†u = I` elementwise within `tol`.
pub fn check_unitary(u: &CMatrix, tol: f64) -> Result<()> {
    if u.nrows() != u.ncols() || !u.nrows().is_power_of_two() {
        return Err(Error::DimensionMismatch(format!(
            "gate is {}x{}",
            u.nrows(),
            u.ncols()
        )));
    }
    let prod = u.adjoint() * u;
    let n = u.nrows();
    let deviation = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| {
            let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            (prod[(i, j)] - target).norm()
        })
        .fold(0.0, f64::max);
    if deviation > tol {
        Err(Error::NonUnitary { deviation })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_gates_are_unitary() {
        for g in [pauli_x(), pauli_z(), hadamard(), cnot(), identity(3)] {
            check_unitary(&g, 1e-14).unwrap();
        }
    }

    #[test]
    fn non_unitary_rejected() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)]);
        assert!(matches!(check_unitary(&m, 1e-12), Err(Error::NonUnitary { .. })));
    }

    #[test]
    fn bell_code_round_trip() {
        for b in BellState::ALL {
            assert_eq!(BellState::from_code(b.code()), b);
        }
    }
}

use super::{DensityMatrix, C64};
use crate::error::{Error, Result};

/// Product-state structure of the range of a two-qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum RangeClass {
    /// Rank-2 range whose every vector pencil member is a product state, up
    /// to scale, e.g. a mixture of product states sharing a factor.
    InfinitelyManyProductStates,
    TwoProductStates,
    /// The only mixed class from which a perfect singlet can be distilled.
    OneProductState,
    PureState,
    /// Rank 3 or 4: always spanned by product states.
    RankAboveTwo,
}

/// Eigenvalues at or below this are outside the range.
const RANK_TOL: f64 = 1e-10;
/// Quadratic-form coefficients below this are treated as identically zero.
const ZERO_FORM_TOL: f64 = 1e-9;
/// Relative discriminant threshold for a double root.
const DOUBLE_ROOT_TOL: f64 = 1e-9;

/// Counts the product states in the range of a two-qubit state.
///
/// For rank 2 each range basis vector `vᵢ` is reshaped into a 2×2 coefficient
/// matrix `Mᵢ`; `a v₁ + b v₂` is a product state iff `det(a M₁ + b M₂) = 0`.
/// The number of projective roots of that binary quadratic form decides the
/// class.
pub fn classify_two_qubit_range(state: &DensityMatrix) -> Result<RangeClass> {
    if state.num_qubits() != 2 {
        return Err(Error::WrongQubitCount {
            expected: 2,
            found: state.num_qubits(),
        });
    }
    let (values, vectors) = state.eigen();
    let scale = values[0].max(f64::MIN_POSITIVE);
    let rank = values.iter().filter(|&&v| v > RANK_TOL * scale.max(1.0)).count();
    match rank {
        0 | 1 => Ok(RangeClass::PureState),
        2 => {
            let m1 = reshape(vectors[0].as_slice());
            let m2 = reshape(vectors[1].as_slice());
            Ok(classify_pencil(&m1, &m2))
        }
        _ => Ok(RangeClass::RankAboveTwo),
    }
}

fn reshape(v: &[C64]) -> [[C64; 2]; 2] {
    [[v[0], v[1]], [v[2], v[3]]]
}

fn det(m: &[[C64; 2]; 2]) -> C64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Classifies the roots of `det(a M₁ + b M₂) = c₂a² + c₁ab + c₀b²`.
fn classify_pencil(m1: &[[C64; 2]; 2], m2: &[[C64; 2]; 2]) -> RangeClass {
    let c2 = det(m1);
    let c0 = det(m2);
    let c1 = m1[0][0] * m2[1][1] + m2[0][0] * m1[1][1] - m1[0][1] * m2[1][0] - m2[0][1] * m1[1][0];
    let coeff_scale = c2.norm().max(c1.norm()).max(c0.norm());
    if coeff_scale < ZERO_FORM_TOL {
        return RangeClass::InfinitelyManyProductStates;
    }
    let disc = c1 * c1 - c2 * c0 * 4.0;
    if disc.norm() < DOUBLE_ROOT_TOL * coeff_scale * coeff_scale {
        RangeClass::OneProductState
    } else {
        RangeClass::TwoProductStates
    }
}

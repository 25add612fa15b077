use nalgebra::linalg::SymmetricEigen;

use super::register::Embedding;
use super::{c, CMatrix, DensityMatrix, KetState, POVM_TOL, PSD_TOL, ZERO_PROB};
use crate::error::{Error, Result};

/// A complete set of positive operators on a `num_qubits`-qubit subsystem.
///
/// Each element carries its Kraus operator, the principal square root of the
/// element, which is what the measurement update applies.
#[derive(Debug, Clone)]
pub struct PovmElementSet {
    num_qubits: usize,
    elements: Vec<CMatrix>,
    kraus: Vec<CMatrix>,
    labels: Vec<String>,
}

/// One branch of a measurement.
#[derive(Debug, Clone)]
pub struct PovmOutcome {
    pub label: String,
    pub probability: f64,
    /// Renormalized post-measurement state when `normalized`; otherwise the
    /// sub-normalized branch `K ρ K†`.
    pub state: DensityMatrix,
    pub normalized: bool,
}

impl PovmElementSet {
    /// Validates positivity of each element and completeness `Σ E = I`.
    pub fn new(elements: Vec<CMatrix>, labels: Vec<String>) -> Result<Self> {
        if elements.is_empty() || elements.len() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} elements, {} labels",
                elements.len(),
                labels.len()
            )));
        }
        let dim = elements[0].nrows();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::DimensionMismatch(format!("element dimension {dim}")));
        }
        let mut sum = CMatrix::zeros(dim, dim);
        let mut kraus = Vec::with_capacity(elements.len());
        for (e, label) in elements.iter().zip(&labels) {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "element `{label}` is {}x{}",
                    e.nrows(),
                    e.ncols()
                )));
            }
            let (root, min_eigenvalue) = principal_sqrt(e);
            if min_eigenvalue < -PSD_TOL {
                return Err(Error::NotPositive {
                    label: label.clone(),
                    min_eigenvalue,
                });
            }
            kraus.push(root);
            sum += e;
        }
        let deviation = (&sum - CMatrix::identity(dim, dim))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if deviation > POVM_TOL {
            return Err(Error::IncompletePovm { deviation });
        }
        Ok(Self {
            num_qubits: dim.trailing_zeros() as usize,
            elements,
            kraus,
            labels,
        })
    }

    /// Projective measurement in the computational basis; labels are the
    /// bit strings of each outcome.
    pub fn computational(num_qubits: usize) -> Result<Self> {
        let dim = 1usize << num_qubits;
        let elements = (0..dim)
            .map(|i| {
                let mut m = CMatrix::zeros(dim, dim);
                m[(i, i)] = c(1.0);
                m
            })
            .collect();
        let labels = (0..dim)
            .map(|i| format!("{:0width$b}", i, width = num_qubits))
            .collect();
        Self::new(elements, labels)
    }

    /// Projective measurement onto orthonormal kets.
    pub fn from_kets(kets: &[KetState], labels: Vec<String>) -> Result<Self> {
        let elements = kets.iter().map(|k| k.to_density().entries().clone()).collect();
        Self::new(elements, labels)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }
}

/// Principal square root of a Hermitian matrix together with its minimum
/// eigenvalue. Diagonal inputs are handled exactly.
fn principal_sqrt(m: &CMatrix) -> (CMatrix, f64) {
    let n = m.nrows();
    let off_diagonal = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .any(|(i, j)| i != j && m[(i, j)].norm() > 0.0);
    if !off_diagonal {
        let mut root = CMatrix::zeros(n, n);
        let mut min = f64::INFINITY;
        for i in 0..n {
            let v = m[(i, i)].re;
            min = min.min(v);
            root[(i, i)] = c(v.max(0.0).sqrt());
        }
        return (root, min);
    }
    let herm = (m + m.adjoint()) * c(0.5);
    let eig = SymmetricEigen::new(herm);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let mut scaled = eig.eigenvectors.clone();
    for (j, &v) in eig.eigenvalues.iter().enumerate() {
        let s = c(v.max(0.0).sqrt());
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= s);
    }
    (&scaled * eig.eigenvectors.adjoint(), min)
}

/// Measures `povm` on `targets` of `state`.
///
/// Probabilities are `tr(E ρ)`; post-states use the Kraus update
/// `√E ρ √E` and are renormalized when the probability exceeds 1e-12.
pub fn apply_povm(
    state: &DensityMatrix,
    povm: &PovmElementSet,
    targets: &[usize],
) -> Result<Vec<PovmOutcome>> {
    if targets.len() != povm.num_qubits {
        return Err(Error::WrongQubitCount {
            expected: povm.num_qubits,
            found: targets.len(),
        });
    }
    Embedding::new(state.num_qubits(), targets)?;
    let mut outcomes = Vec::with_capacity(povm.len());
    for (k, label) in povm.kraus.iter().zip(&povm.labels) {
        let mut post = state.clone();
        post.conjugate_in_place(k, targets)?;
        let probability = post.trace().max(0.0);
        let normalized = probability > ZERO_PROB;
        let state = if normalized {
            post.scaled(1.0 / probability)
        } else {
            post
        };
        outcomes.push(PovmOutcome {
            label: label.clone(),
            probability,
            state,
            normalized,
        });
    }
    Ok(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::build_pms;

    #[test]
    fn computational_basis_on_product() {
        let rho = DensityMatrix::basis_state(2, 0).unwrap();
        let povm = PovmElementSet::computational(2).unwrap();
        let out = apply_povm(&rho, &povm, &[0, 1]).unwrap();
        assert_eq!(out[0].label, "00");
        assert!((out[0].probability - 1.0).abs() < 1e-15);
        assert!(out[1..].iter().all(|o| o.probability == 0.0 && !o.normalized));
    }

    #[test]
    fn uniform_povm_leaves_state_unchanged() {
        let half = CMatrix::identity(2, 2) * c(0.5);
        let povm = PovmElementSet::new(vec![half.clone(), half], vec!["a".into(), "b".into()]).unwrap();
        let rho = build_pms(0.7, 0.1, 0.8).unwrap();
        for target in [0, 1] {
            let out = apply_povm(&rho, &povm, &[target]).unwrap();
            for o in out {
                assert!((o.probability - 0.5).abs() < 1e-15);
                assert!(o.state.max_abs_diff(&rho) < 1e-14);
            }
        }
    }

    #[test]
    fn incomplete_povm_rejected() {
        let half = CMatrix::identity(2, 2) * c(0.5);
        let err = PovmElementSet::new(vec![half], vec!["a".into()]).unwrap_err();
        assert!(matches!(err, Error::IncompletePovm { .. }));
    }

    #[test]
    fn negative_element_rejected() {
        let mut e1 = CMatrix::identity(2, 2);
        e1[(0, 0)] = c(1.5);
        let mut e2 = CMatrix::zeros(2, 2);
        e2[(0, 0)] = c(-0.5);
        let err = PovmElementSet::new(vec![e1, e2], vec!["a".into(), "b".into()]).unwrap_err();
        assert!(matches!(err, Error::NotPositive { .. }));
    }

    #[test]
    fn sqrt_of_non_diagonal_element() {
        // |+⟩⟨+| and |−⟩⟨−| are their own square roots
        let plus = KetState::from_real(&[std::f64::consts::FRAC_1_SQRT_2; 2]).unwrap();
        let minus = KetState::from_real(&[std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2]).unwrap();
        let povm = PovmElementSet::from_kets(&[plus, minus], vec!["+".into(), "-".into()]).unwrap();
        for (e, k) in povm.elements().iter().zip(povm.kraus()) {
            let diff = (e - k).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-14);
        }
    }

    #[test]
    fn target_count_must_match() {
        let rho = DensityMatrix::basis_state(2, 0).unwrap();
        let povm = PovmElementSet::computational(1).unwrap();
        assert!(apply_povm(&rho, &povm, &[0, 1]).is_err());
    }
}

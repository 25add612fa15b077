use nalgebra::{linalg::SymmetricEigen, DVector};

use super::register::{apply_to_vector, check_num_qubits, left_apply, right_apply_adjoint, Embedding};
use super::{c, check_unitary, BellState, CMatrix, C64, PSD_TOL, STATE_TOL, ZERO_PROB};
use crate::error::{check_probability, Error, Result};

/// Pure state of `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct KetState {
    num_qubits: usize,
    amplitudes: Vec<C64>,
}

impl KetState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::DimensionMismatch(format!("{len} amplitudes")));
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_num_qubits(num_qubits)?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::ParameterOutOfRange {
                name: "norm",
                value: norm,
                constraint: "|norm - 1| <= 1e-12",
            });
        }
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&a| c(a)).collect())
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_num_qubits(num_qubits)?;
        let mut amplitudes = vec![c(0.0); 1 << num_qubits];
        *amplitudes.get_mut(index).ok_or_else(|| {
            Error::DimensionMismatch(format!("basis index {index} for {num_qubits} qubits"))
        })? = c(1.0);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// `√α|00⟩ + √(1−α)|11⟩`.
    pub fn schmidt(alpha: f64) -> Result<Self> {
        check_probability("alpha", alpha)?;
        Self::from_real(&[alpha.sqrt(), 0.0, 0.0, (1.0 - alpha).sqrt()])
    }

    pub fn bell(which: BellState) -> Self {
        super::bell_ket(which)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn tensor(&self, other: &KetState) -> Result<Self> {
        check_num_qubits(self.num_qubits + other.num_qubits)?;
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        Ok(Self {
            num_qubits: self.num_qubits + other.num_qubits,
            amplitudes,
        })
    }

    pub fn apply_gate(&mut self, gate: &CMatrix, targets: &[usize]) -> Result<()> {
        check_unitary(gate, STATE_TOL)?;
        let emb = Embedding::new(self.num_qubits, targets)?;
        if gate.nrows() != emb.local_dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}-dim gate on {} targets",
                gate.nrows(),
                targets.len()
            )));
        }
        apply_to_vector(&mut self.amplitudes, gate, &emb);
        Ok(())
    }

    /// Projects `targets` onto the computational basis value `outcome`
    /// (targets[0] is the most significant bit), renormalizes, and returns
    /// the branch probability.
    pub fn project(&mut self, targets: &[usize], outcome: usize) -> Result<f64> {
        let emb = Embedding::new(self.num_qubits, targets)?;
        if outcome >= emb.local_dim() {
            return Err(Error::DimensionMismatch(format!(
                "outcome {outcome} on {} qubits",
                targets.len()
            )));
        }
        let mut prob = 0.0;
        for &base in &emb.bases {
            for (l, &off) in emb.offsets.iter().enumerate() {
                let idx = base | off;
                if l == outcome {
                    prob += self.amplitudes[idx].norm_sqr();
                } else {
                    self.amplitudes[idx] = c(0.0);
                }
            }
        }
        if prob <= ZERO_PROB {
            return Err(Error::ZeroProbability(format!(
                "outcome {outcome} on qubits {targets:?}"
            )));
        }
        let scale = 1.0 / prob.sqrt();
        self.amplitudes.iter_mut().for_each(|a| *a *= scale);
        Ok(prob)
    }

    /// Projects two qubits onto a Bell state, renormalizes, returns the probability.
    pub fn project_bell(&mut self, q1: usize, q2: usize, which: BellState) -> Result<f64> {
        let emb = Embedding::new(self.num_qubits, &[q1, q2])?;
        let bell = super::bell_ket(which);
        let b = bell.amplitudes();
        let mut prob = 0.0;
        for &base in &emb.bases {
            let overlap: C64 = (0..4)
                .map(|l| b[l].conj() * self.amplitudes[base | emb.offsets[l]])
                .sum();
            for (bl, &off) in b.iter().zip(&emb.offsets) {
                self.amplitudes[base | off] = bl * overlap;
            }
            prob += overlap.norm_sqr();
        }
        if prob <= ZERO_PROB {
            return Err(Error::ZeroProbability(format!(
                "Bell outcome {which:?} on qubits ({q1}, {q2})"
            )));
        }
        let scale = 1.0 / prob.sqrt();
        self.amplitudes.iter_mut().for_each(|a| *a *= scale);
        Ok(prob)
    }

    pub fn to_density(&self) -> DensityMatrix {
        let v = DVector::from_column_slice(&self.amplitudes);
        DensityMatrix {
            num_qubits: self.num_qubits,
            entries: &v * v.adjoint(),
        }
    }
}

/// Dense density operator on at most [`super::MAX_QUBITS`] qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    entries: CMatrix,
}

impl DensityMatrix {
    /// Builds a density matrix and checks Hermiticity, unit trace and
    /// positivity.
    pub fn from_matrix(entries: CMatrix) -> Result<Self> {
        let state = Self::from_matrix_unchecked(entries)?;
        state.validate()?;
        Ok(state)
    }

    /// Only the shape is checked; used for sub-normalized branches.
    pub fn from_matrix_unchecked(entries: CMatrix) -> Result<Self> {
        let n = entries.nrows();
        if n != entries.ncols() || n < 2 || !n.is_power_of_two() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} density matrix",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let num_qubits = n.trailing_zeros() as usize;
        check_num_qubits(num_qubits)?;
        Ok(Self {
            num_qubits,
            entries,
        })
    }

    pub fn basis_state(num_qubits: usize, index: usize) -> Result<Self> {
        Ok(KetState::basis(num_qubits, index)?.to_density())
    }

    pub fn maximally_mixed(num_qubits: usize) -> Result<Self> {
        check_num_qubits(num_qubits)?;
        let dim = 1 << num_qubits;
        Ok(Self {
            num_qubits,
            entries: CMatrix::identity(dim, dim) * c(1.0 / dim as f64),
        })
    }

    /// Convex combination `Σ wᵢ ρᵢ`; weights must be non-negative.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::DimensionMismatch("empty mixture".into()))?;
        let mut entries = CMatrix::zeros(first.1.dim(), first.1.dim());
        for (w, rho) in parts {
            if rho.num_qubits != first.1.num_qubits {
                return Err(Error::DimensionMismatch("mixture of different sizes".into()));
            }
            check_probability("weight", *w)?;
            entries += &rho.entries * c(*w);
        }
        Self::from_matrix(entries)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// Eigenvalues in descending order with matching eigenvectors.
    /// Eigenvalues in `(−PSD_TOL, 0)` are clamped to zero.
    pub fn eigen(&self) -> (Vec<f64>, Vec<DVector<C64>>) {
        let herm = (&self.entries + self.entries.adjoint()) * c(0.5);
        let eig = SymmetricEigen::new(herm);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order
            .iter()
            .map(|&i| {
                let v = eig.eigenvalues[i];
                if v < 0.0 && v > -PSD_TOL {
                    0.0
                } else {
                    v
                }
            })
            .collect();
        let vectors = order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect();
        (values, vectors)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.entries + self.entries.adjoint()) * c(0.5);
        SymmetricEigen::new(herm)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Hermitian within 1e-12, trace 1 within 1e-12, min eigenvalue ≥ −1e-10.
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_deviation();
        if herm > STATE_TOL {
            return Err(Error::ParameterOutOfRange {
                name: "hermiticity deviation",
                value: herm,
                constraint: "<= 1e-12",
            });
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::ParameterOutOfRange {
                name: "trace",
                value: tr,
                constraint: "|trace - 1| <= 1e-12",
            });
        }
        let min = self.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::ParameterOutOfRange {
                name: "minimum eigenvalue",
                value: min,
                constraint: ">= -1e-10",
            });
        }
        Ok(())
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<Self> {
        check_num_qubits(self.num_qubits + other.num_qubits)?;
        Ok(Self {
            num_qubits: self.num_qubits + other.num_qubits,
            entries: self.entries.kronecker(&other.entries),
        })
    }

    /// Conjugation by a unitary embedded on `targets`.
    pub fn apply_gate(&self, gate: &CMatrix, targets: &[usize]) -> Result<Self> {
        check_unitary(gate, STATE_TOL)?;
        let mut out = self.clone();
        out.conjugate_in_place(gate, targets)?;
        Ok(out)
    }

    /// `ρ ← K ρ K†` for an arbitrary operator `K` on `targets`.
    pub(crate) fn conjugate_in_place(&mut self, op: &CMatrix, targets: &[usize]) -> Result<()> {
        let emb = Embedding::new(self.num_qubits, targets)?;
        if op.nrows() != emb.local_dim() || op.ncols() != emb.local_dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} operator on {} targets",
                op.nrows(),
                op.ncols(),
                targets.len()
            )));
        }
        left_apply(&mut self.entries, op, &emb);
        right_apply_adjoint(&mut self.entries, op, &emb);
        Ok(())
    }

    /// Reduced state on `keep`; the kept qubits are reordered as listed.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let emb = Embedding::new(self.num_qubits, keep)?;
        let d = emb.local_dim();
        let mut out = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] = emb
                    .bases
                    .iter()
                    .map(|&b| self.entries[(b | emb.offsets[i], b | emb.offsets[j])])
                    .sum();
            }
        }
        Ok(Self {
            num_qubits: keep.len(),
            entries: out,
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            num_qubits: self.num_qubits,
            entries: &self.entries * c(factor),
        }
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, ket: &KetState) -> Result<f64> {
        if ket.num_qubits() != self.num_qubits {
            return Err(Error::WrongQubitCount {
                expected: self.num_qubits,
                found: ket.num_qubits(),
            });
        }
        let v = DVector::from_column_slice(ket.amplitudes());
        Ok((v.adjoint() * &self.entries * &v)[(0, 0)].re)
    }

    /// Largest overlap with one of the four Bell states.
    pub fn singlet_fidelity(&self) -> Result<f64> {
        if self.num_qubits != 2 {
            return Err(Error::WrongQubitCount {
                expected: 2,
                found: self.num_qubits,
            });
        }
        let mut best: f64 = 0.0;
        for b in BellState::ALL {
            best = best.max(self.expectation(&super::bell_ket(b))?);
        }
        Ok(best.clamp(0.0, 1.0))
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        if self.num_qubits != other.num_qubits {
            return f64::INFINITY;
        }
        (&self.entries - &other.entries)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// `ρ(α, γ, λ) = λ|α,γ⟩⟨α,γ| + (1−λ)|01⟩⟨01|` with
/// `|α,γ⟩ = √α|00⟩ + √(1−α−γ)|11⟩ + √γ|01⟩`.
pub fn build_pms(alpha: f64, gamma: f64, lambda: f64) -> Result<DensityMatrix> {
    check_probability("alpha", alpha)?;
    check_probability("gamma", gamma)?;
    check_probability("lambda", lambda)?;
    if alpha + gamma > 1.0 + 1e-15 {
        return Err(Error::ParameterOutOfRange {
            name: "alpha + gamma",
            value: alpha + gamma,
            constraint: "alpha + gamma <= 1",
        });
    }
    let rest = (1.0 - alpha - gamma).max(0.0);
    let psi = DVector::from_column_slice(&[c(alpha.sqrt()), c(gamma.sqrt()), c(0.0), c(rest.sqrt())]);
    let mut entries = &psi * psi.adjoint() * c(lambda);
    entries[(1, 1)] += c(1.0 - lambda);
    DensityMatrix::from_matrix(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{cnot, identity};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn pms_pure_product_limit() {
        let rho = build_pms(1.0, 0.0, 1.0).unwrap();
        let expected = DensityMatrix::basis_state(2, 0).unwrap();
        assert!(rho.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn pms_pure_singlet_limit() {
        let rho = build_pms(0.5, 0.0, 1.0).unwrap();
        let expected = KetState::schmidt(0.5).unwrap().to_density();
        assert!(rho.max_abs_diff(&expected) < 1e-15);
        assert!(close(rho.singlet_fidelity().unwrap(), 1.0));
    }

    #[test]
    fn pms_half_mixture_eigensystem() {
        let rho = build_pms(0.5, 0.0, 0.5).unwrap();
        let (vals, vecs) = rho.eigen();
        assert!(close(vals[0], 0.5) && close(vals[1], 0.5));
        assert!(vals[2].abs() < 1e-12 && vals[3].abs() < 1e-12);
        // the two leading eigenvectors span {|1/2⟩, |01⟩}
        let half = KetState::schmidt(0.5).unwrap();
        let o1 = DensityMatrix::basis_state(2, 1).unwrap();
        let proj = (&vecs[0] * vecs[0].adjoint()) + (&vecs[1] * vecs[1].adjoint());
        let projector = DensityMatrix::from_matrix_unchecked(proj).unwrap();
        assert!(close(projector.expectation(&half).unwrap(), 1.0));
        assert!(close(projector.expectation(&KetState::basis(2, 1).unwrap()).unwrap(), 1.0));
        assert!(close(o1.trace(), 1.0));
    }

    #[test]
    fn pms_rejects_bad_parameters() {
        assert!(build_pms(0.7, 0.4, 0.5).is_err());
        assert!(build_pms(-0.1, 0.0, 0.5).is_err());
        assert!(build_pms(0.5, 0.0, 1.5).is_err());
    }

    #[test]
    fn identity_gate_is_noop() {
        let rho = build_pms(0.7, 0.1, 0.6).unwrap();
        let out = rho.apply_gate(&identity(2), &[0, 1]).unwrap();
        assert!(out.max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn cnot_is_an_involution() {
        let rho = build_pms(0.3, 0.2, 0.8).unwrap();
        let once = rho.apply_gate(&cnot(), &[0, 1]).unwrap();
        let twice = once.apply_gate(&cnot(), &[0, 1]).unwrap();
        assert!(twice.max_abs_diff(&rho) < 1e-14);
    }

    #[test]
    fn cnot_truth_table() {
        let ten = DensityMatrix::basis_state(2, 0b10).unwrap();
        let out = ten.apply_gate(&cnot(), &[0, 1]).unwrap();
        assert!(out.max_abs_diff(&DensityMatrix::basis_state(2, 0b11).unwrap()) < 1e-15);
        // reversed control
        let one = DensityMatrix::basis_state(2, 0b01).unwrap();
        let out = one.apply_gate(&cnot(), &[1, 0]).unwrap();
        assert!(out.max_abs_diff(&DensityMatrix::basis_state(2, 0b11).unwrap()) < 1e-15);
    }

    #[test]
    fn apply_gate_rejects_bad_targets() {
        let rho = DensityMatrix::basis_state(2, 0).unwrap();
        assert!(rho.apply_gate(&cnot(), &[0, 0]).is_err());
        assert!(rho.apply_gate(&cnot(), &[0, 2]).is_err());
        assert!(rho.apply_gate(&cnot(), &[0]).is_err());
    }

    #[test]
    fn partial_trace_of_product() {
        let rho = DensityMatrix::basis_state(2, 0).unwrap();
        let red = rho.partial_trace(&[1]).unwrap();
        assert!(red.max_abs_diff(&DensityMatrix::basis_state(1, 0).unwrap()) < 1e-15);
    }

    #[test]
    fn partial_trace_of_bell_is_maximally_mixed() {
        let rho = KetState::bell(BellState::PhiMinus).to_density();
        let red = rho.partial_trace(&[0]).unwrap();
        assert!(red.max_abs_diff(&DensityMatrix::maximally_mixed(1).unwrap()) < 1e-15);
    }

    #[test]
    fn w_class_trace_gives_state_family() {
        // √λ|Φ⟩|1⟩ + √(1−λ)|00⟩|0⟩ with |Φ⟩ = √α|01⟩ + √β|10⟩ + √γ|00⟩
        let (alpha, beta, gamma, lambda) : (f64, f64, f64, f64) = (0.45, 0.35, 0.2, 0.7);
        let mut amps = [0.0; 8];
        let (sl, sr) = (f64::sqrt(lambda), f64::sqrt(1.0 - lambda));
        amps[0b011] = sl * alpha.sqrt();
        amps[0b101] = sl * beta.sqrt();
        amps[0b001] = sl * gamma.sqrt();
        amps[0b000] = sr;
        let rho = KetState::from_real(&amps).unwrap().to_density();
        let red = rho.partial_trace(&[0, 1]).unwrap();
        // local relabeling: bit flip on the second qubit
        let relabeled = red.apply_gate(&crate::quantum::pauli_x(), &[1]).unwrap();
        let expected = build_pms(alpha, gamma, lambda).unwrap();
        assert!(relabeled.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn singlet_fidelity_of_product_is_half() {
        let rho = DensityMatrix::basis_state(2, 0).unwrap();
        assert!(close(rho.singlet_fidelity().unwrap(), 0.5));
        assert!(DensityMatrix::basis_state(1, 0).unwrap().singlet_fidelity().is_err());
    }

    #[test]
    fn singlet_fidelity_of_noisy_singlet() {
        // Bell overlaps of ρ(1/2,0,λ): Ψ+ gets λ, Φ± get (1−λ)/2, Ψ− gets 0.
        for lambda in [0.0, 0.2, 1.0 / 3.0, 0.5, 0.9] {
            let rho = build_pms(0.5, 0.0, lambda).unwrap();
            let f = rho.singlet_fidelity().unwrap();
            let expected = f64::max(lambda, (1.0 - lambda) / 2.0);
            assert!(close(f, expected), "λ={lambda}: {f} vs {expected}");
        }
    }

    #[test]
    fn ket_projection_probability() {
        let mut k = KetState::schmidt(0.3).unwrap();
        let p = k.project(&[0], 1).unwrap();
        assert!(close(p, 0.7));
        assert!(k.project(&[1], 0).is_err());
    }

    #[test]
    fn qubit_cap_enforced() {
        let one = DensityMatrix::basis_state(5, 0).unwrap();
        let big = DensityMatrix::basis_state(6, 0).unwrap();
        assert!(matches!(
            one.tensor(&big),
            Err(Error::QubitCapExceeded { requested: 11, cap: 10 })
        ));
    }
}

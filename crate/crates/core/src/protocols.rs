//! Closed forms for the elementary two-edge protocols.
//!
//! Every function here has an oracle test that replays the protocol on the
//! density-matrix simulator in [`crate::quantum`].

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::quantum::{build_pms, BellState, DensityMatrix, KetState};

/// Parameters of `ρ(α,γ,λ) = λ|α,γ⟩⟨α,γ| + (1−λ)|01⟩⟨01|` with
/// `|α,γ⟩ = √α|00⟩ + √γ|01⟩ + √(1−α−γ)|11⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pms {
    pub alpha: f64,
    pub gamma: f64,
    pub lambda: f64,
}

impl Pms {
    pub fn new(alpha: f64, gamma: f64, lambda: f64) -> Result<Self> {
        check_probability("alpha", alpha)?;
        check_probability("gamma", gamma)?;
        check_probability("lambda", lambda)?;
        if alpha + gamma > 1.0 + 1e-12 {
            return Err(Error::ParameterOutOfRange {
                name: "alpha + gamma",
                value: alpha + gamma,
                constraint: "alpha + gamma <= 1",
            });
        }
        Ok(Self { alpha, gamma, lambda })
    }

    /// Purifiable mixed state `ρ(α,λ) = ρ(α,0,λ)`.
    pub fn purifiable(alpha: f64, lambda: f64) -> Result<Self> {
        Self::new(alpha, 0.0, lambda)
    }

    /// Weight `1−α−γ` of `|11⟩` in the pure part.
    pub fn weight_11(&self) -> f64 {
        (1.0 - self.alpha - self.gamma).max(0.0)
    }

    pub fn is_purifiable(&self) -> bool {
        self.gamma == 0.0
    }

    pub fn density(&self) -> DensityMatrix {
        build_pms(self.alpha, self.gamma, self.lambda).expect("Pms fields are validated")
    }
}

/// Pure state `√α|00⟩ + √(1−α)|11⟩`, stored with its raw weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureSchmidt {
    pub alpha: f64,
}

impl PureSchmidt {
    pub fn new(alpha: f64) -> Result<Self> {
        check_probability("alpha", alpha)?;
        Ok(Self { alpha })
    }

    pub const SINGLET: PureSchmidt = PureSchmidt { alpha: 0.5 };

    /// Same state up to a local bit flip, with `alpha ≥ 1/2`.
    pub fn canonicalize(self) -> Self {
        Self {
            alpha: self.alpha.max(1.0 - self.alpha),
        }
    }

    pub fn is_singlet(&self, tol: f64) -> bool {
        (self.alpha - 0.5).abs() <= tol
    }

    pub fn ket(&self) -> KetState {
        KetState::schmidt(self.alpha).expect("alpha is validated")
    }
}

/// Result of a PCM on two edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcmOutcome {
    pub success_prob: f64,
    /// `None` when the success branch has zero weight.
    pub result: Option<PureSchmidt>,
}

/// Post-measurement state of one swap outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwapResult {
    Pms(Pms),
    Unusable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapOutcome {
    pub label: BellState,
    pub probability: f64,
    pub result: SwapResult,
}

/// Pure-state conversion measurement: CNOTs from the first edge onto the
/// second at both nodes, then post-selection of the second edge on `|11⟩`.
pub fn pcm(state1: &Pms, state2: &Pms) -> PcmOutcome {
    let x = state1.alpha * state2.weight_11();
    let y = state2.alpha * state1.weight_11();
    let sum = x + y;
    if sum <= 0.0 {
        return PcmOutcome {
            success_prob: 0.0,
            result: None,
        };
    }
    PcmOutcome {
        success_prob: (state1.lambda * state2.lambda * sum).clamp(0.0, 1.0),
        result: Some(PureSchmidt { alpha: x.min(y) / sum }),
    }
}

/// Probability that the Procrustean filter turns `state` into a singlet.
pub fn procrustean_prob(state: &PureSchmidt) -> f64 {
    2.0 * state.alpha.min(1.0 - state.alpha)
}

/// Singlet conversion probability of PCM followed by Procrustean filtering.
pub fn scp_pair(state1: &Pms, state2: &Pms) -> f64 {
    let x = state1.alpha * state2.weight_11();
    let y = state2.alpha * state1.weight_11();
    2.0 * state1.lambda * state2.lambda * x.min(y)
}

fn h_sign(s1: &Pms, s2: &Pms, sign: f64) -> (f64, f64) {
    let cross = ((s1.alpha * s2.gamma).sqrt() + sign * (s1.gamma * s2.weight_11()).sqrt()).powi(2);
    (s1.alpha * s2.alpha + s1.weight_11() * s2.weight_11() + cross, cross)
}

fn g_sign(s1: &Pms, s2: &Pms, sign: f64) -> f64 {
    let cross = ((s1.gamma * s2.gamma).sqrt() + sign * (s1.alpha * s2.weight_11()).sqrt()).powi(2);
    s1.gamma * s2.alpha + s1.weight_11() * s2.gamma + s1.weight_11() * s2.alpha + cross
}

/// Bell measurement on the middle node of two edges.
///
/// `Psi` outcomes keep the state family after a local `Z` correction for
/// `PsiMinus` (on the far qubit when `√(αδ) < √(γ(1−β−δ))`, otherwise on the
/// near one); `Phi` outcomes are returned as [`SwapResult::Unusable`].
pub fn swap_pms(state1: &Pms, state2: &Pms) -> [SwapOutcome; 4] {
    let (l, n) = (state1.lambda, state2.lambda);
    let psi = |which: BellState, sign: f64| {
        let (h, cross) = h_sign(state1, state2, sign);
        let p = 0.5 * (h * l * n + state2.weight_11() * (1.0 - l) * n + state1.alpha * l * (1.0 - n));
        let result = if p > 0.0 && h > 0.0 {
            let alpha = state1.alpha * state2.alpha / h;
            let gamma = (cross / h).min(1.0 - alpha).max(0.0);
            SwapResult::Pms(Pms {
                alpha,
                gamma,
                lambda: (l * n * h / (2.0 * p)).min(1.0),
            })
        } else {
            SwapResult::Unusable
        };
        SwapOutcome {
            label: which,
            probability: p,
            result,
        }
    };
    let phi = |which: BellState, sign: f64| {
        let g = g_sign(state1, state2, sign);
        let p = 0.5 * (g * l * n + (1.0 - n) * (1.0 - state1.alpha * l) + (state2.alpha + state2.gamma) * (1.0 - l) * n);
        SwapOutcome {
            label: which,
            probability: p,
            result: SwapResult::Unusable,
        }
    };
    [
        psi(BellState::PsiPlus, 1.0),
        psi(BellState::PsiMinus, -1.0),
        phi(BellState::PhiPlus, 1.0),
        phi(BellState::PhiMinus, -1.0),
    ]
}

/// Swap of two purifiable edges with the `Phi` outcomes replaced by `|01⟩`,
/// giving `ρ(αβ/h, 0, λνh)` with `h = αβ + (1−α)(1−β)`.
pub fn swap_pms_special(state1: &Pms, state2: &Pms) -> Result<Pms> {
    for s in [state1, state2] {
        if s.gamma != 0.0 {
            return Err(Error::ParameterOutOfRange {
                name: "gamma",
                value: s.gamma,
                constraint: "gamma = 0 for the special swap",
            });
        }
    }
    let h = state1.alpha * state2.alpha + (1.0 - state1.alpha) * (1.0 - state2.alpha);
    if h <= 0.0 {
        // |00⟩ against |11⟩: no overlap survives, only the |01⟩ component
        return Ok(Pms {
            alpha: 0.0,
            gamma: 0.0,
            lambda: 0.0,
        });
    }
    Ok(Pms {
        alpha: state1.alpha * state2.alpha / h,
        gamma: 0.0,
        lambda: state1.lambda * state2.lambda * h,
    })
}

/// Pure-state swap: each Bell outcome with its probability and the
/// canonical (`α̃ ≥ 1/2`) Schmidt weight. Zero-probability outcomes are
/// omitted.
pub fn swap_pure(state1: &PureSchmidt, state2: &PureSchmidt) -> Vec<(BellState, f64, PureSchmidt)> {
    let (a, b) = (state1.alpha, state2.alpha);
    let h = a * b + (1.0 - a) * (1.0 - b);
    let g = a * (1.0 - b) + (1.0 - a) * b;
    let det2 = a * b * (1.0 - a) * (1.0 - b);
    BellState::ALL
        .iter()
        .map(|&which| (which, if which.is_even() { h / 2.0 } else { g / 2.0 }))
        .filter(|&(_, p)| p > 0.0)
        .map(|(which, p)| {
            let alpha = 0.5 * (1.0 + (1.0 - det2 / (p * p)).max(0.0).sqrt());
            (which, p, PureSchmidt { alpha })
        })
        .collect()
}

/// XZ swap: one middle qubit is measured in the `X` basis. All four
/// outcomes occur with probability 1/4 and leave the same canonical weight
/// `α̃ = (1 + √(1 − 16ab(1−a)(1−b)))/2`.
pub fn xz_swap(state1: &PureSchmidt, state2: &PureSchmidt) -> PureSchmidt {
    let (a, b) = (state1.alpha, state2.alpha);
    let disc = (1.0 - 16.0 * a * b * (1.0 - a) * (1.0 - b)).max(0.0);
    PureSchmidt {
        alpha: 0.5 * (1.0 + disc.sqrt()),
    }
}

/// Optimal probability of turning two pure edges into one singlet.
/// Inputs must be canonical.
pub fn majorization_pair_prob(state1: &PureSchmidt, state2: &PureSchmidt) -> f64 {
    (2.0 * (1.0 - state1.alpha * state2.alpha)).min(1.0)
}

/// Deterministic concentration of two parallel pure edges into one.
/// Inputs must be canonical.
pub fn concentrate_bond(state1: &PureSchmidt, state2: &PureSchmidt) -> PureSchmidt {
    PureSchmidt {
        alpha: (state1.alpha * state2.alpha).max(0.5),
    }
}

pub mod oracle {
    //! Density-matrix replays of each protocol.

    use super::*;
    use crate::quantum::{apply_povm, bell_ket, cnot, hadamard, pauli_z, PovmElementSet};

    pub fn bell_povm() -> PovmElementSet {
        let kets: Vec<_> = BellState::ALL.iter().map(|&b| bell_ket(b)).collect();
        let labels = BellState::ALL.iter().map(|b| format!("{b:?}")).collect();
        PovmElementSet::from_kets(&kets, labels).unwrap()
    }

    /// (probability, weight of |00⟩ in the normalized post-state).
    pub fn pcm(s1: &Pms, s2: &Pms) -> (f64, Option<f64>) {
        // qubits A1 B1 A2 B2
        let rho = s1.density().tensor(&s2.density()).unwrap();
        let rho = rho.apply_gate(&cnot(), &[0, 2]).unwrap();
        let rho = rho.apply_gate(&cnot(), &[1, 3]).unwrap();
        let povm = PovmElementSet::computational(2).unwrap();
        let out = apply_povm(&rho, &povm, &[2, 3]).unwrap();
        let hit = &out[3];
        assert_eq!(hit.label, "11");
        if !hit.normalized {
            return (hit.probability, None);
        }
        let reduced = hit.state.partial_trace(&[0, 1]).unwrap();
        (hit.probability, Some(reduced.get(0, 0).re))
    }

    /// Outcome probabilities and `Z`-corrected post-states on the outer qubits.
    pub fn swap(s1: &Pms, s2: &Pms) -> Vec<(f64, Option<DensityMatrix>)> {
        let rho = s1.density().tensor(&s2.density()).unwrap();
        let out = apply_povm(&rho, &bell_povm(), &[1, 2]).unwrap();
        BellState::ALL
            .iter()
            .zip(out)
            .map(|(&which, o)| {
                if !o.normalized {
                    return (o.probability, None);
                }
                let mut post = o.state.partial_trace(&[0, 3]).unwrap();
                if which == BellState::PsiMinus {
                    // Z on the near qubit fixes the |11⟩ sign; if the |01⟩
                    // amplitude is negative too, Z on the far qubit fixes both
                    let cross = (s1.alpha * s2.gamma).sqrt() - (s1.gamma * s2.weight_11()).sqrt();
                    let qubit = if cross < 0.0 { 1 } else { 0 };
                    post = post.apply_gate(&pauli_z(), &[qubit]).unwrap();
                }
                (o.probability, Some(post))
            })
            .collect()
    }

    /// Averaged special swap: Psi branches corrected, Phi branches replaced by |01⟩.
    pub fn swap_special(s1: &Pms, s2: &Pms) -> DensityMatrix {
        let flat = DensityMatrix::basis_state(2, 0b01).unwrap();
        let branches = swap(s1, s2);
        let parts: Vec<(f64, DensityMatrix)> = BellState::ALL
            .iter()
            .zip(branches)
            .map(|(&which, (p, post))| match (which.is_even(), post) {
                (true, Some(post)) => (p, post),
                _ => (p, flat.clone()),
            })
            .collect();
        let refs: Vec<(f64, &DensityMatrix)> = parts.iter().map(|(p, s)| (*p, s)).collect();
        DensityMatrix::mixture(&refs).unwrap()
    }

    /// (probability, canonical Schmidt weight) per Bell outcome of a pure
    /// swap; with `xz` a Hadamard precedes the measurement on one middle qubit.
    pub fn swap_pure(a: f64, b: f64, xz: bool) -> Vec<(f64, Option<f64>)> {
        let mut psi = KetState::schmidt(a).unwrap().tensor(&KetState::schmidt(b).unwrap()).unwrap();
        if xz {
            psi.apply_gate(&hadamard(), &[2]).unwrap();
        }
        BellState::ALL
            .iter()
            .map(|&which| {
                let mut branch = psi.clone();
                match branch.project_bell(1, 2, which) {
                    Ok(p) => {
                        let single = branch.to_density().partial_trace(&[0]).unwrap();
                        let (vals, _) = single.eigen();
                        (p, Some(vals[0]))
                    }
                    Err(_) => (0.0, None),
                }
            })
            .collect()
    }

    /// Success probability of the local filter `diag(√((1−α)/α), 1)` on the
    /// canonical state, and the fidelity of its output with a singlet.
    pub fn procrustean(alpha: f64) -> (f64, f64) {
        use crate::quantum::CMatrix;
        let alpha = alpha.max(1.0 - alpha);
        let mut keep = CMatrix::zeros(2, 2);
        keep[(0, 0)] = crate::quantum::C64::new((1.0 - alpha) / alpha, 0.0);
        keep[(1, 1)] = crate::quantum::C64::new(1.0, 0.0);
        let reject = CMatrix::identity(2, 2) - &keep;
        let povm = PovmElementSet::new(vec![keep, reject], vec!["ok".into(), "fail".into()]).unwrap();
        let rho = KetState::schmidt(alpha).unwrap().to_density();
        let out = apply_povm(&rho, &povm, &[0]).unwrap();
        let fidelity = if out[0].normalized {
            out[0].state.singlet_fidelity().unwrap()
        } else {
            0.0
        };
        (out[0].probability, fidelity)
    }
}

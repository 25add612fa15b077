use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;

use crate::error::{check_probability, Error, Result};
use crate::quantum::{apply_povm, c, CMatrix, DensityMatrix, PovmElementSet};
use crate::rng::stream_rng;

/// Largest copy count for which the exact binomials of the DSS sum fit.
pub const DSS_MAX_ANALYTIC_N: usize = 64;
/// Largest copy count the density-matrix construction supports (2n qubits).
pub const DSS_MAX_SIMULATED_N: usize = 4;

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// Success probability of the DSS scheme on `n` copies of `ρ(α,0,λ)`.
///
/// `p_n = Σ_m λ^{n−m}(1−λ)^m C(n,m) Σ_{k=1}^{n−m−1} α^{n−m−k}(1−α)^k
/// C(n−m,k)(C(n−m,k)−1)/(C(n,k)−1)`, with the binomial ratio formed in
/// integers before the single division.
pub fn dss_success_prob(n: usize, alpha: f64, lambda: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::UnsupportedSize(format!("DSS needs n >= 2, got {n}")));
    }
    if n > DSS_MAX_ANALYTIC_N {
        return Err(Error::UnsupportedSize(format!(
            "DSS sum supports n <= {DSS_MAX_ANALYTIC_N}, got {n}"
        )));
    }
    check_probability("alpha", alpha)?;
    check_probability("lambda", lambda)?;
    let mut total = 0.0;
    for m in 0..=n {
        let weight = lambda.powi((n - m) as i32) * (1.0 - lambda).powi(m as i32) * binomial(n, m) as f64;
        if weight == 0.0 {
            continue;
        }
        let r = n - m;
        let inner: f64 = (1..r)
            .map(|k| {
                let crk = binomial(r, k);
                let ratio = (crk * (crk - 1)) as f64 / (binomial(n, k) - 1) as f64;
                alpha.powi((r - k) as i32) * (1.0 - alpha).powi(k as i32) * ratio
            })
            .sum();
        total += weight * inner;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// One outcome of the node-A measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AOutcome {
    /// `C_k(|a⟩⟨a| + |b⟩⟨b|)` with `a < b` both of popcount `k`.
    Pair { k: u32, a: usize, b: usize },
    /// `|0…0⟩` or `|1…1⟩`: the protocol has failed.
    Fail { index: usize },
}

/// DSS measurement for `n` copies.
///
/// Node-A labels are decimal values of the A register with copy 0 as the
/// most significant bit. For each A outcome of pair type the node-B POVM
/// lists `Q_d = |a+d⟩⟨a+d| + |b+d⟩⟨b+d|` for `d ∈ J_{a,b}` in increasing
/// `d`, followed by the failure element `F = I − Σ Q_d`.
#[derive(Debug, Clone)]
pub struct DssMeasurement {
    pub n: usize,
    pub povm_a: PovmElementSet,
    pub a_outcomes: Vec<AOutcome>,
    /// `None` for failure outcomes at A.
    pub conditional_povms_b: Vec<Option<PovmElementSet>>,
    /// The `d` of each `Q_d`, aligned with the B POVM elements.
    pub b_shifts: Vec<Vec<usize>>,
}

fn projector(dim: usize, indices: &[usize], weight: f64) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    for &i in indices {
        m[(i, i)] += c(weight);
    }
    m
}

/// `J_{a,b}`: values with no bit in common with `a | b`.
pub fn shift_set(n: usize, a: usize, b: usize) -> Vec<usize> {
    (0..1usize << n).filter(|d| d & (a | b) == 0).collect()
}

/// Eigen-terms `|x⟩_A|x+y⟩_B` (with `x ∧ y = 0`) that land inside the
/// measured subspace `span{a,b} ⊗ span{a+d, b+d}` other than the two
/// intended ones. An empty result means the branch projects onto a
/// maximally entangled state.
pub fn cross_terms(n: usize, a: usize, b: usize, d: usize) -> Vec<(usize, usize)> {
    let targets = [a | d, b | d];
    let mut found = Vec::new();
    for x in [a, b] {
        for y in 0..1usize << n {
            if x & y != 0 || (x == a && y == d) || (x == b && y == d) {
                continue;
            }
            if targets.contains(&(x + y)) {
                found.push((x, y));
            }
        }
    }
    found
}

/// Builds the node-A POVM and the conditional node-B POVMs.
pub fn dss_build_measurement(n: usize) -> Result<DssMeasurement> {
    if !(2..=DSS_MAX_SIMULATED_N).contains(&n) {
        return Err(Error::UnsupportedSize(format!(
            "DSS measurement is built for 2 <= n <= {DSS_MAX_SIMULATED_N}, got {n}"
        )));
    }
    let dim = 1usize << n;
    let mut elements = Vec::new();
    let mut labels = Vec::new();
    let mut a_outcomes = Vec::new();
    let mut conditional = Vec::new();
    let mut b_shifts = Vec::new();

    elements.push(projector(dim, &[0], 1.0));
    labels.push("fail:0".to_string());
    a_outcomes.push(AOutcome::Fail { index: 0 });
    conditional.push(None);
    b_shifts.push(Vec::new());

    for k in 1..n as u32 {
        let members: Vec<usize> = (0..dim).filter(|x| x.count_ones() == k).collect();
        let c_k = 1.0 / (members.len() - 1) as f64;
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                elements.push(projector(dim, &[a, b], c_k));
                labels.push(format!("P:{k}:{a}:{b}"));
                a_outcomes.push(AOutcome::Pair { k, a, b });
                let shifts = shift_set(n, a, b);
                let mut q: Vec<CMatrix> = shifts.iter().map(|&d| projector(dim, &[a | d, b | d], 1.0)).collect();
                let mut q_labels: Vec<String> = shifts.iter().map(|d| format!("Q:{d}")).collect();
                let fail = q.iter().fold(CMatrix::identity(dim, dim), |acc, e| acc - e);
                q.push(fail);
                q_labels.push("F".into());
                conditional.push(Some(PovmElementSet::new(q, q_labels)?));
                b_shifts.push(shifts);
            }
        }
    }

    elements.push(projector(dim, &[dim - 1], 1.0));
    labels.push(format!("fail:{}", dim - 1));
    a_outcomes.push(AOutcome::Fail { index: dim - 1 });
    conditional.push(None);
    b_shifts.push(Vec::new());

    Ok(DssMeasurement {
        n,
        povm_a: PovmElementSet::new(elements, labels)?,
        a_outcomes,
        conditional_povms_b: conditional,
        b_shifts,
    })
}

/// Qubits of node A in the `(A1,B1,A2,B2,…)` layout.
pub fn a_qubits(n: usize) -> Vec<usize> {
    (0..n).map(|j| 2 * j).collect()
}

/// Qubits of node B in the `(A1,B1,A2,B2,…)` layout.
pub fn b_qubits(n: usize) -> Vec<usize> {
    (0..n).map(|j| 2 * j + 1).collect()
}

/// Full-register index of A value `x` and B value `z`.
pub fn interleave(n: usize, x: usize, z: usize) -> usize {
    (0..n).fold(0, |acc, j| {
        let shift = n - 1 - j;
        (acc << 2) | (((x >> shift) & 1) << 1) | ((z >> shift) & 1)
    })
}

/// `ρ(α,0,λ)^{⊗n}` in the `(A1,B1,A2,B2,…)` layout.
pub fn pms_copies(n: usize, alpha: f64, lambda: f64) -> Result<DensityMatrix> {
    let one = crate::quantum::build_pms(alpha, 0.0, lambda)?;
    (1..n).try_fold(one.clone(), |acc, _| acc.tensor(&one))
}

/// One leaf of the exact measurement tree.
#[derive(Debug, Clone)]
pub struct DssBranch {
    pub a_outcome: AOutcome,
    /// Index into the B POVM; `None` after an A failure.
    pub b_element: Option<usize>,
    pub probability: f64,
    pub success: bool,
    /// Normalized post-state (unnormalized if the branch has zero weight).
    pub state: DensityMatrix,
}

/// Enumerates every (A, B) outcome of the DSS measurement on `state`.
pub fn dss_branches_of(state: &DensityMatrix, m: &DssMeasurement) -> Result<Vec<DssBranch>> {
    let n = m.n;
    let a_out = apply_povm(state, &m.povm_a, &a_qubits(n))?;
    let mut branches = Vec::new();
    for ((outcome, a_res), b_povm) in m.a_outcomes.iter().zip(a_out).zip(&m.conditional_povms_b) {
        match b_povm {
            None => branches.push(DssBranch {
                a_outcome: *outcome,
                b_element: None,
                probability: a_res.probability,
                success: false,
                state: a_res.state,
            }),
            Some(b_povm) => {
                if !a_res.normalized {
                    continue;
                }
                let b_out = apply_povm(&a_res.state, b_povm, &b_qubits(n))?;
                let last = b_out.len() - 1;
                for (j, b_res) in b_out.into_iter().enumerate() {
                    branches.push(DssBranch {
                        a_outcome: *outcome,
                        b_element: Some(j),
                        probability: a_res.probability * b_res.probability,
                        success: j != last,
                        state: b_res.state,
                    });
                }
            }
        }
    }
    Ok(branches)
}

/// Exact measurement tree for `n` copies of `ρ(α,0,λ)`.
pub fn dss_branches(n: usize, alpha: f64, lambda: f64) -> Result<Vec<DssBranch>> {
    let m = dss_build_measurement(n)?;
    dss_branches_of(&pms_copies(n, alpha, lambda)?, &m)
}

/// Two-qubit compression of a success branch onto
/// `span{a,b}_A ⊗ span{a+d,b+d}_B`, together with the weight it captures.
pub fn compress_success(n: usize, branch: &DssBranch, d: usize) -> Option<(DensityMatrix, f64)> {
    let AOutcome::Pair { a, b, .. } = branch.a_outcome else {
        return None;
    };
    let rows = [(a, a | d), (a, b | d), (b, a | d), (b, b | d)];
    let idx: Vec<usize> = rows.iter().map(|&(x, z)| interleave(n, x, z)).collect();
    let mut m = CMatrix::zeros(4, 4);
    for (i, &ri) in idx.iter().enumerate() {
        for (j, &rj) in idx.iter().enumerate() {
            m[(i, j)] = branch.state.get(ri, rj);
        }
    }
    let weight = (0..4).map(|i| m[(i, i)].re).sum();
    Some((DensityMatrix::from_matrix_unchecked(m).ok()?, weight))
}

/// Monte Carlo run of the DSS measurement.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DssSimulation {
    pub n: usize,
    pub shots: u64,
    pub successes: u64,
    pub frequency: f64,
    pub stderr: f64,
    /// Total success weight of the exact branch tree.
    pub exact_probability: f64,
    /// Smallest singlet fidelity over success branches of nonzero weight.
    pub min_success_fidelity: f64,
}

const SHOT_BLOCK: u64 = 4096;

/// Builds `ρ(α,0,λ)^{⊗n}`, enumerates the exact branch tree of the DSS
/// measurement, checks every success branch against a singlet and samples
/// `shots` outcomes from the tree.
pub fn dss_simulate(n: usize, alpha: f64, lambda: f64, seed: u64, shots: u64) -> Result<DssSimulation> {
    check_probability("alpha", alpha)?;
    check_probability("lambda", lambda)?;
    let m = dss_build_measurement(n)?;
    let branches = dss_branches_of(&pms_copies(n, alpha, lambda)?, &m)?;
    let mut min_fidelity = 1.0f64;
    for br in branches.iter().filter(|b| b.success && b.probability > 1e-12) {
        let a_idx = m.a_outcomes.iter().position(|o| *o == br.a_outcome).expect("branch outcome");
        let d = m.b_shifts[a_idx][br.b_element.expect("success has a B outcome")];
        let (compressed, weight) = compress_success(n, br, d).expect("pair outcome");
        if (weight - 1.0).abs() > 1e-9 {
            min_fidelity = 0.0;
            continue;
        }
        min_fidelity = min_fidelity.min(compressed.singlet_fidelity()?);
    }
    let exact: f64 = branches.iter().filter(|b| b.success).map(|b| b.probability).sum();
    let weights: Vec<f64> = branches.iter().map(|b| b.probability.max(0.0)).collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::ZeroProbability(e.to_string()))?;
    let blocks = shots.div_ceil(SHOT_BLOCK);
    let successes: u64 = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = stream_rng(seed, "distillation.dss", block);
            let count = SHOT_BLOCK.min(shots - block * SHOT_BLOCK);
            (0..count).filter(|_| branches[dist.sample(&mut rng)].success).count() as u64
        })
        .sum();
    let frequency = if shots == 0 { 0.0 } else { successes as f64 / shots as f64 };
    let stderr = if shots == 0 {
        0.0
    } else {
        (frequency * (1.0 - frequency) / shots as f64).sqrt()
    };
    Ok(DssSimulation {
        n,
        shots,
        successes,
        frequency,
        stderr,
        exact_probability: exact,
        min_success_fidelity: min_fidelity,
    })
}

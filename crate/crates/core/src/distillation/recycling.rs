use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;

use super::dss::{a_qubits, b_qubits, dss_branches, interleave, DssBranch};
use crate::error::{check_probability, Error, Result};
use crate::protocols::Pms;
use crate::quantum::{classify_two_qubit_range, CMatrix, DensityMatrix, RangeClass, C64};
use crate::rng::stream_rng;

/// PMS parameters after `level` rounds of pairwise recycling.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RecyclingState {
    pub alpha: f64,
    pub lambda: f64,
    pub level: u32,
}

impl RecyclingState {
    /// Level-0 state with `alpha` canonicalized to `≥ 1/2`.
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        check_probability("alpha", alpha)?;
        check_probability("lambda", lambda)?;
        Ok(Self {
            alpha: alpha.max(1.0 - alpha),
            lambda,
            level: 0,
        })
    }
}

/// Outcome weights of a PCM on two copies of the same PMS.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BranchProbs {
    /// Both measured qubits `|0⟩`: a new PMS survives.
    pub pms: f64,
    /// Measured qubits disagree.
    pub fail: f64,
    /// Both `|1⟩`: a singlet.
    pub singlet: f64,
}

/// Parameters of the PMS left by the `|00⟩` outcome.
pub fn recycle_update(state: &RecyclingState) -> RecyclingState {
    let (a, l) = (state.alpha, state.lambda);
    let h = 1.0 - 2.0 * a + 2.0 * a * a;
    let c = recycling_branch_probs(state).pms;
    RecyclingState {
        alpha: a * a / h,
        lambda: if c > 0.0 { (l * l * h / c).min(1.0) } else { 0.0 },
        level: state.level + 1,
    }
}

pub fn recycling_branch_probs(state: &RecyclingState) -> BranchProbs {
    let (a, l) = (state.alpha, state.lambda);
    let pms = 1.0 - 2.0 * l + 2.0 * (1.0 - a + a * a) * l * l;
    let fail = 2.0 * l * (1.0 - l);
    BranchProbs {
        pms,
        fail,
        singlet: (1.0 - pms - fail).max(0.0),
    }
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `F_n(0)`: probability that pairwise recycling on `n` copies of
/// `ρ(α,0,λ)` never produces a singlet.
///
/// `F_n(i) = Σ_k C(⌊n/2⌋,k) f_i^{⌊n/2⌋−k} c_i^k F_k(i+1)`, `F_0 = 1`. An
/// unpaired copy is discarded.
pub fn recycling_fail_prob(n: usize, alpha: f64, lambda: f64) -> Result<f64> {
    let start = RecyclingState::new(alpha, lambda)?;
    // levels needed never exceed log2(n) + 1
    let depth = (usize::BITS - n.leading_zeros()) as usize + 1;
    let mut levels = vec![start];
    for _ in 0..depth {
        let next = recycle_update(levels.last().expect("nonempty"));
        levels.push(next);
    }
    let mut memo = HashMap::new();
    Ok(fail_rec(n, 0, &levels, &mut memo).clamp(0.0, 1.0))
}

fn fail_rec(n: usize, i: usize, levels: &[RecyclingState], memo: &mut HashMap<(usize, usize), f64>) -> f64 {
    let pairs = n / 2;
    if pairs == 0 {
        return 1.0;
    }
    if let Some(&v) = memo.get(&(n, i)) {
        return v;
    }
    let b = recycling_branch_probs(&levels[i]);
    let value = (0..=pairs)
        .map(|k| {
            let w = binomial_f64(pairs, k) * b.fail.powi((pairs - k) as i32) * b.pms.powi(k as i32);
            if w == 0.0 {
                0.0
            } else {
                w * fail_rec(k, i + 1, levels, memo)
            }
        })
        .sum();
    memo.insert((n, i), value);
    value
}

/// `1 − F_n(0)`.
pub fn recycling_scp(n: usize, alpha: f64, lambda: f64) -> Result<f64> {
    Ok(1.0 - recycling_fail_prob(n, alpha, lambda)?)
}

/// A Monte Carlo frequency with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub trials: u64,
}

impl McEstimate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        if trials == 0 {
            return Self {
                estimate: 0.0,
                stderr: 0.0,
                trials,
            };
        }
        let p = successes as f64 / trials as f64;
        Self {
            estimate: p,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
            trials,
        }
    }
}

/// Purifiable state left in a DSS failure branch, if any.
///
/// The branch is compressed onto the supports of its two local reduced
/// states; if both are two-dimensional and the compressed state has exactly
/// one product state in its range, `λ` is taken as the largest eigenvalue
/// and `α` as the larger Schmidt weight of its eigenvector.
pub fn extract_recyclable(n: usize, state: &DensityMatrix) -> Option<Pms> {
    let support = |qubits: &[usize]| -> Option<Vec<DVector<C64>>> {
        let (vals, vecs) = state.partial_trace(qubits).ok()?.eigen();
        let rank = vals.iter().filter(|&&v| v > 1e-10).count();
        (rank == 2).then(|| vecs.into_iter().take(2).collect())
    };
    let va = support(&a_qubits(n))?;
    let vb = support(&b_qubits(n))?;
    let dim = 1usize << n;
    let mut w = CMatrix::zeros(state.dim(), 4);
    for (i, u) in va.iter().enumerate() {
        for (j, v) in vb.iter().enumerate() {
            for x in 0..dim {
                for z in 0..dim {
                    w[(interleave(n, x, z), 2 * i + j)] = u[x] * v[z];
                }
            }
        }
    }
    let compressed = w.adjoint() * state.entries() * &w;
    let rho = DensityMatrix::from_matrix_unchecked(compressed).ok()?;
    if (rho.trace() - 1.0).abs() > 1e-9 {
        return None;
    }
    pms_fit(&rho)
}

/// Fits `ρ(α,0,λ)` to a two-qubit state with one product state in its range.
pub fn pms_fit(rho: &DensityMatrix) -> Option<Pms> {
    if classify_two_qubit_range(rho).ok()? != RangeClass::OneProductState {
        return None;
    }
    let (vals, vecs) = rho.eigen();
    let top = &vecs[0];
    let m = DMatrix::from_row_slice(2, 2, &[top[0], top[1], top[2], top[3]]);
    let sv = m.singular_values();
    let alpha = (sv[0] * sv[0]).clamp(0.5, 1.0);
    Pms::purifiable(alpha, vals[0].clamp(0.0, 1.0)).ok()
}

/// Exact DSS-3 tree for one parameter pair, reduced to sampling weights.
struct TripleTree {
    dist: Option<WeightedIndex<f64>>,
    /// Per leaf: success, or the recycled PMS key.
    leaves: Vec<Leaf>,
}

#[derive(Clone, Copy)]
enum Leaf {
    Singlet,
    Recycled(Pms),
    Lost,
}

fn key(p: &Pms) -> (u64, u64) {
    (p.alpha.to_bits(), p.lambda.to_bits())
}

fn triple_tree(p: &Pms) -> Result<TripleTree> {
    let branches: Vec<DssBranch> = dss_branches(3, p.alpha, p.lambda)?;
    let leaves = branches
        .iter()
        .map(|b| {
            if b.success {
                Leaf::Singlet
            } else if b.probability > 1e-12 {
                extract_recyclable(3, &b.state).map_or(Leaf::Lost, Leaf::Recycled)
            } else {
                Leaf::Lost
            }
        })
        .collect();
    let weights: Vec<f64> = branches.iter().map(|b| b.probability.max(0.0)).collect();
    Ok(TripleTree {
        dist: WeightedIndex::new(&weights).ok(),
        leaves,
    })
}

/// Monte Carlo SCP of recycling with groups of three: DSS-3 on each group,
/// failure branches that leave a purifiable state are pooled (by identical
/// parameters) for the next level, leftovers are discarded.
pub fn recycling_scp_three(n: usize, alpha: f64, lambda: f64, seed: u64, trials: u64) -> Result<McEstimate> {
    if n < 3 {
        return Err(Error::UnsupportedSize(format!("three-state recycling needs n >= 3, got {n}")));
    }
    let start = RecyclingState::new(alpha, lambda)?;
    let start = Pms::purifiable(start.alpha, start.lambda)?;
    let mut trees: HashMap<(u64, u64), TripleTree> = HashMap::new();
    trees.insert(key(&start), triple_tree(&start)?);

    // Branch structure is state-independent apart from the recycled
    // parameters; explore the reachable parameter set up front.
    let mut frontier = vec![start];
    while let Some(p) = frontier.pop() {
        let recycled: Vec<Pms> = trees[&key(&p)]
            .leaves
            .iter()
            .filter_map(|l| match l {
                Leaf::Recycled(q) => Some(*q),
                _ => None,
            })
            .collect();
        for q in recycled {
            if let std::collections::hash_map::Entry::Vacant(e) = trees.entry(key(&q)) {
                e.insert(triple_tree(&q)?);
                frontier.push(q);
            }
        }
    }

    let successes: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, "distillation.three", t);
            let mut pool: BTreeMap<(u64, u64), (Pms, usize)> = BTreeMap::new();
            pool.insert(key(&start), (start, n));
            while !pool.is_empty() {
                let mut next: BTreeMap<(u64, u64), (Pms, usize)> = BTreeMap::new();
                for (k, (_, count)) in pool {
                    let tree = &trees[&k];
                    let Some(dist) = &tree.dist else { continue };
                    for _ in 0..count / 3 {
                        match tree.leaves[dist.sample(&mut rng)] {
                            Leaf::Singlet => return 1,
                            Leaf::Recycled(q) => next.entry(key(&q)).or_insert((q, 0)).1 += 1,
                            Leaf::Lost => {}
                        }
                    }
                }
                next.retain(|_, (_, c)| *c >= 3);
                pool = next;
            }
            0
        })
        .sum();
    Ok(McEstimate::from_counts(successes, trials))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distillation::dss::dss_success_prob;
    use crate::protocols::{oracle, scp_pair};
    use crate::quantum::{apply_povm, build_pms, cnot, PovmElementSet};

    /// PCM outcome weights ("00", "01"+"10", "11") and the "00" post-state.
    fn pcm_branches(alpha: f64, lambda: f64) -> (f64, f64, f64, DensityMatrix) {
        let one = build_pms(alpha, 0.0, lambda).unwrap();
        let rho = one.tensor(&one).unwrap();
        let rho = rho.apply_gate(&cnot(), &[0, 2]).unwrap();
        let rho = rho.apply_gate(&cnot(), &[1, 3]).unwrap();
        let out = apply_povm(&rho, &PovmElementSet::computational(2).unwrap(), &[2, 3]).unwrap();
        let post = out[0].state.partial_trace(&[0, 1]).unwrap();
        (out[0].probability, out[1].probability + out[2].probability, out[3].probability, post)
    }

    #[test]
    fn update_examples() {
        let s = RecyclingState::new(0.5, 0.8).unwrap();
        assert_eq!(recycle_update(&s).alpha, 0.5);
        let s = RecyclingState::new(0.5, 1.0).unwrap();
        let next = recycle_update(&s);
        assert!((next.lambda - 1.0).abs() < 1e-15);
        assert_eq!(next.level, 1);
    }

    #[test]
    fn update_and_branches_match_oracle() {
        for &(a, l) in &[(0.7, 0.9), (0.5, 0.6), (0.95, 0.99), (0.6, 0.3)] {
            let s = RecyclingState::new(a, l).unwrap();
            let b = recycling_branch_probs(&s);
            let (c, f, sp, post) = pcm_branches(a, l);
            assert!((b.pms - c).abs() < 1e-10 && (b.fail - f).abs() < 1e-10 && (b.singlet - sp).abs() < 1e-10);
            let next = recycle_update(&s);
            let expected = build_pms(next.alpha, 0.0, next.lambda).unwrap();
            assert!(post.max_abs_diff(&expected) < 1e-10, "a={a} l={l}");
        }
    }

    #[test]
    fn branch_examples() {
        let b = recycling_branch_probs(&RecyclingState::new(0.5, 1.0).unwrap());
        assert!((b.pms - 0.5).abs() < 1e-15 && b.fail == 0.0 && (b.singlet - 0.5).abs() < 1e-15);
        let b = recycling_branch_probs(&RecyclingState::new(0.7, 0.0).unwrap());
        assert_eq!((b.pms, b.fail, b.singlet), (1.0, 0.0, 0.0));
        let b = recycling_branch_probs(&RecyclingState::new(0.7, 0.9).unwrap());
        assert!((b.pms + b.fail + b.singlet - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fail_prob_examples() {
        assert_eq!(recycling_fail_prob(0, 0.6, 0.9).unwrap(), 1.0);
        assert_eq!(recycling_fail_prob(1, 0.6, 0.9).unwrap(), 1.0);
        assert!((recycling_scp(4, 0.5, 1.0).unwrap() - 0.875).abs() < 1e-15);
        for &(a, l) in &[(0.5, 1.0), (0.7, 0.9), (0.3, 0.4)] {
            let s = Pms::purifiable(a, l).unwrap();
            assert!((recycling_scp(2, a, l).unwrap() - scp_pair(&s, &s)).abs() < 1e-15);
        }
    }

    #[test]
    fn scp_nondecreasing_in_n() {
        for a in [0.5, 0.7, 0.9] {
            for l in [0.5, 0.8, 1.0] {
                let mut prev = 0.0;
                for n in 2..=16 {
                    let s = recycling_scp(n, a, l).unwrap();
                    assert!(s >= prev - 1e-12, "n={n} a={a} l={l}");
                    prev = s;
                }
            }
        }
    }

    #[test]
    fn recycling_beats_dss_for_four_or_more() {
        for n in (4..=16).step_by(2) {
            for i in 0..20 {
                let l = 0.5 + 0.025 * i as f64;
                assert!(recycling_scp(n, 0.5, l).unwrap() >= dss_success_prob(n, 0.5, l).unwrap() - 1e-12);
            }
        }
    }

    #[test]
    fn dss_wins_at_unit_lambda_for_six_copies() {
        // pairs discard unpaired survivors, DSS-6 does not
        assert!((recycling_scp(6, 0.5, 1.0).unwrap() - 15.0 / 16.0).abs() < 1e-15);
        assert!((dss_success_prob(6, 0.5, 1.0).unwrap() - 31.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn extraction_finds_embedded_pms() {
        // copy 0 carries ρ(0.7,0,0.8), copy 1 is |00⟩
        let pms = build_pms(0.7, 0.0, 0.8).unwrap();
        let state = pms.tensor(&DensityMatrix::basis_state(2, 0).unwrap()).unwrap();
        let p = extract_recyclable(2, &state).unwrap();
        assert!((p.alpha - 0.7).abs() < 1e-10 && (p.lambda - 0.8).abs() < 1e-10);
        assert!(extract_recyclable(2, &DensityMatrix::basis_state(4, 0).unwrap()).is_none());
    }

    #[test]
    fn dss3_failure_branches_are_not_recyclable() {
        for &(a, l) in &[(0.5, 0.95), (0.7, 0.8)] {
            for b in dss_branches(3, a, l).unwrap() {
                if !b.success && b.probability > 1e-12 {
                    assert!(extract_recyclable(3, &b.state).is_none());
                }
            }
        }
    }

    #[test]
    fn three_state_examples() {
        let est = recycling_scp_three(3, 0.5, 1.0, 3, 20_000).unwrap();
        assert!((est.estimate - 0.75).abs() < 4.0 * est.stderr);
        assert_eq!(recycling_scp_three(6, 0.6, 0.0, 3, 1000).unwrap().estimate, 0.0);
        let three = recycling_scp_three(6, 0.5, 0.95, 4, 20_000).unwrap();
        let pair = recycling_scp(6, 0.5, 0.95).unwrap();
        assert!(pair >= three.estimate - 2.0 * three.stderr);
        assert!(recycling_scp_three(2, 0.5, 1.0, 0, 10).is_err());
    }

    #[test]
    fn pcm_oracle_is_shared() {
        let s = Pms::purifiable(0.7, 0.9).unwrap();
        let (p, _) = oracle::pcm(&s, &s);
        let (_, _, sp, _) = pcm_branches(0.7, 0.9);
        assert!((p - sp).abs() < 1e-12);
    }
}

//! Diamond and tree hierarchies: CEP recursions and the hybrid reduction.
//!
//! The hybrid scheme PCMs every bond into `|α̂⟩` (failed bonds vanish), then
//! reduces the random pure network. Parallel edges are concentrated first;
//! then the lowest-index internal node of degree two is swapped out. When
//! the two outer nodes stay connected through the rest of the network the
//! swap is an XZ swap, whose weight is outcome-independent and suits the
//! concentration that follows. Otherwise the new edge is a bridge that only
//! feeds further swaps and the final Procrustean step, and a standard swap
//! with its random outcome is used. Once a single edge joins `a` and `b`,
//! the Procrustean filter finishes.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::BondPair;
use crate::error::{Error, Result};
use crate::protocols::{concentrate_bond, procrustean_prob, swap_pure, xz_swap, PureSchmidt};
use crate::rng::stream_rng;

const MAX_ANALYTIC_ITERATION: usize = 8;
const MAX_SIM_ITERATION: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HierarchyKind {
    Diamond,
    Tree,
}

impl std::str::FromStr for HierarchyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diamond" => Ok(Self::Diamond),
            "tree" => Ok(Self::Tree),
            other => Err(Error::InvalidGraph(format!("unknown hierarchy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HierarchySpec {
    pub kind: HierarchyKind,
    pub iteration: usize,
    pub bond: BondPair,
}

impl HierarchySpec {
    fn check(&self, cap: usize) -> Result<()> {
        if self.iteration < 1 || self.iteration > cap {
            return Err(Error::ParameterOutOfRange {
                name: "iteration",
                value: self.iteration as f64,
                constraint: if cap == MAX_SIM_ITERATION {
                    "1 <= iteration <= 4 for simulation"
                } else {
                    "1 <= iteration <= 8"
                },
            });
        }
        Ok(())
    }
}

/// `p_i = 1 − (1 − p_{i−1}²)²` from `p_1 = p_conv`.
pub fn diamond_cep(spec: &HierarchySpec) -> Result<f64> {
    if spec.kind != HierarchyKind::Diamond {
        return Err(Error::InvalidGraph("diamond recursion on a tree spec".into()));
    }
    spec.check(MAX_ANALYTIC_ITERATION)?;
    Ok(diamond_recursion(spec.bond.p_conv(), spec.iteration))
}

pub fn diamond_recursion(p_conv: f64, iteration: usize) -> f64 {
    (1..iteration).fold(p_conv, |p, _| 1.0 - (1.0 - p * p).powi(2))
}

/// `p_i = 1 − (1 − p_{i−1}·p_conv²)²` from `p_0 = 1`.
pub fn tree_cep(spec: &HierarchySpec) -> Result<f64> {
    if spec.kind != HierarchyKind::Tree {
        return Err(Error::InvalidGraph("tree recursion on a diamond spec".into()));
    }
    spec.check(MAX_ANALYTIC_ITERATION)?;
    Ok(tree_recursion(spec.bond.p_conv(), spec.iteration))
}

pub fn tree_recursion(p_conv: f64, iteration: usize) -> f64 {
    let c2 = p_conv * p_conv;
    (0..iteration).fold(1.0, |p, _| 1.0 - (1.0 - p * c2).powi(2))
}

/// Bond list of a hierarchy as `(num_nodes, bonds, a, b)`.
///
/// The diamond starts as one bond and replaces every bond by a square. The
/// tree starts as a single node; each iteration links the two ends of two
/// copies of the previous network to a fresh `a` and a fresh `b`.
pub fn hierarchy_bonds(kind: HierarchyKind, iteration: usize) -> (usize, Vec<(usize, usize)>, usize, usize) {
    match kind {
        HierarchyKind::Diamond => {
            let mut n = 2;
            let mut bonds = vec![(0, 1)];
            for _ in 1..iteration {
                let mut next = Vec::with_capacity(bonds.len() * 4);
                for (u, v) in bonds {
                    let (x, y) = (n, n + 1);
                    n += 2;
                    next.extend([(u, x), (x, v), (u, y), (y, v)]);
                }
                bonds = next;
            }
            (n, bonds, 0, 1)
        }
        HierarchyKind::Tree => {
            let (mut n, mut bonds, mut a, mut b) = (1, Vec::new(), 0, 0);
            for _ in 0..iteration {
                let copy: Vec<(usize, usize)> = bonds.iter().map(|&(u, v)| (u + n, v + n)).collect();
                let (na, nb) = (2 * n, 2 * n + 1);
                bonds.extend(copy);
                bonds.extend([(na, a), (na, a + n), (b, nb), (b + n, nb)]);
                (a, b) = (na, nb);
                n = 2 * n + 2;
            }
            (n, bonds, a, b)
        }
    }
}

/// Pure network after the PCM stage; edges carry canonical weights.
#[derive(Debug, Clone)]
struct Net {
    edges: Vec<(usize, usize, f64)>,
    a: usize,
    b: usize,
}

enum Step {
    Done(f64),
    Xz(Net),
    Standard(Net, usize, usize, PureSchmidt, PureSchmidt),
}

impl Net {
    fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.0 == v || e.1 == v).count()
    }

    fn merge_parallel(&mut self) {
        for e in &mut self.edges {
            if e.0 > e.1 {
                (e.0, e.1) = (e.1, e.0);
            }
        }
        self.edges.sort_by_key(|e| (e.0, e.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(self.edges.len());
        for &(u, v, w) in &self.edges {
            match merged.last_mut() {
                Some(last) if (last.0, last.1) == (u, v) => {
                    last.2 = concentrate_bond(&PureSchmidt { alpha: last.2 }, &PureSchmidt { alpha: w }).alpha;
                }
                _ => merged.push((u, v, w)),
            }
        }
        self.edges = merged;
    }

    fn prune_dangling(&mut self) {
        loop {
            let before = self.edges.len();
            let (a, b) = (self.a, self.b);
            let snapshot = self.edges.clone();
            let deg = |v: usize| snapshot.iter().filter(|e| e.0 == v || e.1 == v).count();
            self.edges
                .retain(|&(u, v, _)| !((u != a && u != b && deg(u) == 1) || (v != a && v != b && deg(v) == 1)));
            if self.edges.len() == before {
                break;
            }
        }
    }

    fn connected_avoiding(&self, from: usize, to: usize, avoid: usize) -> bool {
        let mut seen = vec![from];
        let mut stack = vec![from];
        while let Some(u) = stack.pop() {
            for &(x, y, _) in &self.edges {
                let v = if x == u {
                    y
                } else if y == u {
                    x
                } else {
                    continue;
                };
                if v == avoid || seen.contains(&v) {
                    continue;
                }
                if v == to {
                    return true;
                }
                seen.push(v);
                stack.push(v);
            }
        }
        false
    }

    /// Applies the deterministic reductions up to the next swap choice.
    fn step(mut self) -> Step {
        self.merge_parallel();
        self.prune_dangling();
        let mut nodes: Vec<usize> = self.edges.iter().flat_map(|e| [e.0, e.1]).collect();
        nodes.sort_unstable();
        nodes.dedup();
        let junction = nodes
            .into_iter()
            .find(|&w| w != self.a && w != self.b && self.degree(w) == 2);
        let Some(w) = junction else {
            let direct = self
                .edges
                .iter()
                .find(|e| (e.0, e.1) == (self.a.min(self.b), self.a.max(self.b)));
            return Step::Done(direct.map_or(0.0, |e| procrustean_prob(&PureSchmidt { alpha: e.2 })));
        };
        let pos: Vec<usize> = (0..self.edges.len())
            .filter(|&i| self.edges[i].0 == w || self.edges[i].1 == w)
            .collect();
        let far = |i: usize| {
            let e = self.edges[i];
            (if e.0 == w { e.1 } else { e.0 }, PureSchmidt { alpha: e.2 })
        };
        let ((u, s1), (v, s2)) = (far(pos[0]), far(pos[1]));
        let cycle = self.connected_avoiding(u, v, w);
        self.edges.remove(pos[1]);
        self.edges.remove(pos[0]);
        if cycle {
            self.edges.push((u, v, xz_swap(&s1, &s2).alpha));
            Step::Xz(self)
        } else {
            Step::Standard(self, u, v, s1, s2)
        }
    }
}

/// Success probability of the reduction averaged over swap outcomes.
fn reduce_expected(net: Net) -> f64 {
    match net.step() {
        Step::Done(p) => p,
        Step::Xz(next) => reduce_expected(next),
        Step::Standard(rest, u, v, s1, s2) => swap_pure(&s1, &s2)
            .into_iter()
            .map(|(_, p, out)| {
                let mut next = rest.clone();
                next.edges.push((u, v, out.alpha));
                p * reduce_expected(next)
            })
            .sum(),
    }
}

fn reduce_sample<R: Rng>(mut net: Net, rng: &mut R) -> bool {
    loop {
        match net.step() {
            Step::Done(p) => return rng.random::<f64>() < p,
            Step::Xz(next) => net = next,
            Step::Standard(mut rest, u, v, s1, s2) => {
                let outcomes = swap_pure(&s1, &s2);
                let mut r = rng.random::<f64>();
                let mut pick = outcomes[outcomes.len() - 1].2;
                for &(_, p, out) in &outcomes {
                    if r < p {
                        pick = out;
                        break;
                    }
                    r -= p;
                }
                rest.edges.push((u, v, pick.alpha));
                net = rest;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HybridEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub trials: u64,
}

/// Monte Carlo estimate of the hybrid success probability.
pub fn hybrid_hierarchy_sim(spec: &HierarchySpec, seed: u64, trials: u64) -> Result<HybridEstimate> {
    spec.check(MAX_SIM_ITERATION)?;
    if trials == 0 {
        return Err(Error::UnsupportedSize("at least one trial required".into()));
    }
    let (_, bonds, a, b) = hierarchy_bonds(spec.kind, spec.iteration);
    let p_c = spec.bond.p_pcm();
    let alpha_hat = spec.bond.alpha_hat();
    let successes: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, "strategies.hierarchy", t);
            let edges = bonds
                .iter()
                .filter(|_| rng.random::<f64>() < p_c)
                .map(|&(u, v)| (u, v, alpha_hat))
                .collect();
            u64::from(reduce_sample(Net { edges, a, b }, &mut rng))
        })
        .sum();
    let p = successes as f64 / trials as f64;
    Ok(HybridEstimate {
        p_hat: p,
        stderr: (p * (1.0 - p) / trials as f64).sqrt(),
        trials,
    })
}

/// Exact hybrid success probability by enumerating PCM outcomes on every
/// bond; at most 16 bonds.
pub fn hybrid_hierarchy_exact(spec: &HierarchySpec) -> Result<f64> {
    spec.check(MAX_SIM_ITERATION)?;
    let (_, bonds, a, b) = hierarchy_bonds(spec.kind, spec.iteration);
    if bonds.len() > 16 {
        return Err(Error::UnsupportedSize(format!("{} bonds is too many to enumerate", bonds.len())));
    }
    let p_c = spec.bond.p_pcm();
    let alpha_hat = spec.bond.alpha_hat();
    Ok((0u32..1 << bonds.len())
        .into_par_iter()
        .map(|mask| {
            let k = mask.count_ones() as i32;
            let weight = p_c.powi(k) * (1.0 - p_c).powi(bonds.len() as i32 - k);
            if weight == 0.0 {
                return 0.0;
            }
            let edges = bonds
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &(u, v))| (u, v, alpha_hat))
                .collect();
            weight * reduce_expected(Net { edges, a, b })
        })
        .sum())
}

#[cfg(test)]
pub(crate) fn reduce_expected_edges(edges: Vec<(usize, usize, f64)>, a: usize, b: usize) -> f64 {
    reduce_expected(Net { edges, a, b })
}

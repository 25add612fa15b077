//! Preprocessing strategies for bonds of two purifiable edges.
//!
//! A bond carries `ρ(α,λ)` and `ρ(β,ν)`. With `x = α(1−β)` and
//! `y = β(1−α)`, CEP converts a bond to a singlet with
//! `p_conv = 2λν·min(x, y)`, while a PCM alone yields the pure state
//! `|α̂⟩`, `α̂ = max(x, y)/(x + y)`, with probability `p_c = λν(x + y)`.

mod hierarchy;

pub use hierarchy::{
    diamond_cep, diamond_recursion, hierarchy_bonds, hybrid_hierarchy_exact, hybrid_hierarchy_sim, tree_cep,
    tree_recursion, HierarchyKind, HierarchySpec, HybridEstimate,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::percolation::Geometry;
use crate::protocols::{xz_swap, Pms, PureSchmidt};

/// The two edges of one bond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BondPair {
    pub edge1: Pms,
    pub edge2: Pms,
}

impl BondPair {
    pub fn new(alpha: f64, lambda: f64, beta: f64, nu: f64) -> Result<Self> {
        Ok(Self {
            edge1: Pms::purifiable(alpha, lambda)?,
            edge2: Pms::purifiable(beta, nu)?,
        })
    }

    pub fn from_edges(edge1: Pms, edge2: Pms) -> Result<Self> {
        for e in [edge1, edge2] {
            if e.gamma != 0.0 {
                return Err(Error::ParameterOutOfRange {
                    name: "gamma",
                    value: e.gamma,
                    constraint: "gamma = 0 for bond edges",
                });
            }
        }
        Ok(Self { edge1, edge2 })
    }

    fn cross(&self) -> (f64, f64, f64) {
        let (a, b) = (self.edge1.alpha, self.edge2.alpha);
        (a * (1.0 - b), b * (1.0 - a), self.edge1.lambda * self.edge2.lambda)
    }

    /// CEP conversion probability of the bond.
    pub fn p_conv(&self) -> f64 {
        let (x, y, ln) = self.cross();
        2.0 * ln * x.min(y)
    }

    /// PCM success probability.
    pub fn p_pcm(&self) -> f64 {
        let (x, y, ln) = self.cross();
        ln * (x + y)
    }

    /// Largest Schmidt weight after a successful PCM; 1/2 when degenerate.
    pub fn alpha_hat(&self) -> f64 {
        let (x, y, _) = self.cross();
        if x + y > 0.0 {
            x.max(y) / (x + y)
        } else {
            0.5
        }
    }
}

/// Success probabilities of CEP, direct swapping and hybrid swapping for two
/// bonds of pure edges `|α⟩, |β⟩` each. Inputs are canonicalized.
pub fn pure_three_methods(alpha: PureSchmidt, beta: PureSchmidt) -> (f64, f64, f64) {
    let (a, b) = (alpha.canonicalize().alpha, beta.canonicalize().alpha);
    let hybrid = (2.0 * (1.0 - a * b)).min(1.0);
    let direct = 1.0 - (1.0 - 2.0 * (1.0 - a)) * (1.0 - 2.0 * (1.0 - b));
    (hybrid * hybrid, direct, hybrid)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyReport {
    pub p_cep: f64,
    pub p_d: f64,
    pub p_d_star: f64,
    pub p_h: f64,
    pub context: String,
}

/// Two identical bonds meeting at a middle node.
pub fn pms_strategy_report(bond1: &BondPair, bond2: &BondPair) -> Result<StrategyReport> {
    if bond1 != bond2 {
        return Err(Error::DimensionMismatch("strategy comparison needs two identical bonds".into()));
    }
    let (x, y, ln) = bond1.cross();
    let ln2 = ln * ln;
    let lo = x.min(y);
    let p_conv = 2.0 * ln * lo;
    Ok(StrategyReport {
        p_cep: p_conv * p_conv,
        p_d: 2.0 * ln2 * x * y,
        p_d_star: 2.0 * ln2 * lo * lo,
        p_h: 2.0 * ln2 * (x + y) * lo,
        context: format!(
            "alpha={} beta={} lambda={} nu={}",
            bond1.edge1.alpha, bond1.edge2.alpha, bond1.edge1.lambda, bond1.edge2.lambda
        ),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SquareReport {
    pub p_c: f64,
    pub alpha_hat: f64,
    pub alpha_tilde: f64,
    pub p_sq: f64,
    pub p_cep_tilde: f64,
}

/// `4p_c²(1−p_c²)(1−α̂) + p_c⁴·min(1, 2(1−α̃²))` with `α̃` the XZ swap of
/// two `|α̂⟩`.
pub fn square_prob_from(p_c: f64, alpha_hat: f64) -> f64 {
    let a = PureSchmidt { alpha: alpha_hat };
    let tilde = xz_swap(&a, &a).alpha;
    let p2 = p_c * p_c;
    4.0 * p2 * (1.0 - p2) * (1.0 - alpha_hat) + p2 * p2 * (2.0 * (1.0 - tilde * tilde)).min(1.0)
}

/// Hybrid square protocol over four copies of `bond`, against CEP on the
/// same square.
pub fn square_protocol_prob(bond: &BondPair) -> SquareReport {
    let p_c = bond.p_pcm();
    let alpha_hat = bond.alpha_hat();
    let a = PureSchmidt { alpha: alpha_hat };
    let p_cep = bond.p_conv().powi(2);
    SquareReport {
        p_c,
        alpha_hat,
        alpha_tilde: xz_swap(&a, &a).alpha,
        p_sq: square_prob_from(p_c, alpha_hat),
        p_cep_tilde: 1.0 - (1.0 - p_cep).powi(2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FccCheck {
    pub p_hybrid: f64,
    pub p_cep: f64,
    pub threshold: f64,
    pub feasible_hybrid: bool,
    pub feasible_cep: bool,
}

/// Each FCC bond is two 2-edged bonds joined at a middle node; the joined
/// bond percolates when its singlet probability exceeds the FCC threshold.
pub fn fcc_embedding_check(bond: &BondPair) -> FccCheck {
    let report = pms_strategy_report(bond, bond).expect("identical bonds");
    let threshold = Geometry::Fcc.threshold();
    FccCheck {
        p_hybrid: report.p_h,
        p_cep: report.p_cep,
        threshold,
        feasible_hybrid: report.p_h > threshold,
        feasible_cep: report.p_cep > threshold,
    }
}

/// Maximal sub-intervals of `[lo, hi]` where `pred` holds, found on a grid of
/// `step` and refined by bisection at each boundary.
pub fn locate_intervals(pred: impl Fn(f64) -> bool, lo: f64, hi: f64, step: f64) -> Vec<(f64, f64)> {
    let refine = |mut inside: f64, mut outside: f64| {
        for _ in 0..60 {
            let mid = 0.5 * (inside + outside);
            if pred(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    let n = ((hi - lo) / step).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| (lo + i as f64 * step).min(hi)).collect();
    let mut out = Vec::new();
    let mut start: Option<f64> = None;
    for (i, &p) in grid.iter().enumerate() {
        let holds = pred(p);
        match (holds, start) {
            (true, None) => start = Some(if i == 0 { p } else { refine(p, grid[i - 1]) }),
            (false, Some(s)) => {
                out.push((s, refine(grid[i - 1], p)));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, hi));
    }
    out
}

/// Grid of `α ∈ [1/2, 1]` in steps of 0.005.
pub fn alpha_grid() -> Vec<f64> {
    (0..=100).map(|i| 0.5 + i as f64 * 0.005).collect()
}

//! Bond percolation on regular lattices.
//!
//! Every trial assigns each bond an independent uniform `u` and opens it when
//! `u < p`. Sweeping bonds in increasing `u` through a union-find yields the
//! cluster statistics for every `p` of a grid from one draw, so curves over
//! `p` are pathwise monotone. The spanning probability at `p` is the
//! empirical CDF of the per-trial critical value.

mod lattice;
mod union_find;

pub use lattice::{generate_lattice, Boundary, Geometry, Lattice, LatticeSpec, FACE_HIGH, FACE_LOW};
pub use union_find::UnionFind;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distillation::{scheme_scp, Scheme};
use crate::error::{check_probability, Error, Result};
use crate::rng::stream_rng;

const SPANNING: u8 = FACE_LOW | FACE_HIGH;
const RNG_MODULE: &str = "percolation";

/// One sampled bond configuration.
#[derive(Debug, Clone)]
pub struct BondConfig {
    pub spec: LatticeSpec,
    pub open_bonds: Vec<bool>,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusterStats {
    pub largest_cluster_size: usize,
    /// Some cluster touches both faces of the spanning axis.
    pub spanning: bool,
    pub theta_hat: f64,
}

pub fn sample_bonds<R: Rng>(lattice: &Lattice, p: f64, rng: &mut R) -> BondConfig {
    BondConfig {
        spec: lattice.spec,
        open_bonds: lattice.bonds.iter().map(|_| rng.random::<f64>() < p).collect(),
        p,
    }
}

pub fn cluster(lattice: &Lattice, config: &BondConfig) -> Result<ClusterStats> {
    if config.open_bonds.len() != lattice.bonds.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} bond flags for {} bonds",
            config.open_bonds.len(),
            lattice.bonds.len()
        )));
    }
    let mut uf = UnionFind::new(&lattice.faces);
    let mut spanning = false;
    for (&(u, v), &open) in lattice.bonds.iter().zip(&config.open_bonds) {
        if open {
            spanning |= uf.union(u, v) == SPANNING;
        }
    }
    Ok(ClusterStats {
        largest_cluster_size: uf.largest(),
        spanning,
        theta_hat: uf.largest() as f64 / lattice.num_nodes as f64,
    })
}

/// Opens each bond with probability `p` and clusters the result.
pub fn sample_and_cluster(spec: &LatticeSpec, p: f64, seed: u64) -> Result<ClusterStats> {
    check_probability("p", p)?;
    let lattice = generate_lattice(spec)?;
    let mut rng = stream_rng(seed, RNG_MODULE, 0);
    cluster(&lattice, &sample_bonds(&lattice, p, &mut rng))
}

/// Cluster statistics of one trial at each point of an ascending grid.
#[derive(Debug, Clone)]
struct TrialSweep {
    /// Smallest `p` at which the trial spans.
    critical_p: f64,
    largest: Vec<usize>,
}

fn sweep_trial<R: Rng>(lattice: &Lattice, rng: &mut R, grid: &[f64]) -> TrialSweep {
    let mut order: Vec<(f64, u32)> = (0..lattice.bonds.len() as u32).map(|i| (rng.random::<f64>(), i)).collect();
    order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let mut uf = UnionFind::new(&lattice.faces);
    let mut critical_p = f64::INFINITY;
    let mut largest = Vec::with_capacity(grid.len());
    let mut next = 0;
    for &p in grid {
        while next < order.len() && order[next].0 < p {
            let (u, v) = lattice.bonds[order[next].1 as usize];
            if uf.union(u, v) == SPANNING && critical_p.is_infinite() {
                critical_p = order[next].0;
            }
            next += 1;
        }
        largest.push(uf.largest());
    }
    while critical_p.is_infinite() && next < order.len() {
        let (u, v) = lattice.bonds[order[next].1 as usize];
        if uf.union(u, v) == SPANNING {
            critical_p = order[next].0;
        }
        next += 1;
    }
    TrialSweep { critical_p, largest }
}

fn run_trials(lattice: &Lattice, grid: &[f64], trials: u64, seed: u64) -> Vec<TrialSweep> {
    (0..trials)
        .into_par_iter()
        .map(|t| sweep_trial(lattice, &mut stream_rng(seed, RNG_MODULE, t), grid))
        .collect()
}

fn check_grid(grid: &[f64]) -> Result<()> {
    for &p in grid {
        check_probability("p", p)?;
    }
    Ok(())
}

/// One row of a percolation sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PercolationPoint {
    pub p: f64,
    pub spanning_freq: f64,
    pub theta_hat: f64,
    /// Standard error of `theta_hat`.
    pub stderr: f64,
}

/// Spanning frequency and mean largest-cluster fraction at each grid point,
/// from coupled trials.
pub fn percolation_curve(spec: &LatticeSpec, p_grid: &[f64], trials: u64, seed: u64) -> Result<Vec<PercolationPoint>> {
    check_grid(p_grid)?;
    if trials == 0 {
        return Err(Error::UnsupportedSize("at least one trial required".into()));
    }
    let lattice = generate_lattice(spec)?;
    let mut order: Vec<usize> = (0..p_grid.len()).collect();
    order.sort_by(|&a, &b| p_grid[a].total_cmp(&p_grid[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| p_grid[i]).collect();
    let sweeps = run_trials(&lattice, &sorted, trials, seed);
    let n = lattice.num_nodes as f64;
    let t = trials as f64;
    let mut points = vec![
        PercolationPoint {
            p: 0.0,
            spanning_freq: 0.0,
            theta_hat: 0.0,
            stderr: 0.0
        };
        p_grid.len()
    ];
    for (k, &i) in order.iter().enumerate() {
        let p = sorted[k];
        let spans = sweeps.iter().filter(|s| s.critical_p < p || (p >= 1.0 && s.critical_p.is_finite())).count();
        let fractions: Vec<f64> = sweeps.iter().map(|s| s.largest[k] as f64 / n).collect();
        let mean = fractions.iter().sum::<f64>() / t;
        let var = if trials > 1 {
            fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (t - 1.0)
        } else {
            0.0
        };
        points[i] = PercolationPoint {
            p,
            spanning_freq: spans as f64 / t,
            theta_hat: mean,
            stderr: (var / t).sqrt(),
        };
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaPoint {
    pub p: f64,
    pub theta_hat: f64,
    pub stderr: f64,
}

/// Mean fraction of nodes in the largest cluster at each grid point.
pub fn theta_curve(spec: &LatticeSpec, p_grid: &[f64], trials: u64, seed: u64) -> Result<Vec<ThetaPoint>> {
    Ok(percolation_curve(spec, p_grid, trials, seed)?
        .into_iter()
        .map(|pt| ThetaPoint {
            p: pt.p,
            theta_hat: pt.theta_hat,
            stderr: pt.stderr,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdEstimate {
    pub geometry: Geometry,
    pub linear_size: usize,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// False when the spanning frequency never brackets 1/2 on the grid.
    pub converged: bool,
    pub trials: u64,
}

/// Per-trial critical values, sorted.
pub fn critical_values(spec: &LatticeSpec, trials: u64, seed: u64) -> Result<Vec<f64>> {
    let lattice = generate_lattice(spec)?;
    let mut crit: Vec<f64> = run_trials(&lattice, &[], trials, seed).into_iter().map(|s| s.critical_p).collect();
    crit.sort_by(f64::total_cmp);
    Ok(crit)
}

fn empirical_cdf(sorted: &[f64], p: f64) -> f64 {
    sorted.partition_point(|&c| c < p) as f64 / sorted.len() as f64
}

/// Locates the `p` where the spanning frequency crosses 1/2 on a grid of
/// step `resolution`, by linear interpolation. The 95% interval propagates
/// the binomial error at the crossing through the local slope.
pub fn estimate_threshold(spec: &LatticeSpec, trials: u64, resolution: f64, seed: u64) -> Result<ThresholdEstimate> {
    if trials < 100 {
        return Err(Error::UnsupportedSize(format!("threshold estimation needs >= 100 trials, got {trials}")));
    }
    if !(resolution > 0.0 && resolution <= 0.5) {
        return Err(Error::ParameterOutOfRange {
            name: "resolution",
            value: resolution,
            constraint: "0 < resolution <= 0.5",
        });
    }
    let crit = critical_values(spec, trials, seed)?;
    let steps = (1.0 / resolution).ceil() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| (i as f64 * resolution).min(1.0)).collect();
    let freq: Vec<f64> = grid.iter().map(|&p| empirical_cdf(&crit, p)).collect();
    let bracket = (1..grid.len()).find(|&i| freq[i - 1] < 0.5 && freq[i] >= 0.5);
    let Some(i) = bracket else {
        return Ok(ThresholdEstimate {
            geometry: spec.geometry,
            linear_size: spec.linear_size,
            p_hat: f64::NAN,
            ci_low: f64::NAN,
            ci_high: f64::NAN,
            converged: false,
            trials,
        });
    };
    let (p0, p1, f0, f1) = (grid[i - 1], grid[i], freq[i - 1], freq[i]);
    let p_hat = p0 + (0.5 - f0) / (f1 - f0) * (p1 - p0);
    let mut delta = resolution.max(0.005);
    let slope = loop {
        let s = (empirical_cdf(&crit, p_hat + delta) - empirical_cdf(&crit, p_hat - delta)) / (2.0 * delta);
        if s > 0.0 || delta >= 0.5 {
            break s;
        }
        delta *= 2.0;
    };
    let half = if slope > 0.0 {
        1.96 * (0.25 / trials as f64).sqrt() / slope
    } else {
        f64::INFINITY
    };
    Ok(ThresholdEstimate {
        geometry: spec.geometry,
        linear_size: spec.linear_size,
        p_hat,
        ci_low: (p_hat - half).max(0.0),
        ci_high: (p_hat + half).min(1.0),
        converged: true,
        trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CepFeasibility {
    pub scp: f64,
    pub threshold: f64,
    pub feasible: bool,
    /// Largest SCP the scheme reaches for this `n` (at `α = 1/2, λ = 1`).
    pub ceiling: f64,
}

/// Whether converting every `n_edges`-edge bond to a singlet percolates on
/// `geometry`: strict `scp > p_c`.
pub fn cep_feasible(n_edges: usize, alpha: f64, lambda: f64, geometry: Geometry, scheme: Scheme) -> Result<CepFeasibility> {
    let scp = scheme_scp(scheme, n_edges, alpha, lambda)?;
    let threshold = geometry.threshold();
    Ok(CepFeasibility {
        scp,
        threshold,
        feasible: scp > threshold,
        ceiling: scheme_scp(scheme, n_edges, 0.5, 1.0)?,
    })
}

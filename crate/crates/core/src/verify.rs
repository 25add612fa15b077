//! Closed forms against the density-matrix oracle over random draws.
//!
//! Every suite draws its parameters from one RNG stream and reports the
//! largest absolute discrepancy it saw.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::protocols::{oracle, pcm, swap_pms, swap_pms_special, swap_pure, xz_swap, Pms, PureSchmidt, SwapResult};
use crate::rng::stream_rng;

pub const ORACLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Pcm,
    Swap,
    SpecialSwap,
    PureSwap,
    XzSwap,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Pcm, Suite::Swap, Suite::SpecialSwap, Suite::PureSwap, Suite::XzSwap];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Pcm => "pcm",
            Suite::Swap => "swap",
            Suite::SpecialSwap => "special-swap",
            Suite::PureSwap => "pure-swap",
            Suite::XzSwap => "xz-swap",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::UnsupportedSize(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub draws: u64,
    /// Largest discrepancy in an outcome probability.
    pub max_prob_error: f64,
    /// Largest discrepancy in a post-state.
    pub max_state_error: f64,
    pub tolerance: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.max_prob_error < self.tolerance && self.max_state_error < self.tolerance
    }
}

fn random_pms(rng: &mut ChaCha8Rng) -> Pms {
    let alpha: f64 = rng.random();
    let gamma = rng.random::<f64>() * (1.0 - alpha);
    Pms::new(alpha, gamma, rng.random()).expect("alpha + gamma <= 1")
}

fn random_purifiable(rng: &mut ChaCha8Rng) -> Pms {
    Pms::purifiable(rng.random(), rng.random()).expect("unit draws")
}

/// Runs `suite` over `draws` random parameter tuples.
///
/// Pure post-states are compared through `α(1−α)`, the determinant of the
/// reduced state, which stays well conditioned near the singlet where
/// `α` itself does not.
pub fn run_suite(suite: Suite, draws: u64, seed: u64) -> Result<SuiteReport> {
    if draws == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "draws",
            value: 0.0,
            constraint: "draws >= 1",
        });
    }
    let mut rng = stream_rng(seed, "verify", suite as u64);
    let (mut dp, mut ds) = (0.0f64, 0.0f64);
    for _ in 0..draws {
        match suite {
            Suite::Pcm => {
                let (s1, s2) = (random_pms(&mut rng), random_pms(&mut rng));
                let out = pcm(&s1, &s2);
                let (p, w00) = oracle::pcm(&s1, &s2);
                dp = dp.max((out.success_prob - p).abs());
                if let (Some(r), Some(w)) = (out.result, w00) {
                    ds = ds.max((r.alpha - w.min(1.0 - w)).abs());
                }
            }
            Suite::Swap => {
                let (s1, s2) = (random_pms(&mut rng), random_pms(&mut rng));
                for (o, (p, post)) in swap_pms(&s1, &s2).iter().zip(oracle::swap(&s1, &s2)) {
                    dp = dp.max((o.probability - p).abs());
                    if let (SwapResult::Pms(r), Some(post)) = (o.result, post) {
                        ds = ds.max(post.max_abs_diff(&r.density()));
                    }
                }
            }
            Suite::SpecialSwap => {
                let (s1, s2) = (random_purifiable(&mut rng), random_purifiable(&mut rng));
                let out = swap_pms_special(&s1, &s2)?;
                ds = ds.max(oracle::swap_special(&s1, &s2).max_abs_diff(&out.density()));
            }
            Suite::PureSwap => {
                let (a, b): (f64, f64) = (rng.random(), rng.random());
                let oracle_out = oracle::swap_pure(a, b, false);
                for (which, p, r) in swap_pure(&PureSchmidt { alpha: a }, &PureSchmidt { alpha: b }) {
                    let (op, oa) = oracle_out[which.code() as usize];
                    dp = dp.max((p - op).abs());
                    if let Some(oa) = oa {
                        ds = ds.max((r.alpha * (1.0 - r.alpha) - oa * (1.0 - oa)).abs());
                    }
                }
            }
            Suite::XzSwap => {
                let a: f64 = rng.random();
                let b: f64 = if rng.random::<bool>() { a } else { rng.random() };
                let r = xz_swap(&PureSchmidt { alpha: a }, &PureSchmidt { alpha: b });
                for (p, oa) in oracle::swap_pure(a, b, true) {
                    dp = dp.max((p - 0.25).abs());
                    if let Some(oa) = oa {
                        ds = ds.max((r.alpha * (1.0 - r.alpha) - oa * (1.0 - oa)).abs());
                    }
                }
            }
        }
    }
    Ok(SuiteReport {
        suite,
        draws,
        max_prob_error: dp,
        max_state_error: ds,
        tolerance: ORACLE_TOL,
    })
}

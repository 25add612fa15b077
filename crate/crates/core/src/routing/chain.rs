use rand::Rng;

use super::{QubitId, SingletGraph, Trace, TraceOp};
use crate::error::{Error, Result};
use crate::protocols::{swap_pms_special, swap_pure, Pms, PureSchmidt};
use crate::quantum::BellState;
use crate::rng::stream_rng;

/// States on the consecutive edges of a path.
#[derive(Debug, Clone, Copy)]
pub enum EdgeStates<'a> {
    Singlets,
    Pure(&'a [PureSchmidt]),
    Mixed(&'a [Pms]),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChainOutput {
    Singlet,
    /// Distribution of the canonical end-to-end Schmidt weight.
    Pure(Vec<(f64, PureSchmidt)>),
    Mixed(Pms),
}

fn check_path(path: &[usize]) -> Result<()> {
    if path.len() < 2 {
        return Err(Error::BrokenPath(format!("path of {} node(s)", path.len())));
    }
    let mut seen = path.to_vec();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::BrokenPath("path revisits a node".into()));
    }
    Ok(())
}

/// Swaps along `path` from one end to the other. Singlets stay singlets;
/// pure edges yield the outcome distribution of the end-to-end weight;
/// purifiable mixed edges go through the special swap, whose `λ` shrinks by
/// a factor `λ_i h_i` at every step.
pub fn swap_chain(path: &[usize], states: EdgeStates) -> Result<ChainOutput> {
    check_path(path)?;
    let hops = path.len() - 1;
    let len = match states {
        EdgeStates::Singlets => hops,
        EdgeStates::Pure(s) => s.len(),
        EdgeStates::Mixed(s) => s.len(),
    };
    if len != hops {
        return Err(Error::DimensionMismatch(format!("{len} edge states for {hops} hops")));
    }
    match states {
        EdgeStates::Singlets => Ok(ChainOutput::Singlet),
        EdgeStates::Pure(s) => {
            let mut dist = vec![(1.0, s[0].canonicalize())];
            for next in &s[1..] {
                let mut merged: Vec<(f64, PureSchmidt)> = Vec::new();
                for &(p, cur) in &dist {
                    for (_, q, out) in swap_pure(&cur, next) {
                        match merged.iter_mut().find(|(_, m)| (m.alpha - out.alpha).abs() < 1e-12) {
                            Some(slot) => slot.0 += p * q,
                            None => merged.push((p * q, out)),
                        }
                    }
                }
                dist = merged;
            }
            dist.sort_by(|a, b| a.1.alpha.total_cmp(&b.1.alpha));
            Ok(ChainOutput::Pure(dist))
        }
        EdgeStates::Mixed(s) => {
            let mut acc = s[0];
            for next in &s[1..] {
                acc = swap_pms_special(&acc, next)?;
            }
            Ok(ChainOutput::Mixed(acc))
        }
    }
}

/// Oracle trace of swapping singlets along `path`, starting at the node next
/// to `b` and moving toward `a`. Outcomes are uniform; `a` applies the
/// accumulated Pauli correction at the end.
pub fn swap_chain_trace(graph: &SingletGraph, path: &[usize], seed: u64) -> Result<Trace> {
    check_path(path)?;
    let edges = path
        .windows(2)
        .map(|w| {
            graph
                .edge_between(w[0], w[1])
                .ok_or_else(|| Error::BrokenPath(format!("no singlet between {} and {}", w[0], w[1])))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rng = stream_rng(seed, "routing.swap", 0);
    let mut ops = Vec::new();
    let mut frame = 0u8;
    for i in (1..path.len() - 1).rev() {
        let outcome = BellState::from_code(rng.random_range(0..4u8));
        frame ^= outcome.code();
        ops.push(TraceOp::BellMeasure {
            first: QubitId { edge: edges[i - 1], node: path[i] },
            second: QubitId { edge: edges[i], node: path[i] },
            outcome,
        });
    }
    let head = QubitId { edge: edges[0], node: path[0] };
    if frame & 2 != 0 {
        ops.push(TraceOp::X { qubit: head });
    }
    if frame & 1 != 0 {
        ops.push(TraceOp::Z { qubit: head });
    }
    Ok(Trace {
        ops,
        outputs: vec![head, QubitId { edge: edges[edges.len() - 1], node: path[path.len() - 1] }],
    })
}

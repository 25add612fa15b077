//! GHZ growth over burned nodes with X-basis pruning.
//!
//! Each burned node keeps one qubit of a single GHZ state. A burn over edge
//! `e` from `u` is a join: CNOT from `u`'s GHZ qubit onto its half of `e`,
//! then a Z measurement whose outcome travels with the signal; the receiver
//! flips its half when the outcome is 1. A singlet whose far end is already
//! burned is joined from both sides; the second Z measurement is then
//! deterministic and the singlet drops out without touching the GHZ phase.
//!
//! On the way back, a node waits for a reply over every edge it burned.
//! Rejected burns are answered with `NoPhaseError` right away; children
//! answer once their own subtree is done, X-measuring their qubit unless it
//! is kept. The parity of all X outcomes reaches `a`, which undoes it with
//! one Z.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use super::{Message, MessageKind, QubitId, SingletGraph, Trace, TraceOp};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GhzRecord {
    /// `(node, qubit)` for every kept node that joined, by node index.
    pub members: Vec<(usize, QubitId)>,
    /// Relative phase of `|1…1⟩`; zero once `a` has corrected it.
    pub phase: u8,
    /// Burn entry of every joined node except `a`.
    pub parent_of: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GhzOutcome {
    pub success: bool,
    pub rounds_used: usize,
    pub messages: Vec<Message>,
    /// Parity of the X outcomes that `a` corrected.
    pub phase_correction: u8,
    pub x_measurements: usize,
    pub record: GhzRecord,
    #[serde(skip)]
    pub trace: Trace,
}

struct Node {
    burned_at: Option<usize>,
    parent: Option<(usize, usize)>,
    qubit: Option<QubitId>,
    sent: bool,
    pending: usize,
    parity: u8,
    measured: bool,
    reported: bool,
}

enum Delivery {
    Burn { from: usize, to: usize, edge: usize, outcome: u8 },
    Reply { from: usize, to: usize, kind: MessageKind },
}

/// Runs the GHZ protocol from `graph.a` and leaves a GHZ state on the kept
/// nodes reachable from `a`. With `keep = {a, b}` a success leaves a singlet
/// between the endpoints. Measurement outcomes are drawn from `seed`.
pub fn ghz_protocol(graph: &SingletGraph, keep: &[usize], seed: u64) -> Result<GhzOutcome> {
    let n = graph.num_nodes();
    if !keep.contains(&graph.a) || !keep.contains(&graph.b) {
        return Err(Error::InvalidGraph("keep set must contain both endpoints".into()));
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= n) {
        return Err(Error::InvalidGraph(format!("keep node {bad} out of range")));
    }
    let mut is_kept = vec![false; n];
    keep.iter().for_each(|&k| is_kept[k] = true);
    let mut rng = stream_rng(seed, "routing.ghz", 0);
    let mut nodes: Vec<Node> = (0..n)
        .map(|_| Node {
            burned_at: None,
            parent: None,
            qubit: None,
            sent: false,
            pending: 0,
            parity: 0,
            measured: false,
            reported: false,
        })
        .collect();
    let mut ops = Vec::new();
    let mut log = Vec::new();
    let mut edge_outcome: Vec<Option<u8>> = vec![None; graph.edges().len()];
    let mut x_measurements = 0;
    let timeout = graph.timeout_round();

    let a = graph.a;
    let Some(&(_, seed_edge)) = graph.neighbors(a).first() else {
        return Ok(failure(timeout, log, ops, 0));
    };
    nodes[a].burned_at = Some(0);
    nodes[a].qubit = Some(QubitId { edge: seed_edge, node: a });

    let mut round = 0;
    let mut replies: Vec<(usize, usize, MessageKind)> = Vec::new();
    let mut ready: Vec<usize> = Vec::new();
    let (phase_correction, rounds_used) = loop {
        round += 1;
        let mut deliveries = Vec::new();
        // burns from nodes burned last round
        let senders: Vec<usize> = (0..n).filter(|&u| nodes[u].burned_at == Some(round - 1)).collect();
        for u in senders {
            let g = nodes[u].qubit.expect("burned nodes hold a qubit");
            let parent_edge = nodes[u].parent.map(|(_, e)| e);
            for &(v, e) in graph.neighbors(u) {
                if Some(e) == parent_edge {
                    continue;
                }
                let outcome = if u == a && e == seed_edge {
                    // a's own qubit of this singlet is the GHZ seed
                    0
                } else {
                    let half = QubitId { edge: e, node: u };
                    let m = *edge_outcome[e].get_or_insert_with(|| rng.random_range(0..2u8));
                    ops.push(TraceOp::Cnot { control: g, target: half });
                    ops.push(TraceOp::MeasureZ { qubit: half, outcome: m });
                    m
                };
                log.push(Message { kind: MessageKind::Burn, from: u, to: v, round });
                nodes[u].pending += 1;
                deliveries.push(Delivery::Burn { from: u, to: v, edge: e, outcome });
            }
            nodes[u].sent = true;
            if nodes[u].pending == 0 && u != a {
                ready.push(u);
            }
        }
        for (from, to, kind) in replies.drain(..) {
            log.push(Message { kind, from, to, round });
            deliveries.push(Delivery::Reply { from, to, kind });
        }
        ready.sort_unstable();
        for u in ready.drain(..) {
            let node = &mut nodes[u];
            node.reported = true;
            if !is_kept[u] {
                let x = rng.random_range(0..2u8);
                ops.push(TraceOp::MeasureX {
                    qubit: node.qubit.expect("burned nodes hold a qubit"),
                    outcome: x,
                });
                node.parity ^= x;
                node.measured = true;
                x_measurements += 1;
            }
            let kind = if node.measured { MessageKind::PhaseInfo(node.parity) } else { MessageKind::NoPhaseError };
            let (p, _) = node.parent.expect("only a has no parent");
            log.push(Message { kind, from: u, to: p, round });
            deliveries.push(Delivery::Reply { from: u, to: p, kind });
        }

        // burns first, lowest sender first
        deliveries.sort_by_key(|d| match *d {
            Delivery::Burn { from, to, .. } => (0, to, from),
            Delivery::Reply { from, to, .. } => (1, to, from),
        });
        for d in deliveries {
            match d {
                Delivery::Burn { from, to, edge, outcome } => {
                    if nodes[to].burned_at.is_none() {
                        let q = QubitId { edge, node: to };
                        if outcome == 1 {
                            ops.push(TraceOp::X { qubit: q });
                        }
                        nodes[to].burned_at = Some(round);
                        nodes[to].parent = Some((from, edge));
                        nodes[to].qubit = Some(q);
                    } else {
                        replies.push((to, from, MessageKind::NoPhaseError));
                    }
                }
                Delivery::Reply { to, kind, .. } => {
                    let node = &mut nodes[to];
                    node.pending -= 1;
                    if let MessageKind::PhaseInfo(p) = kind {
                        node.parity ^= p;
                        node.measured = true;
                    }
                }
            }
        }
        if nodes[a].sent && nodes[a].pending == 0 && replies.is_empty() {
            break (nodes[a].parity, round);
        }
        for (u, node) in nodes.iter().enumerate() {
            if u != a && node.sent && !node.reported && node.pending == 0 {
                ready.push(u);
            }
        }
        if round > 4 * n + 4 {
            return Err(Error::InvalidGraph("GHZ protocol did not terminate".into()));
        }
    };
    if phase_correction == 1 {
        ops.push(TraceOp::Z {
            qubit: nodes[a].qubit.expect("a holds the seed qubit"),
        });
    }
    if nodes[graph.b].burned_at.is_none() {
        return Ok(failure(timeout, log, ops, x_measurements));
    }
    let members: Vec<(usize, QubitId)> = (0..n)
        .filter(|&v| is_kept[v])
        .filter_map(|v| nodes[v].qubit.map(|q| (v, q)))
        .collect();
    let parent_of = (0..n).filter_map(|v| nodes[v].parent.map(|(p, _)| (v, p))).collect();
    Ok(GhzOutcome {
        success: true,
        rounds_used,
        messages: log,
        phase_correction,
        x_measurements,
        trace: Trace {
            ops,
            outputs: members.iter().map(|&(_, q)| q).collect(),
        },
        record: GhzRecord { members, phase: 0, parent_of },
    })
}

fn failure(timeout: usize, log: Vec<Message>, ops: Vec<TraceOp>, x: usize) -> GhzOutcome {
    GhzOutcome {
        success: false,
        rounds_used: timeout,
        messages: log,
        phase_correction: 0,
        x_measurements: x,
        record: GhzRecord {
            members: vec![],
            phase: 0,
            parent_of: BTreeMap::new(),
        },
        trace: Trace { ops, outputs: vec![] },
    }
}

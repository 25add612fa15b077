//! Local processing over a graph of perfect singlets.
//!
//! All simulators run synchronous rounds: a message sent in round `t` is
//! handled by its receiver in round `t`, and anything the receiver sends in
//! response goes out in round `t + 1`. When several burn signals reach a node
//! in the same round, the lowest sender index wins.

mod chain;
mod ghz;
mod trace;

pub use chain::{swap_chain, swap_chain_trace, ChainOutput, EdgeStates};
pub use ghz::{ghz_protocol, GhzOutcome, GhzRecord};
pub use trace::{replay_trace_in_oracle, QubitId, Trace, TraceOp};

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::percolation::{BondConfig, Lattice};
use crate::quantum::BellState;

/// Singlets between network nodes, plus the requested endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingletGraph {
    num_nodes: usize,
    /// Sorted `(u, v)` pairs with `u < v`; the index is the edge id.
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<(usize, usize)>>,
    /// Bonds whose distillation failed, as `(neighbor, _)` lists per node.
    /// Only used for message accounting.
    failed: Vec<Vec<usize>>,
    num_failed: usize,
    pub a: usize,
    pub b: usize,
}

impl SingletGraph {
    pub fn new(num_nodes: usize, edges: &[(usize, usize)], a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(Error::InvalidGraph("endpoints coincide".into()));
        }
        if a >= num_nodes || b >= num_nodes {
            return Err(Error::InvalidGraph(format!("endpoint out of range for {num_nodes} nodes")));
        }
        let mut sorted = BTreeSet::new();
        for &(u, v) in edges {
            if u == v || u >= num_nodes || v >= num_nodes {
                return Err(Error::InvalidGraph(format!("bad edge ({u}, {v})")));
            }
            if !sorted.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({u}, {v})")));
            }
        }
        let edges: Vec<(usize, usize)> = sorted.into_iter().collect();
        let mut adjacency = vec![Vec::new(); num_nodes];
        for (e, &(u, v)) in edges.iter().enumerate() {
            adjacency[u].push((v, e));
            adjacency[v].push((u, e));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            num_nodes,
            edges,
            adjacency,
            failed: vec![Vec::new(); num_nodes],
            num_failed: 0,
            a,
            b,
        })
    }

    /// Open bonds of a sampled configuration become singlets; closed bonds
    /// count as failed distillation attempts.
    pub fn from_bond_config(lattice: &Lattice, config: &BondConfig, a: usize, b: usize) -> Result<Self> {
        if config.open_bonds.len() != lattice.bonds.len() {
            return Err(Error::DimensionMismatch("bond flags do not match lattice".into()));
        }
        let mut open = Vec::new();
        let mut closed = Vec::new();
        for (&(u, v), &o) in lattice.bonds.iter().zip(&config.open_bonds) {
            if o { &mut open } else { &mut closed }.push((u as usize, v as usize));
        }
        let mut g = Self::new(lattice.num_nodes, &open, a, b)?;
        for (u, v) in closed {
            g.failed[u].push(v);
            g.failed[v].push(u);
        }
        g.num_failed = lattice.bonds.len() - open.len();
        Ok(g)
    }

    /// Parses an edge list: one `u v` pair per line, `#` comments allowed.
    /// The node count is one more than the largest index seen.
    pub fn parse_edge_list(text: &str, a: usize, b: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parsed: Vec<usize> = fields.iter().filter_map(|f| f.parse().ok()).collect();
            if fields.len() != 2 || parsed.len() != 2 {
                return Err(Error::InvalidGraph(format!("line {}: expected `u v`, got `{line}`", lineno + 1)));
            }
            edges.push((parsed[0], parsed[1]));
        }
        let n = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0).max(a + 1).max(b + 1);
        Self::new(n, &edges, a, b)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn failed_bonds(&self) -> usize {
        self.num_failed
    }

    /// `(neighbor, edge id)` pairs in increasing neighbor order.
    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        self.adjacency
            .get(u)?
            .binary_search_by_key(&v, |&(w, _)| w)
            .ok()
            .map(|i| self.adjacency[u][i].1)
    }

    /// Round at which the endpoints give up: `2(N − 1)`.
    pub fn timeout_round(&self) -> usize {
        2 * (self.num_nodes - 1)
    }

    /// Hop distance from `a` for every node, `None` when unreachable.
    pub fn distances_from_a(&self) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_nodes];
        dist[self.a] = Some(0);
        let mut queue = VecDeque::from([self.a]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            for &(v, _) in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MessageKind {
    Burn,
    /// Retrace signal; carries the sender's Bell outcome except from `b`.
    Swap(Option<BellState>),
    PhaseInfo(u8),
    NoPhaseError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Message {
    pub kind: MessageKind,
    pub from: usize,
    pub to: usize,
    pub round: usize,
}

/// Shortest path `a → b` by hop count. Among equal-length paths each node's
/// predecessor is its lowest-index neighbor one hop closer to `a`.
pub fn controller_path(graph: &SingletGraph) -> Option<Vec<usize>> {
    let dist = graph.distances_from_a();
    dist[graph.b]?;
    let mut path = vec![graph.b];
    let mut node = graph.b;
    while node != graph.a {
        let d = dist[node]?;
        node = graph
            .neighbors(node)
            .iter()
            .map(|&(w, _)| w)
            .find(|&w| dist[w] == Some(d - 1))?;
        path.push(node);
    }
    path.reverse();
    Some(path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BurnReport {
    pub path: Option<Vec<usize>>,
    pub rounds_used: usize,
    /// Burn and swap messages.
    pub messages: usize,
    /// Outcome exchanges of the preceding distillation step. Zero when the
    /// outcomes are fused into the burn signals.
    pub distillation_messages: usize,
    pub log: Vec<Message>,
    /// Swap operations along the path, for oracle replay.
    #[serde(skip)]
    pub trace: Option<Trace>,
}

/// Distributed burning search from `a`, followed by the swap retrace from
/// `b`. Swap outcomes are drawn from `seed`.
///
/// Without `fused`, every bond (singlet or failed) first exchanges its two
/// distillation outcomes. With `fused`, the outcome exchange is dropped: a
/// burning node signals over every bond it holds except its parent bond, and
/// a receiver whose local check shows no singlet discards the signal.
pub fn burning_route(graph: &SingletGraph, fused: bool, seed: u64) -> BurnReport {
    let n = graph.num_nodes;
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut burned = vec![false; n];
    burned[graph.a] = true;
    let mut log = Vec::new();
    let mut frontier = vec![graph.a];
    let mut round = 0;
    let timeout = graph.timeout_round();
    let distillation_messages = if fused { 0 } else { 2 * (graph.edges.len() + graph.num_failed) };
    while !burned[graph.b] {
        round += 1;
        if frontier.is_empty() || round > timeout {
            return BurnReport {
                path: None,
                rounds_used: timeout,
                messages: log.len(),
                distillation_messages,
                log,
                trace: None,
            };
        }
        let mut incoming: Vec<(usize, usize)> = Vec::new();
        for &u in &frontier {
            for &(v, _) in graph.neighbors(u) {
                if Some(v) != parent[u] {
                    log.push(Message {
                        kind: MessageKind::Burn,
                        from: u,
                        to: v,
                        round,
                    });
                    incoming.push((v, u));
                }
            }
            if fused {
                for &v in &graph.failed[u] {
                    log.push(Message {
                        kind: MessageKind::Burn,
                        from: u,
                        to: v,
                        round,
                    });
                }
            }
        }
        // lowest sender wins among same-round signals
        incoming.sort_unstable();
        let mut next = Vec::new();
        for (v, u) in incoming {
            if !burned[v] {
                burned[v] = true;
                parent[v] = Some(u);
                next.push(v);
            }
        }
        frontier = next;
    }
    let mut path = vec![graph.b];
    while let Some(p) = parent[path[path.len() - 1]] {
        path.push(p);
    }
    path.reverse();
    let trace = swap_chain_trace(graph, &path, seed).expect("burned path consists of singlets");
    // b answers in the round after it burns; each hop then takes one round
    let outcomes = std::iter::once(None).chain(trace.bell_outcomes().map(Some));
    for (k, (w, outcome)) in path.windows(2).rev().zip(outcomes).enumerate() {
        log.push(Message {
            kind: MessageKind::Swap(outcome),
            from: w[1],
            to: w[0],
            round: round + 1 + k,
        });
    }
    BurnReport {
        path: Some(path.clone()),
        rounds_used: round + path.len() - 1,
        messages: log.len(),
        distillation_messages,
        log,
        trace: Some(trace),
    }
}

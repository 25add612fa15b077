use serde::{Deserialize, Serialize};

use super::SingletGraph;
use crate::error::{Error, Result};
use crate::quantum::{cnot, hadamard, pauli_x, pauli_z, BellState, CMatrix, DensityMatrix, KetState, C64, MAX_QUBITS};

/// The qubit of singlet `edge` held at `node`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QubitId {
    pub edge: usize,
    pub node: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum TraceOp {
    Cnot { control: QubitId, target: QubitId },
    X { qubit: QubitId },
    Z { qubit: QubitId },
    MeasureZ { qubit: QubitId, outcome: u8 },
    MeasureX { qubit: QubitId, outcome: u8 },
    BellMeasure { first: QubitId, second: QubitId, outcome: BellState },
}

/// Gate and measurement sequence of one protocol run. Every singlet starts
/// as `(|00⟩ + |11⟩)/√2`; `outputs` are the qubits left at the end.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub ops: Vec<TraceOp>,
    pub outputs: Vec<QubitId>,
}

impl Trace {
    pub fn bell_outcomes(&self) -> impl Iterator<Item = BellState> + '_ {
        self.ops.iter().filter_map(|op| match op {
            TraceOp::BellMeasure { outcome, .. } => Some(*outcome),
            _ => None,
        })
    }
}

/// Final state of a replay plus the probability of every recorded outcome.
#[derive(Debug, Clone)]
pub struct Replay {
    pub state: DensityMatrix,
    pub probabilities: Vec<f64>,
}

/// Register holding only the singlets touched so far; measured qubits are
/// removed, which keeps the live count small.
struct Register<'g> {
    graph: &'g SingletGraph,
    ket: Option<KetState>,
    live: Vec<QubitId>,
}

impl Register<'_> {
    fn position(&mut self, q: QubitId) -> Result<usize> {
        if let Some(p) = self.live.iter().position(|&l| l == q) {
            return Ok(p);
        }
        let &(u, v) = self
            .graph
            .edges()
            .get(q.edge)
            .ok_or_else(|| Error::InvalidGraph(format!("trace names missing edge {}", q.edge)))?;
        if q.node != u && q.node != v {
            return Err(Error::InvalidGraph(format!("node {} does not hold edge {}", q.node, q.edge)));
        }
        if self.live.iter().any(|l| l.edge == q.edge) {
            return Err(Error::InvalidGraph(format!("qubit {q:?} was already measured")));
        }
        if self.live.len() + 2 > MAX_QUBITS {
            return Err(Error::QubitCapExceeded {
                requested: self.live.len() + 2,
                cap: MAX_QUBITS,
            });
        }
        let singlet = KetState::bell(BellState::PsiPlus);
        self.ket = Some(match self.ket.take() {
            Some(k) => k.tensor(&singlet)?,
            None => singlet,
        });
        self.live.push(QubitId { edge: q.edge, node: u });
        self.live.push(QubitId { edge: q.edge, node: v });
        Ok(self.live.len() - if q.node == u { 2 } else { 1 })
    }

    fn ket(&mut self) -> &mut KetState {
        self.ket.as_mut().expect("positions are resolved before use")
    }

    fn gate(&mut self, gate: &CMatrix, qubits: &[QubitId]) -> Result<()> {
        let targets = qubits.iter().map(|&q| self.position(q)).collect::<Result<Vec<_>>>()?;
        self.ket().apply_gate(gate, &targets)
    }

    /// Projects `q` onto `outcome` and drops it from the register.
    fn measure(&mut self, q: QubitId, outcome: u8) -> Result<f64> {
        let pos = self.position(q)?;
        let prob = self.ket().project(&[pos], usize::from(outcome & 1))?;
        let n = self.live.len();
        self.live.remove(pos);
        if self.live.is_empty() {
            self.ket = None;
            return Ok(prob);
        }
        let bit = 1usize << (n - 1 - pos);
        let kept: Vec<C64> = self
            .ket()
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|&(i, _)| (i & bit != 0) == (outcome & 1 == 1))
            .map(|(_, &a)| a)
            .collect();
        self.ket = Some(KetState::new(kept)?);
        Ok(prob)
    }

    /// Reduced state of `outputs`, in that order.
    fn reduced(&mut self, outputs: &[QubitId]) -> Result<DensityMatrix> {
        if outputs.is_empty() {
            return Err(Error::UnsupportedSize("trace has no output qubits".into()));
        }
        let pos = outputs.iter().map(|&q| self.position(q)).collect::<Result<Vec<_>>>()?;
        let n = self.live.len();
        let amps = self.ket().amplitudes().to_vec();
        let k = pos.len();
        let mask: usize = pos.iter().map(|&p| 1usize << (n - 1 - p)).sum();
        let local = |i: usize| {
            pos.iter()
                .fold(0usize, |acc, &p| (acc << 1) | ((i >> (n - 1 - p)) & 1))
        };
        let mut rho = CMatrix::zeros(1 << k, 1 << k);
        for (i, ai) in amps.iter().enumerate() {
            if ai.norm_sqr() == 0.0 {
                continue;
            }
            for (j, aj) in amps.iter().enumerate() {
                if i & !mask == j & !mask {
                    rho[(local(i), local(j))] += ai * aj.conj();
                }
            }
        }
        DensityMatrix::from_matrix(rho)
    }
}

/// Executes `trace` on explicit singlets of `graph` with the density-matrix
/// simulator, post-selecting every recorded outcome. Fails when a recorded
/// outcome has zero probability or more than the qubit cap is live at once.
pub fn replay_trace_in_oracle(trace: &Trace, graph: &SingletGraph) -> Result<Replay> {
    let mut reg = Register {
        graph,
        ket: None,
        live: Vec::new(),
    };
    let mut probabilities = Vec::new();
    for op in &trace.ops {
        match *op {
            TraceOp::Cnot { control, target } => reg.gate(&cnot(), &[control, target])?,
            TraceOp::X { qubit } => reg.gate(&pauli_x(), &[qubit])?,
            TraceOp::Z { qubit } => reg.gate(&pauli_z(), &[qubit])?,
            TraceOp::MeasureZ { qubit, outcome } => probabilities.push(reg.measure(qubit, outcome)?),
            TraceOp::MeasureX { qubit, outcome } => {
                reg.gate(&hadamard(), &[qubit])?;
                probabilities.push(reg.measure(qubit, outcome)?);
            }
            TraceOp::BellMeasure { first, second, outcome } => {
                // rotate the Bell basis onto the computational basis:
                // first qubit carries the sign, second the parity
                reg.gate(&cnot(), &[first, second])?;
                reg.gate(&hadamard(), &[first])?;
                let code = outcome.code();
                let p1 = reg.measure(first, code & 1)?;
                let p2 = reg.measure(second, code >> 1)?;
                probabilities.push(p1 * p2);
            }
        }
    }
    Ok(Replay {
        state: reg.reduced(&trace.outputs)?,
        probabilities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_trace_is_initial_state() {
        let g = SingletGraph::new(2, &[(0, 1)], 0, 1).unwrap();
        let trace = Trace {
            ops: vec![],
            outputs: vec![QubitId { edge: 0, node: 0 }, QubitId { edge: 0, node: 1 }],
        };
        let r = replay_trace_in_oracle(&trace, &g).unwrap();
        let want = KetState::bell(BellState::PsiPlus).to_density();
        assert!(r.state.max_abs_diff(&want) < 1e-12);
        assert!(r.probabilities.is_empty());
    }

    #[test]
    fn bell_measurement_outcomes_are_uniform() {
        let g = SingletGraph::new(3, &[(0, 1), (1, 2)], 0, 2).unwrap();
        for outcome in BellState::ALL {
            let trace = Trace {
                ops: vec![TraceOp::BellMeasure {
                    first: QubitId { edge: 0, node: 1 },
                    second: QubitId { edge: 1, node: 1 },
                    outcome,
                }],
                outputs: vec![QubitId { edge: 0, node: 0 }, QubitId { edge: 1, node: 2 }],
            };
            let r = replay_trace_in_oracle(&trace, &g).unwrap();
            assert!((r.probabilities[0] - 0.25).abs() < 1e-12);
            let want = KetState::bell(outcome).to_density();
            assert!(r.state.max_abs_diff(&want) < 1e-12, "{outcome:?}");
        }
    }

    #[test]
    fn rejects_foreign_qubits_and_cap() {
        let g = SingletGraph::new(3, &[(0, 1), (1, 2)], 0, 2).unwrap();
        let bad = Trace {
            ops: vec![TraceOp::X { qubit: QubitId { edge: 0, node: 2 } }],
            outputs: vec![],
        };
        assert!(replay_trace_in_oracle(&bad, &g).is_err());
        let edges: Vec<(usize, usize)> = (0..6).map(|i| (i, i + 1)).collect();
        let g = SingletGraph::new(7, &edges, 0, 6).unwrap();
        let wide = Trace {
            ops: vec![],
            outputs: (0..6).map(|e| QubitId { edge: e, node: e }).collect(),
        };
        assert!(matches!(replay_trace_in_oracle(&wide, &g), Err(Error::QubitCapExceeded { .. })));
    }
}

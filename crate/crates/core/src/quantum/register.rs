use super::{CMatrix, C64, MAX_QUBITS};
use crate::error::{Error, Result};

/// Index bookkeeping for an operator embedded on `targets` of an
/// `num_qubits` register.
#[derive(Debug, Clone)]
pub(crate) struct Embedding {
    /// Full-register offset of each local index.
    pub offsets: Vec<usize>,
    /// Full-register indices with every target bit cleared.
    pub bases: Vec<usize>,
}

impl Embedding {
    pub fn new(num_qubits: usize, targets: &[usize]) -> Result<Self> {
        let bad = || Error::BadQubitIndices {
            indices: targets.to_vec(),
            num_qubits,
        };
        if targets.is_empty() || targets.iter().any(|&t| t >= num_qubits) {
            return Err(bad());
        }
        let mut mask = 0usize;
        for &t in targets {
            let bit = 1 << (num_qubits - 1 - t);
            if mask & bit != 0 {
                return Err(bad());
            }
            mask |= bit;
        }
        let k = targets.len();
        let offsets = (0..1usize << k)
            .map(|local| {
                targets.iter().enumerate().fold(0, |acc, (j, &t)| {
                    let b = (local >> (k - 1 - j)) & 1;
                    acc | (b << (num_qubits - 1 - t))
                })
            })
            .collect();
        let bases = (0..1usize << num_qubits).filter(|i| i & mask == 0).collect();
        Ok(Self { offsets, bases })
    }

    pub fn local_dim(&self) -> usize {
        self.offsets.len()
    }
}

pub(crate) fn check_num_qubits(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 {
        return Err(Error::UnsupportedSize("zero-qubit register".into()));
    }
    if num_qubits > MAX_QUBITS {
        return Err(Error::QubitCapExceeded {
            requested: num_qubits,
            cap: MAX_QUBITS,
        });
    }
    Ok(())
}

/// `m ← (op ⊗ I) m` with `op` embedded per `emb`.
pub(crate) fn left_apply(m: &mut CMatrix, op: &CMatrix, emb: &Embedding) {
    let d = emb.local_dim();
    let mut buf = vec![C64::new(0.0, 0.0); d];
    let mut out = vec![C64::new(0.0, 0.0); d];
    for col in 0..m.ncols() {
        for &base in &emb.bases {
            for (l, slot) in buf.iter_mut().enumerate() {
                *slot = m[(base | emb.offsets[l], col)];
            }
            for (r, slot) in out.iter_mut().enumerate() {
                *slot = (0..d).map(|l| op[(r, l)] * buf[l]).sum();
            }
            for (r, v) in out.iter().enumerate() {
                m[(base | emb.offsets[r], col)] = *v;
            }
        }
    }
}

/// `m ← m (op ⊗ I)†` with `op` embedded per `emb`.
pub(crate) fn right_apply_adjoint(m: &mut CMatrix, op: &CMatrix, emb: &Embedding) {
    let d = emb.local_dim();
    let mut buf = vec![C64::new(0.0, 0.0); d];
    let mut out = vec![C64::new(0.0, 0.0); d];
    for row in 0..m.nrows() {
        for &base in &emb.bases {
            for (l, slot) in buf.iter_mut().enumerate() {
                *slot = m[(row, base | emb.offsets[l])];
            }
            for (r, slot) in out.iter_mut().enumerate() {
                *slot = (0..d).map(|l| buf[l] * op[(r, l)].conj()).sum();
            }
            for (r, v) in out.iter().enumerate() {
                m[(row, base | emb.offsets[r])] = *v;
            }
        }
    }
}

/// `v ← (op ⊗ I) v` for a state vector.
pub(crate) fn apply_to_vector(v: &mut [C64], op: &CMatrix, emb: &Embedding) {
    let d = emb.local_dim();
    let mut buf = vec![C64::new(0.0, 0.0); d];
    for &base in &emb.bases {
        for (l, slot) in buf.iter_mut().enumerate() {
            *slot = v[base | emb.offsets[l]];
        }
        for r in 0..d {
            v[base | emb.offsets[r]] = (0..d).map(|l| op[(r, l)] * buf[l]).sum();
        }
    }
}

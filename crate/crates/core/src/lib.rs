//! Perfect-singlet generation in networks of mixed two-qubit states.
//!
//! The crate is organised bottom-up:
//!
//! * [`quantum`]: a dense density-matrix simulator used as the ground truth
//!   for every closed-form expression, plus the two-qubit range classifier.
//! * [`protocols`]: closed forms for the two-edge protocols: pure-state
//!   conversion measurement (PCM), Procrustean filtering, entanglement
//!   swapping and majorization-based conversions.
//! * [`distillation`]: multi-copy distillation: the distillable-subspace
//!   (DSS) POVM scheme and the pairwise / three-state recycling schemes.
//! * [`percolation`]: Monte Carlo bond percolation on regular lattices.
//! * [`routing`]: controller, burning and GHZ routing over singlet graphs.
//! * [`strategies`]: swapping strategies, the square protocol and
//!   hierarchical networks.
//! * [`verify`]: closed forms checked against the oracle on random draws.

pub mod distillation;
pub mod error;
pub mod percolation;
pub mod protocols;
pub mod quantum;
pub mod rng;
pub mod routing;
pub mod strategies;
pub mod verify;

pub use error::{Error, Result};

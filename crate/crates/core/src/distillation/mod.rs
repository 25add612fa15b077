//! Multi-copy bond distillation: the distillable-subspace (DSS) measurement
//! and the recycling schemes built on PCM and DSS-3.

mod dss;
mod recycling;

pub use dss::{
    a_qubits, b_qubits, compress_success, cross_terms, dss_branches, dss_branches_of, dss_build_measurement,
    dss_simulate, dss_success_prob, interleave, pms_copies, shift_set, AOutcome, DssBranch, DssMeasurement,
    DssSimulation, DSS_MAX_ANALYTIC_N, DSS_MAX_SIMULATED_N,
};
pub use recycling::{
    extract_recyclable, pms_fit, recycle_update, recycling_branch_probs, recycling_fail_prob, recycling_scp,
    recycling_scp_three, BranchProbs, McEstimate, RecyclingState,
};

/// Distillation scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Recycling,
    Dss,
}

/// Analytic SCP of `n` copies under `scheme`.
pub fn scheme_scp(scheme: Scheme, n: usize, alpha: f64, lambda: f64) -> crate::Result<f64> {
    match scheme {
        Scheme::Recycling => recycling_scp(n, alpha, lambda),
        Scheme::Dss => dss_success_prob(n, alpha, lambda),
    }
}

//! Constructive simulations between the proof systems, plus explicit
//! refutations of the parity-substituted induction and Stone formulas.

use thiserror::Error;

use crate::cdcl::CdclError;
use crate::cnf::CnfError;
use crate::resproof::ProofError;

mod cdcl_half;
mod cdcl_p0;
mod deletion;
mod explicit;
mod ordered;
mod p0ops;
mod psim;
mod weakening;

pub use cdcl_half::{cdcl_to_half, half_to_cdcl, half_to_cdcl_proof};
pub use cdcl_p0::{cdcl_from_p0, p0_from_cdcl};
pub use deletion::{delete_vars, DeletionReport};
pub use explicit::{ind_chain, parallel_order, refute_ind_xor2, refute_stone, refute_stone_with_report, StoneReport};
pub use ordered::half_to_ordered;
pub use psim::{all_lits_from_refutation, find_axiom_with_literal, lift, psim, psim_with_report, LiftMap, PsimReport, PSIM_CALL_BUDGET};
pub use weakening::{p0w_simulate, weakening_step, WeakeningFragment};

/// Measured size constants, used for reporting: `|p0w| ≤ P0W_K·n²·|Π|` and
/// `|psim| ≤ PSIM_K·n²·|τ|·|Π|`.
pub const P0W_K: f64 = 4.0;
pub const PSIM_K: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal audit failed at stage {stage}: {detail}")]
    Audit { stage: usize, detail: String },
    #[error("step budget exhausted")]
    Budget,
    #[error(transparent)]
    Proof(#[from] ProofError),
    #[error(transparent)]
    Cdcl(#[from] CdclError),
    #[error(transparent)]
    Cnf(#[from] CnfError),
}

fn audit(stage: usize, detail: impl Into<String>) -> TransformError {
    TransformError::Audit { stage, detail: detail.into() }
}

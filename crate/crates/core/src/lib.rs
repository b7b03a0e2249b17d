//! Clause-learning transition systems, ordered and half-ordered resolution,
//! and the two-typed P0 proof system, together with checkers and the
//! constructive simulations between them.

pub mod cdcl;
pub mod cnf;
pub mod format;
pub mod oracle;
pub mod p0;
pub mod report;
pub mod resproof;
pub mod transforms;
pub mod width;

pub use cnf::{Clause, Cnf, CnfError, Lit, PointedGraph, Restriction, Var, VarOrder};
pub use report::{CheckReport, Violation, ViolationCode};
pub use resproof::{ProofError, ProofNode, ResolutionProof, Rule};

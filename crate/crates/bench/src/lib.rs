//! Fixtures shared by the benchmarks.

use trailproof::cnf::{gen_induction, gen_random_kcnf, Cnf, VarOrder};
use trailproof::oracle::{dpll_sat, saturate, OracleBudget};
use trailproof::resproof::ResolutionProof;

/// The first unsatisfiable random 3-CNF on `n` variables at clause density 6,
/// with its saturation refutation.
pub fn unsat_3cnf(n: u32) -> (Cnf, ResolutionProof) {
    (0u64..)
        .find_map(|seed| {
            let tau = gen_random_kcnf(n, 6 * n as usize, 3, seed).ok()?;
            if dpll_sat(&tau) {
                return None;
            }
            Some((tau.clone(), saturate(&tau, OracleBudget::default()).ok()?.proof()?))
        })
        .expect("density 6 is unsatisfiable often enough")
}

/// The induction formula on `n` variables with its saturation refutation.
pub fn induction(n: u32) -> (Cnf, ResolutionProof) {
    let tau = gen_induction(n).expect("n >= 1");
    let pi = saturate(&tau, OracleBudget::default()).expect("in budget").proof().expect("unsatisfiable");
    (tau, pi)
}

pub fn identity(tau: &Cnf) -> VarOrder {
    VarOrder::identity(tau.num_vars())
}

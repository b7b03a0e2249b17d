//! Corpus generators shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trailproof::cdcl::{Assign, Trail};
use trailproof::cnf::{gen_random_kcnf, Clause, Cnf, Lit, Var, VarOrder};
use trailproof::oracle::{dpll_sat, saturate, OracleBudget};
use trailproof::resproof::ResolutionProof;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_order(n: u32, r: &mut impl Rng) -> VarOrder {
    let mut seq: Vec<Var> = (1..=n).collect();
    seq.shuffle(r);
    VarOrder::from_sequence(&seq).unwrap()
}

/// An unsatisfiable random 3-CNF on `n` variables with its saturation
/// refutation, or `None` when the draw is satisfiable.
pub fn unsat_3cnf(n: u32, seed: u64) -> Option<(Cnf, ResolutionProof)> {
    let tau = gen_random_kcnf(n, 6 * n as usize, 3.min(n), seed).unwrap();
    if dpll_sat(&tau) {
        return None;
    }
    let pi = saturate(&tau, OracleBudget::default()).unwrap().proof()?;
    Some((tau, pi))
}

/// The first `count` unsatisfiable draws with `n` cycling through `ns`.
pub fn unsat_corpus(ns: &[u32], count: usize) -> Vec<(Cnf, ResolutionProof)> {
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < count {
        let n = ns[seed as usize % ns.len()];
        if let Some(x) = unsat_3cnf(n, seed) {
            out.push(x);
        }
        seed += 1;
    }
    out
}

/// Premises of a weakening step: `(C ∨ x, D ∨ x̄, t, E, π)` with `t` a run
/// of π-ordered decisions, `x` unassigned, `E|_t = 0` and `(C ∨ D)|_t ≠ 1`.
pub fn weakening_input(r: &mut impl Rng) -> (Clause, Clause, Trail, Clause, VarOrder) {
    let n = r.gen_range(2..=9u32);
    let order = random_order(n, r);
    let j = r.gen_range(1..n) as usize;
    let assigned: Vec<(Var, bool)> = order.sequence()[..j].iter().map(|&v| (v, r.gen_bool(0.5))).collect();
    let t = Trail::from_assigns(n, assigned.iter().map(|&(v, b)| Assign::d(v, b))).unwrap();
    let free: Vec<Var> = order.sequence()[j..].to_vec();
    let x = *free.choose(r).unwrap();
    let e: Vec<Lit> = assigned.iter().filter(|_| r.gen_bool(0.5)).map(|&(v, b)| Lit::new(v, !b)).collect();
    let e = if e.is_empty() { vec![Lit::new(assigned[0].0, !assigned[0].1)] } else { e };
    // A common pool of literals keeps C and D from clashing.
    let pool: Vec<Lit> = (1..=n)
        .filter(|&v| v != x)
        .filter_map(|v| match t.value(v) {
            Some(b) => r.gen_bool(0.5).then(|| Lit::new(v, !b)),
            None => r.gen_bool(0.7).then(|| Lit::new(v, r.gen_bool(0.5))),
        })
        .collect();
    let c: Vec<Lit> = pool.iter().copied().filter(|_| r.gen_bool(0.6)).chain([Lit::pos(x)]).collect();
    let d: Vec<Lit> = pool.iter().copied().filter(|_| r.gen_bool(0.6)).chain([Lit::neg(x)]).collect();
    (Clause::new(c).unwrap(), Clause::new(d).unwrap(), t, Clause::new(e).unwrap(), order)
}

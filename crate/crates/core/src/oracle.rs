//! Brute-force ground truth: breadth-first resolution saturation, DPLL and
//! minimum ordered width. Kept naive on purpose.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{Clause, Cnf, Lit, Var, VarOrder};
use crate::resproof::ResolutionProof;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("the oracle handles at most 64 variables, got {0}")]
    TooManyVars(u32),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct OracleBudget {
    pub max_clauses: usize,
    pub max_width: Option<usize>,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { max_clauses: 200_000, max_width: None }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Saturation {
    Refutation(ResolutionProof),
    /// Closed under resolution up to subsumption without deriving `0`;
    /// carries the number of kept clauses.
    Closed(usize),
    BudgetExceeded(usize),
}

impl Saturation {
    pub fn proof(self) -> Option<ResolutionProof> {
        match self {
            Saturation::Refutation(p) => Some(p),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
struct Bits {
    pos: u64,
    neg: u64,
}

impl Bits {
    fn of(c: &Clause) -> Bits {
        let mut b = Bits { pos: 0, neg: 0 };
        for l in c.lits() {
            let bit = 1u64 << (l.var() - 1);
            if l.is_positive() {
                b.pos |= bit;
            } else {
                b.neg |= bit;
            }
        }
        b
    }

    fn to_clause(self) -> Clause {
        let mut lits = Vec::new();
        for i in 0..64u32 {
            if self.pos >> i & 1 == 1 {
                lits.push(Lit::pos(i + 1));
            }
            if self.neg >> i & 1 == 1 {
                lits.push(Lit::neg(i + 1));
            }
        }
        Clause::new(lits).expect("bit clauses are consistent")
    }

    fn width(self) -> usize {
        (self.pos.count_ones() + self.neg.count_ones()) as usize
    }

    fn resolve(self, o: Bits) -> Option<(Var, Bits)> {
        let clash = (self.pos & o.neg) | (self.neg & o.pos);
        if clash.count_ones() != 1 {
            return None;
        }
        let pivot = clash.trailing_zeros() + 1;
        Some((pivot, Bits { pos: (self.pos | o.pos) & !clash, neg: (self.neg | o.neg) & !clash }))
    }
}

#[derive(Clone, Copy)]
enum Origin {
    Axiom,
    Res(usize, usize, Var),
}

fn lit_index(var0: u32, positive: bool) -> usize {
    (var0 as usize) * 2 + positive as usize
}

/// Breadth-first saturation: every clause is paired with all earlier
/// clauses it clashes with, clauses subsumed by a kept clause are dropped,
/// and the first `0` is extracted into a proof.
pub fn saturate(tau: &Cnf, budget: OracleBudget) -> Result<Saturation, OracleError> {
    saturate_filtered(tau, budget, |_, _, _| true)
}

fn saturate_filtered<F>(tau: &Cnf, budget: OracleBudget, admit: F) -> Result<Saturation, OracleError>
where
    F: Fn(Bits, Bits, Var) -> bool,
{
    if tau.num_vars() > 64 {
        return Err(OracleError::TooManyVars(tau.num_vars()));
    }
    let mut clauses: Vec<Bits> = Vec::new();
    let mut origin: Vec<Origin> = Vec::new();
    let mut seen: HashMap<Bits, usize> = HashMap::new();
    let mut occurs: Vec<Vec<usize>> = vec![Vec::new(); 128];
    let width_ok = |b: Bits| budget.max_width.is_none_or(|w| b.width() <= w);

    let mut add = |b: Bits, o: Origin, clauses: &mut Vec<Bits>, origin: &mut Vec<Origin>, occurs: &mut Vec<Vec<usize>>| -> Option<usize> {
        // Forward subsumption: a clause containing a kept clause is dropped.
        if seen.contains_key(&b) || clauses.iter().any(|c| c.pos & !b.pos == 0 && c.neg & !b.neg == 0) {
            return None;
        }
        let id = clauses.len();
        seen.insert(b, id);
        clauses.push(b);
        origin.push(o);
        for i in 0..64u32 {
            if b.pos >> i & 1 == 1 {
                occurs[lit_index(i, true)].push(id);
            }
            if b.neg >> i & 1 == 1 {
                occurs[lit_index(i, false)].push(id);
            }
        }
        Some(id)
    };

    for c in tau.clauses() {
        let b = Bits::of(c);
        if !width_ok(b) {
            continue;
        }
        if let Some(id) = add(b, Origin::Axiom, &mut clauses, &mut origin, &mut occurs) {
            if b.width() == 0 {
                return Ok(Saturation::Refutation(extract(&clauses, &origin, id, tau.num_vars())));
            }
        }
    }
    let mut i = 0;
    while i < clauses.len() {
        let bi = clauses[i];
        let mut partners: Vec<usize> = Vec::new();
        for v in 0..64u32 {
            if bi.pos >> v & 1 == 1 {
                partners.extend(occurs[lit_index(v, false)].iter().copied().filter(|&j| j < i));
            }
            if bi.neg >> v & 1 == 1 {
                partners.extend(occurs[lit_index(v, true)].iter().copied().filter(|&j| j < i));
            }
        }
        partners.sort_unstable();
        partners.dedup();
        for j in partners {
            let bj = clauses[j];
            if let Some((pivot, r)) = bj.resolve(bi) {
                if !width_ok(r) || !admit(bj, bi, pivot) {
                    continue;
                }
                if let Some(id) = add(r, Origin::Res(j, i, pivot), &mut clauses, &mut origin, &mut occurs) {
                    if r.width() == 0 {
                        return Ok(Saturation::Refutation(extract(&clauses, &origin, id, tau.num_vars())));
                    }
                    if clauses.len() > budget.max_clauses {
                        return Ok(Saturation::BudgetExceeded(clauses.len()));
                    }
                }
            }
        }
        i += 1;
    }
    Ok(Saturation::Closed(clauses.len()))
}

fn extract(clauses: &[Bits], origin: &[Origin], root: usize, n: u32) -> ResolutionProof {
    let mut needed = vec![false; root + 1];
    needed[root] = true;
    for v in (0..=root).rev() {
        if needed[v] {
            if let Origin::Res(a, b, _) = origin[v] {
                needed[a] = true;
                needed[b] = true;
            }
        }
    }
    let mut map = vec![usize::MAX; root + 1];
    let mut pi = ResolutionProof::new(n);
    for v in 0..=root {
        if !needed[v] {
            continue;
        }
        map[v] = match origin[v] {
            Origin::Axiom => pi.push_axiom(clauses[v].to_clause()),
            Origin::Res(a, b, p) => pi.push_resolution(map[a], map[b], p).expect("saturation records valid resolutions"),
        };
    }
    pi
}

/// Exact satisfiability by DPLL with unit propagation.
pub fn dpll_sat(tau: &Cnf) -> bool {
    dpll_model(tau).is_some()
}

/// A satisfying assignment (`x_i` at index `i-1`), if one exists.
pub fn dpll_model(tau: &Cnf) -> Option<Vec<bool>> {
    let mut assign: Vec<Option<bool>> = vec![None; tau.num_vars() as usize + 1];
    if dpll_rec(tau.clauses(), &mut assign) {
        Some(assign[1..].iter().map(|a| a.unwrap_or(false)).collect())
    } else {
        None
    }
}

pub fn dpll_sat_clauses(clauses: &[Clause], num_vars: u32) -> bool {
    let mut assign: Vec<Option<bool>> = vec![None; num_vars as usize + 1];
    dpll_rec(clauses, &mut assign)
}

fn dpll_rec(clauses: &[Clause], assign: &mut Vec<Option<bool>>) -> bool {
    let mut trail: Vec<Var> = Vec::new();
    loop {
        let mut unit: Option<Lit> = None;
        let mut all_sat = true;
        for c in clauses {
            let mut free = None;
            let mut free_count = 0;
            let mut sat = false;
            for &l in c.lits() {
                match assign[l.var() as usize] {
                    Some(a) if a == l.is_positive() => {
                        sat = true;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        free_count += 1;
                        free = Some(l);
                    }
                }
            }
            if sat {
                continue;
            }
            all_sat = false;
            if free_count == 0 {
                for v in trail {
                    assign[v as usize] = None;
                }
                return false;
            }
            if free_count == 1 && unit.is_none() {
                unit = free;
            }
        }
        if all_sat {
            return true;
        }
        match unit {
            Some(l) => {
                assign[l.var() as usize] = Some(l.is_positive());
                trail.push(l.var());
            }
            None => break,
        }
    }
    let branch = clauses
        .iter()
        .filter(|c| !c.is_satisfied_by(|v| assign[v as usize]))
        .flat_map(|c| c.vars())
        .find(|&v| assign[v as usize].is_none());
    let Some(v) = branch else {
        for v in trail {
            assign[v as usize] = None;
        }
        return false;
    };
    for val in [false, true] {
        assign[v as usize] = Some(val);
        if dpll_rec(clauses, assign) {
            return true;
        }
        assign[v as usize] = None;
    }
    for v in trail {
        assign[v as usize] = None;
    }
    false
}

/// Smallest `w` such that some π-ordered refutation of width `≤ w` exists,
/// found by width-bounded ordered saturation. `None` if satisfiable or the
/// budget runs out.
pub fn min_ordered_width(tau: &Cnf, order: &VarOrder, budget: OracleBudget) -> Result<Option<usize>, OracleError> {
    let rank: Vec<u32> = (0..=tau.num_vars()).map(|v| if v == 0 { 0 } else { order.rank(v) }).collect();
    let below = move |b: Bits, pivot: Var| {
        let pr = rank[pivot as usize];
        let mask = b.pos | b.neg;
        (0..64u32).all(|i| mask >> i & 1 == 0 || i + 1 == pivot || rank[i as usize + 1] < pr)
    };
    for w in 0..=tau.num_vars() as usize {
        let b = OracleBudget { max_clauses: budget.max_clauses, max_width: Some(w) };
        match saturate_filtered(tau, b, |x, y, p| below(x, p) && below(y, p))? {
            Saturation::Refutation(_) => return Ok(Some(w)),
            Saturation::BudgetExceeded(_) => return Ok(None),
            Saturation::Closed(_) => {}
        }
    }
    Ok(None)
}

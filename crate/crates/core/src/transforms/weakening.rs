//! π-P₀ with weakening simulates resolution.

use std::collections::BTreeMap;

use crate::cdcl::{Ann, Assign, Trail};
use crate::cnf::{Clause, Cnf, Lit, Restriction, VarOrder};
use crate::p0::{check_p0, check_p0_refutation, P0Builder, P0Proof};
use crate::resproof::{check_resolution, connected_core, restrict_proof, ResolutionProof, Rule};

use super::p0ops::half_res;
use super::{audit, TransformError};

/// A weakening step together with the index of its first new line.
#[derive(Clone, Debug)]
pub struct WeakeningFragment {
    pub proof: P0Proof,
    pub start: usize,
    /// The line holding `C ∨ D`.
    pub line: usize,
}

impl WeakeningFragment {
    pub fn fragment_len(&self) -> usize {
        self.proof.len() - self.start
    }
}

/// Derives `C ∨ D` from lines `l1 = C ∨ x`, `l2 = D ∨ x̄`, trail line `t` and
/// line `le = E` with `E|_t = 0`, by weakening `E` into units for every
/// unassigned literal of the resolvent and finally for `x̄`.
pub(crate) fn weakening_step_in(b: &mut P0Builder, l1: usize, l2: usize, t: Option<usize>, le: usize) -> Result<usize, TransformError> {
    let (x, res) = b
        .clause(l1)
        .resolve_any(b.clause(l2))
        .ok_or_else(|| TransformError::Precondition(format!("{} and {} do not resolve", b.clause(l1), b.clause(l2))))?;
    let trail = b.trail_of(t);
    if trail.satisfies(&res) {
        return Err(TransformError::Precondition(format!("{res} is satisfied by {trail}")));
    }
    if trail.contains_var(x) {
        return Err(TransformError::Precondition(format!("x{x} is assigned by {trail}")));
    }
    let e = b.clause(le).clone();
    if !trail.falsifies(&e) {
        return Err(TransformError::Precondition(format!("{e} is not falsified by {trail}")));
    }
    if let Some(id) = b.line_of(&res) {
        return Ok(id);
    }
    let order = b.order().clone();
    let mut open: Vec<Lit> = res.lits().iter().copied().filter(|l| !trail.contains_var(l.var())).collect();
    open.sort_by_key(|l| order.rank(l.var()));
    open.push(Lit::pos(x));
    let mut cur = t;
    for ell in open {
        let w = b.weaken(le, e.with_lit(ell.negated()).expect("E avoids unassigned variables"));
        cur = Some(b.extend(cur, Assign::u(ell.var(), !ell.is_positive()), Some(w)));
    }
    Ok(b.learn(l1, l2, cur.expect("the pivot is on the trail")))
}

/// A stand-alone derivation of `C ∨ D` from `cx`, `dx`, `e` and trail `t`.
/// The proof starts with the three premises as axioms and the lines of `t`;
/// `u` entries of `t` must be propagated by one of the premises.
pub fn weakening_step(cx: &Clause, dx: &Clause, t: &Trail, e: &Clause, order: &VarOrder) -> Result<WeakeningFragment, TransformError> {
    let n = order.n();
    if t.num_vars() != n {
        return Err(TransformError::InvalidInput("trail and order disagree on n".into()));
    }
    let axioms = Cnf::new(n, [cx.clone(), dx.clone(), e.clone()]).map_err(|e| TransformError::InvalidInput(e.to_string()))?;
    let mut b = P0Builder::new(axioms, order.clone()).with_weakening();
    let lines = [b.axiom(cx), b.axiom(dx), b.axiom(e)];
    let mut cur = None;
    for &a in t.assigns() {
        let unit = match a.ann {
            Ann::D => None,
            Ann::U => {
                let prefix = b.trail_of(cur);
                let found = lines.iter().copied().find(|&l| prefix.unit_of(b.clause(l)) == Some(a.lit()));
                Some(found.ok_or_else(|| TransformError::InvalidInput(format!("no premise propagates {}", a.lit())))?)
            }
        };
        cur = Some(b.extend(cur, a, unit));
    }
    if !check_p0(b.proof()).valid {
        return Err(TransformError::InvalidInput(format!("{t} is not a π-P₀ trail")));
    }
    let start = b.len();
    let line = weakening_step_in(&mut b, lines[0], lines[1], cur, lines[2])?;
    let proof = b.finish();
    let report = check_p0(&proof);
    if !report.valid {
        return Err(audit(0, format!("weakening step rejected: {report:?}")));
    }
    let frag = WeakeningFragment { proof, start, line };
    if frag.fragment_len() > 2 * n as usize + 1 {
        return Err(audit(0, format!("{} lines exceed 2n + 1", frag.fragment_len())));
    }
    Ok(frag)
}

/// The prefix clause `x_{π(1)} ∨ … ∨ x_{π(i)}`.
fn prefix_clause(order: &VarOrder, i: usize) -> Clause {
    Clause::new(order.sequence()[..i].iter().map(|&v| Lit::pos(v))).expect("distinct variables")
}

/// A π-P₀ refutation with weakening of `tau`, obtained by deriving the
/// prefix clauses `C_n, …, C_0 = 0` in turn. `C_i` comes from the
/// restriction of `pi` by `C_i = 0, x_{π(i+1)} = 1`, lifted by `C_i`.
pub fn p0w_simulate(pi: &ResolutionProof, tau: &Cnf, order: &VarOrder) -> Result<P0Proof, TransformError> {
    if order.n() != tau.num_vars() {
        return Err(TransformError::InvalidInput("order and formula disagree on n".into()));
    }
    if !check_resolution(pi, tau).valid || !pi.is_refutation() {
        return Err(TransformError::InvalidInput("not a resolution refutation of the formula".into()));
    }
    let n = order.n() as usize;
    let mut b = P0Builder::new(tau.clone(), order.clone()).with_weakening();
    let cn = prefix_clause(order, n);
    let positive = tau
        .clauses()
        .iter()
        .find(|c| c.lits().iter().all(|l| l.is_positive()))
        .ok_or_else(|| TransformError::InvalidInput("every clause has a negative literal".into()))?;
    let mut next = b.axiom(positive);
    if *positive != cn {
        next = b.weaken(next, cn);
    }
    for i in (0..n).rev() {
        let y = order.sequence()[i];
        let ci = prefix_clause(order, i);
        let rho = Restriction::from_pairs(order.sequence()[..i].iter().map(|&v| (v, false)).chain([(y, true)])).expect("distinct variables");
        let (restricted, rmap) = restrict_proof(pi, &rho);
        let mut origin: BTreeMap<usize, usize> = BTreeMap::new();
        for (v, m) in rmap.iter().enumerate() {
            if let (Rule::Axiom, Some(m)) = (pi.rule(v), m) {
                origin.entry(*m).or_insert(v);
            }
        }
        let (core, cmap) = connected_core(&restricted)?;
        let mut core_origin: BTreeMap<usize, &Clause> = BTreeMap::new();
        for (m, v) in &origin {
            if let Some(c) = cmap[*m] {
                core_origin.entry(c).or_insert(pi.clause(*v));
            }
        }
        let t0 = Some(b.decide(None, y, false));
        let lift = |c: &Clause| c.union(&ci).expect("restricted clauses avoid the prefix");
        let mut line = vec![usize::MAX; core.len()];
        for v in 0..core.len() {
            let target = lift(core.clause(v));
            line[v] = match core.rule(v) {
                Rule::Axiom => {
                    let a = core_origin[&v];
                    let la = b.axiom(a);
                    if a.contains(Lit::neg(y)) {
                        half_res(&mut b, la, next)?
                    } else if *a == target {
                        la
                    } else {
                        b.weaken(la, target.clone())
                    }
                }
                Rule::Weakening { p } => b.weaken(line[p], target.clone()),
                Rule::Resolution { p1, p2, .. } => weakening_step_in(&mut b, line[p1], line[p2], t0, next)?,
            };
            if *b.clause(line[v]) != target {
                return Err(audit(i, format!("lifted node {v} holds {} instead of {target}", b.clause(line[v]))));
            }
        }
        next = *line.last().expect("a refutation is non-empty");
    }
    let proof = b.finish();
    let report = check_p0_refutation(&proof);
    if !report.valid {
        return Err(audit(0, format!("output rejected: {report:?}")));
    }
    Ok(proof)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cl(xs: &[i64]) -> Clause {
        Clause::from_dimacs(xs).unwrap()
    }

    #[test]
    fn already_falsified_resolvent_takes_three_lines() {
        let order = VarOrder::identity(3);
        let t = Trail::from_assigns(3, [Assign::d(1, false), Assign::d(2, true)]).unwrap();
        let f = weakening_step(&cl(&[1, 3]), &cl(&[-2, -3]), &t, &cl(&[1]), &order).unwrap();
        assert_eq!(f.fragment_len(), 3);
        assert_eq!(*f.proof.lines[f.line].clause().unwrap(), cl(&[1, -2]));
    }

    #[test]
    fn empty_trail_uses_every_variable() {
        let order = VarOrder::identity(4);
        let t = Trail::new(4);
        let f = weakening_step(&cl(&[1, 2, 4]), &cl(&[3, -4]), &t, &Clause::empty(), &order).unwrap();
        // k = 3 open literals plus the pivot.
        assert_eq!(f.fragment_len(), 2 * (3 + 1) + 1);
    }

    #[test]
    fn preconditions_are_checked() {
        let order = VarOrder::identity(2);
        let t = Trail::from_assigns(2, [Assign::d(1, true)]).unwrap();
        assert!(weakening_step(&cl(&[1, 2]), &cl(&[-2]), &t, &cl(&[-1]), &order).is_err());
        let t = Trail::from_assigns(2, [Assign::d(1, false)]).unwrap();
        assert!(weakening_step(&cl(&[2]), &cl(&[-2]), &t, &cl(&[2]), &order).is_err());
    }

    #[test]
    fn single_variable_contradiction() {
        let tau = Cnf::new(1, [cl(&[1]), cl(&[-1])]).unwrap();
        let mut pi = ResolutionProof::new(1);
        let a = pi.push_axiom(cl(&[1]));
        let b = pi.push_axiom(cl(&[-1]));
        pi.push_resolution(a, b, 1).unwrap();
        let p = p0w_simulate(&pi, &tau, &VarOrder::identity(1)).unwrap();
        assert!(p.is_refutation());
    }

    #[test]
    fn induction_under_both_orders() {
        for n in 2..=6u32 {
            let tau = crate::cnf::gen_induction(n).unwrap();
            let mut pi = ResolutionProof::new(n);
            let mut cur = pi.push_axiom(cl(&[1]));
            for i in 1..n as i64 {
                let ax = pi.push_axiom(cl(&[-i, i + 1]));
                cur = pi.push_resolution(cur, ax, i as u32).unwrap();
            }
            let last = pi.push_axiom(cl(&[-(n as i64)]));
            pi.push_resolution(cur, last, n).unwrap();
            for order in [VarOrder::identity(n), VarOrder::from_sequence(&(1..=n).rev().collect::<Vec<_>>()).unwrap()] {
                let p = p0w_simulate(&pi, &tau, &order).unwrap();
                assert!(p.allow_weakening);
                let bound = (n * n) as usize * pi.len();
                assert!(p.len() <= 4 * bound, "n = {n}: {} lines", p.len());
            }
        }
    }

    #[test]
    fn random_3cnf_refutations() {
        use crate::oracle::{dpll_sat, saturate, OracleBudget};
        let mut done = 0;
        let mut worst = 0.0f64;
        for seed in 0..150u64 {
            let n = 4 + (seed % 5) as u32;
            let tau = crate::cnf::gen_random_kcnf(n, (n as usize) * 6, 3, seed).unwrap();
            if dpll_sat(&tau) {
                continue;
            }
            let Some(pi) = saturate(&tau, OracleBudget::default()).unwrap().proof() else { continue };
            let seq: Vec<u32> = (0..n).map(|i| (i + seed as u32) % n + 1).collect();
            let order = VarOrder::from_sequence(&seq).unwrap();
            let p = p0w_simulate(&pi, &tau, &order).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            assert!(p.is_refutation());
            worst = worst.max(p.len() as f64 / ((n * n) as f64 * pi.len() as f64));
            done += 1;
        }
        assert!(done > 40, "{done}");
        assert!(worst < 4.0, "{worst}");
        println!("worst p0w constant {worst:.3}");
    }
}

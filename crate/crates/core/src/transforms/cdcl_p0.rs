//! CDCL(π-D) runs and π-P₀ proofs, in both directions.

use crate::cdcl::{verify_run, Action, Ann, Amendments, Assign, CdclState, RunTrace};
use crate::cnf::{Clause, Lit, VarOrder};
use crate::p0::{check_p0, P0Builder, P0Line, P0Proof};

use super::{audit, TransformError};

/// Replays a π-D run in π-P₀: every trail the run visits becomes a chain of
/// trail lines, and every learned clause is rederived from its witness with
/// the Learning rule on the trail at that point.
pub fn p0_from_cdcl(trace: &RunTrace, order: &VarOrder) -> Result<P0Proof, TransformError> {
    let rep = verify_run(trace, &Amendments::pi_d(order.clone()));
    if !rep.valid {
        return Err(TransformError::InvalidInput(format!("trace is not a valid π-D run: {:?}", rep.violation)));
    }
    let tau = &trace.cnf;
    let mut b = P0Builder::new(tau.clone(), order.clone());
    if tau.contains(&Clause::empty()) {
        b.axiom(&Clause::empty());
        return Ok(b.finish());
    }
    let mut st = CdclState::new(tau);
    // Trail line ids by position; `stack[k-1]` is the line of `t[≤ k]`.
    let mut stack: Vec<usize> = Vec::new();
    let line_for = |b: &mut P0Builder, st: &CdclState, c: &Clause| -> Result<usize, TransformError> {
        if let Some(id) = b.line_of(c) {
            return Ok(id);
        }
        if st.to_cnf().contains(c) && tau.contains(c) {
            return Ok(b.axiom(c));
        }
        Err(audit(0, format!("{c} has no clause line")))
    };
    for (step, s) in trace.steps.iter().enumerate() {
        match &s.action {
            Action::Decide { var, val } => {
                let id = b.extend(stack.last().copied(), Assign::d(*var, *val), None);
                stack.push(id);
            }
            Action::Unit { var, val, clause } => {
                let c = st.clause(*clause).ok_or_else(|| audit(step + 1, format!("no clause with id {clause}")))?.clone();
                let cl = line_for(&mut b, &st, &c)?;
                let id = b.extend(stack.last().copied(), Assign::u(*var, *val), Some(cl));
                stack.push(id);
            }
            Action::Learn { clause, keep } => {
                let w = st.learned_clause_witness(clause).map_err(|e| audit(step + 1, e.to_string()))?;
                let Some(&tl) = stack.last() else {
                    return Err(audit(step + 1, "learning on the empty trail"));
                };
                let mut cur = line_for(&mut b, &st, &w.conflict)?;
                for (_, c) in w.steps.iter().rev() {
                    let cl = line_for(&mut b, &st, c)?;
                    cur = b.learn(cl, cur, tl);
                }
                if b.clause(cur) != clause {
                    return Err(audit(step + 1, format!("witness derived {} instead of {clause}", b.clause(cur))));
                }
                stack.truncate(*keep);
            }
        }
        st.apply(&s.action);
        if st.has_empty_clause() {
            break;
        }
    }
    let p = b.finish();
    let rep = check_p0(&p);
    if !rep.valid {
        return Err(audit(trace.len(), format!("output rejected: {:?}", rep.violation)));
    }
    Ok(p)
}

/// Simulates a π-P₀ proof by a run valid under {π-D, FIRST-L}: each Learning
/// line rebuilds `t[< x_i]`, propagates `x_i`, decides up to a conflict on
/// the other premise and learns the resolvent.
pub fn cdcl_from_p0(p: &P0Proof) -> Result<RunTrace, TransformError> {
    let rep = check_p0(p);
    if !rep.valid {
        return Err(TransformError::InvalidInput(format!("not a valid π-P₀ proof: {:?}", rep.violation)));
    }
    if p.lines.iter().any(|l| matches!(l, P0Line::Weaken { .. })) {
        return Err(TransformError::InvalidInput("weakening lines have no CDCL counterpart".into()));
    }
    let tau = &p.axioms;
    let order = &p.order;
    let am = Amendments::pi_d(order.clone()).with_first_l();
    let mut st = CdclState::new(tau);
    let mut actions: Vec<Action> = Vec::new();
    if st.has_empty_clause() {
        return Ok(RunTrace::from_actions(tau, &actions));
    }
    for (i, line) in p.lines.iter().enumerate() {
        let P0Line::Learn { c1, c2, trail, clause } = line else { continue };
        if st.contains(clause) {
            continue;
        }
        let frag = learn_fragment(&st, p, *c1, *c2, *trail, &am).map_err(|e| match e {
            TransformError::Audit { detail, .. } => audit(i + 1, detail),
            e => e,
        })?;
        for a in &frag {
            st.apply(a);
        }
        actions.extend(frag);
        if st.has_empty_clause() {
            break;
        }
    }
    let trace = RunTrace::from_actions(tau, &actions);
    let rep = verify_run(&trace, &am);
    if !rep.valid {
        return Err(audit(actions.len(), format!("composed run rejected: {:?}", rep.violation)));
    }
    Ok(trace)
}

fn learn_fragment(start: &CdclState, p: &P0Proof, c1: usize, c2: usize, trail: usize, am: &Amendments) -> Result<Vec<Action>, TransformError> {
    let t = p.trail_of(trail);
    let (a, b) = (p.lines[c1].clause().expect("checked"), p.lines[c2].clause().expect("checked"));
    let (x, res) = a.resolve_any(b).expect("checked");
    let xv = t.value(x).expect("checked");
    let true_lit = Lit::with_value(x, xv);
    let (small, other) = if a.contains(true_lit) { (a, b) } else { (b, a) };
    let r = t.position(x).expect("checked") - 1;
    let mut st = start.clone();
    let mut actions = Vec::new();
    let mut step = |st: &mut CdclState, act: Action| -> Result<(), TransformError> {
        st.check_action(&act, am).map_err(|(_, d)| audit(0, format!("{act} rejected: {d}")))?;
        st.apply(&act);
        actions.push(act);
        Ok(())
    };
    for k in 1..=r {
        let asg = t.at(k);
        let act = match asg.ann {
            Ann::D => Action::Decide { var: asg.var, val: asg.val },
            Ann::U => {
                let id = st
                    .clauses()
                    .iter()
                    .position(|c| st.trail().unit_of(c) == Some(asg.lit()))
                    .ok_or_else(|| audit(0, format!("no clause propagates {}", asg.lit())))?;
                Action::Unit { var: asg.var, val: asg.val, clause: id + 1 }
            }
        };
        step(&mut st, act)?;
    }
    let small_id = st.clause_id(small).ok_or_else(|| audit(0, format!("{small} is not in the state")))?;
    step(&mut st, Action::Unit { var: x, val: xv, clause: small_id })?;
    let value = |v| other.polarity(v).is_some_and(|pol: bool| !pol);
    while !st.trail().falsifies(other) {
        let v = p.order.sequence().iter().copied().find(|&v| !st.trail().contains_var(v)).ok_or_else(|| audit(0, "ran out of variables"))?;
        if st.is_terminal() {
            break;
        }
        step(&mut st, Action::Decide { var: v, val: value(v) })?;
    }
    let learn = Action::Learn { clause: res, keep: 0 };
    if st.check_action(&learn, am).is_ok() {
        actions.push(learn);
    } else {
        let zero = Action::Learn { clause: Clause::empty(), keep: 0 };
        st.check_action(&zero, am).map_err(|(_, d)| audit(0, format!("learning step rejected: {d}")))?;
        actions.push(zero);
    }
    Ok(actions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdcl::{run, Policy, RunOutcome};
    use crate::cnf::{gen_induction, Cnf};
    use crate::p0::check_p0_refutation;

    fn cl(xs: &[i64]) -> Clause {
        Clause::from_dimacs(xs).unwrap()
    }

    #[test]
    fn single_learning_line() {
        let tau = Cnf::new(2, [cl(&[1, 2]), cl(&[-1, 2]), cl(&[-2])]).unwrap();
        let order = VarOrder::identity(2);
        let mut b = P0Builder::new(tau.clone(), order);
        let a = b.axiom(&cl(&[1, 2]));
        let n2 = b.axiom(&cl(&[-2]));
        let t1 = b.decide(None, 1, false);
        let t2 = b.unit(Some(t1), a);
        b.learn(a, n2, t2);
        let p = b.finish();
        assert!(check_p0(&p).valid);
        let trace = cdcl_from_p0(&p).unwrap();
        let acts = trace.actions();
        assert!(matches!(acts[0], Action::Decide { var: 1, val: false }));
        assert!(matches!(acts[1], Action::Unit { var: 2, val: true, .. }));
        assert_eq!(acts.last(), Some(&Action::Learn { clause: cl(&[1]), keep: 0 }));
    }

    #[test]
    fn axiom_zero_is_immediately_terminal() {
        let tau = Cnf::new(1, [Clause::empty(), cl(&[1])]).unwrap();
        let mut b = P0Builder::new(tau, VarOrder::identity(1));
        b.axiom(&Clause::empty());
        let t = cdcl_from_p0(&b.finish()).unwrap();
        assert!(t.is_empty() && t.terminal);
    }

    #[test]
    fn round_trip_on_induction() {
        for n in 2..7 {
            let tau = gen_induction(n).unwrap();
            let order = VarOrder::identity(n);
            let t = run(&tau, &Policy::Greedy(7), &Amendments::pi_d(order.clone()), 10_000);
            assert_eq!(t.outcome, RunOutcome::Refuted);
            let p = p0_from_cdcl(&t, &order).unwrap();
            assert!(check_p0_refutation(&p).valid);
            assert!(p.len() <= n as usize * t.len().max(1) + tau.len());
            let back = cdcl_from_p0(&p).unwrap();
            assert_eq!(back.outcome, RunOutcome::Refuted);
            let again = p0_from_cdcl(&back, &order).unwrap();
            assert!(p.clauses().filter(|c| !c.is_empty()).count() <= again.clauses().count() + tau.len());
        }
    }
}

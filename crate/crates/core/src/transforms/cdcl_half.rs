//! CDCL(π-D, DECISION-L) runs and π-half-ordered resolution, in both
//! directions.

use std::collections::HashMap;

use crate::cdcl::{verify_run, Action, Amendments, CdclState, RunTrace};
use crate::cnf::{Clause, Cnf, Var, VarOrder};
use crate::resproof::{check_half_ordered, check_refutation, connected_core, contract_weakenings, ResolutionProof, Rule};

use super::{audit, TransformError};

fn node_for(pi: &mut ResolutionProof, nodes: &mut HashMap<Clause, usize>, c: &Clause) -> usize {
    if let Some(&id) = nodes.get(c) {
        return id;
    }
    let id = pi.push_axiom(c.clone());
    nodes.insert(c.clone(), id);
    id
}

/// `E ∘^x C`: the resolvent when `E` and `C` resolve on `x`, else `E`.
fn compose(pi: &mut ResolutionProof, e: usize, c: usize, x: Var) -> Result<usize, TransformError> {
    let (ce, cc) = (pi.clause(e), pi.clause(c));
    match (ce.polarity(x), cc.polarity(x)) {
        (Some(a), Some(b)) if a != b => {
            let msg = format!("{ce} and {cc} clash on more than x{x}");
            pi.push_resolution(e, c, x).map_err(|_| audit(0, msg))
        }
        _ => Ok(e),
    }
}

/// Turns a successful CDCL(π-D, DECISION-L) run into a π-half-ordered
/// refutation: each learned clause is rederived by the `C'_ν` cascade and
/// padded by weakening, then weakenings are contracted.
pub fn cdcl_to_half(trace: &RunTrace, order: &VarOrder) -> Result<ResolutionProof, TransformError> {
    let am = Amendments::pi_d(order.clone()).with_decision_l();
    let rep = verify_run(trace, &am);
    if !rep.valid {
        return Err(TransformError::InvalidInput(format!("trace is not a valid π-D, DECISION-L run: {:?}", rep.violation)));
    }
    let tau = &trace.cnf;
    let mut pi = ResolutionProof::new(tau.num_vars());
    let mut nodes: HashMap<Clause, usize> = HashMap::new();
    if tau.contains(&Clause::empty()) {
        pi.push_axiom(Clause::empty());
        return Ok(pi);
    }
    let mut st = CdclState::new(tau);
    for (step, s) in trace.steps.iter().enumerate() {
        if let Action::Learn { clause, .. } = &s.action {
            let w = st.learned_clause_witness_at(clause, 1).map_err(|e| audit(step + 1, e.to_string()))?;
            let t = st.trail();
            // C'_1 = C_1, C'_ν = C_ν ∘ C'_{ν−1} ⋯ ∘ C'_1.
            let mut primes: Vec<usize> = Vec::with_capacity(w.steps.len() + 1);
            let mut cs: Vec<&Clause> = w.steps.iter().map(|s| &s.1).collect();
            cs.push(&w.conflict);
            let vars: Vec<Var> = w.steps.iter().map(|s| t.at(s.0).var).collect();
            for nu in 0..cs.len() {
                let mut e = node_for(&mut pi, &mut nodes, cs[nu]);
                for mu in (0..nu).rev() {
                    e = compose(&mut pi, e, primes[mu], vars[mu]).map_err(|_| audit(step + 1, "cascade resolution is not well formed"))?;
                }
                primes.push(e);
            }
            let last = *primes.last().expect("conflict clause present");
            if !pi.clause(last).is_subset_of(clause) {
                return Err(audit(step + 1, format!("cascade derived {} which is not inside {clause}", pi.clause(last))));
            }
            let id = if pi.clause(last) == clause { last } else { pi.push_weakening(last, clause.clone())? };
            nodes.insert(clause.clone(), id);
            if clause.is_empty() {
                break;
            }
        }
        st.apply(&s.action);
    }
    let (contracted, _) = contract_weakenings(&pi);
    let (core, _) = connected_core(&contracted).map_err(|_| TransformError::InvalidInput("trace does not learn 0".into()))?;
    if !check_refutation(&core, tau).valid {
        return Err(audit(trace.len(), "output is not a refutation"));
    }
    if !check_half_ordered(&core, order).valid {
        return Err(audit(trace.len(), "output is not half-ordered"));
    }
    Ok(core)
}

/// A partial run `(context, Λ) ⇝ (context ∪ {Res(c1, c2)}, Λ)` of length at
/// most `n+1` valid under {π-D, DECISION-L}. If the trail built on the way
/// already makes `0` learnable, the run learns `0` instead.
pub fn half_to_cdcl(c1: &Clause, c2: &Clause, pivot: Var, context: &Cnf, order: &VarOrder) -> Result<RunTrace, TransformError> {
    let actions = partial_run(&CdclState::new(context), c1, c2, pivot, order)?;
    let trace = RunTrace::from_actions(context, &actions);
    let rep = verify_run(&trace, &Amendments::pi_d(order.clone()).with_decision_l());
    if !rep.valid {
        return Err(audit(0, format!("partial run rejected: {:?}", rep.violation)));
    }
    Ok(trace)
}

fn partial_run(start: &CdclState, c1: &Clause, c2: &Clause, pivot: Var, order: &VarOrder) -> Result<Vec<Action>, TransformError> {
    if !start.contains(c1) || !start.contains(c2) {
        return Err(TransformError::Precondition("both premises must be in the context".into()));
    }
    let res = c1.resolve(c2, pivot).ok_or_else(|| TransformError::Precondition(format!("{c1} and {c2} do not resolve on x{pivot}")))?;
    let small = if order.below(c1, pivot) {
        c1
    } else if order.below(c2, pivot) {
        c2
    } else {
        return Err(TransformError::Precondition("neither premise is small".into()));
    };
    if start.contains(&res) {
        return Ok(Vec::new());
    }
    let unit_lit = small.lits().iter().copied().find(|l| l.var() == pivot).expect("premise holds the pivot");
    let j_rank = order.max_rank_in(&small.without_var(pivot));
    let value = |v: Var| res.polarity(v).is_some_and(|p| !p);
    let mut st = start.clone();
    let mut actions = Vec::new();
    let unit = Action::Unit { var: pivot, val: unit_lit.is_positive(), clause: st.clause_id(small).expect("premise in context") };
    let mut push = |st: &mut CdclState, a: Action| {
        st.apply(&a);
        actions.push(a);
    };
    if j_rank == 0 {
        push(&mut st, unit.clone());
    }
    for &v in order.sequence() {
        if v == pivot {
            continue;
        }
        push(&mut st, Action::Decide { var: v, val: value(v) });
        if order.rank(v) == j_rank {
            push(&mut st, unit.clone());
        }
    }
    let am = Amendments::pi_d(order.clone()).with_decision_l();
    let learn = Action::Learn { clause: res, keep: 0 };
    if st.check_action(&learn, &am).is_ok() {
        actions.push(learn);
    } else {
        let zero = Action::Learn { clause: Clause::empty(), keep: 0 };
        st.check_action(&zero, &am).map_err(|(_, d)| audit(0, format!("learning step rejected: {d}")))?;
        actions.push(zero);
    }
    Ok(actions)
}

/// Composes `half_to_cdcl` over every resolution of a half-ordered
/// refutation into one successful run.
pub fn half_to_cdcl_proof(pi: &ResolutionProof, tau: &Cnf, order: &VarOrder) -> Result<RunTrace, TransformError> {
    if !check_refutation(pi, tau).valid || !check_half_ordered(pi, order).valid || pi.has_weakening() {
        return Err(TransformError::InvalidInput("expected a weakening-free half-ordered refutation".into()));
    }
    if tau.contains(&Clause::empty()) {
        return Ok(RunTrace::from_actions(tau, &[]));
    }
    let mut actions: Vec<Action> = Vec::new();
    let mut st = CdclState::new(tau);
    for nd in &pi.nodes {
        let Rule::Resolution { p1, p2, pivot } = nd.rule else { continue };
        let part = partial_run(&st, pi.clause(p1), pi.clause(p2), pivot, order)?;
        for a in &part {
            st.apply(a);
        }
        actions.extend(part);
        if st.has_empty_clause() {
            break;
        }
    }
    let trace = RunTrace::from_actions(tau, &actions);
    let am = Amendments::pi_d(order.clone()).with_decision_l();
    let rep = verify_run(&trace, &am);
    if !rep.valid || !trace.terminal {
        return Err(audit(0, format!("composed run rejected: {:?}", rep.violation)));
    }
    Ok(trace)
}

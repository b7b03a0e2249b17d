//! Half-ordered to ordered resolution by stage-wise postponement of the
//! resolutions on `x_{k+1}` below the `k`-small region.

use std::collections::BTreeSet;

use crate::cnf::{Clause, Cnf, Lit, VarOrder};
use crate::resproof::{
    check_half_ordered, check_ordered, check_refutation, connected_core, contract_weakenings, dcl, ordered_up_to, ProofNode, ResolutionProof, Rule,
};

use super::{audit, TransformError};

/// Converts a π-half-ordered refutation of `tau` into a π-ordered one of
/// size at most `n·|pi|`. Every intermediate proof is audited.
pub fn half_to_ordered(pi: &ResolutionProof, tau: &Cnf, order: &VarOrder) -> Result<ResolutionProof, TransformError> {
    let rep = check_refutation(pi, tau);
    if !rep.valid {
        return Err(TransformError::InvalidInput(format!("not a refutation: {:?}", rep.violation)));
    }
    let input = if pi.has_weakening() { contract_weakenings(pi).0 } else { pi.clone() };
    if !check_half_ordered(&input, order).valid {
        return Err(TransformError::InvalidInput("proof is not half-ordered".into()));
    }
    let n = order.n();
    let mut cur = connected_core(&input)?.0;
    let bound = n as usize * pi.len().max(1);
    let mut prev_dcl: Option<usize> = None;
    for k in 0..n.saturating_sub(1) {
        let (next, dcl_size) = stage(&cur, order, k)?;
        if let Some(p) = prev_dcl {
            if dcl_size > p {
                return Err(audit(k as usize, format!("|dcl(L)| grew from {p} to {dcl_size}")));
            }
        }
        prev_dcl = Some(dcl_size);
        if ordered_up_to(&next, order, k + 1).is_err() {
            return Err(audit(k as usize, "result is not ordered up to k+1"));
        }
        if !check_half_ordered(&next, order).valid || !check_refutation(&next, tau).valid {
            return Err(audit(k as usize, "result is not a half-ordered refutation"));
        }
        cur = next;
    }
    if !check_ordered(&cur, order).valid {
        return Err(audit(n as usize, "final proof is not ordered"));
    }
    if cur.len() > bound {
        return Err(audit(n as usize, format!("size {} exceeds n·|Π| = {bound}", cur.len())));
    }
    Ok(cur)
}

/// One stage `Π_k → Π_{k+1}`. Also returns `|dcl_{Π_k}(L_k)|`.
fn stage(pi: &ResolutionProof, order: &VarOrder, k: u32) -> Result<(ResolutionProof, usize), TransformError> {
    let stage_no = k as usize;
    let len = pi.len();
    let small: Vec<bool> = pi.nodes.iter().map(|nd| order.is_k_small(&nd.clause, k)).collect();
    let l_set: BTreeSet<usize> = (0..len).filter(|&v| small[v] && pi.rule(v).parents().iter().all(|&p| !small[p])).collect();
    let d_set = dcl(pi, &l_set);
    let in_d: Vec<bool> = (0..len).map(|v| d_set.contains(&v)).collect();
    let in_l: Vec<bool> = (0..len).map(|v| l_set.contains(&v)).collect();
    let x = order.var_at(k + 1);
    let res_on_x = |v: usize| matches!(pi.rule(v), Rule::Resolution { pivot, .. } if pivot == x);

    // M: minimal D-nodes resolving on x.
    let mut anc = vec![false; len];
    let mut m = Vec::new();
    for v in 0..len {
        if !in_d[v] {
            continue;
        }
        anc[v] = pi.rule(v).parents().iter().any(|&p| in_d[p] && (res_on_x(p) || anc[p]));
        if res_on_x(v) && !anc[v] {
            m.push(v);
        }
    }
    if m.is_empty() {
        return Ok((pi.clone(), d_set.len()));
    }

    let orig: Vec<Clause> = pi.nodes.iter().map(|nd| nd.clause.clone()).collect();
    let mut c = orig.clone();
    let mut rule: Vec<Rule> = pi.nodes.iter().map(|nd| nd.rule).collect();
    let mut changed_by: Vec<Option<usize>> = vec![None; len];
    let mut children_d: Vec<Vec<usize>> = vec![Vec::new(); len];
    for v in 0..len {
        if in_d[v] {
            for p in pi.rule(v).parents() {
                children_d[p].push(v);
            }
        }
    }

    for &wi in &m {
        let Rule::Resolution { p1, p2, .. } = rule[wi] else {
            return Err(audit(stage_no, format!("node {} changed before its round", wi + 1)));
        };
        let is_small_side = |p: usize| order.is_k_small(&c[p].without_var(x), k);
        let (w1, w2) = if is_small_side(p1) {
            (p1, p2)
        } else if is_small_side(p2) {
            (p2, p1)
        } else {
            return Err(audit(stage_no, format!("node {} is not half-ordered", wi + 1)));
        };
        let ell = Lit::with_value(x, c[w1].polarity(x).expect("premise holds the pivot"));
        let nl = ell.negated();

        let mut a_i = vec![false; len];
        a_i[wi] = true;
        for v in wi..len {
            if a_i[v] {
                for &ch in &children_d[v] {
                    a_i[ch] = true;
                }
            }
        }

        c[wi] = c[wi].with_lit(nl).ok_or_else(|| audit(stage_no, "pivot literal clash at w_i"))?;
        rule[wi] = Rule::Weakening { p: w2 };
        changed_by[wi] = Some(w1);
        for v in wi + 1..len {
            if !a_i[v] {
                continue;
            }
            let before = c[v].clone();
            if c[v].contains(ell) {
                rule[v] = Rule::Weakening { p: w1 };
                continue;
            }
            match rule[v] {
                Rule::Resolution { p1, p2, pivot } if pivot == x => {
                    let u = if c[p1].contains(nl) { p1 } else { p2 };
                    c[v] = c[v].with_lit(nl).ok_or_else(|| audit(stage_no, "clash while appending the pivot literal"))?;
                    rule[v] = Rule::Weakening { p: u };
                }
                Rule::Weakening { p } => {
                    c[v] = c[v].union(&c[p]).ok_or_else(|| audit(stage_no, "clash while propagating a weakening"))?;
                }
                Rule::Resolution { p1, p2, pivot } => {
                    c[v] = c[p1].resolve(&c[p2], pivot).ok_or_else(|| audit(stage_no, format!("re-resolution at node {} failed", v + 1)))?;
                }
                Rule::Axiom => return Err(audit(stage_no, "axiom above a resolution")),
            }
            if c[v] != before {
                changed_by[v] = Some(w1);
            }
            let ok = c[v] == orig[v] || c[v] == orig[v].with_lit(ell).unwrap_or_else(Clause::empty) || Some(&c[v]) == orig[v].with_lit(nl).as_ref();
            if !ok {
                return Err(audit(stage_no, format!("node {} drifted beyond one pivot literal", v + 1)));
            }
        }
    }

    // Reconnect D_s and U along L_k plus the new nodes ṽ.
    let mut out = ResolutionProof::new(pi.num_vars);
    let mut map = vec![usize::MAX; len];
    let mut tilde = vec![usize::MAX; len];
    for v in 0..len {
        let node = if in_d[v] {
            let r = match rule[v] {
                Rule::Axiom => Rule::Axiom,
                Rule::Resolution { p1, p2, pivot } => Rule::Resolution { p1: map[p1], p2: map[p2], pivot },
                Rule::Weakening { p } => Rule::Weakening { p: map[p] },
            };
            ProofNode { clause: c[v].clone(), rule: r }
        } else {
            let via = |p: usize| if tilde[p] != usize::MAX { tilde[p] } else { map[p] };
            let r = match pi.rule(v) {
                Rule::Axiom => Rule::Axiom,
                Rule::Resolution { p1, p2, pivot } => Rule::Resolution { p1: via(p1), p2: via(p2), pivot },
                Rule::Weakening { p } => Rule::Weakening { p: via(p) },
            };
            ProofNode { clause: orig[v].clone(), rule: r }
        };
        out.nodes.push(node);
        map[v] = out.len() - 1;
        if in_l[v] {
            if let Some(w1) = changed_by[v] {
                let id = out.push_resolution(map[w1], map[v], x).map_err(|_| audit(stage_no, format!("ṽ for node {} does not resolve", v + 1)))?;
                if out.clause(id) != &orig[v] {
                    return Err(audit(stage_no, format!("ṽ for node {} does not restore its clause", v + 1)));
                }
                tilde[v] = id;
            }
        }
    }
    let (contracted, _) = contract_weakenings(&out);
    let (core, _) = connected_core(&contracted)?;
    Ok((core, d_set.len()))
}

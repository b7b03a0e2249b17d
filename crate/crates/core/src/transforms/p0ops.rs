//! Building blocks shared by the π-P₀ constructions.

use std::collections::BTreeMap;

use crate::cdcl::{Ann, Assign};
use crate::cnf::{Clause, Lit, Var};
use crate::p0::{P0Builder, P0Line, P0Proof};

use super::{audit, TransformError};

fn resolvent(b: &P0Builder, l1: usize, l2: usize) -> Result<(Var, Clause), TransformError> {
    let (c1, c2) = (b.clause(l1), b.clause(l2));
    c1.resolve_any(c2).ok_or_else(|| audit(0, format!("{c1} and {c2} do not resolve")))
}

/// A half-ordered resolution as one Learning line: decisions in π-order
/// falsify the resolvent and the pivot is propagated from the small premise
/// as soon as its other variables are assigned.
pub(crate) fn half_res(b: &mut P0Builder, l1: usize, l2: usize) -> Result<usize, TransformError> {
    let (x, res) = resolvent(b, l1, l2)?;
    let order = b.order().clone();
    let small = if order.below(b.clause(l1), x) {
        l1
    } else if order.below(b.clause(l2), x) {
        l2
    } else {
        return Err(audit(0, format!("{} and {} is not a half-ordered step", b.clause(l1), b.clause(l2))));
    };
    if let Some(id) = b.line_of(&res) {
        return Ok(id);
    }
    let ell = b.clause(small).lits().iter().copied().find(|l| l.var() == x).expect("premise holds the pivot");
    let jr = order.max_rank_in(&b.clause(small).without_var(x));
    let value = |v: Var| res.polarity(v).is_some_and(|p| !p);
    let unit = Assign::u(x, ell.is_positive());
    let mut cur = None;
    let mut pivot_set = false;
    if jr == 0 {
        cur = Some(b.extend(cur, unit, Some(small)));
        pivot_set = true;
    }
    let mut missing = res.width();
    for &v in order.sequence() {
        if pivot_set && missing == 0 {
            break;
        }
        if v == x {
            continue;
        }
        cur = Some(b.extend(cur, Assign::d(v, value(v)), None));
        if res.contains_var(v) {
            missing -= 1;
        }
        if order.rank(v) == jr {
            cur = Some(b.extend(cur, unit, Some(small)));
            pivot_set = true;
        }
    }
    Ok(b.learn(l1, l2, cur.expect("the pivot is on the trail")))
}

/// Resolves `l1` and `l2` on a trail that starts at `root` and assigns every
/// other variable by unit propagation from `units`, keyed by the literal
/// each line propagates under `root`.
pub(crate) fn unit_res(b: &mut P0Builder, l1: usize, l2: usize, root: Option<usize>, units: &BTreeMap<Lit, usize>) -> Result<usize, TransformError> {
    let (x, res) = resolvent(b, l1, l2)?;
    if let Some(id) = b.line_of(&res) {
        return Ok(id);
    }
    let base = b.trail_of(root);
    let (cside, dside) = (b.clause(l1).clone(), b.clause(l2).clone());
    let mut cur = root;
    let mut assigned: Vec<Var> = Vec::new();
    let falsify = |b: &mut P0Builder, cur: &mut Option<usize>, c: &Clause, assigned: &mut Vec<Var>| -> Result<(), TransformError> {
        for &l in c.lits() {
            if l.var() == x || base.contains_var(l.var()) || assigned.contains(&l.var()) {
                continue;
            }
            let u = *units.get(&l.negated()).ok_or_else(|| audit(0, format!("no unit line for {}", l.negated())))?;
            *cur = Some(b.extend(*cur, Assign::u(l.var(), !l.is_positive()), Some(u)));
            assigned.push(l.var());
        }
        Ok(())
    };
    falsify(b, &mut cur, &cside, &mut assigned)?;
    let ell = cside.lits().iter().copied().find(|l| l.var() == x).expect("premise holds the pivot");
    cur = Some(b.extend(cur, Assign::u(x, ell.is_positive()), Some(l1)));
    falsify(b, &mut cur, &dside, &mut assigned)?;
    Ok(b.learn(l1, l2, cur.expect("non-empty trail")))
}

/// Copies `src` into `b`. With `lift = Some(x)` every trail is prefixed by
/// `[x d= 0]` and decisions `x d= 0` already implied by the prefix are
/// dropped. Axioms are sent to the lines chosen by `axiom_line`. Returns the
/// line map.
pub(crate) fn embed<F>(b: &mut P0Builder, src: &P0Proof, lift: Option<Var>, mut axiom_line: F) -> Result<Vec<usize>, TransformError>
where
    F: FnMut(&mut P0Builder, &Clause) -> Result<usize, TransformError>,
{
    let root = lift.map(|x| b.decide(None, x, false));
    let mut map = vec![usize::MAX; src.len()];
    let mut trail_map: Vec<Option<usize>> = vec![None; src.len()];
    for (i, line) in src.lines.iter().enumerate() {
        match line {
            P0Line::Axiom { clause } => map[i] = axiom_line(b, clause)?,
            P0Line::Trail { parent, assign, unit } => {
                let base = match parent {
                    Some(p) => trail_map[*p],
                    None => root,
                };
                let t = b.trail_of(base);
                if let Some(v) = t.value(assign.var) {
                    if assign.ann != Ann::D || v != assign.val || assign.val {
                        return Err(audit(i + 1, format!("x{} is fixed by the lifting prefix", assign.var)));
                    }
                    trail_map[i] = base;
                } else {
                    let u = unit.map(|u| map[u]);
                    trail_map[i] = Some(b.extend(base, *assign, u));
                }
                map[i] = trail_map[i].unwrap_or(usize::MAX);
            }
            P0Line::Learn { c1, c2, trail, .. } => {
                let t = trail_map[*trail].ok_or_else(|| audit(i + 1, "learning on the empty trail"))?;
                let (c1, c2) = (map[*c1], map[*c2]);
                resolvent(b, c1, c2).map_err(|e| match e {
                    TransformError::Audit { detail, .. } => audit(i + 1, detail),
                    e => e,
                })?;
                map[i] = b.learn(c1, c2, t);
            }
            P0Line::Weaken { premise, clause } => {
                let p = map[*premise];
                let c = match lift {
                    Some(x) if b.clause(p).contains(Lit::pos(x)) => clause.with_lit(Lit::pos(x)).ok_or_else(|| audit(i + 1, "lifted weakening clashes"))?,
                    _ => clause.clone(),
                };
                map[i] = b.weaken(p, c);
            }
        }
    }
    Ok(map)
}

/// The first clause line of `p` equal to `c`.
pub(crate) fn line_with(p: &P0Proof, c: &Clause) -> Option<usize> {
    p.lines.iter().position(|l| l.clause() == Some(c))
}

//! Explicit refutations: the implication chain, `Ind(n)` under parity-2
//! substitution, and Stone formulas.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cdcl::Assign;
use crate::cnf::{gen_induction, gen_stone, is_column_parallel, is_row_parallel, order_stone, xor_substitute, Clause, Lit, PointedGraph, StoneMap, Var, VarOrder, XorMap};
use crate::p0::{check_p0_refutation, P0Builder, P0Line, P0Proof};
use crate::resproof::{check_half_ordered, ResolutionProof};

use super::{audit, TransformError};

/// A derivation of `x_n` from `x_1, x̄_1 ∨ x_2, …, x̄_{n−1} ∨ x_n` that
/// eliminates the π-largest of `x_1, …, x_{n−1}` first. Every step is
/// π-half-ordered; there are `n − 1` resolutions.
pub fn ind_chain(n: u32, order: &VarOrder) -> Result<ResolutionProof, TransformError> {
    if n == 0 || order.n() != n {
        return Err(TransformError::InvalidInput("need n >= 1 and an order on n variables".into()));
    }
    let mut pi = ResolutionProof::new(n);
    // link[j] is the node holding `x̄_{prev(j)} ∨ x_j` (or `x_j` at the front).
    let mut link: BTreeMap<Var, usize> = BTreeMap::new();
    for j in 1..=n {
        let c = if j == 1 { Clause::unit(Lit::pos(1)) } else { Clause::new([Lit::neg(j - 1), Lit::pos(j)]).expect("distinct") };
        link.insert(j, pi.push_axiom(c));
    }
    let mut inner: Vec<Var> = (1..n).collect();
    inner.sort_by_key(|&v| std::cmp::Reverse(order.rank(v)));
    for x in inner {
        let into = *link.range(x + 1..).next().expect("x_n stays").0;
        let r = pi.push_resolution(link[&x], link[&into], x)?;
        link.remove(&x);
        link.insert(into, r);
    }
    debug_assert!(check_half_ordered(&pi, order).valid);
    Ok(pi)
}

/// The clause falsified exactly by the given partial assignment.
fn forbid(pairs: &[(Var, bool)]) -> Clause {
    Clause::new(pairs.iter().map(|&(v, a)| Lit::new(v, !a))).expect("distinct variables")
}

fn need_line(b: &P0Builder, c: &Clause) -> Result<usize, TransformError> {
    b.line_of(c).ok_or_else(|| audit(0, format!("missing clause {c}")))
}

/// A π-P₀ refutation of `Ind(n)` with every `x_j` replaced by
/// `y_{j,1} ⊕ y_{j,2}`, for a row- and column-parallel order. Each round
/// removes the row whose `y_{i,2}` is π-largest by deriving the parity
/// clauses of `x_p → x_q` for its neighbours `p`, `q`.
pub fn refute_ind_xor2(n: u32, order: &VarOrder) -> Result<P0Proof, TransformError> {
    if n == 0 {
        return Err(TransformError::InvalidInput("n must be positive".into()));
    }
    let (tau, map) = xor_substitute(&gen_induction(n)?, 2)?;
    if order.n() != map.num_vars() {
        return Err(TransformError::InvalidInput("order does not match the substituted formula".into()));
    }
    if !is_row_parallel(order, &map) || !is_column_parallel(order, &map) {
        return Err(TransformError::Precondition("order must be row- and column-parallel".into()));
    }
    let y = |j: u32, c: u32| map.var(j, c);
    let mut b = P0Builder::new(tau.clone(), order.clone());
    for c in tau.clauses() {
        b.axiom(c);
    }
    let mut rows: Vec<u32> = (1..=n).collect();
    while !rows.is_empty() {
        let pos = (0..rows.len()).max_by_key(|&k| order.rank(y(rows[k], 2))).expect("non-empty");
        let i = rows[pos];
        let p = pos.checked_sub(1).map(|k| rows[k]);
        let q = rows.get(pos + 1).copied();
        let mut firsts: Vec<u32> = rows.iter().copied().filter(|&j| j != i).collect();
        firsts.sort_by_key(|&j| order.rank(y(j, 1)));
        for a in [false, true].into_iter().take(if p.is_some() { 2 } else { 1 }) {
            for bb in [false, true].into_iter().take(if q.is_some() { 2 } else { 1 }) {
                let val1 = |j: u32| if Some(j) == p { a } else if Some(j) == q { bb } else { false };
                let mut cur = None;
                for &j in &firsts {
                    cur = Some(b.extend(cur, Assign::d(y(j, 1), val1(j)), None));
                }
                // Left of `i` every x_j is forced to 1, right of it to 0.
                for k in 0..pos {
                    let j = rows[k];
                    let mut pat = vec![(y(j, 1), val1(j)), (y(j, 2), val1(j))];
                    if k > 0 {
                        let h = rows[k - 1];
                        pat.extend([(y(h, 1), val1(h)), (y(h, 2), !val1(h))]);
                    }
                    let line = need_line(&b, &forbid(&pat))?;
                    cur = Some(b.unit(cur, line));
                }
                for k in (pos + 1..rows.len()).rev() {
                    let j = rows[k];
                    let mut pat = vec![(y(j, 1), val1(j)), (y(j, 2), !val1(j))];
                    if let Some(&h) = rows.get(k + 1) {
                        pat.extend([(y(h, 1), val1(h)), (y(h, 2), val1(h))]);
                    }
                    let line = need_line(&b, &forbid(&pat))?;
                    cur = Some(b.unit(cur, line));
                }
                let mut halves = [0usize; 2];
                let mut tc = [0usize; 2];
                for c in [false, true] {
                    let t = b.extend(cur, Assign::d(y(i, 1), c), None);
                    let mut left = vec![(y(i, 1), c), (y(i, 2), c)];
                    if let Some(p) = p {
                        left.extend([(y(p, 1), a), (y(p, 2), !a)]);
                    }
                    let mut right = vec![(y(i, 1), c), (y(i, 2), !c)];
                    if let Some(q) = q {
                        right.extend([(y(q, 1), bb), (y(q, 2), bb)]);
                    }
                    let (la, lb) = (need_line(&b, &forbid(&left))?, need_line(&b, &forbid(&right))?);
                    let t2 = b.unit(Some(t), la);
                    halves[c as usize] = b.learn(la, lb, t2);
                    tc[c as usize] = t;
                }
                b.learn(halves[0], halves[1], tc[0]);
            }
        }
        rows.remove(pos);
    }
    let proof = b.finish();
    let report = check_p0_refutation(&proof);
    if !report.valid {
        return Err(audit(0, format!("output rejected: {report:?}")));
    }
    Ok(proof)
}

/// Line counts of a Stone refutation.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct StoneReport {
    pub size: usize,
    /// Learning lines of the final stage.
    pub clear_up_steps: usize,
    /// Whether every final-stage resolution is π-half-ordered.
    pub clear_up_half_ordered: bool,
}

struct StoneCtx<'a> {
    map: StoneMap,
    order: &'a VarOrder,
    /// Type-2 clause line of `(vertex, stone)`.
    red: BTreeMap<(u32, u32), usize>,
    sink_axiom: Vec<usize>,
}

impl StoneCtx<'_> {
    /// Walks the P-block in π-order deciding the `picks` to 1 and all other
    /// P-variables to 0, propagating `R_v = 0` after `P_{n,v}` and `R_s = 1`
    /// after each other pick `(vertex, s)` whose red clause is known. Stops at `stop`, after its own
    /// propagation when `with_unit` is set.
    fn walk(&self, b: &mut P0Builder, v: u32, picks: &[(u32, u32)], stop: (u32, u32), with_unit: bool) -> usize {
        let n = self.map.n;
        let mut cur = None;
        for &var in self.order.sequence() {
            let (vertex, stone) = ((var - 1) / self.map.m + 1, (var - 1) % self.map.m + 1);
            let pick = (vertex == n && stone == v) || picks.contains(&(vertex, stone));
            let id = b.extend(cur, Assign::d(var, pick), None);
            cur = Some(id);
            if (vertex, stone) == stop && !with_unit {
                return id;
            }
            let line = if vertex == n { Some(self.sink_axiom[stone as usize]) } else { self.red.get(&(vertex, stone)).copied() };
            if let (true, Some(line)) = (pick, line) {
                if !b.trail_of(cur).contains_var(self.map.r(stone)) {
                    cur = Some(b.unit(cur, line));
                }
            }
            if (vertex, stone) == stop {
                return cur.expect("non-empty");
            }
        }
        unreachable!("the stop variable is a P-variable")
    }

    fn p(&self, i: u32, u: u32) -> Var {
        self.map.p(i, u)
    }

    /// Removes the `P_{i,·}` literals of `pieces` by resolving along the
    /// type-1 clause of `i`, from stone `m` down to 1. `trail(s)` is the
    /// trail for the step on `P_{i,s}`.
    fn sweep<F>(&self, b: &mut P0Builder, i: u32, pieces: &BTreeMap<u32, usize>, mut trail: F) -> Result<usize, TransformError>
    where
        F: FnMut(&mut P0Builder, u32) -> usize,
    {
        let all = Clause::new((1..=self.map.m).map(|s| Lit::pos(self.p(i, s)))).expect("distinct");
        let mut acc = need_line(b, &all)?;
        for s in (1..=self.map.m).rev() {
            if !b.clause(acc).contains(Lit::pos(self.p(i, s))) {
                continue;
            }
            let piece = pieces[&s];
            let t = trail(b, s);
            acc = b.learn(acc, piece, t);
        }
        Ok(acc)
    }
}

/// A π_G-P₀ refutation of the Stone formula of `g` with `m` stones under
/// `order_stone(g, m)`.
pub fn refute_stone(g: &PointedGraph, m: u32) -> Result<P0Proof, TransformError> {
    refute_stone_with_report(g, m).map(|r| r.0)
}

pub fn refute_stone_with_report(g: &PointedGraph, m: u32) -> Result<(P0Proof, StoneReport), TransformError> {
    if m < g.n() {
        return Err(TransformError::InvalidInput(format!("need m >= n, got m={m}, n={}", g.n())));
    }
    if !g.is_topologically_numbered() {
        return Err(TransformError::InvalidInput("graph must be topologically numbered with sink n".into()));
    }
    let (tau, map) = gen_stone(g, m)?;
    let order = order_stone(g, m)?;
    let n = g.n();
    let mut b = P0Builder::new(tau.clone(), order.clone());
    for c in tau.clauses() {
        b.axiom(c);
    }
    let mut cx = StoneCtx { map, order: &order, red: BTreeMap::new(), sink_axiom: vec![usize::MAX; m as usize + 1] };
    for s in 1..=m {
        cx.sink_axiom[s as usize] = need_line(&b, &Clause::new([Lit::neg(map.p(n, s)), Lit::neg(map.r(s))]).expect("distinct"))?;
    }
    for i in g.sources() {
        for s in 1..=m {
            let c = Clause::new([Lit::neg(map.p(i, s)), Lit::pos(map.r(s))]).expect("distinct");
            cx.red.insert((i, s), need_line(&b, &c)?);
        }
    }
    let mut clear_up: Vec<usize> = Vec::new();
    for k in g.internal() {
        let pr = g.preds(k);
        let (i, j) = (pr[0], pr[1]);
        let sink = k == n;
        let before = b.len();
        for v in 1..=m {
            // The clause that closes off `P_{k,v}`: `R_v` for internal vertices,
            // nothing for the sink.
            let close = |b: &mut P0Builder, line: usize, t: usize| -> usize {
                if sink {
                    b.learn(line, cx.sink_axiom[v as usize], t)
                } else {
                    line
                }
            };
            let mut by_u: BTreeMap<u32, usize> = BTreeMap::new();
            for u in 1..=m {
                if u == v {
                    let t = cx.walk(&mut b, v, &[(k, v), (j, v)], (j, v), true);
                    by_u.insert(u, close(&mut b, cx.red[&(j, v)], t));
                    continue;
                }
                let mut by_t: BTreeMap<u32, usize> = BTreeMap::new();
                for t in 1..=m {
                    let full = cx.walk(&mut b, v, &[(k, v), (j, u), (i, t)], (i, t), true);
                    let piece = if t == v {
                        cx.red[&(i, v)]
                    } else {
                        let mut pat = vec![(map.p(i, t), true), (map.r(t), true), (map.p(j, u), true), (map.r(u), true), (map.p(k, v), true)];
                        pat.dedup();
                        let g4 = forbid(&pat).with_lit(Lit::pos(map.r(v))).expect("v differs from t and u");
                        let g4 = need_line(&b, &g4)?;
                        
                        if t == u {
                            b.learn(g4, cx.red[&(j, u)], full)
                        } else {
                            let h = b.learn(g4, cx.red[&(j, u)], full);
                            b.learn(h, cx.red[&(i, t)], full)
                        }
                    };
                    by_t.insert(t, close(&mut b, piece, full));
                }
                let swept = cx.sweep(&mut b, i, &by_t, |b, s| cx.walk(b, v, &[(k, v), (j, u), (i, s)], (i, s), false))?;
                by_u.insert(u, swept);
            }
            let done = cx.sweep(&mut b, j, &by_u, |b, s| cx.walk(b, v, &[(k, v), (j, s)], (j, s), false))?;
            if !sink {
                cx.red.insert((k, v), done);
            }
        }
        if sink {
            clear_up.extend(before..b.len());
        }
    }
    let mut pieces: BTreeMap<u32, usize> = BTreeMap::new();
    for v in 1..=m {
        pieces.insert(v, need_line(&b, &Clause::unit(Lit::neg(map.p(n, v))))?);
    }
    let before = b.len();
    let root = cx.sweep(&mut b, n, &pieces, |b, s| {
        let mut cur = None;
        for t in 1..=s {
            cur = Some(b.extend(cur, Assign::d(map.p(n, t), t == s), None));
        }
        cur.expect("s >= 1")
    })?;
    clear_up.extend(before..b.len());
    if !b.clause(root).is_empty() {
        return Err(audit(3, format!("final sweep ended in {}", b.clause(root))));
    }
    let proof = b.finish();
    let report = check_p0_refutation(&proof);
    if !report.valid {
        return Err(audit(0, format!("output rejected: {report:?}")));
    }
    let mut steps = 0;
    let mut half = true;
    for &id in &clear_up {
        if let P0Line::Learn { c1, c2, clause, .. } = &proof.lines[id] {
            steps += 1;
            let (a, bc) = (proof.lines[*c1].clause().expect("clause"), proof.lines[*c2].clause().expect("clause"));
            let (x, _) = a.resolve_any(bc).expect("checked learning");
            half &= order.below(a, x) || order.below(bc, x);
            debug_assert_eq!(a.resolve(bc, x).as_ref(), Some(clause));
        }
    }
    let rep = StoneReport { size: proof.len(), clear_up_steps: steps, clear_up_half_ordered: half };
    if !half {
        return Err(audit(3, "a clear-up resolution is not half-ordered"));
    }
    Ok((proof, rep))
}

/// Row-then-column order for the parity-2 induction formula with rows
/// listed in `rows` order.
pub fn parallel_order(rows: &[u32]) -> Result<VarOrder, TransformError> {
    let map = XorMap { rows: rows.len() as u32, cols: 2 };
    let seq: Vec<Var> = (1..=2).flat_map(|c| rows.iter().map(move |&j| map.var(j, c))).collect();
    VarOrder::from_sequence(&seq).map_err(|e| TransformError::InvalidInput(e.to_string()))
}

//! The two-typed π-P₀ proof system: clause lines and trail lines, the
//! Decision / Unit propagation / Learning rules, an optional weakening rule,
//! a checker and a memoizing builder.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cdcl::{Ann, Assign, Trail};
use crate::cnf::{Clause, Cnf, Lit, Var, VarOrder};
use crate::report::{CheckReport, ViolationCode};
use crate::resproof::ResolutionProof;

/// One line of a π-P₀ proof. Line references are 0-based positions.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum P0Line {
    Axiom { clause: Clause },
    /// `[t, x *= a]` where `t` is trail line `parent` (or `Λ` when `None`).
    /// `unit` is the clause line justifying a `u` assignment.
    Trail { parent: Option<usize>, assign: Assign, unit: Option<usize> },
    /// `C∨D` from clause lines `c1`, `c2` and trail line `trail`.
    Learn { c1: usize, c2: usize, trail: usize, clause: Clause },
    Weaken { premise: usize, clause: Clause },
}

impl P0Line {
    pub fn clause(&self) -> Option<&Clause> {
        match self {
            P0Line::Axiom { clause } | P0Line::Learn { clause, .. } | P0Line::Weaken { clause, .. } => Some(clause),
            P0Line::Trail { .. } => None,
        }
    }

    pub fn is_trail(&self) -> bool {
        matches!(self, P0Line::Trail { .. })
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct P0Proof {
    pub order: VarOrder,
    pub axioms: Cnf,
    pub lines: Vec<P0Line>,
    pub allow_weakening: bool,
}

impl P0Proof {
    pub fn new(axioms: Cnf, order: VarOrder) -> P0Proof {
        P0Proof { order, axioms, lines: Vec::new(), allow_weakening: false }
    }

    pub fn num_vars(&self) -> u32 {
        self.axioms.num_vars()
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn clauses(&self) -> impl Iterator<Item = &Clause> {
        self.lines.iter().filter_map(P0Line::clause)
    }

    pub fn has_clause(&self, c: &Clause) -> bool {
        self.clauses().any(|x| x == c)
    }

    pub fn is_refutation(&self) -> bool {
        self.clauses().any(Clause::is_empty)
    }

    pub fn trail_count(&self) -> usize {
        self.lines.iter().filter(|l| l.is_trail()).count()
    }

    /// The full trail of trail line `id`.
    pub fn trail_of(&self, id: usize) -> Trail {
        let mut chain = Vec::new();
        let mut cur = Some(id);
        while let Some(i) = cur {
            match &self.lines[i] {
                P0Line::Trail { parent, assign, .. } => {
                    chain.push(*assign);
                    cur = *parent;
                }
                _ => panic!("line {} is not a trail", i + 1),
            }
        }
        chain.reverse();
        Trail::from_assigns(self.num_vars(), chain).expect("trail lines have distinct variables")
    }
}

pub fn p0_size(p: &P0Proof) -> usize {
    p.lines.len()
}

/// Maximum width over clause lines.
pub fn p0_width(p: &P0Proof) -> usize {
    p.clauses().map(Clause::width).max().unwrap_or(0)
}

/// Checks every line; the proof need not derive `0`.
pub fn check_p0(p: &P0Proof) -> CheckReport {
    use ViolationCode::*;
    let size = p.lines.len();
    let width = p0_width(p);
    let n = p.num_vars();
    let mut trails: Vec<Option<Trail>> = vec![None; size];
    let fail = |i: usize, code: ViolationCode, d: String| CheckReport::fail(size, width, i + 1, code, d);
    let clause_at = |i: usize, j: usize| -> Result<&Clause, CheckReport> {
        if j >= i {
            return Err(fail(i, ParentNotEarlier, format!("premise {} does not precede the line", j + 1)));
        }
        p.lines[j].clause().ok_or_else(|| fail(i, WrongLineType, format!("line {} is not a clause", j + 1)))
    };
    for (i, line) in p.lines.iter().enumerate() {
        match line {
            P0Line::Axiom { clause } => {
                if !p.axioms.contains(clause) {
                    return fail(i, NotAnAxiom, format!("{clause} is not an axiom"));
                }
            }
            P0Line::Trail { parent, assign, unit } => {
                let base = match parent {
                    None => Trail::new(n),
                    Some(j) if *j < i => match &trails[*j] {
                        Some(t) => t.clone(),
                        None => return fail(i, WrongLineType, format!("line {} is not a trail", j + 1)),
                    },
                    Some(j) => return fail(i, ParentNotEarlier, format!("parent {} does not precede the line", j + 1)),
                };
                if assign.var == 0 || assign.var > n || base.contains_var(assign.var) {
                    return fail(i, AlreadyAssigned, format!("x{} is assigned or out of range", assign.var));
                }
                match assign.ann {
                    Ann::D => {
                        let smallest = p.order.sequence().iter().copied().find(|&v| !base.contains_var(v));
                        if smallest != Some(assign.var) {
                            return fail(i, NotPiSmallest, format!("x{} is not the π-smallest unassigned variable", assign.var));
                        }
                    }
                    Ann::U => {
                        let Some(j) = unit else {
                            return fail(i, NotUnit, "unit propagation without a clause".into());
                        };
                        let c = match clause_at(i, *j) {
                            Ok(c) => c,
                            Err(r) => return r,
                        };
                        if base.unit_of(c) != Some(assign.lit()) {
                            return fail(i, NotUnit, format!("{c} does not restrict to {}", assign.lit()));
                        }
                    }
                }
                let mut t = base;
                t.push(*assign).expect("variable checked unassigned");
                trails[i] = Some(t);
            }
            P0Line::Learn { c1, c2, trail, clause } => {
                let (a, b) = match (clause_at(i, *c1), clause_at(i, *c2)) {
                    (Ok(a), Ok(b)) => (a, b),
                    (Err(r), _) | (_, Err(r)) => return r,
                };
                if *trail >= i {
                    return fail(i, ParentNotEarlier, format!("trail {} does not precede the line", trail + 1));
                }
                let Some(t) = &trails[*trail] else {
                    return fail(i, WrongLineType, format!("line {} is not a trail", trail + 1));
                };
                let Some((x, res)) = a.resolve_any(b) else {
                    return fail(i, PivotMismatch, format!("{a} and {b} do not clash on exactly one variable"));
                };
                if &res != clause {
                    return fail(i, ResolventMismatch, format!("resolvent is {res}, line states {clause}"));
                }
                let Some(px) = t.position(x) else {
                    return fail(i, PivotNotInTrail, format!("x{x} is not on the trail"));
                };
                let lit = Lit::with_value(x, t.value(x).expect("assigned"));
                let c_side = if a.contains(lit) { a } else { b };
                if let Some(v) = c_side.vars().find(|&v| v != x && t.position(v).is_none_or(|q| q >= px)) {
                    return fail(i, PremiseNotBeforePivot, format!("x{v} of {c_side} is not assigned before x{x}"));
                }
                if !t.falsifies(&res) {
                    return fail(i, ResolventNotFalsified, format!("{res} is not falsified by the trail"));
                }
            }
            P0Line::Weaken { premise, clause } => {
                if !p.allow_weakening {
                    return fail(i, WeakeningDisallowed, "weakening is not enabled".into());
                }
                let c = match clause_at(i, *premise) {
                    Ok(c) => c,
                    Err(r) => return r,
                };
                if !c.is_subset_of(clause) {
                    return fail(i, WeakeningNotSuperset, format!("{clause} does not contain {c}"));
                }
            }
        }
    }
    CheckReport::ok(size, width)
}

/// `check_p0` plus the requirement that `0` is derived.
pub fn check_p0_refutation(p: &P0Proof) -> CheckReport {
    let r = check_p0(p);
    if r.valid && !p.is_refutation() {
        return CheckReport::fail(r.size, r.width, r.size.max(1), ViolationCode::NotRefutation, "no empty clause line");
    }
    r
}

/// The clause skeleton: trails are dropped and Learning lines become
/// resolutions. The map sends clause lines to skeleton nodes.
pub fn p0_strip_to_halfordered(p: &P0Proof) -> (ResolutionProof, Vec<Option<usize>>) {
    let mut out = ResolutionProof::new(p.num_vars());
    let mut map: Vec<Option<usize>> = vec![None; p.lines.len()];
    for (i, line) in p.lines.iter().enumerate() {
        map[i] = match line {
            P0Line::Trail { .. } => None,
            P0Line::Axiom { clause } => Some(out.push_axiom(clause.clone())),
            P0Line::Learn { c1, c2, clause, .. } => {
                let (a, b) = (map[*c1].expect("clause premise"), map[*c2].expect("clause premise"));
                let (x, _) = out.clause(a).resolve_any(out.clause(b)).expect("learning premises resolve");
                let id = out.push_resolution(a, b, x).expect("learning premises resolve");
                debug_assert_eq!(out.clause(id), clause);
                Some(id)
            }
            P0Line::Weaken { premise, clause } => Some(out.push_weakening(map[*premise].expect("clause premise"), clause.clone()).expect("weakening superset")),
        };
    }
    (out, map)
}

/// Incremental construction of π-P₀ proofs with shared trail prefixes and
/// deduplicated clause lines.
#[derive(Clone, Debug)]
pub struct P0Builder {
    proof: P0Proof,
    trie: HashMap<(Option<usize>, Assign), usize>,
    clause_line: HashMap<Clause, usize>,
}

impl P0Builder {
    pub fn new(axioms: Cnf, order: VarOrder) -> P0Builder {
        P0Builder { proof: P0Proof::new(axioms, order), trie: HashMap::new(), clause_line: HashMap::new() }
    }

    /// Continues an existing proof; its clause and trail lines are reused.
    pub fn from_proof(p: P0Proof) -> P0Builder {
        let mut b = P0Builder { proof: p, trie: HashMap::new(), clause_line: HashMap::new() };
        for (i, line) in b.proof.lines.iter().enumerate() {
            match line {
                P0Line::Trail { parent, assign, .. } => {
                    b.trie.entry((*parent, *assign)).or_insert(i);
                }
                l => {
                    b.clause_line.entry(l.clause().expect("clause line").clone()).or_insert(i);
                }
            }
        }
        b
    }

    pub fn with_weakening(mut self) -> P0Builder {
        self.proof.allow_weakening = true;
        self
    }

    pub fn order(&self) -> &VarOrder {
        &self.proof.order
    }

    pub fn proof(&self) -> &P0Proof {
        &self.proof
    }

    pub fn finish(self) -> P0Proof {
        self.proof
    }

    pub fn len(&self) -> usize {
        self.proof.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proof.lines.is_empty()
    }

    pub fn line_of(&self, c: &Clause) -> Option<usize> {
        self.clause_line.get(c).copied()
    }

    pub fn clause(&self, id: usize) -> &Clause {
        self.proof.lines[id].clause().expect("clause line")
    }

    pub fn trail_of(&self, id: Option<usize>) -> Trail {
        match id {
            None => Trail::new(self.proof.num_vars()),
            Some(i) => self.proof.trail_of(i),
        }
    }

    fn push_clause(&mut self, line: P0Line) -> usize {
        let c = line.clause().expect("clause line").clone();
        if let Some(&id) = self.clause_line.get(&c) {
            return id;
        }
        let id = self.proof.lines.len();
        self.proof.lines.push(line);
        self.clause_line.insert(c, id);
        id
    }

    pub fn axiom(&mut self, c: &Clause) -> usize {
        assert!(self.proof.axioms.contains(c), "{c} is not an axiom");
        self.push_clause(P0Line::Axiom { clause: c.clone() })
    }

    /// Extends trail `parent` by one assignment without checking the rule.
    pub fn extend(&mut self, parent: Option<usize>, assign: Assign, unit: Option<usize>) -> usize {
        if let Some(&id) = self.trie.get(&(parent, assign)) {
            return id;
        }
        let id = self.proof.lines.len();
        self.proof.lines.push(P0Line::Trail { parent, assign, unit });
        self.trie.insert((parent, assign), id);
        id
    }

    /// Decides `var = val`, first deciding every π-smaller unassigned variable `= 0`.
    pub fn decide(&mut self, parent: Option<usize>, var: Var, val: bool) -> usize {
        let t = self.trail_of(parent);
        let mut cur = parent;
        let seq: Vec<Var> = self.proof.order.sequence().to_vec();
        for v in seq {
            if t.contains_var(v) {
                continue;
            }
            if v == var {
                return self.extend(cur, Assign::d(var, val), None);
            }
            cur = Some(self.extend(cur, Assign::d(v, false), None));
        }
        panic!("x{var} is already on the trail");
    }

    /// Pads with `d = 0` decisions until `var` is the π-smallest unassigned variable.
    pub fn pad_to(&mut self, parent: Option<usize>, var: Var) -> Option<usize> {
        let t = self.trail_of(parent);
        let mut cur = parent;
        let seq: Vec<Var> = self.proof.order.sequence().to_vec();
        for v in seq {
            if v == var {
                break;
            }
            if !t.contains_var(v) {
                cur = Some(self.extend(cur, Assign::d(v, false), None));
            }
        }
        cur
    }

    /// Unit propagation with clause line `c` on trail `parent`.
    pub fn unit(&mut self, parent: Option<usize>, c: usize) -> usize {
        let t = self.trail_of(parent);
        let lit = t.unit_of(self.clause(c)).unwrap_or_else(|| panic!("{} is not unit under {t}", self.clause(c)));
        self.extend(parent, Assign::u(lit.var(), lit.is_positive()), Some(c))
    }

    /// Builds a trail from `Λ` following `assigns`; `u` entries take their
    /// justification from `units` in order.
    pub fn trail(&mut self, assigns: &[(Assign, Option<usize>)]) -> Option<usize> {
        let mut cur = None;
        for &(a, u) in assigns {
            cur = Some(self.extend(cur, a, u));
        }
        cur
    }

    /// The Learning rule on clause lines `c1`, `c2` with trail line `t`.
    pub fn learn(&mut self, c1: usize, c2: usize, t: usize) -> usize {
        let (_, res) = self.clause(c1).resolve_any(self.clause(c2)).unwrap_or_else(|| panic!("{} and {} do not resolve", self.clause(c1), self.clause(c2)));
        self.push_clause(P0Line::Learn { c1, c2, trail: t, clause: res })
    }

    pub fn weaken(&mut self, premise: usize, c: Clause) -> usize {
        assert!(self.clause(premise).is_subset_of(&c), "weakening must add literals");
        self.push_clause(P0Line::Weaken { premise, clause: c })
    }
}

/// Re-expresses a line list with `Rule`-style premises, for reporting.
pub fn premises(line: &P0Line) -> Vec<usize> {
    match line {
        P0Line::Axiom { .. } => vec![],
        P0Line::Trail { parent, unit, .. } => parent.iter().chain(unit.iter()).copied().collect(),
        P0Line::Learn { c1, c2, trail, .. } => vec![*c1, *c2, *trail],
        P0Line::Weaken { premise, .. } => vec![*premise],
    }
}

/// Keeps only lines needed for the first empty clause.
pub fn trim_p0(p: &P0Proof) -> P0Proof {
    let Some(root) = p.lines.iter().position(|l| l.clause().is_some_and(Clause::is_empty)) else {
        return p.clone();
    };
    let mut need = vec![false; root + 1];
    need[root] = true;
    for i in (0..=root).rev() {
        if need[i] {
            for j in premises(&p.lines[i]) {
                need[j] = true;
            }
        }
    }
    let mut map = vec![usize::MAX; root + 1];
    let mut out = P0Proof { order: p.order.clone(), axioms: p.axioms.clone(), lines: Vec::new(), allow_weakening: p.allow_weakening };
    for i in 0..=root {
        if !need[i] {
            continue;
        }
        map[i] = out.lines.len();
        let m = |j: usize| map[j];
        out.lines.push(match &p.lines[i] {
            P0Line::Axiom { clause } => P0Line::Axiom { clause: clause.clone() },
            P0Line::Trail { parent, assign, unit } => P0Line::Trail { parent: parent.map(m), assign: *assign, unit: unit.map(m) },
            P0Line::Learn { c1, c2, trail, clause } => P0Line::Learn { c1: m(*c1), c2: m(*c2), trail: m(*trail), clause: clause.clone() },
            P0Line::Weaken { premise, clause } => P0Line::Weaken { premise: m(*premise), clause: clause.clone() },
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cl(xs: &[i64]) -> Clause {
        Clause::from_dimacs(xs).unwrap()
    }

    #[test]
    fn contradictory_pair() {
        let tau = Cnf::new(1, [cl(&[1]), cl(&[-1])]).unwrap();
        let mut b = P0Builder::new(tau, VarOrder::identity(1));
        let a = b.axiom(&cl(&[1]));
        let na = b.axiom(&cl(&[-1]));
        let t = b.decide(None, 1, true);
        b.learn(a, na, t);
        let p = b.finish();
        assert!(check_p0_refutation(&p).valid);
        assert_eq!(p0_width(&p), 1);
        let (sk, _) = p0_strip_to_halfordered(&p);
        assert!(sk.is_refutation());
    }

    #[test]
    fn decision_must_be_smallest() {
        let tau = Cnf::new(2, [cl(&[1, 2])]).unwrap();
        let mut p = P0Proof::new(tau, VarOrder::identity(2));
        p.lines.push(P0Line::Trail { parent: None, assign: Assign::d(1, false), unit: None });
        assert!(check_p0(&p).valid);
        p.lines.push(P0Line::Trail { parent: None, assign: Assign::d(2, false), unit: None });
        let r = check_p0(&p);
        assert_eq!(r.code(), Some(ViolationCode::NotPiSmallest));
        assert_eq!(r.location(), Some(2));
    }

    #[test]
    fn learning_requires_small_side_before_pivot() {
        // Res(x1∨x2, ¬x2∨x3) on x2 under id: C = x1 is 2-small.
        let tau = Cnf::new(3, [cl(&[1, 2]), cl(&[-2, 3])]).unwrap();
        let mut b = P0Builder::new(tau.clone(), VarOrder::identity(3));
        let c1 = b.axiom(&cl(&[1, 2]));
        let c2 = b.axiom(&cl(&[-2, 3]));
        let t1 = b.decide(None, 1, false);
        let t2 = b.unit(Some(t1), c1);
        let t3 = b.decide(Some(t2), 3, false);
        b.learn(c1, c2, t3);
        assert!(check_p0(b.proof()).valid);
        // With x2 = 0 the premise holding ¬x2 is the small side, and x3 comes after x2.
        let mut b = P0Builder::new(tau, VarOrder::identity(3));
        let c1 = b.axiom(&cl(&[1, 2]));
        let c2 = b.axiom(&cl(&[-2, 3]));
        let t1 = b.decide(None, 1, false);
        let t2 = b.decide(Some(t1), 2, false);
        let t3 = b.decide(Some(t2), 3, false);
        b.learn(c1, c2, t3);
        let r = check_p0(b.proof());
        assert_eq!(r.code(), Some(ViolationCode::PremiseNotBeforePivot));
    }
}

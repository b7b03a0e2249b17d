//! Resolution proof DAGs, closures, subsystem checkers, restriction and
//! weakening contraction.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{Clause, Cnf, Restriction, Var, VarOrder};
use crate::report::{CheckReport, ViolationCode};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProofError {
    #[error("node {node}: premise {parent} does not precede it")]
    ParentOrder { node: usize, parent: usize },
    #[error("node {node}: premises do not resolve on x{pivot}")]
    NotResolvable { node: usize, pivot: Var },
    #[error("node {node}: weakening target does not contain its premise")]
    BadWeakening { node: usize },
    #[error("proof contains no empty clause")]
    NoEmptyClause,
    #[error("node set is not parent-complete and path-complete")]
    NotComplete,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Rule {
    Axiom,
    Resolution { p1: usize, p2: usize, pivot: Var },
    Weakening { p: usize },
}

impl Rule {
    pub fn parents(&self) -> Vec<usize> {
        match *self {
            Rule::Axiom => vec![],
            Rule::Resolution { p1, p2, .. } => vec![p1, p2],
            Rule::Weakening { p } => vec![p],
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct ProofNode {
    pub clause: Clause,
    pub rule: Rule,
}

/// A resolution (optionally + weakening) proof. Node ids are positions in
/// `nodes`; every premise precedes its conclusion.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct ResolutionProof {
    pub num_vars: u32,
    pub nodes: Vec<ProofNode>,
}

impl ResolutionProof {
    pub fn new(num_vars: u32) -> ResolutionProof {
        ResolutionProof { num_vars, nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn clause(&self, v: usize) -> &Clause {
        &self.nodes[v].clause
    }

    pub fn rule(&self, v: usize) -> Rule {
        self.nodes[v].rule
    }

    pub fn push_axiom(&mut self, c: Clause) -> usize {
        self.nodes.push(ProofNode { clause: c, rule: Rule::Axiom });
        self.nodes.len() - 1
    }

    pub fn push_resolution(&mut self, p1: usize, p2: usize, pivot: Var) -> Result<usize, ProofError> {
        let node = self.nodes.len();
        if p1 >= node || p2 >= node {
            return Err(ProofError::ParentOrder { node, parent: p1.max(p2) });
        }
        let c = self.nodes[p1]
            .clause
            .resolve(&self.nodes[p2].clause, pivot)
            .ok_or(ProofError::NotResolvable { node, pivot })?;
        self.nodes.push(ProofNode { clause: c, rule: Rule::Resolution { p1, p2, pivot } });
        Ok(node)
    }

    pub fn push_weakening(&mut self, p: usize, c: Clause) -> Result<usize, ProofError> {
        let node = self.nodes.len();
        if p >= node {
            return Err(ProofError::ParentOrder { node, parent: p });
        }
        if !self.nodes[p].clause.is_subset_of(&c) {
            return Err(ProofError::BadWeakening { node });
        }
        self.nodes.push(ProofNode { clause: c, rule: Rule::Weakening { p } });
        Ok(node)
    }

    pub fn has_weakening(&self) -> bool {
        self.nodes.iter().any(|n| matches!(n.rule, Rule::Weakening { .. }))
    }

    pub fn first_empty(&self) -> Option<usize> {
        self.nodes.iter().position(|n| n.clause.is_empty())
    }

    pub fn is_refutation(&self) -> bool {
        self.first_empty().is_some()
    }

    pub fn resolution_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n.rule, Rule::Resolution { .. })).count()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.nodes.iter().flat_map(|n| n.clause.vars()).collect()
    }

    pub fn axioms(&self) -> BTreeSet<Clause> {
        self.nodes
            .iter()
            .filter(|n| n.rule == Rule::Axiom)
            .map(|n| n.clause.clone())
            .collect()
    }

    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.nodes.len()];
        for (v, n) in self.nodes.iter().enumerate() {
            for p in n.rule.parents() {
                if !ch[p].contains(&v) {
                    ch[p].push(v);
                }
            }
        }
        ch
    }
}

pub fn proof_size(pi: &ResolutionProof) -> usize {
    pi.len()
}

pub fn proof_width(pi: &ResolutionProof) -> usize {
    pi.nodes.iter().map(|n| n.clause.width()).max().unwrap_or(0)
}

/// Local validity of every node, axiom membership in `tau` and topological
/// order. Weakening is accepted only when `allow_weakening` is set.
pub fn check_resolution_with(pi: &ResolutionProof, tau: &Cnf, allow_weakening: bool) -> CheckReport {
    let (size, width) = (pi.len(), proof_width(pi));
    for (v, n) in pi.nodes.iter().enumerate() {
        let id = v + 1;
        match n.rule {
            Rule::Axiom => {
                if !tau.contains(&n.clause) {
                    return CheckReport::fail(size, width, id, ViolationCode::NotAnAxiom, format!("{} is not in the CNF", n.clause));
                }
            }
            Rule::Resolution { p1, p2, pivot } => {
                if p1 >= v || p2 >= v {
                    return CheckReport::fail(size, width, id, ViolationCode::ParentNotEarlier, "premise does not precede");
                }
                let (a, b) = (pi.clause(p1), pi.clause(p2));
                if a.clash_vars(b) != [pivot] {
                    return CheckReport::fail(size, width, id, ViolationCode::PivotMismatch, format!("premises do not clash exactly on x{pivot}"));
                }
                if a.resolve(b, pivot).as_ref() != Some(&n.clause) {
                    return CheckReport::fail(size, width, id, ViolationCode::ResolventMismatch, "clause is not the resolvent");
                }
            }
            Rule::Weakening { p } => {
                if !allow_weakening {
                    return CheckReport::fail(size, width, id, ViolationCode::WeakeningDisallowed, "weakening not allowed");
                }
                if p >= v {
                    return CheckReport::fail(size, width, id, ViolationCode::ParentNotEarlier, "premise does not precede");
                }
                if !pi.clause(p).is_subset_of(&n.clause) {
                    return CheckReport::fail(size, width, id, ViolationCode::WeakeningNotSuperset, "premise is not a subclause");
                }
            }
        }
    }
    CheckReport::ok(size, width)
}

pub fn check_resolution(pi: &ResolutionProof, tau: &Cnf) -> CheckReport {
    check_resolution_with(pi, tau, pi.has_weakening())
}

/// `check_resolution` plus the requirement that the proof derives `0`.
pub fn check_refutation(pi: &ResolutionProof, tau: &Cnf) -> CheckReport {
    let r = check_resolution(pi, tau);
    if r.valid && !pi.is_refutation() {
        return CheckReport::fail(r.size, r.width, pi.len(), ViolationCode::NotRefutation, "no empty clause");
    }
    r
}

fn premise_below(pi: &ResolutionProof, order: &VarOrder, p: usize, pivot: Var) -> bool {
    order.below(pi.clause(p), pivot)
}

pub fn check_ordered(pi: &ResolutionProof, order: &VarOrder) -> CheckReport {
    let (size, width) = (pi.len(), proof_width(pi));
    for (v, n) in pi.nodes.iter().enumerate() {
        if let Rule::Resolution { p1, p2, pivot } = n.rule {
            if !(premise_below(pi, order, p1, pivot) && premise_below(pi, order, p2, pivot)) {
                return CheckReport::fail(size, width, v + 1, ViolationCode::NotOrdered, format!("a premise has a variable above x{pivot}"));
            }
        }
    }
    CheckReport::ok(size, width)
}

pub fn check_half_ordered(pi: &ResolutionProof, order: &VarOrder) -> CheckReport {
    let (size, width) = (pi.len(), proof_width(pi));
    for (v, n) in pi.nodes.iter().enumerate() {
        if let Rule::Resolution { p1, p2, pivot } = n.rule {
            if !(premise_below(pi, order, p1, pivot) || premise_below(pi, order, p2, pivot)) {
                return CheckReport::fail(size, width, v + 1, ViolationCode::NotHalfOrdered, format!("both premises have a variable above x{pivot}"));
            }
        }
    }
    CheckReport::ok(size, width)
}

/// "Ordered up to `k`": if `v` resolves on a variable of rank `i ≤ k`, every
/// resolution below `v` (towards the sink) is on a variable of rank `< i`.
/// Returns the first offending node.
pub fn ordered_up_to(pi: &ResolutionProof, order: &VarOrder, k: u32) -> Result<(), usize> {
    let mut bound = vec![u32::MAX; pi.len()];
    for (v, n) in pi.nodes.iter().enumerate() {
        let mut b = u32::MAX;
        for p in n.rule.parents() {
            b = b.min(bound[p]);
            if let Rule::Resolution { pivot, .. } = pi.rule(p) {
                let r = order.rank(pivot);
                if r <= k {
                    b = b.min(r);
                }
            }
        }
        if let Rule::Resolution { pivot, .. } = n.rule {
            if order.rank(pivot) >= b {
                return Err(v);
            }
        }
        bound[v] = b;
    }
    Ok(())
}

/// Upward closure: `s` together with all of its descendants.
pub fn ucl(pi: &ResolutionProof, s: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut inside = vec![false; pi.len()];
    for &v in s {
        inside[v] = true;
    }
    for (v, n) in pi.nodes.iter().enumerate() {
        if !inside[v] && n.rule.parents().iter().any(|&p| inside[p]) {
            inside[v] = true;
        }
    }
    (0..pi.len()).filter(|&v| inside[v]).collect()
}

/// Downward closure: `s` together with all of its ancestors.
pub fn dcl(pi: &ResolutionProof, s: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut inside = vec![false; pi.len()];
    for &v in s {
        inside[v] = true;
    }
    for v in (0..pi.len()).rev() {
        if inside[v] {
            for p in pi.rule(v).parents() {
                inside[p] = true;
            }
        }
    }
    (0..pi.len()).filter(|&v| inside[v]).collect()
}

fn membership(pi: &ResolutionProof, s: &BTreeSet<usize>) -> Vec<bool> {
    let mut m = vec![false; pi.len()];
    for &v in s {
        m[v] = true;
    }
    m
}

/// For each node: does some strict ancestor lie in `s`?
fn ancestor_in(pi: &ResolutionProof, m: &[bool]) -> Vec<bool> {
    let mut a = vec![false; pi.len()];
    for v in 0..pi.len() {
        a[v] = pi.rule(v).parents().iter().any(|&p| m[p] || a[p]);
    }
    a
}

/// For each node: does some strict descendant lie in `s`?
fn descendant_in(pi: &ResolutionProof, m: &[bool]) -> Vec<bool> {
    let mut d = vec![false; pi.len()];
    for v in (0..pi.len()).rev() {
        if m[v] || d[v] {
            for p in pi.rule(v).parents() {
                d[p] = true;
            }
        }
    }
    d
}

pub fn is_parent_complete(pi: &ResolutionProof, s: &BTreeSet<usize>) -> bool {
    let m = membership(pi, s);
    s.iter().all(|&v| {
        let ps = pi.rule(v).parents();
        ps.len() < 2 || ps.iter().all(|&p| m[p]) || ps.iter().all(|&p| !m[p])
    })
}

pub fn is_path_complete(pi: &ResolutionProof, s: &BTreeSet<usize>) -> bool {
    let m = membership(pi, s);
    let a = ancestor_in(pi, &m);
    let d = descendant_in(pi, &m);
    (0..pi.len()).all(|w| m[w] || !(a[w] && d[w]))
}

pub fn min_nodes(pi: &ResolutionProof, s: &BTreeSet<usize>) -> BTreeSet<usize> {
    let m = membership(pi, s);
    let a = ancestor_in(pi, &m);
    s.iter().copied().filter(|&v| !a[v]).collect()
}

pub fn max_nodes(pi: &ResolutionProof, s: &BTreeSet<usize>) -> BTreeSet<usize> {
    let m = membership(pi, s);
    let d = descendant_in(pi, &m);
    s.iter().copied().filter(|&v| !d[v]).collect()
}

/// The induced subproof on a parent- and path-complete node set. Nodes of
/// `s` whose premises lie outside `s` become axioms. Returns the proof and
/// the map from old ids to new ids.
pub fn subproof_on(pi: &ResolutionProof, s: &BTreeSet<usize>) -> Result<(ResolutionProof, Vec<Option<usize>>), ProofError> {
    if !is_parent_complete(pi, s) || !is_path_complete(pi, s) {
        return Err(ProofError::NotComplete);
    }
    Ok(induced(pi, s))
}

fn induced(pi: &ResolutionProof, s: &BTreeSet<usize>) -> (ResolutionProof, Vec<Option<usize>>) {
    let mut map = vec![None; pi.len()];
    let mut out = ResolutionProof::new(pi.num_vars);
    for &v in s {
        let n = &pi.nodes[v];
        let rule = match n.rule {
            Rule::Resolution { p1, p2, pivot } => match (map[p1], map[p2]) {
                (Some(a), Some(b)) => Rule::Resolution { p1: a, p2: b, pivot },
                _ => Rule::Axiom,
            },
            Rule::Weakening { p } => match map[p] {
                Some(a) => Rule::Weakening { p: a },
                None => Rule::Axiom,
            },
            Rule::Axiom => Rule::Axiom,
        };
        out.nodes.push(ProofNode { clause: n.clause.clone(), rule });
        map[v] = Some(out.len() - 1);
    }
    (out, map)
}

/// The subrefutation below the first occurrence of `0`.
pub fn connected_core(pi: &ResolutionProof) -> Result<(ResolutionProof, Vec<Option<usize>>), ProofError> {
    let root = pi.first_empty().ok_or(ProofError::NoEmptyClause)?;
    let s = dcl(pi, &BTreeSet::from([root]));
    Ok(induced(pi, &s))
}

pub fn is_connected_refutation(pi: &ResolutionProof) -> bool {
    match pi.first_empty() {
        Some(root) => root + 1 == pi.len() && dcl(pi, &BTreeSet::from([root])).len() == pi.len(),
        None => false,
    }
}

/// `Π|_ρ`. Satisfied nodes are pruned; a resolution whose pivot is assigned
/// contracts to the premise whose pivot literal was falsified; a resolution
/// with a premise that lost the pivot contracts to that premise (premise 1
/// first). Returns the restricted proof and, per old node, its new node or
/// `None` when pruned.
pub fn restrict_proof(pi: &ResolutionProof, rho: &Restriction) -> (ResolutionProof, Vec<Option<usize>>) {
    let mut out = ResolutionProof::new(pi.num_vars);
    let mut map: Vec<Option<usize>> = vec![None; pi.len()];
    for (v, n) in pi.nodes.iter().enumerate() {
        map[v] = match n.rule {
            Rule::Axiom => n.clause.restrict(rho).map(|c| out.push_axiom(c)),
            Rule::Weakening { p } => match (map[p], n.clause.restrict(rho)) {
                (Some(a), Some(c)) => Some(out.push_weakening(a, c).expect("restriction keeps weakening valid")),
                _ => None,
            },
            Rule::Resolution { p1, p2, pivot } => match rho.get(pivot) {
                Some(a) => {
                    // The premise containing the literal x^{1-a}.
                    if pi.clause(p1).polarity(pivot) == Some(!a) {
                        map[p1]
                    } else {
                        map[p2]
                    }
                }
                None => match (map[p1], map[p2]) {
                    (Some(a), Some(b)) => {
                        if !out.clause(a).contains_var(pivot) {
                            Some(a)
                        } else if !out.clause(b).contains_var(pivot) {
                            Some(b)
                        } else {
                            Some(out.push_resolution(a, b, pivot).expect("restricted premises still clash only on the pivot"))
                        }
                    }
                    _ => None,
                },
            },
        };
    }
    (out, map)
}

/// Remove all weakenings. Returns the weakening-free proof and the
/// representative map from old nodes to new nodes; the representative's
/// clause is a subclause of the old clause.
pub fn contract_weakenings(pi: &ResolutionProof) -> (ResolutionProof, Vec<usize>) {
    let mut out = ResolutionProof::new(pi.num_vars);
    let mut rep = vec![0usize; pi.len()];
    for (v, n) in pi.nodes.iter().enumerate() {
        rep[v] = match n.rule {
            Rule::Axiom => out.push_axiom(n.clause.clone()),
            Rule::Weakening { p } => rep[p],
            Rule::Resolution { p1, p2, pivot } => {
                let (a, b) = (rep[p1], rep[p2]);
                if !out.clause(a).contains_var(pivot) {
                    a
                } else if !out.clause(b).contains_var(pivot) {
                    b
                } else {
                    out.push_resolution(a, b, pivot).expect("subclauses of resolvable premises stay resolvable")
                }
            }
        };
    }
    (out, rep)
}

/// Graphviz rendering with clause labels.
pub fn to_dot(pi: &ResolutionProof) -> String {
    let mut s = String::from("digraph proof {\n  rankdir=BT;\n");
    for (v, n) in pi.nodes.iter().enumerate() {
        let shape = match n.rule {
            Rule::Axiom => "box",
            Rule::Resolution { .. } => "ellipse",
            Rule::Weakening { .. } => "diamond",
        };
        let _ = writeln!(s, "  n{} [label=\"{}: {}\", shape={}];", v + 1, v + 1, n.clause, shape);
        match n.rule {
            Rule::Resolution { p1, p2, pivot } => {
                let _ = writeln!(s, "  n{} -> n{} [label=\"x{}\"];", p1 + 1, v + 1, pivot);
                let _ = writeln!(s, "  n{} -> n{};", p2 + 1, v + 1);
            }
            Rule::Weakening { p } => {
                let _ = writeln!(s, "  n{} -> n{} [style=dashed];", p + 1, v + 1);
            }
            Rule::Axiom => {}
        }
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::gen_induction;

    fn cl(xs: &[i64]) -> Clause {
        Clause::from_dimacs(xs).unwrap()
    }

    fn tiny() -> (ResolutionProof, Cnf) {
        let tau = Cnf::new(1, [cl(&[1]), cl(&[-1])]).unwrap();
        let mut pi = ResolutionProof::new(1);
        let a = pi.push_axiom(cl(&[1]));
        let b = pi.push_axiom(cl(&[-1]));
        pi.push_resolution(a, b, 1).unwrap();
        (pi, tau)
    }

    fn ind2_proof() -> (ResolutionProof, Cnf) {
        let tau = gen_induction(2).unwrap();
        let mut pi = ResolutionProof::new(2);
        let a = pi.push_axiom(cl(&[1]));
        let b = pi.push_axiom(cl(&[-1, 2]));
        let c = pi.push_axiom(cl(&[-2]));
        let d = pi.push_resolution(a, b, 1).unwrap();
        pi.push_resolution(d, c, 2).unwrap();
        (pi, tau)
    }

    #[test]
    fn check_tiny() {
        let (mut pi, tau) = tiny();
        let r = check_resolution(&pi, &tau);
        assert!(r.valid);
        assert_eq!((r.size, r.width), (3, 1));
        pi.nodes[2].rule = Rule::Resolution { p1: 0, p2: 1, pivot: 2 };
        let r = check_resolution(&pi, &tau);
        assert_eq!(r.code(), Some(ViolationCode::PivotMismatch));
        assert_eq!(r.location(), Some(3));
    }

    #[test]
    fn ordering_checks() {
        let id = VarOrder::identity(3);
        let mut pi = ResolutionProof::new(3);
        let a = pi.push_axiom(cl(&[1, 2]));
        let b = pi.push_axiom(cl(&[-2]));
        pi.push_resolution(a, b, 2).unwrap();
        assert!(check_ordered(&pi, &id).valid && check_half_ordered(&pi, &id).valid);

        let mut pi = ResolutionProof::new(3);
        let a = pi.push_axiom(cl(&[1, 3]));
        let b = pi.push_axiom(cl(&[-1, 2]));
        pi.push_resolution(a, b, 1).unwrap();
        assert_eq!(check_ordered(&pi, &id).code(), Some(ViolationCode::NotOrdered));
        assert_eq!(check_half_ordered(&pi, &id).code(), Some(ViolationCode::NotHalfOrdered));

        let mut pi = ResolutionProof::new(3);
        let a = pi.push_axiom(cl(&[1, 2]));
        let b = pi.push_axiom(cl(&[-2, 3]));
        pi.push_resolution(a, b, 2).unwrap();
        assert!(!check_ordered(&pi, &id).valid);
        assert!(check_half_ordered(&pi, &id).valid);
    }

    #[test]
    fn closures_and_core() {
        let (pi, _) = ind2_proof();
        assert_eq!(dcl(&pi, &BTreeSet::from([4])).len(), 5);
        assert_eq!(ucl(&pi, &BTreeSet::from([0, 1, 2])).len(), 5);
        assert!(!is_parent_complete(&pi, &BTreeSet::from([0, 3])));
        let all: BTreeSet<usize> = (0..5).collect();
        assert!(is_parent_complete(&pi, &all) && is_path_complete(&pi, &all));
        let (core, _) = connected_core(&pi).unwrap();
        assert_eq!(core, pi);
        let mut junk = pi.clone();
        junk.push_axiom(cl(&[1]));
        let mut junk2 = ResolutionProof::new(2);
        junk2.push_axiom(cl(&[2]));
        for n in &pi.nodes {
            junk2.nodes.push(ProofNode {
                clause: n.clause.clone(),
                rule: match n.rule {
                    Rule::Resolution { p1, p2, pivot } => Rule::Resolution { p1: p1 + 1, p2: p2 + 1, pivot },
                    r => r,
                },
            });
        }
        let (core, _) = connected_core(&junk2).unwrap();
        assert_eq!(core.len(), 5);
        assert!(check_refutation(&core, &gen_induction(2).unwrap()).valid);
        assert!(connected_core(&ResolutionProof::new(1)).is_err());
    }

    #[test]
    fn restriction_example() {
        let (pi, tau) = ind2_proof();
        let rho = Restriction::single(1, false);
        let (r, _) = restrict_proof(&pi, &rho);
        let (core, _) = connected_core(&r).unwrap();
        assert_eq!(core.len(), 1);
        assert!(core.clause(0).is_empty());
        assert!(check_resolution(&core, &tau.restrict(&rho)).valid);
        let (same, _) = restrict_proof(&pi, &Restriction::new());
        assert_eq!(same, pi);
    }

    #[test]
    fn contraction() {
        let tau = Cnf::new(2, [cl(&[1]), cl(&[-1])]).unwrap();
        let mut pi = ResolutionProof::new(2);
        let a = pi.push_axiom(cl(&[1]));
        let w1 = pi.push_weakening(a, cl(&[1, 2])).unwrap();
        let w2 = pi.push_weakening(w1, cl(&[1, -2])).unwrap_err();
        assert_eq!(w2, ProofError::BadWeakening { node: 2 });
        let b = pi.push_axiom(cl(&[-1]));
        let r = pi.push_resolution(w1, b, 1).unwrap();
        assert_eq!(pi.clause(r), &cl(&[2]));
        let (c, rep) = contract_weakenings(&pi);
        assert!(!c.has_weakening());
        assert_eq!(c.clause(rep[r]), &Clause::empty());
        assert!(c.len() <= pi.len());
        assert!(check_resolution(&c, &tau).valid);
    }

    #[test]
    fn up_to_audit() {
        let id = VarOrder::identity(3);
        let mut pi = ResolutionProof::new(3);
        let a = pi.push_axiom(cl(&[1, 2]));
        let b = pi.push_axiom(cl(&[-1]));
        let c = pi.push_resolution(a, b, 1).unwrap();
        let d = pi.push_axiom(cl(&[-2]));
        pi.push_resolution(c, d, 2).unwrap();
        assert!(ordered_up_to(&pi, &id, 0).is_ok());
        assert_eq!(ordered_up_to(&pi, &id, 1), Err(4));
    }
}

//! Lifting, the unit-literal extension of a refutation, and the recursive
//! simulation of resolution in π-P₀.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::cnf::{Clause, Cnf, Lit, Restriction, Var, VarOrder};
use crate::p0::{check_p0, P0Builder, P0Proof};
use crate::resproof::{check_refutation, check_resolution, connected_core, contract_weakenings, is_connected_refutation, restrict_proof, ResolutionProof, Rule};

use super::deletion::delete_vars;
use super::p0ops::{embed, half_res, line_with, unit_res};
use super::{audit, TransformError};

/// The axiom choice of a lifting: each clause `C` of `ψ` goes to the
/// smaller of `C`, `C∨x` that lies in `τ`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct LiftMap {
    pub var: Var,
    pub map: BTreeMap<Clause, Clause>,
}

impl LiftMap {
    pub fn new(psi: &Cnf, tau: &Cnf, x: Var) -> Result<LiftMap, TransformError> {
        if psi.vars().contains(&x) {
            return Err(TransformError::Precondition(format!("x{x} occurs in ψ")));
        }
        let mut map = BTreeMap::new();
        for c in psi.clauses() {
            let lifted = if tau.contains(c) {
                c.clone()
            } else {
                let cx = c.with_lit(Lit::pos(x)).expect("x is not in ψ");
                if !tau.contains(&cx) {
                    return Err(TransformError::Precondition(format!("neither {c} nor {cx} is in τ")));
                }
                cx
            };
            map.insert(c.clone(), lifted);
        }
        Ok(LiftMap { var: x, map })
    }
}

/// `lift_τ(Π)`: prefixes every trail with `[x d= 0]` and replaces axioms by
/// their lifts. The result is checked.
pub fn lift(proof: &P0Proof, tau: &Cnf, map: &LiftMap) -> Result<P0Proof, TransformError> {
    let x = map.var;
    if !check_p0(proof).valid {
        return Err(TransformError::InvalidInput("source is not a valid π-P₀ proof".into()));
    }
    if proof.clauses().any(|c| c.contains_var(x)) {
        return Err(TransformError::InvalidInput(format!("x{x} occurs in the source proof")));
    }
    if proof.clauses().flat_map(|c| c.vars()).any(|v| proof.order.lt(v, x)) {
        return Err(TransformError::Precondition(format!("x{x} is not π-below the variables of the source")));
    }
    let mut b = P0Builder::new(tau.clone(), proof.order.clone());
    if proof.allow_weakening {
        b = b.with_weakening();
    }
    embed(&mut b, proof, Some(x), |b, c| {
        let lifted = map.map.get(c).ok_or_else(|| TransformError::Precondition(format!("{c} has no lift")))?;
        Ok(b.axiom(lifted))
    })?;
    let out = b.finish();
    let rep = check_p0(&out);
    if !rep.valid {
        return Err(audit(0, format!("lifted proof rejected: {:?}", rep.violation)));
    }
    Ok(out)
}

fn input_check(pi: &ResolutionProof, tau: &Cnf) -> Result<ResolutionProof, TransformError> {
    if !check_refutation(pi, tau).valid {
        return Err(TransformError::InvalidInput("not a refutation of the CNF".into()));
    }
    let pi = if pi.has_weakening() { contract_weakenings(pi).0 } else { pi.clone() };
    if is_connected_refutation(&pi) {
        Ok(pi)
    } else {
        Ok(connected_core(&pi)?.0)
    }
}

/// Appends to a connected refutation short derivations of both unit
/// literals of each of its variables, working from the root upwards.
pub fn all_lits_from_refutation(pi: &ResolutionProof, tau: &Cnf) -> Result<ResolutionProof, TransformError> {
    let pi = input_check(pi, tau)?;
    let mut out = pi.clone();
    let mut unit: BTreeMap<Lit, usize> = BTreeMap::new();
    for v in 0..out.len() {
        if out.clause(v).width() == 1 {
            unit.entry(out.clause(v).lits()[0]).or_insert(v);
        }
    }
    let n = pi.vars().len();
    for v in (0..pi.len()).rev() {
        let Rule::Resolution { p1, p2, pivot } = pi.rule(v) else { continue };
        for p in [p1, p2] {
            let lit = Lit::with_value(pivot, pi.clause(p).polarity(pivot).expect("premise holds the pivot"));
            if unit.contains_key(&lit) {
                continue;
            }
            let mut cur = p;
            for &l in pi.clause(p).lits() {
                if l.var() == pivot {
                    continue;
                }
                let u = *unit.get(&l.negated()).ok_or_else(|| audit(v + 1, format!("unit {} is not derived yet", l.negated())))?;
                cur = out.push_resolution(cur, u, l.var())?;
            }
            unit.insert(lit, cur);
        }
    }
    if out.len() > pi.len() + 2 * n * n {
        return Err(audit(0, format!("size {} exceeds |Π| + 2n²", out.len())));
    }
    if !check_resolution(&out, tau).valid {
        return Err(audit(0, "output is not a resolution proof"));
    }
    Ok(out)
}

/// An axiom of `tau` containing `x^{1-a}` whose restriction is used below
/// the first `0` of `pi|_{x=a}`.
pub fn find_axiom_with_literal(pi: &ResolutionProof, tau: &Cnf, x: Var, a: bool) -> Result<Clause, TransformError> {
    let (r, rmap) = restrict_proof(pi, &Restriction::single(x, a));
    let (_, cmap) = connected_core(&r)?;
    let want = Lit::with_value(x, !a);
    (0..pi.len())
        .filter(|&v| pi.rule(v) == Rule::Axiom && pi.clause(v).contains(want) && tau.contains(pi.clause(v)))
        .find(|&v| rmap[v].is_some_and(|w| cmap[w].is_some()))
        .map(|v| pi.clause(v).clone())
        .ok_or_else(|| audit(0, format!("no axiom with {want} is used below 0 in the restriction")))
}

#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct PsimReport {
    pub calls: usize,
    pub max_depth: usize,
    /// Variables of `τ` outside `var(Π)` whose unit literals could not both be derived.
    pub out_of_scope: Vec<Var>,
    /// Number of recursion levels at which the disjointness accounting was checked.
    pub disjointness_checks: usize,
    pub notices: Vec<String>,
}

pub const PSIM_CALL_BUDGET: usize = 1_000_000;

/// A π-P₀ proof deriving both unit literals of every variable of `var(Π)`.
pub fn psim(pi: &ResolutionProof, tau: &Cnf, order: &VarOrder) -> Result<P0Proof, TransformError> {
    psim_with_report(pi, tau, order).map(|r| r.0)
}

pub fn psim_with_report(pi: &ResolutionProof, tau: &Cnf, order: &VarOrder) -> Result<(P0Proof, PsimReport), TransformError> {
    if order.n() != tau.num_vars() {
        return Err(TransformError::InvalidInput("order and CNF disagree on n".into()));
    }
    let mut report = PsimReport::default();
    if !is_connected_refutation(pi) {
        report.notices.push("input replaced by its connected core".into());
    }
    let core = input_check(pi, tau)?;
    let mut sim = Sim { order, report: &mut report };
    let inner = sim.run(&core, 0)?;
    let mut b = P0Builder::from_proof(P0Proof { axioms: tau.clone(), ..inner });
    // Variables outside var(Π): resolve an axiom with the units of its other literals.
    let vars = core.vars();
    for v in 1..=tau.num_vars() {
        if vars.contains(&v) {
            continue;
        }
        let mut ok = true;
        for a in [false, true] {
            let lit = Lit::with_value(v, a);
            if b.line_of(&Clause::unit(lit)).is_some() {
                continue;
            }
            let found = tau
                .clauses()
                .iter()
                .find(|c| c.contains(lit) && c.lits().iter().all(|&l| l == lit || b.line_of(&Clause::unit(l.negated())).is_some()))
                .cloned();
            match found {
                Some(c) => {
                    let mut cur = b.axiom(&c);
                    for &l in c.lits() {
                        if l != lit {
                            let u = b.line_of(&Clause::unit(l.negated())).expect("checked above");
                            cur = half_res(&mut b, cur, u)?;
                        }
                    }
                }
                None => ok = false,
            }
        }
        if !ok {
            report.out_of_scope.push(v);
        }
    }
    let out = b.finish();
    let rep = check_p0(&out);
    if !rep.valid {
        return Err(audit(0, format!("psim output rejected: {:?}", rep.violation)));
    }
    Ok((out, report))
}

struct Sim<'a> {
    order: &'a VarOrder,
    report: &'a mut PsimReport,
}

fn unit_lines(p: &P0Proof, vars: &BTreeSet<Var>, map: &[usize]) -> Result<BTreeMap<Lit, usize>, TransformError> {
    let mut out = BTreeMap::new();
    for &y in vars {
        for a in [false, true] {
            let lit = Lit::with_value(y, a);
            let i = line_with(p, &Clause::unit(lit)).ok_or_else(|| audit(0, format!("recursive call did not derive {lit}")))?;
            out.insert(lit, map[i]);
        }
    }
    Ok(out)
}

impl Sim<'_> {
    fn run(&mut self, pi: &ResolutionProof, depth: usize) -> Result<P0Proof, TransformError> {
        self.report.calls += 1;
        self.report.max_depth = self.report.max_depth.max(depth);
        if self.report.calls > PSIM_CALL_BUDGET {
            return Err(TransformError::Budget);
        }
        let n = pi.num_vars;
        let psi = Cnf::new(n, pi.axioms()).expect("axioms are well formed");
        let mut b = P0Builder::new(psi.clone(), self.order.clone());
        let vars = pi.vars();
        if vars.len() <= 1 {
            for c in psi.clauses() {
                b.axiom(c);
            }
            return Ok(b.finish());
        }
        let x1 = *vars.iter().min_by_key(|&&v| self.order.rank(v)).expect("non-empty");
        let pos = Clause::unit(Lit::pos(x1));
        let neg = Clause::unit(Lit::neg(x1));

        // Recurse on the part of Π below 0 under x1 = 0 and lift it.
        let pi0 = connected_core(&restrict_proof(pi, &Restriction::single(x1, false)).0)?.0;
        let s0 = pi0.vars();
        let mut units: BTreeMap<Lit, usize> = BTreeMap::new();
        let x1_line = if s0.is_empty() {
            b.axiom(&pos)
        } else {
            let q0 = self.run(&pi0, depth + 1)?;
            let map = embed(&mut b, &q0, Some(x1), |b, c| {
                let lifted = if psi.contains(c) { c.clone() } else { c.with_lit(Lit::pos(x1)).expect("x1 is not in Π⁰") };
                if !psi.contains(&lifted) {
                    return Err(audit(depth, format!("{c} has no lift")));
                }
                Ok(b.axiom(&lifted))
            })?;
            units = unit_lines(&q0, &s0, &map)?;
            let with_x1 = s0.iter().copied().find(|&y| [false, true].iter().any(|&a| b.clause(units[&Lit::with_value(y, a)]).contains_var(x1)));
            match with_x1 {
                Some(y) => half_res(&mut b, units[&Lit::neg(y)], units[&Lit::pos(y)])?,
                None => {
                    let c = find_axiom_with_literal(pi, &psi, x1, false)?;
                    let mut cur = b.axiom(&c);
                    for &l in c.lits() {
                        if l.var() != x1 {
                            cur = half_res(&mut b, cur, units[&l.negated()])?;
                        }
                    }
                    cur
                }
            }
        };
        if b.clause(x1_line) != &pos {
            return Err(audit(depth, format!("derived {} instead of x{x1}", b.clause(x1_line))));
        }

        // τ*: every axiom with x̄1 resolved against x1.
        let mut tstar: HashMap<Clause, usize> = HashMap::new();
        for c in psi.clauses() {
            let a = b.axiom(c);
            let line = if c.contains(Lit::neg(x1)) { half_res(&mut b, a, x1_line)? } else { a };
            tstar.insert(c.clone(), line);
        }

        // Deletion rounds over the variables not seen yet.
        let mut s: BTreeSet<Var> = s0.clone();
        let mut seen_res = pi0.resolution_count();
        let mut blocks: Vec<BTreeSet<Var>> = vec![s0.clone()];
        loop {
            let mut del_set = s.clone();
            del_set.insert(x1);
            if del_set == vars {
                break;
            }
            let (pii, _) = delete_vars(pi, &del_set)?;
            let vi = pii.vars();
            if vi.is_empty() || vi.iter().any(|v| del_set.contains(v)) {
                return Err(audit(depth, "deleted refutation is trivial or reuses variables"));
            }
            let mut ax: HashMap<Clause, usize> = HashMap::new();
            for d in pii.axioms() {
                let c = psi
                    .clauses()
                    .iter()
                    .find(|c| c.without_vars(&del_set) == d)
                    .ok_or_else(|| audit(depth, format!("{d} is not a deleted axiom")))?;
                let mut cur = tstar[c];
                for &l in c.lits() {
                    if s.contains(&l.var()) {
                        cur = half_res(&mut b, cur, units[&l.negated()])?;
                    }
                }
                ax.insert(d, cur);
            }
            let qi = self.run(&pii, depth + 1)?;
            let map = embed(&mut b, &qi, Some(x1), |_, c| ax.get(c).copied().ok_or_else(|| audit(depth, format!("{c} was not prepared"))))?;
            units.extend(unit_lines(&qi, &vi, &map)?);
            seen_res += pii.resolution_count();
            blocks.push(vi.clone());
            s.extend(vi);
        }
        for (i, x) in blocks.iter().enumerate() {
            if blocks[i + 1..].iter().any(|y| !x.is_disjoint(y)) {
                return Err(audit(depth, "variable blocks of the recursion overlap"));
            }
        }
        if seen_res > pi.resolution_count() {
            return Err(audit(depth, format!("recursion sees {seen_res} resolutions, Π has {}", pi.resolution_count())));
        }
        self.report.disjointness_checks += 1;

        // Simulate Π|_{x1=1} with all its literals, under [x1 d= 0].
        let root = Some(b.decide(None, x1, false));
        let pi1 = connected_core(&restrict_proof(pi, &Restriction::single(x1, true)).0)?.0;
        let nx1_line = if pi1.vars().is_empty() {
            b.axiom(&neg)
        } else {
            let psi1 = Cnf::new(n, pi1.axioms()).expect("axioms are well formed");
            let al = all_lits_from_refutation(&pi1, &psi1)?;
            let mut lines = vec![usize::MAX; al.len()];
            for v in 0..al.len() {
                lines[v] = match al.rule(v) {
                    Rule::Axiom => b.line_of(al.clause(v)).ok_or_else(|| audit(depth, format!("{} is not in τ*", al.clause(v))))?,
                    Rule::Resolution { p1, p2, .. } => unit_res(&mut b, lines[p1], lines[p2], root, &units)?,
                    Rule::Weakening { .. } => return Err(audit(depth, "weakening in the unit extension")),
                };
            }
            let c = find_axiom_with_literal(pi, &psi, x1, true)?;
            let mut cur = b.axiom(&c);
            for &l in c.lits() {
                if l.var() != x1 {
                    let u = b.line_of(&Clause::unit(l.negated())).ok_or_else(|| audit(depth, format!("unit {} missing", l.negated())))?;
                    cur = half_res(&mut b, cur, u)?;
                }
            }
            cur
        };
        if b.clause(nx1_line) != &neg {
            return Err(audit(depth, format!("derived {} instead of ¬x{x1}", b.clause(nx1_line))));
        }
        for (lit, &line) in &units {
            if b.clause(line).contains_var(x1) && b.line_of(&Clause::unit(*lit)).is_none() {
                half_res(&mut b, line, nx1_line)?;
            }
        }
        for &y in &vars {
            for a in [false, true] {
                if b.line_of(&Clause::unit(Lit::with_value(y, a))).is_none() {
                    return Err(audit(depth, format!("unit {} was not derived", Lit::with_value(y, a))));
                }
            }
        }
        Ok(b.finish())
    }
}

//! Robust orders, trivial trails and the width audits built on them.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cdcl::{Ann, RunOutcome, RunTrace, Trail};
use crate::cnf::{Clause, Cnf, Restriction, Var, VarOrder};
use crate::oracle::dpll_sat_clauses;
use crate::p0::{check_p0, p0_width, P0Line, P0Proof};
use crate::report::{CheckReport, ViolationCode};
use crate::transforms::p0_from_cdcl;

/// `Var_π^k`, the `k` π-smallest variables.
pub fn small_vars(order: &VarOrder, k: u32) -> BTreeSet<Var> {
    order.sequence().iter().take(k as usize).copied().collect()
}

/// `|var(C) ∖ Var_π^k| ≤ 1`.
pub fn is_almost_k_small(c: &Clause, order: &VarOrder, k: u32) -> bool {
    crate::cnf::is_almost_k_small(c, order, k)
}

/// The first `min(|t|, k)` assignments of `t` are decisions on
/// `x_{π(1)}, x_{π(2)}, …` in that order.
pub fn is_k_trivial(t: &Trail, order: &VarOrder, k: u32) -> bool {
    let s = t.len().min(k as usize);
    t.assigns()[..s].iter().enumerate().all(|(i, a)| a.ann == Ann::D && a.var == order.var_at(i as u32 + 1))
}

/// A content hash of a formula, independent of clause order.
pub fn formula_id(tau: &Cnf) -> String {
    let mut h = Sha256::new();
    h.update(tau.num_vars().to_le_bytes());
    for c in tau.clauses() {
        h.update(c.to_dimacs().as_bytes());
        h.update(b"\n");
    }
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Counterexample {
    /// `(variable, value)` pairs of the restriction.
    pub restriction: Vec<(Var, bool)>,
    pub reason: String,
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct RobustnessCertificate {
    pub formula: String,
    /// The order, π-smallest variable first.
    pub order: Vec<Var>,
    pub k: u32,
    pub checked: u64,
    pub total: u64,
    /// `checked / total`.
    pub coverage: f64,
    /// Every restriction was checked and none failed.
    pub verdict: bool,
    pub counterexample: Option<Counterexample>,
}

/// Whether `clauses` is minimally unsatisfiable, with a reason if not.
fn minimal_unsat(clauses: &[Clause], n: u32) -> Result<(), String> {
    if clauses.iter().any(Clause::is_empty) {
        return if clauses.len() == 1 { Ok(()) } else { Err("contains 0 next to other clauses".into()) };
    }
    if dpll_sat_clauses(clauses, n) {
        return Err("restricted formula is satisfiable".into());
    }
    for i in 0..clauses.len() {
        let rest: Vec<Clause> = clauses.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, c)| c.clone()).collect();
        if !dpll_sat_clauses(&rest, n) {
            return Err(format!("unsatisfiable without {}", clauses[i]));
        }
    }
    Ok(())
}

/// Checks both conditions of `k`-robustness over every restriction whose
/// domain is a subset of `Var_π^k` plus at most one other variable, in a
/// fixed order. Stops after `budget` restrictions; the certificate then
/// records the coverage.
pub fn check_robust(tau: &Cnf, order: &VarOrder, k: u32, budget: u64) -> RobustnessCertificate {
    let n = tau.num_vars();
    let k = k.min(n);
    let small: Vec<Var> = order.sequence()[..k as usize].to_vec();
    let outside: Vec<Var> = order.sequence()[k as usize..].to_vec();
    let inner = 3u64.saturating_pow(k);
    let total = inner.saturating_mul(1 + 2 * outside.len() as u64);
    let mut cert = RobustnessCertificate {
        formula: formula_id(tau),
        order: order.sequence().to_vec(),
        k,
        checked: 0,
        total,
        coverage: 0.0,
        verdict: false,
        counterexample: None,
    };
    let mut memo: HashMap<Vec<Clause>, Result<(), String>> = HashMap::new();
    let extras: Vec<Option<(Var, bool)>> = std::iter::once(None).chain(outside.iter().flat_map(|&v| [Some((v, false)), Some((v, true))])).collect();
    'outer: for extra in extras {
        for code in 0..inner {
            if cert.checked >= budget {
                break 'outer;
            }
            let mut pairs: Vec<(Var, bool)> = Vec::new();
            let mut c = code;
            for &v in &small {
                match c % 3 {
                    1 => pairs.push((v, false)),
                    2 => pairs.push((v, true)),
                    _ => {}
                }
                c /= 3;
            }
            pairs.extend(extra);
            cert.checked += 1;
            let rho = Restriction::from_pairs(pairs.iter().copied()).expect("distinct variables");
            let restricted: Vec<Clause> = tau.restrict(&rho).clauses().to_vec();
            let verdict = memo.entry(restricted.clone()).or_insert_with(|| minimal_unsat(&restricted, n)).clone();
            let reason = match verdict {
                Err(r) => Some(r),
                Ok(()) => pairs
                    .iter()
                    .find(|&&(v, _)| !tau.clauses().iter().any(|c| c.contains_var(v) && c.restrict(&rho).is_some()))
                    .map(|&(v, _)| format!("x{v} occurs in no clause left by the restriction")),
            };
            if let Some(reason) = reason {
                cert.counterexample = Some(Counterexample { restriction: pairs, reason });
                break 'outer;
            }
        }
    }
    cert.coverage = if total == 0 { 1.0 } else { cert.checked as f64 / total as f64 };
    cert.verdict = cert.counterexample.is_none() && cert.checked == total;
    cert
}

/// Checks, on a concrete π-P₀ proof, the two facts behind the width lower
/// bound for `w`-robust orders: every trail before the first almost-`w`-small
/// clause `C` is `(w+1)`-trivial, and `Var_π^w ⊆ var(C)`. Then checks that
/// the width is at least `w`.
pub fn audit_width_lower_bound(proof: &P0Proof, order: &VarOrder, w: u32) -> CheckReport {
    let base = check_p0(proof);
    if !base.valid {
        return base;
    }
    let (size, width) = (proof.len(), p0_width(proof));
    if w == 0 {
        return CheckReport::ok(size, width);
    }
    let small = small_vars(order, w);
    let mut trivial = vec![false; proof.len()];
    let mut depth = vec![0usize; proof.len()];
    for (i, line) in proof.lines.iter().enumerate() {
        match line {
            P0Line::Trail { parent, assign, .. } => {
                let (ok, d) = match parent {
                    Some(p) => (trivial[*p], depth[*p] + 1),
                    None => (true, 1),
                };
                depth[i] = d;
                trivial[i] = ok && (d > w as usize + 1 || (assign.ann == Ann::D && assign.var == order.var_at(d as u32)));
                if !trivial[i] {
                    return CheckReport::fail(size, width, i + 1, ViolationCode::TrailNotTrivial, format!("trail line before the first almost-{w}-small clause is not {}-trivial", w + 1));
                }
            }
            l => {
                let c = l.clause().expect("clause line");
                if is_almost_k_small(c, order, w) {
                    let vars: BTreeSet<Var> = c.vars().collect();
                    if !small.is_subset(&vars) {
                        return CheckReport::fail(size, width, i + 1, ViolationCode::SmallVarsMissing, format!("{c} misses part of the {w} smallest variables"));
                    }
                    if width < w as usize {
                        return CheckReport::fail(size, width, i + 1, ViolationCode::WidthTooSmall, format!("width {width} < {w}"));
                    }
                    return CheckReport::ok(size, width);
                }
            }
        }
    }
    CheckReport::ok(size, width)
}

/// Audits a run under π-D with WIDTH-`w` against a `k`-robust order: every
/// learned clause has width at most `w`, the run replayed in π-P₀ passes
/// [`audit_width_lower_bound`] for `k`, and a run with `k > w` did not
/// refute the formula.
pub fn audit_cdcl_width(trace: &RunTrace, order: &VarOrder, w: usize, k: u32) -> CheckReport {
    let size = trace.len();
    let learned = trace.learned();
    let width = learned.iter().map(|(_, c)| c.width()).max().unwrap_or(0);
    if let Some((step, c)) = learned.iter().find(|(_, c)| c.width() > w) {
        return CheckReport::fail(size, width, step + 1, ViolationCode::WidthAmendmentViolated, format!("learned {c} is wider than {w}"));
    }
    let proof = match p0_from_cdcl(trace, order) {
        Ok(p) => p,
        Err(e) => return CheckReport::fail(size, width, 0, ViolationCode::ActionNotAvailable, e.to_string()),
    };
    let rep = audit_width_lower_bound(&proof, order, k);
    if !rep.valid {
        return rep;
    }
    if trace.outcome == RunOutcome::Refuted && k as usize > w {
        return CheckReport::fail(size, width, size, ViolationCode::WidthTooSmall, format!("refuted with learned width {width} although the order is {k}-robust"));
    }
    CheckReport::ok(size, width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdcl::Assign;
    use crate::cnf::{gen_induction, order_row_then_column, xor_substitute};

    #[test]
    fn trivial_trails() {
        let o = VarOrder::identity(3);
        assert!(is_k_trivial(&Trail::new(3), &o, 5));
        let t = Trail::from_assigns(3, [Assign::d(1, false), Assign::d(2, true)]).unwrap();
        assert!((0..5).all(|k| is_k_trivial(&t, &o, k)));
        let t = Trail::from_assigns(3, [Assign::d(2, false)]).unwrap();
        assert!(is_k_trivial(&t, &o, 0));
        assert!(!is_k_trivial(&t, &o, 1));
        let t = Trail::from_assigns(3, [Assign::d(1, false), Assign::u(2, true)]).unwrap();
        assert!(is_k_trivial(&t, &o, 1));
        assert!(!is_k_trivial(&t, &o, 2));
    }

    #[test]
    fn parity_induction_is_robust() {
        let (tau, _) = xor_substitute(&gen_induction(2).unwrap(), 3).unwrap();
        let c = check_robust(&tau, &order_row_then_column(2, 3), 2, u64::MAX);
        assert!(c.verdict, "{:?}", c.counterexample);
        assert_eq!(c.total, 9 * 9);
        assert_eq!(c.checked, c.total);
    }

    #[test]
    fn plain_induction_is_not_robust() {
        let tau = gen_induction(3).unwrap();
        let c = check_robust(&tau, &VarOrder::identity(3), 1, u64::MAX);
        assert!(!c.verdict);
        assert!(c.counterexample.is_some());
    }

    #[test]
    fn budget_gives_partial_coverage() {
        let (tau, _) = xor_substitute(&gen_induction(2).unwrap(), 3).unwrap();
        let c = check_robust(&tau, &order_row_then_column(2, 3), 2, 10);
        assert!(!c.verdict);
        assert_eq!(c.checked, 10);
        assert!(c.coverage < 1.0);
    }

    #[test]
    fn psim_output_passes_the_width_audit() {
        use crate::oracle::{saturate, OracleBudget};
        let (tau, _) = xor_substitute(&gen_induction(2).unwrap(), 3).unwrap();
        let order = order_row_then_column(2, 3);
        let pi = saturate(&tau, OracleBudget::default()).unwrap().proof().unwrap();
        let p = crate::transforms::psim(&pi, &tau, &order).unwrap();
        let rep = audit_width_lower_bound(&p, &order, 2);
        assert!(rep.valid, "{:?}", rep.violation);
        assert!(rep.width >= 2);
        assert!(audit_width_lower_bound(&p, &order, 0).valid);
    }
}

//! Variable deletion on connected refutations.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cnf::{Clause, Var};
use crate::resproof::{check_resolution, connected_core, contract_weakenings, is_connected_refutation, ProofNode, ResolutionProof, Rule};

use super::{audit, TransformError};

#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct DeletionReport {
    /// Input nodes that keep a clause.
    pub surviving: BTreeSet<usize>,
    pub deleted: BTreeSet<usize>,
    /// `(from, to)`: node `to` became a dummy weakening of `from`.
    pub dummy_edges: Vec<(usize, usize)>,
    /// Resolutions of the input on variables of `S`.
    pub t: usize,
    /// Input node to output node, for nodes that reach the output.
    pub node_map: Vec<Option<usize>>,
}

/// `del_S(Π)`: drops the variables of `s`, keeping node identities in a
/// generalized proof with dummy weakenings, which are then contracted.
pub fn delete_vars(pi: &ResolutionProof, s: &BTreeSet<Var>) -> Result<(ResolutionProof, DeletionReport), TransformError> {
    if !is_connected_refutation(pi) {
        return Err(TransformError::InvalidInput("deletion needs a connected refutation".into()));
    }
    if pi.has_weakening() {
        return Err(TransformError::InvalidInput("deletion needs a weakening-free refutation".into()));
    }
    let vars = pi.vars();
    if vars.is_subset(s) {
        return Err(TransformError::Precondition("S must be a proper subset of var(Π)".into()));
    }
    let len = pi.len();
    let del = |c: &Clause| c.without_vars(s);
    let mut c: Vec<Option<Clause>> = vec![None; len];
    let mut rep = DeletionReport::default();
    let mut gamma = ResolutionProof::new(pi.num_vars);
    let mut gid = vec![usize::MAX; len];
    // Axiom ancestors all inside S, for the deletion characterization.
    let mut inside = vec![false; len];
    for v in 0..len {
        let orig = pi.clause(v);
        let (clause, rule) = match pi.rule(v) {
            Rule::Axiom => {
                inside[v] = orig.vars().all(|x| s.contains(&x));
                let d = del(orig);
                if d.is_empty() {
                    (None, Rule::Axiom)
                } else {
                    (Some(d), Rule::Axiom)
                }
            }
            Rule::Resolution { p1, p2, pivot } => {
                inside[v] = inside[p1] && inside[p2];
                if s.contains(&pivot) {
                    rep.t += 1;
                }
                let target = del(orig);
                match (&c[p1], &c[p2]) {
                    (None, None) => (None, Rule::Axiom),
                    (Some(a), Some(b)) if a.resolve(b, pivot).is_some() => {
                        (a.resolve(b, pivot), Rule::Resolution { p1: gid[p1], p2: gid[p2], pivot })
                    }
                    (a, b) => {
                        let pick = [(p1, a), (p2, b)].into_iter().find(|(_, x)| x.as_ref().is_some_and(|x| x.is_subset_of(&target)));
                        let Some((p, Some(x))) = pick else {
                            return Err(audit(v + 1, "no premise is a subclause of the deleted clause"));
                        };
                        rep.dummy_edges.push((p, v));
                        (Some(x.clone()), Rule::Weakening { p: gid[p] })
                    }
                }
            }
            Rule::Weakening { .. } => unreachable!("weakenings rejected above"),
        };
        if clause.is_none() != inside[v] {
            return Err(audit(v + 1, "deletion does not match the axiom-ancestor characterization"));
        }
        match clause {
            None => {
                rep.deleted.insert(v);
            }
            Some(cl) => {
                if !cl.is_subset_of(&del(orig)) {
                    return Err(audit(v + 1, format!("{cl} is not a subclause of {}", del(orig))));
                }
                rep.surviving.insert(v);
                gamma.nodes.push(ProofNode { clause: cl.clone(), rule });
                gid[v] = gamma.len() - 1;
                c[v] = Some(cl);
            }
        }
    }
    let root = len - 1;
    if c[root].as_ref().is_none_or(|x| !x.is_empty()) {
        return Err(audit(len, "the root lost its empty clause"));
    }
    let (contracted, crep) = contract_weakenings(&gamma);
    let (out, cmap) = connected_core(&contracted)?;
    rep.node_map = (0..len).map(|v| if gid[v] == usize::MAX { None } else { cmap[crep[gid[v]]] }).collect();
    if out.len() + rep.t > len {
        return Err(audit(len, format!("|del_S(Π)| = {} exceeds |Π| − t = {}", out.len(), len - rep.t)));
    }
    let axioms = crate::cnf::Cnf::new(pi.num_vars, out.axioms()).expect("axioms are well formed");
    if !check_resolution(&out, &axioms).valid || !out.is_refutation() {
        return Err(audit(len, "output is not a refutation"));
    }
    Ok((out, rep))
}

//! The CDCL transition system: annotated trails, states, the three kinds of
//! actions, learning sets, amendments, a policy-driven runner and a replaying
//! trace verifier.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cnf::{Clause, Cnf, Lit, Var, VarOrder};
use crate::report::{CheckReport, ViolationCode};

pub const DEFAULT_LEARN_BUDGET: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CdclError {
    #[error("variable x{0} is already on the trail")]
    Reassigned(Var),
    #[error("variable x{var} exceeds the variable count {n}")]
    VarOutOfRange { var: Var, n: u32 },
    #[error("learning sets exceed the budget of {0} clauses")]
    LearnBudget(usize),
    #[error("action not available: {0}")]
    InvalidAction(String),
    #[error("clause {0} is not learnable in this state")]
    NotLearnable(Clause),
    #[error("unknown amendment {0:?}")]
    BadAmendment(String),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Ann {
    D,
    U,
}

impl fmt::Display for Ann {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ann::D => "d",
            Ann::U => "u",
        })
    }
}

/// `x_var *= val` with annotation `ann`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Assign {
    pub var: Var,
    pub val: bool,
    pub ann: Ann,
}

impl Assign {
    pub fn d(var: Var, val: bool) -> Assign {
        Assign { var, val, ann: Ann::D }
    }

    pub fn u(var: Var, val: bool) -> Assign {
        Assign { var, val, ann: Ann::U }
    }

    /// The literal made true by this assignment.
    pub fn lit(&self) -> Lit {
        Lit::with_value(self.var, self.val)
    }
}

impl fmt::Display for Assign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{} {}={}", self.var, self.ann, self.val as u8)
    }
}

/// An ordered list of annotated assignments with pairwise distinct variables.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct Trail {
    n: u32,
    items: Vec<Assign>,
    #[serde(skip)]
    pos: Vec<Option<u32>>,
}

impl Trail {
    pub fn new(n: u32) -> Trail {
        Trail { n, items: Vec::new(), pos: vec![None; n as usize + 1] }
    }

    pub fn from_assigns<I: IntoIterator<Item = Assign>>(n: u32, items: I) -> Result<Trail, CdclError> {
        let mut t = Trail::new(n);
        for a in items {
            t.push(a)?;
        }
        Ok(t)
    }

    pub fn num_vars(&self) -> u32 {
        self.n
    }

    pub fn push(&mut self, a: Assign) -> Result<(), CdclError> {
        if a.var == 0 || a.var > self.n {
            return Err(CdclError::VarOutOfRange { var: a.var, n: self.n });
        }
        if self.pos[a.var as usize].is_some() {
            return Err(CdclError::Reassigned(a.var));
        }
        self.pos[a.var as usize] = Some(self.items.len() as u32);
        self.items.push(a);
        Ok(())
    }

    pub fn truncate(&mut self, len: usize) {
        for a in self.items.drain(len.min(self.items.len())..) {
            self.pos[a.var as usize] = None;
        }
    }

    /// `t[≤len]`.
    pub fn prefix(&self, len: usize) -> Trail {
        let mut t = self.clone();
        t.truncate(len);
        t
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn assigns(&self) -> &[Assign] {
        &self.items
    }

    /// `t[k]` for 1-based `k`.
    pub fn at(&self, k: usize) -> Assign {
        self.items[k - 1]
    }

    pub fn last(&self) -> Option<Assign> {
        self.items.last().copied()
    }

    pub fn value(&self, v: Var) -> Option<bool> {
        self.pos.get(v as usize).copied().flatten().map(|p| self.items[p as usize].val)
    }

    /// 1-based position of `v` on the trail.
    pub fn position(&self, v: Var) -> Option<usize> {
        self.pos.get(v as usize).copied().flatten().map(|p| p as usize + 1)
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.position(v).is_some()
    }

    /// `C|_t`; `None` when satisfied.
    pub fn restrict(&self, c: &Clause) -> Option<Clause> {
        c.restrict_by(|v| self.value(v))
    }

    /// `C|_{t[≤len]}`.
    pub fn restrict_prefix(&self, c: &Clause, len: usize) -> Option<Clause> {
        c.restrict_by(|v| self.position(v).filter(|&p| p <= len).map(|p| self.items[p - 1].val))
    }

    pub fn falsifies(&self, c: &Clause) -> bool {
        c.is_falsified_by(|v| self.value(v))
    }

    pub fn satisfies(&self, c: &Clause) -> bool {
        c.is_satisfied_by(|v| self.value(v))
    }

    /// The literal `C|_t` if it is a unit clause.
    pub fn unit_of(&self, c: &Clause) -> Option<Lit> {
        match self.restrict(c) {
            Some(r) if r.width() == 1 => Some(r.lits()[0]),
            _ => None,
        }
    }

    pub fn decision_count(&self) -> usize {
        self.items.iter().filter(|a| a.ann == Ann::D).count()
    }

    fn rebuild_positions(&mut self) {
        self.pos = vec![None; self.n as usize + 1];
        for (i, a) in self.items.iter().enumerate() {
            self.pos[a.var as usize] = Some(i as u32);
        }
    }
}

impl fmt::Display for Trail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, a) in self.items.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("]")
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum Action {
    Decide { var: Var, val: bool },
    /// `clause` is the 1-based id of the justifying clause in the state.
    Unit { var: Var, val: bool, clause: usize },
    /// Learn `clause` and keep the prefix `t[≤keep]`.
    Learn { clause: Clause, keep: usize },
}

impl Action {
    fn class(&self) -> u8 {
        match self {
            Action::Learn { .. } => 0,
            Action::Unit { .. } => 1,
            Action::Decide { .. } => 2,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Decide { var, val } => write!(f, "d {} {}", var, *val as u8),
            Action::Unit { var, val, clause } => write!(f, "u {} {} {}", var, *val as u8, clause),
            Action::Learn { clause, keep } => {
                for l in clause.lits() {
                    write!(f, "{} ", l)?;
                }
                write!(f, "0 {keep}")
            }
        }
    }
}

/// The learning sets `ℂ_1(S), …, ℂ_{r+1}(S)`. Each clause carries a flag that
/// is set when its last producing resolution had its `ℂ_{k+1}`-side operand
/// in `ℂ`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LearningSets {
    levels: Vec<BTreeMap<Clause, bool>>,
}

impl LearningSets {
    /// `r`, the trail length the sets were computed for.
    pub fn trail_len(&self) -> usize {
        self.levels.len() - 2
    }

    /// `ℂ_k(S)` for `1 ≤ k ≤ r+1`.
    pub fn level(&self, k: usize) -> &BTreeMap<Clause, bool> {
        &self.levels[k]
    }

    /// Union of `ℂ_k` over `k ∈ lo..=hi`, flags OR-ed.
    pub fn union(&self, lo: usize, hi: usize) -> BTreeMap<Clause, bool> {
        let mut out: BTreeMap<Clause, bool> = BTreeMap::new();
        for k in lo.max(1)..=hi.min(self.levels.len() - 1) {
            for (c, &f) in &self.levels[k] {
                *out.entry(c.clone()).or_insert(false) |= f;
            }
        }
        out
    }

    pub fn total(&self) -> usize {
        self.levels.iter().map(|l| l.len()).sum()
    }
}

/// A set of amendments; their effect is cumulative.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Amendments {
    pub always_c: bool,
    pub always_u: bool,
    pub always_r: bool,
    pub never_r: bool,
    pub asserting_l: bool,
    pub decision_l: bool,
    pub first_l: bool,
    pub pi_d: Option<VarOrder>,
    pub width: Option<usize>,
    pub space: Option<usize>,
}

impl Amendments {
    pub fn none() -> Amendments {
        Amendments::default()
    }

    pub fn pi_d(order: VarOrder) -> Amendments {
        Amendments { pi_d: Some(order), ..Amendments::default() }
    }

    pub fn with_decision_l(mut self) -> Amendments {
        self.decision_l = true;
        self
    }

    pub fn with_first_l(mut self) -> Amendments {
        self.first_l = true;
        self
    }

    pub fn with_width(mut self, w: usize) -> Amendments {
        self.width = Some(w);
        self
    }

    /// Parses a comma-separated list such as `π-D,FIRST-L,WIDTH-4`. `order`
    /// is used for `π-D` (also accepted as `pi-D`).
    pub fn parse(s: &str, order: &VarOrder) -> Result<Amendments, CdclError> {
        let mut a = Amendments::none();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let up = tok.to_uppercase();
            match up.as_str() {
                "ALWAYS-C" => a.always_c = true,
                "ALWAYS-U" => a.always_u = true,
                "ALWAYS-R" => a.always_r = true,
                "NEVER-R" => a.never_r = true,
                "ASSERTING-L" => a.asserting_l = true,
                "DECISION-L" => a.decision_l = true,
                "FIRST-L" => a.first_l = true,
                "Π-D" | "PI-D" => a.pi_d = Some(order.clone()),
                _ => {
                    let num = |p: &str| up.strip_prefix(p).and_then(|x| x.parse::<usize>().ok());
                    if let Some(w) = num("WIDTH-") {
                        a.width = Some(w);
                    } else if let Some(s) = num("SPACE-") {
                        a.space = Some(s);
                    } else {
                        return Err(CdclError::BadAmendment(tok.to_string()));
                    }
                }
            }
        }
        Ok(a)
    }

    pub fn names(&self) -> Vec<String> {
        let mut v: Vec<String> = Vec::new();
        let flags = [
            (self.always_c, "ALWAYS-C"),
            (self.always_u, "ALWAYS-U"),
            (self.always_r, "ALWAYS-R"),
            (self.never_r, "NEVER-R"),
            (self.asserting_l, "ASSERTING-L"),
            (self.decision_l, "DECISION-L"),
            (self.first_l, "FIRST-L"),
        ];
        v.extend(flags.iter().filter(|f| f.0).map(|f| f.1.to_string()));
        if self.pi_d.is_some() {
            v.push("π-D".into());
        }
        if let Some(w) = self.width {
            v.push(format!("WIDTH-{w}"));
        }
        if let Some(s) = self.space {
            v.push(format!("SPACE-{s}"));
        }
        v
    }

    /// Levels `lo..=hi` of the learning sets a learned clause may come from.
    fn level_range(&self, t: &Trail) -> (usize, usize) {
        let r = t.len();
        let mut hi = r;
        if self.decision_l {
            hi = hi.min(1);
        }
        if self.asserting_l {
            let s = (1..r).rev().find(|&k| t.at(k).ann == Ann::D).unwrap_or(0);
            hi = hi.min(s);
        }
        (1, hi)
    }
}

/// A CDCL state `(ℂ, t)`. Clause ids are 1-based insertion positions.
#[derive(Clone, Debug)]
pub struct CdclState {
    n: u32,
    clauses: Vec<Clause>,
    index: HashMap<Clause, usize>,
    trail: Trail,
    clause_hash: u64,
}

fn clause_hash(c: &Clause) -> u64 {
    let h = Sha256::digest(c.to_dimacs().as_bytes());
    u64::from_le_bytes(h[..8].try_into().expect("digest is 32 bytes"))
}

impl CdclState {
    pub fn new(tau: &Cnf) -> CdclState {
        let mut s = CdclState { n: tau.num_vars(), clauses: Vec::new(), index: HashMap::new(), trail: Trail::new(tau.num_vars()), clause_hash: 0 };
        for c in tau.clauses() {
            s.add_clause(c.clone());
        }
        s
    }

    pub fn with_trail(tau: &Cnf, trail: Trail) -> CdclState {
        let mut s = CdclState::new(tau);
        s.trail = trail;
        s
    }

    fn add_clause(&mut self, c: Clause) {
        if !self.index.contains_key(&c) {
            self.clause_hash ^= clause_hash(&c);
            self.index.insert(c.clone(), self.clauses.len());
            self.clauses.push(c);
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.n
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// The clause with 1-based id `id`.
    pub fn clause(&self, id: usize) -> Option<&Clause> {
        id.checked_sub(1).and_then(|i| self.clauses.get(i))
    }

    pub fn clause_id(&self, c: &Clause) -> Option<usize> {
        self.index.get(c).map(|i| i + 1)
    }

    pub fn contains(&self, c: &Clause) -> bool {
        self.index.contains_key(c)
    }

    pub fn trail(&self) -> &Trail {
        &self.trail
    }

    pub fn to_cnf(&self) -> Cnf {
        Cnf::new(self.n, self.clauses.iter().cloned()).expect("state clauses are well formed")
    }

    pub fn has_empty_clause(&self) -> bool {
        self.index.contains_key(&Clause::empty())
    }

    pub fn is_terminal(&self) -> bool {
        self.has_empty_clause() || self.clauses.iter().all(|c| self.trail.satisfies(c))
    }

    /// Hex content hash of `(ℂ, t)`, independent of clause insertion order.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.clause_hash.to_le_bytes());
        for a in self.trail.assigns() {
            h.update(a.var.to_le_bytes());
            h.update([a.val as u8, (a.ann == Ann::D) as u8]);
        }
        let out = h.finalize();
        out[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn conflict_clauses(&self) -> Vec<&Clause> {
        self.clauses.iter().filter(|c| self.trail.falsifies(c)).collect()
    }

    pub fn has_conflict(&self) -> bool {
        self.clauses.iter().any(|c| self.trail.falsifies(c))
    }

    pub fn has_unit(&self) -> bool {
        self.clauses.iter().any(|c| self.trail.unit_of(c).is_some())
    }

    pub fn decisions(&self) -> Vec<Action> {
        let mut out = Vec::new();
        for v in 1..=self.n {
            if !self.trail.contains_var(v) {
                out.push(Action::Decide { var: v, val: false });
                out.push(Action::Decide { var: v, val: true });
            }
        }
        out
    }

    pub fn units(&self) -> Vec<Action> {
        let mut out: Vec<Action> = self
            .clauses
            .iter()
            .enumerate()
            .filter_map(|(i, c)| self.trail.unit_of(c).map(|l| Action::Unit { var: l.var(), val: l.is_positive(), clause: i + 1 }))
            .collect();
        out.sort();
        out
    }

    /// Clauses `C ∈ ℂ` with `C|_{t[≤k−1]} = ℓ` where `ℓ` is the literal
    /// assigned at position `k`, in canonical order.
    fn justifiers(&self) -> Vec<Vec<usize>> {
        let r = self.trail.len();
        let mut just: Vec<Vec<usize>> = vec![Vec::new(); r + 2];
        for (i, c) in self.clauses.iter().enumerate() {
            for &l in c.lits() {
                let Some(k) = self.trail.position(l.var()) else { continue };
                if self.trail.at(k).lit() != l || self.trail.at(k).ann != Ann::U {
                    continue;
                }
                let ok = c.lits().iter().all(|&o| {
                    o == l
                        || match self.trail.position(o.var()) {
                            Some(p) => p < k && self.trail.at(p).lit() == o.negated(),
                            None => false,
                        }
                });
                if ok {
                    just[k].push(i);
                }
            }
        }
        for j in &mut just {
            j.sort_by(|&a, &b| self.clauses[a].cmp(&self.clauses[b]));
        }
        just
    }

    /// Exact reverse-induction computation of `ℂ_k(S)`, `k = r+1 … 1`.
    pub fn learning_sets(&self, budget: usize) -> Result<LearningSets, CdclError> {
        let r = self.trail.len();
        let just = self.justifiers();
        let mut levels: Vec<BTreeMap<Clause, bool>> = vec![BTreeMap::new(); r + 2];
        for c in self.conflict_clauses() {
            levels[r + 1].insert(c.clone(), false);
        }
        let mut total = levels[r + 1].len();
        for k in (1..=r).rev() {
            let a = self.trail.at(k);
            let next = std::mem::take(&mut levels[k + 1]);
            let mut cur: BTreeMap<Clause, bool> = BTreeMap::new();
            if a.ann == Ann::D {
                cur = next.clone();
            } else {
                let bad = a.lit().negated();
                for (d, &flag) in &next {
                    if !d.contains(bad) {
                        *cur.entry(d.clone()).or_insert(false) |= flag;
                        continue;
                    }
                    let in_c = self.index.contains_key(d);
                    for &ci in &just[k] {
                        let res = self.clauses[ci].resolve(d, a.var).unwrap_or_else(|| panic!("learning resolution on x{} is not well formed", a.var));
                        assert!(self.trail.falsifies(&res), "learning-set clause {res} is not falsified by the trail");
                        *cur.entry(res).or_insert(false) |= in_c;
                    }
                }
            }
            levels[k + 1] = next;
            total += cur.len();
            if total > budget {
                return Err(CdclError::LearnBudget(budget));
            }
            levels[k] = cur;
        }
        Ok(LearningSets { levels })
    }

    /// `L(S)` after the learning-side amendments.
    pub fn learnings(&self, am: &Amendments, budget: usize) -> Result<Vec<Action>, CdclError> {
        if !self.has_conflict() {
            return Ok(Vec::new());
        }
        if am.space.is_some_and(|s| self.clauses.len() >= s) {
            return Ok(Vec::new());
        }
        let sets = self.learning_sets(budget)?;
        let r = self.trail.len();
        let all = sets.union(1, r);
        let (lo, hi) = am.level_range(&self.trail);
        let shrunk = sets.union(lo, hi);
        let admit = |c: &Clause, flag: bool| !self.contains(c) && (!am.first_l || flag) && am.width.is_none_or(|w| c.width() <= w);
        let empty = Clause::empty();
        // The shrinking amendments act on the second case of L(S) only.
        if all.contains_key(&empty) {
            return Ok(vec![Action::Learn { clause: empty, keep: 0 }]);
        }
        let mut out = Vec::new();
        for (c, &flag) in &shrunk {
            if !admit(c, flag) {
                continue;
            }
            let longest = self.longest_keep(c);
            for keep in 0..=longest {
                if (am.always_r && keep != 0) || (am.never_r && keep != longest) {
                    continue;
                }
                out.push(Action::Learn { clause: c.clone(), keep });
            }
        }
        Ok(out)
    }

    /// Longest prefix length `p` with `C|_{t[≤p]} ≠ 0`, for a clause falsified by `t`.
    fn longest_keep(&self, c: &Clause) -> usize {
        c.vars().map(|v| self.trail.position(v).unwrap_or(0)).max().unwrap_or(1).saturating_sub(1)
    }

    /// All actions after filtering by `am`.
    pub fn allowed_actions(&self, am: &Amendments, budget: usize) -> Result<Vec<Action>, CdclError> {
        let mut out = self.learnings(am, budget)?;
        let conflict = self.has_conflict();
        if !(am.always_c && conflict) {
            out.extend(self.units());
            if !(am.always_u && self.has_unit()) {
                let mut ds = self.decisions();
                if let Some(order) = &am.pi_d {
                    let v = self.smallest_unassigned(order);
                    ds.retain(|d| matches!(d, Action::Decide { var, .. } if Some(*var) == v));
                }
                out.extend(ds);
            }
        }
        Ok(out)
    }

    fn smallest_unassigned(&self, order: &VarOrder) -> Option<Var> {
        order.sequence().iter().copied().find(|&v| !self.trail.contains_var(v))
    }

    /// Checks `a ∈ Actions(S)` and that no amendment removes it.
    pub fn check_action(&self, a: &Action, am: &Amendments) -> Result<(), (ViolationCode, String)> {
        use ViolationCode::*;
        if self.is_terminal() {
            return Err((ActionNotAvailable, "state is terminal".into()));
        }
        let conflict = self.has_conflict();
        match a {
            Action::Decide { var, .. } => {
                if *var == 0 || *var > self.n || self.trail.contains_var(*var) {
                    return Err((ActionNotAvailable, format!("x{var} is assigned or out of range")));
                }
                if am.always_c && conflict {
                    return Err((ActionFiltered, "ALWAYS-C: a conflict is present".into()));
                }
                if am.always_u && self.has_unit() {
                    return Err((ActionFiltered, "ALWAYS-U: a unit clause is present".into()));
                }
                if let Some(order) = &am.pi_d {
                    let v = self.smallest_unassigned(order);
                    if v != Some(*var) {
                        return Err((ActionFiltered, format!("π-D: x{var} is not the π-smallest unassigned variable")));
                    }
                }
                Ok(())
            }
            Action::Unit { var, val, clause } => {
                if *var == 0 || *var > self.n || self.trail.contains_var(*var) {
                    return Err((ActionNotAvailable, format!("x{var} is assigned or out of range")));
                }
                let Some(c) = self.clause(*clause) else {
                    return Err((BadJustification, format!("no clause with id {clause}")));
                };
                if self.trail.unit_of(c) != Some(Lit::with_value(*var, *val)) {
                    return Err((BadJustification, format!("clause {clause} = {c} does not restrict to x{var}^{}", *val as u8)));
                }
                if am.always_c && conflict {
                    return Err((ActionFiltered, "ALWAYS-C: a conflict is present".into()));
                }
                Ok(())
            }
            Action::Learn { clause, keep } => self.check_learn(clause, *keep, am),
        }
    }

    fn check_learn(&self, c: &Clause, keep: usize, am: &Amendments) -> Result<(), (ViolationCode, String)> {
        use ViolationCode::*;
        let r = self.trail.len();
        let mut search = WitnessSearch::new(self);
        let empty = Clause::empty();
        let empty_learnable = (1..=r).any(|k| search.find(k, &empty, false).is_some());
        if empty_learnable && !c.is_empty() {
            return Err((ActionNotAvailable, "0 is learnable, so only (0, Λ) is available".into()));
        }
        if c.is_empty() && keep != 0 {
            return Err((ActionNotAvailable, "the empty clause is learned with t* = Λ".into()));
        }
        if keep > r {
            return Err((ActionNotAvailable, format!("prefix length {keep} exceeds the trail length {r}")));
        }
        if !c.is_empty() && self.trail.restrict_prefix(c, keep).is_some_and(|x| x.is_empty()) {
            return Err((ActionNotAvailable, format!("{c} is falsified by the kept prefix")));
        }
        if self.contains(c) || !(1..=r).any(|k| search.find(k, c, false).is_some()) {
            return Err((LearnedClauseNotDerivable, format!("{c} is not in ℂ(S)∖ℂ")));
        }
        if am.space.is_some_and(|s| self.clauses.len() >= s) {
            return Err((ActionFiltered, "SPACE: too many clauses".into()));
        }
        if c.is_empty() {
            return Ok(());
        }
        if let Some(w) = am.width {
            if c.width() > w {
                return Err((ActionFiltered, format!("WIDTH-{w}: learned clause has width {}", c.width())));
            }
        }
        let (lo, hi) = am.level_range(&self.trail);
        if !(lo..=hi).any(|k| search.find(k, c, am.first_l).is_some()) {
            let which = if am.first_l && (lo..=hi).any(|k| search.find(k, c, false).is_some()) {
                "FIRST-L"
            } else if am.decision_l {
                "DECISION-L"
            } else {
                "ASSERTING-L"
            };
            return Err((ActionFiltered, format!("{which}: {c} is outside the shrunk learning set")));
        }
        if am.always_r && keep != 0 {
            return Err((ActionFiltered, "ALWAYS-R: t* must be empty".into()));
        }
        if am.never_r && keep != self.longest_keep(c) {
            return Err((ActionFiltered, "NEVER-R: t* must be the longest valid prefix".into()));
        }
        Ok(())
    }

    /// `Transition_S(a)` without checks.
    pub fn apply(&mut self, a: &Action) {
        match a {
            Action::Decide { var, val } => self.trail.push(Assign::d(*var, *val)).expect("decision on an unassigned variable"),
            Action::Unit { var, val, .. } => self.trail.push(Assign::u(*var, *val)).expect("unit on an unassigned variable"),
            Action::Learn { clause, keep } => {
                self.add_clause(clause.clone());
                self.trail.truncate(*keep);
            }
        }
    }

    /// Witness for `D ∈ ℂ_j(S)`: a conflict clause and the justifying clauses
    /// resolved in, for the smallest `j` that works.
    pub fn learned_clause_witness(&self, d: &Clause) -> Result<LearnWitness, CdclError> {
        let r = self.trail.len();
        let mut search = WitnessSearch::new(self);
        for j in 1..=r + 1 {
            if let Some(w) = search.find(j, d, false) {
                return Ok(self.finish_witness(w, d));
            }
        }
        Err(CdclError::NotLearnable(d.clone()))
    }

    /// Witness for `D ∈ ℂ_j(S)` at the given level `j`.
    pub fn learned_clause_witness_at(&self, d: &Clause, j: usize) -> Result<LearnWitness, CdclError> {
        if j == 0 || j > self.trail.len() + 1 {
            return Err(CdclError::NotLearnable(d.clone()));
        }
        let mut search = WitnessSearch::new(self);
        match search.find(j, d, false) {
            Some(w) => Ok(self.finish_witness(w, d)),
            None => Err(CdclError::NotLearnable(d.clone())),
        }
    }

    fn finish_witness(&self, w: RawWitness, d: &Clause) -> LearnWitness {
        let w = LearnWitness {
            conflict: self.clauses[w.conflict].clone(),
            steps: w.steps.iter().map(|&(k, ci)| (k, self.clauses[ci].clone())).collect(),
            trail_len: self.trail.len(),
        };
        assert_eq!(&w.compose(&self.trail), d, "witness does not recompose");
        w
    }
}

/// `D = C_{k+1} ∘ C_k ⋯ ∘ C_1`: `conflict` is `C_{k+1}`; `steps` lists
/// `(position, justifying clause)` in increasing position order.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct LearnWitness {
    pub conflict: Clause,
    pub steps: Vec<(usize, Clause)>,
    pub trail_len: usize,
}

impl LearnWitness {
    /// The index set `I`: the step positions plus `r+1`.
    pub fn indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.steps.iter().map(|s| s.0).collect();
        v.push(self.trail_len + 1);
        v
    }

    pub fn compose(&self, t: &Trail) -> Clause {
        let mut cur = self.conflict.clone();
        for (k, c) in self.steps.iter().rev() {
            cur = c.resolve(&cur, t.at(*k).var).expect("witness steps resolve");
        }
        cur
    }
}

#[derive(Clone)]
struct RawWitness {
    conflict: usize,
    steps: Vec<(usize, usize)>,
}

/// Backward membership search for `D ∈ ℂ_k(S)`, memoized.
struct WitnessSearch<'a> {
    st: &'a CdclState,
    just: Vec<Vec<usize>>,
    memo: HashMap<(usize, Clause, bool), Option<RawWitness>>,
}

impl<'a> WitnessSearch<'a> {
    fn new(st: &'a CdclState) -> WitnessSearch<'a> {
        WitnessSearch { st, just: st.justifiers(), memo: HashMap::new() }
    }

    fn find(&mut self, k: usize, d: &Clause, need_first: bool) -> Option<RawWitness> {
        if !self.st.trail.falsifies(d) {
            return None;
        }
        self.go(k, d, need_first)
    }

    fn go(&mut self, k: usize, d: &Clause, need_first: bool) -> Option<RawWitness> {
        let key = (k, d.clone(), need_first);
        if let Some(w) = self.memo.get(&key) {
            return w.clone();
        }
        let w = self.compute(k, d, need_first);
        self.memo.insert(key, w.clone());
        w
    }

    fn compute(&mut self, k: usize, d: &Clause, need_first: bool) -> Option<RawWitness> {
        let st = self.st;
        let r = st.trail.len();
        if k == r + 1 {
            if need_first {
                return None;
            }
            return st.index.get(d).map(|&i| RawWitness { conflict: i, steps: Vec::new() });
        }
        let a = st.trail.at(k);
        if a.ann == Ann::D {
            return self.go(k + 1, d, need_first);
        }
        let lit = a.lit();
        if d.contains(lit.negated()) {
            return None;
        }
        if !d.contains_var(a.var) {
            if let Some(w) = self.go(k + 1, d, need_first) {
                return Some(w);
            }
        } else {
            return None;
        }
        for ci in self.just[k].clone() {
            let c = &st.clauses[ci];
            let rest: Vec<Lit> = c.lits().iter().copied().filter(|&l| l != lit).collect();
            if !rest.iter().all(|&l| d.contains(l)) || rest.len() > 20 {
                continue;
            }
            let base: Vec<Lit> = d.lits().iter().copied().filter(|l| !rest.contains(l)).collect();
            for mask in 0u32..(1 << rest.len()) {
                let mut lits = base.clone();
                lits.extend(rest.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &l)| l));
                lits.push(lit.negated());
                let dp = Clause::new(lits).expect("candidate premise is consistent");
                if need_first && !st.contains(&dp) {
                    continue;
                }
                if let Some(mut w) = self.go(k + 1, &dp, false) {
                    w.steps.insert(0, (k, ci));
                    return Some(w);
                }
            }
        }
        None
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Policy {
    /// Learn before propagating before deciding; the smallest action wins.
    UnitFirstLex,
    /// Same class priority as `UnitFirstLex`, uniform choice within the class.
    Greedy(u64),
    /// Uniform over all allowed actions.
    Random(u64),
    /// Plays the given actions in order.
    Scripted(Vec<Action>),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunOutcome {
    Refuted,
    Satisfied,
    /// No allowed action in a nonterminal state.
    Stuck,
    StepBudget,
    LearnBudget,
    /// A scripted run whose script ended before a terminal state.
    Partial,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct TraceStep {
    pub digest: String,
    pub action: Action,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct RunTrace {
    pub cnf: Cnf,
    pub steps: Vec<TraceStep>,
    pub terminal: bool,
    pub outcome: RunOutcome,
}

impl RunTrace {
    /// Builds a trace by replaying `actions` from `(tau, Λ)` without checks.
    pub fn from_actions(tau: &Cnf, actions: &[Action]) -> RunTrace {
        let mut st = CdclState::new(tau);
        let mut steps = Vec::new();
        for a in actions {
            steps.push(TraceStep { digest: st.digest(), action: a.clone() });
            st.apply(a);
        }
        let terminal = st.is_terminal();
        let outcome = if st.has_empty_clause() {
            RunOutcome::Refuted
        } else if terminal {
            RunOutcome::Satisfied
        } else {
            RunOutcome::Partial
        };
        RunTrace { cnf: tau.clone(), steps, terminal, outcome }
    }

    pub fn actions(&self) -> Vec<Action> {
        self.steps.iter().map(|s| s.action.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn learned(&self) -> Vec<(usize, Clause)> {
        self.steps
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match &s.action {
                Action::Learn { clause, .. } => Some((i, clause.clone())),
                _ => None,
            })
            .collect()
    }

    /// The state after the first `upto` steps.
    pub fn state_at(&self, upto: usize) -> CdclState {
        let mut st = CdclState::new(&self.cnf);
        for s in &self.steps[..upto] {
            st.apply(&s.action);
        }
        st
    }

    pub fn final_state(&self) -> CdclState {
        self.state_at(self.steps.len())
    }
}

/// Runs the solver described by `policy` under `am` for at most `max_steps`.
pub fn run(tau: &Cnf, policy: &Policy, am: &Amendments, max_steps: usize) -> RunTrace {
    run_with_budget(tau, policy, am, max_steps, DEFAULT_LEARN_BUDGET)
}

pub fn run_with_budget(tau: &Cnf, policy: &Policy, am: &Amendments, max_steps: usize, learn_budget: usize) -> RunTrace {
    let mut st = CdclState::new(tau);
    let mut steps = Vec::new();
    let seed = match policy {
        Policy::Greedy(s) | Policy::Random(s) => *s,
        _ => 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut script = match policy {
        Policy::Scripted(v) => v.clone().into_iter(),
        _ => Vec::new().into_iter(),
    };
    let outcome = loop {
        if st.has_empty_clause() {
            break RunOutcome::Refuted;
        }
        if st.is_terminal() {
            break RunOutcome::Satisfied;
        }
        if steps.len() >= max_steps {
            break RunOutcome::StepBudget;
        }
        let chosen = if let Policy::Scripted(_) = policy {
            match script.next() {
                None => break RunOutcome::Partial,
                Some(a) if st.check_action(&a, am).is_ok() => a,
                Some(_) => break RunOutcome::Stuck,
            }
        } else {
            let mut allowed = match st.allowed_actions(am, learn_budget) {
                Ok(a) => a,
                Err(_) => break RunOutcome::LearnBudget,
            };
            if allowed.is_empty() {
                break RunOutcome::Stuck;
            }
            allowed.sort();
            match policy {
                Policy::UnitFirstLex => {
                    let best = allowed.iter().map(Action::class).min().expect("nonempty");
                    allowed.into_iter().find(|a| a.class() == best).expect("nonempty")
                }
                Policy::Greedy(_) => {
                    let best = allowed.iter().map(Action::class).min().expect("nonempty");
                    let class: Vec<Action> = allowed.into_iter().filter(|a| a.class() == best).collect();
                    class.choose(&mut rng).expect("nonempty").clone()
                }
                _ => allowed.choose(&mut rng).expect("nonempty").clone(),
            }
        };
        steps.push(TraceStep { digest: st.digest(), action: chosen.clone() });
        st.apply(&chosen);
    };
    RunTrace { cnf: tau.clone(), steps, terminal: st.is_terminal(), outcome }
}

/// Replays `trace`, checking every action against `Actions(S)` and the
/// amendments. Learned clauses are certified by a backward witness search.
pub fn verify_run(trace: &RunTrace, am: &Amendments) -> CheckReport {
    let mut st = CdclState::new(&trace.cnf);
    let mut width = 0;
    let size = trace.steps.len();
    for (i, s) in trace.steps.iter().enumerate() {
        if let Err((code, detail)) = st.check_action(&s.action, am) {
            return CheckReport::fail(size, width, i + 1, code, detail);
        }
        if let Action::Learn { clause, .. } = &s.action {
            width = width.max(clause.width());
        }
        st.apply(&s.action);
    }
    if trace.terminal && !st.is_terminal() {
        return CheckReport::fail(size, width, size, ViolationCode::NotTerminal, "final state is not terminal");
    }
    CheckReport::ok(size, width)
}

/// Replays a trace from `(tau, Λ)` and returns the final state, rejecting the
/// first unavailable action.
pub fn replay(trace: &RunTrace, am: &Amendments) -> Result<CdclState, CdclError> {
    let mut st = CdclState::new(&trace.cnf);
    for s in &trace.steps {
        st.check_action(&s.action, am).map_err(|(_, d)| CdclError::InvalidAction(d))?;
        st.apply(&s.action);
    }
    Ok(st)
}

/// `Transition_S(a)`, rejecting actions outside `Actions(S)`.
pub fn transition(s: &CdclState, a: &Action) -> Result<CdclState, CdclError> {
    s.check_action(a, &Amendments::none()).map_err(|(_, d)| CdclError::InvalidAction(d))?;
    let mut next = s.clone();
    next.apply(a);
    Ok(next)
}

impl PartialEq for CdclState {
    fn eq(&self, other: &CdclState) -> bool {
        self.n == other.n && self.trail == other.trail && self.index.len() == other.index.len() && self.clauses.iter().all(|c| other.contains(c))
    }
}

impl Eq for CdclState {}

impl<'de> Deserialize<'de> for Trail {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Trail, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            n: u32,
            items: Vec<Assign>,
        }
        let raw = Raw::deserialize(d)?;
        let mut t = Trail { n: raw.n, items: raw.items, pos: Vec::new() };
        t.rebuild_positions();
        Ok(t)
    }
}

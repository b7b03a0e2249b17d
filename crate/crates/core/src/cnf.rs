//! Literals, clauses, CNFs, variable orders and restrictions, plus the
//! formula families used throughout the crate.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Var = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CnfError {
    #[error("clause contains both polarities of x{0}")]
    Tautology(Var),
    #[error("literal 0 is not a variable")]
    ZeroLiteral,
    #[error("variable x{var} exceeds the declared variable count {n}")]
    VarOutOfRange { var: Var, n: u32 },
    #[error("order is not a permutation of 1..{0}")]
    NotPermutation(u32),
    #[error("variable x{0} assigned twice")]
    DoubleAssignment(Var),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("invalid pointed graph: {0}")]
    BadGraph(String),
}

/// A literal `x^a`: `positive == true` is `x^1 = x`, otherwise `x^0 = ¬x`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Lit {
    var: Var,
    positive: bool,
}

impl Lit {
    pub fn new(var: Var, positive: bool) -> Lit {
        assert!(var >= 1, "variables are numbered from 1");
        Lit { var, positive }
    }

    pub fn pos(var: Var) -> Lit {
        Lit::new(var, true)
    }

    pub fn neg(var: Var) -> Lit {
        Lit::new(var, false)
    }

    /// The literal `x^a`, satisfied by `x = a`.
    pub fn with_value(var: Var, a: bool) -> Lit {
        Lit::new(var, a)
    }

    pub fn var(self) -> Var {
        self.var
    }

    pub fn is_positive(self) -> bool {
        self.positive
    }

    /// The value that satisfies this literal.
    pub fn sat_value(self) -> bool {
        self.positive
    }

    pub fn negated(self) -> Lit {
        Lit { var: self.var, positive: !self.positive }
    }

    pub fn from_dimacs(x: i64) -> Result<Lit, CnfError> {
        if x == 0 {
            return Err(CnfError::ZeroLiteral);
        }
        Ok(Lit::new(x.unsigned_abs() as Var, x > 0))
    }

    pub fn to_dimacs(self) -> i64 {
        if self.positive {
            self.var as i64
        } else {
            -(self.var as i64)
        }
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// A set of literals, kept sorted by variable. No variable occurs twice.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default, Serialize, Deserialize)]
pub struct Clause {
    lits: Vec<Lit>,
}

impl Clause {
    pub fn new<I: IntoIterator<Item = Lit>>(lits: I) -> Result<Clause, CnfError> {
        let mut v: Vec<Lit> = lits.into_iter().collect();
        v.sort();
        v.dedup();
        for w in v.windows(2) {
            if w[0].var == w[1].var {
                return Err(CnfError::Tautology(w[0].var));
            }
        }
        Ok(Clause { lits: v })
    }

    pub fn from_dimacs(xs: &[i64]) -> Result<Clause, CnfError> {
        let lits = xs.iter().map(|&x| Lit::from_dimacs(x)).collect::<Result<Vec<_>, _>>()?;
        Clause::new(lits)
    }

    pub fn empty() -> Clause {
        Clause { lits: Vec::new() }
    }

    pub fn unit(l: Lit) -> Clause {
        Clause { lits: vec![l] }
    }

    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn width(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.lits.iter().map(|l| l.var)
    }

    pub fn max_var(&self) -> Var {
        self.lits.last().map_or(0, |l| l.var)
    }

    /// Polarity of `v` in this clause, if present.
    pub fn polarity(&self, v: Var) -> Option<bool> {
        self.lits
            .binary_search_by_key(&v, |l| l.var)
            .ok()
            .map(|i| self.lits[i].positive)
    }

    pub fn contains(&self, l: Lit) -> bool {
        self.polarity(l.var) == Some(l.positive)
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.polarity(v).is_some()
    }

    pub fn is_subset_of(&self, other: &Clause) -> bool {
        let mut j = 0;
        for l in &self.lits {
            while j < other.lits.len() && other.lits[j] < *l {
                j += 1;
            }
            if j == other.lits.len() || other.lits[j] != *l {
                return false;
            }
            j += 1;
        }
        true
    }

    /// Variables on which the two clauses disagree.
    pub fn clash_vars(&self, other: &Clause) -> Vec<Var> {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.lits.len() && j < other.lits.len() {
            let (a, b) = (self.lits[i], other.lits[j]);
            if a.var < b.var {
                i += 1;
            } else if a.var > b.var {
                j += 1;
            } else {
                if a.positive != b.positive {
                    out.push(a.var);
                }
                i += 1;
                j += 1;
            }
        }
        out
    }

    /// `Res(self, other)` on `pivot`; `None` unless the clauses clash on
    /// exactly the pivot.
    pub fn resolve(&self, other: &Clause, pivot: Var) -> Option<Clause> {
        let clash = self.clash_vars(other);
        if clash.len() != 1 || clash[0] != pivot {
            return None;
        }
        let mut lits = Vec::with_capacity(self.lits.len() + other.lits.len());
        let (mut i, mut j) = (0, 0);
        while i < self.lits.len() || j < other.lits.len() {
            let next = match (self.lits.get(i), other.lits.get(j)) {
                (Some(&a), Some(&b)) if a.var == b.var => {
                    i += 1;
                    j += 1;
                    a
                }
                (Some(&a), Some(&b)) if a < b => {
                    i += 1;
                    a
                }
                (Some(_), Some(&b)) => {
                    j += 1;
                    b
                }
                (Some(&a), None) => {
                    i += 1;
                    a
                }
                (None, Some(&b)) => {
                    j += 1;
                    b
                }
                (None, None) => unreachable!(),
            };
            if next.var != pivot {
                lits.push(next);
            }
        }
        Some(Clause { lits })
    }

    /// Resolve on the unique clashing variable, if there is exactly one.
    pub fn resolve_any(&self, other: &Clause) -> Option<(Var, Clause)> {
        let clash = self.clash_vars(other);
        if clash.len() != 1 {
            return None;
        }
        self.resolve(other, clash[0]).map(|c| (clash[0], c))
    }

    /// Union of two non-clashing clauses.
    pub fn union(&self, other: &Clause) -> Option<Clause> {
        if !self.clash_vars(other).is_empty() {
            return None;
        }
        let mut lits: Vec<Lit> = self.lits.iter().chain(other.lits.iter()).copied().collect();
        lits.sort();
        lits.dedup();
        Some(Clause { lits })
    }

    pub fn with_lit(&self, l: Lit) -> Option<Clause> {
        self.union(&Clause::unit(l))
    }

    pub fn without_var(&self, v: Var) -> Clause {
        Clause { lits: self.lits.iter().copied().filter(|l| l.var != v).collect() }
    }

    /// `del_S(C)`: drop every literal whose variable is in `s`.
    pub fn without_vars(&self, s: &BTreeSet<Var>) -> Clause {
        Clause { lits: self.lits.iter().copied().filter(|l| !s.contains(&l.var)).collect() }
    }

    /// `C|_ρ`; `None` means the clause is satisfied.
    pub fn restrict(&self, rho: &Restriction) -> Option<Clause> {
        self.restrict_by(|v| rho.get(v))
    }

    pub fn restrict_by<F: Fn(Var) -> Option<bool>>(&self, value: F) -> Option<Clause> {
        let mut lits = Vec::with_capacity(self.lits.len());
        for &l in &self.lits {
            match value(l.var) {
                Some(a) if a == l.positive => return None,
                Some(_) => {}
                None => lits.push(l),
            }
        }
        Some(Clause { lits })
    }

    pub fn is_satisfied_by<F: Fn(Var) -> Option<bool>>(&self, value: F) -> bool {
        self.lits.iter().any(|l| value(l.var) == Some(l.positive))
    }

    pub fn is_falsified_by<F: Fn(Var) -> Option<bool>>(&self, value: F) -> bool {
        self.lits.iter().all(|l| value(l.var) == Some(!l.positive))
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = String::new();
        for l in &self.lits {
            s.push_str(&l.to_dimacs().to_string());
            s.push(' ');
        }
        s.push('0');
        s
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lits.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.lits.iter().map(|l| l.to_string()).collect();
        write!(f, "({})", parts.join(" "))
    }
}

/// A set of clauses over `x_1..x_n`, stored in canonical order.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, Serialize, Deserialize)]
pub struct Cnf {
    num_vars: u32,
    clauses: Vec<Clause>,
}

impl Cnf {
    pub fn new<I: IntoIterator<Item = Clause>>(num_vars: u32, clauses: I) -> Result<Cnf, CnfError> {
        let mut v: Vec<Clause> = clauses.into_iter().collect();
        for c in &v {
            if c.max_var() > num_vars {
                return Err(CnfError::VarOutOfRange { var: c.max_var(), n: num_vars });
            }
        }
        v.sort();
        v.dedup();
        Ok(Cnf { num_vars, clauses: v })
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn contains(&self, c: &Clause) -> bool {
        self.clauses.binary_search(c).is_ok()
    }

    pub fn index_of(&self, c: &Clause) -> Option<usize> {
        self.clauses.binary_search(c).ok()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.clauses.iter().flat_map(|c| c.vars()).collect()
    }

    pub fn width(&self) -> usize {
        self.clauses.iter().map(Clause::width).max().unwrap_or(0)
    }

    pub fn with_num_vars(&self, n: u32) -> Result<Cnf, CnfError> {
        Cnf::new(n, self.clauses.clone())
    }

    /// `τ|_ρ`. A falsified clause becomes `0` and stays in the result.
    pub fn restrict(&self, rho: &Restriction) -> Cnf {
        let clauses = self.clauses.iter().filter_map(|c| c.restrict(rho));
        Cnf::new(self.num_vars, clauses).expect("restriction keeps variables in range")
    }

    /// `del_S(τ)`: delete the variables of `s` and drop clauses that become `0`.
    pub fn delete_vars(&self, s: &BTreeSet<Var>) -> Cnf {
        let clauses = self.clauses.iter().map(|c| c.without_vars(s)).filter(|c| !c.is_empty());
        Cnf::new(self.num_vars, clauses).expect("deletion keeps variables in range")
    }

    pub fn without_clause(&self, c: &Clause) -> Cnf {
        Cnf {
            num_vars: self.num_vars,
            clauses: self.clauses.iter().filter(|d| *d != c).cloned().collect(),
        }
    }

    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.is_satisfied_by(|v| assignment.get(v as usize - 1).copied()))
    }
}

/// A partial assignment.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, Serialize, Deserialize)]
pub struct Restriction {
    map: BTreeMap<Var, bool>,
}

impl Restriction {
    pub fn new() -> Restriction {
        Restriction::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (Var, bool)>>(pairs: I) -> Result<Restriction, CnfError> {
        let mut r = Restriction::new();
        for (v, a) in pairs {
            r.assign(v, a)?;
        }
        Ok(r)
    }

    pub fn single(v: Var, a: bool) -> Restriction {
        let mut r = Restriction::new();
        r.map.insert(v, a);
        r
    }

    pub fn assign(&mut self, v: Var, a: bool) -> Result<(), CnfError> {
        if self.map.insert(v, a).is_some() {
            return Err(CnfError::DoubleAssignment(v));
        }
        Ok(())
    }

    pub fn get(&self, v: Var) -> Option<bool> {
        self.map.get(&v).copied()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.map.keys().copied()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (Var, bool)> + '_ {
        self.map.iter().map(|(&v, &a)| (v, a))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Union of two restrictions with disjoint domains.
    pub fn combine(&self, other: &Restriction) -> Result<Restriction, CnfError> {
        let mut r = self.clone();
        for (v, a) in other.pairs() {
            r.assign(v, a)?;
        }
        Ok(r)
    }
}

/// A permutation `π` of `1..n`. `rank(v) = π(v)`; smaller rank is π-smaller.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct VarOrder {
    rank: Vec<u32>,
    by_rank: Vec<Var>,
}

impl VarOrder {
    pub fn identity(n: u32) -> VarOrder {
        VarOrder {
            rank: (0..=n).collect(),
            by_rank: (0..=n).collect(),
        }
    }

    /// From `π(1), …, π(n)`.
    pub fn from_ranks(ranks: &[u32]) -> Result<VarOrder, CnfError> {
        let n = ranks.len() as u32;
        let mut rank = vec![0; ranks.len() + 1];
        let mut by_rank = vec![0; ranks.len() + 1];
        for (i, &r) in ranks.iter().enumerate() {
            if r == 0 || r > n || by_rank[r as usize] != 0 {
                return Err(CnfError::NotPermutation(n));
            }
            rank[i + 1] = r;
            by_rank[r as usize] = i as Var + 1;
        }
        Ok(VarOrder { rank, by_rank })
    }

    /// From the variables listed π-smallest first.
    pub fn from_sequence(seq: &[Var]) -> Result<VarOrder, CnfError> {
        let n = seq.len() as u32;
        let mut ranks = vec![0u32; seq.len()];
        for (i, &v) in seq.iter().enumerate() {
            if v == 0 || v > n || ranks[v as usize - 1] != 0 {
                return Err(CnfError::NotPermutation(n));
            }
            ranks[v as usize - 1] = i as u32 + 1;
        }
        VarOrder::from_ranks(&ranks)
    }

    pub fn n(&self) -> u32 {
        self.rank.len() as u32 - 1
    }

    pub fn rank(&self, v: Var) -> u32 {
        self.rank[v as usize]
    }

    pub fn ranks(&self) -> &[u32] {
        &self.rank[1..]
    }

    pub fn var_at(&self, rank: u32) -> Var {
        self.by_rank[rank as usize]
    }

    /// Variables, π-smallest first.
    pub fn sequence(&self) -> &[Var] {
        &self.by_rank[1..]
    }

    pub fn lt(&self, a: Var, b: Var) -> bool {
        self.rank(a) < self.rank(b)
    }

    /// `Var_π^k`.
    pub fn smallest(&self, k: u32) -> BTreeSet<Var> {
        self.by_rank[1..=(k.min(self.n()) as usize)].iter().copied().collect()
    }

    pub fn max_rank_in(&self, c: &Clause) -> u32 {
        c.vars().map(|v| self.rank(v)).max().unwrap_or(0)
    }

    /// The π-largest variable of `c`.
    pub fn max_var_in(&self, c: &Clause) -> Option<Var> {
        c.vars().max_by_key(|&v| self.rank(v))
    }

    /// Every literal of `c` other than `pivot` is π-below `pivot`.
    pub fn below(&self, c: &Clause, pivot: Var) -> bool {
        let p = self.rank(pivot);
        c.vars().all(|v| v == pivot || self.rank(v) < p)
    }

    pub fn is_k_small(&self, c: &Clause, k: u32) -> bool {
        c.vars().all(|v| self.rank(v) <= k)
    }

    pub fn is_almost_k_small(&self, c: &Clause, k: u32) -> bool {
        c.vars().filter(|&v| self.rank(v) > k).count() <= 1
    }
}

pub fn is_k_small(c: &Clause, order: &VarOrder, k: u32) -> bool {
    order.is_k_small(c, k)
}

pub fn is_almost_k_small(c: &Clause, order: &VarOrder, k: u32) -> bool {
    order.is_almost_k_small(c, k)
}

pub fn restrict_cnf(tau: &Cnf, rho: &Restriction) -> Cnf {
    tau.restrict(rho)
}

/// `x_1 ∧ ⋀(¬x_i ∨ x_{i+1}) ∧ ¬x_n`.
pub fn gen_induction(n: u32) -> Result<Cnf, CnfError> {
    if n == 0 {
        return Err(CnfError::BadParameter("induction needs n >= 1".into()));
    }
    let mut cs = vec![Clause::unit(Lit::pos(1)), Clause::unit(Lit::neg(n))];
    for i in 1..n {
        cs.push(Clause::new([Lit::neg(i), Lit::pos(i + 1)])?);
    }
    Cnf::new(n, cs)
}

/// Variable layout of a parity substitution: `y_{i,j}` is variable `(i-1)r + j`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct XorMap {
    pub rows: u32,
    pub cols: u32,
}

impl XorMap {
    pub fn var(&self, i: u32, j: u32) -> Var {
        debug_assert!((1..=self.rows).contains(&i) && (1..=self.cols).contains(&j));
        (i - 1) * self.cols + j
    }

    /// `(row, column)` of a substituted variable.
    pub fn cell(&self, v: Var) -> (u32, u32) {
        ((v - 1) / self.cols + 1, (v - 1) % self.cols + 1)
    }

    pub fn num_vars(&self) -> u32 {
        self.rows * self.cols
    }
}

/// Replace each `x_i` by `y_{i,1} ⊕ … ⊕ y_{i,r}` and expand every clause
/// directly into CNF.
pub fn xor_substitute(tau: &Cnf, r: u32) -> Result<(Cnf, XorMap), CnfError> {
    if r == 0 {
        return Err(CnfError::BadParameter("parity arity must be positive".into()));
    }
    let map = XorMap { rows: tau.num_vars(), cols: r };
    let mut out = Vec::new();
    for c in tau.clauses() {
        // For each literal, the block assignments falsifying it.
        let mut blocks: Vec<Vec<Vec<Lit>>> = Vec::new();
        for l in c.lits() {
            let bad_parity = !l.is_positive();
            let mut options = Vec::new();
            for mask in 0u32..(1 << r) {
                if (mask.count_ones() % 2 == 1) == bad_parity {
                    let lits = (0..r)
                        .map(|j| {
                            let bit = mask >> j & 1 == 1;
                            Lit::new(map.var(l.var(), j + 1), !bit)
                        })
                        .collect();
                    options.push(lits);
                }
            }
            blocks.push(options);
        }
        let mut partial: Vec<Vec<Lit>> = vec![Vec::new()];
        for options in &blocks {
            let mut next = Vec::with_capacity(partial.len() * options.len());
            for p in &partial {
                for o in options {
                    let mut q = p.clone();
                    q.extend_from_slice(o);
                    next.push(q);
                }
            }
            partial = next;
        }
        for lits in partial {
            out.push(Clause::new(lits)?);
        }
    }
    Ok((Cnf::new(map.num_vars(), out)?, map))
}

/// All column-1 variables in row order, then column 2, and so on.
pub fn order_row_then_column(n: u32, r: u32) -> VarOrder {
    let map = XorMap { rows: n, cols: r };
    let mut seq = Vec::with_capacity((n * r) as usize);
    for j in 1..=r {
        for i in 1..=n {
            seq.push(map.var(i, j));
        }
    }
    VarOrder::from_sequence(&seq).expect("row-then-column is a permutation")
}

/// `u < v ⇔ π(y_{i,u}) < π(y_{j,v})` for all rows `i, j` and distinct
/// columns `u ≠ v`.
pub fn is_row_parallel(order: &VarOrder, map: &XorMap) -> bool {
    for i in 1..=map.rows {
        for j in 1..=map.rows {
            for u in 1..=map.cols {
                for v in 1..=map.cols {
                    if u == v {
                        continue;
                    }
                    if (u < v) != order.lt(map.var(i, u), map.var(j, v)) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// `π(y_{i,u}) < π(y_{j,u}) ⇔ π(y_{i,v}) < π(y_{j,v})` for all columns `u, v`.
pub fn is_column_parallel(order: &VarOrder, map: &XorMap) -> bool {
    for i in 1..=map.rows {
        for j in 1..=map.rows {
            for u in 1..=map.cols {
                for v in 1..=map.cols {
                    let a = order.lt(map.var(i, u), map.var(j, u));
                    let b = order.lt(map.var(i, v), map.var(j, v));
                    if a != b {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// A single-sink DAG whose non-sources have fan-in exactly two.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct PointedGraph {
    n: u32,
    edges: Vec<(u32, u32)>,
    sink: u32,
}

impl PointedGraph {
    pub fn new(n: u32, edges: Vec<(u32, u32)>) -> Result<PointedGraph, CnfError> {
        let mut edges = edges;
        edges.sort();
        edges.dedup();
        let bad = |m: &str| Err(CnfError::BadGraph(m.to_string()));
        if n == 0 {
            return bad("no vertices");
        }
        let mut indeg = vec![0u32; n as usize + 1];
        let mut outdeg = vec![0u32; n as usize + 1];
        for &(u, v) in &edges {
            if u == 0 || v == 0 || u > n || v > n || u == v {
                return bad("edge endpoint out of range");
            }
            indeg[v as usize] += 1;
            outdeg[u as usize] += 1;
        }
        if (1..=n).any(|v| indeg[v as usize] != 0 && indeg[v as usize] != 2) {
            return bad("fan-in must be 0 or 2");
        }
        let sinks: Vec<u32> = (1..=n).filter(|&v| outdeg[v as usize] == 0).collect();
        if sinks.len() != 1 {
            return bad("exactly one sink required");
        }
        if indeg[sinks[0] as usize] == 0 && n > 1 {
            return bad("sink must not be a source");
        }
        let g = PointedGraph { n, edges, sink: sinks[0] };
        if g.topological_order().is_none() {
            return bad("graph has a cycle");
        }
        Ok(g)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn sink(&self) -> u32 {
        self.sink
    }

    pub fn preds(&self, v: u32) -> Vec<u32> {
        self.edges.iter().filter(|e| e.1 == v).map(|e| e.0).collect()
    }

    pub fn is_source(&self, v: u32) -> bool {
        !self.edges.iter().any(|e| e.1 == v)
    }

    pub fn sources(&self) -> Vec<u32> {
        (1..=self.n).filter(|&v| self.is_source(v)).collect()
    }

    pub fn internal(&self) -> Vec<u32> {
        (1..=self.n).filter(|&v| !self.is_source(v)).collect()
    }

    pub fn is_topologically_numbered(&self) -> bool {
        self.edges.iter().all(|&(u, v)| u < v) && self.sink == self.n
    }

    fn topological_order(&self) -> Option<Vec<u32>> {
        let mut indeg = vec![0u32; self.n as usize + 1];
        for &(_, v) in &self.edges {
            indeg[v as usize] += 1;
        }
        let mut ready: BTreeSet<u32> = (1..=self.n).filter(|&v| indeg[v as usize] == 0).collect();
        let mut out = Vec::new();
        while let Some(u) = ready.pop_first() {
            out.push(u);
            for &(a, b) in &self.edges {
                if a == u {
                    indeg[b as usize] -= 1;
                    if indeg[b as usize] == 0 {
                        ready.insert(b);
                    }
                }
            }
        }
        (out.len() == self.n as usize).then_some(out)
    }

    /// Relabel so that every edge goes upward and the sink is `n`.
    pub fn renumbered(&self) -> PointedGraph {
        let topo = self.topological_order().expect("validated acyclic");
        let mut label = vec![0u32; self.n as usize + 1];
        for (i, &v) in topo.iter().enumerate() {
            label[v as usize] = i as u32 + 1;
        }
        let edges = self.edges.iter().map(|&(u, v)| (label[u as usize], label[v as usize])).collect();
        PointedGraph::new(self.n, edges).expect("relabelling preserves validity")
    }

    fn canonical_key(&self) -> Vec<(u32, u32)> {
        let mut perm: Vec<u32> = (1..=self.n).collect();
        let mut best: Option<Vec<(u32, u32)>> = None;
        loop {
            let mut e: Vec<(u32, u32)> =
                self.edges.iter().map(|&(u, v)| (perm[u as usize - 1], perm[v as usize - 1])).collect();
            e.sort();
            if best.as_ref().is_none_or(|b| e < *b) {
                best = Some(e);
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        best.unwrap_or_default()
    }
}

fn next_permutation(p: &mut [u32]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Deterministic random pointed graph on `n ≥ 3` vertices, topologically
/// numbered with the sources first.
pub fn gen_pointed_graph(n: u32, seed: u64) -> Result<PointedGraph, CnfError> {
    if n < 3 {
        return Err(CnfError::BadParameter("pointed graphs need n >= 3".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10_000 {
        let max_sources = n.div_ceil(2).max(2);
        let s = rng.gen_range(2..=max_sources);
        if let Some(g) = try_pointed(n, s, &mut rng) {
            return Ok(g);
        }
    }
    Err(CnfError::BadGraph("random construction did not converge".into()))
}

fn try_pointed(n: u32, s: u32, rng: &mut ChaCha8Rng) -> Option<PointedGraph> {
    let mut dangling: BTreeSet<u32> = (1..=s).collect();
    let mut edges = Vec::new();
    for k in s + 1..=n {
        let d: Vec<u32> = dangling.iter().copied().collect();
        let need = if k == n {
            d.len()
        } else {
            (d.len() + 1).saturating_sub((n - k + 1) as usize)
        };
        if need > 2 {
            return None;
        }
        let take = rng.gen_range(need..=d.len().min(2));
        let mut chosen: Vec<u32> = d.choose_multiple(rng, take).copied().collect();
        let others: Vec<u32> = (1..k).filter(|v| !dangling.contains(v)).collect();
        if others.len() < 2 - take {
            return None;
        }
        chosen.extend(others.choose_multiple(rng, 2 - take).copied());
        for &p in &chosen {
            dangling.remove(&p);
            edges.push((p, k));
        }
        if k < n {
            dangling.insert(k);
        }
    }
    if !dangling.is_empty() {
        return None;
    }
    PointedGraph::new(n, edges).ok()
}

/// Every pointed graph on `n` vertices up to isomorphism, each given in a
/// topological numbering with sources first.
pub fn enumerate_pointed_graphs(n: u32) -> Vec<PointedGraph> {
    let mut seen: HashMap<Vec<(u32, u32)>, ()> = HashMap::new();
    let mut out = Vec::new();
    for s in 2..n {
        let mut choice: Vec<(u32, u32)> = Vec::new();
        enumerate_rec(n, s + 1, &mut choice, &mut |edges| {
            if let Ok(g) = PointedGraph::new(n, edges.to_vec()) {
                let key = g.canonical_key();
                if seen.insert(key, ()).is_none() {
                    out.push(g);
                }
            }
        });
    }
    out
}

fn enumerate_rec<F: FnMut(&[(u32, u32)])>(n: u32, k: u32, edges: &mut Vec<(u32, u32)>, f: &mut F) {
    if k > n {
        f(edges);
        return;
    }
    for a in 1..k {
        for b in a + 1..k {
            edges.push((a, k));
            edges.push((b, k));
            enumerate_rec(n, k + 1, edges, f);
            edges.pop();
            edges.pop();
        }
    }
}

/// Variable layout of the Stone formulas: `P_{i,u} = (i-1)m + u`, `R_v = nm + v`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct StoneMap {
    pub n: u32,
    pub m: u32,
}

impl StoneMap {
    pub fn p(&self, i: u32, u: u32) -> Var {
        (i - 1) * self.m + u
    }

    pub fn r(&self, v: u32) -> Var {
        self.n * self.m + v
    }

    pub fn num_vars(&self) -> u32 {
        self.n * self.m + self.m
    }
}

/// Stone formula of a pointed graph with `m` stones. Clauses of the fourth
/// group with `t = v` or `u = v` contain `¬R_v ∨ R_v` and are omitted.
pub fn gen_stone(g: &PointedGraph, m: u32) -> Result<(Cnf, StoneMap), CnfError> {
    if m < g.n() {
        return Err(CnfError::BadParameter(format!("need m >= n, got m={m}, n={}", g.n())));
    }
    let map = StoneMap { n: g.n(), m };
    let mut cs = Vec::new();
    for i in 1..=g.n() {
        cs.push(Clause::new((1..=m).map(|u| Lit::pos(map.p(i, u))))?);
    }
    for i in g.sources() {
        for u in 1..=m {
            cs.push(Clause::new([Lit::neg(map.p(i, u)), Lit::pos(map.r(u))])?);
        }
    }
    for u in 1..=m {
        cs.push(Clause::new([Lit::neg(map.p(g.sink(), u)), Lit::neg(map.r(u))])?);
    }
    for k in g.internal() {
        let pr = g.preds(k);
        let (i, j) = (pr[0], pr[1]);
        for t in 1..=m {
            for u in 1..=m {
                for v in 1..=m {
                    if t == v || u == v {
                        continue;
                    }
                    cs.push(Clause::new([
                        Lit::neg(map.p(i, t)),
                        Lit::neg(map.r(t)),
                        Lit::neg(map.p(j, u)),
                        Lit::neg(map.r(u)),
                        Lit::neg(map.p(k, v)),
                        Lit::pos(map.r(v)),
                    ])?);
                }
            }
        }
    }
    Ok((Cnf::new(map.num_vars(), cs)?, map))
}

/// P-blocks by descending vertex, stones ascending inside a block, then the
/// R-block.
pub fn order_stone(g: &PointedGraph, m: u32) -> Result<VarOrder, CnfError> {
    if !g.is_topologically_numbered() {
        return Err(CnfError::BadGraph("graph must be topologically numbered with sink n".into()));
    }
    let map = StoneMap { n: g.n(), m };
    let mut seq = Vec::with_capacity(map.num_vars() as usize);
    for i in (1..=g.n()).rev() {
        for u in 1..=m {
            seq.push(map.p(i, u));
        }
    }
    for v in 1..=m {
        seq.push(map.r(v));
    }
    VarOrder::from_sequence(&seq)
}

/// Uniform random `k`-CNF with `m` clauses over `n` variables.
pub fn gen_random_kcnf(n: u32, m: usize, k: u32, seed: u64) -> Result<Cnf, CnfError> {
    if k == 0 || k > n {
        return Err(CnfError::BadParameter(format!("clause width {k} invalid for {n} variables")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars: Vec<Var> = (1..=n).collect();
    let mut cs = Vec::with_capacity(m);
    for _ in 0..m {
        let picked: Vec<Var> = vars.choose_multiple(&mut rng, k as usize).copied().collect();
        cs.push(Clause::new(picked.into_iter().map(|v| Lit::new(v, rng.gen())))?);
    }
    Cnf::new(n, cs)
}

/// Random CNF with clause widths drawn from `1..=max_width`.
pub fn gen_random_cnf(n: u32, m: usize, max_width: u32, seed: u64) -> Result<Cnf, CnfError> {
    if n == 0 || max_width == 0 {
        return Err(CnfError::BadParameter("need n >= 1 and width >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars: Vec<Var> = (1..=n).collect();
    let mut cs = Vec::with_capacity(m);
    for _ in 0..m {
        let w = rng.gen_range(1..=max_width.min(n));
        let picked: Vec<Var> = vars.choose_multiple(&mut rng, w as usize).copied().collect();
        cs.push(Clause::new(picked.into_iter().map(|v| Lit::new(v, rng.gen())))?);
    }
    Cnf::new(n, cs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cl(xs: &[i64]) -> Clause {
        Clause::from_dimacs(xs).unwrap()
    }

    #[test]
    fn restriction_keeps_falsified_clause() {
        let tau = Cnf::new(2, [cl(&[1, 2]), cl(&[-2])]).unwrap();
        let r = tau.restrict(&Restriction::single(2, false));
        assert_eq!(r.clauses(), &[cl(&[1])]);
        let r = tau.restrict(&Restriction::single(1, false));
        assert_eq!(r.clauses(), &[cl(&[-2]), cl(&[2])]);
        let r = tau.restrict(&Restriction::from_pairs([(1, false), (2, false)]).unwrap());
        assert_eq!(r.clauses(), &[Clause::empty()]);
        assert_eq!(tau.restrict(&Restriction::new()), tau);
        let ind2 = gen_induction(2).unwrap();
        let r = ind2.restrict(&Restriction::single(1, false));
        assert_eq!(r.clauses(), &[Clause::empty(), cl(&[-2])]);
    }

    #[test]
    fn induction_shapes() {
        let c = gen_induction(3).unwrap();
        assert_eq!(c.len(), 4);
        assert!(c.contains(&cl(&[-2, 3])));
        assert_eq!(gen_induction(1).unwrap().clauses(), &[cl(&[-1]), cl(&[1])]);
        assert!(gen_induction(0).is_err());
    }

    #[test]
    fn xor_counts() {
        let (c, map) = xor_substitute(&gen_induction(3).unwrap(), 2).unwrap();
        assert_eq!(c.len(), 12);
        assert_eq!(map.num_vars(), 6);
        let (c, _) = xor_substitute(&gen_induction(4).unwrap(), 1).unwrap();
        assert_eq!(c, gen_induction(4).unwrap());
        let (c, _) = xor_substitute(&Cnf::new(1, [cl(&[1])]).unwrap(), 2).unwrap();
        assert_eq!(c.clauses(), &[cl(&[-1, -2]), cl(&[1, 2])]);
    }

    #[test]
    fn parallel_orders() {
        let o = order_row_then_column(2, 2);
        let map = XorMap { rows: 2, cols: 2 };
        assert_eq!(o.sequence(), &[map.var(1, 1), map.var(2, 1), map.var(1, 2), map.var(2, 2)]);
        assert!(is_row_parallel(&o, &map) && is_column_parallel(&o, &map));
        let bad = VarOrder::from_sequence(&[1, 2, 3, 4]).unwrap();
        assert!(!is_row_parallel(&bad, &map));
        assert_eq!(order_row_then_column(4, 1), VarOrder::identity(4));
        let single = XorMap { rows: 1, cols: 3 };
        assert!(is_row_parallel(&VarOrder::identity(3), &single));
        assert!(!is_row_parallel(&VarOrder::from_sequence(&[2, 1, 3]).unwrap(), &single));
    }

    #[test]
    fn stone_three_vertices() {
        let g = PointedGraph::new(3, vec![(1, 3), (2, 3)]).unwrap();
        let (c, map) = gen_stone(&g, 3).unwrap();
        // 3 + 6 + 3 + 27, minus the 15 tautological group-4 combinations.
        assert_eq!(c.len(), 3 + 6 + 3 + 12);
        assert!(c.contains(&Clause::new((1..=3).map(|u| Lit::pos(map.p(1, u)))).unwrap()));
        let o = order_stone(&g, 3).unwrap();
        assert_eq!(o.sequence(), &[7, 8, 9, 4, 5, 6, 1, 2, 3, 10, 11, 12]);
        assert!(gen_stone(&g, 2).is_err());
    }

    #[test]
    fn pointed_graphs() {
        for seed in 0..20 {
            let g = gen_pointed_graph(3, seed).unwrap();
            assert_eq!(g.edges(), &[(1, 3), (2, 3)]);
            let g5 = gen_pointed_graph(5, seed).unwrap();
            assert_eq!(g5, gen_pointed_graph(5, seed).unwrap());
            assert!(g5.is_topologically_numbered());
        }
        assert!(gen_pointed_graph(2, 0).is_err());
        assert_eq!(enumerate_pointed_graphs(3).len(), 1);
        assert!(enumerate_pointed_graphs(5).len() > 1);
    }

    #[test]
    fn small_predicates() {
        let id = VarOrder::identity(4);
        assert!(id.is_k_small(&cl(&[1, 2]), 2));
        assert!(!id.is_k_small(&cl(&[1, 3]), 2) && id.is_almost_k_small(&cl(&[1, 3]), 2));
        assert!(!id.is_k_small(&cl(&[3, 4]), 2) && !id.is_almost_k_small(&cl(&[3, 4]), 2));
    }

    #[test]
    fn resolution_basics() {
        assert_eq!(cl(&[1, 2]).resolve(&cl(&[-2, 3]), 2), Some(cl(&[1, 3])));
        assert_eq!(cl(&[1, 2]).resolve(&cl(&[-1, -2]), 2), None);
        assert_eq!(cl(&[1]).resolve(&cl(&[-1]), 1), Some(Clause::empty()));
        assert!(Clause::from_dimacs(&[1, -1]).is_err());
    }
}

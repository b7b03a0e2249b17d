//! Line-based text formats: DIMACS CNF, orders, pointed graphs, resolution
//! proofs, run traces and π-P₀ proofs. Every writer's output reads back to
//! an equal value.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::cdcl::{Action, Ann, Assign};
use crate::cnf::{Clause, Cnf, CnfError, Lit, PointedGraph, Var, VarOrder};
use crate::p0::{P0Line, P0Proof};
use crate::resproof::{ProofNode, ResolutionProof, Rule};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing header `{0}`")]
    MissingHeader(&'static str),
    #[error(transparent)]
    Cnf(#[from] CnfError),
}

fn perr(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse { line, msg: msg.into() }
}

/// Non-empty, non-comment lines with their 1-based numbers.
fn content(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('c'))
}

fn ints<T: std::str::FromStr>(line: usize, toks: &[&str]) -> Result<Vec<T>, FormatError> {
    toks.iter().map(|t| t.parse::<T>().map_err(|_| perr(line, format!("bad number `{t}`")))).collect()
}

/// A zero-terminated literal list at the end of `toks`.
fn clause_tail(line: usize, toks: &[&str], n: u32) -> Result<Clause, FormatError> {
    let xs: Vec<i64> = ints(line, toks)?;
    match xs.split_last() {
        Some((0, lits)) => {
            if let Some(&x) = lits.iter().find(|&&x| x == 0 || x.unsigned_abs() > n as u64) {
                return Err(perr(line, format!("literal {x} out of range")));
            }
            Clause::from_dimacs(lits).map_err(|e| perr(line, e.to_string()))
        }
        _ => Err(perr(line, "clause must end with 0")),
    }
}

/// Header `p <kind> <n> ...`; returns the remaining tokens.
fn header<'a>(text: &'a str, kind: &'static str) -> Result<(usize, Vec<&'a str>), FormatError> {
    let (line, l) = content(text).next().ok_or(FormatError::MissingHeader(kind))?;
    let toks: Vec<&str> = l.split_whitespace().collect();
    if toks.len() < 3 || toks[0] != "p" || toks[1] != kind {
        return Err(FormatError::MissingHeader(kind));
    }
    Ok((line, toks[2..].to_vec()))
}

/// Reads a DIMACS CNF and its comment lines.
pub fn read_dimacs(text: &str) -> Result<(Cnf, Vec<String>), FormatError> {
    let comments: Vec<String> = text.lines().map(str::trim).filter(|l| l.starts_with('c')).map(|l| l[1..].trim().to_string()).collect();
    let (hl, h) = header(text, "cnf")?;
    let hv: Vec<usize> = ints(hl, &h)?;
    let [n, m] = hv[..] else { return Err(perr(hl, "expected `p cnf <n> <m>`")) };
    let n = n as u32;
    let mut lits: Vec<i64> = Vec::new();
    let mut clauses = Vec::new();
    for (line, l) in content(text).skip(1) {
        for tok in l.split_whitespace() {
            let x: i64 = tok.parse().map_err(|_| perr(line, format!("bad literal `{tok}`")))?;
            if x == 0 {
                clauses.push(Clause::from_dimacs(&lits).map_err(|e| perr(line, e.to_string()))?);
                lits.clear();
            } else if x.unsigned_abs() > n as u64 {
                return Err(perr(line, format!("literal {x} exceeds n = {n}")));
            } else {
                lits.push(x);
            }
        }
    }
    if !lits.is_empty() {
        return Err(perr(text.lines().count(), "last clause is not terminated by 0"));
    }
    if clauses.len() != m {
        return Err(perr(hl, format!("header announces {m} clauses, found {}", clauses.len())));
    }
    Ok((Cnf::new(n, clauses)?, comments))
}

/// DIMACS text with the given comments first. The clause count is that of
/// the canonical (deduplicated) formula.
pub fn write_dimacs(tau: &Cnf, comments: &[String]) -> String {
    let mut s = String::new();
    for c in comments {
        let _ = writeln!(s, "c {c}");
    }
    let _ = writeln!(s, "p cnf {} {}", tau.num_vars(), tau.len());
    for c in tau.clauses() {
        let _ = writeln!(s, "{}", c.to_dimacs());
    }
    s
}

/// `p order <n>` followed by the ranks `π(x_1), …, π(x_n)`, or the single
/// token `identity` (then `n` comes from the caller).
pub fn read_order(text: &str, n: Option<u32>) -> Result<VarOrder, FormatError> {
    if text.trim() == "identity" {
        return n.map(VarOrder::identity).ok_or_else(|| perr(1, "`identity` needs a known variable count"));
    }
    let (hl, h) = header(text, "order")?;
    let hv: Vec<u32> = ints(hl, &h)?;
    let [k] = hv[..] else { return Err(perr(hl, "expected `p order <n>`")) };
    if let Some(n) = n {
        if n != k {
            return Err(perr(hl, format!("order is on {k} variables, formula on {n}")));
        }
    }
    let mut ranks: Vec<u32> = Vec::new();
    for (line, l) in content(text).skip(1) {
        ranks.extend(ints::<u32>(line, &l.split_whitespace().collect::<Vec<_>>())?);
    }
    if ranks.len() != k as usize {
        return Err(perr(hl, format!("expected {k} ranks, found {}", ranks.len())));
    }
    Ok(VarOrder::from_ranks(&ranks)?)
}

pub fn write_order(order: &VarOrder) -> String {
    let ranks: Vec<String> = order.ranks().iter().map(u32::to_string).collect();
    format!("p order {}\n{}\n", order.n(), ranks.join(" "))
}

/// `p graph <n>` followed by `e <u> <v>` lines; the sink is inferred.
pub fn read_graph(text: &str) -> Result<PointedGraph, FormatError> {
    let (hl, h) = header(text, "graph")?;
    let hv: Vec<u32> = ints(hl, &h)?;
    let [n] = hv[..] else { return Err(perr(hl, "expected `p graph <n>`")) };
    let mut edges = Vec::new();
    for (line, l) in content(text).skip(1) {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 || toks[0] != "e" {
            return Err(perr(line, "expected `e <u> <v>`"));
        }
        let uv: Vec<u32> = ints(line, &toks[1..])?;
        edges.push((uv[0], uv[1]));
    }
    Ok(PointedGraph::new(n, edges)?)
}

pub fn write_graph(g: &PointedGraph) -> String {
    let mut s = format!("p graph {}\n", g.n());
    for &(u, v) in g.edges() {
        let _ = writeln!(s, "e {u} {v}");
    }
    s
}

/// Maps file ids, which must increase strictly, to line indices.
struct Ids(HashMap<usize, usize>, usize);

impl Ids {
    fn new() -> Ids {
        Ids(HashMap::new(), 0)
    }

    fn define(&mut self, line: usize, id: usize, index: usize) -> Result<(), FormatError> {
        if id <= self.1 {
            return Err(perr(line, format!("id {id} does not increase")));
        }
        self.1 = id;
        self.0.insert(id, index);
        Ok(())
    }

    fn get(&self, line: usize, id: usize) -> Result<usize, FormatError> {
        self.0.get(&id).copied().ok_or_else(|| perr(line, format!("unknown id {id}")))
    }
}

/// Reads a resolution proof. Clauses are taken from the file as written, so
/// a wrong resolvent is left for the checker to report.
pub fn read_res_proof(text: &str) -> Result<ResolutionProof, FormatError> {
    read_res_proof_with_ids(text).map(|(pi, _)| pi)
}

/// Like [`read_res_proof`], also returning the file id of every node.
pub fn read_res_proof_with_ids(text: &str) -> Result<(ResolutionProof, Vec<usize>), FormatError> {
    let (hl, h) = header(text, "res")?;
    let hv: Vec<u32> = ints(hl, &h)?;
    let [n] = hv[..] else { return Err(perr(hl, "expected `p res <n>`")) };
    let mut pi = ResolutionProof::new(n);
    let mut ids = Ids::new();
    let mut file_ids = Vec::new();
    for (line, l) in content(text).skip(1) {
        let toks: Vec<&str> = l.split_whitespace().collect();
        let fixed = match toks[0] {
            "a" => 2,
            "r" => 5,
            "w" => 3,
            t => return Err(perr(line, format!("unknown line type `{t}`"))),
        };
        if toks.len() < fixed + 1 {
            return Err(perr(line, "line too short"));
        }
        let head: Vec<usize> = ints(line, &toks[1..fixed])?;
        let clause = clause_tail(line, &toks[fixed..], n)?;
        let rule = match toks[0] {
            "a" => Rule::Axiom,
            "r" => {
                let pivot = head[3] as Var;
                if pivot == 0 || pivot > n {
                    return Err(perr(line, format!("pivot {pivot} out of range")));
                }
                Rule::Resolution { p1: ids.get(line, head[1])?, p2: ids.get(line, head[2])?, pivot }
            }
            _ => Rule::Weakening { p: ids.get(line, head[1])? },
        };
        ids.define(line, head[0], pi.nodes.len())?;
        file_ids.push(head[0]);
        pi.nodes.push(ProofNode { clause, rule });
    }
    Ok((pi, file_ids))
}

pub fn write_res_proof(pi: &ResolutionProof) -> String {
    let mut s = format!("p res {}\n", pi.num_vars);
    for (i, node) in pi.nodes.iter().enumerate() {
        let c = node.clause.to_dimacs();
        let _ = match node.rule {
            Rule::Axiom => writeln!(s, "a {} {c}", i + 1),
            Rule::Resolution { p1, p2, pivot } => writeln!(s, "r {} {} {} {pivot} {c}", i + 1, p1 + 1, p2 + 1),
            Rule::Weakening { p } => writeln!(s, "w {} {} {c}", i + 1, p + 1),
        };
    }
    s
}

fn bit(line: usize, tok: &str) -> Result<bool, FormatError> {
    match tok {
        "0" => Ok(false),
        "1" => Ok(true),
        t => Err(perr(line, format!("expected 0 or 1, found `{t}`"))),
    }
}

/// A run trace: `p run <n>` then `d <var> <val>`, `u <var> <val> <clause-id>`
/// or `l <lit>* 0 <keep>` per action.
pub fn read_run(text: &str) -> Result<(u32, Vec<Action>), FormatError> {
    let (hl, h) = header(text, "run")?;
    let hv: Vec<u32> = ints(hl, &h)?;
    let [n] = hv[..] else { return Err(perr(hl, "expected `p run <n>`")) };
    let mut out = Vec::new();
    for (line, l) in content(text).skip(1) {
        let toks: Vec<&str> = l.split_whitespace().collect();
        let var = |t: &str| -> Result<Var, FormatError> {
            let v: Var = t.parse().map_err(|_| perr(line, format!("bad variable `{t}`")))?;
            if v == 0 || v > n {
                return Err(perr(line, format!("variable {v} out of range")));
            }
            Ok(v)
        };
        let a = match (toks[0], toks.len()) {
            ("d", 3) => Action::Decide { var: var(toks[1])?, val: bit(line, toks[2])? },
            ("u", 4) => Action::Unit { var: var(toks[1])?, val: bit(line, toks[2])?, clause: ints::<usize>(line, &toks[3..])?[0] },
            ("l", k) if k >= 3 => {
                let clause = clause_tail(line, &toks[1..k - 1], n)?;
                Action::Learn { clause, keep: ints::<usize>(line, &toks[k - 1..])?[0] }
            }
            _ => return Err(perr(line, format!("malformed action `{l}`"))),
        };
        out.push(a);
    }
    Ok((n, out))
}

pub fn write_run(n: u32, actions: &[Action]) -> String {
    let mut s = format!("p run {n}\n");
    for a in actions {
        let _ = match a {
            Action::Decide { var, val } => writeln!(s, "d {var} {}", *val as u8),
            Action::Unit { var, val, clause } => writeln!(s, "u {var} {} {clause}", *val as u8),
            Action::Learn { clause, keep } => writeln!(s, "l {} {keep}", clause.to_dimacs()),
        };
    }
    s
}

/// A π-P₀ proof: `p p0 <n> [weakening]`, an `o <ranks>` line giving the
/// order, then `ax`, `t`, `lr` and `wk` lines. The axiom set is `axioms`
/// when given, otherwise the clauses of the `ax` lines.
pub fn read_p0(text: &str, axioms: Option<&Cnf>) -> Result<P0Proof, FormatError> {
    let (hl, h) = header(text, "p0")?;
    let n: u32 = ints(hl, &h[..1])?[0];
    let allow_weakening = match h.get(1) {
        None => false,
        Some(&"weakening") => true,
        Some(t) => return Err(perr(hl, format!("unknown header flag `{t}`"))),
    };
    let mut order = None;
    let mut lines = Vec::new();
    let mut ids = Ids::new();
    for (line, l) in content(text).skip(1) {
        let toks: Vec<&str> = l.split_whitespace().collect();
        let p0line = match toks[0] {
            "o" => {
                order = Some(VarOrder::from_ranks(&ints::<u32>(line, &toks[1..])?)?);
                continue;
            }
            "ax" if toks.len() >= 3 => P0Line::Axiom { clause: clause_tail(line, &toks[2..], n)? },
            "t" if toks.len() == 6 || toks.len() == 7 => {
                let parent: usize = ints(line, &toks[2..3])?[0];
                let parent = if parent == 0 { None } else { Some(ids.get(line, parent)?) };
                let var: Var = ints(line, &toks[3..4])?[0];
                if var == 0 || var > n {
                    return Err(perr(line, format!("variable {var} out of range")));
                }
                let ann = match toks[4] {
                    "d" => Ann::D,
                    "u" => Ann::U,
                    t => return Err(perr(line, format!("annotation must be d or u, found `{t}`"))),
                };
                let val = bit(line, toks[5])?;
                let unit = match toks.get(6) {
                    Some(t) => Some(ids.get(line, ints::<usize>(line, &[t])?[0])?),
                    None => None,
                };
                P0Line::Trail { parent, assign: Assign { var, val, ann }, unit }
            }
            "lr" if toks.len() >= 6 => {
                let h: Vec<usize> = ints(line, &toks[2..5])?;
                P0Line::Learn { c1: ids.get(line, h[0])?, c2: ids.get(line, h[1])?, trail: ids.get(line, h[2])?, clause: clause_tail(line, &toks[5..], n)? }
            }
            "wk" if toks.len() >= 4 => P0Line::Weaken { premise: ids.get(line, ints::<usize>(line, &toks[2..3])?[0])?, clause: clause_tail(line, &toks[3..], n)? },
            _ => return Err(perr(line, format!("malformed line `{l}`"))),
        };
        let id: usize = ints(line, &toks[1..2])?[0];
        ids.define(line, id, lines.len())?;
        lines.push(p0line);
    }
    let order = order.ok_or_else(|| perr(hl, "missing `o` order line"))?;
    if order.n() != n {
        return Err(perr(hl, "order and header disagree on n"));
    }
    let axioms = match axioms {
        Some(a) => a.clone(),
        None => Cnf::new(n, lines.iter().filter_map(|l| if let P0Line::Axiom { clause } = l { Some(clause.clone()) } else { None }))?,
    };
    let mut p = P0Proof::new(axioms, order);
    p.lines = lines;
    p.allow_weakening = allow_weakening;
    Ok(p)
}

pub fn write_p0(p: &P0Proof) -> String {
    let mut s = format!("p p0 {}{}\n", p.num_vars(), if p.allow_weakening { " weakening" } else { "" });
    let ranks: Vec<String> = p.order.ranks().iter().map(u32::to_string).collect();
    let _ = writeln!(s, "o {}", ranks.join(" "));
    for (i, line) in p.lines.iter().enumerate() {
        let id = i + 1;
        let _ = match line {
            P0Line::Axiom { clause } => writeln!(s, "ax {id} {}", clause.to_dimacs()),
            P0Line::Trail { parent, assign, unit } => {
                let ann = if assign.ann == Ann::D { "d" } else { "u" };
                let mut l = format!("t {id} {} {} {ann} {}", parent.map_or(0, |p| p + 1), assign.var, assign.val as u8);
                if let Some(u) = unit {
                    let _ = write!(l, " {}", u + 1);
                }
                writeln!(s, "{l}")
            }
            P0Line::Learn { c1, c2, trail, clause } => writeln!(s, "lr {id} {} {} {} {}", c1 + 1, c2 + 1, trail + 1, clause.to_dimacs()),
            P0Line::Weaken { premise, clause } => writeln!(s, "wk {id} {} {}", premise + 1, clause.to_dimacs()),
        };
    }
    s
}

/// A literal in DIMACS form, for messages.
pub fn lit_str(l: Lit) -> String {
    l.to_dimacs().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::gen_induction;

    #[test]
    fn dimacs_round_trip() {
        let tau = gen_induction(4).unwrap();
        let text = write_dimacs(&tau, &["induction n=4".into()]);
        let (back, comments) = read_dimacs(&text).unwrap();
        assert_eq!(back, tau);
        assert_eq!(comments, vec!["induction n=4".to_string()]);
        assert!(read_dimacs("p cnf 2 1\n1 3 0\n").is_err());
        assert!(read_dimacs("p cnf 2 2\n1 2 0\n").is_err());
        assert!(read_dimacs("1 2 0\n").is_err());
    }

    #[test]
    fn order_formats() {
        let o = VarOrder::from_sequence(&[3, 1, 2]).unwrap();
        assert_eq!(read_order(&write_order(&o), Some(3)).unwrap(), o);
        assert_eq!(read_order("identity", Some(4)).unwrap(), VarOrder::identity(4));
        assert!(read_order("p order 3\n1 1 2\n", None).is_err());
        assert!(read_order("p order 3\n1 2 3\n", Some(4)).is_err());
    }

    #[test]
    fn resolution_proof_round_trip() {
        let text = "p res 2\na 1 1 0\na 2 -1 2 0\nr 3 1 2 1 2 0\na 5 -2 0\nr 9 3 5 2 0\n";
        let pi = read_res_proof(text).unwrap();
        assert_eq!(pi.len(), 5);
        assert!(pi.is_refutation());
        assert_eq!(read_res_proof(&write_res_proof(&pi)).unwrap(), pi);
        assert_eq!(read_res_proof_with_ids(text).unwrap().1, vec![1, 2, 3, 5, 9]);
        assert!(read_res_proof("p res 2\na 2 1 0\na 1 -1 0\n").is_err());
        assert!(read_res_proof("p res 2\nr 1 1 2 1 0\n").is_err());
    }

    #[test]
    fn run_round_trip() {
        let acts = vec![
            Action::Decide { var: 1, val: false },
            Action::Unit { var: 2, val: true, clause: 3 },
            Action::Learn { clause: Clause::from_dimacs(&[1, -2]).unwrap(), keep: 0 },
            Action::Learn { clause: Clause::empty(), keep: 0 },
        ];
        let text = write_run(2, &acts);
        assert!(text.contains("l 0 0"));
        assert_eq!(read_run(&text).unwrap(), (2, acts));
        assert!(read_run("p run 2\nd 3 0\n").is_err());
    }

    #[test]
    fn p0_round_trip() {
        let tau = Cnf::new(1, [Clause::from_dimacs(&[1]).unwrap(), Clause::from_dimacs(&[-1]).unwrap()]).unwrap();
        let mut b = crate::p0::P0Builder::new(tau.clone(), VarOrder::identity(1));
        let a = b.axiom(&Clause::from_dimacs(&[1]).unwrap());
        let c = b.axiom(&Clause::from_dimacs(&[-1]).unwrap());
        let t = b.unit(None, a);
        b.learn(a, c, t);
        let p = b.finish();
        let back = read_p0(&write_p0(&p), Some(&tau)).unwrap();
        assert_eq!(back.lines, p.lines);
        assert_eq!(back.order, p.order);
        assert!(crate::p0::check_p0_refutation(&back).valid);
        let inferred = read_p0(&write_p0(&p), None).unwrap();
        assert_eq!(inferred.axioms, tau);
    }
}

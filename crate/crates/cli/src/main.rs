use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use trailproof::cdcl::{run_with_budget, verify_run, Amendments, Policy, RunOutcome};
use trailproof::cnf::{gen_induction, gen_pointed_graph, gen_random_kcnf, gen_stone, order_row_then_column, order_stone, xor_substitute, Cnf, PointedGraph, VarOrder};
use trailproof::format;
use trailproof::oracle::{dpll_model, saturate, OracleBudget, OracleError, Saturation};
use trailproof::p0::{check_p0_refutation, p0_size};
use trailproof::resproof::{check_half_ordered, check_ordered, check_refutation, to_dot};
use trailproof::transforms::{self, TransformError};
use trailproof::width::{audit_width_lower_bound, check_robust};
use trailproof::{CheckReport, CnfError};

mod pipeline;
mod session;

use session::Session;

#[derive(Parser)]
#[command(name = "trailproof", version, about = "CDCL runs, ordered resolution and π-P₀ proofs: generators, checkers and simulations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a formula (and its order) from a family.
    Gen(GenArgs),
    /// Refute a formula by resolution saturation.
    Prove(ProveArgs),
    /// Brute-force ground truth.
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Check a proof or a run.
    Check(CheckArgs),
    /// Run the CDCL system under a policy.
    Simulate(SimulateArgs),
    /// Convert between proof systems.
    Transform(TransformArgs),
    /// Robustness certificates and width audits.
    #[command(subcommand)]
    Width(WidthCmd),
    /// Run a sequence of stages and collect size accounting.
    Pipeline(pipeline::PipelineArgs),
    /// Export a resolution proof as Graphviz DOT.
    Dot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Ind,
    Indxor,
    Stone,
    Random,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    family: Family,
    #[arg(long)]
    n: u32,
    /// Parity arity for `indxor`.
    #[arg(long, default_value_t = 2)]
    r: u32,
    /// Stones for `stone` (default n), clauses for `random` (default 5n).
    #[arg(long)]
    m: Option<u32>,
    /// Clause width for `random`.
    #[arg(long, default_value_t = 3)]
    k: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    order_out: Option<PathBuf>,
    /// The graph of a `stone` formula.
    #[arg(long)]
    graph_out: Option<PathBuf>,
}

#[derive(Args)]
struct ProveArgs {
    #[arg(long)]
    cnf: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Maximum number of kept clauses.
    #[arg(long, default_value_t = 200_000)]
    budget: usize,
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Decide satisfiability and print a model if there is one.
    Sat {
        #[arg(long)]
        cnf: PathBuf,
    },
    Prove(ProveArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckKind {
    Res,
    Ordered,
    Half,
    P0,
    Run,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(value_enum)]
    kind: CheckKind,
    #[arg(long = "in", alias = "proof")]
    input: PathBuf,
    /// Required except for `p0`, whose axioms default to its `ax` lines.
    #[arg(long)]
    cnf: Option<PathBuf>,
    #[arg(long)]
    order: Option<PathBuf>,
    /// Amendments for `run`, e.g. `π-D,FIRST-L`.
    #[arg(long, default_value = "")]
    amendments: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyKind {
    UnitFirstLex,
    Greedy,
    Random,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    cnf: PathBuf,
    #[arg(long)]
    order: Option<PathBuf>,
    #[arg(long, default_value = "")]
    amendments: String,
    #[arg(long, value_enum, default_value = "unit-first-lex")]
    policy: PolicyKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Step budget.
    #[arg(long, default_value_t = 1_000_000)]
    budget: usize,
    /// Budget for enumerating learnable clauses in one state.
    #[arg(long, default_value_t = 100_000)]
    learn_budget: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TransformKind {
    #[value(name = "half2ordered")]
    HalfToOrdered,
    #[value(name = "cdcl2half")]
    CdclToHalf,
    #[value(name = "half2cdcl")]
    HalfToCdcl,
    #[value(name = "p02cdcl")]
    P0ToCdcl,
    #[value(name = "cdcl2p0")]
    CdclToP0,
    Delete,
    Lift,
    Psim,
    P0w,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(value_enum)]
    kind: TransformKind,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    cnf: Option<PathBuf>,
    #[arg(long)]
    order: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Variables to delete.
    #[arg(long, value_delimiter = ',')]
    vars: Vec<u32>,
    /// The formula refuted by the input of `lift`.
    #[arg(long)]
    psi: Option<PathBuf>,
    /// The variable `lift` adds.
    #[arg(long)]
    x: Option<u32>,
}

#[derive(Subcommand)]
enum WidthCmd {
    /// Check that an order is k-robust for a formula.
    Robust {
        #[arg(long)]
        cnf: PathBuf,
        #[arg(long)]
        order: Option<PathBuf>,
        #[arg(long)]
        k: u32,
        /// Maximum number of restrictions to examine.
        #[arg(long, default_value_t = u64::MAX)]
        budget: u64,
    },
    /// Audit a π-P₀ proof against the width lower bound for `w`.
    Audit {
        #[arg(long)]
        p0: PathBuf,
        #[arg(long)]
        cnf: Option<PathBuf>,
        /// Defaults to the proof's own order.
        #[arg(long)]
        order: Option<PathBuf>,
        #[arg(long)]
        w: u32,
    },
}

/// How a command ended, other than by an error.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Status {
    Ok,
    Violation,
    Budget,
}

impl Status {
    pub fn from_pass(pass: bool) -> Status {
        if pass {
            Status::Ok
        } else {
            Status::Violation
        }
    }

    fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Violation => 1,
            Status::Budget => 3,
        }
    }
}

/// Exit code for an error: semantic failures are 1, budgets 3, everything
/// else (I/O, parsing, bad parameters) 2.
fn error_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(t) = cause.downcast_ref::<TransformError>() {
            return match t {
                TransformError::Budget => 3,
                TransformError::Cnf(_) => 2,
                _ => 1,
            };
        }
        if cause.is::<format::FormatError>() || cause.is::<CnfError>() || cause.is::<OracleError>() || cause.is::<std::io::Error>() {
            return 2;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut s = Session::default();
    match dispatch(&mut s, cli.cmd) {
        Ok(st) => ExitCode::from(st.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_code(&e))
        }
    }
}

fn dispatch(s: &mut Session, cmd: Cmd) -> Result<Status> {
    match cmd {
        Cmd::Gen(a) => cmd_gen(s, a),
        Cmd::Prove(a) | Cmd::Oracle(OracleCmd::Prove(a)) => cmd_prove(s, a),
        Cmd::Oracle(OracleCmd::Sat { cnf }) => {
            let tau = s.cnf(&cnf)?;
            let model = dpll_model(&tau);
            let lits: Option<Vec<i64>> = model.map(|m| m.iter().enumerate().map(|(i, &b)| if b { i as i64 + 1 } else { -(i as i64 + 1) }).collect());
            s.emit(json!({"cmd": "oracle-sat", "sat": lits.is_some(), "model": lits}));
            Ok(Status::Ok)
        }
        Cmd::Check(a) => cmd_check(s, a),
        Cmd::Simulate(a) => cmd_simulate(s, a),
        Cmd::Transform(a) => cmd_transform(s, a),
        Cmd::Width(w) => cmd_width(s, w),
        Cmd::Pipeline(a) => pipeline::cmd_pipeline(s, a),
        Cmd::Dot { input, out } => {
            let (pi, _) = s.res(&input)?;
            s.write(out.as_deref(), &to_dot(&pi))?;
            s.emit(json!({"cmd": "dot", "nodes": pi.len()}));
            Ok(Status::Ok)
        }
    }
}

/// A generated formula with its natural order and, for Stone formulas, the graph.
pub struct Generated {
    pub tau: Cnf,
    pub order: VarOrder,
    pub graph: Option<PointedGraph>,
    pub label: String,
}

pub fn generate(family: Family, n: u32, r: u32, m: Option<u32>, k: u32, seed: u64) -> Result<Generated> {
    let g = match family {
        Family::Ind => Generated { tau: gen_induction(n)?, order: VarOrder::identity(n), graph: None, label: format!("induction n={n}") },
        Family::Indxor => {
            let (tau, _) = xor_substitute(&gen_induction(n)?, r)?;
            Generated { tau, order: order_row_then_column(n, r), graph: None, label: format!("induction n={n} with parity arity r={r}") }
        }
        Family::Stone => {
            let m = m.unwrap_or(n);
            let g = gen_pointed_graph(n, seed)?;
            let (tau, _) = gen_stone(&g, m)?;
            Generated { tau, order: order_stone(&g, m)?, graph: Some(g), label: format!("stone n={n} m={m} seed={seed}") }
        }
        Family::Random => {
            let m = m.unwrap_or(5 * n) as usize;
            Generated { tau: gen_random_kcnf(n, m, k, seed)?, order: VarOrder::identity(n), graph: None, label: format!("random {k}-cnf n={n} m={m} seed={seed}") }
        }
    };
    Ok(g)
}

fn cmd_gen(s: &mut Session, a: GenArgs) -> Result<Status> {
    let Generated { tau, order, graph, label } = generate(a.family, a.n, a.r, a.m, a.k, a.seed)?;
    s.write(a.out.as_deref(), &format::write_dimacs(&tau, &[label]))?;
    if let Some(p) = &a.order_out {
        std::fs::write(p, format::write_order(&order)).with_context(|| format!("writing {}", p.display()))?;
    }
    if let (Some(p), Some(g)) = (&a.graph_out, &graph) {
        std::fs::write(p, format::write_graph(g)).with_context(|| format!("writing {}", p.display()))?;
    }
    s.emit(json!({"cmd": "gen", "vars": tau.num_vars(), "clauses": tau.len(), "seed": a.seed, "formula": trailproof::width::formula_id(&tau)}));
    Ok(Status::Ok)
}

fn cmd_prove(s: &mut Session, a: ProveArgs) -> Result<Status> {
    let tau = s.cnf(&a.cnf)?;
    let budget = OracleBudget { max_clauses: a.budget, ..OracleBudget::default() };
    match saturate(&tau, budget)? {
        Saturation::Refutation(pi) => {
            s.write(a.out.as_deref(), &format::write_res_proof(&pi))?;
            s.emit(json!({"cmd": "prove", "result": "refuted", "size": pi.len(), "width": trailproof::resproof::proof_width(&pi)}));
            Ok(Status::Ok)
        }
        Saturation::Closed(k) => {
            s.emit(json!({"cmd": "prove", "result": "satisfiable", "clauses": k}));
            Ok(Status::Violation)
        }
        Saturation::BudgetExceeded(k) => {
            s.emit(json!({"cmd": "prove", "result": "budget", "clauses": k}));
            Ok(Status::Budget)
        }
    }
}

fn emit_report(s: &Session, kind: &str, rep: &CheckReport, ids: Option<&[usize]>) -> Status {
    let node = match (ids, rep.location()) {
        (Some(ids), Some(l)) if l >= 1 && l <= ids.len() => Some(ids[l - 1]),
        _ => None,
    };
    s.emit(json!({"cmd": "check", "kind": kind, "valid": rep.valid, "size": rep.size, "width": rep.width, "violation": rep.violation, "node": node}));
    Status::from_pass(rep.valid)
}

fn need<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a PathBuf> {
    match p {
        Some(p) => Ok(p),
        None => bail!("--{what} is required here"),
    }
}

fn cmd_check(s: &mut Session, a: CheckArgs) -> Result<Status> {
    match a.kind {
        CheckKind::Res | CheckKind::Ordered | CheckKind::Half => {
            let tau = s.cnf(need(&a.cnf, "cnf")?)?;
            let (pi, ids) = s.res(&a.input)?;
            let mut rep = check_refutation(&pi, &tau);
            let kind = match a.kind {
                CheckKind::Res => "res",
                CheckKind::Ordered => "ordered",
                _ => "half",
            };
            if rep.valid && a.kind != CheckKind::Res {
                let order = s.order(a.order.as_deref(), tau.num_vars())?;
                rep = if a.kind == CheckKind::Ordered { check_ordered(&pi, &order) } else { check_half_ordered(&pi, &order) };
            }
            Ok(emit_report(s, kind, &rep, Some(&ids)))
        }
        CheckKind::P0 => {
            let tau = a.cnf.as_deref().map(|p| s.cnf(p)).transpose()?;
            let mut p = s.p0(&a.input, tau.as_ref())?;
            if let Some(o) = a.order.as_deref() {
                p.order = s.order(Some(o), p.num_vars())?;
            }
            Ok(emit_report(s, "p0", &check_p0_refutation(&p), None))
        }
        CheckKind::Run => {
            let tau = s.cnf(need(&a.cnf, "cnf")?)?;
            let order = s.order(a.order.as_deref(), tau.num_vars())?;
            let am = Amendments::parse(&a.amendments, &order)?;
            let (trace, _) = s.run(&a.input, &tau)?;
            Ok(emit_report(s, "run", &verify_run(&trace, &am), None))
        }
    }
}

fn cmd_simulate(s: &mut Session, a: SimulateArgs) -> Result<Status> {
    let tau = s.cnf(&a.cnf)?;
    let order = s.order(a.order.as_deref(), tau.num_vars())?;
    let am = Amendments::parse(&a.amendments, &order)?;
    let policy = match a.policy {
        PolicyKind::UnitFirstLex => Policy::UnitFirstLex,
        PolicyKind::Greedy => Policy::Greedy(a.seed),
        PolicyKind::Random => Policy::Random(a.seed),
    };
    let trace = run_with_budget(&tau, &policy, &am, a.budget, a.learn_budget);
    s.write(a.out.as_deref(), &format::write_run(tau.num_vars(), &trace.actions()))?;
    let learned = trace.learned();
    s.emit(json!({
        "cmd": "simulate",
        "outcome": trace.outcome,
        "steps": trace.len(),
        "learned": learned.len(),
        "max_learned_width": learned.iter().map(|(_, c)| c.width()).max(),
        "amendments": am.names(),
        "seed": a.seed,
    }));
    Ok(match trace.outcome {
        RunOutcome::StepBudget | RunOutcome::LearnBudget => Status::Budget,
        _ => Status::Ok,
    })
}

/// Prints the size-accounting line of a transformation.
pub fn emit_size(s: &Session, cmd: &str, kind: &str, input: usize, output: usize, bound: Option<f64>) -> Status {
    let pass = bound.is_none_or(|b| output as f64 <= b);
    s.emit(json!({"cmd": cmd, "kind": kind, "input_size": input, "output_size": output, "bound": bound, "pass": pass}));
    Status::from_pass(pass)
}

fn cmd_transform(s: &mut Session, a: TransformArgs) -> Result<Status> {
    use TransformKind as K;
    let kind = a.kind.to_possible_value().expect("named").get_name().to_string();
    let out = a.out.as_deref();
    if a.kind == K::Lift {
        let psi = s.cnf(need(&a.psi, "psi")?)?;
        let tau = s.cnf(need(&a.cnf, "cnf")?)?;
        let x = a.x.context("--x is required for lift")?;
        let p = s.p0(&a.input, Some(&psi))?;
        let lifted = transforms::lift(&p, &tau, &transforms::LiftMap::new(&psi, &tau, x)?)?;
        s.write(out, &format::write_p0(&lifted))?;
        return Ok(emit_size(s, "transform", &kind, p0_size(&p), p0_size(&lifted), None));
    }
    if a.kind == K::Delete {
        let (pi, _) = s.res(&a.input)?;
        let set: BTreeSet<u32> = a.vars.iter().copied().collect();
        let (d, rep) = transforms::delete_vars(&pi, &set)?;
        s.write(out, &format::write_res_proof(&d))?;
        return Ok(emit_size(s, "transform", &kind, pi.len(), d.len(), Some((pi.len() - rep.t) as f64)));
    }
    let tau: Cnf = s.cnf(need(&a.cnf, "cnf")?)?;
    let n = tau.num_vars() as f64;
    let order = s.order(a.order.as_deref(), tau.num_vars())?;
    let (text, input, output, bound) = match a.kind {
        K::HalfToOrdered | K::HalfToCdcl | K::Psim | K::P0w => {
            let (pi, _) = s.res(&a.input)?;
            let m = pi.len() as f64;
            match a.kind {
                K::HalfToOrdered => {
                    let o = transforms::half_to_ordered(&pi, &tau, &order)?;
                    (format::write_res_proof(&o), pi.len(), o.len(), Some(n * m.max(1.0)))
                }
                K::HalfToCdcl => {
                    let t = transforms::half_to_cdcl_proof(&pi, &tau, &order)?;
                    (format::write_run(tau.num_vars(), &t.actions()), pi.len(), t.len(), Some((n + 1.0) * m))
                }
                K::Psim => {
                    let p = transforms::psim(&pi, &tau, &order)?;
                    (format::write_p0(&p), pi.len(), p.len(), Some(transforms::PSIM_K * n * n * tau.len() as f64 * m))
                }
                _ => {
                    let p = transforms::p0w_simulate(&pi, &tau, &order)?;
                    (format::write_p0(&p), pi.len(), p.len(), Some(transforms::P0W_K * n * n * m))
                }
            }
        }
        K::CdclToHalf | K::CdclToP0 => {
            let (trace, _) = s.run(&a.input, &tau)?;
            if a.kind == K::CdclToHalf {
                let pi = transforms::cdcl_to_half(&trace, &order)?;
                (format::write_res_proof(&pi), trace.len(), pi.len(), None)
            } else {
                let p = transforms::p0_from_cdcl(&trace, &order)?;
                (format::write_p0(&p), trace.len(), p.len(), None)
            }
        }
        K::P0ToCdcl => {
            let mut p = s.p0(&a.input, Some(&tau))?;
            if a.order.is_some() {
                p.order = order;
            }
            let t = transforms::cdcl_from_p0(&p)?;
            (format::write_run(tau.num_vars(), &t.actions()), p.len(), t.len(), Some(n * p.len() as f64))
        }
        K::Lift | K::Delete => unreachable!(),
    };
    s.write(out, &text)?;
    Ok(emit_size(s, "transform", &kind, input, output, bound))
}

fn cmd_width(s: &mut Session, w: WidthCmd) -> Result<Status> {
    match w {
        WidthCmd::Robust { cnf, order, k, budget } => {
            let tau = s.cnf(&cnf)?;
            let order = s.order(order.as_deref(), tau.num_vars())?;
            let cert = check_robust(&tau, &order, k, budget);
            let status = if cert.verdict {
                Status::Ok
            } else if cert.counterexample.is_some() {
                Status::Violation
            } else {
                Status::Budget
            };
            let mut v = serde_json::to_value(&cert)?;
            v["cmd"] = json!("width-robust");
            s.emit(v);
            Ok(status)
        }
        WidthCmd::Audit { p0, cnf, order, w } => {
            let tau = cnf.as_deref().map(|p| s.cnf(p)).transpose()?;
            let p = s.p0(&p0, tau.as_ref())?;
            let order = match order {
                Some(o) => s.order(Some(&o), p.num_vars())?,
                None => p.order.clone(),
            };
            let rep = audit_width_lower_bound(&p, &order, w);
            s.emit(json!({"cmd": "width-audit", "w": w, "valid": rep.valid, "size": rep.size, "width": rep.width, "violation": rep.violation}));
            Ok(Status::from_pass(rep.valid))
        }
    }
}

//! Batch experiments: a formula, an order and a list of stages, each stage
//! consuming the artifact of an earlier one.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;
use trailproof::cdcl::{run_with_budget, verify_run, Amendments, Policy, RunOutcome, RunTrace};
use trailproof::cnf::{Cnf, VarOrder};
use trailproof::oracle::{saturate, OracleBudget, Saturation};
use trailproof::p0::{check_p0_refutation, P0Proof};
use trailproof::resproof::{check_half_ordered, check_ordered, check_refutation, ResolutionProof};
use trailproof::transforms::{self, P0W_K, PSIM_K};
use trailproof::width::{audit_width_lower_bound, check_robust, formula_id};
use trailproof::CheckReport;

use crate::session::Session;
use crate::{generate, Family, Status};

#[derive(Args)]
pub struct PipelineArgs {
    /// JSON file holding one experiment or a list of them.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    cnf: Option<PathBuf>,
    #[arg(long)]
    order: Option<PathBuf>,
    /// Comma-separated stages, e.g. `oracle,psim,check,width-audit:2`.
    #[arg(long, value_delimiter = ',')]
    stages: Vec<String>,
    #[arg(long, default_value = "")]
    amendments: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Step budget for `simulate` stages.
    #[arg(long, default_value_t = 1_000_000)]
    budget: usize,
    /// Writes one CSV row per stage.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub kind: Family,
    pub n: u32,
    #[serde(default = "two")]
    pub r: u32,
    pub m: Option<u32>,
    #[serde(default = "three")]
    pub k: u32,
}

fn two() -> u32 {
    2
}

fn three() -> u32 {
    3
}

fn step_budget() -> usize {
    1_000_000
}

/// One experiment. The formula comes from `cnf` or from `family`; the
/// order from `order`, else the family's order, else the identity.
#[derive(Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub name: String,
    pub cnf: Option<PathBuf>,
    pub family: Option<FamilySpec>,
    pub order: Option<PathBuf>,
    #[serde(default)]
    pub amendments: String,
    #[serde(default)]
    pub stages: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "step_budget")]
    pub budget: usize,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SpecFile {
    One(ExperimentSpec),
    Many(Vec<ExperimentSpec>),
}

#[derive(Serialize, Clone, Debug)]
pub struct Row {
    pub experiment: String,
    pub formula: String,
    pub seed: u64,
    pub stage: String,
    pub input_size: usize,
    pub output_size: usize,
    pub bound: Option<f64>,
    pub pass: bool,
}

#[derive(Default)]
struct Artifacts {
    res: Option<ResolutionProof>,
    p0: Option<P0Proof>,
    run: Option<RunTrace>,
    last: Option<&'static str>,
}

impl Artifacts {
    fn res(&self) -> Result<&ResolutionProof> {
        self.res.as_ref().ok_or_else(|| anyhow!("no resolution proof from an earlier stage"))
    }

    fn p0(&self) -> Result<&P0Proof> {
        self.p0.as_ref().ok_or_else(|| anyhow!("no π-P₀ proof from an earlier stage"))
    }

    fn run(&self) -> Result<&RunTrace> {
        self.run.as_ref().ok_or_else(|| anyhow!("no run from an earlier stage"))
    }
}

/// `(input size, output size, bound, pass)` of one stage.
type Outcome = (usize, usize, Option<f64>, bool);

fn report(r: &CheckReport) -> Outcome {
    (r.size, r.size, None, r.valid)
}

fn sized(input: usize, output: usize, bound: f64) -> Outcome {
    (input, output, Some(bound), output as f64 <= bound)
}

struct Experiment<'a> {
    tau: &'a Cnf,
    order: &'a VarOrder,
    am: &'a Amendments,
    seed: u64,
    budget: usize,
}

impl Experiment<'_> {
    fn stage(&self, art: &mut Artifacts, stage: &str) -> Result<Outcome> {
        let (tau, order) = (self.tau, self.order);
        let n = tau.num_vars() as f64;
        let (name, arg) = match stage.split_once(':') {
            Some((a, b)) => (a, Some(b.parse::<u32>().with_context(|| format!("bad stage argument in `{stage}`"))?)),
            None => (stage, None),
        };
        let out = match name {
            "oracle" => match saturate(tau, OracleBudget::default())? {
                Saturation::Refutation(pi) => {
                    let k = pi.len();
                    art.res = Some(pi);
                    art.last = Some("res");
                    (tau.len(), k, None, true)
                }
                Saturation::Closed(k) => (tau.len(), k, None, false),
                Saturation::BudgetExceeded(_) => return Err(transforms::TransformError::Budget.into()),
            },
            "simulate" => {
                let t = run_with_budget(tau, &Policy::Greedy(self.seed), self.am, self.budget, 100_000);
                let k = t.len();
                let outcome = t.outcome;
                art.run = Some(t);
                art.last = Some("run");
                match outcome {
                    RunOutcome::Refuted => (tau.len(), k, None, true),
                    RunOutcome::StepBudget | RunOutcome::LearnBudget => return Err(transforms::TransformError::Budget.into()),
                    o => (tau.len(), k, None, o == RunOutcome::Refuted),
                }
            }
            "verify" => report(&verify_run(art.run()?, self.am)),
            "check" => match art.last {
                Some("res") => report(&check_refutation(art.res()?, tau)),
                Some("p0") => report(&check_p0_refutation(art.p0()?)),
                Some("run") => report(&verify_run(art.run()?, self.am)),
                _ => bail!("nothing to check"),
            },
            "check-ordered" | "check-half" => {
                let pi = art.res()?;
                let r = check_refutation(pi, tau);
                report(&if !r.valid {
                    r
                } else if name == "check-ordered" {
                    check_ordered(pi, order)
                } else {
                    check_half_ordered(pi, order)
                })
            }
            "cdcl2half" => {
                let t = art.run()?;
                let pi = transforms::cdcl_to_half(t, order)?;
                let o = (t.len(), pi.len(), None, true);
                art.res = Some(pi);
                art.last = Some("res");
                o
            }
            "half2ordered" => {
                let pi = art.res()?;
                let o = transforms::half_to_ordered(pi, tau, order)?;
                let r = sized(pi.len(), o.len(), n * pi.len().max(1) as f64);
                art.res = Some(o);
                r
            }
            "psim" | "p0w" => {
                let pi = art.res()?;
                let m = pi.len() as f64;
                let (p, bound) = if name == "psim" {
                    (transforms::psim(pi, tau, order)?, PSIM_K * n * n * tau.len() as f64 * m)
                } else {
                    (transforms::p0w_simulate(pi, tau, order)?, P0W_K * n * n * m)
                };
                let r = sized(pi.len(), p.len(), bound);
                art.p0 = Some(p);
                art.last = Some("p0");
                r
            }
            "cdcl2p0" => {
                let t = art.run()?;
                let p = transforms::p0_from_cdcl(t, order)?;
                let r = (t.len(), p.len(), None, true);
                art.p0 = Some(p);
                art.last = Some("p0");
                r
            }
            "p02cdcl" => {
                let p = art.p0()?;
                let t = transforms::cdcl_from_p0(p)?;
                let r = sized(p.len(), t.len(), n * p.len() as f64);
                art.run = Some(t);
                art.last = Some("run");
                r
            }
            "width-audit" => {
                let w = arg.context("width-audit needs `:w`")?;
                report(&audit_width_lower_bound(art.p0()?, order, w))
            }
            "robust" => {
                let k = arg.context("robust needs `:k`")?;
                let c = check_robust(tau, order, k, u64::MAX);
                (tau.len(), c.checked as usize, None, c.verdict)
            }
            _ => bail!("unknown stage `{stage}`"),
        };
        Ok(out)
    }
}

fn run_spec(s: &mut Session, spec: &ExperimentSpec, base: &Path, rows: &mut Vec<Row>) -> Result<Status> {
    let resolve = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
    let (tau, family_order) = match (&spec.cnf, &spec.family) {
        (Some(p), None) => (s.cnf(&resolve(p))?, None),
        (None, Some(f)) => {
            let g = generate(f.kind, f.n, f.r, f.m, f.k, spec.seed)?;
            (g.tau, Some(g.order))
        }
        _ => bail!("experiment `{}` needs exactly one of `cnf` and `family`", spec.name),
    };
    let order = match (&spec.order, family_order) {
        (Some(p), _) => s.order(Some(&resolve(p)), tau.num_vars())?,
        (None, Some(o)) => o,
        (None, None) => VarOrder::identity(tau.num_vars()),
    };
    let am = Amendments::parse(&spec.amendments, &order)?;
    let ex = Experiment { tau: &tau, order: &order, am: &am, seed: spec.seed, budget: spec.budget };
    let formula = formula_id(&tau);
    let mut art = Artifacts::default();
    for stage in &spec.stages {
        let (input_size, output_size, bound, pass) = ex.stage(&mut art, stage).with_context(|| format!("stage `{stage}` of experiment `{}`", spec.name))?;
        let row = Row { experiment: spec.name.clone(), formula: formula.clone(), seed: spec.seed, stage: stage.clone(), input_size, output_size, bound, pass };
        s.emit(json!({"cmd": "pipeline", "experiment": row.experiment, "stage": row.stage, "input_size": input_size, "output_size": output_size, "bound": bound, "pass": pass}));
        rows.push(row);
        if !pass {
            return Ok(Status::Violation);
        }
    }
    Ok(Status::Ok)
}

pub fn cmd_pipeline(s: &mut Session, a: PipelineArgs) -> Result<Status> {
    let (specs, base) = match &a.spec {
        Some(p) => {
            let text = s.read(p)?;
            let specs = match serde_json::from_str::<SpecFile>(&text).with_context(|| format!("parsing {}", p.display()))? {
                SpecFile::One(x) => vec![x],
                SpecFile::Many(v) => v,
            };
            (specs, p.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => {
            let spec = ExperimentSpec {
                name: String::new(),
                cnf: a.cnf.clone(),
                family: None,
                order: a.order.clone(),
                amendments: a.amendments.clone(),
                stages: a.stages.clone(),
                seed: a.seed,
                budget: a.budget,
            };
            if spec.stages.is_empty() && spec.cnf.is_none() {
                s.emit(json!({"cmd": "pipeline", "stages": 0}));
                return Ok(Status::Ok);
            }
            (vec![spec], PathBuf::new())
        }
    };
    let mut rows = Vec::new();
    let mut status = Status::Ok;
    let mut result = Ok(());
    for spec in &specs {
        match run_spec(s, spec, &base, &mut rows) {
            Ok(Status::Ok) => {}
            Ok(st) => {
                status = st;
                break;
            }
            Err(e) => {
                result = Err(e);
                break;
            }
        }
    }
    if let Some(p) = &a.csv {
        let mut w = csv::Writer::from_path(p).with_context(|| format!("writing {}", p.display()))?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    result.map(|()| status)
}

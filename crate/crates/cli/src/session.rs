use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use trailproof::cdcl::{Action, RunTrace};
use trailproof::cnf::{Cnf, VarOrder};
use trailproof::format;
use trailproof::p0::P0Proof;
use trailproof::resproof::ResolutionProof;

/// Reads inputs, remembering a hash of each, and writes outputs and report
/// lines. Reports go to stdout unless stdout already carries a payload.
#[derive(Default)]
pub struct Session {
    inputs: Vec<(String, String)>,
    payload_on_stdout: bool,
}

fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)[..8].iter().map(|b| format!("{b:02x}")).collect()
}

impl Session {
    pub fn read(&mut self, path: &Path) -> Result<String> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push((path.display().to_string(), digest(text.as_bytes())));
        Ok(text)
    }

    pub fn cnf(&mut self, path: &Path) -> Result<Cnf> {
        let text = self.read(path)?;
        Ok(format::read_dimacs(&text).with_context(|| format!("parsing {}", path.display()))?.0)
    }

    /// The order in `path`, or the identity on `n` variables.
    pub fn order(&mut self, path: Option<&Path>, n: u32) -> Result<VarOrder> {
        match path {
            None => Ok(VarOrder::identity(n)),
            Some(p) => {
                let text = self.read(p)?;
                format::read_order(&text, Some(n)).with_context(|| format!("parsing {}", p.display()))
            }
        }
    }

    pub fn res(&mut self, path: &Path) -> Result<(ResolutionProof, Vec<usize>)> {
        let text = self.read(path)?;
        format::read_res_proof_with_ids(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn p0(&mut self, path: &Path, axioms: Option<&Cnf>) -> Result<P0Proof> {
        let text = self.read(path)?;
        format::read_p0(&text, axioms).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn run(&mut self, path: &Path, tau: &Cnf) -> Result<(RunTrace, Vec<Action>)> {
        let text = self.read(path)?;
        let (n, actions) = format::read_run(&text).with_context(|| format!("parsing {}", path.display()))?;
        anyhow::ensure!(n == tau.num_vars(), "run is on {n} variables, formula on {}", tau.num_vars());
        Ok((RunTrace::from_actions(tau, &actions), actions))
    }

    /// Writes `text` to `out`, or to stdout when no path is given.
    pub fn write(&mut self, out: Option<&Path>, text: &str) -> Result<()> {
        match out {
            Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                self.payload_on_stdout = true;
                print!("{text}");
                Ok(())
            }
        }
    }

    /// Prints one JSON line, adding the version and the input hashes.
    pub fn emit(&self, mut v: Value) {
        if let Value::Object(m) = &mut v {
            m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
            let inputs: Map<String, Value> = self.inputs.iter().map(|(p, h)| (p.clone(), json!(h))).collect();
            m.insert("inputs".into(), Value::Object(inputs));
        }
        if self.payload_on_stdout {
            eprintln!("{v}");
        } else {
            println!("{v}");
        }
    }
}

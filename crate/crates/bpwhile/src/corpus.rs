//! The bundled corpus: programs with expected verdicts, compiled in.

use std::collections::BTreeMap;

use bpwhile_core::chain::Limits;
use bpwhile_core::dist::{output_distribution_with, Outcome};
use bpwhile_core::divergence::GapLimits;
use bpwhile_core::dpcheck::Mode;
use bpwhile_core::params::{parse_rational, parse_u32};
use bpwhile_core::qbf::Qbf;
use bpwhile_core::reach::ast_check;
use bpwhile_core::reductions::{amplify, tqbf_to_bpwhile, wrap_approx, wrap_distinguish, wrap_pure};
use bpwhile_core::{BitString, Error, Program, Rational, Result};
use serde::{Deserialize, Serialize};

use crate::ops::{parse_neighbor, parse_source, verify, Property, VerifyOptions};
use crate::record::VerdictRecord;

const MANIFEST: &str = include_str!("../corpus/manifest.toml");

const FILES: &[(&str, &str)] = &[
    ("rr.bpw", include_str!("../corpus/rr.bpw")),
    ("coin.bpw", include_str!("../corpus/coin.bpw")),
    ("id.bpw", include_str!("../corpus/id.bpw")),
    ("geo.bpw", include_str!("../corpus/geo.bpw")),
    ("loop.bpw", include_str!("../corpus/loop.bpw")),
    ("c-half.bpw", include_str!("../corpus/c-half.bpw")),
    ("lossy-rr.bpw", include_str!("../corpus/lossy-rr.bpw")),
    ("geometric-n2.bpwx", include_str!("../corpus/geometric-n2.bpwx")),
];

#[derive(Debug, Clone, Deserialize)]
struct Manifest {
    entry: Vec<Entry>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Entry {
    pub name: String,
    pub description: String,
    pub file: Option<String>,
    pub reduce: Option<String>,
    pub neighbor: Option<String>,
    #[serde(default)]
    pub qbf: Vec<String>,
    #[serde(default)]
    pub truth: Vec<bool>,
    #[serde(default)]
    pub check: Vec<Check>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Check {
    pub kind: String,
    pub expect: Option<String>,
    pub eeps: Option<String>,
    pub delta: Option<String>,
    pub alpha: Option<String>,
    pub rho: Option<String>,
    pub omega: Option<String>,
    pub eta: Option<u32>,
    pub mode: Option<String>,
    pub input: Option<String>,
    pub dist: Option<BTreeMap<String, String>>,
    pub witness: Option<Vec<String>>,
}

/// Outcome of one bundled check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub entry: String,
    pub check: String,
    pub passed: bool,
    pub detail: String,
    pub record: Option<VerdictRecord>,
}

pub fn entries() -> Vec<Entry> {
    let m: Manifest = toml::from_str(MANIFEST).expect("bundled manifest is valid");
    m.entry
}

pub fn entry(name: &str) -> Option<Entry> {
    entries().into_iter().find(|e| e.name == name)
}

pub fn source(file: &str) -> Option<&'static str> {
    FILES.iter().find(|(n, _)| *n == file).map(|(_, s)| *s)
}

fn rational(field: &Option<String>, what: &str) -> Result<Rational> {
    let s = field.as_ref().ok_or_else(|| Error::Param(format!("check is missing `{what}`")))?;
    parse_rational(s)
}

/// Applies a `reduce` spec: `wrap-pure`, `wrap-approx:<δ>`, `amplify:<m>`
/// or `distinguish:<e_eps>:<δ>`.
pub fn apply_reduction(spec: &str, prog: &Program) -> Result<Program> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["wrap-pure"] => wrap_pure(prog),
        ["wrap-approx", d] => wrap_approx(prog, &parse_rational(d)?),
        ["amplify", m] => amplify(prog, parse_u32(m)?),
        ["distinguish", e, d] => Ok(wrap_distinguish(prog, &parse_rational(e)?, &parse_rational(d)?)?.0),
        _ => Err(Error::Param(format!("unknown reduction `{spec}`"))),
    }
}

impl Entry {
    /// The entry's programs: the (reduced) file, or one per QBF.
    pub fn programs(&self) -> Result<Vec<Program>> {
        if let Some(file) = &self.file {
            let text = source(file).ok_or_else(|| Error::Param(format!("corpus file `{file}` is not bundled")))?;
            let prog = parse_source(text, file.ends_with(".bpwx"))?;
            return Ok(vec![match &self.reduce {
                Some(spec) => apply_reduction(spec, &prog)?,
                None => prog,
            }]);
        }
        self.qbfs()?.iter().map(tqbf_to_bpwhile).collect()
    }

    pub fn qbfs(&self) -> Result<Vec<Qbf>> {
        self.qbf.iter().map(|q| Qbf::parse(q)).collect()
    }
}

impl Check {
    fn describe(&self) -> String {
        let mut parts = vec![self.kind.clone()];
        for (k, v) in [
            ("eeps", &self.eeps),
            ("delta", &self.delta),
            ("alpha", &self.alpha),
            ("rho", &self.rho),
            ("omega", &self.omega),
            ("mode", &self.mode),
            ("input", &self.input),
        ] {
            if let Some(v) = v {
                parts.push(format!("{k}={v}"));
            }
        }
        if let Some(e) = self.eta {
            parts.push(format!("eta={e}"));
        }
        parts.join(" ")
    }

    fn property(&self) -> Result<Property> {
        let eta = || self.eta.ok_or_else(|| Error::Param(String::from("check is missing `eta`")));
        Ok(match self.kind.as_str() {
            "pure" => Property::Pure { e_eps: rational(&self.eeps, "eeps")? },
            "approx" => Property::Approx { e_eps: rational(&self.eeps, "eeps")?, delta: rational(&self.delta, "delta")? },
            "rdp" => Property::Rdp { alpha: rational(&self.alpha, "alpha")?, rho: rational(&self.rho, "rho")?, eta: eta()? },
            "cdp" => Property::Cdp { rho: rational(&self.rho, "rho")?, eta: eta()? },
            "tcdp" => Property::Tcdp { rho: rational(&self.rho, "rho")?, omega: rational(&self.omega, "omega")?, eta: eta()? },
            other => return Err(Error::Param(format!("unknown check kind `{other}`"))),
        })
    }
}

/// Budgets and worker count for a corpus run.
#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub limits: Limits,
    pub gap_limits: GapLimits,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { limits: Limits::default(), gap_limits: GapLimits::default(), jobs: 1 }
    }
}

pub fn run_entry(entry: &Entry, cfg: &RunConfig) -> Vec<CheckResult> {
    entry
        .check
        .iter()
        .map(|c| {
            let label = c.describe();
            match run_check(entry, c, cfg) {
                Ok((passed, detail, record)) => CheckResult { entry: entry.name.clone(), check: label, passed, detail, record },
                Err(e) => CheckResult {
                    entry: entry.name.clone(),
                    check: label,
                    passed: false,
                    detail: format!("error: {e}"),
                    record: None,
                },
            }
        })
        .collect()
}

fn run_check(entry: &Entry, c: &Check, cfg: &RunConfig) -> Result<(bool, String, Option<VerdictRecord>)> {
    let command = format!("corpus run {} [{}]", entry.name, c.describe());
    match c.kind.as_str() {
        "tqbf" => {
            let qbfs = entry.qbfs()?;
            let mut bad = Vec::new();
            for (i, f) in qbfs.iter().enumerate() {
                let truth = f.eval();
                let terminates = ast_check(&tqbf_to_bpwhile(f)?, &cfg.limits)?.terminates();
                let listed = entry.truth.get(i).copied();
                if terminates != truth || listed.is_some_and(|t| t != truth) {
                    bad.push(format!("`{f}`: truth {truth}, terminates {terminates}, listed {listed:?}"));
                }
            }
            let detail = if bad.is_empty() { format!("{} formulas agree", qbfs.len()) } else { bad.join("; ") };
            Ok((bad.is_empty(), detail, None))
        }
        "ast" => {
            let progs = entry.programs()?;
            let v = ast_check(&progs[0], &cfg.limits)?;
            let r = VerdictRecord::from_ast(&command, &v);
            expect_decision(c, r)
        }
        "dist" => {
            let progs = entry.programs()?;
            let x: BitString = c
                .input
                .as_deref()
                .ok_or_else(|| Error::Param(String::from("dist check is missing `input`")))?
                .parse()?;
            let d = output_distribution_with(&progs[0], &x, &cfg.limits)?;
            let want = c.dist.clone().unwrap_or_default();
            let mut bad = Vec::new();
            for (k, v) in &want {
                let o = if k == "⊥" { Outcome::Bottom } else { Outcome::Bits(k.parse()?) };
                let got = d.get(&o);
                if got != parse_rational(v)? {
                    bad.push(format!("p[{k}] = {got}, expected {v}"));
                }
            }
            for (o, p) in d.iter() {
                if *p != Rational::from_integer(0.into()) && !want.contains_key(&o.to_string()) {
                    bad.push(format!("unexpected outcome {o} with probability {p}"));
                }
            }
            let r = VerdictRecord::from_dist(&command, &d);
            let detail = if bad.is_empty() { String::from("distribution matches") } else { bad.join("; ") };
            Ok((bad.is_empty(), detail, Some(r)))
        }
        _ => {
            let progs = entry.programs()?;
            let prog = &progs[0];
            let mode = match c.mode.as_deref() {
                None | Some("sensitive") => Mode::Sensitive,
                Some("insensitive") => Mode::Insensitive,
                Some(m) => return Err(Error::Param(format!("unknown mode `{m}`"))),
            };
            let opts = VerifyOptions {
                property: c.property()?,
                mode,
                neighbor: parse_neighbor(entry.neighbor.as_deref().unwrap_or("hamming1"), prog)?,
                limits: cfg.limits,
                gap_limits: cfg.gap_limits,
                jobs: cfg.jobs,
            };
            let r = verify(prog, &opts, &command)?;
            let (mut ok, mut detail, r) = expect_decision(c, r)?;
            if let (Some(want), Some(r)) = (&c.witness, &r) {
                let got = r.witness.as_ref().map(|w| {
                    let mut v = vec![w.x.clone().unwrap_or_default(), w.x_prime.clone().unwrap_or_default()];
                    v.extend(w.outcomes.iter().cloned());
                    v
                });
                if got.as_ref() != Some(want) {
                    ok = false;
                    detail = format!("witness {got:?}, expected {want:?}");
                }
            }
            Ok((ok, detail, r))
        }
    }
}

fn expect_decision(c: &Check, r: VerdictRecord) -> Result<(bool, String, Option<VerdictRecord>)> {
    let want = c.expect.as_deref().ok_or_else(|| Error::Param(String::from("check is missing `expect`")))?;
    let ok = r.decision == want;
    let detail = if ok { format!("decision {want}") } else { format!("decision {}, expected {want}", r.decision) };
    Ok((ok, detail, Some(r)))
}

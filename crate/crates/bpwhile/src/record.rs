//! Verdict records: one structured document per invocation.
//!
//! Field order is fixed by the struct definitions. Rationals appear as
//! canonical `num/den` strings next to a decimal approximation that is for
//! display only. `elapsed_ms` is the only field that varies between runs and
//! is omitted under `--no-timing`.

use std::fmt::{self, Write as _};

use bpwhile_core::dist::Dist;
use bpwhile_core::divergence::{Divergence, GapVerdict};
use bpwhile_core::dpcheck::DPVerdict;
use bpwhile_core::params::format_rational;
use bpwhile_core::reach::ASTVerdict;
use bpwhile_core::Rational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

pub const TOOL: &str = concat!("bpwhile ", env!("CARGO_PKG_VERSION"));

/// An exact rational with a display approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exact {
    pub exact: String,
    pub approx: f64,
}

impl Exact {
    pub fn new(r: &Rational) -> Self {
        Exact {
            exact: format_rational(r),
            approx: r.to_f64().unwrap_or(f64::NAN),
        }
    }

    pub fn parse(&self) -> Option<Rational> {
        bpwhile_core::params::parse_rational(&self.exact).ok()
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (~{})", self.exact, self.approx)
    }
}

/// Divergence enclosure `[lower, upper]`, or infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enclosure {
    pub infinite: bool,
    pub lower: Option<Exact>,
    pub upper: Option<Exact>,
}

impl Enclosure {
    pub fn new(d: &Divergence) -> Self {
        match d {
            Divergence::Infinite => Enclosure { infinite: true, lower: None, upper: None },
            Divergence::Finite(iv) => Enclosure {
                infinite: false,
                lower: Some(Exact::new(&iv.lower())),
                upper: Some(Exact::new(&iv.upper())),
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub x: Option<String>,
    pub x_prime: Option<String>,
    /// A chain state `line:hexmemory` (termination witnesses).
    pub state: Option<String>,
    pub outcomes: Vec<String>,
    pub lhs: Option<Exact>,
    pub rhs: Option<Exact>,
    pub alpha: Option<Exact>,
    pub divergence: Option<Enclosure>,
    pub threshold: Option<Exact>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistEntry {
    pub outcome: String,
    pub probability: Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub tool: String,
    pub command: String,
    pub decision: String,
    pub witness: Option<WitnessRecord>,
    pub distribution: Vec<DistEntry>,
    pub program: Option<String>,
    pub precision: Option<u32>,
    pub notes: Vec<String>,
    pub elapsed_ms: Option<u64>,
}

impl VerdictRecord {
    pub fn new(command: &str, decision: &str) -> Self {
        VerdictRecord {
            tool: String::from(TOOL),
            command: String::from(command),
            decision: String::from(decision),
            witness: None,
            distribution: Vec::new(),
            program: None,
            precision: None,
            notes: Vec::new(),
            elapsed_ms: None,
        }
    }

    pub fn from_dp(command: &str, v: &DPVerdict) -> Self {
        let mut r = VerdictRecord::new(command, if v.is_private() { "private" } else { "not-private" });
        r.witness = v.witness.as_ref().map(|w| WitnessRecord {
            x: Some(w.x.to_string()),
            x_prime: Some(w.x_prime.to_string()),
            outcomes: w.outcomes.iter().map(|o| o.to_string()).collect(),
            lhs: Some(Exact::new(&w.lhs)),
            rhs: Some(Exact::new(&w.rhs)),
            ..WitnessRecord::default()
        });
        r
    }

    pub fn from_ast(command: &str, v: &ASTVerdict) -> Self {
        let decision = if v.terminates() { "terminates" } else { "does-not-terminate" };
        let mut r = VerdictRecord::new(command, decision);
        r.witness = v.witness.as_ref().map(|(x, s)| WitnessRecord {
            x: Some(x.to_string()),
            state: Some(s.label()),
            ..WitnessRecord::default()
        });
        r
    }

    pub fn from_gap(command: &str, v: &GapVerdict) -> Self {
        use bpwhile_core::divergence::GapDecision;
        let decision = match v.decision {
            GapDecision::Yes => "yes",
            GapDecision::No => "no",
            GapDecision::Indeterminate => "indeterminate",
        };
        let mut r = VerdictRecord::new(command, decision);
        r.precision = Some(v.precision);
        r.witness = v.witness.as_ref().map(|w| WitnessRecord {
            x: Some(w.x.to_string()),
            x_prime: Some(w.x_prime.to_string()),
            alpha: Some(Exact::new(&w.alpha)),
            divergence: Some(Enclosure::new(&w.divergence)),
            threshold: Some(Exact::new(&w.threshold)),
            ..WitnessRecord::default()
        });
        r
    }

    pub fn from_dist(command: &str, d: &Dist) -> Self {
        let mut r = VerdictRecord::new(command, "ok");
        r.distribution = d
            .iter()
            .map(|(o, p)| DistEntry {
                outcome: o.to_string(),
                probability: Exact::new(p),
            })
            .collect();
        r
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("records serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// `key: value` lines in field order; absent fields are skipped.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "tool: {}", self.tool);
        let _ = writeln!(out, "command: {}", self.command);
        let _ = writeln!(out, "decision: {}", self.decision);
        if let Some(w) = &self.witness {
            let opt = |out: &mut String, k: &str, v: &Option<String>| {
                if let Some(v) = v {
                    let _ = writeln!(out, "witness.{k}: {v}");
                }
            };
            opt(&mut out, "x", &w.x);
            opt(&mut out, "x_prime", &w.x_prime);
            opt(&mut out, "state", &w.state);
            if !w.outcomes.is_empty() {
                let _ = writeln!(out, "witness.outcomes: {}", w.outcomes.join(" "));
            }
            for (k, v) in [("lhs", &w.lhs), ("rhs", &w.rhs), ("alpha", &w.alpha), ("threshold", &w.threshold)] {
                if let Some(v) = v {
                    let _ = writeln!(out, "witness.{k}: {v}");
                }
            }
            if let Some(d) = &w.divergence {
                match (&d.lower, &d.upper) {
                    (Some(lo), Some(hi)) => {
                        let _ = writeln!(out, "witness.divergence: [{}, {}] (~[{}, {}])", lo.exact, hi.exact, lo.approx, hi.approx);
                    }
                    _ => {
                        let _ = writeln!(out, "witness.divergence: infinite");
                    }
                }
            }
        }
        for e in &self.distribution {
            let _ = writeln!(out, "p[{}]: {}", e.outcome, e.probability);
        }
        if let Some(p) = self.precision {
            let _ = writeln!(out, "precision: {p}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        if let Some(ms) = self.elapsed_ms {
            let _ = writeln!(out, "elapsed_ms: {ms}");
        }
        if let Some(p) = &self.program {
            out.push_str("program:\n");
            out.push_str(p);
        }
        out
    }
}

//! Operations shared by the command line and the corpus runner.

use std::path::Path;
use std::time::Instant;

use bpwhile_core::chain::Limits;
use bpwhile_core::divergence::{check_gap_cdp_with, check_gap_rdp_with, check_gap_tcdp_with, GapLimits, GapParams};
use bpwhile_core::dpcheck::{check_approx_with, check_pure_with, DistTable, Mode, NeighborRelation, PrivacyParams};
use bpwhile_core::{desugar, parse, Error, Program, Rational, Result};

use crate::parallel::fill_table;
use crate::record::VerdictRecord;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Yes = 0,
    No = 1,
    Indeterminate = 2,
    Usage = 3,
    Budget = 4,
}

impl Exit {
    pub fn for_error(e: &Error) -> Exit {
        if e.is_budget() {
            Exit::Budget
        } else {
            Exit::Usage
        }
    }

    /// Exit code for a record's decision string.
    pub fn for_decision(decision: &str) -> Exit {
        match decision {
            "private" | "yes" | "terminates" | "ok" => Exit::Yes,
            "not-private" | "no" | "does-not-terminate" => Exit::No,
            _ => Exit::Indeterminate,
        }
    }
}

/// Source syntax: `.bpwx` files may use the integer-block extensions.
pub fn parse_source(text: &str, extended: bool) -> Result<Program> {
    if extended {
        desugar(text)
    } else {
        parse(text)
    }
}

pub fn is_extended(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "bpwx")
}

/// Reads and parses a program; IO failures become parameter errors.
pub fn load_program(path: &Path) -> Result<Program> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Param(format!("cannot read {}: {e}", path.display())))?;
    parse_source(&text, is_extended(path))
}

/// `hamming1`, or `int-adj:<block>` / `int-adj:<block>:<max>` for an integer
/// input block `<block>` whose bits are the inputs `<block>_{w-1} .. <block>_0`.
pub fn parse_neighbor(spec: &str, prog: &Program) -> Result<NeighborRelation> {
    if spec == "hamming1" {
        return Ok(NeighborRelation::Hamming1);
    }
    let Some(rest) = spec.strip_prefix("int-adj:") else {
        return Err(Error::Param(format!("unknown neighbor relation `{spec}`")));
    };
    let (block, max) = match rest.split_once(':') {
        Some((b, m)) => {
            let m = m.parse::<u64>().map_err(|_| Error::Param(format!("bad bound `{m}` in `{spec}`")))?;
            (b, Some(m))
        }
        None => (rest, None),
    };
    let names = prog.input_names();
    let lsb = format!("{block}_0");
    let end = names
        .iter()
        .position(|n| *n == lsb)
        .ok_or_else(|| Error::Param(format!("no input block `{block}`")))?;
    let mut width = 1;
    while width <= end && names[end - width] == format!("{block}_{width}") {
        width += 1;
    }
    Ok(NeighborRelation::IntAdjacent { start: end + 1 - width, width, max })
}

/// The property a `verify` invocation checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Property {
    Pure { e_eps: Rational },
    Approx { e_eps: Rational, delta: Rational },
    Rdp { alpha: Rational, rho: Rational, eta: u32 },
    Cdp { rho: Rational, eta: u32 },
    Tcdp { rho: Rational, omega: Rational, eta: u32 },
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub property: Property,
    pub mode: Mode,
    pub neighbor: NeighborRelation,
    pub limits: Limits,
    pub gap_limits: GapLimits,
    pub jobs: usize,
}

pub fn verify(prog: &Program, opts: &VerifyOptions, command: &str) -> Result<VerdictRecord> {
    let mut table = DistTable::new(prog, &opts.neighbor, opts.mode).with_limits(opts.limits);
    fill_table(&mut table, opts.jobs)?;
    let gap = |alpha: Option<Rational>, rho: &Rational, omega: Option<Rational>, eta: u32| GapParams {
        alpha,
        rho: rho.clone(),
        omega,
        eta,
    };
    Ok(match &opts.property {
        Property::Pure { e_eps } => {
            PrivacyParams::pure(e_eps.clone())?;
            VerdictRecord::from_dp(command, &check_pure_with(&mut table, e_eps)?)
        }
        Property::Approx { e_eps, delta } => {
            let params = PrivacyParams::new(e_eps.clone(), delta.clone())?;
            VerdictRecord::from_dp(command, &check_approx_with(&mut table, &params)?)
        }
        Property::Rdp { alpha, rho, eta } => {
            let p = gap(Some(alpha.clone()), rho, None, *eta);
            VerdictRecord::from_gap(command, &check_gap_rdp_with(&mut table, &p, &opts.gap_limits)?)
        }
        Property::Cdp { rho, eta } => {
            let p = gap(None, rho, None, *eta);
            VerdictRecord::from_gap(command, &check_gap_cdp_with(&mut table, &p, &opts.gap_limits)?)
        }
        Property::Tcdp { rho, omega, eta } => {
            let p = gap(None, rho, Some(omega.clone()), *eta);
            VerdictRecord::from_gap(command, &check_gap_tcdp_with(&mut table, &p, &opts.gap_limits)?)
        }
    })
}

/// Runs `f`, stamping the elapsed time on its record when `timing` is set.
pub fn timed(timing: bool, f: impl FnOnce() -> Result<VerdictRecord>) -> Result<VerdictRecord> {
    let t = Instant::now();
    let mut r = f()?;
    if timing {
        r.elapsed_ms = Some(t.elapsed().as_millis() as u64);
    }
    Ok(r)
}

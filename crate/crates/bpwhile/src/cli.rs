//! Command-line front end.
//!
//! Records go to standard output and diagnostics to standard error. Exit
//! codes: 0 private/yes/terminates, 1 not-private/no, 2 indeterminate,
//! 3 usage or input error, 4 resource budget exceeded.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use bpwhile_core::chain::{build_chain, normalize_chain, zero_recurrent, Limits};
use bpwhile_core::dist::{conditional_distribution, output_distribution_with};
use bpwhile_core::divergence::GapLimits;
use bpwhile_core::dpcheck::Mode;
use bpwhile_core::lang::pretty_print;
use bpwhile_core::params::{parse_dyadic, parse_rational};
use bpwhile_core::qbf::Qbf;
use bpwhile_core::reach::ast_check;
use bpwhile_core::reductions::{amplify, tqbf_to_bpwhile, wrap_approx, wrap_distinguish, wrap_pure};
use bpwhile_core::{BitString, Error, Program, Rational, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::corpus::{self, RunConfig};
use crate::dump::dump_chain;
use crate::ops::{load_program, parse_neighbor, timed, verify, Exit, Property, VerifyOptions};
use crate::record::VerdictRecord;

#[derive(Debug, Parser)]
#[command(name = "bpwhile", version, about = "Exact privacy and termination verifier for BPWhile programs")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Output format for records.
    #[arg(long, value_enum, default_value = "text", global = true)]
    pub format: Format,
    /// Largest number of reachable states per run.
    #[arg(long, default_value_t = 1 << 20, global = true)]
    pub max_states: usize,
    /// Largest working precision (bits) for divergence enclosures.
    #[arg(long, default_value_t = 4096, global = true)]
    pub max_precision: u32,
    /// Largest number of alpha grid points for CDP and tCDP.
    #[arg(long, default_value_t = 1 << 16, global = true)]
    pub max_grid: u64,
    /// Worker threads for per-input distribution solves.
    #[arg(long, default_value_t = 1, global = true)]
    pub jobs: usize,
    /// Omit the elapsed time so records are byte-for-byte reproducible.
    #[arg(long, global = true)]
    pub no_timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a program and print it in canonical form.
    Parse { file: PathBuf },
    /// Exact output distribution on one input.
    Dist {
        file: PathBuf,
        #[arg(long)]
        input: String,
        /// Condition on termination.
        #[arg(long)]
        conditional: bool,
    },
    /// Decide almost-sure termination on every input.
    AstCheck { file: PathBuf },
    /// Check a privacy property.
    Verify(VerifyArgs),
    /// Emit a reduction instance.
    Reduce(ReduceArgs),
    /// Bundled example programs with expected verdicts.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
    /// Dump the reachable chain of one run.
    Chain {
        file: PathBuf,
        #[arg(long)]
        input: String,
        /// Split states so that every edge has probability 1/2.
        #[arg(long)]
        normalize: bool,
        /// Drop edges of states that cannot reach a final state.
        #[arg(long)]
        zero_recurrent: bool,
    },
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("property").required(true).args(["pure", "approx", "rdp", "cdp", "tcdp"])))]
pub struct VerifyArgs {
    pub file: PathBuf,
    /// Pure DP at `--eeps`.
    #[arg(long)]
    pub pure: bool,
    /// Approximate DP at `--eeps` and `--delta`.
    #[arg(long)]
    pub approx: bool,
    /// Gap Rényi DP at `--alpha`, `--rho`, `--eta`.
    #[arg(long)]
    pub rdp: bool,
    /// Gap concentrated DP at `--rho`, `--eta`.
    #[arg(long)]
    pub cdp: bool,
    /// Gap truncated concentrated DP at `--rho`, `--omega`, `--eta`.
    #[arg(long)]
    pub tcdp: bool,
    /// e^ε as a rational `a/b`.
    #[arg(long)]
    pub eeps: Option<String>,
    /// δ as a dyadic `a/2^m` or decimal.
    #[arg(long)]
    pub delta: Option<String>,
    /// Rényi order, a rational above 1.
    #[arg(long)]
    pub alpha: Option<String>,
    /// Divergence budget per unit of order; divergences are in bits.
    #[arg(long)]
    pub rho: Option<String>,
    /// Largest order considered by `--tcdp`.
    #[arg(long)]
    pub omega: Option<String>,
    /// The gap is 2^-eta.
    #[arg(long)]
    pub eta: Option<u32>,
    /// Compare distributions conditioned on termination.
    #[arg(long)]
    pub insensitive: bool,
    /// `hamming1` or `int-adj:<block>[:<max>]`.
    #[arg(long, default_value = "hamming1")]
    pub neighbor: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReduceKind {
    WrapPure,
    WrapApprox,
    Amplify,
    Distinguish,
    Tqbf,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[arg(value_enum)]
    pub kind: ReduceKind,
    /// The program to transform (all kinds but `tqbf`).
    pub file: Option<PathBuf>,
    /// δ for `wrap-approx` and `distinguish`.
    #[arg(long)]
    pub delta: Option<String>,
    /// e^ε for `distinguish`.
    #[arg(long)]
    pub eeps: Option<String>,
    /// Counter exponent for `amplify`.
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    /// Prenex formula such as `A x1 E x2 : x1 | !x2`.
    #[arg(long)]
    pub qbf: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum CorpusAction {
    List,
    Run {
        /// Entry name; all entries when omitted.
        name: Option<String>,
    },
}

/// Output of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn error(e: &Error) -> Self {
        Outcome { code: Exit::for_error(e) as i32, stdout: String::new(), stderr: format!("error: {e}\n") }
    }
}

fn required(v: &Option<String>, flag: &str) -> Result<String> {
    v.clone().ok_or_else(|| Error::Param(format!("missing --{flag}")))
}

fn rat_flag(v: &Option<String>, flag: &str) -> Result<Rational> {
    parse_rational(&required(v, flag)?)
}

fn dyadic_flag(v: &Option<String>, flag: &str) -> Result<Rational> {
    parse_dyadic(&required(v, flag)?)
}

fn eta_flag(v: Option<u32>) -> Result<u32> {
    v.ok_or_else(|| Error::Param(String::from("missing --eta")))
}

impl VerifyArgs {
    fn property(&self) -> Result<Property> {
        Ok(if self.pure {
            Property::Pure { e_eps: rat_flag(&self.eeps, "eeps")? }
        } else if self.approx {
            Property::Approx { e_eps: rat_flag(&self.eeps, "eeps")?, delta: dyadic_flag(&self.delta, "delta")? }
        } else if self.rdp {
            Property::Rdp { alpha: rat_flag(&self.alpha, "alpha")?, rho: rat_flag(&self.rho, "rho")?, eta: eta_flag(self.eta)? }
        } else if self.cdp {
            Property::Cdp { rho: rat_flag(&self.rho, "rho")?, eta: eta_flag(self.eta)? }
        } else {
            Property::Tcdp { rho: rat_flag(&self.rho, "rho")?, omega: rat_flag(&self.omega, "omega")?, eta: eta_flag(self.eta)? }
        })
    }
}

impl Global {
    fn limits(&self) -> Limits {
        Limits { max_states: self.max_states }
    }

    fn gap_limits(&self) -> GapLimits {
        GapLimits { max_precision: self.max_precision, max_grid: self.max_grid }
    }

    fn render(&self, r: &VerdictRecord) -> String {
        match self.format {
            Format::Text => r.to_text(),
            Format::Json => {
                let mut s = r.to_json();
                s.push('\n');
                s
            }
        }
    }

    /// Program text in text mode; a record carrying it in json mode.
    fn render_program(&self, command: &str, p: &Program) -> String {
        let text = pretty_print(p);
        match self.format {
            Format::Text => text,
            Format::Json => {
                let mut r = VerdictRecord::new(command, "ok");
                r.program = Some(text);
                self.render(&r)
            }
        }
    }
}

fn record_outcome(g: &Global, r: Result<VerdictRecord>) -> Outcome {
    match r {
        Ok(r) => Outcome { code: Exit::for_decision(&r.decision) as i32, stdout: g.render(&r), stderr: String::new() },
        Err(e) => Outcome::error(&e),
    }
}

/// Runs one invocation without touching the process streams.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome { code: 0, stdout: text, stderr: String::new() },
                _ => Outcome { code: Exit::Usage as i32, stdout: String::new(), stderr: text },
            };
        }
    };
    let command: String = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect::<Vec<_>>().join(" ");
    dispatch(&cli, &command)
}

fn dispatch(cli: &Cli, command: &str) -> Outcome {
    let g = &cli.global;
    let timing = !g.no_timing;
    match &cli.command {
        Command::Parse { file } => match load_program(file) {
            Ok(p) => Outcome { code: 0, stdout: g.render_program(command, &p), stderr: String::new() },
            Err(e) => Outcome::error(&e),
        },
        Command::Dist { file, input, conditional } => record_outcome(
            g,
            timed(timing, || {
                let p = load_program(file)?;
                let x: BitString = input.parse()?;
                let mut d = output_distribution_with(&p, &x, &g.limits())?;
                if *conditional {
                    d = conditional_distribution(&d, &x)?;
                }
                Ok(VerdictRecord::from_dist(command, &d))
            }),
        ),
        Command::AstCheck { file } => record_outcome(
            g,
            timed(timing, || {
                let p = load_program(file)?;
                Ok(VerdictRecord::from_ast(command, &ast_check(&p, &g.limits())?))
            }),
        ),
        Command::Verify(v) => record_outcome(
            g,
            timed(timing, || {
                let p = load_program(&v.file)?;
                let opts = VerifyOptions {
                    property: v.property()?,
                    mode: if v.insensitive { Mode::Insensitive } else { Mode::Sensitive },
                    neighbor: parse_neighbor(&v.neighbor, &p)?,
                    limits: g.limits(),
                    gap_limits: g.gap_limits(),
                    jobs: g.jobs,
                };
                verify(&p, &opts, command)
            }),
        ),
        Command::Reduce(r) => match reduce(r) {
            Ok((p, note)) => match g.format {
                Format::Text => Outcome {
                    code: 0,
                    stdout: pretty_print(&p),
                    stderr: note.map(|n| format!("{n}\n")).unwrap_or_default(),
                },
                Format::Json => {
                    let mut rec = VerdictRecord::new(command, "ok");
                    rec.program = Some(pretty_print(&p));
                    rec.notes.extend(note);
                    Outcome { code: 0, stdout: g.render(&rec), stderr: String::new() }
                }
            },
            Err(e) => Outcome::error(&e),
        },
        Command::Corpus { action } => corpus_command(g, action),
        Command::Chain { file, input, normalize, zero_recurrent: zero } => {
            let built = load_program(file).and_then(|p| {
                let x: BitString = input.parse()?;
                build_chain(&p, &x, &g.limits())
            });
            match built {
                Ok(mut c) => {
                    if *zero {
                        c = zero_recurrent(c);
                    }
                    if *normalize {
                        c = normalize_chain(&c);
                    }
                    Outcome { code: 0, stdout: dump_chain(&c), stderr: String::new() }
                }
                Err(e) => Outcome::error(&e),
            }
        }
    }
}

fn reduce(r: &ReduceArgs) -> Result<(Program, Option<String>)> {
    let prog = || -> Result<Program> {
        let f = r.file.as_ref().ok_or_else(|| Error::Param(String::from("this reduction needs a program file")))?;
        load_program(f)
    };
    Ok(match r.kind {
        ReduceKind::WrapPure => (wrap_pure(&prog()?)?, None),
        ReduceKind::WrapApprox => (wrap_approx(&prog()?, &dyadic_flag(&r.delta, "delta")?)?, None),
        ReduceKind::Amplify => (amplify(&prog()?, r.m)?, None),
        ReduceKind::Distinguish => {
            let (p, m) = wrap_distinguish(&prog()?, &rat_flag(&r.eeps, "eeps")?, &rat_flag(&r.delta, "delta")?)?;
            (p, Some(format!("repetitions: {m}")))
        }
        ReduceKind::Tqbf => {
            let f = Qbf::parse(&required(&r.qbf, "qbf")?)?;
            (tqbf_to_bpwhile(&f)?, Some(format!("truth: {}", f.eval())))
        }
    })
}

fn corpus_command(g: &Global, action: &CorpusAction) -> Outcome {
    match action {
        CorpusAction::List => {
            let mut out = String::new();
            for e in corpus::entries() {
                out.push_str(&format!("{:<32} {}\n", e.name, e.description));
            }
            Outcome { code: 0, stdout: out, stderr: String::new() }
        }
        CorpusAction::Run { name } => {
            let selected = match name {
                Some(n) => match corpus::entry(n) {
                    Some(e) => vec![e],
                    None => return Outcome::error(&Error::Param(format!("unknown corpus entry `{n}`"))),
                },
                None => corpus::entries(),
            };
            let cfg = RunConfig { limits: g.limits(), gap_limits: g.gap_limits(), jobs: g.jobs };
            let results: Vec<_> = selected.iter().flat_map(|e| corpus::run_entry(e, &cfg)).collect();
            let all = results.iter().all(|r| r.passed);
            let stdout = match g.format {
                Format::Text => results
                    .iter()
                    .map(|r| format!("{} {}: {} ({})\n", if r.passed { "PASS" } else { "FAIL" }, r.entry, r.check, r.detail))
                    .collect(),
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&results).expect("results serialize");
                    s.push('\n');
                    s
                }
            };
            Outcome { code: if all { 0 } else { 1 }, stdout, stderr: String::new() }
        }
    }
}

/// Entry point for the binary: runs and writes the streams.
pub fn main_with(args: impl IntoIterator<Item = OsString>) -> i32 {
    let o = run(args);
    let _ = std::io::stdout().write_all(o.stdout.as_bytes());
    let _ = std::io::stderr().write_all(o.stderr.as_bytes());
    o.code
}

use std::path::PathBuf;
use std::process::Command;

use bpwhile::cli::run;
use bpwhile::corpus;
use bpwhile::record::VerdictRecord;
use bpwhile_core::dist::{output_distribution, Outcome};
use bpwhile_core::params::parse_rational;
use bpwhile_core::{parse, Rational};

struct Files {
    dir: tempfile::TempDir,
}

impl Files {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        for name in ["rr.bpw", "id.bpw", "loop.bpw", "geo.bpw", "c-half.bpw", "geometric-n2.bpwx", "lossy-rr.bpw"] {
            std::fs::write(dir.path().join(name), corpus::source(name).unwrap()).unwrap();
        }
        Files { dir }
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_string_lossy().into_owned()
    }

    fn write(&self, name: &str, text: &str) -> String {
        std::fs::write(self.dir.path().join(name), text).unwrap();
        self.path(name)
    }
}

fn cli(args: &[&str]) -> bpwhile::cli::Outcome {
    run(std::iter::once("bpwhile").chain(args.iter().copied()))
}

fn json(args: &[&str]) -> (i32, VerdictRecord) {
    let mut all = vec!["--format", "json", "--no-timing"];
    all.extend_from_slice(args);
    let o = cli(&all);
    assert!(o.stderr.is_empty(), "{}", o.stderr);
    (o.code, VerdictRecord::from_json(&o.stdout).unwrap())
}

#[test]
fn randomized_response_is_private_at_three() {
    let f = Files::new();
    let (code, r) = json(&["verify", &f.path("rr.bpw"), "--pure", "--eeps", "3/1"]);
    assert_eq!(code, 0);
    assert_eq!(r.decision, "private");
    assert!(r.witness.is_none());
}

#[test]
fn identity_is_not_private_and_witness_revalidates() {
    let f = Files::new();
    let (code, r) = json(&["verify", &f.path("id.bpw"), "--pure", "--eeps", "10/1"]);
    assert_eq!(code, 1);
    assert_eq!(r.decision, "not-private");
    let w = r.witness.unwrap();
    let p = parse(corpus::source("id.bpw").unwrap()).unwrap();
    let px = output_distribution(&p, &w.x.unwrap().parse().unwrap()).unwrap();
    let py = output_distribution(&p, &w.x_prime.unwrap().parse().unwrap()).unwrap();
    let o: Outcome = Outcome::Bits(w.outcomes[0].parse().unwrap());
    assert_eq!(w.lhs.unwrap().parse().unwrap(), px.get(&o));
    assert_eq!(w.rhs.unwrap().parse().unwrap(), py.get(&o) * Rational::from_integer(10.into()));
}

#[test]
fn loop_fails_termination_with_state_witness() {
    let f = Files::new();
    let (code, r) = json(&["ast-check", &f.path("loop.bpw")]);
    assert_eq!(code, 1);
    assert_eq!(r.decision, "does-not-terminate");
    let w = r.witness.unwrap();
    assert_eq!(w.x.as_deref(), Some("0"));
    assert!(w.state.unwrap().starts_with("1:"));
}

#[test]
fn dist_prints_exact_fractions() {
    let f = Files::new();
    let (code, r) = json(&["dist", &f.path("rr.bpw"), "--input", "0"]);
    assert_eq!(code, 0);
    let get = |o: &str| r.distribution.iter().find(|e| e.outcome == o).unwrap().probability.clone();
    assert_eq!(get("0").exact, "3/4");
    assert_eq!(get("1").exact, "1/4");
    assert_eq!(get("⊥").exact, "0/1");
    assert!((get("0").approx - 0.75).abs() < 1e-12);
    let text = cli(&["dist", &f.path("c-half.bpw"), "--input", "1", "--conditional"]).stdout;
    assert!(text.contains("p[1]: 1/1"), "{text}");
}

#[test]
fn approx_and_gap_verdicts() {
    let f = Files::new();
    let rr = f.path("rr.bpw");
    assert_eq!(json(&["verify", &rr, "--approx", "--eeps", "2/1", "--delta", "1/2^2"]).0, 0);
    assert_eq!(json(&["verify", &rr, "--approx", "--eeps", "2/1", "--delta", "0.125"]).0, 1);
    let (code, r) = json(&["verify", &rr, "--rdp", "--alpha", "2", "--rho", "1/2", "--eta", "8"]);
    assert_eq!(code, 1);
    let w = r.witness.unwrap();
    assert_eq!(w.alpha.unwrap().exact, "2/1");
    let d = w.divergence.unwrap();
    let lo = d.lower.unwrap().parse().unwrap();
    assert!(lo >= parse_rational("1/1").unwrap());
    assert!(r.precision.unwrap() >= 64);
    assert_eq!(json(&["verify", &rr, "--cdp", "--rho", "1", "--eta", "4"]).0, 0);
    assert_eq!(json(&["verify", &rr, "--tcdp", "--rho", "1", "--omega", "2", "--eta", "4"]).0, 0);
}

#[test]
fn insensitive_mode_and_neighbors() {
    let f = Files::new();
    let lossy = f.path("lossy-rr.bpw");
    assert_eq!(json(&["verify", &lossy, "--pure", "--eeps", "3"]).0, 1);
    assert_eq!(json(&["verify", &lossy, "--pure", "--eeps", "3", "--insensitive"]).0, 0);
    let geo = f.path("geometric-n2.bpwx");
    assert_eq!(json(&["verify", &geo, "--pure", "--eeps", "5/4", "--neighbor", "int-adj:c:2"]).0, 0);
    assert_eq!(json(&["verify", &geo, "--pure", "--eeps", "1310719/1048576", "--neighbor", "int-adj:c:2"]).0, 1);
    let never = f.write("never.bpw", "input(x); if x then while true then skip else skip; return(x)");
    let o = cli(&["verify", &never, "--pure", "--eeps", "2", "--insensitive"]);
    assert_eq!(o.code, 3);
    assert!(o.stderr.contains("never terminates"), "{}", o.stderr);
}

#[test]
fn usage_errors_exit_three() {
    let f = Files::new();
    let rr = f.path("rr.bpw");
    assert_eq!(cli(&["verify", &rr, "--pure"]).code, 3);
    assert_eq!(cli(&["verify", &rr, "--eeps", "3"]).code, 3);
    assert_eq!(cli(&["verify", &rr, "--approx", "--eeps", "2", "--delta", "1/3"]).code, 3);
    assert_eq!(cli(&["frobnicate"]).code, 3);
    assert_eq!(cli(&["parse", &f.path("missing.bpw")]).code, 3);
    let bad = f.write("bad.bpw", "input(x); x := ; return(x)");
    let o = cli(&["parse", &bad]);
    assert_eq!(o.code, 3);
    assert!(o.stderr.contains("1:"), "{}", o.stderr);
    assert_eq!(cli(&["--help"]).code, 0);
}

#[test]
fn budgets_exit_four() {
    let f = Files::new();
    let geo = f.path("geometric-n2.bpwx");
    let o = cli(&["--max-states", "10", "ast-check", &geo]);
    assert_eq!(o.code, 4, "{}", o.stderr);
    let rr = f.path("rr.bpw");
    let o = cli(&["--max-grid", "4", "verify", &rr, "--cdp", "--rho", "1", "--eta", "4"]);
    assert_eq!(o.code, 4, "{}", o.stderr);
}

#[test]
fn records_are_deterministic_across_workers() {
    let f = Files::new();
    let geo = f.path("geometric-n2.bpwx");
    let args = ["verify", geo.as_str(), "--pure", "--eeps", "1310719/1048576", "--neighbor", "int-adj:c:2"];
    let one = cli(&[&["--no-timing", "--jobs", "1"], &args[..]].concat());
    let four = cli(&[&["--no-timing", "--jobs", "4"], &args[..]].concat());
    assert_eq!(one.code, four.code);
    assert_eq!(one.stdout.replace("--jobs 1", ""), four.stdout.replace("--jobs 4", ""));
    let again = cli(&[&["--no-timing", "--jobs", "1"], &args[..]].concat());
    assert_eq!(one, again);
}

#[test]
fn parse_prints_canonical_form() {
    let f = Files::new();
    let o = cli(&["parse", &f.path("rr.bpw")]);
    assert_eq!(o.code, 0);
    let back = parse(&o.stdout).unwrap();
    assert_eq!(bpwhile_core::lang::pretty_print(&back), o.stdout);
    assert!(o.stdout.contains("\n    r := !x;\n"), "{}", o.stdout);
}

#[test]
fn reductions_emit_reparseable_programs() {
    let f = Files::new();
    let half = f.path("c-half.bpw");
    for args in [
        vec!["reduce", "wrap-pure", half.as_str()],
        vec!["reduce", "wrap-approx", half.as_str(), "--delta", "1/4"],
        vec!["reduce", "amplify", half.as_str(), "--m", "2"],
        vec!["reduce", "tqbf", "--qbf", "A x1 E x2 : x1 | x2"],
    ] {
        let o = cli(&args);
        assert_eq!(o.code, 0, "{args:?}: {}", o.stderr);
        parse(&o.stdout).unwrap();
    }
    let o = cli(&["reduce", "distinguish", &half, "--eeps", "2", "--delta", "1/2"]);
    assert_eq!(o.stderr, "repetitions: 3\n");
    let (code, r) = json(&["reduce", "tqbf", "--qbf", "A x1 : x1"]);
    assert_eq!(code, 0);
    assert_eq!(r.notes, vec!["truth: false"]);
    assert_eq!(cli(&["reduce", "wrap-pure"]).code, 3);
}

#[test]
fn chain_dump_format() {
    let f = Files::new();
    let coin = f.write("coin.bpw", "input(x); y := random; return(y)");
    let o = cli(&["chain", &coin, "--input", "0"]);
    assert_eq!(o.code, 0);
    let mut lines = o.stdout.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("n 1 v 2 l 1 states "), "{header}");
    for l in lines {
        let parts: Vec<&str> = l.split(' ').collect();
        assert_eq!(parts.len(), 3, "{l}");
        assert!(parts[0].contains(':') && parts[1].contains(':'));
        assert!(parse_rational(parts[2]).is_ok());
    }
    let n = cli(&["chain", &coin, "--input", "0", "--normalize"]).stdout;
    for l in n.lines().skip(1) {
        let parts: Vec<&str> = l.split(' ').collect();
        let self_loop = parts[0] == parts[1] && parts[2] == "1/1";
        assert!(self_loop || parts[2] == "1/2", "{n}");
    }
}

#[test]
fn corpus_list_and_run() {
    let o = cli(&["corpus", "list"]);
    assert_eq!(o.code, 0);
    for name in ["geometric-n2", "randomized-response", "tqbf-samples"] {
        assert!(o.stdout.contains(name));
        let r = cli(&["corpus", "run", name]);
        assert_eq!(r.code, 0, "{}", r.stdout);
        assert!(r.stdout.lines().all(|l| l.starts_with("PASS ")), "{}", r.stdout);
    }
    assert_eq!(cli(&["corpus", "run", "no-such-entry"]).code, 3);
    let all = cli(&["--format", "json", "corpus", "run"]);
    assert_eq!(all.code, 0);
    let v: serde_json::Value = serde_json::from_str(&all.stdout).unwrap();
    assert!(v.as_array().unwrap().len() >= 30);
}

#[test]
fn binary_exit_codes() {
    let f = Files::new();
    let bin = PathBuf::from(env!("CARGO_BIN_EXE_bpwhile"));
    let status = |args: &[&str]| Command::new(&bin).args(args).output().unwrap();
    let ok = status(&["verify", &f.path("rr.bpw"), "--pure", "--eeps", "3/1"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("decision: private"));
    assert_eq!(status(&["ast-check", &f.path("loop.bpw")]).status.code(), Some(1));
    let bad = status(&["verify", &f.path("rr.bpw")]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(!bad.stderr.is_empty());
}

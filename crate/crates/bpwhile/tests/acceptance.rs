//! End-to-end acceptance criteria. Runs without the libtest harness so that
//! every criterion prints exactly one PASS/FAIL line; exits non-zero if any
//! criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use bpwhile::corpus;
use bpwhile::ops::parse_neighbor;
use bpwhile_core::chain::Limits;
use bpwhile_core::dist::{output_distribution, Dist, Outcome};
use bpwhile_core::divergence::{alpha_grid, cdp_to_approx_eeps, rdp_to_approx_eeps, renyi_divergence, renyi_sum_exact, Divergence};
use bpwhile_core::dpcheck::{check_approx_dp, check_pure_dp, Mode, NeighborRelation, PrivacyParams};
use bpwhile_core::qbf::{Formula, Quantifier};
use bpwhile_core::random::{random_program_seeded, random_qbf_seeded};
use bpwhile_core::reach::ast_check;
use bpwhile_core::reductions::{amplify, c_half, geometric, tqbf_to_bpwhile, wrap_approx, wrap_pure};
use bpwhile_core::{parse, BitString, Program, Rational};
use num_bigint::BigInt;
use num_traits::{One, Pow, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn pow2(k: u32) -> Rational {
    Rational::from_integer(BigInt::one() << k as usize)
}

fn inputs(p: &Program) -> Vec<BitString> {
    BitString::all(p.n_inputs()).collect()
}

/// Ordered neighbor pairs by direct enumeration of the input space.
fn related_pairs(n: usize, nb: &NeighborRelation) -> Vec<(BitString, BitString)> {
    let all: Vec<BitString> = BitString::all(n).collect();
    let mut out = Vec::new();
    for x in &all {
        for y in &all {
            if x != y && nb.in_domain(x) && nb.in_domain(y) && nb.related(x, y) {
                out.push((x.clone(), y.clone()));
            }
        }
    }
    out
}

fn corpus_programs() -> Vec<(String, Program)> {
    let mut out = Vec::new();
    for e in corpus::entries() {
        for (i, p) in e.programs().unwrap().into_iter().enumerate() {
            out.push((format!("{}#{i}", e.name), p));
        }
    }
    out
}

fn random_programs(count: u64, base: u64) -> Vec<(String, Program)> {
    (0..count).map(|i| (format!("seed {}", base + i), random_program_seeded(base + i))).collect()
}

/// Every outcome subset `S`: is `P(S) > e_eps Q(S) + δ` anywhere?
fn subset_violation(p: &Dist, q: &Dist, e_eps: &Rational, delta: &Rational) -> bool {
    let mut space: Vec<Outcome> = p.support().chain(q.support()).cloned().collect();
    space.sort();
    space.dedup();
    assert!(space.len() <= 9, "outcome space too large for brute force");
    (0u32..1 << space.len()).any(|mask| {
        let (mut lhs, mut rhs) = (Rational::zero(), Rational::zero());
        for (i, o) in space.iter().enumerate() {
            if mask >> i & 1 == 1 {
                lhs += p.get(o);
                rhs += q.get(o);
            }
        }
        lhs > e_eps * rhs + delta
    })
}

/// `[lo, hi]` around `log₂ y` for `y ≥ 1`, by repeated squaring on
/// fixed-point bounds. Stops after `digits` fractional bits or when the
/// bounds no longer agree on a digit.
fn log2_oracle(y: &Rational, digits: u32) -> (Rational, Rational) {
    const P: usize = 512;
    let scale = BigInt::one() << P;
    let mut int_part = 0i64;
    let mut y = y.clone();
    while y >= rat(2, 1) {
        y /= rat(2, 1);
        int_part += 1;
    }
    let (mut lo, mut hi) = ((y.numer() << P) / y.denom(), (y.numer() << P) / y.denom() + 1u32);
    let two = &scale << 1usize;
    let mut frac = Rational::zero();
    let mut known = 0;
    for k in 1..=digits {
        lo = (&lo * &lo) >> P;
        hi = ((&hi * &hi) >> P) + 1u32;
        match (lo >= two, hi >= two) {
            (true, true) => {
                frac += Rational::new(BigInt::one(), BigInt::one() << k as usize);
                lo >>= 1usize;
                hi = (hi >> 1usize) + 1u32;
            }
            (false, false) => {}
            _ => break,
        }
        known = k;
    }
    let base = Rational::from_integer(BigInt::from(int_part)) + frac;
    let width = Rational::new(BigInt::one(), BigInt::one() << known as usize);
    (base.clone(), base + width)
}

/// Two distributions over the same `k` outcomes; with `full`, every outcome
/// has positive mass in both.
fn random_pair(rng: &mut ChaCha8Rng, full: bool) -> (Dist, Dist) {
    let k = rng.gen_range(2..6);
    (random_dist(rng, k, full), random_dist(rng, k, full))
}

/// `Σ_o p_o^α q_o^{1-α}` over the support of `p`, or `None` when `p` puts
/// mass where `q` has none.
fn renyi_sum_oracle(p: &Dist, q: &Dist, alpha: u32) -> Option<Rational> {
    let mut s = Rational::zero();
    for (o, pm) in p.iter() {
        if pm.is_zero() {
            continue;
        }
        let qm = q.get(o);
        if qm.is_zero() {
            return None;
        }
        s += Pow::pow(pm, alpha) / Pow::pow(&qm, alpha - 1);
    }
    Some(s)
}

fn random_dist(rng: &mut ChaCha8Rng, k: usize, full: bool) -> Dist {
    let lo = if full { 1 } else { 0 };
    let mut w: Vec<i64> = (0..k).map(|_| rng.gen_range(lo..20)).collect();
    if w.iter().all(|&x| x == 0) {
        w[0] = 1;
    }
    let total: i64 = w.iter().sum();
    Dist::from_entries(
        w.iter()
            .enumerate()
            .filter(|(_, &x)| x > 0)
            .map(|(i, &x)| (Outcome::Bits(BitString::from_u64(i as u64, 3)), rat(x, total))),
    )
}

fn rr_dists() -> (Dist, Dist) {
    let p = parse(corpus::source("rr.bpw").unwrap()).unwrap();
    let zero = BitString::from_u64(0, 1);
    let one = BitString::from_u64(1, 1);
    (output_distribution(&p, &zero).unwrap(), output_distribution(&p, &one).unwrap())
}

/// Independent QBF evaluation over all assignments, innermost first.
fn qbf_brute_force(prefix: &[Quantifier], matrix: &Formula) -> bool {
    fn eval(f: &Formula, a: u64) -> bool {
        match f {
            Formula::Var(i) => a >> i & 1 == 1,
            Formula::Not(x) => !eval(x, a),
            Formula::And(x, y) => eval(x, a) && eval(y, a),
            Formula::Or(x, y) => eval(x, a) || eval(y, a),
        }
    }
    let n = prefix.len();
    let mut level: Vec<bool> = (0..1u64 << n).map(|a| eval(matrix, a)).collect();
    for i in (0..n).rev() {
        let bit = 1u64 << i;
        level = (0..1u64 << i)
            .map(|a| {
                let (f, t) = (level[a as usize], level[(a | bit) as usize]);
                match prefix[i] {
                    Quantifier::ForAll => f && t,
                    Quantifier::Exists => f || t,
                }
            })
            .collect();
    }
    level[0]
}

fn geometric_boundary() -> String {
    let prog = geometric(2, 2).unwrap();
    let nb = parse_neighbor("int-adj:c:2", &prog).unwrap();
    let mut max_ratio = Rational::zero();
    for (x, y) in related_pairs(prog.n_inputs(), &nb) {
        let (p, q) = (output_distribution(&prog, &x).unwrap(), output_distribution(&prog, &y).unwrap());
        for (o, pm) in p.iter() {
            if pm.is_zero() {
                continue;
            }
            let qm = q.get(o);
            assert!(!qm.is_zero(), "outcome {o} of {x} missing under {y}");
            max_ratio = max_ratio.max(pm / qm);
        }
    }
    assert_eq!(max_ratio, rat(5, 4), "largest neighbor ratio");
    let at = check_pure_dp(&prog, &rat(5, 4), &nb, Mode::Sensitive).unwrap();
    assert!(at.is_private());
    let below = rat(5, 4) - Rational::new(BigInt::one(), BigInt::one() << 20usize);
    let v = check_pure_dp(&prog, &below, &nb, Mode::Sensitive).unwrap();
    assert!(!v.is_private());
    let w = v.witness.unwrap();
    assert!(w.lhs > w.rhs);
    format!("max ratio {max_ratio}, witness {} vs {}", w.x, w.x_prime)
}

fn mass_conservation() -> String {
    let mut progs = corpus_programs();
    progs.extend(random_programs(200, 0));
    let mut runs = 0;
    for (name, p) in &progs {
        for x in inputs(p) {
            let d = output_distribution(p, &x).unwrap();
            assert_eq!(d.total(), Rational::one(), "{name} on {x}");
            assert!(d.iter().all(|(_, m)| *m >= Rational::zero()), "{name} on {x}");
            runs += 1;
        }
    }
    format!("{} programs, {runs} inputs", progs.len())
}

fn termination_matches_bottom() -> String {
    let mut progs = corpus_programs();
    progs.extend(random_programs(200, 0));
    let (mut yes, mut no) = (0, 0);
    for (name, p) in &progs {
        let v = ast_check(p, &Limits::default()).unwrap();
        let zero_bottom = inputs(p).iter().all(|x| output_distribution(p, x).unwrap().bottom().is_zero());
        assert_eq!(v.terminates(), zero_bottom, "{name}");
        if let Some((x, _)) = &v.witness {
            assert!(!output_distribution(p, x).unwrap().bottom().is_zero(), "{name}: witness input {x}");
        }
        if v.terminates() {
            yes += 1;
        } else {
            no += 1;
        }
    }
    format!("{yes} terminating, {no} not")
}

fn pointwise_vs_subsets() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut private, mut not) = (0, 0);
    for (name, p) in random_programs(50, 10_000) {
        assert!(p.n_outputs() <= 3);
        let dists: Vec<Dist> = inputs(&p).iter().map(|x| output_distribution(&p, x).unwrap()).collect();
        let pairs = related_pairs(p.n_inputs(), &NeighborRelation::Hamming1);
        for _ in 0..5 {
            let e_eps = rat(4 + rng.gen_range(0..13), 4);
            let delta = rat(rng.gen_range(0..8), 16);
            let params = PrivacyParams::new(e_eps.clone(), delta.clone()).unwrap();
            let v = check_approx_dp(&p, &params, &NeighborRelation::Hamming1, Mode::Sensitive).unwrap();
            let brute = pairs.iter().any(|(x, y)| {
                subset_violation(&dists[x.to_u64() as usize], &dists[y.to_u64() as usize], &e_eps, &delta)
            });
            assert_eq!(v.is_private(), !brute, "{name} at ({e_eps}, {delta})");
            if let Some(w) = v.witness {
                let (px, py) = (&dists[w.x.to_u64() as usize], &dists[w.x_prime.to_u64() as usize]);
                let lhs: Rational = w.outcomes.iter().map(|o| px.get(o)).sum();
                let rhs: Rational = &e_eps * w.outcomes.iter().map(|o| py.get(o)).sum::<Rational>() + &delta;
                assert_eq!((&lhs, &rhs), (&w.lhs, &w.rhs), "{name}: witness sums");
                assert!(lhs > rhs);
                not += 1;
            } else {
                private += 1;
            }
        }
    }
    format!("{private} private, {not} not private")
}

fn randomized_response() -> String {
    let p = parse(corpus::source("rr.bpw").unwrap()).unwrap();
    let nb = NeighborRelation::Hamming1;
    assert!(check_pure_dp(&p, &rat(3, 1), &nb, Mode::Sensitive).unwrap().is_private());
    let below = rat(3, 1) - Rational::new(BigInt::one(), BigInt::one() << 20usize);
    let v = check_pure_dp(&p, &below, &nb, Mode::Sensitive).unwrap();
    let w = v.witness.expect("witness");
    let got = (w.x.to_string(), w.x_prime.to_string(), w.outcomes.iter().map(|o| o.to_string()).collect::<Vec<_>>());
    assert_eq!(got, ("0".into(), "1".into(), vec!["0".into()]));
    assert_eq!((w.lhs.clone(), w.rhs.clone()), (rat(3, 4), &below * rat(1, 4)));
    format!("witness ({}, {}, {})", got.0, got.1, got.2[0])
}

fn renyi_enclosure() -> String {
    let (p, q) = rr_dists();
    let d = renyi_divergence(&p, &q, &rat(2, 1), 64).unwrap();
    let iv = d.interval().expect("finite divergence").clone();
    let (lo, hi) = log2_oracle(&rat(7, 3), 120);
    assert!(iv.lower() <= lo && hi <= iv.upper(), "[{}, {}] vs oracle [{lo}, {hi}]", iv.lower(), iv.upper());
    assert!(iv.width() <= Rational::new(BigInt::one(), BigInt::one() << 40usize));

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let (a, b) = random_pair(&mut rng, false);
        let alpha = rng.gen_range(2..6);
        assert_eq!(renyi_sum_exact(&a, &b, alpha), renyi_sum_oracle(&a, &b, alpha), "α = {alpha}");
    }
    format!("width 2^-{}", log2_oracle(&(Rational::one() / iv.width()), 0).0)
}

fn monotone_in_alpha() -> String {
    const BITS: u32 = 64;
    let slack = rat(2, 1) / pow2(BITS);
    let grid = alpha_grid(&rat(1, 2), 2, &rat(6, 1), 1 << 16).unwrap();
    assert!(grid.windows(2).all(|w| w[0] < w[1]));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let (a, b) = random_pair(&mut rng, true);
        let enc: Vec<_> = grid
            .iter()
            .map(|alpha| match renyi_divergence(&a, &b, alpha, BITS).unwrap() {
                Divergence::Finite(iv) => iv,
                Divergence::Infinite => panic!("full support pair diverges"),
            })
            .collect();
        for (i, w) in enc.windows(2).enumerate() {
            assert!(w[0].upper() <= w[1].lower() + &slack, "α {} -> {}: {} vs {}", grid[i], grid[i + 1], w[0], w[1]);
        }
        assert!(enc[0].lower() >= -slack.clone());
    }
    format!("{} grid points", grid.len())
}

fn wrappers_and_amplify() -> String {
    let limits = Limits::default();
    let nb = NeighborRelation::Hamming1;
    let quarter = rat(1, 4);
    let mut diverging = 0;
    for (name, c) in random_programs(50, 20_000) {
        let terminates = ast_check(&c, &limits).unwrap().terminates();
        diverging += usize::from(!terminates);
        let pure = check_pure_dp(&wrap_pure(&c).unwrap(), &Rational::one(), &nb, Mode::Sensitive).unwrap();
        assert_eq!(pure.is_private(), terminates, "{name}: wrap-pure");
        let params = PrivacyParams::new(Rational::one(), quarter.clone()).unwrap();
        let approx = check_approx_dp(&wrap_approx(&c, &quarter).unwrap(), &params, &nb, Mode::Sensitive).unwrap();
        assert_eq!(approx.is_private(), terminates, "{name}: wrap-approx");
    }
    assert!(diverging > 0, "sample has no diverging program");
    let amp = amplify(&c_half(), 1).unwrap();
    let halt = Rational::one() - output_distribution(&amp, &BitString::from_u64(0, amp.n_inputs())).unwrap().bottom();
    assert!(halt < rat(1, 2) && halt <= rat(3, 7), "halting probability {halt}");
    format!("{diverging}/50 diverging, amplified halt {halt}")
}

fn tqbf_matches() -> String {
    let mut truths = 0;
    for seed in 0..30 {
        let f = random_qbf_seeded(seed, 3);
        assert!(f.prefix.len() <= 3);
        let quants: Vec<Quantifier> = f.prefix.iter().map(|(q, _)| *q).collect();
        let truth = qbf_brute_force(&quants, &f.matrix);
        let prog = tqbf_to_bpwhile(&f).unwrap();
        assert_eq!(ast_check(&prog, &Limits::default()).unwrap().terminates(), truth, "`{f}`");
        truths += usize::from(truth);
    }
    format!("{truths}/30 true")
}

fn gap_to_approx() -> String {
    let cfg = corpus::RunConfig::default();
    let quarter = rat(1, 4);
    let mut checked = 0;
    for e in corpus::entries() {
        let results = corpus::run_entry(&e, &cfg);
        for (c, r) in e.check.iter().zip(&results) {
            let yes = r.record.as_ref().is_some_and(|rec| rec.decision == "yes");
            let e_eps = match (c.kind.as_str(), yes) {
                ("rdp", true) => {
                    let alpha = bpwhile_core::params::parse_rational(c.alpha.as_deref().unwrap()).unwrap();
                    let rho = bpwhile_core::params::parse_rational(c.rho.as_deref().unwrap()).unwrap();
                    rdp_to_approx_eeps(&alpha, &rho, &quarter, 64)
                }
                ("cdp", true) => {
                    let rho = bpwhile_core::params::parse_rational(c.rho.as_deref().unwrap()).unwrap();
                    cdp_to_approx_eeps(&rho, &quarter, 64)
                }
                _ => continue,
            };
            let prog = &e.programs().unwrap()[0];
            let nb = parse_neighbor(e.neighbor.as_deref().unwrap_or("hamming1"), prog).unwrap();
            let mode = if c.mode.as_deref() == Some("insensitive") { Mode::Insensitive } else { Mode::Sensitive };
            let params = PrivacyParams::new(e_eps.clone(), quarter.clone()).unwrap();
            let v = check_approx_dp(prog, &params, &nb, mode).unwrap();
            assert!(v.is_private(), "{} [{}] at e^eps {e_eps}", e.name, r.check);
            checked += 1;
        }
    }
    assert!(checked > 0, "no gap yes-verdicts in the corpus");
    format!("{checked} yes-verdicts converted")
}

/// A description and a check returning a one-line summary; panics on failure.
type Criterion = (&'static str, fn() -> String);

fn main() {
    let criteria: [Criterion; 10] = [
        ("geometric mechanism: accept at 5/4, reject just below", geometric_boundary),
        ("output mass is exactly 1", mass_conservation),
        ("termination iff no bottom mass", termination_matches_bottom),
        ("pointwise approximate DP check equals subset brute force", pointwise_vs_subsets),
        ("randomized response: accept at 3, reject just below", randomized_response),
        ("Renyi divergence enclosure and integer-order sums", renyi_enclosure),
        ("Renyi divergence monotone in the order", monotone_in_alpha),
        ("privacy wrappers track termination; amplification", wrappers_and_amplify),
        ("QBF compilation terminates iff the formula is true", tqbf_matches),
        ("gap yes-verdicts imply approximate DP", gap_to_approx),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run));
        let ms = t.elapsed().as_millis();
        match result {
            Ok(detail) => println!("criterion {:>2}: PASS  {name} ({detail}; {ms} ms)", i + 1),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("criterion {:>2}: FAIL  {name}: {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Randomized invariants over generated programs and distributions.

use std::collections::BTreeMap;

use bpwhile_core::chain::{build_chain, normalize_chain, zero_recurrent, EdgeOracle, Limits};
use bpwhile_core::dist::{chain_distribution, hitting_probabilities, output_distribution, Dist, Outcome};
use bpwhile_core::divergence::{renyi_divergence, renyi_sum_exact, Divergence};
use bpwhile_core::dpcheck::{check_approx_dp, check_pure_dp, Mode, NeighborRelation, PrivacyParams};
use bpwhile_core::lang::{parse, pretty_print, run_with_coins, Cmd, Prob, RunOutcome, Stmt};
use bpwhile_core::random::random_program_seeded;
use bpwhile_core::{BitString, Program, Rational};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn inputs(p: &Program) -> Vec<BitString> {
    BitString::all(p.n_inputs()).collect()
}

fn has_loop(body: &[Stmt]) -> bool {
    body.iter().any(|s| match &s.cmd {
        Cmd::While(..) => true,
        Cmd::If(_, t, e) => has_loop(t) || has_loop(e),
        _ => false,
    })
}

/// Output masses by exhaustive enumeration of coin sequences up to
/// `max_coins` long. Exact for programs that never use more coins.
fn enumerate_coins(p: &Program, input: &BitString, max_coins: usize) -> BTreeMap<BitString, Rational> {
    let mut acc = BTreeMap::new();
    let mut stack = vec![Vec::<bool>::new()];
    while let Some(prefix) = stack.pop() {
        let mut i = 0;
        let mut supply = || {
            let c = prefix.get(i).copied();
            i += 1;
            c
        };
        match run_with_coins(p, input, &mut supply, 10_000).unwrap() {
            RunOutcome::Done(out) => {
                let w = Rational::new(BigInt::one(), BigInt::one() << prefix.len());
                *acc.entry(out).or_insert_with(Rational::zero) += w;
            }
            RunOutcome::OutOfCoins if prefix.len() < max_coins => {
                for b in [false, true] {
                    let mut next = prefix.clone();
                    next.push(b);
                    stack.push(next);
                }
            }
            RunOutcome::OutOfCoins | RunOutcome::Timeout => {}
        }
    }
    acc
}

/// Every outcome subset, for outcome spaces of at most 2^3 + 1 points.
fn subset_violation(p: &Dist, q: &Dist, e_eps: &Rational, delta: &Rational) -> bool {
    let mut space: Vec<Outcome> = p.support().chain(q.support()).cloned().collect();
    space.sort();
    space.dedup();
    assert!(space.len() <= 9);
    (0u32..1 << space.len()).any(|mask| {
        let pick = space.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1);
        let (mut lhs, mut rhs) = (Rational::zero(), Rational::zero());
        for (_, o) in pick {
            lhs += p.get(o);
            rhs += q.get(o);
        }
        lhs > e_eps * rhs + delta
    })
}

fn dist_pair_strategy(full: bool) -> impl Strategy<Value = (Dist, Dist)> {
    let weights = if full { 1u32..20 } else { 0u32..20 };
    (2usize..6)
        .prop_flat_map(move |k| (prop::collection::vec(weights.clone(), k), prop::collection::vec(weights.clone(), k)))
        .prop_filter("non-empty", |(a, b)| a.iter().sum::<u32>() > 0 && b.iter().sum::<u32>() > 0)
        .prop_map(|(a, b)| (normalized(&a), normalized(&b)))
}

fn normalized(w: &[u32]) -> Dist {
    let total: u32 = w.iter().sum();
    Dist::from_entries(
        w.iter()
            .enumerate()
            .filter(|(_, &x)| x > 0)
            .map(|(i, &x)| (Outcome::Bits(BitString::from_u64(i as u64, 3)), rat(x as i64, total as i64))),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pretty_print_round_trips(seed in any::<u64>()) {
        let p = random_program_seeded(seed);
        let text = pretty_print(&p);
        let back = parse(&text).unwrap();
        prop_assert_eq!(pretty_print(&back), text);
        prop_assert_eq!(back.n_lines(), p.n_lines());
        prop_assert_eq!(back.n_vars(), p.n_vars());
    }

    #[test]
    fn distributions_conserve_mass(seed in any::<u64>()) {
        let p = random_program_seeded(seed);
        for x in inputs(&p) {
            let d = output_distribution(&p, &x).unwrap();
            prop_assert_eq!(d.total(), Rational::one());
            prop_assert!(d.iter().all(|(o, m)| *m > Rational::zero() || *o == Outcome::Bottom));
        }
    }

    #[test]
    fn coin_enumeration_matches_or_bounds(seed in any::<u64>()) {
        let p = random_program_seeded(seed);
        let exact = !has_loop(p.body());
        for x in inputs(&p) {
            let d = output_distribution(&p, &x).unwrap();
            let enumerated = enumerate_coins(&p, &x, 12);
            for (o, m) in &enumerated {
                prop_assert!(*m <= d.get(&Outcome::Bits(o.clone())));
            }
            if exact {
                let mut solved: BTreeMap<BitString, Rational> = BTreeMap::new();
                for (o, m) in d.iter() {
                    if let Outcome::Bits(b) = o {
                        solved.insert(b.clone(), m.clone());
                    }
                }
                prop_assert_eq!(&enumerated, &solved);
                prop_assert!(d.bottom().is_zero());
            }
        }
    }

    #[test]
    fn normalization_preserves_hitting(seed in any::<u64>()) {
        let p = random_program_seeded(seed);
        for x in inputs(&p) {
            let c = build_chain(&p, &x, &Limits::default()).unwrap();
            let n = normalize_chain(&c);
            prop_assert_eq!(chain_distribution(&n).unwrap(), chain_distribution(&c).unwrap());
            for u in 0..n.len() {
                if n.is_final(u) {
                    continue;
                }
                let out = n.edges(u);
                prop_assert_eq!(out.len(), 2);
                prop_assert!(out.iter().all(|&(_, pr)| pr == Prob::Half));
                prop_assert_ne!(out[0].0, out[1].0);
            }
        }
    }

    #[test]
    fn zeroing_keeps_terminating_mass(seed in any::<u64>()) {
        let p = random_program_seeded(seed);
        for x in inputs(&p) {
            let c = build_chain(&p, &x, &Limits::default()).unwrap();
            let alive = c.reaches_final();
            let z = zero_recurrent(c.clone());
            let before = hitting_probabilities(&c).unwrap();
            prop_assert_eq!(hitting_probabilities(&z).unwrap(), before.clone());
            let mass: Rational = before.values().cloned().sum();
            if alive[c.start()] {
                prop_assert!(mass > Rational::zero() && mass <= Rational::one());
            } else {
                prop_assert_eq!(mass, Rational::zero());
            }
            for (u, &live) in alive.iter().enumerate() {
                if !live {
                    prop_assert!(z.edges(u).is_empty());
                }
            }
        }
    }

    #[test]
    fn dp_acceptance_is_monotone(seed in any::<u64>(), a in 1i64..8, b in 0i64..4, da in 0i64..4, db in 0i64..4) {
        let p = random_program_seeded(seed);
        let nb = NeighborRelation::Hamming1;
        let e = rat(a + 3, 4);
        let e2 = &e + rat(b, 4);
        if check_pure_dp(&p, &e, &nb, Mode::Sensitive).unwrap().is_private() {
            prop_assert!(check_pure_dp(&p, &e2, &nb, Mode::Sensitive).unwrap().is_private());
        }
        let lo = PrivacyParams::new(e.clone(), rat(da, 8)).unwrap();
        let hi = PrivacyParams::new(e2, rat(da + db, 8)).unwrap();
        if check_approx_dp(&p, &lo, &nb, Mode::Sensitive).unwrap().is_private() {
            prop_assert!(check_approx_dp(&p, &hi, &nb, Mode::Sensitive).unwrap().is_private());
        }
    }

    #[test]
    fn pointwise_check_matches_subsets(seed in any::<u64>(), a in 2i64..12, d in 0i64..8) {
        let p = random_program_seeded(seed);
        prop_assume!(p.n_outputs() <= 3);
        let params = PrivacyParams::new(rat(a, 4), rat(d, 16)).unwrap();
        let nb = NeighborRelation::Hamming1;
        let verdict = check_approx_dp(&p, &params, &nb, Mode::Sensitive).unwrap();
        let mut brute_private = true;
        for x in inputs(&p) {
            for y in inputs(&p) {
                if nb.related(&x, &y) {
                    let px = output_distribution(&p, &x).unwrap();
                    let py = output_distribution(&p, &y).unwrap();
                    if subset_violation(&px, &py, &params.e_eps, &params.delta) {
                        brute_private = false;
                    }
                }
            }
        }
        prop_assert_eq!(verdict.is_private(), brute_private);
        if let Some(w) = verdict.witness {
            let px = output_distribution(&p, &w.x).unwrap();
            let py = output_distribution(&p, &w.x_prime).unwrap();
            let lhs: Rational = w.outcomes.iter().map(|o| px.get(o)).sum();
            let rhs: Rational = w.outcomes.iter().map(|o| py.get(o)).sum::<Rational>() * &params.e_eps + &params.delta;
            prop_assert_eq!(&lhs, &w.lhs);
            prop_assert_eq!(&rhs, &w.rhs);
            prop_assert!(lhs > rhs);
        }
    }

    #[test]
    fn integer_order_sums_are_exact((p, q) in dist_pair_strategy(false), alpha in 2u32..6) {
        let mut oracle = Rational::zero();
        let mut infinite = false;
        for (o, pm) in p.iter() {
            let qm = q.get(o);
            if qm.is_zero() {
                infinite = true;
                continue;
            }
            let mut term = qm.clone();
            for _ in 0..alpha {
                term *= pm / &qm;
            }
            oracle += term;
        }
        match renyi_sum_exact(&p, &q, alpha) {
            Some(s) => { prop_assert!(!infinite); prop_assert_eq!(s, oracle); }
            None => prop_assert!(infinite),
        }
    }

    #[test]
    fn divergence_is_monotone_in_order((p, q) in dist_pair_strategy(true), steps in prop::collection::vec(1i64..8, 1..4)) {
        let precision = 48;
        let slack = rat(2, 1) * Rational::new(BigInt::one(), BigInt::one() << precision);
        let mut alpha = rat(1, 1) + rat(1, 8);
        let mut prev: Option<Rational> = None;
        for s in steps {
            let d = renyi_divergence(&p, &q, &alpha, precision).unwrap();
            let Divergence::Finite(iv) = d else { panic!("full support pair has finite divergence") };
            prop_assert!(iv.upper() >= Rational::zero());
            if let Some(lo_prev) = &prev {
                prop_assert!(iv.upper() + &slack >= *lo_prev);
            }
            prev = Some(iv.lower());
            alpha += rat(s, 4);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn oracle_agrees_with_chain(seed in any::<u64>()) {
        let p = random_program_seeded(seed);
        for x in inputs(&p) {
            let c = build_chain(&p, &x, &Limits::default()).unwrap();
            let oracle = EdgeOracle::new(&p, &x, &Limits::default()).unwrap();
            prop_assert_eq!(&oracle.start(), c.state(c.start()));
            let zeroed_chain = zero_recurrent(c.clone());
            let zeroed = zero_recurrent(oracle.clone());
            for u in 0..c.len() {
                for w in 0..c.len() {
                    let (su, sw) = (c.state(u), c.state(w));
                    let want = c.prob(u, w);
                    let got = oracle.prob(su, sw).unwrap().map_or_else(Rational::zero, |q| q.to_rational());
                    prop_assert_eq!(got, want);
                    let want = zeroed_chain.prob(u, w);
                    let got = zeroed.prob(su, sw).unwrap().map_or_else(Rational::zero, |q| q.to_rational());
                    prop_assert_eq!(got, want);
                }
            }
        }
    }
}

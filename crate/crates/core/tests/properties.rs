//! Randomized invariants of every module.

use std::collections::{HashSet, VecDeque};

use num_traits::Signed;
use proptest::prelude::*;
use ptpn::acptpn::{
    a_successors, budget_successors, decompose_oplus, leq, leq_config, oplus, BudgetConfig,
    OrderKind, OrderWitness,
};
use ptpn::aptpn::{
    abstract_trace_cost, encode, plus, realize, successors, AbstractConfig, AbstractStep,
    AgedToken, Group,
};
use ptpn::polytope::{build_constraints, is_ptpn_constraint_matrix};
use ptpn::ptpn::{
    decompose, enumerate_firings, fire, frac, is_detailed, rat, rat_int, refine_to_detailed,
    replay, running_example, step_cost, trace_cost, Arc, ConcreteConfig, ConcreteStep, Interval,
    PtpnNet, Rat, Token, Transition,
};
use ptpn::sdtn::Verdict;
use ptpn::sdtn::{
    fire_sdtn, multiset, sdtn_to_inhibitor, MarkedSystem, Marking, SdtnConfig, SdtnNet,
    SdtnTransition,
};
use ptpn::solver::{cost_threshold, insertions, SolverBudget, ThresholdInstance};
use ptpn::wqo::{gvj, in_upward, subword_leq, vec_leq, Tri};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Generators

fn random_interval(rng: &mut ChaCha8Rng, max: u32) -> Interval {
    loop {
        let lo = rng.gen_range(0..=max);
        let hi = if rng.gen_bool(0.25) {
            None
        } else {
            Some(rng.gen_range(lo..=max))
        };
        if let Ok(i) = Interval::new(lo, hi, rng.gen_bool(0.5), hi.is_some() && rng.gen_bool(0.5)) {
            return i;
        }
    }
}

/// A net with `places` places, the first of which is free.
fn random_net(rng: &mut ChaCha8Rng, places: usize, transitions: usize, max_out: usize) -> PtpnNet {
    let states = rng.gen_range(1..=2);
    let ts = (0..transitions)
        .map(|i| {
            let nin = rng.gen_range(0..=2);
            let nread = rng.gen_range(0..=1);
            let nout = rng.gen_range(0..=max_out.min(nin.max(1)));
            let mut arcs = |n: usize| {
                (0..n)
                    .map(|_| Arc::new(rng.gen_range(0..places), random_interval(rng, 2)))
                    .collect::<Vec<_>>()
            };
            let (input, read, output) = (arcs(nin), arcs(nread), arcs(nout));
            Transition {
                name: format!("t{i}"),
                source: rng.gen_range(0..states),
                target: rng.gen_range(0..states),
                input,
                read,
                output,
                cost: rng.gen_range(0..=1),
            }
        })
        .collect();
    PtpnNet::new(
        (0..states).map(|i| format!("q{i}")).collect(),
        (0..places)
            .map(|i| {
                (
                    format!("p{i}"),
                    if i == 0 { 0 } else { rng.gen_range(0..=2) },
                )
            })
            .collect(),
        ts,
    )
    .expect("generated net is well formed")
}

/// Concrete configuration with ages `k/den` for small denominators.
fn random_concrete(rng: &mut ChaCha8Rng, net: &PtpnNet, max_tokens: usize) -> ConcreteConfig {
    let toks = (0..rng.gen_range(0..=max_tokens))
        .map(|_| {
            let den = *[1, 2, 3, 4, 5, 10].choose(rng).expect("nonempty");
            Token::new(
                rng.gen_range(0..net.places().len()),
                rat(rng.gen_range(0..=4 * den), den),
            )
        })
        .collect();
    ConcreteConfig::new(rng.gen_range(0..net.states().len()), toks).expect("valid configuration")
}

/// Random concrete trace of up to `len` steps.
fn random_trace(
    rng: &mut ChaCha8Rng,
    net: &PtpnNet,
    init: &ConcreteConfig,
    len: usize,
) -> Vec<ConcreteStep> {
    let palette: Vec<Rat> = [0, 1, 3, 5, 7].iter().map(|&k| rat(k, 10)).collect();
    let mut cur = init.clone();
    let mut steps = Vec::new();
    for _ in 0..len {
        let firings: Vec<_> = (0..net.transitions().len())
            .flat_map(|t| enumerate_firings(net, &cur, t, &palette).unwrap_or_default())
            .collect();
        let step = if !firings.is_empty() && rng.gen_bool(0.5) {
            ConcreteStep::Discrete(firings.choose(rng).expect("nonempty").clone())
        } else {
            ConcreteStep::Timed(rat(rng.gen_range(1..=25), 10))
        };
        cur = fire(net, &cur, &step).expect("enabled step");
        steps.push(step);
    }
    steps
}

/// Abstract configuration with at most `max_tokens` tokens and two groups.
fn random_abstract(rng: &mut ChaCha8Rng, net: &PtpnNet, max_tokens: usize) -> AbstractConfig {
    let n = rng.gen_range(0..=max_tokens);
    let groups = rng.gen_range(0..=2.min(n));
    let mut slots: Vec<usize> = (0..groups).collect();
    while slots.len() < n {
        slots.push(rng.gen_range(0..=groups));
    }
    let highs = rng.gen_range(0..=groups);
    let mut gs: Vec<Group> = vec![vec![]; groups];
    let mut center = vec![];
    for s in slots {
        let t = random_token(rng, net, None);
        if s == groups {
            center.push(t);
        } else {
            gs[s].push(t);
        }
    }
    let low = gs.split_off(highs);
    AbstractConfig::new(rng.gen_range(0..net.states().len()), gs, center, low)
        .expect("groups are nonempty")
}

/// A token on a random place, or on one satisfying `want` (cost or free).
fn random_token(rng: &mut ChaCha8Rng, net: &PtpnNet, want: Option<bool>) -> AgedToken {
    let places: Vec<usize> = (0..net.places().len())
        .filter(|&p| want.is_none_or(|c| net.is_cost_place(p) == c))
        .collect();
    AgedToken::new(
        *places.choose(rng).expect("a place of the requested kind"),
        rng.gen_range(0..=net.cmax() + 1),
    )
}

/// Adds a number of tokens drawn from `count` at random positions.
fn add_tokens(
    rng: &mut ChaCha8Rng,
    net: &PtpnNet,
    a: &AbstractConfig,
    count: std::ops::RangeInclusive<usize>,
    want: Option<bool>,
) -> AbstractConfig {
    let mut cur = a.clone();
    for _ in 0..rng.gen_range(count) {
        let tok = random_token(rng, net, want);
        let opts = insertions(&cur, tok);
        cur = opts.choose(rng).expect("center insertion exists").0.clone();
    }
    cur
}

/// A net with one free and one costly place.
fn mixed_net(rng: &mut ChaCha8Rng) -> PtpnNet {
    loop {
        let ts = rng.gen_range(1..=2);
        let net = random_net(rng, 2, ts, 2);
        if net.is_cost_place(1) {
            return net;
        }
    }
}

fn sorted(mut v: Vec<Token>) -> Vec<Token> {
    v.sort();
    v
}

/// `big − small` as multisets, or `None` when `small ⊄ big`.
fn multiset_minus(big: &[Token], small: &[Token]) -> Option<Vec<Token>> {
    let mut rest = big.to_vec();
    for t in small {
        let i = rest.iter().position(|x| x == t)?;
        rest.remove(i);
    }
    Some(sorted(rest))
}

// Concrete semantics

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decompose_is_a_partition(
        ages in prop::collection::vec((0usize..3, 0i64..60, prop::sample::select(vec![1i64, 2, 3, 4, 6, 7, 10])), 0..8)
    ) {
        let marking = sorted(ages.iter().map(|&(p, n, d)| Token::new(p, rat(n, d))).collect());
        let dec = decompose(&marking);
        let rejoined = sorted(dec.parts().flatten().cloned().collect());
        prop_assert_eq!(&rejoined, &marking);
        prop_assert!(dec.zero.iter().all(|t| t.age.is_integer()));
        prop_assert!(dec.high.iter().chain(&dec.low).all(|g| !g.is_empty()));
        let half = rat(1, 2);
        let fracs = |gs: &[Vec<Token>]| -> Vec<Rat> {
            gs.iter().map(|g| frac(&g[0].age)).collect()
        };
        for g in dec.high.iter().chain(&dec.low) {
            prop_assert!(g.iter().all(|t| frac(&t.age) == frac(&g[0].age)));
        }
        let hi = fracs(&dec.high);
        let lo = fracs(&dec.low);
        prop_assert!(hi.iter().all(|f| *f >= half));
        prop_assert!(lo.iter().all(|f| f.is_positive() && *f < half));
        prop_assert!(hi.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(lo.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn timed_cost_is_additive(seed in any::<u64>(), x in 1i64..40, y in 1i64..40, den in 1i64..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = running_example();
        let c = random_concrete(&mut rng, &net, 5);
        let (x, y) = (rat(x, den), rat(y, den));
        let rate: u64 = c.marking().iter().map(|t| net.place_cost(t.place)).sum();
        let whole = step_cost(&net, &c, &ConcreteStep::Timed(&x + &y)).unwrap();
        let first = step_cost(&net, &c, &ConcreteStep::Timed(x.clone())).unwrap();
        let second = step_cost(&net, &c.delayed(&x), &ConcreteStep::Timed(y.clone())).unwrap();
        prop_assert_eq!(&whole, &(first + second));
        prop_assert_eq!(whole, (x + y) * rat_int(rate as i64));
    }

    #[test]
    fn firing_keeps_untouched_tokens(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_net(&mut rng, 3, 3, 2);
        let c = random_concrete(&mut rng, &net, 5);
        let palette: Vec<Rat> = [0, 1, 2].iter().map(|&k| rat(k, 4)).collect();
        for t in 0..net.transitions().len() {
            for f in enumerate_firings(&net, &c, t, &palette).unwrap() {
                let next = fire(&net, &c, &ConcreteStep::Discrete(f.clone())).unwrap();
                let kept = multiset_minus(c.marking(), &f.input).expect("inputs are present");
                prop_assert!(multiset_minus(&kept, &f.read).is_some(), "read tokens survive");
                let mut expected = kept;
                expected.extend(f.output.iter().cloned());
                let expected = sorted(expected);
                prop_assert_eq!(next.marking(), expected.as_slice());
                prop_assert_eq!(next.state, net.transitions()[t].target);
            }
        }
    }

    #[test]
    fn refinement_is_detailed_and_keeps_cost(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = running_example();
        let init = random_concrete(&mut rng, &net, 4);
        let trace = random_trace(&mut rng, &net, &init, 5);
        let fine = refine_to_detailed(&net, &init, &trace).unwrap();
        let configs = replay(&net, &init, &fine).unwrap();
        for (c, s) in configs.iter().zip(&fine) {
            if let ConcreteStep::Timed(x) = s {
                prop_assert!(is_detailed(c, x), "delay {} from {:?}", x, c);
            }
        }
        prop_assert_eq!(trace_cost(&net, &init, &fine).unwrap(), trace_cost(&net, &init, &trace).unwrap());
        let coarse_end = replay(&net, &init, &trace).unwrap().pop();
        prop_assert_eq!(configs.last().cloned(), coarse_end);
    }
}

// Constraint systems

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn built_constraint_matrices_are_recognized(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = if rng.gen_bool(0.5) { running_example() } else { random_net(&mut rng, 2, 3, 2) };
        let init = random_concrete(&mut rng, &net, 3);
        let trace = random_trace(&mut rng, &net, &init, 6);
        let (sys, point) = build_constraints(&net, &init, &trace).unwrap();
        prop_assert!(is_ptpn_constraint_matrix(&sys.matrix(), sys.m, sys.n), "{:?}", sys.matrix());
        prop_assert!(sys.satisfied_by(&point));
    }
}

// Abstract semantics

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn increment_saturates_at_the_cap(
        toks in prop::collection::vec((0usize..3, 0u32..8), 0..6),
        cmax in 0u32..6,
    ) {
        let mut g: Group = toks.iter().map(|&(p, a)| AgedToken::new(p, a.min(cmax + 1))).collect();
        g.sort();
        let once = plus(&g, cmax);
        prop_assert_eq!(once.len(), g.len());
        prop_assert!(once.iter().all(|t| t.age <= cmax + 1));
        let capped: Group = g.iter().filter(|t| t.age == cmax + 1).cloned().collect();
        let capped_after = plus(&capped, cmax);
        prop_assert_eq!(capped_after, capped);
        let mut fixed = g.clone();
        for _ in 0..=cmax + 1 {
            fixed = plus(&fixed, cmax);
        }
        prop_assert_eq!(plus(&fixed, cmax), fixed);
    }

    #[test]
    fn realized_traces_encode_stepwise(seed in any::<u64>(), delta_den in 5i64..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = if rng.gen_bool(0.5) { running_example() } else { random_net(&mut rng, 2, 2, 2) };
        let center = (0..rng.gen_range(0..=3)).map(|_| random_token(&mut rng, &net, None)).collect();
        let start = AbstractConfig::integral(rng.gen_range(0..net.states().len()), center);
        let mut abs = vec![start.clone()];
        let mut steps = Vec::new();
        for _ in 0..rng.gen_range(0..=5) {
            let succ = successors(&net, abs.last().expect("nonempty"));
            let Some((next, s)) = succ.choose(&mut rng).cloned() else { break };
            abs.push(next);
            steps.push(s);
        }
        let delta = rat(1, delta_den);
        let (init, concrete) = realize(&net, &start, &steps, &delta).unwrap();
        prop_assert_eq!(concrete.len(), steps.len());
        let configs = replay(&net, &init, &concrete).unwrap();
        for (c, a) in configs.iter().zip(&abs) {
            prop_assert_eq!(&encode(&net, c).unwrap(), a);
        }
        let concrete_cost = trace_cost(&net, &init, &concrete).unwrap();
        let abstract_cost = abstract_trace_cost(&net, &start, &steps).unwrap();
        let max_tokens = configs.iter().map(ConcreteConfig::size).max().unwrap_or(0);
        let bound = rat_int(steps.len() as i64) * &delta * rat_int(max_tokens as i64)
            * rat_int(net.max_place_cost() as i64);
        prop_assert!((concrete_cost - rat_int(abstract_cost as i64)).abs() <= bound);
    }
}

// Orders on budgeted configurations

const KINDS: [OrderKind; 3] = [OrderKind::Free, OrderKind::Cost, OrderKind::Any];

/// `γ` with the cost-place residuals of `w` removed.
fn strip_cost_residuals(net: &PtpnNet, gamma: &AbstractConfig, w: &OrderWitness) -> AbstractConfig {
    let strip = |g: &Group, r: &Group| -> Group {
        let mut out = g.clone();
        for t in r.iter().filter(|t| net.is_cost_place(t.place)) {
            let i = out
                .iter()
                .position(|x| x == t)
                .expect("residual lies inside its group");
            out.remove(i);
        }
        out
    };
    let side = |gs: &[Group], rs: &[Group]| -> Vec<Group> {
        gs.iter()
            .zip(rs)
            .map(|(g, r)| strip(g, r))
            .filter(|g| !g.is_empty())
            .collect()
    };
    AbstractConfig::new(
        gamma.state,
        side(&gamma.high, &w.high),
        strip(&gamma.center, &w.center),
        side(&gamma.low, &w.low),
    )
    .expect("nonempty groups")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn orders_are_reflexive_and_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = mixed_net(&mut rng);
        let beta = random_abstract(&mut rng, &net, 4);
        for kind in KINDS {
            let id = leq_config(&net, kind, &beta, &beta).expect("reflexive");
            prop_assert_eq!(oplus(&net, kind, &id, &beta).unwrap(), beta.clone());
        }
        let want = [Some(false), Some(true), None];
        for (kind, want) in KINDS.into_iter().zip(want) {
            let gamma = add_tokens(&mut rng, &net, &beta, 1..=2, want);
            let w = leq_config(&net, kind, &beta, &gamma).expect("additions of the allowed kind");
            prop_assert_eq!(&oplus(&net, kind, &w, &beta).unwrap(), &gamma);
            prop_assert_eq!(decompose_oplus(&net, kind, &beta, &gamma, &w.injection).unwrap(), w);
        }
    }

    #[test]
    fn orders_are_transitive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = mixed_net(&mut rng);
        let a = random_abstract(&mut rng, &net, 3);
        let want = [Some(false), Some(true), None];
        for (kind, want) in KINDS.into_iter().zip(want) {
            let b = add_tokens(&mut rng, &net, &a, 0..=2, want);
            let c = add_tokens(&mut rng, &net, &b, 0..=2, want);
            prop_assert!(leq_config(&net, kind, &a, &b).is_some());
            prop_assert!(leq_config(&net, kind, &b, &c).is_some());
            prop_assert!(leq_config(&net, kind, &a, &c).is_some());
        }
        let b = random_abstract(&mut rng, &net, 3);
        let c = random_abstract(&mut rng, &net, 4);
        for kind in KINDS {
            if leq_config(&net, kind, &a, &b).is_some() && leq_config(&net, kind, &b, &c).is_some() {
                prop_assert!(leq_config(&net, kind, &a, &c).is_some());
            }
        }
    }

    /// Pure additions lie in both the combined order and the matching pure
    /// order; mixed additions factor through a free then a cost addition.
    #[test]
    fn combined_order_versus_pure_orders(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = mixed_net(&mut rng);
        let beta = random_abstract(&mut rng, &net, 3);
        let gamma = if rng.gen_bool(0.7) {
            add_tokens(&mut rng, &net, &beta, 0..=3, None)
        } else {
            random_abstract(&mut rng, &net, 4)
        };
        let free = leq_config(&net, OrderKind::Free, &beta, &gamma);
        let cost = leq_config(&net, OrderKind::Cost, &beta, &gamma);
        let any = leq_config(&net, OrderKind::Any, &beta, &gamma);
        if free.is_some() || cost.is_some() {
            prop_assert!(any.is_some());
        }
        if let Some(w) = any {
            if free.is_none() && cost.is_none() {
                let mid = strip_cost_residuals(&net, &gamma, &w);
                prop_assert!(leq_config(&net, OrderKind::Free, &beta, &mid).is_some());
                prop_assert!(leq_config(&net, OrderKind::Cost, &mid, &gamma).is_some());
            }
        }
    }
}

#[test]
fn mixed_addition_is_in_neither_pure_order() {
    let net = running_example();
    let beta = AbstractConfig::integral(0, vec![AgedToken::new(0, 1)]);
    let gamma = AbstractConfig::integral(
        0,
        vec![
            AgedToken::new(0, 1),
            AgedToken::new(0, 2),
            AgedToken::new(2, 0),
        ],
    );
    assert!(leq_config(&net, OrderKind::Any, &beta, &gamma).is_some());
    assert!(leq_config(&net, OrderKind::Free, &beta, &gamma).is_none());
    assert!(leq_config(&net, OrderKind::Cost, &beta, &gamma).is_none());
}

/// Searches up to `depth` A-steps from `gamma` for a configuration above `target`.
fn a_reaches_above(
    net: &PtpnNet,
    gamma: &BudgetConfig,
    target: &BudgetConfig,
    depth: usize,
) -> bool {
    let mut frontier = vec![gamma.clone()];
    let mut seen: HashSet<BudgetConfig> = frontier.iter().cloned().collect();
    for _ in 0..depth {
        let mut next = Vec::new();
        for x in &frontier {
            for (y, _) in a_successors(net, x) {
                if leq(net, OrderKind::Free, target, &y).is_some() {
                    return true;
                }
                if seen.insert(y.clone()) {
                    next.push(y);
                }
            }
        }
        frontier = next;
    }
    false
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn a_steps_are_monotone_for_free_additions(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = mixed_net(&mut rng);
        let beta = BudgetConfig { budget: rng.gen_range(0..=2), config: random_abstract(&mut rng, &net, 3) };
        let gamma = BudgetConfig {
            budget: beta.budget,
            config: add_tokens(&mut rng, &net, &beta.config, 1..=2, Some(false)),
        };
        prop_assert!(leq(&net, OrderKind::Free, &beta, &gamma).is_some());
        let depth = 2 * (gamma.config.high.len() + gamma.config.low.len()) + 2;
        for (b2, step) in a_successors(&net, &beta) {
            prop_assert!(
                a_reaches_above(&net, &gamma, &b2, depth),
                "{} --{}--> {} has no counterpart from {}", beta, step, b2, gamma
            );
        }
    }
}

// Well-quasi-orders

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn comparators_are_quasi_orders(
        a in prop::collection::vec(0u64..4, 3),
        b in prop::collection::vec(0u64..4, 3),
        c in prop::collection::vec(0u64..4, 3),
        u in prop::collection::vec(0u8..3, 0..5),
        v in prop::collection::vec(0u8..3, 0..6),
        w in prop::collection::vec(0u8..3, 0..7),
    ) {
        prop_assert!(vec_leq(&a, &a) && subword_leq(&u, &u));
        if vec_leq(&a, &b) && vec_leq(&b, &c) {
            prop_assert!(vec_leq(&a, &c));
        }
        if subword_leq(&u, &v) && subword_leq(&v, &w) {
            prop_assert!(subword_leq(&u, &w));
        }
    }

    #[test]
    fn gvj_returns_a_covering_antichain(
        members in prop::collection::vec(prop::collection::vec(0u64..5, 3), 1..25)
    ) {
        let oracle = |x: &[Vec<u64>]| Tri::from_bool(members.iter().any(|m| !in_upward(x, m, |p, q| vec_leq(p, q))));
        let basis = gvj(|r| if r == 0 { members.clone() } else { vec![] }, oracle, |p, q| vec_leq(p, q), 4).unwrap();
        for (i, x) in basis.iter().enumerate() {
            for (j, y) in basis.iter().enumerate() {
                prop_assert!(i == j || !vec_leq(x, y));
            }
        }
        prop_assert!(members.iter().all(|m| in_upward(&basis, m, |p, q| vec_leq(p, q))));
        prop_assert!(basis.iter().all(|b| members.contains(b)));
    }
}

// Transfer nets

fn random_multiset(rng: &mut ChaCha8Rng, places: usize, max: usize) -> Vec<(usize, u32)> {
    let n = rng.gen_range(0..=max);
    multiset(&(0..n).map(|_| rng.gen_range(0..places)).collect::<Vec<_>>())
}

fn random_transfer_net(rng: &mut ChaCha8Rng) -> Option<SdtnNet> {
    let states = rng.gen_range(1..=2);
    let places = rng.gen_range(3..=4);
    let transfer = vec![(0, 1)];
    let ts: Vec<SdtnTransition<usize>> = (0..rng.gen_range(2..=4))
        .map(|i| {
            let tr = rng.gen_bool(0.4);
            let (input, output) = if tr {
                let side = |rng: &mut ChaCha8Rng| {
                    if rng.gen_bool(0.5) {
                        vec![]
                    } else {
                        multiset(&[rng.gen_range(2..places)])
                    }
                };
                (side(rng), side(rng))
            } else {
                (
                    random_multiset(rng, places, 2),
                    random_multiset(rng, places, 2),
                )
            };
            SdtnTransition {
                name: format!("t{i}"),
                from: rng.gen_range(0..states),
                to: rng.gen_range(0..states),
                input,
                output,
                transfer: tr,
            }
        })
        .collect();
    SdtnNet::new(
        (0..states).map(|i| format!("q{i}")).collect(),
        (0..places).map(|i| format!("p{i}")).collect(),
        ts,
        transfer,
    )
    .ok()
}

/// Breadth-first exploration of configurations with at most `cap` tokens.
fn explore<S: MarkedSystem<Control = usize>>(
    sys: &S,
    init: (usize, Marking),
    cap: u32,
    limit: usize,
) -> Vec<(usize, Marking)> {
    let mut seen: HashSet<(usize, Marking)> = HashSet::from([init.clone()]);
    let mut queue = VecDeque::from([init]);
    let mut out = Vec::new();
    while let Some((q, m)) = queue.pop_front() {
        out.push((q, m.clone()));
        if out.len() >= limit {
            break;
        }
        for (_, q2, m2) in sys.successors(&q, &m) {
            if m2.iter().sum::<u32>() <= cap && seen.insert((q2, m2.clone())) {
                queue.push_back((q2, m2));
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn transfers_empty_their_sources(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let Some(net) = random_transfer_net(&mut rng) else { return Ok(()) };
        let init: Marking = (0..net.places().len()).map(|_| rng.gen_range(0..=2)).collect();
        for (q, m) in explore(&net, (0, init), 8, 2_000) {
            let c = SdtnConfig::new(q, m);
            for (t, tr) in net.transitions().iter().enumerate() {
                if !tr.transfer {
                    continue;
                }
                if let Ok(next) = fire_sdtn(&net, &c, t) {
                    prop_assert!(net.transfer().iter().all(|&(s, _)| next.marking[s] == 0));
                }
            }
        }
    }

    #[test]
    fn translation_mirrors_the_transfer_sources(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let Some(net) = random_transfer_net(&mut rng) else { return Ok(()) };
        let init = SdtnConfig::new(0, (0..net.places().len()).map(|_| rng.gen_range(0..=2)).collect());
        let (tr, layout) = sdtn_to_inhibitor(&net, &init, &init);
        let sources: Vec<usize> = net.transfer().iter().map(|&(s, _)| s).collect();
        for (_, m) in explore(&tr.net, (tr.init.state, tr.init.marking.clone()), 16, 5_000) {
            let sum: u32 = sources.iter().map(|&s| m[s]).sum();
            prop_assert_eq!(m[layout.mirror], sum);
        }
    }
}

// Solver

/// Exhaustive budgeted search; `None` when the space exceeds `limit`.
fn direct_threshold(inst: &ThresholdInstance, limit: usize) -> Option<bool> {
    let start = inst.start();
    let mut seen: HashSet<BudgetConfig> = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        if x.config.state == inst.q_fin {
            return Some(true);
        }
        for (y, _) in budget_successors(&inst.net, &x) {
            if seen.insert(y.clone()) {
                if seen.len() > limit {
                    return None;
                }
                queue.push_back(y);
            }
        }
    }
    Some(false)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn threshold_agrees_with_exhaustive_search(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = mixed_net(&mut rng);
        let init = random_abstract(&mut rng, &net, 2);
        let q_fin = rng.gen_range(0..net.states().len());
        let inst = ThresholdInstance::with_init(net, init, q_fin, rng.gen_range(0..=2)).unwrap();
        let Some(expected) = direct_threshold(&inst, 20_000) else { return Ok(()) };
        let budget = SolverBudget { max_states: 100_000, max_tokens: 64, ..SolverBudget::default() };
        let got = cost_threshold(&inst, &budget).answer;
        let expected = if expected { Verdict::Yes } else { Verdict::No };
        prop_assert_eq!(got, expected);
    }
}

#[test]
fn a_step_kinds_exclude_slow_delays() {
    let net = running_example();
    let b = BudgetConfig {
        budget: 3,
        config: AbstractConfig::integral(0, vec![AgedToken::new(0, 1)]),
    };
    assert!(a_successors(&net, &b).iter().all(|(_, s)| !s.is_slow()));
    assert!(budget_successors(&net, &b)
        .iter()
        .any(|(_, s)| matches!(s, AbstractStep::Type3(_) | AbstractStep::Type4(_))));
}

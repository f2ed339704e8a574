//! Value iteration and qualitative analyses against brute-force oracles.

mod common;

use common::rng;
use num_rational::Rational64;
use rand::Rng;
use zonecheck_core::model::Optimization;
use zonecheck_core::{Mdp, MdpBuilder};

/// Random MDP as plain data: per state, actions as `(successor, weight)`
/// lists; weights are normalised into probabilities.
#[derive(Debug, Clone)]
struct RawMdp {
    actions: Vec<Vec<Vec<(usize, Rational64)>>>,
    targets: Vec<bool>,
}

fn random_dist(rng: &mut common::TestRng, succs: impl Fn(&mut common::TestRng) -> usize) -> Vec<(usize, Rational64)> {
    let k = rng.gen_range(1..=3);
    let weights: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=4)).collect();
    let total: i64 = weights.iter().sum();
    weights.into_iter().map(|w| (succs(rng), Rational64::new(w, total))).collect()
}

fn random_mdp(rng: &mut common::TestRng, n: usize, max_actions: usize, acyclic: bool) -> RawMdp {
    let mut actions = Vec::new();
    for s in 0..n {
        let count = if acyclic && s + 1 == n { 0 } else { rng.gen_range(0..=max_actions) };
        let mut acts = Vec::new();
        for _ in 0..count {
            acts.push(random_dist(rng, |r| if acyclic { r.gen_range(s + 1..n) } else { r.gen_range(0..n) }));
        }
        actions.push(acts);
    }
    let targets = (0..n).map(|_| rng.gen_bool(0.3)).collect();
    RawMdp { actions, targets }
}

fn build(raw: &RawMdp) -> Mdp {
    let mut b = MdpBuilder::with_states(raw.actions.len());
    for (s, acts) in raw.actions.iter().enumerate() {
        for (i, d) in acts.iter().enumerate() {
            b.add_action(s, &format!("a{i}"), d.iter().copied());
        }
        if raw.targets[s] {
            b.set_target(s);
        }
    }
    b.build().unwrap()
}

/// Actions with the implicit self-loop of action-less states.
fn actions_of(raw: &RawMdp, s: usize) -> Vec<Vec<(usize, Rational64)>> {
    if raw.actions[s].is_empty() {
        vec![vec![(s, Rational64::from_integer(1))]]
    } else {
        raw.actions[s].clone()
    }
}

/// Qualitative reachability in the Markov chain induced by a memoryless
/// deterministic strategy: `(p = 0, p = 1)` per state.
fn chain_qualitative(raw: &RawMdp, choice: &[usize]) -> (Vec<bool>, Vec<bool>) {
    let n = raw.targets.len();
    let succ = |s: usize| -> Vec<usize> { actions_of(raw, s)[choice[s]].iter().map(|d| d.0).collect() };
    let reaches_target = |start: usize| -> bool {
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        while let Some(s) = stack.pop() {
            if raw.targets[s] {
                return true;
            }
            if std::mem::replace(&mut seen[s], true) {
                continue;
            }
            stack.extend(succ(s));
        }
        false
    };
    let can: Vec<bool> = (0..n).map(reaches_target).collect();
    let sure: Vec<bool> = (0..n)
        .map(|start| {
            let mut seen = vec![false; n];
            let mut stack = vec![start];
            while let Some(s) = stack.pop() {
                if raw.targets[s] || std::mem::replace(&mut seen[s], true) {
                    continue;
                }
                if !can[s] {
                    return false;
                }
                stack.extend(succ(s));
            }
            true
        })
        .collect();
    (can.iter().map(|c| !c).collect(), sure)
}

fn all_strategies(raw: &RawMdp) -> Vec<Vec<usize>> {
    let n = raw.targets.len();
    let mut out = vec![Vec::new()];
    for s in 0..n {
        let k = actions_of(raw, s).len();
        out = out.into_iter().flat_map(|c| (0..k).map(move |a| [c.clone(), vec![a]].concat())).collect();
    }
    out
}

#[test]
fn qualitative_sets_match_strategy_enumeration() {
    let mut rng = rng(31);
    for _ in 0..2000 {
        let n = rng.gen_range(1..=4);
        let raw = random_mdp(&mut rng, n, 2, false);
        let m = build(&raw);
        let strategies = all_strategies(&raw);
        let results: Vec<_> = strategies.iter().map(|c| chain_qualitative(&raw, c)).collect();
        for s in 0..n {
            let p0_max = results.iter().all(|r| r.0[s]);
            let p1_max = results.iter().any(|r| r.1[s]);
            let p0_min = results.iter().any(|r| r.0[s]);
            let p1_min = results.iter().all(|r| r.1[s]);
            assert_eq!(m.prob0_max()[s], p0_max, "prob0_max state {s} of {raw:?}");
            assert_eq!(m.prob1_max()[s], p1_max, "prob1_max state {s} of {raw:?}");
            assert_eq!(m.prob0_min()[s], p0_min, "prob0_min state {s} of {raw:?}");
            assert_eq!(m.prob1_min()[s], p1_min, "prob1_min state {s} of {raw:?}");
        }
    }
}

/// Exact optimal values of an acyclic MDP by backward substitution.
fn acyclic_values(raw: &RawMdp, opt: Optimization) -> Vec<Rational64> {
    let n = raw.targets.len();
    let mut v = vec![Rational64::from_integer(0); n];
    for s in (0..n).rev() {
        if raw.targets[s] {
            v[s] = Rational64::from_integer(1);
            continue;
        }
        let values = raw.actions[s].iter().map(|d| d.iter().map(|(t, p)| p * v[*t]).sum::<Rational64>());
        v[s] = match opt {
            Optimization::Max => values.max(),
            Optimization::Min => values.min(),
        }
        .unwrap_or_default();
    }
    v
}

#[test]
fn acyclic_values_are_exact() {
    let mut rng = rng(32);
    for _ in 0..500 {
        let n = rng.gen_range(2..=8);
        let raw = random_mdp(&mut rng, n, 3, true);
        let m = build(&raw);
        for opt in [Optimization::Max, Optimization::Min] {
            let oracle = acyclic_values(&raw, opt);
            let exact = m.value_iteration::<Rational64>(opt, 1e-12, 100).unwrap();
            let float = m.value_iteration::<f64>(opt, 1e-12, 100).unwrap();
            for s in 0..n {
                assert_eq!(exact.values[s], oracle[s], "{opt:?} state {s} of {raw:?}");
                let o = *oracle[s].numer() as f64 / *oracle[s].denom() as f64;
                assert!((float.values[s] - o).abs() <= 1e-12, "{opt:?} state {s}");
            }
        }
    }
}

#[test]
fn max_dominates_min_and_values_stay_in_range() {
    let mut rng = rng(33);
    for _ in 0..500 {
        let n = rng.gen_range(1..=10);
        let raw = random_mdp(&mut rng, n, 3, false);
        let m = build(&raw);
        let max = m.value_iteration::<f64>(Optimization::Max, 1e-9, 1_000_000).unwrap();
        let min = m.value_iteration::<f64>(Optimization::Min, 1e-9, 1_000_000).unwrap();
        for s in 0..n {
            assert!(max.values[s] >= min.values[s] - 1e-9);
            assert!((0.0..=1.0).contains(&max.values[s]) && (0.0..=1.0).contains(&min.values[s]));
        }
    }
}

#[test]
fn sweep_cap_is_reported() {
    let half = Rational64::new(1, 2);
    let mut b = MdpBuilder::with_states(4);
    b.add_action(0, "a", [(0, Rational64::new(9, 10)), (1, Rational64::new(1, 20)), (2, Rational64::new(1, 40)), (3, Rational64::new(1, 40))]);
    b.add_action(1, "b", [(1, half), (0, half)]);
    b.set_target(2);
    let m = b.build().unwrap();
    let err = m.value_iteration::<f64>(Optimization::Max, 1e-15, 3).unwrap_err();
    assert!(err.to_string().contains("3 sweeps"), "{err}");
}

//! Digital-clocks engine: integer clock values and unit delays, for closed,
//! diagonal-free models.

use std::time::Instant;

use num_rational::Rational64;
use num_traits::One;
use rustc_hash::FxHashMap;

use crate::error::EngineError;
use crate::mdp::{Mdp, MdpBuilder};
use crate::model::{inject_property_clock, Cmp, EngineConfig, Expr, Property, Pta};
use crate::result::{ProbResult, Stats};

/// A predicate with names resolved to indices.
enum Pred {
    True,
    False,
    Location(usize),
    Atom { clock: usize, cmp: Cmp, value: i64 },
    Not(Box<Pred>),
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
}

impl Pred {
    fn resolve(p: &Pta, e: &Expr) -> Pred {
        match e {
            Expr::True => Pred::True,
            Expr::False => Pred::False,
            Expr::Location(l) => Pred::Location(p.location_index(l).expect("resolved")),
            Expr::Constraint(c) => {
                Pred::Atom { clock: p.clock_index(&c.clock).expect("resolved") - 1, cmp: c.cmp, value: c.value }
            }
            Expr::Not(a) => Pred::Not(Box::new(Pred::resolve(p, a))),
            Expr::And(a, b) => Pred::And(Box::new(Pred::resolve(p, a)), Box::new(Pred::resolve(p, b))),
            Expr::Or(a, b) => Pred::Or(Box::new(Pred::resolve(p, a)), Box::new(Pred::resolve(p, b))),
        }
    }

    fn holds(&self, loc: usize, v: &[i64]) -> bool {
        match self {
            Pred::True => true,
            Pred::False => false,
            Pred::Location(l) => *l == loc,
            Pred::Atom { clock, cmp, value } => cmp.holds(&v[*clock], value),
            Pred::Not(a) => !a.holds(loc, v),
            Pred::And(a, b) => a.holds(loc, v) && b.holds(loc, v),
            Pred::Or(a, b) => a.holds(loc, v) || b.holds(loc, v),
        }
    }
}

fn unsupported(e: &Expr, positive: bool, context: &str) -> Result<(), EngineError> {
    let mut problem = None;
    e.visit_constraints(&mut |c, pos| {
        if problem.is_some() {
            return;
        }
        let strict = match c.cmp {
            Cmp::Eq => pos != positive,
            cmp => cmp.is_strict() == (pos == positive),
        };
        if c.minus.is_some() {
            problem = Some(format!("diagonal constraint `{c}` in {context}"));
        } else if strict {
            problem = Some(format!("strict constraint `{c}` in {context}"));
        }
    });
    match problem {
        Some(p) => Err(EngineError::Unsupported(p)),
        None => Ok(()),
    }
}

/// The digital MDP of a model and an until property.
pub struct Digital {
    pub mdp: Mdp,
    /// Packed `(location, clock values)` per MDP state.
    states: Vec<u128>,
    pub initial: usize,
    /// Saturation value of each clock (largest constant plus one).
    pub caps: Vec<i64>,
}

impl Digital {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Location and clock values of MDP state `i`.
    pub fn state(&self, i: usize) -> (usize, Vec<i64>) {
        let mut v = vec![0; self.caps.len()];
        let loc = unpack(self.states[i], &self.caps, &mut v);
        (loc, v)
    }
}

fn pack(loc: usize, v: &[i64], caps: &[i64]) -> u128 {
    v.iter().zip(caps).rev().fold(loc as u128, |acc, (x, c)| acc * (*c as u128 + 1) + *x as u128)
}

fn unpack(mut key: u128, caps: &[i64], v: &mut [i64]) -> usize {
    for (x, c) in v.iter_mut().zip(caps) {
        *x = (key % (*c as u128 + 1)) as i64;
        key /= *c as u128 + 1;
    }
    key as usize
}

/// Builds the digital MDP for `prop`. Target states are absorbing; states
/// violating the left-hand side are absorbing non-targets.
pub fn digitize(p: &Pta, prop: &Property, cfg: &EngineConfig) -> Result<Digital, EngineError> {
    let bound = prop.bound.clone();
    let (p, prop) = inject_property_clock(p, prop)?;
    p.resolve(&prop.left, "left side of property")?;
    p.resolve(&prop.right, "right side of property")?;
    for l in p.locations() {
        unsupported(&l.invariant, true, &format!("invariant of `{}`", l.name))?;
    }
    for (k, e) in p.edges().iter().enumerate() {
        unsupported(&e.guard, true, &format!("guard of edge {k} ({})", e.action))?;
    }
    unsupported(&prop.right, true, "target")?;
    unsupported(&prop.left, false, "left side of property")?;

    let mut k = p.max_constants();
    p.collect_constants(&prop.left, &mut k);
    p.collect_constants(&prop.right, &mut k);
    if let Some(b) = &bound {
        let z = p.clock_index(&b.clock).expect("injected") - 1;
        k[z] = cfg.property_clock_cap.map_or(b.value, |c| c.max(b.value));
    }
    let caps: Vec<i64> = k.iter().map(|c| c + 1).collect();
    let space = caps.iter().try_fold(p.locations().len() as u128, |acc, c| acc.checked_mul(*c as u128 + 1));
    if space.is_none() {
        return Err(EngineError::Unsupported("clock ranges too large for the digital state encoding".into()));
    }

    let inv: Vec<Pred> = p.locations().iter().map(|l| Pred::resolve(&p, &l.invariant)).collect();
    let guards: Vec<Pred> = p.edges().iter().map(|e| Pred::resolve(&p, &e.guard)).collect();
    let target = Pred::resolve(&p, &prop.right);
    let left = Pred::resolve(&p, &prop.left);
    let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); p.locations().len()];
    for (e, edge) in p.edges().iter().enumerate() {
        outgoing[edge.source].push(e);
    }
    const TICK: usize = usize::MAX;

    let zero = vec![0; caps.len()];
    if !inv[p.initial()].holds(p.initial(), &zero) {
        return Err(EngineError::InitialInvariant(p.locations()[p.initial()].name.clone()));
    }
    let mut ids: FxHashMap<u128, u32> = FxHashMap::default();
    let mut states: Vec<u128> = Vec::new();
    let mut is_target = Vec::new();
    // Per state: (edge index or TICK, successors) with probabilities read
    // back from the edge's branches.
    let mut transitions: Vec<Vec<(usize, Vec<u32>)>> = Vec::new();
    let mut intern = |key: u128, states: &mut Vec<u128>| -> Result<u32, EngineError> {
        if let Some(&i) = ids.get(&key) {
            return Ok(i);
        }
        if states.len() >= cfg.digital_state_limit {
            return Err(EngineError::StateLimit(cfg.digital_state_limit));
        }
        ids.insert(key, states.len() as u32);
        states.push(key);
        Ok(states.len() as u32 - 1)
    };
    intern(pack(p.initial(), &zero, &caps), &mut states)?;
    let mut v = zero.clone();
    let mut w = zero;
    let mut next = 0;
    while next < states.len() {
        let loc = unpack(states[next], &caps, &mut v);
        next += 1;
        let mut actions = Vec::new();
        let hit = target.holds(loc, &v);
        is_target.push(hit);
        if hit || !left.holds(loc, &v) {
            transitions.push(actions);
            continue;
        }
        for &e in &outgoing[loc] {
            let edge = &p.edges()[e];
            if !guards[e].holds(loc, &v) {
                continue;
            }
            let enabled = edge.branches.iter().all(|b| {
                w.copy_from_slice(&v);
                for &c in &b.resets {
                    w[c - 1] = 0;
                }
                inv[b.target].holds(b.target, &w)
            });
            if !enabled {
                continue;
            }
            let mut succ = Vec::with_capacity(edge.branches.len());
            for b in &edge.branches {
                w.copy_from_slice(&v);
                for &c in &b.resets {
                    w[c - 1] = 0;
                }
                succ.push(intern(pack(b.target, &w, &caps), &mut states)?);
            }
            actions.push((e, succ));
        }
        for ((x, y), c) in w.iter_mut().zip(&v).zip(&caps) {
            *x = (y + 1).min(*c);
        }
        if inv[loc].holds(loc, &w) {
            let t = intern(pack(loc, &w, &caps), &mut states)?;
            actions.push((TICK, vec![t]));
        }
        transitions.push(actions);
    }
    drop(ids);

    // Reverse discovery order, so that sweeps run from the targets backwards.
    let n = states.len();
    let rev = |i: u32| n - 1 - i as usize;
    let mut b = MdpBuilder::with_states(n);
    for (i, actions) in transitions.into_iter().enumerate() {
        let s = rev(i as u32);
        if is_target[i] {
            b.set_target(s);
        }
        for (e, succ) in actions {
            if e == TICK {
                b.add_action(s, "tick", [(rev(succ[0]), Rational64::one())]);
            } else {
                let edge = &p.edges()[e];
                b.add_action(s, &edge.action, succ.iter().zip(&edge.branches).map(|(t, br)| (rev(*t), br.prob)));
            }
        }
    }
    states.reverse();
    Ok(Digital { mdp: b.build()?, states, initial: rev(0), caps })
}

/// Checks `prop` with the digital-clocks engine.
pub fn check_digital(p: &Pta, prop: &Property, cfg: &EngineConfig) -> Result<ProbResult, EngineError> {
    cfg.check()?;
    let start = Instant::now();
    let d = digitize(p, prop, cfg)?;
    let explored = start.elapsed();
    let vi = Instant::now();
    let solution = d.mdp.value_iteration::<f64>(prop.opt, cfg.epsilon, cfg.max_sweeps)?;
    let mut stats = Stats {
        digital_states: Some(d.len()),
        transitions: d.mdp.transitions(),
        sweeps: solution.sweeps,
        time_explore: explored,
        time_value_iteration: vi.elapsed(),
        ..Stats::default()
    };
    match prop.opt {
        crate::model::Optimization::Max => stats.time_max = start.elapsed(),
        crate::model::Optimization::Min => stats.time_min = start.elapsed(),
    }
    let mut r = ProbResult { probability: solution.values[d.initial], verdict: None, stats };
    if let Some(t) = &prop.threshold {
        r.evaluate_threshold(t, cfg.epsilon);
    }
    Ok(r)
}

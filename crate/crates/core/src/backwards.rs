//! Backwards reachability over symbolic states.
//!
//! [`explore`] builds an MDP whose states are `(location, zone)` pairs
//! discovered backwards from the target. Stored zones are discrete
//! predecessors; the timed predecessor of each state is computed once, when
//! the state is taken off the worklist, and kept for queries.

use std::collections::{HashMap, VecDeque};
use std::time::Instant;

use num_rational::Rational64;

use crate::dbm::{Bound, Dbm};
use crate::error::EngineError;
use crate::federation::{tpre_within_capped, Federation};
use crate::mdp::{Mdp, MdpBuilder};
use crate::model::{inject_property_clock, EngineConfig, Expr, Optimization, Property, Pta};
use crate::result::{ProbResult, Stats};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Seed,
    Derived,
    Combination,
}

#[derive(Clone, Debug)]
pub struct SymbolicState {
    pub location: usize,
    pub zone: Federation,
    pub role: Role,
}

/// An edge available in a state. Each branch independently picks one of its
/// `choices`, the symbolic states whose discrete predecessor covers the
/// state; a branch without choices leads to the sink.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicAction {
    pub edge: usize,
    pub choices: Vec<Vec<usize>>,
}

impl SymbolicAction {
    /// Number of concrete distributions the choices stand for.
    pub fn combinations(&self) -> usize {
        self.choices.iter().map(|c| c.len().max(1)).fold(1, usize::saturating_mul)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExploreStats {
    pub seeds: usize,
    /// Rounds of the worklist/combination loop.
    pub rounds: usize,
    /// Distinct zones formed by intersecting branch predecessors.
    pub combinations: usize,
}

/// Output of [`explore`].
#[derive(Clone, Debug)]
pub struct SymbolicMdp {
    pub states: Vec<SymbolicState>,
    /// Timed predecessor of each state within its safe set.
    pub tpre: Vec<Federation>,
    pub actions: Vec<Vec<SymbolicAction>>,
    pub probs: Vec<Vec<Rational64>>,
    pub stats: ExploreStats,
}

/// Actions standing for more distributions than this are split into one
/// choice node per branch.
const EXPAND_LIMIT: usize = 16;

impl SymbolicMdp {
    /// Index of the sink in [`SymbolicMdp::to_mdp`].
    pub fn sink(&self) -> usize {
        self.states.len()
    }

    /// The MDP over states plus the sink; seeds are the targets. Actions with
    /// many branch combinations route each branch through a node after the
    /// sink that picks the successor, which leaves maximal values and
    /// almost-sure sets of the symbolic states unchanged.
    pub fn to_mdp(&self) -> Mdp {
        let sink = self.sink();
        let mut b = MdpBuilder::with_states(sink + 1);
        let mut nodes: HashMap<&[usize], usize> = HashMap::new();
        for (s, st) in self.states.iter().enumerate() {
            if st.role == Role::Seed {
                b.set_target(s);
            }
            for a in &self.actions[s] {
                let label = format!("e{}", a.edge);
                let probs = &self.probs[a.edge];
                if a.combinations() <= EXPAND_LIMIT {
                    let mut pick = vec![0; a.choices.len()];
                    loop {
                        let dist = a.choices.iter().zip(&pick).zip(probs).map(|((c, &k), p)| (c.get(k).copied().unwrap_or(sink), *p));
                        b.add_action(s, &label, dist);
                        let Some(i) = (0..pick.len()).find(|&i| pick[i] + 1 < a.choices[i].len()) else { break };
                        pick[i] += 1;
                        pick[..i].iter_mut().for_each(|k| *k = 0);
                    }
                    continue;
                }
                let mut dist = Vec::with_capacity(a.choices.len());
                for (c, p) in a.choices.iter().zip(probs) {
                    let t = match c.len() {
                        0 => sink,
                        1 => c[0],
                        _ => *nodes.entry(c.as_slice()).or_insert_with(|| {
                            let n = b.add_state();
                            for &t in c {
                                b.add_action(n, "choose", [(t, Rational64::from_integer(1))]);
                            }
                            n
                        }),
                    };
                    dist.push((t, *p));
                }
                b.add_action(s, &label, dist);
            }
        }
        b.build().expect("symbolic distributions sum to one")
    }

    /// States at `location` whose timed predecessor holds the zero valuation.
    pub fn covering(&self, location: usize) -> Vec<usize> {
        (0..self.states.len())
            .filter(|&s| self.states[s].location == location && self.tpre[s].contains_origin())
            .collect()
    }

    /// Successor choices over all actions.
    pub fn transitions(&self) -> usize {
        self.actions.iter().flatten().map(|a| a.choices.iter().map(|c| c.len().max(1)).sum::<usize>()).sum()
    }
}

struct Candidate {
    target: usize,
    zone: Federation,
    fresh: bool,
}

/// Distinct zones formed by intersecting predecessors of branches
/// `0..i` of one edge, where each branch may also be left out. `None` is the
/// choice of leaving out every branch so far.
#[derive(Default)]
struct Level {
    zones: Vec<Option<Federation>>,
    index: HashMap<Dbm, Vec<usize>>,
    /// Entries joined with all candidates in earlier rounds.
    done: usize,
}

impl Level {
    fn insert(&mut self, zone: Option<Federation>) {
        let key = match &zone {
            Some(z) => z.hull(),
            None => Dbm::empty(1),
        };
        let list = self.index.entry(key).or_default();
        if list.iter().any(|&k| match (&self.zones[k], &zone) {
            (Some(a), Some(b)) => a.equals(b),
            (None, None) => true,
            _ => false,
        }) {
            return;
        }
        list.push(self.zones.len());
        self.zones.push(zone);
    }
}

/// Per-edge zone where taking the edge is possible and safe: guard, source
/// invariant and safe set, and every branch target's invariant after its
/// resets.
fn edge_zones(p: &Pta, safe: &[Federation]) -> Result<Vec<Federation>, EngineError> {
    let mut out = Vec::with_capacity(p.edges().len());
    for (k, e) in p.edges().iter().enumerate() {
        let mut z = p.guard(k).intersect(&p.invariant(e.source)).intersect(&safe[e.source]);
        for b in &e.branches {
            if z.is_empty() {
                break;
            }
            z = z.intersect(&p.invariant(b.target).backwards_reset(&b.resets)?);
        }
        out.push(z);
    }
    Ok(out)
}

fn incoming(p: &Pta) -> Vec<Vec<(usize, usize)>> {
    let mut inc = vec![Vec::new(); p.locations().len()];
    for (k, e) in p.edges().iter().enumerate() {
        for (i, b) in e.branches.iter().enumerate() {
            inc[b.target].push((k, i));
        }
    }
    inc
}

struct Explorer<'a> {
    pta: &'a Pta,
    safe: &'a [Federation],
    cfg: &'a EngineConfig,
    edge_zone: Vec<Federation>,
    incoming: Vec<Vec<(usize, usize)>>,
    states: Vec<SymbolicState>,
    tpre: Vec<Option<Federation>>,
    index: Vec<HashMap<Dbm, Vec<usize>>>,
    queue: VecDeque<usize>,
    candidates: Vec<Vec<Vec<Candidate>>>,
    /// Per edge, `levels[i]` combines branches `0..i`.
    levels: Vec<Vec<Level>>,
    combinations: usize,
}

impl Explorer<'_> {
    fn find_or_add(&mut self, location: usize, zone: Federation, role: Role) -> Result<usize, EngineError> {
        let hull = zone.hull();
        if let Some(list) = self.index[location].get(&hull) {
            for &s in list {
                if self.states[s].zone.equals(&zone) {
                    return Ok(s);
                }
            }
        }
        if self.states.len() >= self.cfg.max_states {
            return Err(EngineError::ExplorationCap { cap: self.cfg.max_states, states: self.states.len() });
        }
        let s = self.states.len();
        self.states.push(SymbolicState { location, zone, role });
        self.tpre.push(None);
        self.index[location].entry(hull).or_default().push(s);
        self.queue.push_back(s);
        Ok(s)
    }

    fn process(&mut self, s: usize) -> Result<(), EngineError> {
        let loc = self.states[s].location;
        let tp = tpre_within_capped(&self.safe[loc], &self.states[s].zone, self.cfg.tpre_cap)?;
        for idx in 0..self.incoming[loc].len() {
            let (e, i) = self.incoming[loc][idx];
            let edge = &self.pta.edges()[e];
            let pre = tp.backwards_reset(&edge.branches[i].resets)?.intersect(&self.edge_zone[e]);
            if pre.is_empty() {
                continue;
            }
            self.find_or_add(edge.source, pre.clone(), Role::Derived)?;
            self.candidates[e][i].push(Candidate { target: s, zone: pre, fresh: true });
        }
        self.tpre[s] = Some(tp);
        Ok(())
    }

    /// Adds a state for every new zone obtained by intersecting branch
    /// predecessors of one edge. Level by level, only pairs involving an
    /// entry or candidate found since the previous pass are joined.
    fn combine(&mut self) -> Result<(), EngineError> {
        let mut found = Vec::new();
        for e in 0..self.pta.edges().len() {
            let levels = &mut self.levels[e];
            for i in 0..levels.len() - 1 {
                let (lower, upper) = levels.split_at_mut(i + 1);
                let (from, to) = (&mut lower[i], &mut upper[0]);
                let mut joined = Vec::new();
                for (k, z) in from.zones.iter().enumerate() {
                    if k >= from.done {
                        joined.push(z.clone());
                    }
                    for c in &self.candidates[e][i] {
                        if k >= from.done || c.fresh {
                            let next = match z {
                                None => c.zone.clone(),
                                Some(z) => z.intersect(&c.zone),
                            };
                            if !next.is_empty() {
                                joined.push(Some(next));
                            }
                        }
                    }
                }
                from.done = from.zones.len();
                for z in joined {
                    to.insert(z);
                }
            }
            let last = levels.last_mut().expect("at least the empty level");
            for z in last.zones[last.done..].iter().flatten() {
                found.push((self.pta.edges()[e].source, z.clone()));
            }
            last.done = last.zones.len();
        }
        for list in self.candidates.iter_mut().flatten() {
            for c in list {
                c.fresh = false;
            }
        }
        self.combinations += found.len();
        for (src, zone) in found {
            self.find_or_add(src, zone, Role::Combination)?;
        }
        Ok(())
    }

    fn freeze(self) -> SymbolicMdp {
        let n = self.states.len();
        let mut actions: Vec<Vec<SymbolicAction>> = vec![Vec::new(); n];
        let hulls: Vec<Dbm> = self.states.iter().map(|st| st.zone.hull()).collect();
        for (e, edge) in self.pta.edges().iter().enumerate() {
            let sources: Vec<usize> =
                (0..n).filter(|&s| self.states[s].location == edge.source && self.states[s].role != Role::Seed).collect();
            let mut choices: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); edge.branches.len()]; sources.len()];
            for (i, cands) in self.candidates[e].iter().enumerate() {
                for c in cands {
                    let hull = c.zone.hull();
                    for (k, &s) in sources.iter().enumerate() {
                        if hull.includes(&hulls[s]) && c.zone.includes(&self.states[s].zone) {
                            choices[k][i].push(c.target);
                        }
                    }
                }
            }
            for (k, choices) in choices.into_iter().enumerate() {
                if choices.iter().any(|c| !c.is_empty()) {
                    actions[sources[k]].push(SymbolicAction { edge: e, choices });
                }
            }
        }
        let probs = self.pta.edges().iter().map(|e| e.branches.iter().map(|b| b.prob).collect()).collect();
        SymbolicMdp {
            states: self.states,
            tpre: self.tpre.into_iter().map(|t| t.expect("every state is processed")).collect(),
            actions,
            probs,
            stats: ExploreStats::default(),
        }
    }
}

/// Builds the symbolic MDP for reaching `target` while staying in `safe`,
/// both given per location and already restricted to the invariants.
pub fn explore(p: &Pta, safe: &[Federation], target: &[Federation], cfg: &EngineConfig) -> Result<SymbolicMdp, EngineError> {
    let nloc = p.locations().len();
    let mut ex = Explorer {
        pta: p,
        safe,
        cfg,
        edge_zone: edge_zones(p, safe)?,
        incoming: incoming(p),
        states: Vec::new(),
        tpre: Vec::new(),
        index: vec![HashMap::new(); nloc],
        queue: VecDeque::new(),
        candidates: p.edges().iter().map(|e| e.branches.iter().map(|_| Vec::new()).collect()).collect(),
        levels: p
            .edges()
            .iter()
            .map(|e| {
                let mut levels: Vec<Level> = (0..=e.branches.len()).map(|_| Level::default()).collect();
                levels[0].insert(None);
                levels
            })
            .collect(),
        combinations: 0,
    };
    for (loc, t) in target.iter().enumerate() {
        if !t.is_empty() {
            ex.find_or_add(loc, t.clone(), Role::Seed)?;
        }
    }
    let seeds = ex.states.len();
    let mut rounds = 0;
    loop {
        rounds += 1;
        while let Some(s) = ex.queue.pop_front() {
            ex.process(s)?;
        }
        ex.combine()?;
        if ex.queue.is_empty() {
            break;
        }
    }
    let combinations = ex.combinations;
    let mut m = ex.freeze();
    m.stats = ExploreStats { seeds, rounds, combinations };
    Ok(m)
}

/// Union of all valuations that can reach `target` with positive
/// probability, per location, as a timed predecessor.
pub fn reachable_backwards(
    p: &Pta,
    safe: &[Federation],
    target: &[Federation],
    cfg: &EngineConfig,
) -> Result<Vec<Federation>, EngineError> {
    let edge_zone = edge_zones(p, safe)?;
    let inc = incoming(p);
    let mut raw: Vec<Federation> = target.to_vec();
    let mut reach = Vec::with_capacity(raw.len());
    for (loc, r) in raw.iter().enumerate() {
        reach.push(tpre_within_capped(&safe[loc], r, cfg.tpre_cap)?);
    }
    let mut queue: VecDeque<usize> = (0..raw.len()).filter(|&l| !raw[l].is_empty()).collect();
    let mut queued: Vec<bool> = raw.iter().map(|r| !r.is_empty()).collect();
    let mut steps = 0;
    while let Some(loc) = queue.pop_front() {
        queued[loc] = false;
        steps += 1;
        if steps > cfg.fixpoint_cap.saturating_mul(raw.len().max(1)) {
            return Err(EngineError::FixpointCap(cfg.fixpoint_cap));
        }
        for &(e, i) in &inc[loc] {
            let edge = &p.edges()[e];
            let pre = reach[loc].backwards_reset(&edge.branches[i].resets)?.intersect(&edge_zone[e]);
            let src = edge.source;
            if pre.is_empty() || reach[src].includes(&pre) {
                continue;
            }
            raw[src] = raw[src].union(&pre);
            reach[src] = tpre_within_capped(&safe[src], &raw[src], cfg.tpre_cap)?;
            if !queued[src] {
                queued[src] = true;
                queue.push_back(src);
            }
        }
    }
    Ok(reach)
}

/// Per-location safe and target sets for `left U right`.
fn compile_until(p: &Pta, avoid: &Expr, target: &Expr) -> Result<(Vec<Federation>, Vec<Federation>), EngineError> {
    let mut safe = Vec::new();
    let mut tgt = Vec::new();
    for loc in 0..p.locations().len() {
        let inv = p.invariant(loc);
        safe.push(inv.subtract(&p.compile(avoid, loc)?));
        tgt.push(inv.intersect(&p.compile(target, loc)?));
    }
    Ok((safe, tgt))
}

fn check_initial(p: &Pta) -> Result<(), EngineError> {
    if !p.validate().initial_invariant_holds {
        return Err(EngineError::InitialInvariant(p.locations()[p.initial()].name.clone()));
    }
    Ok(())
}

/// Outcome of a maximum query on per-location sets.
#[derive(Clone, Debug)]
pub struct MaxOutcome {
    pub probability: f64,
    /// `None` when the zero pre-check answered without exploring.
    pub mdp: Option<SymbolicMdp>,
    pub values: Vec<f64>,
    pub states: usize,
    pub sweeps: usize,
    pub transitions: usize,
    pub maxu1: usize,
}

/// Maximum probability of reaching `target` inside `safe` from the zero
/// valuation in the initial location.
pub fn pmax_sets(
    p: &Pta,
    safe: &[Federation],
    target: &[Federation],
    cfg: &EngineConfig,
    stats: &mut Stats,
) -> Result<MaxOutcome, EngineError> {
    let start = Instant::now();
    let reach = reachable_backwards(p, safe, target, cfg)?;
    stats.time_qualitative += start.elapsed();
    let seeds = target.iter().filter(|t| !t.is_empty()).count();
    if !reach[p.initial()].contains_origin() {
        return Ok(MaxOutcome {
            probability: 0.0,
            mdp: None,
            values: Vec::new(),
            states: seeds,
            sweeps: 0,
            transitions: 0,
            maxu1: 0,
        });
    }
    let start = Instant::now();
    let sym = explore(p, safe, target, cfg)?;
    stats.time_explore += start.elapsed();
    let start = Instant::now();
    let mdp = sym.to_mdp();
    let solution = mdp.value_iteration::<f64>(Optimization::Max, cfg.epsilon, cfg.max_sweeps)?;
    stats.time_value_iteration += start.elapsed();
    let probability = sym
        .covering(p.initial())
        .into_iter()
        .map(|s| solution.values[s])
        .fold(0.0, f64::max);
    Ok(MaxOutcome {
        probability,
        states: sym.states.len(),
        transitions: sym.transitions(),
        sweeps: solution.sweeps,
        values: solution.values,
        mdp: Some(sym),
        maxu1: 0,
    })
}

/// Result of the divergence fixpoint.
#[derive(Clone, Debug)]
pub struct Divergence {
    /// Per location, the valuations from which staying inside the safe set
    /// forever is possible with probability 1.
    pub sets: Vec<Federation>,
    pub iterations: usize,
    pub maxu1_iterations: usize,
    /// Symbolic states of the last exploration.
    pub states: usize,
}

fn fresh_clock_name(p: &Pta) -> String {
    let mut name = "w".to_string();
    let mut k = 0;
    while p.clock_index(&name).is_some() || p.location_index(&name).is_some() {
        k += 1;
        name = format!("w{k}");
    }
    name
}

/// Valuations from which some strategy stays inside `safe` forever with
/// probability 1, found by repeatedly keeping only those that can stay for
/// at least `c` more time units with probability 1.
pub fn max_v_geq1(p: &Pta, safe: &[Federation], c: i64, cfg: &EngineConfig) -> Result<Divergence, EngineError> {
    if c < 1 {
        return Err(EngineError::Config("c must be a positive integer".into()));
    }
    let ext = p.with_clock(&fresh_clock_name(p))?;
    let w = ext.dim() - 1;
    let mut x: Vec<Federation> =
        safe.iter().enumerate().map(|(l, s)| s.intersect(&p.invariant(l))).collect();
    let mut iterations = 0;
    let mut maxu1 = 0;
    let mut states;
    loop {
        iterations += 1;
        if iterations > cfg.fixpoint_cap {
            return Err(EngineError::FixpointCap(cfg.fixpoint_cap));
        }
        let stay: Vec<Federation> = x.iter().map(|f| f.extend(1)).collect();
        let goal: Vec<Federation> = stay.iter().map(|f| f.constrain(0, w, Bound::le(-c))).collect();
        let sym = explore(&ext, &stay, &goal, cfg)?;
        states = sym.states.len();
        let (prob1, outer) = sym.to_mdp().prob1_max_counted();
        maxu1 += outer;
        let mut next: Vec<Federation> = vec![Federation::empty(ext.dim()); x.len()];
        for (s, st) in sym.states.iter().enumerate() {
            if prob1[s] {
                next[st.location].union_with(&sym.tpre[s]);
            }
        }
        let next: Vec<Federation> = next
            .into_iter()
            .zip(&x)
            .map(|(f, old)| Ok(f.constrain(w, 0, Bound::LE_ZERO).remove_clock(w)?.intersect(old)))
            .collect::<Result<_, EngineError>>()?;
        let stable = next.iter().zip(&x).all(|(a, b)| a.equals(b));
        x = next;
        if stable {
            return Ok(Divergence { sets: x, iterations, maxu1_iterations: maxu1, states });
        }
    }
}

/// `P_max(¬avoid U target)` from the initial state.
pub fn pmax_until(p: &Pta, avoid: &Expr, target: &Expr, cfg: &EngineConfig) -> Result<ProbResult, EngineError> {
    cfg.check()?;
    check_initial(p)?;
    let start = Instant::now();
    let mut stats = Stats::default();
    let (safe, tgt) = compile_until(p, avoid, target)?;
    let out = pmax_sets(p, &safe, &tgt, cfg, &mut stats)?;
    stats.states_max = Some(out.states);
    stats.transitions = out.transitions;
    stats.sweeps = out.sweeps;
    stats.time_max = start.elapsed();
    Ok(ProbResult { probability: out.probability, verdict: None, stats })
}

/// `P_min(¬avoid U target)`, as one minus the maximal probability of
/// reaching a bad state or a state that can avoid the target forever.
pub fn pmin_until(p: &Pta, avoid: &Expr, target: &Expr, cfg: &EngineConfig) -> Result<ProbResult, EngineError> {
    cfg.check()?;
    check_initial(p)?;
    let start = Instant::now();
    let mut stats = Stats::default();
    let (safe, tgt) = compile_until(p, avoid, target)?;
    let not_target: Vec<Federation> = (0..safe.len()).map(|l| p.invariant(l).subtract(&tgt[l])).collect();
    let qual = Instant::now();
    let c = cfg.c_for(p);
    let div = max_v_geq1(p, &not_target, c, cfg)?;
    stats.time_qualitative += qual.elapsed();
    stats.c = Some(c);
    pmin_finish(p, &safe, &not_target, &div.sets, &div, cfg, stats, start)
}

/// `P_min(¬avoid U (target ∧ bound))` where `bound` constrains a clock of
/// `model` that `base` lacks and that is never reset. Time divergence drives
/// that clock past the bound, so avoiding the target forever amounts to
/// violating the bound from a state of `base` where time can diverge.
/// That divergence analysis runs with `c = 1` unless `cfg.c` is set: it
/// covers the whole state space, where long durations make the symbolic
/// MDP much larger.
pub fn pmin_until_bounded(
    base: &Pta,
    model: &Pta,
    avoid: &Expr,
    target: &Expr,
    bound: &Expr,
    cfg: &EngineConfig,
) -> Result<ProbResult, EngineError> {
    cfg.check()?;
    check_initial(model)?;
    let start = Instant::now();
    let mut stats = Stats::default();
    let (safe, tgt) = compile_until(model, avoid, &Expr::and(target.clone(), bound.clone()))?;
    let not_target: Vec<Federation> = (0..safe.len()).map(|l| model.invariant(l).subtract(&tgt[l])).collect();
    let qual = Instant::now();
    let invariants: Vec<Federation> = (0..safe.len()).map(|l| base.invariant(l)).collect();
    let c = cfg.c.unwrap_or(1);
    let div = max_v_geq1(base, &invariants, c, cfg)?;
    stats.time_qualitative += qual.elapsed();
    stats.c = Some(c);
    let late = Expr::not(bound.clone());
    let forever: Vec<Federation> = (0..safe.len())
        .map(|l| Ok(model.compile(&late, l)?.intersect(&div.sets[l].extend(model.dim() - base.dim()))))
        .collect::<Result<_, EngineError>>()?;
    pmin_finish(model, &safe, &not_target, &forever, &div, cfg, stats, start)
}

#[allow(clippy::too_many_arguments)]
fn pmin_finish(
    p: &Pta,
    safe: &[Federation],
    not_target: &[Federation],
    forever: &[Federation],
    div: &Divergence,
    cfg: &EngineConfig,
    mut stats: Stats,
    start: Instant,
) -> Result<ProbResult, EngineError> {
    let bad: Vec<Federation> = (0..safe.len())
        .map(|l| not_target[l].subtract(&safe[l]).union(&forever[l]).reduce())
        .collect();
    let out = pmax_sets(p, not_target, &bad, cfg, &mut stats)?;
    stats.states_min = Some(out.states);
    stats.transitions = out.transitions;
    stats.sweeps = out.sweeps;
    stats.iter_maxv = Some(div.iterations);
    stats.iter_maxu1 = Some(div.maxu1_iterations);
    stats.time_min = start.elapsed();
    Ok(ProbResult { probability: 1.0 - out.probability, verdict: None, stats })
}

/// Checks `prop` on `p` with the backwards engine.
pub fn check_backwards(p: &Pta, prop: &Property, cfg: &EngineConfig) -> Result<ProbResult, EngineError> {
    let bound = prop.bound.as_ref().map(|b| b.constraint());
    let right = prop.right.clone();
    let (model, prop) = inject_property_clock(p, prop)?;
    model.resolve(&prop.left, "left side of property")?;
    model.resolve(&prop.right, "right side of property")?;
    let mut r = match (prop.opt, bound) {
        (Optimization::Max, _) => pmax_until(&model, &prop.avoid(), &prop.right, cfg)?,
        (Optimization::Min, Some(b)) => pmin_until_bounded(p, &model, &prop.avoid(), &right, &b, cfg)?,
        (Optimization::Min, None) => pmin_until(&model, &prop.avoid(), &prop.right, cfg)?,
    };
    if let Some(t) = &prop.threshold {
        r.evaluate_threshold(t, cfg.epsilon);
    }
    Ok(r)
}

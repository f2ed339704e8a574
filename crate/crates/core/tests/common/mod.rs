//! Test-only oracles and generators.
//!
//! Zones are generated as raw constraint lists and evaluated directly from
//! those lists, never through closure, so the oracles stay independent of the
//! code they check. Arithmetic is exact: a point is stored in units of
//! `1 / (2 * dim)`, which makes grid points (step `1/dim`) and midpoints
//! between crossing times integral.

#![allow(dead_code)]

use num_rational::Rational64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use zonecheck_core::{Bound, Dbm, Federation, Valuation};

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A conjunction of difference constraints kept in raw form.
#[derive(Clone, Debug)]
pub struct RawZone {
    pub dim: usize,
    pub constraints: Vec<(usize, usize, Bound)>,
}

impl RawZone {
    pub fn dbm(&self) -> Dbm {
        Dbm::from_constraints(self.dim, self.constraints.iter().copied()).unwrap()
    }

    /// Direct evaluation at a point given in `unit`-scaled integers.
    pub fn holds(&self, p: &[i64], unit: i64) -> bool {
        p.iter().all(|&v| v >= 0)
            && self.constraints.iter().all(|&(i, j, b)| {
                let diff = coord(p, i) - coord(p, j);
                let d = b.value().unwrap() * unit;
                if b.is_strict() {
                    diff < d
                } else {
                    diff <= d
                }
            })
    }

    pub fn max_constant(&self) -> i64 {
        self.constraints.iter().filter_map(|c| c.2.value()).map(i64::abs).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug)]
pub struct RawFed {
    pub dim: usize,
    pub members: Vec<RawZone>,
}

impl RawFed {
    pub fn federation(&self) -> Federation {
        Federation::from_dbms(self.dim, self.members.iter().map(RawZone::dbm))
    }

    pub fn holds(&self, p: &[i64], unit: i64) -> bool {
        self.members.iter().any(|z| z.holds(p, unit))
    }

    pub fn max_constant(&self) -> i64 {
        self.members.iter().map(RawZone::max_constant).max().unwrap_or(0)
    }

    pub fn constraints(&self) -> impl Iterator<Item = &(usize, usize, Bound)> {
        self.members.iter().flat_map(|z| z.constraints.iter())
    }
}

/// Value of DBM index `i` (0 is the reference clock).
pub fn coord(p: &[i64], i: usize) -> i64 {
    if i == 0 {
        0
    } else {
        p[i - 1]
    }
}

fn random_bound(rng: &mut TestRng, value: i64) -> Bound {
    if rng.gen_bool(0.3) {
        Bound::lt(value)
    } else {
        Bound::le(value)
    }
}

/// A random zone over `clocks` clocks with constants in `[-max_c, max_c]`.
pub fn random_zone(rng: &mut TestRng, clocks: usize, max_c: i64) -> RawZone {
    let dim = clocks + 1;
    let count = rng.gen_range(0..=2 * clocks + 1);
    let mut constraints = Vec::with_capacity(count);
    for _ in 0..count {
        let i = rng.gen_range(0..dim);
        let mut j = rng.gen_range(0..dim);
        while j == i {
            j = rng.gen_range(0..dim);
        }
        let value = match (i, j) {
            (_, 0) => rng.gen_range(0..=max_c),
            (0, _) => -rng.gen_range(0..=max_c),
            _ => rng.gen_range(-max_c..=max_c),
        };
        constraints.push((i, j, random_bound(rng, value)));
    }
    RawZone { dim, constraints }
}

/// A zone that is non-empty after closure, retrying a few times.
pub fn random_nonempty_zone(rng: &mut TestRng, clocks: usize, max_c: i64) -> RawZone {
    for _ in 0..32 {
        let z = random_zone(rng, clocks, max_c);
        if !z.dbm().is_empty() {
            return z;
        }
    }
    RawZone { dim: clocks + 1, constraints: Vec::new() }
}

pub fn random_fed(rng: &mut TestRng, clocks: usize, max_c: i64, max_members: usize) -> RawFed {
    let n = rng.gen_range(0..=max_members);
    RawFed { dim: clocks + 1, members: (0..n).map(|_| random_nonempty_zone(rng, clocks, max_c)).collect() }
}

/// Mostly two-clock cases with some one- and three-clock ones; three-clock
/// grids are large.
pub fn random_clock_count(rng: &mut TestRng) -> usize {
    match rng.gen_range(0..10) {
        0..=2 => 1,
        3..=7 => 2,
        _ => 3,
    }
}

/// Grid with step `1/dim` over `[0, extent]^clocks`, in units of `1/(2 dim)`.
pub struct Grid {
    pub dim: usize,
    pub unit: i64,
    pub points: Vec<Vec<i64>>,
    pub valuations: Vec<Valuation<Rational64>>,
}

impl Grid {
    pub fn new(clocks: usize, extent: i64) -> Grid {
        let dim = clocks + 1;
        let unit = 2 * dim as i64;
        let steps = extent * dim as i64;
        let mut points: Vec<Vec<i64>> = vec![Vec::new()];
        for _ in 0..clocks {
            let mut next = Vec::new();
            for p in &points {
                for k in 0..=steps {
                    let mut q = p.clone();
                    q.push(2 * k);
                    next.push(q);
                }
            }
            points = next;
        }
        let valuations = points
            .iter()
            .map(|p| Valuation::new(p.iter().map(|&v| Rational64::new(v, unit)).collect()).unwrap())
            .collect();
        Grid { dim, unit, points, valuations }
    }
}

/// Times (in grid units, relative to `p`) where `p + t` crosses the boundary
/// of one of the given constraints, plus 0, sorted and deduplicated.
pub fn crossing_times<'a>(
    p: &[i64],
    unit: i64,
    constraints: impl Iterator<Item = &'a (usize, usize, Bound)>,
) -> Vec<i64> {
    let mut times = vec![0];
    for &(i, j, b) in constraints {
        let d = b.value().unwrap() * unit;
        let t = match (i, j) {
            (0, 0) => continue,
            (_, 0) => d - coord(p, i),
            (0, _) => -d - coord(p, j),
            _ => continue,
        };
        if t > 0 {
            times.push(t);
        }
    }
    times.sort_unstable();
    times.dedup();
    times
}

/// Sample instants along the ray in order: each crossing time (a point
/// sample) followed by the midpoint of the gap after it (an interval sample);
/// the last gap is sampled one unit past the final crossing.
pub fn ray_samples(times: &[i64]) -> Vec<(i64, bool)> {
    let mut out = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        out.push((t, true));
        let next = times.get(k + 1).copied().unwrap_or(t + 2);
        out.push(((t + next) / 2, false));
    }
    out
}

fn shifted(p: &[i64], t: i64) -> Vec<i64> {
    p.iter().map(|v| v + t).collect()
}

/// Oracle for `tpre_within`: exists `t` with `p + t` in target and `p + t'`
/// in stay for every `t'` in `[0, t)`.
pub fn tpre_oracle(stay: &RawFed, target: &RawFed, p: &[i64], unit: i64) -> bool {
    let times = crossing_times(p, unit, stay.constraints().chain(target.constraints()));
    for (t, is_point) in ray_samples(&times) {
        let q = shifted(p, t);
        let in_stay = stay.holds(&q, unit);
        if target.holds(&q, unit) && (is_point || in_stay) {
            return true;
        }
        if !in_stay {
            return false;
        }
    }
    false
}

/// Oracle for `down`: exists `t >= 0` with `p + t` in the zone.
pub fn down_oracle(z: &RawZone, p: &[i64], unit: i64) -> bool {
    let times = crossing_times(p, unit, z.constraints.iter());
    ray_samples(&times).into_iter().any(|(t, _)| z.holds(&shifted(p, t), unit))
}

/// Oracle for `free`: exists `r >= 0` with `p[c := r]` in the zone. Witness
/// candidates are the values of `c` where a constraint mentioning it flips,
/// the midpoints between them, and one beyond.
pub fn free_oracle(z: &RawZone, c: usize, p: &[i64], unit: i64) -> bool {
    let mut values = vec![0];
    for &(i, j, b) in &z.constraints {
        let d = b.value().unwrap() * unit;
        if i == c {
            values.push(d + coord(p, j));
        } else if j == c {
            values.push(coord(p, i) - d);
        }
    }
    values.retain(|&v| v >= 0);
    values.sort_unstable();
    values.dedup();
    let mut candidates = Vec::new();
    for (k, &v) in values.iter().enumerate() {
        candidates.push(v);
        let next = values.get(k + 1).copied().unwrap_or(v + 2);
        candidates.push((v + next) / 2);
    }
    candidates.into_iter().any(|r| {
        let mut q = p.to_vec();
        q[c - 1] = r;
        z.holds(&q, unit)
    })
}

/// Oracle for `backwards_reset`: `p[X := 0]` in the zone.
pub fn backwards_reset_oracle(z: &RawZone, clocks: &[usize], p: &[i64], unit: i64) -> bool {
    let mut q = p.to_vec();
    for &c in clocks {
        q[c - 1] = 0;
    }
    z.holds(&q, unit)
}

/// Zone operations checked against the grid oracles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZoneOp {
    Intersect,
    Down,
    Free,
    BackwardsReset,
    Subtract,
    Complement,
    TpreWithin,
}

impl ZoneOp {
    pub const ALL: [ZoneOp; 7] = [
        ZoneOp::Intersect,
        ZoneOp::Down,
        ZoneOp::Free,
        ZoneOp::BackwardsReset,
        ZoneOp::Subtract,
        ZoneOp::Complement,
        ZoneOp::TpreWithin,
    ];
}

#[derive(Debug, Default)]
pub struct OracleReport {
    pub cases: usize,
    pub points: usize,
    pub mismatches: usize,
    pub bound_violations: usize,
    pub first_failure: Option<String>,
}

fn pick_clock_set(rng: &mut TestRng, clocks: usize) -> Vec<usize> {
    (1..=clocks).filter(|_| rng.gen_bool(0.5)).collect()
}

/// Runs `cases` random instances of `op` and compares the implementation's
/// membership with the oracle on every grid point over `[0, 7]^clocks`.
pub fn run_zone_oracle(op: ZoneOp, cases: usize, seed: u64) -> OracleReport {
    const MAX_C: i64 = 5;
    let grids: Vec<Grid> = (1..=3).map(|c| Grid::new(c, 7)).collect();
    let mut rng = rng(seed);
    let mut report = OracleReport::default();
    for case in 0..cases {
        let clocks = random_clock_count(&mut rng);
        let grid = &grids[clocks - 1];
        let dim = clocks + 1;
        let unit = grid.unit;
        let a = random_fed(&mut rng, clocks, MAX_C, 3);
        let b = random_fed(&mut rng, clocks, MAX_C, 3);
        let za = a.members.first().cloned().unwrap_or_else(|| random_nonempty_zone(&mut rng, clocks, MAX_C));
        let zb = b.members.first().cloned().unwrap_or_else(|| random_nonempty_zone(&mut rng, clocks, MAX_C));
        let clock = rng.gen_range(1..=clocks);
        let reset = pick_clock_set(&mut rng, clocks);
        let k = a.max_constant().max(b.max_constant()).max(za.max_constant()).max(zb.max_constant()).max(1);

        let (result, oracle): (Federation, Box<dyn Fn(&[i64]) -> bool>) = match op {
            ZoneOp::Intersect => {
                let (za, zb) = (za.clone(), zb.clone());
                (Federation::from_dbm(za.dbm().intersect(&zb.dbm())), Box::new(move |p| za.holds(p, unit) && zb.holds(p, unit)))
            }
            ZoneOp::Down => {
                let za = za.clone();
                (Federation::from_dbm(za.dbm().down()), Box::new(move |p| down_oracle(&za, p, unit)))
            }
            ZoneOp::Free => {
                let za = za.clone();
                (Federation::from_dbm(za.dbm().free(clock).unwrap()), Box::new(move |p| free_oracle(&za, clock, p, unit)))
            }
            ZoneOp::BackwardsReset => {
                let (za, reset) = (za.clone(), reset.clone());
                (
                    Federation::from_dbm(za.dbm().backwards_reset(&reset).unwrap()),
                    Box::new(move |p| backwards_reset_oracle(&za, &reset, p, unit)),
                )
            }
            ZoneOp::Subtract => {
                let (a, b) = (a.clone(), b.clone());
                (a.federation().subtract(&b.federation()), Box::new(move |p| a.holds(p, unit) && !b.holds(p, unit)))
            }
            ZoneOp::Complement => {
                let a = a.clone();
                (a.federation().complement(), Box::new(move |p| !a.holds(p, unit)))
            }
            ZoneOp::TpreWithin => {
                let (a, b) = (a.clone(), b.clone());
                (
                    zonecheck_core::federation::tpre_within(&a.federation(), &b.federation()).unwrap(),
                    Box::new(move |p| tpre_oracle(&a, &b, p, unit)),
                )
            }
        };
        report.cases += 1;
        if result.max_abs_constant() > 2 * k * dim as i64 {
            report.bound_violations += 1;
        }
        for (p, v) in grid.points.iter().zip(&grid.valuations) {
            report.points += 1;
            let got = result.contains(v).unwrap();
            if got != oracle(p) {
                report.mismatches += 1;
                if report.first_failure.is_none() {
                    report.first_failure = Some(format!(
                        "{op:?} case {case}: point {:?}/{unit} implementation={got} a={a:?} b={b:?} za={za:?} zb={zb:?} clock={clock} reset={reset:?}",
                        p
                    ));
                }
            }
        }
    }
    report
}

/// Random closed, diagonal-free model: at most 4 locations, clocks `x` and
/// `y`, constants up to 5 and at most 2 branches per edge.
pub fn random_pta(rng: &mut TestRng) -> zonecheck_core::Pta {
    use zonecheck_core::model::PtaSpec;
    let n = rng.gen_range(2..=4);
    let names: Vec<String> = (0..n).map(|i| format!("l{i}")).collect();
    let clocks = ["x", "y"];
    let atom = |rng: &mut TestRng, ops: &[&str]| {
        format!("{} {} {}", clocks[rng.gen_range(0..2)], ops[rng.gen_range(0..ops.len())], rng.gen_range(0..=5))
    };
    let mut s = PtaSpec::new(&clocks, "l0");
    let trap = rng.gen_bool(0.5);
    for (i, name) in names.iter().enumerate() {
        if trap && i == n - 1 {
            s.location(name, "true");
            continue;
        }
        let inv = match rng.gen_range(0..4) {
            0 => "true".to_string(),
            1 => format!("{} & {}", atom(rng, &["<="]), atom(rng, &["<="])),
            _ => atom(rng, &["<="]),
        };
        s.location(name, &inv);
    }
    let probs: [(&str, &str); 4] = [("1/2", "1/2"), ("1/3", "2/3"), ("1/4", "3/4"), ("9/10", "1/10")];
    for k in 0..rng.gen_range(n..=2 * n + 1) {
        let sources = if trap { n - 1 } else { n };
        let source = &names[rng.gen_range(0..sources)];
        let guard = match rng.gen_range(0..4) {
            0 => "true".to_string(),
            1 => format!("{} & {}", atom(rng, &["<=", ">=", "="]), atom(rng, &["<=", ">=", "="])),
            _ => atom(rng, &["<=", ">=", "="]),
        };
        let branch = |rng: &mut TestRng, p: &str| {
            let resets: Vec<String> = clocks.iter().filter(|_| rng.gen_bool(0.4)).map(|c| c.to_string()).collect();
            (p.to_string(), resets, names[rng.gen_range(0..n)].clone())
        };
        let branches = if rng.gen_bool(0.25) {
            vec![branch(rng, "1")]
        } else {
            let (a, b) = probs[rng.gen_range(0..probs.len())];
            vec![branch(rng, a), branch(rng, b)]
        };
        s.edges.push(zonecheck_core::model::EdgeSpec {
            source: source.clone(),
            action: format!("a{k}"),
            guard,
            branches,
        });
    }
    s.build().expect("generated model is well formed")
}

/// Random reachability target over the locations of `p`.
pub fn random_target(rng: &mut TestRng, p: &zonecheck_core::Pta) -> String {
    let n = p.locations().len();
    let loc = |rng: &mut TestRng| format!("l{}", rng.gen_range(1..n));
    let clock = |rng: &mut TestRng| ["x", "y"][rng.gen_range(0..2)];
    match rng.gen_range(0..4) {
        0 => loc(rng),
        1 => format!("{} & {} <= {}", loc(rng), clock(rng), rng.gen_range(0..=5)),
        2 => format!("{} & {} >= {}", loc(rng), clock(rng), rng.gen_range(0..=5)),
        _ => format!("{} | {}", loc(rng), loc(rng)),
    }
}

/// Whether the digital semantics of `prop` has neither deadlocks nor cycles
/// of discrete steps outside absorbing states, so that both engines see the
/// same time-divergent behaviour.
pub fn digitally_well_behaved(p: &zonecheck_core::Pta, prop: &zonecheck_core::Property) -> bool {
    use zonecheck_core::digital::digitize;
    let d = digitize(p, prop, &zonecheck_core::EngineConfig::default()).unwrap();
    let m = &d.mdp;
    let n = m.len();
    let absorbing = |s: usize| m.actions(s).all(|a| m.action_label(a) == "loop");
    let reach_target_or_absorbing: Vec<bool> = (0..n).map(|s| m.targets()[s] || absorbing(s)).collect();
    // Deadlock: a non-target state whose only action is the added self-loop,
    // unless it is a genuine absorbing state of the property (left fails).
    for s in 0..n {
        if !m.targets()[s] && absorbing(s) {
            return false;
        }
    }
    // Cycles of edge steps: depth-first search for a back edge.
    let mut colour = vec![0u8; n];
    fn dfs(m: &zonecheck_core::Mdp, s: usize, colour: &mut [u8], stop: &[bool]) -> bool {
        colour[s] = 1;
        for a in m.actions(s) {
            if m.action_label(a) == "tick" {
                continue;
            }
            for (t, _) in m.distribution(a) {
                if stop[t] {
                    continue;
                }
                if colour[t] == 1 || (colour[t] == 0 && dfs(m, t, colour, stop)) {
                    return true;
                }
            }
        }
        colour[s] = 2;
        false
    }
    for s in 0..n {
        if colour[s] == 0 && !reach_target_or_absorbing[s] && dfs(m, s, &mut colour, &reach_target_or_absorbing) {
            return false;
        }
    }
    true
}

/// One corpus entry: model, target text and the two engines' answers.
#[derive(Debug)]
pub struct CorpusResult {
    pub model: String,
    pub target: String,
    pub backwards: (f64, f64),
    pub digital: (f64, f64),
}

/// Generates `count` accepted models and checks P_max and P_min of a random
/// target with both engines, with a random deadline when `bounded`.
pub fn run_corpus(count: usize, seed: u64, bounded: bool) -> Vec<CorpusResult> {
    use zonecheck_core::backwards::check_backwards;
    use zonecheck_core::digital::check_digital;
    use zonecheck_core::model::{parse_property, render_model};
    use zonecheck_core::EngineConfig;
    let cfg = EngineConfig { epsilon: 1e-9, ..EngineConfig::default() };
    let mut rng = rng(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let p = random_pta(&mut rng);
        let mut target = random_target(&mut rng, &p);
        if bounded {
            target = format!("({target}) & z <= {}", rng.gen_range(0..=8));
        }
        let max = parse_property(&format!("Pmax [F {target}]"), &p).unwrap();
        let min = parse_property(&format!("Pmin [F {target}]"), &p).unwrap();
        if !digitally_well_behaved(&p, &max) {
            continue;
        }
        let b = |prop| check_backwards(&p, prop, &cfg).unwrap().probability;
        let d = |prop| check_digital(&p, prop, &cfg).unwrap().probability;
        out.push(CorpusResult {
            model: render_model(&p),
            target,
            backwards: (b(&max), b(&min)),
            digital: (d(&max), d(&min)),
        });
    }
    out
}

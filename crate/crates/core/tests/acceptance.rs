//! Acceptance criteria. Each prints one PASS or FAIL line; run with
//! `cargo test --test acceptance -- --nocapture` to see them.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use common::ZoneOp;
use zonecheck_core::backwards::{check_backwards, explore, max_v_geq1};
use zonecheck_core::digital::check_digital;
use zonecheck_core::harness::{mask_timing, run_suite, to_csv, Overrides, Suite};
use zonecheck_core::model::fixtures::{self, example_pta};
use zonecheck_core::model::{inject_property_clock, parse_property, Optimization};
use zonecheck_core::{Bound, Dbm, EngineConfig, Expr, Federation, ProbResult, Pta};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn run(p: &Pta, text: &str, cfg: &EngineConfig, digital: bool) -> Result<ProbResult, String> {
    let prop = parse_property(text, p).map_err(|e| e.to_string())?;
    let r = if digital { check_digital(p, &prop, cfg) } else { check_backwards(p, &prop, cfg) };
    r.map_err(|e| format!("{text}: {e}"))
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure!(t < limit, "took {t:.2?}, limit {limit:?}");
    Ok(())
}

fn worked_example() -> Outcome {
    let start = Instant::now();
    let base = example_pta();
    let prop = parse_property("z.Pmax [F done & z <= 10]", &base).unwrap();
    let (p, prop) = inject_property_clock(&base, &prop).map_err(|e| e.to_string())?;
    let cfg = EngineConfig { epsilon: 1e-9, ..EngineConfig::default() };
    let n = p.locations().len();
    let safe: Vec<Federation> = (0..n).map(|l| p.invariant(l)).collect();
    let target: Vec<Federation> =
        (0..n).map(|l| p.invariant(l).intersect(&p.compile(&prop.right, l).unwrap())).collect();
    let sym = explore(&p, &safe, &target, &cfg).map_err(|e| e.to_string())?;
    let mdp = sym.to_mdp();
    ensure!(sym.states.len() == 5 && mdp.len() == 6, "{} states, MDP of {}", sym.states.len(), mdp.len());

    // The property clock and y are never reset, so zones are compared where they agree.
    let (y, z) = (p.clock_index("y").unwrap(), p.clock_index("z").unwrap());
    let plane = |f: &Federation| f.constrain(y, z, Bound::LE_ZERO).constrain(z, y, Bound::LE_ZERO);
    let expected = [
        ("done", "y <= 10"),
        ("init", "1 <= x & x <= 2 & y <= 10"),
        ("lost", "x = 8 & y <= 9"),
        ("init", "1 <= x & x <= 2 & y - x <= 1"),
        ("lost", "x = 8 & y <= 1"),
    ];
    let mut matched = vec![false; 5];
    for (loc, text) in expected {
        let l = p.location_index(loc).unwrap();
        let want = plane(&p.compile(&Expr::parse(text).unwrap(), l).unwrap());
        let hit = (0..5).find(|&s| !matched[s] && sym.states[s].location == l && plane(&sym.states[s].zone).equals(&want));
        ensure!(hit.is_some(), "no state for {loc}: {text}");
        matched[hit.unwrap()] = true;
    }
    let covering = sym.covering(p.initial());
    ensure!(covering.len() == 2, "{} states cover the initial valuation", covering.len());
    let r = run(&base, "z.Pmax [F done & z <= 10]", &cfg, false)?;
    ensure!((r.probability - 0.99).abs() <= 1e-6, "probability {}", r.probability);
    within(start, Duration::from_secs(1))?;
    Ok(format!("5 states + sink, probability {}", r.probability))
}

fn example_probabilities() -> Outcome {
    let start = Instant::now();
    let p = example_pta();
    let cfg = EngineConfig::default();
    let mut summary = Vec::new();
    for (text, want) in [("Pmax [F done]", 0.999), ("Pmin [F done]", 0.99)] {
        let b = run(&p, text, &cfg, false)?.probability;
        let d = run(&p, text, &cfg, true)?.probability;
        ensure!((b - want).abs() <= 1e-6, "{text}: backwards {b}, expected {want}");
        ensure!((b - d).abs() <= 1e-6, "{text}: backwards {b}, digital {d}");
        summary.push(format!("{text} = {b}"));
    }
    within(start, Duration::from_secs(5))?;
    Ok(summary.join(", "))
}

fn c_independence() -> Outcome {
    let start = Instant::now();
    let p = example_pta();
    let not_done = Expr::parse("!done").unwrap();
    let safe: Vec<Federation> = (0..p.locations().len()).map(|l| p.compile(&not_done, l).unwrap()).collect();
    let mut sets: Vec<Vec<Federation>> = Vec::new();
    let mut iterations = Vec::new();
    let mut pmin = Vec::new();
    for c in [1, 2, 4, 8, 16] {
        let cfg = EngineConfig { c: Some(c), ..EngineConfig::default() };
        let d = max_v_geq1(&p, &safe, c, &cfg).map_err(|e| e.to_string())?;
        sets.push(d.sets);
        iterations.push(d.iterations);
        pmin.push(run(&p, "Pmin [F done]", &cfg, false)?.probability);
    }
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            ensure!(a.iter().zip(b).all(|(x, y)| x.equals(y)), "divergence sets differ");
        }
    }
    ensure!(pmin.windows(2).all(|w| w[0] == w[1]), "minimum probabilities {pmin:?}");
    ensure!(iterations.windows(2).all(|w| w[1] <= w[0]), "iterations {iterations:?}");
    within(start, Duration::from_secs(30))?;
    Ok(format!("iterations {iterations:?}, Pmin {}", pmin[0]))
}

fn cross_engine_corpus() -> Outcome {
    let start = Instant::now();
    let results = common::run_corpus(100, 41, false);
    ensure!(results.len() >= 50, "only {} models", results.len());
    let mut worst: f64 = 0.0;
    for r in &results {
        let d = (r.backwards.0 - r.digital.0).abs().max((r.backwards.1 - r.digital.1).abs());
        ensure!(d <= 1e-6, "target {}: backwards {:?} digital {:?}\n{}", r.target, r.backwards, r.digital, r.model);
        worst = worst.max(d);
    }
    within(start, Duration::from_secs(300))?;
    Ok(format!("{} models, largest difference {worst:e}", results.len()))
}

fn zone_grid_oracle() -> Outcome {
    let start = Instant::now();
    let mut cases = 0;
    for (i, op) in ZoneOp::ALL.into_iter().enumerate() {
        let report = common::run_zone_oracle(op, 1000, 500 + i as u64);
        ensure!(report.cases >= 1000, "{op:?}: {} cases", report.cases);
        ensure!(report.mismatches == 0, "{op:?}: {}", report.first_failure.unwrap_or_default());
        cases += report.cases;
    }
    within(start, Duration::from_secs(120))?;
    Ok(format!("{cases} cases, no mismatches"))
}

fn rect(xl: i64, xu: i64, yl: i64, yu: i64) -> Dbm {
    Dbm::from_constraints(
        3,
        [(0, 1, Bound::le(-xl)), (1, 0, Bound::le(xu)), (0, 2, Bound::le(-yl)), (2, 0, Bound::le(yu))],
    )
    .unwrap()
}

fn non_canonicity() -> Outcome {
    let left = Federation::from_dbms(3, [rect(1, 5, 2, 5), rect(5, 8, 3, 8), rect(3, 5, 5, 8)]);
    let middle = Federation::from_dbms(3, [rect(1, 5, 2, 5), rect(5, 8, 3, 5), rect(3, 8, 5, 8)]);
    ensure!(left.equals(&middle), "left and middle federations differ");
    let cfg = EngineConfig::default();
    let mut iterations = Vec::new();
    for name in fixtures::NAMES {
        let p = fixtures::by_name(name).unwrap();
        for text in ["Pmin [F done]", "z.Pmin [F done & z <= 2000]"] {
            let r = run(&p, text, &cfg, false)?;
            iterations.push(format!("{name} {}", r.stats.iter_maxu1.unwrap_or(0)));
        }
    }
    Ok(format!("federations equal, MaxU iterations: {}", iterations.join(", ")))
}

fn zero_detection() -> Outcome {
    let cfg = EngineConfig::default();
    for name in ["csma1", "csma2"] {
        let base = fixtures::by_name(name).unwrap();
        for d in [0, 800, 1641] {
            let text = format!("z.Pmax [F done & z <= {d}]");
            let prop = parse_property(&text, &base).unwrap();
            let (p, prop) = inject_property_clock(&base, &prop).unwrap();
            let seeds = (0..p.locations().len())
                .filter(|&l| !p.invariant(l).intersect(&p.compile(&prop.right, l).unwrap()).is_empty())
                .count();
            let r = run(&base, &text, &cfg, false)?;
            ensure!(r.probability == 0.0, "{name} D={d}: probability {}", r.probability);
            ensure!(r.stats.sweeps == 0, "{name} D={d}: {} sweeps", r.stats.sweeps);
            let states = r.stats.states_max.unwrap_or(usize::MAX);
            ensure!(states <= seeds, "{name} D={d}: {states} states, {seeds} seeds");
        }
    }
    Ok("csma1 and csma2 below 1642 give exactly 0".into())
}

fn determinism() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../suites/smoke.json");
    let suite = Suite::parse(&std::fs::read_to_string(&path).map_err(|e| e.to_string())?)?;
    let base = path.parent().unwrap();
    let once = || mask_timing(&to_csv(&run_suite(&suite, base, &Overrides::default())));
    let (a, b) = (once(), once());
    ensure!(a == b, "masked CSV differs between runs");
    ensure!(a.contains(",*,"), "timing columns not masked");
    Ok(format!("{} rows identical", a.lines().count() - 1))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 worked example symbolic states", worked_example),
        ("2 example probabilities", example_probabilities),
        ("3 independence from c", c_independence),
        ("4 cross-engine corpus", cross_engine_corpus),
        ("5 zone grid oracle", zone_grid_oracle),
        ("6 non-canonical federations", non_canonicity),
        ("7 zero detection", zero_detection),
        ("8 deterministic benchmarks", determinism),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {name} ({t:.2?}): {detail}"),
            Err(why) => {
                println!("FAIL {name} ({t:.2?}): {why}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}

#[test]
fn optimisation_direction_of_bare_threshold() {
    let p = example_pta();
    assert_eq!(parse_property("P>=0.9 [F done]", &p).unwrap().opt, Optimization::Min);
    assert_eq!(parse_property("P<0.9 [F done]", &p).unwrap().opt, Optimization::Max);
}

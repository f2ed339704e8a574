//! Probabilistic timed automata, properties and the bundled fixtures.

mod expr;
pub mod fixtures;
mod json;
mod property;

pub use expr::{Cmp, Constraint, Expr};
pub use json::{parse_model, render_model};
pub use property::{inject_property_clock, parse_property, property_optimization, Property, Optimization, Threshold, TimeBound};

use std::collections::HashSet;

use num_rational::Rational64;
use num_traits::{One, Zero};

use crate::dbm::{Bound, Dbm};
use crate::error::{EngineError, ModelError, ModelErrors};
use crate::federation::Federation;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Location {
    pub name: String,
    pub invariant: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub prob: Rational64,
    /// Clock indices (1-based, as in zones) reset on this branch.
    pub resets: Vec<usize>,
    pub target: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub source: usize,
    pub action: String,
    pub guard: Expr,
    pub branches: Vec<Branch>,
}

/// A probabilistic timed automaton. All clocks are zero in the initial
/// location.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pta {
    clocks: Vec<String>,
    locations: Vec<Location>,
    initial: usize,
    edges: Vec<Edge>,
}

/// Unresolved description of a model, by name. Both the JSON reader and the
/// fixture generators go through this.
#[derive(Clone, Debug, Default)]
pub struct PtaSpec {
    pub clocks: Vec<String>,
    pub initial: String,
    pub locations: Vec<(String, String)>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Clone, Debug)]
pub struct EdgeSpec {
    pub source: String,
    pub action: String,
    pub guard: String,
    /// `(probability, resets, target)`
    pub branches: Vec<(String, Vec<String>, String)>,
}

impl PtaSpec {
    pub fn new(clocks: &[&str], initial: &str) -> PtaSpec {
        PtaSpec {
            clocks: clocks.iter().map(|c| c.to_string()).collect(),
            initial: initial.to_string(),
            ..PtaSpec::default()
        }
    }

    pub fn location(&mut self, name: &str, invariant: &str) -> &mut Self {
        self.locations.push((name.to_string(), invariant.to_string()));
        self
    }

    pub fn edge(&mut self, source: &str, action: &str, guard: &str, branches: &[(&str, &[&str], &str)]) -> &mut Self {
        self.edges.push(EdgeSpec {
            source: source.to_string(),
            action: action.to_string(),
            guard: guard.to_string(),
            branches: branches
                .iter()
                .map(|(p, r, t)| (p.to_string(), r.iter().map(|c| c.to_string()).collect(), t.to_string()))
                .collect(),
        });
        self
    }

    /// Resolves names and checks every structural rule, reporting all
    /// problems found.
    pub fn build(&self) -> Result<Pta, ModelErrors> {
        let mut errors = Vec::new();
        let mut seen = HashSet::new();
        for c in &self.clocks {
            check_name(c, "clock", &mut errors);
            if !seen.insert(c.as_str()) {
                errors.push(ModelError::Duplicate { kind: "clock", name: c.clone() });
            }
        }
        let mut seen_locs = HashSet::new();
        let mut locations = Vec::new();
        for (name, inv) in &self.locations {
            check_name(name, "location", &mut errors);
            if !seen_locs.insert(name.as_str()) {
                errors.push(ModelError::Duplicate { kind: "location", name: name.clone() });
            }
            let context = format!("invariant of `{name}`");
            let invariant = parse_expr(inv, &context, &mut errors);
            locations.push(Location { name: name.clone(), invariant });
        }
        let loc_index = |name: &str| self.locations.iter().position(|(n, _)| n == name);
        let clock_index = |name: &str| self.clocks.iter().position(|c| c == name).map(|i| i + 1);
        let initial = loc_index(&self.initial);
        if initial.is_none() {
            errors.push(ModelError::Unknown { kind: "location", name: self.initial.clone(), context: "initial".into() });
        }
        let mut edges = Vec::new();
        for (k, e) in self.edges.iter().enumerate() {
            let context = format!("edge {k} ({}) from `{}`", e.action, e.source);
            let source = loc_index(&e.source);
            if source.is_none() {
                errors.push(ModelError::Unknown { kind: "location", name: e.source.clone(), context: context.clone() });
            }
            let guard = parse_expr(&e.guard, &format!("guard of {context}"), &mut errors);
            if e.branches.is_empty() {
                errors.push(ModelError::Invalid(format!("{context}: no branches")));
            }
            let mut branches = Vec::new();
            let mut sum = Rational64::zero();
            let mut sum_ok = true;
            for (p, resets, target) in &e.branches {
                let prob = match crate::scalar::parse_rational(p) {
                    Some(p) if p > Rational64::zero() && p <= Rational64::one() => p,
                    _ => {
                        errors.push(ModelError::Invalid(format!("{context}: `{p}` is not a probability in (0, 1]")));
                        sum_ok = false;
                        continue;
                    }
                };
                sum += prob;
                let mut reset_idx = Vec::new();
                for r in resets {
                    match clock_index(r) {
                        Some(i) if !reset_idx.contains(&i) => reset_idx.push(i),
                        Some(_) => errors.push(ModelError::Duplicate { kind: "reset", name: r.clone() }),
                        None => errors.push(ModelError::Unknown { kind: "clock", name: r.clone(), context: context.clone() }),
                    }
                }
                reset_idx.sort_unstable();
                let target_idx = loc_index(target);
                if target_idx.is_none() {
                    errors.push(ModelError::Unknown { kind: "location", name: target.clone(), context: context.clone() });
                }
                branches.push(Branch { prob, resets: reset_idx, target: target_idx.unwrap_or(0) });
            }
            if sum_ok && !e.branches.is_empty() && sum != Rational64::one() {
                errors.push(ModelError::Invalid(format!("{context}: probabilities sum to {sum}")));
            }
            edges.push(Edge { source: source.unwrap_or(0), action: e.action.clone(), guard, branches });
        }
        let pta = Pta { clocks: self.clocks.clone(), locations, initial: initial.unwrap_or(0), edges };
        for l in &pta.locations {
            pta.check_expr(&l.invariant, &format!("invariant of `{}`", l.name), &mut errors);
        }
        for (k, e) in pta.edges.iter().enumerate() {
            pta.check_expr(&e.guard, &format!("guard of edge {k} ({})", e.action), &mut errors);
        }
        if errors.is_empty() {
            Ok(pta)
        } else {
            Err(ModelErrors(errors))
        }
    }
}

fn check_name(name: &str, kind: &'static str, errors: &mut Vec<ModelError>) {
    let valid = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !valid || name == "true" || name == "false" {
        errors.push(ModelError::Invalid(format!("`{name}` is not a valid {kind} name")));
    }
}

fn parse_expr(text: &str, context: &str, errors: &mut Vec<ModelError>) -> Expr {
    Expr::parse(text).unwrap_or_else(|(column, message)| {
        errors.push(ModelError::Expression { context: context.to_string(), column, message });
        Expr::True
    })
}

/// Structural flags of a model. Problems are reported, never raised.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    /// No strict comparison in any guard or invariant.
    pub closed: bool,
    pub diagonal_free: bool,
    /// Largest constant compared against each clock, in clock order.
    pub max_constants: Vec<(String, i64)>,
    /// The zero valuation satisfies the initial location's invariant.
    pub initial_invariant_holds: bool,
}

impl ValidationReport {
    pub fn is_fatal(&self) -> bool {
        !self.initial_invariant_holds
    }
}

impl Pta {
    pub fn clocks(&self) -> &[String] {
        &self.clocks
    }

    /// Zone dimension: clocks plus the reference clock.
    pub fn dim(&self) -> usize {
        self.clocks.len() + 1
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn location_names(&self) -> Vec<String> {
        self.locations.iter().map(|l| l.name.clone()).collect()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn location_index(&self, name: &str) -> Option<usize> {
        self.locations.iter().position(|l| l.name == name)
    }

    /// Zone index (1-based) of a clock.
    pub fn clock_index(&self, name: &str) -> Option<usize> {
        self.clocks.iter().position(|c| c == name).map(|i| i + 1)
    }

    /// Returns a copy with one more clock that no guard or invariant mentions.
    pub fn with_clock(&self, name: &str) -> Result<Pta, ModelError> {
        if self.clock_index(name).is_some() || self.location_index(name).is_some() {
            return Err(ModelError::Duplicate { kind: "clock", name: name.to_string() });
        }
        let mut errors = Vec::new();
        check_name(name, "clock", &mut errors);
        if let Some(e) = errors.pop() {
            return Err(e);
        }
        let mut p = self.clone();
        p.clocks.push(name.to_string());
        Ok(p)
    }

    /// Checks that every name in `e` resolves.
    pub fn check_expr(&self, e: &Expr, context: &str, errors: &mut Vec<ModelError>) {
        e.visit_locations(&mut |l| {
            if self.location_index(l).is_none() {
                errors.push(ModelError::Unknown { kind: "location", name: l.to_string(), context: context.to_string() });
            }
        });
        e.visit_constraints(&mut |c, _| {
            for name in std::iter::once(&c.clock).chain(&c.minus) {
                if self.clock_index(name).is_none() {
                    errors.push(ModelError::Unknown { kind: "clock", name: name.clone(), context: context.to_string() });
                }
            }
        });
    }

    pub fn validate(&self) -> ValidationReport {
        let exprs = || self.locations.iter().map(|l| &l.invariant).chain(self.edges.iter().map(|e| &e.guard));
        let init_inv = self.compile(&self.locations[self.initial].invariant, self.initial).unwrap_or_else(|_| Federation::empty(self.dim()));
        ValidationReport {
            closed: exprs().all(Expr::is_closed),
            diagonal_free: exprs().all(Expr::is_diagonal_free),
            max_constants: self.clocks.iter().cloned().zip(self.max_constants()).collect(),
            initial_invariant_holds: init_inv.contains_origin(),
        }
    }

    /// Largest constant each clock is compared against in guards and
    /// invariants, in clock order.
    pub fn max_constants(&self) -> Vec<i64> {
        let mut k = vec![0; self.clocks.len()];
        for e in self.locations.iter().map(|l| &l.invariant).chain(self.edges.iter().map(|e| &e.guard)) {
            self.collect_constants(e, &mut k);
        }
        k
    }

    /// Raises `k` to cover the constants of `e`.
    pub fn collect_constants(&self, e: &Expr, k: &mut [i64]) {
        e.visit_constraints(&mut |c, _| {
            for name in std::iter::once(&c.clock).chain(&c.minus) {
                if let Some(i) = self.clock_index(name) {
                    k[i - 1] = k[i - 1].max(c.value.abs());
                }
            }
        });
    }

    pub fn max_constant(&self) -> i64 {
        self.max_constants().into_iter().max().unwrap_or(0)
    }

    /// The valuations satisfying `e` at location `loc`. A predicate without
    /// location atoms applies to every location.
    pub fn compile(&self, e: &Expr, loc: usize) -> Result<Federation, ModelError> {
        let dim = self.dim();
        Ok(match e {
            Expr::True => Federation::universe(dim),
            Expr::False => Federation::empty(dim),
            Expr::Location(l) => match self.location_index(l) {
                Some(i) if i == loc => Federation::universe(dim),
                Some(_) => Federation::empty(dim),
                None => {
                    return Err(ModelError::Unknown { kind: "location", name: l.clone(), context: "predicate".into() })
                }
            },
            Expr::Constraint(c) => Federation::from_dbm(self.constraint_zone(c)?),
            Expr::Not(a) => self.compile(a, loc)?.complement(),
            Expr::And(a, b) => {
                let left = self.compile(a, loc)?;
                if left.is_empty() {
                    left
                } else {
                    left.intersect(&self.compile(b, loc)?)
                }
            }
            Expr::Or(a, b) => self.compile(a, loc)?.union(&self.compile(b, loc)?),
        })
    }

    fn constraint_zone(&self, c: &Constraint) -> Result<Dbm, ModelError> {
        let index = |name: &String| {
            self.clock_index(name)
                .ok_or_else(|| ModelError::Unknown { kind: "clock", name: name.clone(), context: "predicate".into() })
        };
        let i = index(&c.clock)?;
        let j = match &c.minus {
            Some(y) => index(y)?,
            None => 0,
        };
        let upper = |strict| (i, j, Bound::new(c.value, strict));
        let lower = |strict| (j, i, Bound::new(-c.value, strict));
        let constraints = match c.cmp {
            Cmp::Lt => vec![upper(true)],
            Cmp::Le => vec![upper(false)],
            Cmp::Eq => vec![upper(false), lower(false)],
            Cmp::Ge => vec![lower(false)],
            Cmp::Gt => vec![lower(true)],
        };
        Ok(Dbm::from_constraints(self.dim(), constraints).expect("indices checked"))
    }

    pub fn invariant(&self, loc: usize) -> Federation {
        self.compile(&self.locations[loc].invariant, loc).expect("model names are resolved")
    }

    pub fn guard(&self, edge: usize) -> Federation {
        let e = &self.edges[edge];
        self.compile(&e.guard, e.source).expect("model names are resolved")
    }

    /// Checks a state predicate against this model.
    pub fn resolve(&self, e: &Expr, context: &str) -> Result<(), ModelErrors> {
        let mut errors = Vec::new();
        self.check_expr(e, context, &mut errors);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ModelErrors(errors))
        }
    }
}

/// Numeric and resource settings shared by the engines.
#[derive(Clone, Debug, PartialEq)]
pub struct EngineConfig {
    /// Duration threshold of the divergence fixpoint; `None` picks the
    /// model's largest constant.
    pub c: Option<i64>,
    /// Absolute residual at which value iteration stops.
    pub epsilon: f64,
    pub max_sweeps: usize,
    /// Cap on symbolic states created by one exploration.
    pub max_states: usize,
    /// Cap on iterations of qualitative fixpoints.
    pub fixpoint_cap: usize,
    pub tpre_cap: usize,
    pub digital_state_limit: usize,
    /// Fixed cap for the property clock in the digital engine, so that state
    /// counts do not depend on the deadline. Defaults to the deadline.
    pub property_clock_cap: Option<i64>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            c: None,
            epsilon: 1e-6,
            max_sweeps: 1_000_000,
            max_states: 200_000,
            fixpoint_cap: 10_000,
            tpre_cap: crate::federation::DEFAULT_TPRE_CAP,
            digital_state_limit: 5_000_000,
            property_clock_cap: None,
        }
    }
}

impl EngineConfig {
    pub fn check(&self) -> Result<(), EngineError> {
        if matches!(self.c, Some(c) if c < 1) {
            return Err(EngineError::Config("c must be a positive integer".into()));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(EngineError::Config("epsilon must be positive".into()));
        }
        Ok(())
    }

    /// `c` or the default for `p`.
    pub fn c_for(&self, p: &Pta) -> i64 {
        self.c.unwrap_or_else(|| p.max_constant().max(1))
    }
}

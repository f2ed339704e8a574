//! Benchmark suites: runs every (model, property, engine, c, D) combination
//! and writes one CSV row per run.
//!
//! A suite is a JSON file:
//!
//! ```json
//! {
//!   "entries": [
//!     {
//!       "model": "csma1",
//!       "property": "z.Pmax [F done & z <= {D}]",
//!       "engines": ["backwards", "digital"],
//!       "deadlines": [1200, 2000],
//!       "c": [400]
//!     }
//!   ]
//! }
//! ```
//!
//! `model` is a fixture name or a path relative to the suite file. `{D}` and
//! `{lambda}` in the property are replaced by each deadline and threshold.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::backwards::check_backwards;
use crate::digital::check_digital;
use crate::model::{fixtures, parse_model, parse_property, property_optimization, EngineConfig, Optimization, Pta};
use crate::result::ProbResult;
use crate::scalar::format_rational;

pub const CSV_HEADER: &str = "model,property,engine,c,D,lambda,probability,verdict,states_max,time_max,\
states_min,time_min,iter_maxv,iter_maxu1,digital_states,error";

const TIMING_COLUMNS: [usize; 2] = [9, 11];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Backwards,
    Digital,
}

impl Engine {
    pub const ALL: [Engine; 2] = [Engine::Backwards, Engine::Digital];

    pub fn check(self, p: &Pta, prop: &crate::Property, cfg: &EngineConfig) -> Result<ProbResult, crate::EngineError> {
        match self {
            Engine::Backwards => check_backwards(p, prop, cfg),
            Engine::Digital => check_digital(p, prop, cfg),
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Backwards => "backwards",
            Engine::Digital => "digital",
        })
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "backwards" => Ok(Engine::Backwards),
            "digital" => Ok(Engine::Digital),
            _ => Err(format!("unknown engine `{s}` (expected backwards or digital)")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    /// Value-iteration residual; the engine default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub entries: Vec<SuiteEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEntry {
    pub model: String,
    pub property: String,
    #[serde(default = "all_engines")]
    pub engines: Vec<Engine>,
    /// Divergence durations. Only minimum probabilities on the backwards
    /// engine depend on it; other runs get one row with an empty `c`.
    #[serde(default)]
    pub c: Vec<i64>,
    #[serde(default)]
    pub deadlines: Vec<i64>,
    #[serde(default)]
    pub lambda: Vec<String>,
}

fn all_engines() -> Vec<Engine> {
    Engine::ALL.to_vec()
}

impl Suite {
    pub fn parse(text: &str) -> Result<Suite, String> {
        serde_json::from_str(text).map_err(|e| format!("suite: {e}"))
    }
}

/// Sweeps given on the command line replace those of every entry.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub c: Option<Vec<i64>>,
    pub deadlines: Option<Vec<i64>>,
}

/// One row of the bench output.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunRecord {
    pub model: String,
    pub property: String,
    pub engine: Option<Engine>,
    pub c: Option<i64>,
    pub deadline: Option<i64>,
    pub lambda: Option<String>,
    pub epsilon: f64,
    /// Property-clock cap for digital runs: the entry's largest deadline.
    pub digital_cap: Option<i64>,
    pub probability: Option<f64>,
    pub verdict: Option<bool>,
    pub states_max: Option<usize>,
    pub time_max: Option<Duration>,
    pub states_min: Option<usize>,
    pub time_min: Option<Duration>,
    pub iter_maxv: Option<usize>,
    pub iter_maxu1: Option<usize>,
    pub digital_states: Option<usize>,
    pub time_explore: Duration,
    pub time_qualitative: Duration,
    pub time_value_iteration: Duration,
    pub error: Option<String>,
}

impl RunRecord {
    /// Copies the outcome of a query into the row.
    pub fn fill(&mut self, opt: Optimization, r: &ProbResult) {
        let s = &r.stats;
        self.probability = Some(r.probability);
        self.verdict = r.verdict;
        self.states_max = s.states_max;
        self.states_min = s.states_min;
        match opt {
            Optimization::Max => self.time_max = Some(s.time_max),
            Optimization::Min => self.time_min = Some(s.time_min),
        }
        self.iter_maxv = s.iter_maxv;
        self.iter_maxu1 = s.iter_maxu1;
        self.digital_states = s.digital_states;
        self.time_explore = s.time_explore;
        self.time_qualitative = s.time_qualitative;
        self.time_value_iteration = s.time_value_iteration;
    }

    pub fn csv_fields(&self) -> [String; 16] {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(T::to_string).unwrap_or_default()
        }
        let secs = |d: &Option<Duration>| d.map(|d| format!("{:.3}", d.as_secs_f64())).unwrap_or_default();
        [
            self.model.clone(),
            self.property.clone(),
            opt(&self.engine),
            opt(&self.c),
            opt(&self.deadline),
            opt(&self.lambda),
            opt(&self.probability),
            opt(&self.verdict),
            opt(&self.states_max),
            secs(&self.time_max),
            opt(&self.states_min),
            secs(&self.time_min),
            opt(&self.iter_maxv),
            opt(&self.iter_maxu1),
            opt(&self.digital_states),
            opt(&self.error),
        ]
    }
}

fn load_model(name: &str, base: &Path) -> Result<Pta, String> {
    if let Some(p) = fixtures::by_name(name) {
        return Ok(p);
    }
    let path: PathBuf = base.join(name);
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_model(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// The runs of `suite` in output order, without executing them.
pub fn plan(suite: &Suite, overrides: &Overrides) -> Vec<RunRecord> {
    let epsilon = suite.epsilon.unwrap_or(EngineConfig::default().epsilon);
    let mut rows = Vec::new();
    for entry in &suite.entries {
        let deadlines: Vec<Option<i64>> = match overrides.deadlines.as_ref().unwrap_or(&entry.deadlines) {
            d if d.is_empty() || !entry.property.contains("{D}") => vec![None],
            d => d.iter().copied().map(Some).collect(),
        };
        let lambdas: Vec<Option<String>> = match &entry.lambda {
            l if l.is_empty() || !entry.property.contains("{lambda}") => vec![None],
            l => l.iter().cloned().map(Some).collect(),
        };
        let cs = overrides.c.as_ref().unwrap_or(&entry.c);
        for &engine in &entry.engines {
            for d in &deadlines {
                for l in &lambdas {
                    let mut text = entry.property.clone();
                    if let Some(d) = d {
                        text = text.replace("{D}", &d.to_string());
                    }
                    if let Some(l) = l {
                        text = text.replace("{lambda}", l);
                    }
                    let base = RunRecord {
                        model: entry.model.clone(),
                        property: text,
                        engine: Some(engine),
                        deadline: *d,
                        epsilon,
                        digital_cap: deadlines.iter().flatten().max().copied(),
                        ..RunRecord::default()
                    };
                    let uses_c = engine == Engine::Backwards && is_min(&base.property);
                    if uses_c && !cs.is_empty() {
                        rows.extend(cs.iter().map(|&c| RunRecord { c: Some(c), ..base.clone() }));
                    } else {
                        rows.push(base);
                    }
                }
            }
        }
    }
    rows
}

fn is_min(text: &str) -> bool {
    property_optimization(text) == Some(Optimization::Min)
}

/// Executes one planned run; failures are recorded in the `error` column.
pub fn execute(row: &mut RunRecord, base: &Path) {
    let result = (|| -> Result<(), String> {
        let p = load_model(&row.model, base)?;
        let prop = parse_property(&row.property, &p).map_err(|e| e.to_string())?;
        row.lambda = prop.threshold.as_ref().map(|t| format_rational(&t.value));
        row.deadline = row.deadline.or(prop.bound.as_ref().map(|b| b.value));
        let cfg = EngineConfig {
            c: row.c,
            epsilon: row.epsilon,
            property_clock_cap: row.digital_cap,
            ..EngineConfig::default()
        };
        let engine = row.engine.expect("planned row");
        let r = engine.check(&p, &prop, &cfg).map_err(|e| e.to_string())?;
        if row.c.is_none() {
            row.c = r.stats.c;
        }
        row.fill(prop.opt, &r);
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e);
    }
}

/// Runs a whole suite. Digital runs of one entry share the property-clock
/// cap of the entry's largest deadline, so their state counts agree.
pub fn run_suite(suite: &Suite, base: &Path, overrides: &Overrides) -> Vec<RunRecord> {
    let mut rows = plan(suite, overrides);
    for row in &mut rows {
        execute(row, base);
    }
    rows
}

pub fn to_csv(rows: &[RunRecord]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in rows {
        w.write_record(row.csv_fields()).expect("writing to memory");
    }
    let body = String::from_utf8(w.into_inner().expect("writing to memory")).expect("fields are UTF-8");
    format!("{CSV_HEADER}\n{body}")
}

/// Replaces the timing columns of a CSV produced by [`to_csv`] with `*`.
pub fn mask_timing(csv_text: &str) -> String {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(csv_text.as_bytes());
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    for (i, record) in r.records().enumerate() {
        let record = record.expect("well-formed CSV");
        let fields: Vec<&str> = record
            .iter()
            .enumerate()
            .map(|(k, f)| if i > 0 && TIMING_COLUMNS.contains(&k) && !f.is_empty() { "*" } else { f })
            .collect();
        w.write_record(fields).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("fields are UTF-8")
}

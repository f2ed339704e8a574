//! JSON model files.

use serde::{Deserialize, Serialize};

use super::{EdgeSpec, Pta, PtaSpec};
use crate::error::{ModelError, ModelErrors};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    clocks: Vec<String>,
    initial: String,
    locations: Vec<LocationFile>,
    #[serde(default)]
    edges: Vec<EdgeFile>,
}

fn default_true() -> String {
    "true".into()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocationFile {
    name: String,
    #[serde(default = "default_true")]
    invariant: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeFile {
    source: String,
    #[serde(default)]
    action: String,
    #[serde(default = "default_true")]
    guard: String,
    branches: Vec<BranchFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Prob {
    Text(String),
    Number(serde_json::Number),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchFile {
    prob: Prob,
    #[serde(default)]
    resets: Vec<String>,
    target: String,
}

pub(crate) fn syntax_error(e: serde_json::Error) -> ModelError {
    ModelError::Syntax { line: e.line(), column: e.column(), message: e.to_string() }
}

/// Reads a model from its JSON text.
pub fn parse_model(text: &str) -> Result<Pta, ModelErrors> {
    let file: ModelFile = serde_json::from_str(text).map_err(syntax_error)?;
    let spec = PtaSpec {
        clocks: file.clocks,
        initial: file.initial,
        locations: file.locations.into_iter().map(|l| (l.name, l.invariant)).collect(),
        edges: file
            .edges
            .into_iter()
            .map(|e| EdgeSpec {
                source: e.source,
                action: e.action,
                guard: e.guard,
                branches: e
                    .branches
                    .into_iter()
                    .map(|b| {
                        let p = match b.prob {
                            Prob::Text(t) => t,
                            Prob::Number(n) => n.to_string(),
                        };
                        (p, b.resets, b.target)
                    })
                    .collect(),
            })
            .collect(),
    };
    spec.build()
}

/// Renders a model as pretty-printed JSON that [`parse_model`] reads back.
pub fn render_model(p: &Pta) -> String {
    let loc = |i: usize| p.locations[i].name.clone();
    let file = ModelFile {
        clocks: p.clocks.clone(),
        initial: loc(p.initial),
        locations: p
            .locations
            .iter()
            .map(|l| LocationFile { name: l.name.clone(), invariant: l.invariant.to_string() })
            .collect(),
        edges: p
            .edges
            .iter()
            .map(|e| EdgeFile {
                source: loc(e.source),
                action: e.action.clone(),
                guard: e.guard.to_string(),
                branches: e
                    .branches
                    .iter()
                    .map(|b| BranchFile {
                        prob: Prob::Text(b.prob.to_string()),
                        resets: b.resets.iter().map(|&c| p.clocks[c - 1].clone()).collect(),
                        target: loc(b.target),
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("model serialises");
    s.push('\n');
    s
}

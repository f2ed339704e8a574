//! Probabilistic until properties.
//!
//! Besides JSON, properties have a compact text form:
//!
//! ```text
//! property := [clock "."] [("Pmax" | "Pmin" | "P") [cmp number]] path
//! path     := "[" until "]" | "(" until ")" | until
//! until    := ("F" | "<>" | "◇") expr | expr "U" expr
//! ```
//!
//! A time bound is written as a top-level conjunct `z <= D` (or `z < D`) of
//! the right-hand side, where `z` is not a clock of the model. The optimisation
//! defaults to `Pmax`.

use std::fmt;

use num_rational::Rational64;
use serde::Deserialize;

use super::expr::{lex, Parser, Tok};
use super::{Cmp, Constraint, Expr, Pta};
use crate::error::{ModelError, ModelErrors};
use crate::scalar::{format_rational, parse_rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Optimization {
    Max,
    Min,
}

/// `clock < value` or `clock <= value` on a fresh property clock.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeBound {
    pub clock: String,
    pub strict: bool,
    pub value: i64,
}

impl TimeBound {
    pub fn constraint(&self) -> Expr {
        let cmp = if self.strict { Cmp::Lt } else { Cmp::Le };
        Expr::Constraint(Constraint::simple(&self.clock, cmp, self.value))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Threshold {
    pub cmp: Cmp,
    pub value: Rational64,
}

impl Threshold {
    /// Compares `p` against the bound. Non-strict comparisons accept values
    /// within `tolerance` of the bound; strict ones demand a margin larger
    /// than `tolerance`.
    pub fn holds(&self, p: f64, tolerance: f64) -> bool {
        let l = *self.value.numer() as f64 / *self.value.denom() as f64;
        match self.cmp {
            Cmp::Lt => p < l - tolerance,
            Cmp::Le => p <= l + tolerance,
            Cmp::Ge => p >= l - tolerance,
            Cmp::Gt => p > l + tolerance,
            Cmp::Eq => (p - l).abs() <= tolerance,
        }
    }
}

/// `P_opt(left U right)`, optionally time-bounded and compared to a
/// threshold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Property {
    pub opt: Optimization,
    pub left: Expr,
    pub right: Expr,
    pub bound: Option<TimeBound>,
    pub threshold: Option<Threshold>,
}

impl Property {
    pub fn eventually(opt: Optimization, right: Expr) -> Property {
        Property { opt, left: Expr::True, right, bound: None, threshold: None }
    }

    /// States that must never be visited before reaching the target.
    pub fn avoid(&self) -> Expr {
        match &self.left {
            Expr::True => Expr::False,
            l => Expr::not(l.clone()),
        }
    }

    /// The right-hand side including the time bound, if any.
    pub fn target(&self) -> Expr {
        match &self.bound {
            Some(b) => Expr::and(self.right.clone(), b.constraint()),
            None => self.right.clone(),
        }
    }

    pub fn with_deadline(&self, value: i64) -> Property {
        let mut p = self.clone();
        if let Some(b) = &mut p.bound {
            b.value = value;
        }
        p
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(b) = &self.bound {
            write!(f, "{}.", b.clock)?;
        }
        f.write_str(match self.opt {
            Optimization::Max => "Pmax",
            Optimization::Min => "Pmin",
        })?;
        if let Some(t) = &self.threshold {
            write!(f, "{}{}", t.cmp, format_rational(&t.value))?;
        }
        let right = self.target();
        match &self.left {
            Expr::True => write!(f, " [F {right}]"),
            l => write!(f, " [({l}) U ({right})]"),
        }
    }
}

fn expression_error(context: &str, (column, message): (usize, String)) -> ModelError {
    ModelError::Expression { context: context.to_string(), column, message }
}

/// Parses a property in JSON or compact form and resolves it against `p`.
pub fn parse_property(text: &str, p: &Pta) -> Result<Property, ModelErrors> {
    let prop = if text.trim_start().starts_with('{') { parse_json(text, p)? } else { parse_compact(text, p)? };
    if let Some(b) = &prop.bound {
        if p.clock_index(&b.clock).is_some() || p.location_index(&b.clock).is_some() {
            return Err(ModelError::Invalid(format!("property clock `{}` clashes with a model name", b.clock)).into());
        }
    }
    let mut errors = Vec::new();
    p.check_expr(&prop.left, "left side of property", &mut errors);
    p.check_expr(&prop.right, "right side of property", &mut errors);
    if errors.is_empty() {
        Ok(prop)
    } else {
        Err(ModelErrors(errors))
    }
}

/// The optimisation a property asks for, read without a model. `None` when
/// the text does not parse that far.
pub fn property_optimization(text: &str) -> Option<Optimization> {
    if text.trim_start().starts_with('{') {
        let v: serde_json::Value = serde_json::from_str(text).ok()?;
        return match v.get("opt")?.as_str()? {
            "max" => Some(Optimization::Max),
            "min" => Some(Optimization::Min),
            _ => None,
        };
    }
    let tokens = lex(text).ok()?;
    let mut parser = Parser { tokens: &tokens, pos: 0, end: text.chars().count() + 1 };
    header(&mut parser).ok().map(|h| h.0)
}

fn parse_compact(text: &str, p: &Pta) -> Result<Property, ModelError> {
    let context = "property";
    let tokens = lex(text).map_err(|e| expression_error(context, e))?;
    let mut parser = Parser { tokens: &tokens, pos: 0, end: text.chars().count() + 1 };
    let (opt, clock, threshold) = header(&mut parser).map_err(|e| expression_error(context, e))?;
    let start = parser.pos;
    let (left, right) = match parser.peek() {
        Some(Tok::LParen) | Some(Tok::LBracket) => {
            let close = if parser.peek() == Some(&Tok::LParen) { Tok::RParen } else { Tok::RBracket };
            parser.pos += 1;
            let wrapped = until(&mut parser).and_then(|r| {
                parser.expect(close.clone(), "closing bracket")?;
                parser.finish()?;
                Ok(r)
            });
            match wrapped {
                Ok(r) => r,
                Err(e) if close == Tok::RBracket => return Err(expression_error(context, e)),
                Err(_) => {
                    parser.pos = start;
                    let r = until(&mut parser).map_err(|e| expression_error(context, e))?;
                    parser.finish().map_err(|e| expression_error(context, e))?;
                    r
                }
            }
        }
        _ => {
            let r = until(&mut parser).map_err(|e| expression_error(context, e))?;
            parser.finish().map_err(|e| expression_error(context, e))?;
            r
        }
    };
    let (right, bound) = extract_bound(right, clock.as_deref(), p)?;
    Ok(Property { opt, left, right, bound, threshold })
}

type Header = (Optimization, Option<String>, Option<Threshold>);

fn header(parser: &mut Parser<'_>) -> Result<Header, (usize, String)> {
    let mut clock = None;
    if let (Some(Tok::Ident(z)), Some(Tok::Dot)) = (parser.peek(), parser.peek_at(1)) {
        clock = Some(z.clone());
        parser.pos += 2;
    }
    let bare = matches!(parser.peek(), Some(Tok::Ident(w)) if w == "P");
    let opt = match parser.peek() {
        Some(Tok::Ident(w)) if w == "Pmax" || w == "P" => Optimization::Max,
        Some(Tok::Ident(w)) if w == "Pmin" => Optimization::Min,
        _ if clock.is_some() => return parser.unexpected("`Pmax` or `Pmin`"),
        _ => return Ok((Optimization::Max, None, None)),
    };
    parser.pos += 1;
    let threshold = match parser.peek() {
        Some(Tok::Cmp(Cmp::Eq)) => return parser.error("thresholds compare with <, <=, >= or >"),
        Some(Tok::Cmp(c)) => {
            let cmp = *c;
            parser.pos += 1;
            match parser.peek() {
                Some(Tok::Num(n)) => match parse_rational(n) {
                    Some(v) if v >= Rational64::from_integer(0) && v <= Rational64::from_integer(1) => {
                        parser.pos += 1;
                        Some(Threshold { cmp, value: v })
                    }
                    _ => return parser.error(format!("`{n}` is not a probability")),
                },
                _ => return parser.unexpected("a probability"),
            }
        }
        _ if bare => return parser.unexpected("a threshold after `P`"),
        _ => None,
    };
    // A bare `P` must hold for every strategy: lower bounds are checked
    // against the minimum, upper bounds against the maximum.
    let opt = match &threshold {
        Some(t) if bare && matches!(t.cmp, Cmp::Ge | Cmp::Gt) => Optimization::Min,
        _ => opt,
    };
    Ok((opt, clock, threshold))
}

fn until(parser: &mut Parser<'_>) -> Result<(Expr, Expr), (usize, String)> {
    match parser.peek() {
        Some(Tok::Diamond) => {
            parser.pos += 1;
            return Ok((Expr::True, parser.expr()?));
        }
        Some(Tok::Ident(f)) if f == "F" => {
            parser.pos += 1;
            return Ok((Expr::True, parser.expr()?));
        }
        _ => {}
    }
    let left = parser.expr()?;
    match parser.peek() {
        Some(Tok::Ident(u)) if u == "U" => parser.pos += 1,
        _ => return parser.unexpected("`U`"),
    }
    Ok((left, parser.expr()?))
}

/// Splits a top-level `z <= D` conjunct on a non-model clock off `right`.
fn extract_bound(right: Expr, named: Option<&str>, p: &Pta) -> Result<(Expr, Option<TimeBound>), ModelError> {
    let mut bound = None;
    let mut rest = Vec::new();
    for part in right.conjuncts() {
        if let Expr::Constraint(c) = part {
            let fresh = p.clock_index(&c.clock).is_none() && p.location_index(&c.clock).is_none();
            let wanted = named.map_or(fresh, |z| z == c.clock);
            if wanted && c.minus.is_none() && matches!(c.cmp, Cmp::Le | Cmp::Lt) {
                if bound.is_some() {
                    return Err(ModelError::Invalid(format!("property clock `{}` bounded twice", c.clock)));
                }
                bound = Some(TimeBound { clock: c.clock.clone(), strict: c.cmp == Cmp::Lt, value: c.value });
                continue;
            }
        }
        rest.push(part.clone());
    }
    if let (Some(z), None) = (named, &bound) {
        return Err(ModelError::Invalid(format!("property clock `{z}` needs a conjunct `{z} <= D` in the target")));
    }
    Ok((Expr::conjoin(rest), bound))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PropertyFile {
    opt: String,
    until: Option<UntilFile>,
    eventually: Option<String>,
    bound: Option<BoundFile>,
    threshold: Option<ThresholdFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UntilFile {
    #[serde(default = "true_text")]
    left: String,
    right: String,
}

fn true_text() -> String {
    "true".into()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundFile {
    clock: String,
    op: String,
    value: i64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ThresholdFile {
    op: String,
    value: serde_json::Value,
}

fn cmp_from(text: &str) -> Option<Cmp> {
    match lex(text).ok()?.as_slice() {
        [(_, Tok::Cmp(c))] => Some(*c),
        _ => None,
    }
}

fn parse_json(text: &str, _p: &Pta) -> Result<Property, ModelError> {
    let f: PropertyFile = serde_json::from_str(text).map_err(super::json::syntax_error)?;
    let opt = match f.opt.as_str() {
        "max" => Optimization::Max,
        "min" => Optimization::Min,
        o => return Err(ModelError::Invalid(format!("`opt` must be \"max\" or \"min\", not `{o}`"))),
    };
    let (left, right) = match (f.until, f.eventually) {
        (Some(u), None) => (u.left, u.right),
        (None, Some(e)) => ("true".to_string(), e),
        _ => return Err(ModelError::Invalid("a property needs exactly one of `until` and `eventually`".into())),
    };
    let left = Expr::parse(&left).map_err(|e| expression_error("left side of property", e))?;
    let right = Expr::parse(&right).map_err(|e| expression_error("right side of property", e))?;
    let bound = match f.bound {
        Some(b) => {
            let strict = match cmp_from(&b.op) {
                Some(Cmp::Le) => false,
                Some(Cmp::Lt) => true,
                _ => return Err(ModelError::Invalid(format!("time bound operator must be <= or <, not `{}`", b.op))),
            };
            if b.value < 0 {
                return Err(ModelError::Invalid("time bound must be non-negative".into()));
            }
            Some(TimeBound { clock: b.clock, strict, value: b.value })
        }
        None => None,
    };
    let threshold = match f.threshold {
        Some(t) => {
            let cmp = match cmp_from(&t.op) {
                Some(c) if c != Cmp::Eq => c,
                _ => return Err(ModelError::Invalid(format!("threshold operator `{}` is not one of <, <=, >=, >", t.op))),
            };
            let text = match &t.value {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                v => return Err(ModelError::Invalid(format!("threshold value {v} is not a probability"))),
            };
            let value = parse_rational(&text)
                .filter(|v| *v >= Rational64::from_integer(0) && *v <= Rational64::from_integer(1))
                .ok_or_else(|| ModelError::Invalid(format!("threshold value `{text}` is not a probability")))?;
            Some(Threshold { cmp, value })
        }
        None => None,
    };
    Ok(Property { opt, left, right, bound, threshold })
}

/// Adds the property clock to the model and moves the time bound into the
/// target. Properties without a bound are returned unchanged.
pub fn inject_property_clock(p: &Pta, prop: &Property) -> Result<(Pta, Property), ModelError> {
    match &prop.bound {
        None => Ok((p.clone(), prop.clone())),
        Some(b) => {
            let model = p.with_clock(&b.clock)?;
            let mut out = prop.clone();
            out.right = prop.target();
            out.bound = None;
            Ok((model, out))
        }
    }
}

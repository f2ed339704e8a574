//! Numeric scalars used for clock valuations and MDP values.
//!
//! Zones themselves are exact integers; only the quantities evaluated against
//! them (valuations, probabilities) are generic.

use num_rational::Rational64;
use num_traits::{FromPrimitive, Num, Signed};

/// A numeric type probabilities and valuations can be computed in.
///
/// Implemented for `f32`, `f64` and exact `Rational64`.
pub trait Scalar: Num + Signed + PartialOrd + Clone + FromPrimitive + std::fmt::Debug {
    /// Converts an exact probability into this scalar.
    fn from_ratio(r: &Rational64) -> Self;

    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn from_ratio(r: &Rational64) -> Self {
        *r.numer() as f64 / *r.denom() as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn from_ratio(r: &Rational64) -> Self {
        (*r.numer() as f64 / *r.denom() as f64) as f32
    }

    fn to_f64(&self) -> f64 {
        f64::from(*self)
    }
}

impl Scalar for Rational64 {
    fn from_ratio(r: &Rational64) -> Self {
        *r
    }

    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

/// Parses a probability or threshold written as a decimal (`0.9`) or a
/// fraction (`9/10`).
pub fn parse_rational(text: &str) -> Option<Rational64> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: i64 = n.trim().parse().ok()?;
        let d: i64 = d.trim().parse().ok()?;
        if d == 0 {
            return None;
        }
        return Some(Rational64::new(n, d));
    }
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    if frac_part.len() > 15 {
        return None;
    }
    let denom = 10i64.checked_pow(frac_part.len() as u32)?;
    let int: i64 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
    let frac: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().ok()? };
    let numer = int.checked_mul(denom)?.checked_add(frac)?;
    let r = Rational64::new(numer, denom);
    Some(if negative { -r } else { r })
}

/// Formats `r` as a terminating decimal when it is one, else as `a/b`.
pub fn format_rational(r: &Rational64) -> String {
    let (mut n, d) = (*r.numer(), *r.denom());
    let mut d2 = d;
    let mut digits = 0u32;
    for p in [2, 5] {
        while d2 % p == 0 {
            d2 /= p;
        }
    }
    if d2 != 1 {
        return format!("{n}/{d}");
    }
    let mut scale = 1i64;
    while scale % d != 0 {
        scale *= 10;
        digits += 1;
    }
    let negative = n < 0;
    n = n.abs() * (scale / d);
    let int = n / scale;
    let frac = n % scale;
    let sign = if negative { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac:0width$}", width = digits as usize)
    }
}

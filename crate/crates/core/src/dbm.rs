//! Difference bound matrices over exact integer constants.
//!
//! Entry `(i, j)` bounds `x_i - x_j`; index 0 is the reference clock that is
//! always zero, so row 0 holds (negated) lower bounds and column 0 holds upper
//! bounds. Every [`Dbm`] handed out by this module is closed (canonical): all
//! entries are tight and emptiness has been decided.

use std::fmt;

use crate::error::ZoneError;
use crate::scalar::Scalar;

/// A bound `(d, <)` or `(d, <=)` or infinity, packed into one integer.
///
/// The encoding is `2d` for `< d` and `2d + 1` for `<= d`, so the integer
/// order is the bound order: `(d,<) < (d,<=) < (d+1,<)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bound(i64);

impl Bound {
    pub const INFINITY: Bound = Bound(i64::MAX);
    /// `<= 0`
    pub const LE_ZERO: Bound = Bound(1);
    /// `< 0`
    pub const LT_ZERO: Bound = Bound(0);

    pub fn new(value: i64, strict: bool) -> Bound {
        Bound(value * 2 + i64::from(!strict))
    }

    pub fn le(value: i64) -> Bound {
        Bound::new(value, false)
    }

    pub fn lt(value: i64) -> Bound {
        Bound::new(value, true)
    }

    pub fn is_infinite(self) -> bool {
        self.0 == i64::MAX
    }

    pub fn is_finite(self) -> bool {
        !self.is_infinite()
    }

    /// The constant `d`, or `None` for infinity.
    pub fn value(self) -> Option<i64> {
        self.is_finite().then_some(self.0 >> 1)
    }

    pub fn is_strict(self) -> bool {
        self.is_finite() && self.0 & 1 == 0
    }

    /// Sum of two bounds; strict if either summand is.
    #[allow(clippy::should_implement_trait)]
    pub fn add(self, other: Bound) -> Bound {
        if self.is_infinite() || other.is_infinite() {
            return Bound::INFINITY;
        }
        Bound(((self.0 >> 1) + (other.0 >> 1)) * 2 + (self.0 & other.0 & 1))
    }

    /// The bound of the complementary constraint on the transposed entry:
    /// `not (x_i - x_j <= d)` is `x_j - x_i < -d`.
    ///
    /// # Panics
    /// On infinity, whose complement is empty.
    pub fn complement(self) -> Bound {
        assert!(self.is_finite(), "cannot complement an infinite bound");
        Bound(1 - self.0)
    }

    /// Same constant, non-strict.
    pub fn weaken(self) -> Bound {
        if self.is_infinite() {
            self
        } else {
            Bound(self.0 | 1)
        }
    }

    /// Same constant, strict.
    pub fn strengthen(self) -> Bound {
        if self.is_infinite() {
            self
        } else {
            Bound(self.0 & !1)
        }
    }
}

impl fmt::Debug for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            None => write!(f, "inf"),
            Some(d) if self.is_strict() => write!(f, "<{d}"),
            Some(d) => write!(f, "<={d}"),
        }
    }
}

/// A clock valuation, one non-negative value per clock (the reference clock
/// is implicit).
#[derive(Clone, Debug, PartialEq)]
pub struct Valuation<T> {
    values: Vec<T>,
}

impl<T: Scalar> Valuation<T> {
    pub fn new(values: Vec<T>) -> Result<Self, ZoneError> {
        if let Some(pos) = values.iter().position(|v| *v < T::zero()) {
            return Err(ZoneError::NegativeValuation(pos + 1));
        }
        Ok(Valuation { values })
    }

    /// The valuation assigning zero to `clocks` clocks.
    pub fn zero(clocks: usize) -> Self {
        Valuation { values: vec![T::zero(); clocks] }
    }

    pub fn clocks(&self) -> usize {
        self.values.len()
    }

    /// Value of DBM index `i` (0 is the reference clock).
    pub fn get(&self, i: usize) -> T {
        if i == 0 {
            T::zero()
        } else {
            self.values[i - 1].clone()
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `v + t`
    pub fn delayed(&self, t: &T) -> Self {
        Valuation { values: self.values.iter().map(|v| v.clone() + t.clone()).collect() }
    }

    /// `v[X := 0]` for DBM clock indices in `clocks`.
    pub fn reset(&self, clocks: &[usize]) -> Self {
        let mut values = self.values.clone();
        for &c in clocks {
            values[c - 1] = T::zero();
        }
        Valuation { values }
    }
}

/// A closed difference bound matrix describing one convex zone.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dbm {
    dim: usize,
    m: Vec<Bound>,
}

impl Dbm {
    /// All valuations with every clock non-negative.
    pub fn universe(dim: usize) -> Result<Dbm, ZoneError> {
        if dim == 0 {
            return Err(ZoneError::ZeroDimension);
        }
        Ok(Self::universe_unchecked(dim))
    }

    pub(crate) fn universe_unchecked(dim: usize) -> Dbm {
        let mut m = vec![Bound::INFINITY; dim * dim];
        for j in 0..dim {
            m[j] = Bound::LE_ZERO;
            m[j * dim + j] = Bound::LE_ZERO;
        }
        Dbm { dim, m }
    }

    /// The canonical empty zone.
    pub fn empty(dim: usize) -> Dbm {
        assert!(dim > 0, "a DBM needs at least the reference clock");
        Dbm { dim, m: vec![Bound::LT_ZERO; dim * dim] }
    }

    /// The single valuation with all clocks zero.
    pub fn zero(dim: usize) -> Dbm {
        assert!(dim > 0, "a DBM needs at least the reference clock");
        Dbm { dim, m: vec![Bound::LE_ZERO; dim * dim] }
    }

    /// Builds a zone from an arbitrary row-major matrix and closes it.
    ///
    /// The diagonal is forced to `<= 0` and row 0 to at most `<= 0` before
    /// closing, so any matrix denotes a subset of the non-negative orthant.
    pub fn from_matrix(dim: usize, entries: Vec<Bound>) -> Result<Dbm, ZoneError> {
        if dim == 0 {
            return Err(ZoneError::ZeroDimension);
        }
        if entries.len() != dim * dim {
            return Err(ZoneError::MatrixSize { dim, len: entries.len() });
        }
        let mut d = Dbm { dim, m: entries };
        for i in 0..dim {
            let k = i * dim + i;
            d.m[k] = d.m[k].min(Bound::LE_ZERO);
            d.m[i] = d.m[i].min(Bound::LE_ZERO);
        }
        d.close();
        Ok(d)
    }

    /// Builds the zone `universe ∧ x_i - x_j ≲ b` for each listed constraint.
    pub fn from_constraints(
        dim: usize,
        constraints: impl IntoIterator<Item = (usize, usize, Bound)>,
    ) -> Result<Dbm, ZoneError> {
        let mut d = Dbm::universe(dim)?;
        for (i, j, b) in constraints {
            if i >= dim || j >= dim {
                return Err(ZoneError::ClockOutOfRange { clock: i.max(j), dim });
            }
            if i != j {
                let k = i * dim + j;
                d.m[k] = d.m[k].min(b);
            } else if b < Bound::LE_ZERO {
                return Ok(Dbm::empty(dim));
            }
        }
        d.close();
        Ok(d)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of real clocks (`dim - 1`).
    pub fn clocks(&self) -> usize {
        self.dim - 1
    }

    pub fn get(&self, i: usize, j: usize) -> Bound {
        self.m[i * self.dim + j]
    }

    pub fn is_empty(&self) -> bool {
        self.m[0] < Bound::LE_ZERO
    }

    pub fn is_universe(&self) -> bool {
        *self == Dbm::universe_unchecked(self.dim)
    }

    /// Floyd–Warshall closure; normalises to the canonical empty matrix on a
    /// negative cycle.
    fn close(&mut self) {
        let n = self.dim;
        for k in 0..n {
            for i in 0..n {
                let ik = self.m[i * n + k];
                if ik.is_infinite() {
                    continue;
                }
                for j in 0..n {
                    let c = ik.add(self.m[k * n + j]);
                    if c < self.m[i * n + j] {
                        self.m[i * n + j] = c;
                    }
                }
            }
            if self.m[k * n + k] < Bound::LE_ZERO {
                *self = Dbm::empty(n);
                return;
            }
        }
        if (0..n).any(|i| self.m[i * n + i] < Bound::LE_ZERO) {
            *self = Dbm::empty(n);
        }
    }

    /// Tightens entry `(i, j)` to `b` and restores closure in O(dim²).
    fn constrain_in_place(&mut self, i: usize, j: usize, b: Bound) {
        let n = self.dim;
        if self.is_empty() || b >= self.m[i * n + j] {
            return;
        }
        if b.add(self.m[j * n + i]) < Bound::LE_ZERO {
            *self = Dbm::empty(n);
            return;
        }
        self.m[i * n + j] = b;
        for a in 0..n {
            let ai = self.m[a * n + i];
            if ai.is_infinite() {
                continue;
            }
            let aij = ai.add(b);
            for c in 0..n {
                let via = aij.add(self.m[j * n + c]);
                if via < self.m[a * n + c] {
                    self.m[a * n + c] = via;
                }
            }
        }
    }

    /// `self ∧ x_i - x_j ≲ b`.
    ///
    /// # Panics
    /// If `i == j` or either index is out of range.
    pub fn constrain(&self, i: usize, j: usize, b: Bound) -> Dbm {
        assert!(i < self.dim && j < self.dim && i != j, "invalid constraint indices ({i}, {j})");
        let mut d = self.clone();
        d.constrain_in_place(i, j, b);
        d
    }

    /// Entrywise minimum, re-closed.
    ///
    /// # Panics
    /// On a dimension mismatch.
    pub fn intersect(&self, other: &Dbm) -> Dbm {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        if self.is_empty() || other.is_empty() {
            return Dbm::empty(self.dim);
        }
        let mut d = self.clone();
        let mut changed = false;
        for (a, b) in d.m.iter_mut().zip(&other.m) {
            if *b < *a {
                *a = *b;
                changed = true;
            }
        }
        if changed {
            d.close();
        }
        d
    }

    /// Whether the intersection is non-empty, without materialising it.
    pub fn intersects(&self, other: &Dbm) -> bool {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        if self.is_empty() || other.is_empty() {
            return false;
        }
        let n = self.dim;
        // Cheap necessary check on pairs of entries before the full closure.
        for i in 0..n {
            for j in 0..n {
                if self.m[i * n + j].add(other.m[j * n + i]) < Bound::LE_ZERO {
                    return false;
                }
            }
        }
        !self.intersect(other).is_empty()
    }

    /// Time predecessors: `{ v >= 0 | exists t >= 0 : v + t in self }`.
    pub fn down(&self) -> Dbm {
        if self.is_empty() {
            return self.clone();
        }
        let mut d = self.clone();
        for j in 1..d.dim {
            d.m[j] = Bound::LE_ZERO;
        }
        d.close();
        d
    }

    /// Strict time predecessors: `{ v >= 0 | exists t > 0 : v + t in self }`.
    pub fn down_strict(&self) -> Dbm {
        if self.is_empty() {
            return self.clone();
        }
        let n = self.dim;
        let mut d = self.clone();
        for j in 1..n {
            d.m[j] = Bound::LE_ZERO;
            d.m[j * n] = d.m[j * n].strengthen();
        }
        d.close();
        d
    }

    /// Removes every constraint on clock `c`: `{ v | exists r >= 0 : v[c := r] in self }`.
    pub fn free(&self, c: usize) -> Result<Dbm, ZoneError> {
        if c == 0 {
            return Err(ZoneError::ReferenceClock);
        }
        if c >= self.dim {
            return Err(ZoneError::ClockOutOfRange { clock: c, dim: self.dim });
        }
        Ok(self.free_unchecked(c))
    }

    fn free_unchecked(&self, c: usize) -> Dbm {
        if self.is_empty() {
            return self.clone();
        }
        let n = self.dim;
        let mut d = self.clone();
        for i in 0..n {
            if i != c {
                d.m[c * n + i] = Bound::INFINITY;
                d.m[i * n + c] = d.m[i * n];
            }
        }
        d
    }

    /// `{ v >= 0 | v[X := 0] in self }`.
    pub fn backwards_reset(&self, clocks: &[usize]) -> Result<Dbm, ZoneError> {
        let mut d = self.clone();
        for &c in clocks {
            if c == 0 {
                return Err(ZoneError::ReferenceClock);
            }
            if c >= self.dim {
                return Err(ZoneError::ClockOutOfRange { clock: c, dim: self.dim });
            }
            d.constrain_in_place(c, 0, Bound::LE_ZERO);
        }
        for &c in clocks {
            d = d.free_unchecked(c);
        }
        Ok(d)
    }

    /// Whether every valuation of `other` is in `self`.
    pub fn includes(&self, other: &Dbm) -> bool {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        if other.is_empty() {
            return true;
        }
        if self.is_empty() {
            return false;
        }
        other.m.iter().zip(&self.m).all(|(o, s)| o <= s)
    }

    /// Membership of an exact valuation.
    pub fn contains<T: Scalar>(&self, v: &Valuation<T>) -> Result<bool, ZoneError> {
        if v.clocks() != self.clocks() {
            return Err(ZoneError::ValuationSize { expected: self.clocks(), got: v.clocks() });
        }
        Ok(self.contains_unchecked(v))
    }

    pub(crate) fn contains_unchecked<T: Scalar>(&self, v: &Valuation<T>) -> bool {
        if self.is_empty() {
            return false;
        }
        let n = self.dim;
        for i in 0..n {
            for j in 0..n {
                let b = self.m[i * n + j];
                let Some(d) = b.value() else { continue };
                let diff = v.get(i) - v.get(j);
                let d = T::from_i64(d).expect("bound constant fits the scalar type");
                if (b.is_strict() && diff >= d) || diff > d {
                    return false;
                }
            }
        }
        true
    }

    /// Whether the all-zero valuation is in the zone.
    pub fn contains_origin(&self) -> bool {
        !self.is_empty() && self.m.iter().all(|b| *b >= Bound::LE_ZERO)
    }

    /// Appends `extra` unconstrained clocks.
    pub fn extend(&self, extra: usize) -> Dbm {
        if extra == 0 {
            return self.clone();
        }
        let n = self.dim + extra;
        if self.is_empty() {
            return Dbm::empty(n);
        }
        let mut d = Dbm::universe_unchecked(n);
        for i in 0..self.dim {
            for j in 0..self.dim {
                d.m[i * n + j] = self.m[i * self.dim + j];
            }
        }
        // New clocks are only known to be non-negative; every difference with
        // an old clock is bounded by that clock's upper bound.
        for i in 0..self.dim {
            for k in self.dim..n {
                d.m[i * n + k] = self.m[i * self.dim];
            }
        }
        d
    }

    /// Projects out clock `c`, shrinking the dimension by one.
    pub fn remove_clock(&self, c: usize) -> Result<Dbm, ZoneError> {
        if c == 0 {
            return Err(ZoneError::ReferenceClock);
        }
        if c >= self.dim {
            return Err(ZoneError::ClockOutOfRange { clock: c, dim: self.dim });
        }
        let n = self.dim - 1;
        if self.is_empty() {
            return Ok(Dbm::empty(n));
        }
        let keep: Vec<usize> = (0..self.dim).filter(|&i| i != c).collect();
        let mut m = Vec::with_capacity(n * n);
        for &i in &keep {
            for &j in &keep {
                m.push(self.get(i, j));
            }
        }
        Ok(Dbm { dim: n, m })
    }

    /// Largest absolute finite constant in the matrix.
    pub fn max_abs_constant(&self) -> i64 {
        if self.is_empty() {
            return 0;
        }
        self.m.iter().filter_map(|b| b.value()).map(i64::abs).max().unwrap_or(0)
    }

    /// A small set of constraints whose conjunction is this zone.
    ///
    /// Greedily drops implied constraints, diagonal ones first, then upper
    /// bounds, then lower bounds; used for rendering and for splitting in
    /// federation subtraction.
    pub fn minimal_constraints(&self) -> Vec<(usize, usize, Bound)> {
        let n = self.dim;
        if self.is_empty() {
            return vec![(0, 0, Bound::LT_ZERO)];
        }
        let universe = Dbm::universe_unchecked(n);
        let mut kept: Vec<(usize, usize, Bound)> = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.get(i, j) < universe.get(i, j) {
                    kept.push((i, j, self.get(i, j)));
                }
            }
        }
        let rank = |&(i, j, _): &(usize, usize, Bound)| match (i, j) {
            (_, 0) => 1,
            (0, _) => 2,
            _ => 0,
        };
        let mut order: Vec<usize> = (0..kept.len()).collect();
        order.sort_by_key(|&k| (rank(&kept[k]), kept[k].0, kept[k].1));
        let mut alive = vec![true; kept.len()];
        for k in order {
            alive[k] = false;
            let rebuilt = Dbm::from_constraints(
                n,
                kept.iter().zip(&alive).filter(|(_, a)| **a).map(|(c, _)| *c),
            )
            .expect("dimension is valid");
            if rebuilt != *self {
                alive[k] = true;
            }
        }
        kept.into_iter().zip(alive).filter(|(_, a)| *a).map(|(c, _)| c).collect()
    }

    /// Renders the zone as a conjunction, e.g. `1 <= x & x <= 2 & y - x <= 1`.
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        DbmDisplay { dbm: self, names: Some(names) }
    }
}

struct DbmDisplay<'a> {
    dbm: &'a Dbm,
    names: Option<&'a [String]>,
}

impl DbmDisplay<'_> {
    fn name(&self, i: usize) -> String {
        match self.names.and_then(|n| n.get(i - 1)) {
            Some(n) => n.clone(),
            None => format!("x{i}"),
        }
    }
}

fn op(b: Bound) -> &'static str {
    if b.is_strict() {
        "<"
    } else {
        "<="
    }
}

impl fmt::Display for DbmDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.dbm;
        if d.is_empty() {
            return write!(f, "false");
        }
        let constraints = d.minimal_constraints();
        if constraints.is_empty() {
            return write!(f, "true");
        }
        let find = |i: usize, j: usize| constraints.iter().find(|c| c.0 == i && c.1 == j).map(|c| c.2);
        let mut parts = Vec::new();
        for c in 1..d.dim {
            let name = self.name(c);
            let lower = find(0, c);
            let upper = find(c, 0);
            match (lower, upper) {
                (Some(l), Some(u)) if !l.is_strict() && !u.is_strict() && l.value().map(|v| -v) == u.value() => {
                    parts.push(format!("{name} = {}", u.value().unwrap()));
                }
                _ => {
                    if let Some(l) = lower {
                        parts.push(format!("{} {} {name}", -l.value().unwrap(), op(l)));
                    }
                    if let Some(u) = upper {
                        parts.push(format!("{name} {} {}", op(u), u.value().unwrap()));
                    }
                }
            }
        }
        for &(i, j, b) in &constraints {
            if i != 0 && j != 0 {
                parts.push(format!("{} - {} {} {}", self.name(i), self.name(j), op(b), b.value().unwrap()));
            }
        }
        write!(f, "{}", parts.join(" & "))
    }
}

impl fmt::Debug for Dbm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", DbmDisplay { dbm: self, names: None })
    }
}

//! Unions of DBMs.
//!
//! A federation has no canonical form: two different member lists can denote
//! the same set of valuations. All comparisons here are therefore semantic,
//! decided through subtraction.

use std::fmt;

use crate::dbm::{Bound, Dbm, Valuation};
use crate::error::ZoneError;
use crate::scalar::Scalar;

/// Default cap on the timed-predecessor fixpoint.
pub const DEFAULT_TPRE_CAP: usize = 10_000;

/// A possibly non-convex zone: the union of its member DBMs.
///
/// Members are non-empty, closed and share the federation's dimension. The
/// empty list is the empty zone.
#[derive(Clone)]
pub struct Federation {
    dim: usize,
    dbms: Vec<Dbm>,
}

impl Federation {
    pub fn empty(dim: usize) -> Federation {
        assert!(dim > 0, "a federation needs at least the reference clock");
        Federation { dim, dbms: Vec::new() }
    }

    pub fn universe(dim: usize) -> Federation {
        Federation::from_dbm(Dbm::universe_unchecked(dim))
    }

    pub fn from_dbm(dbm: Dbm) -> Federation {
        let dim = dbm.dim();
        let dbms = if dbm.is_empty() { Vec::new() } else { vec![dbm] };
        Federation { dim, dbms }
    }

    /// Collects the non-empty members, keeping their order. No reduction.
    pub fn from_dbms(dim: usize, dbms: impl IntoIterator<Item = Dbm>) -> Federation {
        let mut f = Federation::empty(dim);
        for d in dbms {
            f.push(d);
        }
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.dbms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dbms.is_empty()
    }

    pub fn dbms(&self) -> &[Dbm] {
        &self.dbms
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Dbm> {
        self.dbms.iter()
    }

    /// Appends a member, skipping empty ones.
    ///
    /// # Panics
    /// On a dimension mismatch.
    pub fn push(&mut self, dbm: Dbm) {
        assert_eq!(dbm.dim(), self.dim, "dimension mismatch");
        if !dbm.is_empty() {
            self.dbms.push(dbm);
        }
    }

    fn check_dim(&self, other: &Federation) {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
    }

    pub fn union(&self, other: &Federation) -> Federation {
        self.check_dim(other);
        let mut f = self.clone();
        f.dbms.extend(other.dbms.iter().cloned());
        f.reduce()
    }

    /// Adds `other`'s members in place, then reduces.
    pub fn union_with(&mut self, other: &Federation) {
        self.check_dim(other);
        self.dbms.extend(other.dbms.iter().cloned());
        *self = std::mem::replace(self, Federation::empty(self.dim)).reduce();
    }

    pub fn intersect(&self, other: &Federation) -> Federation {
        self.check_dim(other);
        let mut f = Federation::empty(self.dim);
        for a in &self.dbms {
            for b in &other.dbms {
                if a.intersects(b) {
                    f.push(a.intersect(b));
                }
            }
        }
        f.reduce()
    }

    pub fn intersect_dbm(&self, dbm: &Dbm) -> Federation {
        assert_eq!(self.dim, dbm.dim(), "dimension mismatch");
        let mut f = Federation::empty(self.dim);
        for a in &self.dbms {
            f.push(a.intersect(dbm));
        }
        f
    }

    /// Conjoins `x_i - x_j ≲ b` onto every member.
    pub fn constrain(&self, i: usize, j: usize, b: Bound) -> Federation {
        Federation::from_dbms(self.dim, self.dbms.iter().map(|d| d.constrain(i, j, b)))
    }

    /// Valuations in `self` but not in `other`.
    pub fn subtract(&self, other: &Federation) -> Federation {
        self.check_dim(other);
        if self.is_empty() || other.is_empty() {
            return self.clone();
        }
        let facets: Vec<Vec<(usize, usize, Bound)>> =
            other.dbms.iter().map(Dbm::minimal_constraints).collect();
        let mut out = Vec::new();
        for a in &self.dbms {
            let mut pieces = vec![a.clone()];
            for (b, facets) in other.dbms.iter().zip(&facets) {
                let mut next = Vec::new();
                for p in pieces {
                    subtract_dbm(&p, b, facets, &mut next);
                }
                pieces = next;
                if pieces.is_empty() {
                    break;
                }
            }
            out.extend(pieces);
        }
        Federation { dim: self.dim, dbms: out }.reduce()
    }

    /// Everything non-negative outside `self`.
    pub fn complement(&self) -> Federation {
        Federation::universe(self.dim).subtract(self)
    }

    /// Whether every valuation of `other` lies in `self`.
    pub fn includes(&self, other: &Federation) -> bool {
        self.check_dim(other);
        let mut rest = Vec::new();
        for b in &other.dbms {
            if !self.dbms.iter().any(|a| a.includes(b)) {
                rest.push(b.clone());
            }
        }
        if rest.is_empty() {
            return true;
        }
        Federation { dim: self.dim, dbms: rest }.subtract(self).is_empty()
    }

    /// Semantic equality.
    pub fn equals(&self, other: &Federation) -> bool {
        self.includes(other) && other.includes(self)
    }

    /// Drops members included in another member; later duplicates go first.
    pub fn reduce(mut self) -> Federation {
        let n = self.dbms.len();
        if n < 2 {
            return self;
        }
        let mut keep = vec![true; n];
        for i in 0..n {
            for j in 0..n {
                if i == j || !keep[j] {
                    continue;
                }
                if self.dbms[j].includes(&self.dbms[i]) && (j < i || self.dbms[i] != self.dbms[j]) {
                    keep[i] = false;
                    break;
                }
            }
        }
        let mut k = keep.into_iter();
        self.dbms.retain(|_| k.next().unwrap());
        self
    }

    pub fn down(&self) -> Federation {
        Federation::from_dbms(self.dim, self.dbms.iter().map(Dbm::down)).reduce()
    }

    pub fn free(&self, clocks: &[usize]) -> Result<Federation, ZoneError> {
        let mut out = Federation::empty(self.dim);
        for d in &self.dbms {
            let mut d = d.clone();
            for &c in clocks {
                d = d.free(c)?;
            }
            out.push(d);
        }
        Ok(out.reduce())
    }

    pub fn backwards_reset(&self, clocks: &[usize]) -> Result<Federation, ZoneError> {
        let mut out = Federation::empty(self.dim);
        for d in &self.dbms {
            out.push(d.backwards_reset(clocks)?);
        }
        Ok(out.reduce())
    }

    pub fn contains<T: Scalar>(&self, v: &Valuation<T>) -> Result<bool, ZoneError> {
        if v.clocks() != self.dim - 1 {
            return Err(ZoneError::ValuationSize { expected: self.dim - 1, got: v.clocks() });
        }
        Ok(self.dbms.iter().any(|d| d.contains_unchecked(v)))
    }

    pub fn contains_origin(&self) -> bool {
        self.dbms.iter().any(Dbm::contains_origin)
    }

    pub fn extend(&self, extra: usize) -> Federation {
        Federation::from_dbms(self.dim + extra, self.dbms.iter().map(|d| d.extend(extra)))
    }

    pub fn remove_clock(&self, c: usize) -> Result<Federation, ZoneError> {
        let mut out = Federation::empty(self.dim - 1);
        for d in &self.dbms {
            out.push(d.remove_clock(c)?);
        }
        Ok(out.reduce())
    }

    /// The tightest DBM containing the union. Semantically equal federations
    /// have equal hulls, which makes this usable as a hash key.
    pub fn hull(&self) -> Dbm {
        let Some(first) = self.dbms.first() else {
            return Dbm::empty(self.dim);
        };
        let n = self.dim;
        let mut entries: Vec<Bound> = (0..n * n).map(|k| first.get(k / n, k % n)).collect();
        for d in &self.dbms[1..] {
            for (k, e) in entries.iter_mut().enumerate() {
                *e = (*e).max(d.get(k / n, k % n));
            }
        }
        Dbm::from_matrix(n, entries).expect("dimension is valid")
    }

    pub fn max_abs_constant(&self) -> i64 {
        self.dbms.iter().map(Dbm::max_abs_constant).max().unwrap_or(0)
    }

    /// Renders as a disjunction of conjunctions.
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        FedDisplay { fed: self, names }
    }
}

/// Splits `a \ b` into disjoint convex pieces along the facets of `b`.
fn subtract_dbm(a: &Dbm, b: &Dbm, facets: &[(usize, usize, Bound)], out: &mut Vec<Dbm>) {
    if !a.intersects(b) {
        out.push(a.clone());
        return;
    }
    if b.includes(a) {
        return;
    }
    let mut rest = a.clone();
    for &(i, j, bound) in facets {
        if rest.get(i, j) <= bound {
            continue;
        }
        let piece = rest.constrain(j, i, bound.complement());
        if !piece.is_empty() {
            out.push(piece);
        }
        rest = rest.constrain(i, j, bound);
        if rest.is_empty() {
            break;
        }
    }
}

/// Valuations that can reach `target` by letting time pass while staying in
/// `stay` on the half-open interval before arrival:
///
/// `{ v | exists t >= 0 : v + t in target and for all t' in [0, t) : v + t' in stay }`.
///
/// Computed as a least fixpoint. A trajectory through the union of `stay`
/// crosses finitely many members; between two consecutive boundary instants
/// it lies in the interior of one member's time interval. Each step therefore
/// prepends one open interval inside a single member `D` followed by a point
/// already known to reach the target:
///
/// `step_D(X) = stay ∩ L_D ∩ down_strict(X ∩ U_D)`
///
/// where `L_D` keeps `D`'s diagonal constraints and closed lower bounds (they
/// must hold at the start of the open interval) and `U_D` keeps `D`'s closed
/// upper bounds (they must hold at its end).
pub fn tpre_within(stay: &Federation, target: &Federation) -> Result<Federation, ZoneError> {
    tpre_within_capped(stay, target, DEFAULT_TPRE_CAP)
}

pub fn tpre_within_capped(stay: &Federation, target: &Federation, cap: usize) -> Result<Federation, ZoneError> {
    stay.check_dim(target);
    let dim = stay.dim;
    if stay.is_empty() || target.is_empty() {
        return Ok(target.clone());
    }
    let pieces: Vec<(Dbm, Dbm)> = stay.dbms.iter().map(|d| (interval_start(d), interval_end(d))).collect();
    let bound = 2 * stay.max_abs_constant().max(target.max_abs_constant()).max(1) * dim as i64;

    let mut result = target.clone().reduce();
    let mut frontier = result.clone();
    for _ in 0..cap {
        let mut step = Federation::empty(dim);
        for (start, end) in &pieces {
            for c in &frontier.dbms {
                let arrive = c.intersect(end);
                if arrive.is_empty() {
                    continue;
                }
                let before = arrive.down_strict().intersect(start);
                if before.is_empty() {
                    continue;
                }
                for s in &stay.dbms {
                    if s.intersects(&before) {
                        step.push(s.intersect(&before));
                    }
                }
            }
        }
        let fresh = step.reduce().subtract(&result);
        if fresh.is_empty() {
            debug_assert!(result.max_abs_constant() <= bound, "constant bound exceeded in tpre");
            return Ok(result);
        }
        result.union_with(&fresh);
        frontier = fresh;
    }
    Err(ZoneError::IterationCap(cap))
}

/// `D` without upper bounds and with lower bounds made non-strict.
fn interval_start(d: &Dbm) -> Dbm {
    let n = d.dim();
    let mut m = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            m.push(match (i, j) {
                (0, _) => d.get(0, j).weaken(),
                (_, 0) => Bound::INFINITY,
                _ => d.get(i, j),
            });
        }
    }
    Dbm::from_matrix(n, m).expect("dimension is valid")
}

/// `D` without lower bounds and with upper bounds made non-strict.
fn interval_end(d: &Dbm) -> Dbm {
    let n = d.dim();
    let mut m = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            m.push(match (i, j) {
                (0, _) => Bound::LE_ZERO,
                (_, 0) => d.get(i, 0).weaken(),
                _ => d.get(i, j),
            });
        }
    }
    Dbm::from_matrix(n, m).expect("dimension is valid")
}

struct FedDisplay<'a> {
    fed: &'a Federation,
    names: &'a [String],
}

impl fmt::Display for FedDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.fed.dbms.as_slice() {
            [] => write!(f, "false"),
            [one] => write!(f, "{}", one.display_with(self.names)),
            many => {
                let parts: Vec<String> =
                    many.iter().map(|d| format!("({})", d.display_with(self.names))).collect();
                write!(f, "{}", parts.join(" | "))
            }
        }
    }
}

impl fmt::Debug for Federation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.dbms).finish()
    }
}

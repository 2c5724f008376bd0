//! Finite unions of half-open intervals `[lo, hi)` on the real line.
//!
//! Endpoints may be infinite, so `(-inf, inf)` represents the whole line.
//! Boundaries carry zero Lebesgue measure, which is all the occupation
//! statistics care about; the half-open convention matches right-continuous
//! piecewise-constant order functions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        !(self.hi > self.lo)
    }
}

/// Sorted, disjoint, non-adjacent intervals.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalUnion {
    parts: Vec<Interval>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        Self { parts: Vec::new() }
    }

    pub fn real_line() -> Self {
        Self::single(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn single(lo: f64, hi: f64) -> Self {
        Self::from_intervals(vec![Interval::new(lo, hi)])
    }

    /// Normalizes arbitrary intervals: drops empty ones, sorts and merges
    /// overlapping or touching pieces.
    pub fn from_intervals(mut raw: Vec<Interval>) -> Self {
        raw.retain(|i| !i.is_empty());
        raw.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut parts: Vec<Interval> = Vec::with_capacity(raw.len());
        for iv in raw {
            match parts.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => parts.push(iv),
            }
        }
        Self { parts }
    }

    pub fn parse_pairs(pairs: &[[f64; 2]]) -> Result<Self> {
        for p in pairs {
            if p[0].is_nan() || p[1].is_nan() || p[1] <= p[0] {
                return domain(format!("interval [{}, {}) is empty or malformed", p[0], p[1]));
            }
        }
        Ok(Self::from_intervals(
            pairs.iter().map(|p| Interval::new(p[0], p[1])).collect(),
        ))
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        // index of the first interval starting strictly after x
        let idx = self.parts.partition_point(|iv| iv.lo <= x);
        idx > 0 && x < self.parts[idx - 1].hi
    }

    pub fn total_length(&self) -> f64 {
        self.parts.iter().map(Interval::len).sum()
    }

    pub fn is_bounded(&self) -> bool {
        match (self.parts.first(), self.parts.last()) {
            (Some(f), Some(l)) => f.lo.is_finite() && l.hi.is_finite(),
            _ => true,
        }
    }

    /// `l(self ∩ [lo, hi])`.
    pub fn length_within(&self, lo: f64, hi: f64) -> f64 {
        self.parts
            .iter()
            .map(|iv| (iv.hi.min(hi) - iv.lo.max(lo)).max(0.0))
            .sum()
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut all = self.parts.clone();
        all.extend_from_slice(&other.parts);
        Self::from_intervals(all)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.parts.len() && j < other.parts.len() {
            let a = self.parts[i];
            let b = other.parts[j];
            let lo = a.lo.max(b.lo);
            let hi = a.hi.min(b.hi);
            if hi > lo {
                out.push(Interval::new(lo, hi));
            }
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { parts: out }
    }

    pub fn complement(&self) -> Self {
        let mut out = Vec::with_capacity(self.parts.len() + 1);
        let mut cursor = f64::NEG_INFINITY;
        for iv in &self.parts {
            if iv.lo > cursor {
                out.push(Interval::new(cursor, iv.lo));
            }
            cursor = iv.hi;
        }
        if cursor < f64::INFINITY {
            out.push(Interval::new(cursor, f64::INFINITY));
        }
        Self { parts: out }
    }

    /// Subset test up to an endpoint tolerance.
    pub fn is_subset_of(&self, other: &Self, tol: f64) -> bool {
        self.parts.iter().all(|iv| {
            other
                .parts
                .iter()
                .any(|o| o.lo <= iv.lo + tol && iv.hi <= o.hi + tol)
        })
    }

    /// Endpoint-wise comparison with tolerance.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let close = |a: f64, b: f64| a == b || (a - b).abs() <= tol;
        self.parts.len() == other.parts.len()
            && self
                .parts
                .iter()
                .zip(&other.parts)
                .all(|(a, b)| close(a.lo, b.lo) && close(a.hi, b.hi))
    }

    pub fn translate(&self, c: f64) -> Self {
        Self {
            parts: self
                .parts
                .iter()
                .map(|iv| Interval::new(iv.lo + c, iv.hi + c))
                .collect(),
        }
    }

    /// Image under `x -> -x` (half-open orientation flips; boundary is null).
    pub fn reflect(&self) -> Self {
        Self::from_intervals(
            self.parts
                .iter()
                .map(|iv| Interval::new(-iv.hi, -iv.lo))
                .collect(),
        )
    }

    /// Intervals `[x_n, x_n + width)` with `l(A ∩ [0, x]) ~ scale * x^c`,
    /// placed on both half-lines when `symmetric`, truncated at `radius`.
    pub fn power_lattice(c: f64, scale: f64, width: f64, radius: f64, symmetric: bool) -> Result<Self> {
        if !(c > 0.0 && c < 1.0) {
            return domain(format!("lattice exponent must lie in (0,1), got {c}"));
        }
        if !(scale > 0.0 && width > 0.0 && radius > width) {
            return domain("lattice scale, width and radius must be positive with radius > width");
        }
        let mut raw = Vec::new();
        let mut n = 0u64;
        loop {
            let x = (n as f64 * width / scale).powf(1.0 / c);
            if x > radius {
                break;
            }
            raw.push(Interval::new(x, x + width));
            if symmetric {
                raw.push(Interval::new(-x - width, -x));
            }
            n += 1;
        }
        Ok(Self::from_intervals(raw))
    }
}

impl fmt::Display for IntervalUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "{{}}");
        }
        let shown: Vec<String> = self
            .parts
            .iter()
            .take(6)
            .map(|iv| format!("[{}, {})", iv.lo, iv.hi))
            .collect();
        write!(f, "{}", shown.join(" u "))?;
        if self.parts.len() > 6 {
            write!(f, " u ... ({} pieces)", self.parts.len())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn merge_and_membership() {
        let u = IntervalUnion::from_intervals(vec![
            Interval::new(2.0, 3.0),
            Interval::new(0.0, 1.0),
            Interval::new(0.5, 1.5),
        ]);
        assert_eq!(u.intervals().len(), 2);
        assert!(u.contains(0.0));
        assert!(u.contains(1.2));
        assert!(!u.contains(1.5));
        assert!(!u.contains(1.7));
        assert!(u.contains(2.5));
        assert!((u.total_length() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn complement_of_line_is_empty() {
        assert!(IntervalUnion::real_line().complement().is_empty());
        let c = IntervalUnion::single(0.0, 1.0).complement();
        assert_eq!(c.intervals().len(), 2);
        assert!(c.contains(-5.0) && c.contains(1.0) && !c.contains(0.5));
    }

    #[test]
    fn lattice_growth_matches_power_law() {
        let a = IntervalUnion::power_lattice(0.5, 1.0, 0.25, 1e5, false).unwrap();
        for &x in &[1e3, 1e4, 9e4] {
            let ratio = a.length_within(0.0, x) / x.sqrt();
            assert!((ratio - 1.0).abs() < 0.05, "x={x} ratio={ratio}");
        }
        assert!(a.is_bounded());
    }

    proptest! {
        #[test]
        fn intersection_membership(a in -5.0f64..5.0, la in 0.1f64..3.0, b in -5.0f64..5.0, lb in 0.1f64..3.0, x in -10.0f64..10.0) {
            let u = IntervalUnion::single(a, a + la);
            let v = IntervalUnion::single(b, b + lb);
            prop_assert_eq!(u.intersection(&v).contains(x), u.contains(x) && v.contains(x));
            prop_assert_eq!(u.union(&v).contains(x), u.contains(x) || v.contains(x));
            prop_assert_eq!(u.complement().contains(x), !u.contains(x));
        }
    }
}

//! The position-dependent order `alpha(x)` and its minimum structure.
//!
//! Three representations are supported: right-continuous piecewise-constant
//! fields, smooth callables with declared structure, and tabulated fields.
//! Smooth fields declare their minimum, argmin set and tail limits; the
//! declarations are checked by sampling at construction.

use std::fmt;
use std::sync::Arc;

use statrs::function::gamma::gamma;

use crate::error::{domain, Error, Result};
use crate::intervals::{Interval, IntervalUnion};

/// Admissible range for the order; values outside are rejected at construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldLimits {
    pub min_alpha: f64,
    pub max_alpha: f64,
}

impl Default for FieldLimits {
    fn default() -> Self {
        Self {
            min_alpha: 0.05,
            max_alpha: 0.95,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interpolation {
    Linear,
    Step,
}

/// Smooth order function with declared analytic structure.
#[derive(Clone)]
pub struct SmoothSpec {
    pub name: String,
    pub func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub alpha_star: f64,
    pub argmin: IntervalUnion,
    pub tail_left: f64,
    pub tail_right: f64,
    /// The field equals its tails for `|x| > cutoff`.
    pub cutoff: f64,
    /// Whether `alpha` jumps away from `alpha_star` at the boundary of the
    /// argmin set, i.e. `A_beta = A_0` for all small `beta`.
    pub jump_at_minimum: bool,
}

impl fmt::Debug for SmoothSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothSpec")
            .field("name", &self.name)
            .field("alpha_star", &self.alpha_star)
            .field("argmin", &self.argmin)
            .field("tail_left", &self.tail_left)
            .field("tail_right", &self.tail_right)
            .field("cutoff", &self.cutoff)
            .finish()
    }
}

#[derive(Clone, Debug)]
pub enum FieldKind {
    /// `values[i]` holds on `[breakpoints[i], breakpoints[i+1])`; the tails
    /// hold left of the first and from the last breakpoint on.
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        tail_left: f64,
        tail_right: f64,
    },
    Smooth(SmoothSpec),
    /// Interpolated on `[grid[0], grid[last])`, tails outside.
    Tabulated {
        grid: Vec<f64>,
        values: Vec<f64>,
        rule: Interpolation,
        tail_left: f64,
        tail_right: f64,
    },
}

/// Immutable order field, validated against [`FieldLimits`].
#[derive(Clone, Debug)]
pub struct AlphaField {
    kind: FieldKind,
    inf: f64,
    sup: f64,
}

const SMOOTH_SCAN_POINTS: usize = 20_000;
const DECLARATION_TOL: f64 = 1e-12;

impl AlphaField {
    pub fn new(kind: FieldKind, limits: FieldLimits) -> Result<Self> {
        let (inf, sup) = match &kind {
            FieldKind::PiecewiseConstant {
                breakpoints,
                values,
                tail_left,
                tail_right,
            } => {
                if breakpoints.windows(2).any(|w| !(w[0] < w[1]))
                    || breakpoints.iter().any(|b| !b.is_finite())
                {
                    return domain("breakpoints must be finite and strictly ascending");
                }
                if breakpoints.is_empty() {
                    if tail_left != tail_right || !values.is_empty() {
                        return domain("a field without breakpoints must be constant");
                    }
                } else if values.len() + 1 != breakpoints.len() {
                    return domain(format!(
                        "{} breakpoints need {} interior values, got {}",
                        breakpoints.len(),
                        breakpoints.len() - 1,
                        values.len()
                    ));
                }
                range_of(values.iter().chain([tail_left, tail_right]).copied())
            }
            FieldKind::Tabulated {
                grid,
                values,
                tail_left,
                tail_right,
                ..
            } => {
                if grid.len() < 2 || grid.len() != values.len() {
                    return domain("tabulated field needs >= 2 nodes and one value per node");
                }
                if grid.windows(2).any(|w| !(w[0] < w[1])) {
                    return domain("tabulated grid must be strictly ascending");
                }
                range_of(values.iter().chain([tail_left, tail_right]).copied())
            }
            FieldKind::Smooth(spec) => verify_smooth(spec)?,
        };
        if !(inf > 0.0 && sup < 1.0) {
            return domain(format!("order must map into (0,1); range is [{inf}, {sup}]"));
        }
        if inf < limits.min_alpha || sup > limits.max_alpha {
            return domain(format!(
                "order range [{inf}, {sup}] outside admissible [{}, {}]",
                limits.min_alpha, limits.max_alpha
            ));
        }
        Ok(Self { kind, inf, sup })
    }

    pub fn constant(alpha: f64) -> Result<Self> {
        Self::piecewise(Vec::new(), Vec::new(), alpha, alpha)
    }

    pub fn piecewise(
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        tail_left: f64,
        tail_right: f64,
    ) -> Result<Self> {
        Self::new(
            FieldKind::PiecewiseConstant {
                breakpoints,
                values,
                tail_left,
                tail_right,
            },
            FieldLimits::default(),
        )
    }

    /// `alpha_in` on `[lo, hi)`, `alpha_out` elsewhere.
    pub fn two_level(alpha_in: f64, lo: f64, hi: f64, alpha_out: f64) -> Result<Self> {
        if !(lo < hi) {
            return domain("two-level field needs lo < hi");
        }
        Self::piecewise(vec![lo, hi], vec![alpha_in], alpha_out, alpha_out)
    }

    /// `alpha_in` on a bounded set, `alpha_out` elsewhere.
    pub fn indicator(set: &IntervalUnion, alpha_in: f64, alpha_out: f64) -> Result<Self> {
        if set.is_empty() || !set.is_bounded() {
            return domain("indicator field needs a nonempty bounded set");
        }
        let mut breakpoints = Vec::with_capacity(2 * set.intervals().len());
        let mut values = Vec::with_capacity(2 * set.intervals().len());
        for (i, iv) in set.intervals().iter().enumerate() {
            if i > 0 {
                values.push(alpha_out);
            }
            breakpoints.push(iv.lo);
            values.push(alpha_in);
            breakpoints.push(iv.hi);
        }
        Self::piecewise(breakpoints, values, alpha_out, alpha_out)
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn inf(&self) -> f64 {
        self.inf
    }

    pub fn sup(&self) -> f64 {
        self.sup
    }

    pub fn tails(&self) -> (f64, f64) {
        match &self.kind {
            FieldKind::PiecewiseConstant {
                tail_left,
                tail_right,
                ..
            }
            | FieldKind::Tabulated {
                tail_left,
                tail_right,
                ..
            } => (*tail_left, *tail_right),
            FieldKind::Smooth(s) => (s.tail_left, s.tail_right),
        }
    }

    #[inline]
    pub fn evaluate(&self, x: f64) -> f64 {
        match &self.kind {
            FieldKind::PiecewiseConstant {
                breakpoints,
                values,
                tail_left,
                tail_right,
            } => {
                let idx = breakpoints.partition_point(|&b| b <= x);
                if idx == 0 {
                    *tail_left
                } else if idx == breakpoints.len() {
                    *tail_right
                } else {
                    values[idx - 1]
                }
            }
            FieldKind::Smooth(s) => (s.func)(x),
            FieldKind::Tabulated {
                grid,
                values,
                rule,
                tail_left,
                tail_right,
            } => {
                let idx = grid.partition_point(|&g| g <= x);
                if idx == 0 {
                    *tail_left
                } else if idx == grid.len() {
                    *tail_right
                } else {
                    match rule {
                        Interpolation::Step => values[idx - 1],
                        Interpolation::Linear => {
                            let (x0, x1) = (grid[idx - 1], grid[idx]);
                            let w = (x - x0) / (x1 - x0);
                            values[idx - 1] + w * (values[idx] - values[idx - 1])
                        }
                    }
                }
            }
        }
    }

    /// Tail of the Levy measure, `s^(-alpha(x)) / Gamma(1 - alpha(x))`.
    pub fn levy_tail(&self, s: f64, x: f64) -> Result<f64> {
        if !(s > 0.0) {
            return domain(format!("levy tail needs s > 0, got {s}"));
        }
        Ok(power_law_tail(s, self.evaluate(x)))
    }

    pub fn alpha_star(&self) -> f64 {
        self.inf
    }

    /// Set where the minimum is attained.
    pub fn argmin_set(&self) -> IntervalUnion {
        match &self.kind {
            FieldKind::Smooth(s) => s.argmin.clone(),
            _ => self.strict_below(self.inf * (1.0 + 1e-15) + f64::MIN_POSITIVE),
        }
    }

    /// `A_beta = {x : alpha(x) < alpha* + beta}`.
    pub fn level_set(&self, beta: f64) -> Result<IntervalUnion> {
        if !(beta > 0.0) {
            return domain(format!("level set needs beta > 0, got {beta}"));
        }
        let thr = self.inf + beta;
        if thr >= 1.0 {
            return domain(format!("alpha* + beta = {thr} must stay below 1"));
        }
        Ok(self.strict_below(thr))
    }

    fn strict_below(&self, thr: f64) -> IntervalUnion {
        match &self.kind {
            FieldKind::PiecewiseConstant {
                breakpoints,
                values,
                tail_left,
                tail_right,
            } => {
                if breakpoints.is_empty() {
                    return if *tail_left < thr {
                        IntervalUnion::real_line()
                    } else {
                        IntervalUnion::empty()
                    };
                }
                let n = breakpoints.len();
                let mut raw = Vec::new();
                if *tail_left < thr {
                    raw.push(Interval::new(f64::NEG_INFINITY, breakpoints[0]));
                }
                for (i, &v) in values.iter().enumerate() {
                    if v < thr {
                        raw.push(Interval::new(breakpoints[i], breakpoints[i + 1]));
                    }
                }
                if *tail_right < thr {
                    raw.push(Interval::new(breakpoints[n - 1], f64::INFINITY));
                }
                IntervalUnion::from_intervals(raw)
            }
            FieldKind::Tabulated {
                grid,
                values,
                rule,
                tail_left,
                tail_right,
            } => {
                let n = grid.len();
                let mut raw = Vec::new();
                if *tail_left < thr {
                    raw.push(Interval::new(f64::NEG_INFINITY, grid[0]));
                }
                for i in 0..n - 1 {
                    let (x0, x1) = (grid[i], grid[i + 1]);
                    let (v0, v1) = (values[i], values[i + 1]);
                    match rule {
                        Interpolation::Step => {
                            if v0 < thr {
                                raw.push(Interval::new(x0, x1));
                            }
                        }
                        Interpolation::Linear => {
                            let cross = |v: f64| x0 + (thr - v0) / (v - v0) * (x1 - x0);
                            match (v0 < thr, v1 < thr) {
                                (true, true) => raw.push(Interval::new(x0, x1)),
                                (true, false) => raw.push(Interval::new(x0, cross(v1))),
                                (false, true) => raw.push(Interval::new(cross(v1), x1)),
                                (false, false) => {}
                            }
                        }
                    }
                }
                if *tail_right < thr {
                    raw.push(Interval::new(grid[n - 1], f64::INFINITY));
                }
                IntervalUnion::from_intervals(raw)
            }
            FieldKind::Smooth(s) => bracket_below(s, thr),
        }
    }

    /// Minimum structure for a field whose argmin set is bounded.
    pub fn min_structure(&self) -> Result<MinStructure> {
        let (tail_left, tail_right) = self.tails();
        MinStructure::new(
            self.inf,
            self.argmin_set(),
            tail_right,
            tail_left,
            self.jump_at_minimum(),
            None,
        )
    }

    /// Minimum structure for an unbounded argmin set obeying growth law (G).
    /// The tail limits are read off the field outside the argmin set.
    pub fn min_structure_with_growth(&self, growth: Growth) -> Result<MinStructure> {
        let (tail_left, tail_right) = self.tails();
        MinStructure::new(
            self.inf,
            self.argmin_set(),
            tail_right,
            tail_left,
            self.jump_at_minimum(),
            Some(growth),
        )
    }

    fn jump_at_minimum(&self) -> bool {
        match &self.kind {
            FieldKind::PiecewiseConstant { .. } => true,
            FieldKind::Tabulated { rule, .. } => *rule == Interpolation::Step,
            FieldKind::Smooth(s) => s.jump_at_minimum,
        }
    }

    /// Field `x -> alpha(x - c)`.
    pub fn translate(&self, c: f64) -> Result<Self> {
        let kind = match &self.kind {
            FieldKind::PiecewiseConstant {
                breakpoints,
                values,
                tail_left,
                tail_right,
            } => FieldKind::PiecewiseConstant {
                breakpoints: breakpoints.iter().map(|b| b + c).collect(),
                values: values.clone(),
                tail_left: *tail_left,
                tail_right: *tail_right,
            },
            FieldKind::Tabulated {
                grid,
                values,
                rule,
                tail_left,
                tail_right,
            } => FieldKind::Tabulated {
                grid: grid.iter().map(|g| g + c).collect(),
                values: values.clone(),
                rule: *rule,
                tail_left: *tail_left,
                tail_right: *tail_right,
            },
            FieldKind::Smooth(s) => {
                let f = s.func.clone();
                FieldKind::Smooth(SmoothSpec {
                    name: format!("{}(x-{c})", s.name),
                    func: Arc::new(move |x| f(x - c)),
                    argmin: s.argmin.translate(c),
                    cutoff: s.cutoff + c.abs(),
                    ..s.clone()
                })
            }
        };
        Self::new(kind, self.loose_limits())
    }

    /// Field `x -> alpha(-x)`; tails swap.
    pub fn reflect(&self) -> Result<Self> {
        let kind = match &self.kind {
            FieldKind::PiecewiseConstant {
                breakpoints,
                values,
                tail_left,
                tail_right,
            } => FieldKind::PiecewiseConstant {
                breakpoints: breakpoints.iter().rev().map(|b| -b).collect(),
                values: values.iter().rev().copied().collect(),
                tail_left: *tail_right,
                tail_right: *tail_left,
            },
            FieldKind::Tabulated {
                grid,
                values,
                rule,
                tail_left,
                tail_right,
            } => {
                // Step cells are left-closed, so reflection shifts them by one node.
                let values = match rule {
                    Interpolation::Linear => values.iter().rev().copied().collect(),
                    Interpolation::Step => {
                        let mut v: Vec<f64> = values[..values.len() - 1].iter().rev().copied().collect();
                        v.push(*tail_left);
                        v
                    }
                };
                FieldKind::Tabulated {
                    grid: grid.iter().rev().map(|g| -g).collect(),
                    values,
                    rule: *rule,
                    tail_left: *tail_right,
                    tail_right: *tail_left,
                }
            }
            FieldKind::Smooth(s) => {
                let f = s.func.clone();
                FieldKind::Smooth(SmoothSpec {
                    name: format!("{}(-x)", s.name),
                    func: Arc::new(move |x| f(-x)),
                    argmin: s.argmin.reflect(),
                    tail_left: s.tail_right,
                    tail_right: s.tail_left,
                    ..s.clone()
                })
            }
        };
        Self::new(kind, self.loose_limits())
    }

    fn loose_limits(&self) -> FieldLimits {
        FieldLimits {
            min_alpha: self.inf.min(FieldLimits::default().min_alpha),
            max_alpha: self.sup.max(FieldLimits::default().max_alpha),
        }
    }

    /// Stable textual description, used for hashing and headers.
    pub fn canonical(&self) -> String {
        match &self.kind {
            FieldKind::PiecewiseConstant {
                breakpoints,
                values,
                tail_left,
                tail_right,
            } => format!("piecewise;bp={breakpoints:?};v={values:?};tl={tail_left};tr={tail_right}"),
            FieldKind::Tabulated {
                grid,
                values,
                rule,
                tail_left,
                tail_right,
            } => format!("tabulated;{rule:?};g={grid:?};v={values:?};tl={tail_left};tr={tail_right}"),
            FieldKind::Smooth(s) => format!(
                "smooth;{};a*={};argmin={};tl={};tr={};cut={}",
                s.name, s.alpha_star, s.argmin, s.tail_left, s.tail_right, s.cutoff
            ),
        }
    }
}

/// `s^(-alpha) / Gamma(1 - alpha)`.
#[inline]
pub fn power_law_tail(s: f64, alpha: f64) -> f64 {
    s.powf(-alpha) / gamma(1.0 - alpha)
}

fn range_of(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        if v.is_nan() {
            (f64::NAN, f64::NAN)
        } else {
            (lo.min(v), hi.max(v))
        }
    })
}

fn verify_smooth(s: &SmoothSpec) -> Result<(f64, f64)> {
    if !(s.cutoff > 0.0 && s.cutoff.is_finite()) {
        return domain("smooth field needs a finite positive cutoff");
    }
    let span = s.cutoff + 1.0;
    let n = SMOOTH_SCAN_POINTS;
    let mut sup = s.tail_left.max(s.tail_right);
    for i in 0..=n {
        let x = -span + 2.0 * span * i as f64 / n as f64;
        let v = (s.func)(x);
        if !(v >= s.alpha_star - DECLARATION_TOL) {
            return domain(format!(
                "smooth field '{}' takes {v} at x={x}, below declared minimum {}",
                s.name, s.alpha_star
            ));
        }
        sup = sup.max(v);
    }
    for iv in s.argmin.intervals() {
        let lo = iv.lo.max(-span);
        let hi = iv.hi.min(span);
        for i in 0..=100 {
            let x = lo + (hi - lo) * i as f64 / 100.0;
            if x >= iv.hi {
                continue;
            }
            let v = (s.func)(x);
            if (v - s.alpha_star).abs() > DECLARATION_TOL {
                return domain(format!(
                    "smooth field '{}' takes {v} at x={x} inside the declared argmin set",
                    s.name
                ));
            }
        }
    }
    for k in 0..50 {
        let x = s.cutoff * (1.0 + 1e-9) * 10f64.powf(k as f64 / 10.0);
        for (xv, tail) in [(x, s.tail_right), (-x, s.tail_left)] {
            let v = (s.func)(xv);
            if (v - tail).abs() > DECLARATION_TOL {
                return domain(format!(
                    "smooth field '{}' takes {v} at x={xv}, declared tail is {tail}",
                    s.name
                ));
            }
        }
    }
    Ok((s.alpha_star, sup))
}

fn bracket_below(s: &SmoothSpec, thr: f64) -> IntervalUnion {
    let below = |x: f64| (s.func)(x) < thr;
    let refine = |mut a: f64, mut b: f64| {
        // invariant: below(a) != below(b)
        let target = below(a);
        while b - a > 1e-12 * (1.0 + a.abs()) {
            let m = 0.5 * (a + b);
            if below(m) == target {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    let lo = -s.cutoff;
    let hi = s.cutoff;
    let n = SMOOTH_SCAN_POINTS;
    let mut raw = Vec::new();
    let mut start = if s.tail_left < thr {
        Some(f64::NEG_INFINITY)
    } else {
        None
    };
    let mut prev_x = lo;
    let mut prev_in = below(lo);
    if prev_in && start.is_none() {
        start = Some(lo);
    }
    if !prev_in {
        if let Some(st) = start.take() {
            raw.push(Interval::new(st, lo));
        }
    }
    for i in 1..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let inside = below(x);
        if inside != prev_in {
            let edge = refine(prev_x, x);
            if inside {
                start = Some(edge);
            } else if let Some(st) = start.take() {
                raw.push(Interval::new(st, edge));
            }
        }
        prev_x = x;
        prev_in = inside;
    }
    if let Some(st) = start.take() {
        let end = if s.tail_right < thr { f64::INFINITY } else { hi };
        raw.push(Interval::new(st, end));
    } else if s.tail_right < thr {
        raw.push(Interval::new(hi, f64::INFINITY));
    }
    IntervalUnion::from_intervals(raw)
}

/// Growth exponents of an unbounded argmin set:
/// `l(A ∩ [0,x]) ~ a1 x^c1`, `l(A ∩ [-x,0]) ~ a2 x^c2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Growth {
    pub c1: f64,
    pub c2: f64,
    pub a1: f64,
    pub a2: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinStructure {
    pub alpha_star: f64,
    pub argmin_set: IntervalUnion,
    /// Limit of the order at `+inf` (off the argmin set).
    pub alpha_i: f64,
    /// Limit of the order at `-inf` (off the argmin set).
    pub alpha_j: f64,
    pub bounded: bool,
    pub jump_at_minimum: bool,
    pub growth: Option<Growth>,
}

impl MinStructure {
    pub fn new(
        alpha_star: f64,
        argmin_set: IntervalUnion,
        alpha_i: f64,
        alpha_j: f64,
        jump_at_minimum: bool,
        growth: Option<Growth>,
    ) -> Result<Self> {
        if !(argmin_set.total_length() > 0.0) {
            return domain("argmin set must have positive length");
        }
        let bounded = growth.is_none();
        if bounded && !argmin_set.is_bounded() {
            return domain("unbounded argmin set requires declared growth exponents");
        }
        if let Some(g) = growth {
            if !(1.0 > g.c1 && g.c1 >= g.c2 && g.c2 >= 0.0) {
                return domain(format!("growth exponents need 1 > c1 >= c2 >= 0, got c1={} c2={}", g.c1, g.c2));
            }
            if !(g.a1 > 0.0 && g.a2 > 0.0) {
                return domain("growth constants a1, a2 must be positive");
            }
        }
        if !(alpha_i > alpha_star && alpha_j > alpha_star) {
            return Err(Error::Domain(format!(
                "tail limits ({alpha_i}, {alpha_j}) must exceed alpha* = {alpha_star}"
            )));
        }
        Ok(Self {
            alpha_star,
            argmin_set,
            alpha_i,
            alpha_j,
            bounded,
            jump_at_minimum,
            growth,
        })
    }

    pub fn alpha_circ(&self) -> f64 {
        self.alpha_i.min(self.alpha_j)
    }

    /// Structure of the reflected field.
    pub fn reflect(&self) -> Self {
        Self {
            argmin_set: self.argmin_set.reflect(),
            alpha_i: self.alpha_j,
            alpha_j: self.alpha_i,
            ..self.clone()
        }
    }

    pub fn translate(&self, c: f64) -> Self {
        Self {
            argmin_set: self.argmin_set.translate(c),
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegimeKind {
    LocalizeOccupation,
    LocalizeProbability,
    Delocalize,
    Critical,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegimePrediction {
    pub kind: RegimeKind,
    pub target_set: IntervalUnion,
    pub condition_lhs: f64,
    pub condition_rhs: f64,
}

/// Compares `2 alpha*` (bounded minimum set) or `2 alpha* / (1 + c1)`
/// (unbounded, growth law) against `min(alpha_I, alpha_J)`.
pub fn classify_regime(structure: &MinStructure) -> RegimePrediction {
    let lhs = match structure.growth {
        None => 2.0 * structure.alpha_star,
        Some(g) => 2.0 * structure.alpha_star / (1.0 + g.c1),
    };
    let rhs = structure.alpha_circ();
    let kind = if lhs < rhs {
        if structure.bounded && structure.jump_at_minimum {
            RegimeKind::LocalizeProbability
        } else {
            RegimeKind::LocalizeOccupation
        }
    } else if lhs > rhs {
        RegimeKind::Delocalize
    } else {
        RegimeKind::Critical
    };
    RegimePrediction {
        kind,
        target_set: structure.argmin_set.clone(),
        condition_lhs: lhs,
        condition_rhs: rhs,
    }
}

/// `base + amp * min(|x - center| / width, 1)`: a V-shaped well whose
/// minimum is a single point.
pub fn vee_field(base: f64, amp: f64, center: f64, width: f64) -> Result<AlphaField> {
    let f = move |x: f64| base + amp * ((x - center).abs() / width).min(1.0);
    AlphaField::new(
        FieldKind::Smooth(SmoothSpec {
            name: format!("vee(base={base},amp={amp},c={center},w={width})"),
            func: Arc::new(f),
            alpha_star: base,
            argmin: IntervalUnion::empty(),
            tail_left: base + amp,
            tail_right: base + amp,
            cutoff: center.abs() + width,
            jump_at_minimum: false,
        }),
        FieldLimits::default(),
    )
}

/// Flat-bottomed well: `base` on `[center - half, center + half)`, rising
/// linearly over `ramp` to `base + amp`.
pub fn plateau_field(base: f64, amp: f64, center: f64, half: f64, ramp: f64) -> Result<AlphaField> {
    if !(half > 0.0 && ramp > 0.0) {
        return domain("plateau field needs positive half-width and ramp");
    }
    let f = move |x: f64| {
        let d = ((x - center).abs() - half).max(0.0);
        base + amp * (d / ramp).min(1.0)
    };
    AlphaField::new(
        FieldKind::Smooth(SmoothSpec {
            name: format!("plateau(base={base},amp={amp},c={center},h={half},r={ramp})"),
            func: Arc::new(f),
            alpha_star: base,
            argmin: IntervalUnion::single(center - half, center + half),
            tail_left: base + amp,
            tail_right: base + amp,
            cutoff: center.abs() + half + ramp,
            jump_at_minimum: false,
        }),
        FieldLimits::default(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_level() -> AlphaField {
        AlphaField::two_level(0.3, 0.0, 1.0, 0.7).unwrap()
    }

    #[test]
    fn evaluate_two_level() {
        let f = two_level();
        assert_eq!(f.evaluate(0.5), 0.3);
        assert_eq!(f.evaluate(2.0), 0.7);
        assert_eq!(f.evaluate(1.0), 0.7);
        assert_eq!(f.evaluate(0.0), 0.3);
        assert_eq!(f.evaluate(-1e-12), 0.7);
    }

    #[test]
    fn levy_tail_values() {
        let f = AlphaField::constant(0.5).unwrap();
        assert!((f.levy_tail(1.0, 0.0).unwrap() - 0.564_189_583_547_756_3).abs() < 1e-12);
        let g = AlphaField::constant(0.3).unwrap();
        // 4^-0.3 / Gamma(0.7) = 0.659753955 / 1.298055333
        assert!((g.levy_tail(4.0, 0.0).unwrap() - 0.508_263_6).abs() < 1e-6);
        assert!(f.levy_tail(0.0, 0.0).is_err());
        assert!(f.levy_tail(-1.0, 0.0).is_err());
    }

    #[test]
    fn level_sets_two_level() {
        let f = two_level();
        assert_eq!(f.level_set(0.2).unwrap(), IntervalUnion::single(0.0, 1.0));
        assert_eq!(f.level_set(0.5).unwrap(), IntervalUnion::real_line());
        assert!(f.level_set(0.7).is_err());
    }

    #[test]
    fn level_set_of_vee() {
        let f = vee_field(0.3, 0.4, 0.0, 1.0).unwrap();
        let a = f.level_set(0.2).unwrap();
        assert!(a.approx_eq(&IntervalUnion::single(-0.5, 0.5), 1e-9), "{a}");
    }

    #[test]
    fn tabulated_linear_level_set_is_exact() {
        let f = AlphaField::new(
            FieldKind::Tabulated {
                grid: vec![-1.0, 0.0, 1.0],
                values: vec![0.7, 0.3, 0.7],
                rule: Interpolation::Linear,
                tail_left: 0.7,
                tail_right: 0.7,
            },
            FieldLimits::default(),
        )
        .unwrap();
        assert!(f.level_set(0.2).unwrap().approx_eq(&IntervalUnion::single(-0.5, 0.5), 1e-12));
        assert_eq!(f.evaluate(0.5), 0.5);
    }

    #[test]
    fn rejects_out_of_range_and_bad_declarations() {
        assert!(AlphaField::two_level(0.01, 0.0, 1.0, 0.7).is_err());
        assert!(AlphaField::two_level(0.3, 0.0, 1.0, 0.99).is_err());
        assert!(AlphaField::piecewise(vec![1.0, 0.0], vec![0.3], 0.5, 0.5).is_err());
        let relaxed = FieldLimits {
            min_alpha: 0.001,
            max_alpha: 0.999,
        };
        assert!(AlphaField::new(
            FieldKind::PiecewiseConstant {
                breakpoints: vec![0.0, 1.0],
                values: vec![0.01],
                tail_left: 0.7,
                tail_right: 0.7,
            },
            relaxed
        )
        .is_ok());
        let lying = FieldKind::Smooth(SmoothSpec {
            name: "lie".into(),
            func: Arc::new(|x: f64| 0.3 + 0.4 * x.abs().min(1.0)),
            alpha_star: 0.4,
            argmin: IntervalUnion::empty(),
            tail_left: 0.7,
            tail_right: 0.7,
            cutoff: 1.0,
            jump_at_minimum: false,
        });
        assert!(AlphaField::new(lying, FieldLimits::default()).is_err());
    }

    #[test]
    fn classify_examples() {
        let p = classify_regime(&two_level().min_structure().unwrap());
        assert_eq!(p.kind, RegimeKind::LocalizeProbability);
        assert_eq!(p.target_set, IntervalUnion::single(0.0, 1.0));
        let d = AlphaField::two_level(0.4, 0.0, 1.0, 0.7).unwrap();
        assert_eq!(classify_regime(&d.min_structure().unwrap()).kind, RegimeKind::Delocalize);
        let s = MinStructure::new(
            0.4,
            IntervalUnion::single(0.0, f64::INFINITY),
            0.6,
            0.6,
            true,
            Some(Growth {
                c1: 0.5,
                c2: 0.5,
                a1: 1.0,
                a2: 1.0,
            }),
        )
        .unwrap();
        let p = classify_regime(&s);
        assert_eq!(p.kind, RegimeKind::LocalizeOccupation);
        assert!((p.condition_lhs - 0.8 / 1.5).abs() < 1e-15);
        let c = AlphaField::two_level(0.35, 0.0, 1.0, 0.7).unwrap();
        assert_eq!(classify_regime(&c.min_structure().unwrap()).kind, RegimeKind::Critical);
    }

    #[test]
    fn plateau_only_localizes_occupation() {
        let f = plateau_field(0.3, 0.4, 0.0, 0.5, 1.0).unwrap();
        let s = f.min_structure().unwrap();
        assert_eq!(classify_regime(&s).kind, RegimeKind::LocalizeOccupation);
    }

    #[test]
    fn minimum_set_needs_positive_length() {
        let f = vee_field(0.3, 0.4, 0.0, 1.0).unwrap();
        assert!(f.min_structure().is_err());
    }

    fn brute_force_level_set(f: &AlphaField, thr: f64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let h = 1e-4;
        let n = ((hi - lo) / h).round() as usize;
        let mut out = Vec::new();
        let mut start: Option<f64> = None;
        for i in 0..=n {
            let x = lo + i as f64 * h;
            let inside = f.evaluate(x) < thr;
            match (inside, start) {
                (true, None) => start = Some(x),
                (false, Some(s)) => {
                    out.push((s, x));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((s, hi));
        }
        out
    }

    proptest! {
        #[test]
        fn piecewise_level_set_matches_scan(
            raw in proptest::collection::vec((0.1f64..0.9, 0.2f64..1.5), 1..6),
            beta in 0.01f64..0.3,
        ) {
            let mut bp = vec![-3.0];
            let mut vals = Vec::new();
            for (v, w) in &raw {
                vals.push(*v);
                bp.push(bp.last().unwrap() + w);
            }
            let f = AlphaField::piecewise(bp.clone(), vals, 0.9, 0.9).unwrap();
            prop_assume!(f.inf() + beta < 0.9);
            let set = f.level_set(beta).unwrap();
            let scan = brute_force_level_set(&f, f.inf() + beta, bp[0] - 1.0, *bp.last().unwrap() + 1.0);
            prop_assert_eq!(set.intervals().len(), scan.len());
            for (iv, (a, b)) in set.intervals().iter().zip(&scan) {
                prop_assert!((iv.lo - a).abs() <= 1.01e-4);
                prop_assert!((iv.hi - b).abs() <= 1.01e-4);
            }
        }

        #[test]
        fn level_sets_are_nested(b1 in 0.01f64..0.3, db in 0.0f64..0.3) {
            let f = vee_field(0.3, 0.4, 0.2, 1.5).unwrap();
            let small = f.level_set(b1).unwrap();
            let large = f.level_set((b1 + db).min(0.6)).unwrap();
            prop_assert!(small.is_subset_of(&large, 1e-9));
        }

        #[test]
        fn tail_identity(s in 1e-3f64..1e3, x in -3.0f64..3.0) {
            let f = AlphaField::two_level(0.3, 0.0, 1.0, 0.7).unwrap();
            let a = f.evaluate(x);
            let v = f.levy_tail(s, x).unwrap() * gamma(1.0 - a) * s.powf(a);
            prop_assert!((v - 1.0).abs() < 1e-13);
        }

        #[test]
        fn classification_invariant_under_rigid_motions(
            a1 in 0.1f64..0.45, a2 in 0.5f64..0.9, a3 in 0.5f64..0.9, width in 0.2f64..2.0, shift in -5.0f64..5.0,
        ) {
            let f = AlphaField::piecewise(vec![0.0, width, width + 1.0], vec![a1, a2], a3, a2).unwrap();
            let base = classify_regime(&f.min_structure().unwrap());
            let moved = classify_regime(&f.translate(shift).unwrap().min_structure().unwrap());
            let flipped_field = f.reflect().unwrap();
            let flipped = classify_regime(&flipped_field.min_structure().unwrap());
            prop_assert_eq!(base.kind, moved.kind);
            prop_assert_eq!(base.kind, flipped.kind);
            prop_assert_eq!(base.condition_rhs, flipped.condition_rhs);
            prop_assert_eq!(flipped_field.min_structure().unwrap(), f.min_structure().unwrap().reflect());
        }
    }
}

//! Coupled simulation of the Brownian driver and the state-dependent clock.
//!
//! Internal time advances in steps of `dt`. Step `k` moves the Brownian
//! motion to `b_k = b_{k-1} + sqrt(dt) N(0,1)` and then adds a stable
//! increment to the clock with the order frozen at `alpha(b_k)`:
//! `sigma_k = sigma_{k-1} + dt^(1/alpha(b_k)) S`. The trap
//! `[sigma_{k-1}, sigma_k)` in external time is therefore spent at `b_k`,
//! which is what the inverse time change reports.
//!
//! Three consumers share the same stepping loop through [`StepObserver`]:
//! full path storage ([`simulate_coupled`]), streaming inversion against an
//! external-time grid ([`simulate_time_changed`]) and sampling of the
//! occupation split on an internal-time grid ([`simulate_growth`]).

use std::collections::BTreeMap;
use std::io::{Read, Write};

use sha2::{Digest, Sha256};

use crate::alpha::AlphaField;
use crate::error::{domain, Error, Result};
use crate::intervals::IntervalUnion;
use crate::rng::{RandomStream, StableLaw};

pub const DEFAULT_OVERFLOW_CAP: f64 = 1e300;

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub x0: f64,
    /// Stop once the clock exceeds this external time.
    pub target_external_time: f64,
    /// Stop once internal time reaches this value, whatever the clock says.
    pub internal_horizon: Option<f64>,
    pub max_steps: u64,
    pub overflow_cap: f64,
}

impl SimConfig {
    pub fn new(dt: f64, target_external_time: f64) -> Self {
        Self {
            dt,
            x0: 0.0,
            target_external_time,
            internal_horizon: None,
            max_steps: 100_000_000,
            overflow_cap: DEFAULT_OVERFLOW_CAP,
        }
    }

    pub fn with_x0(mut self, x0: f64) -> Self {
        self.x0 = x0;
        self
    }

    pub fn with_max_steps(mut self, max_steps: u64) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn with_internal_horizon(mut self, horizon: f64) -> Self {
        self.internal_horizon = Some(horizon);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return domain(format!("dt must be positive, got {}", self.dt));
        }
        if self.max_steps < 1 {
            return domain("max_steps must be >= 1");
        }
        if !(self.target_external_time > 0.0) {
            return domain("target external time must be positive");
        }
        if !self.x0.is_finite() {
            return domain("x0 must be finite");
        }
        if !(self.overflow_cap > self.target_external_time.min(f64::MAX)) {
            return domain("overflow cap must exceed the target external time");
        }
        if let Some(h) = self.internal_horizon {
            if !(h > 0.0 && h.is_finite()) {
                return domain("internal horizon must be positive and finite");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathStatus {
    Complete,
    /// The clock never passed the target within `max_steps`.
    StepBudgetExhausted,
    /// The clock exceeded `overflow_cap`; the offending step was dropped.
    TimeOverflow,
}

/// One internal step as seen by observers.
#[derive(Clone, Copy, Debug)]
pub struct Step {
    pub k: u64,
    pub s: f64,
    pub b: f64,
    pub alpha: f64,
    pub increment: f64,
    pub sigma_prev: f64,
    pub sigma: f64,
}

pub trait StepObserver {
    /// Returns `true` to stop the simulation after this step.
    fn observe(&mut self, step: &Step) -> bool;
}

#[derive(Clone, Copy, Debug)]
pub struct DriveOutcome {
    pub status: PathStatus,
    pub steps: u64,
    pub sigma_final: f64,
    pub b_final: f64,
}

/// Runs the stepping loop, feeding every accepted step to `obs`.
pub fn drive<O: StepObserver>(
    field: &AlphaField,
    config: &SimConfig,
    stream: &mut RandomStream,
    obs: &mut O,
) -> Result<DriveOutcome> {
    config.validate()?;
    let dt = config.dt;
    let sqrt_dt = dt.sqrt();
    let horizon_steps = config
        .internal_horizon
        .map(|h| (h / dt - 1e-9).ceil().max(1.0) as u64);
    let mut b = config.x0;
    let mut sigma = 0.0f64;
    let mut law = StableLaw::new_unchecked(field.evaluate(b), dt);
    let mut status = PathStatus::StepBudgetExhausted;
    let mut taken = 0u64;
    for k in 1..=config.max_steps {
        b += sqrt_dt * stream.gaussian();
        let alpha = field.evaluate(b);
        if alpha.to_bits() != law.alpha().to_bits() {
            law = StableLaw::new_unchecked(alpha, dt);
        }
        let increment = law.sample_raw(stream);
        let next = sigma + increment;
        if !(next <= config.overflow_cap) {
            status = PathStatus::TimeOverflow;
            break;
        }
        let step = Step {
            k,
            s: k as f64 * dt,
            b,
            alpha,
            increment,
            sigma_prev: sigma,
            sigma: next,
        };
        sigma = next;
        taken = k;
        let stop = obs.observe(&step);
        let reached = match horizon_steps {
            Some(h) => k >= h,
            None => sigma > config.target_external_time,
        };
        if stop || reached {
            status = PathStatus::Complete;
            break;
        }
    }
    Ok(DriveOutcome {
        status,
        steps: taken,
        sigma_final: sigma,
        b_final: b,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub s: f64,
    pub b: f64,
    pub sigma: f64,
}

/// A discretized realization `(s_k, b_k, sigma_k)` with the clock split
/// against an optional set `A`: increments made while `b_k ∈ A` go to
/// `sigma1_acc`, the rest to `sigma2_acc`.
#[derive(Clone, Debug)]
pub struct CoupledPath {
    pub dt: f64,
    /// Starts with `(0, x0, 0)`.
    pub steps: Vec<StepRecord>,
    pub split_set: Option<IntervalUnion>,
    pub sigma1_acc: f64,
    pub sigma2_acc: f64,
    /// Internal time spent in each named set.
    pub occupation_internal: BTreeMap<String, f64>,
    pub status: PathStatus,
}

impl CoupledPath {
    pub fn sigma_final(&self) -> f64 {
        self.steps.last().map_or(0.0, |r| r.sigma)
    }

    pub fn is_complete(&self) -> bool {
        self.status == PathStatus::Complete
    }

    /// Builds a path from explicit records (testing and replay of dumps).
    pub fn from_records(dt: f64, steps: Vec<StepRecord>) -> Result<Self> {
        if steps.first().map(|r| r.sigma) != Some(0.0) {
            return domain("a path must start with sigma_0 = 0");
        }
        if steps.windows(2).any(|w| w[1].sigma < w[0].sigma) {
            return domain("sigma must be nondecreasing along a path");
        }
        Ok(Self {
            dt,
            steps,
            split_set: None,
            sigma1_acc: 0.0,
            sigma2_acc: 0.0,
            occupation_internal: BTreeMap::new(),
            status: PathStatus::Complete,
        })
    }
}

struct PathRecorder<'a> {
    keep_steps: bool,
    split: Option<&'a IntervalUnion>,
    sets: &'a [(String, IntervalUnion)],
    steps: Vec<StepRecord>,
    sigma1: f64,
    sigma2: f64,
    occupation: Vec<f64>,
    dt: f64,
}

impl StepObserver for PathRecorder<'_> {
    #[inline]
    fn observe(&mut self, st: &Step) -> bool {
        if self.keep_steps {
            self.steps.push(StepRecord {
                s: st.s,
                b: st.b,
                sigma: st.sigma,
            });
        }
        match self.split {
            Some(a) if a.contains(st.b) => self.sigma1 += st.increment,
            _ => self.sigma2 += st.increment,
        }
        for (occ, (_, set)) in self.occupation.iter_mut().zip(self.sets) {
            if set.contains(st.b) {
                *occ += self.dt;
            }
        }
        false
    }
}

/// Simulates and stores one full coupled path.
pub fn simulate_coupled(
    field: &AlphaField,
    config: &SimConfig,
    split_set: Option<&IntervalUnion>,
    occupation_sets: &[(String, IntervalUnion)],
    stream: &mut RandomStream,
) -> Result<CoupledPath> {
    let mut rec = PathRecorder {
        keep_steps: true,
        split: split_set,
        sets: occupation_sets,
        steps: vec![StepRecord {
            s: 0.0,
            b: config.x0,
            sigma: 0.0,
        }],
        sigma1: 0.0,
        sigma2: 0.0,
        occupation: vec![0.0; occupation_sets.len()],
        dt: config.dt,
    };
    let out = drive(field, config, stream, &mut rec)?;
    Ok(CoupledPath {
        dt: config.dt,
        steps: rec.steps,
        split_set: split_set.cloned(),
        sigma1_acc: rec.sigma1,
        sigma2_acc: rec.sigma2,
        occupation_internal: occupation_sets
            .iter()
            .map(|(n, _)| n.clone())
            .zip(rec.occupation)
            .collect(),
        status: out.status,
    })
}

/// `X(t) = B(L(t))` sampled on an external-time grid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeChangedSample {
    pub external_times: Vec<f64>,
    pub positions: Vec<f64>,
    /// `L(t_j)` in internal time.
    pub l_values: Vec<f64>,
    /// Internal step index of `L(t_j)`.
    pub step_index: Vec<u64>,
    /// `sigma(L(t)-)`.
    pub g_values: Vec<f64>,
    /// `sigma(L(t))`.
    pub h_values: Vec<f64>,
    /// Time since `X` last changed value.
    pub age: Vec<f64>,
}

impl TimeChangedSample {
    fn with_capacity(n: usize) -> Self {
        Self {
            external_times: Vec::with_capacity(n),
            positions: Vec::with_capacity(n),
            l_values: Vec::with_capacity(n),
            step_index: Vec::with_capacity(n),
            g_values: Vec::with_capacity(n),
            h_values: Vec::with_capacity(n),
            age: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, t: f64, k: u64, s: f64, b: f64, g: f64, h: f64, age: f64) {
        self.external_times.push(t);
        self.positions.push(b);
        self.l_values.push(s);
        self.step_index.push(k);
        self.g_values.push(g);
        self.h_values.push(h);
        self.age.push(age);
    }

    pub fn len(&self) -> usize {
        self.external_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.external_times.is_empty()
    }
}

fn check_grid(external_times: &[f64]) -> Result<()> {
    if external_times.is_empty() {
        return domain("external grid is empty");
    }
    if external_times.iter().any(|t| !(*t >= 0.0 && t.is_finite()))
        || external_times.windows(2).any(|w| !(w[0] < w[1]))
    {
        return domain("external grid must be finite, nonnegative and strictly ascending");
    }
    Ok(())
}

/// Inverts the clock of a stored path: `L(t)` is the first step with
/// `sigma_k > t` (strict, so `t = sigma_k` maps to step `k + 1`).
pub fn invert_time_change(path: &CoupledPath, external_times: &[f64]) -> Result<TimeChangedSample> {
    check_grid(external_times)?;
    let sigma_final = path.sigma_final();
    let last = *external_times.last().unwrap();
    if last >= sigma_final {
        return Err(Error::PathTooShort {
            t: last,
            sigma_final,
        });
    }
    let steps = &path.steps;
    let mut out = TimeChangedSample::with_capacity(external_times.len());
    for &t in external_times {
        let k = steps.partition_point(|r| r.sigma <= t);
        debug_assert!(k >= 1 && k < steps.len());
        let rec = steps[k];
        let g = steps[k - 1].sigma;
        let mut change = 0.0;
        for m in (1..k).rev() {
            if steps[m + 1].b != steps[m].b {
                change = steps[m].sigma;
                break;
            }
        }
        out.push(t, k as u64, rec.s, rec.b, g, rec.sigma, t - change);
    }
    Ok(out)
}

/// Left-endpoint quadrature of `1{X(s) ∈ set}` over the sample grid up to
/// `t`, divided by `t`. The stretch before the first grid point uses the
/// first sampled position.
pub fn occupation_fraction(sample: &TimeChangedSample, set: &IntervalUnion, t: f64) -> f64 {
    let ts = &sample.external_times;
    if ts.is_empty() || !(t > 0.0) {
        return 0.0;
    }
    let mut acc = 0.0;
    let mut left = 0.0;
    for j in 0..ts.len() {
        if left >= t {
            break;
        }
        let right = ts.get(j + 1).copied().unwrap_or(f64::INFINITY).min(t);
        let cell_lo = if j == 0 { 0.0 } else { ts[j] };
        if set.contains(sample.positions[j]) {
            acc += (right - cell_lo).max(0.0);
        }
        left = right;
    }
    (acc / t).clamp(0.0, 1.0)
}

/// Exact occupation of `set` by `X` on `[0, t]`, from a stored path.
pub fn exact_occupation(path: &CoupledPath, set: &IntervalUnion, t: f64) -> f64 {
    let mut acc = 0.0;
    for w in path.steps.windows(2) {
        let (g, h) = (w[0].sigma, w[1].sigma);
        if g >= t {
            break;
        }
        if set.contains(w[1].b) {
            acc += h.min(t) - g;
        }
    }
    acc / t
}

/// Per-path result of streaming inversion.
#[derive(Clone, Debug)]
pub struct StreamedPath {
    pub sample: TimeChangedSample,
    /// Exact occupation fraction of each tracked set at each grid time.
    pub occupation: Vec<Vec<f64>>,
    /// Whether `X(t_j)` lies in each tracked set.
    pub hits: Vec<Vec<bool>>,
    pub status: PathStatus,
    pub steps: u64,
}

struct GridRecorder<'a> {
    grid: &'a [f64],
    sets: &'a [IntervalUnion],
    next: usize,
    cum: Vec<f64>,
    prev_b: f64,
    last_change: f64,
    sample: TimeChangedSample,
    occupation: Vec<Vec<f64>>,
    hits: Vec<Vec<bool>>,
}

impl StepObserver for GridRecorder<'_> {
    #[inline]
    fn observe(&mut self, st: &Step) -> bool {
        if st.k >= 2 && st.b != self.prev_b {
            self.last_change = st.sigma_prev;
        }
        self.prev_b = st.b;
        if self.next < self.grid.len() && self.grid[self.next] < st.sigma {
            let inside: Vec<bool> = self.sets.iter().map(|s| s.contains(st.b)).collect();
            while self.next < self.grid.len() && self.grid[self.next] < st.sigma {
                let t = self.grid[self.next];
                self.sample
                    .push(t, st.k, st.s, st.b, st.sigma_prev, st.sigma, t - self.last_change);
                for (i, &inn) in inside.iter().enumerate() {
                    let partial = if inn { t - st.sigma_prev } else { 0.0 };
                    let frac = if t > 0.0 { (self.cum[i] + partial) / t } else { inn as u8 as f64 };
                    self.occupation[i].push(frac.clamp(0.0, 1.0));
                    self.hits[i].push(inn);
                }
                self.next += 1;
            }
        }
        for (c, s) in self.cum.iter_mut().zip(self.sets) {
            if s.contains(st.b) {
                *c += st.increment;
            }
        }
        self.next == self.grid.len()
    }
}

/// Simulates one path and inverts it against `grid` on the fly, keeping
/// memory at O(grid) and tracking exact occupation of `sets`.
pub fn simulate_time_changed(
    field: &AlphaField,
    config: &SimConfig,
    grid: &[f64],
    sets: &[IntervalUnion],
    stream: &mut RandomStream,
) -> Result<StreamedPath> {
    check_grid(grid)?;
    let mut cfg = config.clone();
    cfg.target_external_time = cfg.target_external_time.max(*grid.last().unwrap());
    let mut rec = GridRecorder {
        grid,
        sets,
        next: 0,
        cum: vec![0.0; sets.len()],
        prev_b: config.x0,
        last_change: 0.0,
        sample: TimeChangedSample::with_capacity(grid.len()),
        occupation: vec![Vec::with_capacity(grid.len()); sets.len()],
        hits: vec![Vec::with_capacity(grid.len()); sets.len()],
    };
    let out = drive(field, &cfg, stream, &mut rec)?;
    let status = if rec.next == grid.len() {
        PathStatus::Complete
    } else if out.status == PathStatus::Complete {
        PathStatus::StepBudgetExhausted
    } else {
        out.status
    };
    Ok(StreamedPath {
        sample: rec.sample,
        occupation: rec.occupation,
        hits: rec.hits,
        status,
        steps: out.steps,
    })
}

/// Occupation split sampled on an internal-time grid.
#[derive(Clone, Debug, Default)]
pub struct GrowthTrace {
    pub internal_times: Vec<f64>,
    /// `H_s`: internal time spent in the split set.
    pub occupation: Vec<f64>,
    /// `sigma_1(H_s)`.
    pub sigma1: Vec<f64>,
    /// `sigma_2(s - H_s)`.
    pub sigma2: Vec<f64>,
    /// `sigma(s)`.
    pub sigma: Vec<f64>,
}

struct GrowthRecorder<'a> {
    grid_steps: Vec<u64>,
    split: &'a IntervalUnion,
    dt: f64,
    next: usize,
    in_set: u64,
    s1: f64,
    s2: f64,
    trace: GrowthTrace,
}

impl StepObserver for GrowthRecorder<'_> {
    #[inline]
    fn observe(&mut self, st: &Step) -> bool {
        if self.split.contains(st.b) {
            self.in_set += 1;
            self.s1 += st.increment;
        } else {
            self.s2 += st.increment;
        }
        while self.next < self.grid_steps.len() && st.k >= self.grid_steps[self.next] {
            let tr = &mut self.trace;
            // the grid point snapped up to the step actually taken
            tr.internal_times.push(self.grid_steps[self.next] as f64 * self.dt);
            tr.occupation.push(self.in_set as f64 * self.dt);
            tr.sigma1.push(self.s1);
            tr.sigma2.push(self.s2);
            tr.sigma.push(st.sigma);
            self.next += 1;
        }
        self.next == self.grid_steps.len()
    }
}

/// Simulates in internal time up to the last grid point, recording
/// `H_s`, `sigma_1(H_s)`, `sigma_2(s - H_s)` and `sigma(s)` against `split`.
pub fn simulate_growth(
    field: &AlphaField,
    config: &SimConfig,
    split: &IntervalUnion,
    internal_grid: &[f64],
    stream: &mut RandomStream,
) -> Result<(GrowthTrace, PathStatus)> {
    check_grid(internal_grid)?;
    let dt = config.dt;
    let grid_steps: Vec<u64> = internal_grid
        .iter()
        .map(|s| (s / dt - 1e-9).ceil().max(1.0) as u64)
        .collect();
    let mut cfg = config.clone();
    cfg.internal_horizon = Some(*internal_grid.last().unwrap());
    cfg.target_external_time = f64::INFINITY.min(cfg.overflow_cap * 0.5);
    cfg.max_steps = cfg.max_steps.max(*grid_steps.last().unwrap());
    let mut rec = GrowthRecorder {
        grid_steps,
        split,
        dt,
        next: 0,
        in_set: 0,
        s1: 0.0,
        s2: 0.0,
        trace: GrowthTrace::default(),
    };
    let out = drive(field, &cfg, stream, &mut rec)?;
    let status = if rec.next == internal_grid.len() {
        PathStatus::Complete
    } else {
        out.status
    };
    Ok((rec.trace, status))
}

/// Geometric grid `t_min * r^j` with `n` points ending at `t_max`.
pub fn geometric_grid(t_min: f64, t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min) || n < 2 {
        return domain("geometric grid needs 0 < t_min < t_max and n >= 2");
    }
    let r = (t_max / t_min).ln() / (n - 1) as f64;
    let mut g: Vec<f64> = (0..n).map(|j| t_min * (r * j as f64).exp()).collect();
    g[n - 1] = t_max;
    Ok(g)
}

/// Linear grid `t_max * j / n`, `j = 1..=n`.
pub fn linear_grid(t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0) || n < 1 {
        return domain("linear grid needs t_max > 0 and n >= 1");
    }
    Ok((1..=n).map(|j| t_max * j as f64 / n as f64).collect())
}

// Binary path dump: little-endian.
//   magic   8 bytes  "VOPATH01"
//   version u32      1
//   reserved u32     0
//   dt      f64
//   field   u64      first 8 bytes of SHA-256 of the field's canonical text
//   n       u64      number of records
//   records n x (s f64, b f64, sigma f64)
pub const DUMP_MAGIC: &[u8; 8] = b"VOPATH01";
pub const DUMP_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DumpHeader {
    pub version: u32,
    pub dt: f64,
    pub field_hash: u64,
    pub n_records: u64,
}

pub fn field_hash(field: &AlphaField) -> u64 {
    let digest = Sha256::digest(field.canonical().as_bytes());
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

pub fn write_path_dump<W: Write>(path: &CoupledPath, field: &AlphaField, mut w: W) -> Result<()> {
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&DUMP_VERSION.to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    w.write_all(&path.dt.to_le_bytes())?;
    w.write_all(&field_hash(field).to_le_bytes())?;
    w.write_all(&(path.steps.len() as u64).to_le_bytes())?;
    for r in &path.steps {
        w.write_all(&r.s.to_le_bytes())?;
        w.write_all(&r.b.to_le_bytes())?;
        w.write_all(&r.sigma.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_path_dump<R: Read>(mut r: R) -> Result<(DumpHeader, Vec<StepRecord>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return domain("not a path dump (bad magic)");
    }
    let mut u4 = [0u8; 4];
    let mut u8b = [0u8; 8];
    r.read_exact(&mut u4)?;
    let version = u32::from_le_bytes(u4);
    if version != DUMP_VERSION {
        return domain(format!("unsupported dump version {version}"));
    }
    r.read_exact(&mut u4)?;
    let mut f64_next = |r: &mut R| -> Result<f64> {
        r.read_exact(&mut u8b)?;
        Ok(f64::from_le_bytes(u8b))
    };
    let dt = f64_next(&mut r)?;
    let field_hash = f64_next(&mut r)?.to_bits();
    let n_records = f64_next(&mut r)?.to_bits();
    let mut steps = Vec::with_capacity(n_records.min(1 << 24) as usize);
    for _ in 0..n_records {
        let s = f64_next(&mut r)?;
        let b = f64_next(&mut r)?;
        let sigma = f64_next(&mut r)?;
        steps.push(StepRecord { s, b, sigma });
    }
    Ok((
        DumpHeader {
            version,
            dt,
            field_hash,
            n_records,
        },
        steps,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_path() -> CoupledPath {
        CoupledPath::from_records(
            1.0,
            vec![
                StepRecord { s: 0.0, b: 0.0, sigma: 0.0 },
                StepRecord { s: 1.0, b: 0.4, sigma: 2.0 },
                StepRecord { s: 2.0, b: -0.3, sigma: 5.0 },
                StepRecord { s: 3.0, b: 0.1, sigma: 9.0 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn inversion_inside_a_trap() {
        let s = invert_time_change(&toy_path(), &[3.0]).unwrap();
        assert_eq!(s.step_index[0], 2);
        assert_eq!(s.g_values[0], 2.0);
        assert_eq!(s.h_values[0], 5.0);
        assert_eq!(s.positions[0], -0.3);
        assert_eq!(s.age[0], 1.0);
    }

    #[test]
    fn inversion_tie_goes_to_next_step() {
        let s = invert_time_change(&toy_path(), &[2.0]).unwrap();
        assert_eq!(s.step_index[0], 2);
        assert_eq!(s.g_values[0], 2.0);
        assert_eq!(s.age[0], 0.0);
    }

    #[test]
    fn inversion_needs_a_long_enough_path() {
        assert!(matches!(
            invert_time_change(&toy_path(), &[1.0, 9.0]),
            Err(Error::PathTooShort { .. })
        ));
    }

    #[test]
    fn identity_clock_gives_brownian_motion() {
        let dt = 0.5;
        let recs: Vec<StepRecord> = (0..20)
            .map(|k| StepRecord {
                s: k as f64 * dt,
                b: (k as f64).sin(),
                sigma: k as f64 * dt,
            })
            .collect();
        let p = CoupledPath::from_records(dt, recs).unwrap();
        let ts: Vec<f64> = (1..15).map(|j| j as f64 * dt + 0.25).collect();
        let s = invert_time_change(&p, &ts).unwrap();
        for (j, &t) in ts.iter().enumerate() {
            let k = s.step_index[j] as usize;
            assert!((s.l_values[j] - t).abs() <= dt);
            assert_eq!(s.positions[j], (k as f64).sin());
            assert!(s.g_values[j] <= t && t < s.h_values[j]);
        }
    }

    #[test]
    fn age_skips_repeated_positions() {
        let p = CoupledPath::from_records(
            1.0,
            vec![
                StepRecord { s: 0.0, b: 0.0, sigma: 0.0 },
                StepRecord { s: 1.0, b: 1.0, sigma: 1.0 },
                StepRecord { s: 2.0, b: 2.0, sigma: 2.0 },
                StepRecord { s: 3.0, b: 2.0, sigma: 3.0 },
                StepRecord { s: 4.0, b: 5.0, sigma: 4.0 },
            ],
        )
        .unwrap();
        let s = invert_time_change(&p, &[2.5, 0.5]).ok();
        assert!(s.is_none(), "grid must be ascending");
        let s = invert_time_change(&p, &[0.5, 2.5]).unwrap();
        assert_eq!(s.age[0], 0.5);
        // X = 2 on [1, 3): last change at 1
        assert_eq!(s.age[1], 1.5);
    }

    #[test]
    fn occupation_quadrature() {
        let ts: Vec<f64> = (1..=100).map(|j| j as f64 * 0.1).collect();
        let inside = IntervalUnion::single(0.0, 1.0);
        let mut s = TimeChangedSample::default();
        for &t in &ts {
            let b = if t < 5.0 { 0.5 } else { 3.0 };
            s.push(t, 0, 0.0, b, 0.0, 0.0, 0.0);
        }
        assert_eq!(occupation_fraction(&s, &IntervalUnion::real_line(), 10.0), 1.0);
        assert_eq!(occupation_fraction(&s, &IntervalUnion::single(10.0, 11.0), 10.0), 0.0);
        let half = occupation_fraction(&s, &inside, 10.0);
        assert!((half - 0.5).abs() <= 0.1 / 10.0 + 1e-12, "{half}");
    }

    #[test]
    fn split_accumulators_sum_to_clock() {
        let field = AlphaField::two_level(0.3, 0.0, 1.0, 0.7).unwrap();
        let a = IntervalUnion::single(0.0, 1.0);
        let cfg = SimConfig::new(0.01, 1e3).with_x0(0.5);
        let mut st = RandomStream::new(4, 0);
        let p = simulate_coupled(&field, &cfg, Some(&a), &[("A".into(), a.clone())], &mut st).unwrap();
        assert!(p.is_complete());
        let tot = p.sigma1_acc + p.sigma2_acc;
        assert!((tot - p.sigma_final()).abs() <= 1e-12 * p.sigma_final());
        let h = p.occupation_internal["A"];
        let count = p.steps.iter().skip(1).filter(|r| a.contains(r.b)).count() as f64 * cfg.dt;
        assert!((h - count).abs() < 1e-9);
    }

    #[test]
    fn streaming_matches_stored_inversion() {
        let field = AlphaField::two_level(0.3, 0.0, 1.0, 0.7).unwrap();
        let a = IntervalUnion::single(0.0, 1.0);
        let cfg = SimConfig::new(0.01, 500.0).with_x0(0.5);
        let grid = geometric_grid(1.0, 500.0, 40).unwrap();
        let stored = simulate_coupled(&field, &cfg, None, &[], &mut RandomStream::new(8, 3)).unwrap();
        let inv = invert_time_change(&stored, &grid).unwrap();
        let streamed =
            simulate_time_changed(&field, &cfg, &grid, &[a.clone()], &mut RandomStream::new(8, 3)).unwrap();
        assert_eq!(streamed.status, PathStatus::Complete);
        assert_eq!(inv, streamed.sample);
        for (j, &t) in grid.iter().enumerate() {
            let exact = exact_occupation(&stored, &a, t);
            assert!((exact - streamed.occupation[0][j]).abs() < 1e-9);
        }
    }

    #[test]
    fn budget_and_overflow_flags() {
        let field = AlphaField::constant(0.9).unwrap();
        let cfg = SimConfig::new(0.01, 1e6).with_max_steps(10);
        let p = simulate_coupled(&field, &cfg, None, &[], &mut RandomStream::new(1, 1)).unwrap();
        assert_eq!(p.status, PathStatus::StepBudgetExhausted);
        assert_eq!(p.steps.len(), 11);

        let tiny = AlphaField::constant(0.06).unwrap();
        let mut cfg = SimConfig::new(1.0, 1e300);
        cfg.overflow_cap = 1e10;
        cfg.target_external_time = 1e9;
        let p = simulate_coupled(&tiny, &cfg, None, &[], &mut RandomStream::new(1, 1)).unwrap();
        assert_eq!(p.status, PathStatus::TimeOverflow);
        assert!(p.sigma_final() <= 1e10);
    }

    #[test]
    fn dump_roundtrip() {
        let field = AlphaField::two_level(0.3, 0.0, 1.0, 0.7).unwrap();
        let cfg = SimConfig::new(0.1, 50.0);
        let p = simulate_coupled(&field, &cfg, None, &[], &mut RandomStream::new(2, 2)).unwrap();
        let mut buf = Vec::new();
        write_path_dump(&p, &field, &mut buf).unwrap();
        assert_eq!(buf.len(), 40 + 24 * p.steps.len());
        let (hdr, recs) = read_path_dump(&buf[..]).unwrap();
        assert_eq!(hdr.dt, 0.1);
        assert_eq!(hdr.field_hash, field_hash(&field));
        assert_eq!(recs, p.steps);
        buf[0] = b'X';
        assert!(read_path_dump(&buf[..]).is_err());
    }

    #[test]
    fn growth_trace_is_consistent() {
        let field = AlphaField::two_level(0.3, 0.0, 1.0, 0.7).unwrap();
        let a = IntervalUnion::single(0.0, 1.0);
        let cfg = SimConfig::new(0.1, 1.0);
        let grid = geometric_grid(10.0, 1000.0, 12).unwrap();
        let (tr, status) = simulate_growth(&field, &cfg, &a, &grid, &mut RandomStream::new(3, 0)).unwrap();
        assert_eq!(status, PathStatus::Complete);
        assert_eq!(tr.sigma.len(), 12);
        for j in 0..12 {
            assert!((tr.sigma1[j] + tr.sigma2[j] - tr.sigma[j]).abs() <= 1e-12 * tr.sigma[j]);
            assert!(tr.occupation[j] <= tr.internal_times[j] + 1e-9);
        }
    }
}

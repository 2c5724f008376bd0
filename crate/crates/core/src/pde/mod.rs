//! Variable-order time-fractional diffusion `D_t^{alpha(x)} q = q''/2` on a
//! uniform 1-D grid, with the L1 scheme for the Caputo-type derivative.

pub mod mittag_leffler;
pub mod tridiag;

use std::collections::HashMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::alpha::AlphaField;
use crate::error::{domain, Error, Result};
use crate::rng::RandomStream;
use crate::sim::{simulate_time_changed, PathStatus, SimConfig};
use crate::stats::MAX_INCOMPLETE_FRACTION;
use tridiag::{CyclicFactor, ThomasFactor, Tridiagonal};

pub use mittag_leffler::mittag_leffler;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Periodic,
    Dirichlet0,
    Neumann0,
}

/// Uniform grid with spacing `(x_max - x_min) / n_x`.
///
/// Periodic grids put nodes at `x_min + i dx`; the two closed boundaries use
/// cell centres `x_min + (i + 1/2) dx`, with the boundary half a cell away
/// from the first and last node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub boundary: Boundary,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_x: usize, boundary: Boundary) -> Result<Self> {
        if n_x < 3 {
            return domain(format!("grid needs at least 3 nodes, got {n_x}"));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return domain(format!("invalid grid extent [{x_min}, {x_max}]"));
        }
        Ok(Self {
            x_min,
            x_max,
            n_x,
            boundary,
        })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_x as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        let off = if self.boundary == Boundary::Periodic { 0.0 } else { 0.5 };
        self.x_min + (i as f64 + off) * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_x).map(|i| self.node(i)).collect()
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Maps `x` into `[x_min, x_max)` for periodic grids; identity otherwise.
    pub fn wrap(&self, x: f64) -> f64 {
        if self.boundary == Boundary::Periodic {
            let l = self.length();
            self.x_min + (x - self.x_min).rem_euclid(l)
        } else {
            x
        }
    }

    /// Linear interpolation of nodal values at `x`.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let n = self.n_x;
        let dx = self.dx();
        match self.boundary {
            Boundary::Periodic => {
                let u = (self.wrap(x) - self.x_min) / dx;
                let i = (u.floor() as usize).min(n - 1);
                let w = u - i as f64;
                (1.0 - w) * values[i] + w * values[(i + 1) % n]
            }
            _ => {
                let u = (x - self.x_min) / dx - 0.5;
                if u <= 0.0 {
                    return values[0];
                }
                if u >= (n - 1) as f64 {
                    return values[n - 1];
                }
                let i = u.floor() as usize;
                let w = u - i as f64;
                (1.0 - w) * values[i] + w * values[i + 1]
            }
        }
    }

    /// Three-point second difference with the grid's boundary closure.
    pub fn second_difference(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n_x;
        let h2 = self.dx() * self.dx();
        let ghost = |inner: f64| match self.boundary {
            Boundary::Dirichlet0 => -inner,
            _ => inner,
        };
        (0..n)
            .map(|i| {
                let left = if i > 0 {
                    v[i - 1]
                } else if self.boundary == Boundary::Periodic {
                    v[n - 1]
                } else {
                    ghost(v[0])
                };
                let right = if i + 1 < n {
                    v[i + 1]
                } else if self.boundary == Boundary::Periodic {
                    v[0]
                } else {
                    ghost(v[n - 1])
                };
                (left - 2.0 * v[i] + right) / h2
            })
            .collect()
    }

    /// Matrix of `diag(d) - D_xx / 2`.
    fn system_matrix(&self, d: &[f64]) -> Tridiagonal {
        let n = self.n_x;
        let c = 0.5 / (self.dx() * self.dx());
        let mut diag: Vec<f64> = d.iter().map(|b| b + 2.0 * c).collect();
        match self.boundary {
            Boundary::Periodic => {}
            Boundary::Neumann0 => {
                diag[0] -= c;
                diag[n - 1] -= c;
            }
            Boundary::Dirichlet0 => {
                diag[0] += c;
                diag[n - 1] += c;
            }
        }
        Tridiagonal {
            lower: vec![-c; n],
            diag,
            upper: vec![-c; n],
        }
    }
}

/// L1 weights `b_j = ((j+1)^(1-a) - j^(1-a)) / (Gamma(2-a) dt^a)`, `j < n`.
pub fn l1_weights(alpha: f64, n: usize, dt: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("order must lie in (0,1), got {alpha}"));
    }
    if n < 1 || !(dt > 0.0 && dt.is_finite()) {
        return domain("need n >= 1 and dt > 0");
    }
    let scale = 1.0 / (gamma(2.0 - alpha) * dt.powf(alpha));
    let e = 1.0 - alpha;
    Ok((0..n)
        .map(|j| {
            let j = j as f64;
            ((j + 1.0).powf(e) - j.powf(e)) * scale
        })
        .collect())
}

/// Per-node L1 weight tables, shared between nodes of equal order.
#[derive(Clone, Debug)]
pub struct CaputoHistory {
    pub orders: Vec<f64>,
    table_of_node: Vec<usize>,
    tables: Vec<Vec<f64>>,
}

impl CaputoHistory {
    pub fn new(orders: &[f64], n: usize, dt: f64) -> Result<Self> {
        let mut index: HashMap<u64, usize> = HashMap::new();
        let mut tables = Vec::new();
        let mut table_of_node = Vec::with_capacity(orders.len());
        for &a in orders {
            let id = *index.entry(a.to_bits()).or_insert_with(|| {
                tables.push(Vec::new());
                tables.len() - 1
            });
            if tables[id].is_empty() {
                tables[id] = l1_weights(a, n, dt)?;
            }
            table_of_node.push(id);
        }
        Ok(Self {
            orders: orders.to_vec(),
            table_of_node,
            tables,
        })
    }

    pub fn weights(&self, node: usize) -> &[f64] {
        &self.tables[self.table_of_node[node]]
    }

    pub fn n_tables(&self) -> usize {
        self.tables.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldSolution {
    pub grid: Grid1D,
    pub dt: f64,
    pub t_grid: Vec<f64>,
    /// Row `n` holds `q(t_n, x_i)`.
    pub q: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
    /// `alpha(x_i)` used by the solver.
    pub orders: Vec<f64>,
}

impl FieldSolution {
    pub fn final_row(&self) -> &[f64] {
        self.q.last().unwrap()
    }

    pub fn t_final(&self) -> f64 {
        *self.t_grid.last().unwrap()
    }

    pub fn max_norm(&self) -> f64 {
        self.q
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest `|q(T, x)|` over the `k` nodes next to each end of the grid.
    pub fn edge_amplitude(&self, k: usize) -> f64 {
        let row = self.final_row();
        let k = k.min(row.len());
        row[..k]
            .iter()
            .chain(&row[row.len() - k..])
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

enum Factor {
    Plain(ThomasFactor),
    Cyclic(CyclicFactor),
}

impl Factor {
    fn solve_in_place(&self, rhs: &mut [f64]) {
        match self {
            Self::Plain(f) => f.solve_in_place(rhs),
            Self::Cyclic(f) => f.solve_in_place(rhs),
        }
    }
}

/// Implicit L1 time stepping from `initial` up to `t_final`.
///
/// The number of steps is `ceil(t_final / dt)` and the step actually used
/// is `t_final / n_steps`, so the last row sits exactly at `t_final`.
pub fn solve_fde(
    field: &AlphaField,
    grid: &Grid1D,
    initial: &[f64],
    t_final: f64,
    dt: f64,
) -> Result<FieldSolution> {
    let orders: Vec<f64> = grid.nodes().iter().map(|&x| field.evaluate(x)).collect();
    solve_fde_with_orders(&orders, grid, initial, t_final, dt)
}

pub fn solve_fde_with_orders(
    orders: &[f64],
    grid: &Grid1D,
    initial: &[f64],
    t_final: f64,
    dt: f64,
) -> Result<FieldSolution> {
    let n_x = grid.n_x;
    if initial.len() != n_x || orders.len() != n_x {
        return domain(format!("expected {n_x} nodal values"));
    }
    if initial.iter().any(|v| !v.is_finite()) {
        return domain("initial data must be finite");
    }
    if !(t_final > 0.0 && t_final.is_finite() && dt > 0.0) {
        return domain("need t_final > 0 and dt > 0");
    }
    if grid.boundary == Boundary::Dirichlet0 {
        let scale = initial.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if initial[0].abs() > 1e-6 * scale || initial[n_x - 1].abs() > 1e-6 * scale {
            return Err(Error::Precondition(
                "zero Dirichlet boundary needs initial data vanishing at the edges".into(),
            ));
        }
    }
    let n_steps = (t_final / dt - 1e-9).ceil().max(1.0) as usize;
    let dt = t_final / n_steps as f64;
    let hist = CaputoHistory::new(orders, n_steps, dt)?;
    let b0: Vec<f64> = (0..n_x).map(|i| hist.weights(i)[0]).collect();
    let m = grid.system_matrix(&b0);
    let factor = if grid.boundary == Boundary::Periodic {
        Factor::Cyclic(CyclicFactor::new(&m)?)
    } else {
        Factor::Plain(ThomasFactor::new(&m)?)
    };

    let mut q = Vec::with_capacity(n_steps + 1);
    q.push(initial.to_vec());
    // diffs[m - 1] = q^m - q^(m-1)
    let mut diffs: Vec<Vec<f64>> = Vec::with_capacity(n_steps);
    let mut rhs = vec![0.0; n_x];
    for n in 1..=n_steps {
        let prev = &q[n - 1];
        for i in 0..n_x {
            rhs[i] = b0[i] * prev[i];
        }
        for j in 1..n {
            let d = &diffs[n - j - 1];
            for i in 0..n_x {
                rhs[i] -= hist.weights(i)[j] * d[i];
            }
        }
        factor.solve_in_place(&mut rhs);
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverFailure(format!("non-finite solution at step {n}")));
        }
        diffs.push(rhs.iter().zip(prev).map(|(a, b)| a - b).collect());
        q.push(rhs.clone());
    }
    Ok(FieldSolution {
        grid: *grid,
        dt,
        t_grid: (0..=n_steps).map(|k| k as f64 * dt).collect(),
        q,
        initial: initial.to_vec(),
        orders: orders.to_vec(),
    })
}

/// Memory kernel `nu_bar(r, x_i)` in the mild-solution identity, through
/// its first two moments on `[a, b]`:
/// `int_a^b nu_bar(r) dr` and `int_a^b nu_bar(r) (b - r) dr`.
pub trait MemoryKernel: Sync {
    fn moments(&self, node: usize, a: f64, b: f64) -> (f64, f64);
}

/// `nu_bar(r, x) = r^(-alpha(x)) / Gamma(1 - alpha(x))`.
#[derive(Clone, Debug)]
pub struct PowerLawKernel {
    orders: Vec<f64>,
    inv_gamma: Vec<f64>,
}

impl PowerLawKernel {
    pub fn new(orders: &[f64]) -> Self {
        Self {
            orders: orders.to_vec(),
            inv_gamma: orders.iter().map(|a| 1.0 / gamma(1.0 - a)).collect(),
        }
    }
}

impl MemoryKernel for PowerLawKernel {
    fn moments(&self, node: usize, a: f64, b: f64) -> (f64, f64) {
        let al = self.orders[node];
        let e1 = 1.0 - al;
        let e2 = 2.0 - al;
        let p1 = b.powf(e1) - a.powf(e1);
        let p2 = b.powf(e2) - a.powf(e2);
        let m0 = p1 / e1;
        let m1 = b * p1 / e1 - p2 / e2;
        (m0 * self.inv_gamma[node], m1 * self.inv_gamma[node])
    }
}

/// Max-norm defect of the mild-solution identity at the final time,
/// with the power-law kernel of `field`.
pub fn mild_residual(solution: &FieldSolution, field: &AlphaField) -> f64 {
    let orders: Vec<f64> = solution.grid.nodes().iter().map(|&x| field.evaluate(x)).collect();
    mild_residual_with_kernel(solution, &PowerLawKernel::new(&orders))
}

/// The left side integrates the kernel exactly against the piecewise-linear
/// interpolant of `q` in time; the right side applies the discrete `D_xx/2`
/// to the trapezoid time integral of `q`.
pub fn mild_residual_with_kernel(solution: &FieldSolution, kernel: &dyn MemoryKernel) -> f64 {
    let n_t = solution.q.len() - 1;
    let n_x = solution.grid.n_x;
    let t_end = solution.t_final();
    let dt = solution.dt;
    let u = &solution.initial;
    let lhs: Vec<f64> = (0..n_x)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for m in 0..n_t {
                let b = t_end - solution.t_grid[m];
                let a = (t_end - solution.t_grid[m + 1]).max(0.0);
                let (m0, m1) = kernel.moments(i, a, b);
                let qm = solution.q[m][i];
                let slope = (solution.q[m + 1][i] - qm) / dt;
                acc += (qm - u[i]) * m0 + slope * m1;
            }
            acc
        })
        .collect();
    let mut integral = vec![0.0; n_x];
    for (m, row) in solution.q.iter().enumerate() {
        let w = if m == 0 || m == n_t { 0.5 * dt } else { dt };
        for (s, v) in integral.iter_mut().zip(row) {
            *s += w * v;
        }
    }
    let rhs = solution.grid.second_difference(&integral);
    lhs.iter()
        .zip(&rhs)
        .map(|(l, r)| (l - 0.5 * r).abs())
        .fold(0.0, f64::max)
}

/// Initial data for the backward equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Constant { value: f64 },
    /// `cos(k x)`.
    Cosine { k: f64 },
    Gaussian { center: f64, width: f64 },
    /// Smoothed indicator of `[lo, hi)` with transition width `eps`.
    SmoothIndicator { lo: f64, hi: f64, eps: f64 },
}

impl InitialCondition {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::Cosine { k } => (k * x).cos(),
            Self::Gaussian { center, width } => (-((x - center) / width).powi(2)).exp(),
            Self::SmoothIndicator { lo, hi, eps } => {
                0.5 * (((x - lo) / eps).tanh() - ((x - hi) / eps).tanh())
            }
        }
    }

    pub fn sample(&self, grid: &Grid1D) -> Vec<f64> {
        grid.nodes().iter().map(|&x| self.eval(x)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct McOptions {
    pub sim_dt: f64,
    pub n_paths: usize,
    pub base_seed: u64,
    pub start_points: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonPoint {
    pub x: f64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub pde: f64,
    pub within: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct McPdeReport {
    pub t_final: f64,
    pub points: Vec<ComparisonPoint>,
    pub max_discrepancy: f64,
    pub all_within: bool,
    pub n_incomplete: usize,
}

/// Monte Carlo estimate of `E[u(X(t)) | X(0) = x0]`; periodic grids wrap
/// the end position before `u` is evaluated. Path `i` uses stream `stream_offset + i`.
pub fn mc_expectation(
    field: &AlphaField,
    grid: &Grid1D,
    initial: &InitialCondition,
    x0: f64,
    t: f64,
    opts: &McOptions,
    stream_offset: u64,
) -> Result<(f64, f64, usize)> {
    let cfg = SimConfig::new(opts.sim_dt, t).with_x0(x0);
    let outs: Vec<Option<f64>> = (0..opts.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = RandomStream::new(opts.base_seed, stream_offset + i);
            let p = simulate_time_changed(field, &cfg, &[t], &[], &mut stream)?;
            Ok((p.status == PathStatus::Complete).then(|| initial.eval(grid.wrap(p.sample.positions[0]))))
        })
        .collect::<Result<_>>()?;
    let mut vals: Vec<f64> = outs.iter().flatten().copied().collect();
    let incomplete = outs.len() - vals.len();
    if vals.is_empty() || incomplete as f64 > MAX_INCOMPLETE_FRACTION * outs.len() as f64 {
        return Err(Error::TooManyIncomplete {
            incomplete,
            total: outs.len(),
        });
    }
    let (mean, hw) = crate::stats::mean_ci(&mut vals);
    Ok((mean, hw / crate::stats::Z95, incomplete))
}

/// Compares the solver against Monte Carlo at each start point; a point
/// agrees when `|mc - pde| <= max(3 se, tolerance)`.
pub fn compare_mc_pde(
    field: &AlphaField,
    grid: &Grid1D,
    initial: &InitialCondition,
    t_final: f64,
    pde_dt: f64,
    opts: &McOptions,
    tolerance: f64,
) -> Result<McPdeReport> {
    let sol = solve_fde(field, grid, &initial.sample(grid), t_final, pde_dt)?;
    let mut points = Vec::with_capacity(opts.start_points.len());
    let mut n_incomplete = 0;
    for (r, &x) in opts.start_points.iter().enumerate() {
        let (mc_mean, mc_stderr, inc) = mc_expectation(
            field,
            grid,
            initial,
            x,
            t_final,
            opts,
            (r * opts.n_paths) as u64,
        )?;
        n_incomplete += inc;
        let pde = grid.interpolate(sol.final_row(), x);
        let within = (mc_mean - pde).abs() <= (3.0 * mc_stderr).max(tolerance);
        points.push(ComparisonPoint {
            x,
            mc_mean,
            mc_stderr,
            pde,
            within,
        });
    }
    let max_discrepancy = points
        .iter()
        .map(|p| (p.mc_mean - p.pde).abs())
        .fold(0.0, f64::max);
    Ok(McPdeReport {
        t_final,
        all_within: points.iter().all(|p| p.within),
        points,
        max_discrepancy,
        n_incomplete,
    })
}

const FIELD_MAGIC: &[u8; 8] = b"VOFIELD1";

fn boundary_code(b: Boundary) -> u32 {
    match b {
        Boundary::Periodic => 0,
        Boundary::Dirichlet0 => 1,
        Boundary::Neumann0 => 2,
    }
}

/// Little-endian dump: magic, version, boundary code, rows, columns, dt,
/// x_min, x_max, then the solution matrix row by row.
pub fn write_field_dump<W: Write>(sol: &FieldSolution, mut w: W) -> Result<()> {
    w.write_all(FIELD_MAGIC)?;
    w.write_all(&1u32.to_le_bytes())?;
    w.write_all(&boundary_code(sol.grid.boundary).to_le_bytes())?;
    w.write_all(&(sol.q.len() as u64).to_le_bytes())?;
    w.write_all(&(sol.grid.n_x as u64).to_le_bytes())?;
    for v in [sol.dt, sol.grid.x_min, sol.grid.x_max] {
        w.write_all(&v.to_le_bytes())?;
    }
    for row in &sol.q {
        for v in row {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a dump back as `(grid, dt, rows)`.
pub fn read_field_dump<R: Read>(mut r: R) -> Result<(Grid1D, f64, Vec<Vec<f64>>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != FIELD_MAGIC {
        return domain("not a field dump");
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != 1 {
        return domain("unsupported field dump version");
    }
    r.read_exact(&mut b4)?;
    let boundary = match u32::from_le_bytes(b4) {
        0 => Boundary::Periodic,
        1 => Boundary::Dirichlet0,
        2 => Boundary::Neumann0,
        c => return domain(format!("unknown boundary code {c}")),
    };
    let mut next_u64 = |r: &mut R| -> Result<u64> {
        r.read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    let rows = next_u64(&mut r)? as usize;
    let cols = next_u64(&mut r)? as usize;
    let dt = f64::from_bits(next_u64(&mut r)?);
    let x_min = f64::from_bits(next_u64(&mut r)?);
    let x_max = f64::from_bits(next_u64(&mut r)?);
    let grid = Grid1D::new(x_min, x_max, cols, boundary)?;
    let mut q = Vec::with_capacity(rows);
    for _ in 0..rows {
        let mut row = Vec::with_capacity(cols);
        for _ in 0..cols {
            row.push(f64::from_bits(next_u64(&mut r)?));
        }
        q.push(row);
    }
    Ok((grid, dt, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn periodic(n: usize) -> Grid1D {
        Grid1D::new(-PI, PI, n, Boundary::Periodic).unwrap()
    }

    #[test]
    fn weight_examples() {
        let w = l1_weights(0.5, 4, 0.01).unwrap();
        assert!((w[0] - 10.0 / gamma(1.5)).abs() < 1e-12);
        assert!((w[0] - 11.283_791_670_955_1).abs() < 1e-9);
        let w = l1_weights(0.999, 5, 0.1).unwrap();
        assert!((w[0] - 10.0).abs() < 0.05);
        assert!(w[1..].iter().all(|v| *v < 0.01 * w[0]));
        assert!(l1_weights(1.0, 3, 0.1).is_err());
    }

    proptest! {
        #[test]
        fn weights_positive_decreasing_and_telescoping(a in 0.05f64..0.95, n in 1usize..200, dt in 1e-4f64..1.0) {
            let w = l1_weights(a, n, dt).unwrap();
            prop_assert!(w.iter().all(|v| *v > 0.0));
            prop_assert!(w.windows(2).all(|p| p[1] < p[0]));
            let sum: f64 = w.iter().sum();
            let want = (n as f64).powf(1.0 - a) / (gamma(2.0 - a) * dt.powf(a));
            prop_assert!((sum - want).abs() <= 1e-10 * want);
        }
    }

    #[test]
    fn history_tables_are_shared() {
        let h = CaputoHistory::new(&[0.3, 0.7, 0.3, 0.3, 0.7], 10, 0.1).unwrap();
        assert_eq!(h.n_tables(), 2);
        assert_eq!(h.weights(0), h.weights(3));
    }

    #[test]
    fn constants_are_invariant() {
        let f = AlphaField::two_level(0.3, -0.5, 0.7, 0.8).unwrap();
        for b in [Boundary::Periodic, Boundary::Neumann0] {
            let g = Grid1D::new(-2.0, 2.0, 40, b).unwrap();
            let s = solve_fde(&f, &g, &vec![2.5; 40], 1.0, 0.01).unwrap();
            for row in &s.q {
                assert!(row.iter().all(|v| (v - 2.5).abs() <= 1e-12));
            }
            assert!(mild_residual(&s, &f) <= 1e-10);
        }
    }

    #[test]
    fn first_row_is_initial() {
        let g = periodic(32);
        let u = InitialCondition::Cosine { k: 1.0 }.sample(&g);
        let s = solve_fde(&AlphaField::constant(0.5).unwrap(), &g, &u, 0.3, 0.01).unwrap();
        assert_eq!(s.q[0], u);
        assert_eq!(s.q.len(), 31);
        assert!((s.t_final() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn near_unit_order_is_heat_equation() {
        let g = periodic(128);
        let u = InitialCondition::Cosine { k: 1.0 }.sample(&g);
        let s = solve_fde(&AlphaField::new(
            crate::alpha::FieldKind::PiecewiseConstant {
                breakpoints: vec![-10.0, 10.0],
                values: vec![0.999],
                tail_left: 0.999,
                tail_right: 0.999,
            },
            crate::alpha::FieldLimits { min_alpha: 0.05, max_alpha: 0.9999 },
        )
        .unwrap(), &g, &u, 1.0, 1e-3)
        .unwrap();
        let want = (-0.5f64).exp();
        let got = s.final_row()[64] / u[64];
        assert!((got - want).abs() < 5e-3, "{got} vs {want}");
    }

    #[test]
    fn eigenmode_matches_mittag_leffler() {
        let g = periodic(256);
        let u = InitialCondition::Cosine { k: 1.0 }.sample(&g);
        let f = AlphaField::constant(0.5).unwrap();
        let s = solve_fde(&f, &g, &u, 1.0, 1e-3).unwrap();
        let want = mittag_leffler(0.5, -0.5).unwrap();
        let got = s.final_row()[128];
        assert!((got - want).abs() < 2e-3, "{got} vs {want}");
    }

    #[test]
    fn maximum_principle_random_data() {
        let mut rng = RandomStream::new(42, 0);
        let f = AlphaField::two_level(0.3, -1.0, 1.0, 0.8).unwrap();
        for trial in 0..100 {
            let b = [Boundary::Periodic, Boundary::Neumann0, Boundary::Dirichlet0][trial % 3];
            let g = Grid1D::new(-3.0, 3.0, 24, b).unwrap();
            let mut u: Vec<f64> = (0..24).map(|_| 2.0 * rng.uniform_open() - 1.0).collect();
            if b == Boundary::Dirichlet0 {
                u[0] = 0.0;
                u[23] = 0.0;
            }
            let lo = u.iter().cloned().fold(f64::INFINITY, f64::min).min(if b == Boundary::Dirichlet0 { 0.0 } else { f64::INFINITY });
            let hi = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let s = solve_fde(&f, &g, &u, 0.5, 0.02).unwrap();
            for row in &s.q {
                assert!(row.iter().all(|v| *v >= lo - 1e-12 && *v <= hi + 1e-12), "trial {trial}");
            }
        }
    }

    #[test]
    fn even_data_stays_even() {
        let g = periodic(64);
        let f = crate::alpha::vee_field(0.3, 0.4, 0.0, 2.0).unwrap();
        let u = InitialCondition::Gaussian { center: 0.0, width: 0.7 }.sample(&g);
        let s = solve_fde(&f, &g, &u, 0.5, 0.01).unwrap();
        for row in &s.q {
            for i in 1..64 {
                assert!((row[i] - row[64 - i]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn dirichlet_requires_zero_trace() {
        let g = Grid1D::new(0.0, 1.0, 10, Boundary::Dirichlet0).unwrap();
        let r = solve_fde(&AlphaField::constant(0.5).unwrap(), &g, &[1.0; 10], 1.0, 0.1);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn residual_detects_perturbation() {
        let g = periodic(64);
        let f = AlphaField::constant(0.5).unwrap();
        let u = InitialCondition::Cosine { k: 1.0 }.sample(&g);
        let mut s = solve_fde(&f, &g, &u, 1.0, 0.01).unwrap();
        let base = mild_residual(&s, &f);
        s.q[50][20] += 0.1;
        let bumped = mild_residual(&s, &f);
        assert!(bumped > 10.0 * base, "{bumped} vs {base}");
    }

    #[test]
    fn interpolation_and_wrap() {
        let g = periodic(8);
        let v: Vec<f64> = (0..8).map(|i| i as f64).collect();
        assert_eq!(g.interpolate(&v, g.node(3)), 3.0);
        assert!((g.interpolate(&v, g.node(7) + 0.5 * g.dx()) - 3.5).abs() < 1e-12);
        assert!((g.wrap(PI + 0.1) - (-PI + 0.1)).abs() < 1e-12);
    }

    #[test]
    fn field_dump_roundtrip() {
        let g = Grid1D::new(0.0, 1.0, 5, Boundary::Neumann0).unwrap();
        let s = solve_fde(&AlphaField::constant(0.4).unwrap(), &g, &[0.0, 1.0, 2.0, 1.0, 0.0], 0.1, 0.05).unwrap();
        let mut buf = Vec::new();
        write_field_dump(&s, &mut buf).unwrap();
        let (g2, dt, q) = read_field_dump(&buf[..]).unwrap();
        assert_eq!(g2, g);
        assert_eq!(dt, s.dt);
        assert_eq!(q, s.q);
    }

    #[test]
    fn unit_data_mc_is_exact() {
        let g = periodic(16);
        let f = AlphaField::constant(0.5).unwrap();
        let opts = McOptions {
            sim_dt: 0.01,
            n_paths: 50,
            base_seed: 1,
            start_points: vec![0.0, 1.0],
        };
        let r = compare_mc_pde(&f, &g, &InitialCondition::Constant { value: 1.0 }, 0.5, 0.05, &opts, 0.02).unwrap();
        assert!(r.points.iter().all(|p| p.mc_mean == 1.0));
        assert!(r.max_discrepancy <= 1e-12);
        assert!(r.all_within);
    }
}

//! One-parameter Mittag-Leffler function on the negative real axis.
//!
//! Small arguments use the power series. Beyond that the series cancels
//! badly, so the completely monotone representation
//!
//! ```text
//! E_a(-t^a) = sin(a pi)/(a pi) * int_0^inf exp(-t v^(1/a)) / (v^2 + 2 v cos(a pi) + 1) dv
//! ```
//!
//! is integrated numerically instead. The integrand is smooth and bounded,
//! with a single bump near `v = 1` that sharpens as `a -> 1`.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};

/// Series is used while `|z|^(1/alpha)` stays below this.
const SERIES_LIMIT: f64 = 4.0;

/// `E_alpha(z)` for `0 < alpha <= 1` and `z <= 0`.
pub fn mittag_leffler(alpha: f64, z: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return domain(format!("Mittag-Leffler index must lie in (0,1], got {alpha}"));
    }
    if !(z <= 0.0) {
        return domain(format!("only z <= 0 is supported, got {z}"));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if alpha == 1.0 {
        return Ok(z.exp());
    }
    let x = -z;
    let t = x.powf(1.0 / alpha);
    if t <= SERIES_LIMIT {
        Ok(series(alpha, x))
    } else {
        Ok(integral(alpha, t))
    }
}

fn series(alpha: f64, x: f64) -> f64 {
    let lx = x.ln();
    let mut sum = 1.0;
    for m in 1..2000u32 {
        let mf = m as f64;
        let mag = (mf * lx - ln_gamma(alpha * mf + 1.0)).exp();
        let term = if m % 2 == 0 { mag } else { -mag };
        sum += term;
        if mag < 1e-17 * sum.abs().max(1e-300) && mf * alpha > x {
            break;
        }
    }
    sum
}

fn integral(alpha: f64, t: f64) -> f64 {
    let c = (alpha * PI).cos();
    let inv = 1.0 / alpha;
    let f = |v: f64| (-t * v.powf(inv)).exp() / (v * v + 2.0 * v * c + 1.0);
    // beyond v_max the exponential factor is below e^-45
    let v_max = (45.0 / t).powf(alpha);
    let mut total = 0.0;
    let mut lo = 0.0;
    for hi in [0.5, 1.0, 1.5, 3.0, v_max] {
        let hi = hi.min(v_max);
        if hi > lo {
            total += adaptive_simpson(&f, lo, hi, 1e-14, 48);
            lo = hi;
        }
    }
    (alpha * PI).sin() / (alpha * PI) * total
}

pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

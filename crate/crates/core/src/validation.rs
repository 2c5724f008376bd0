//! Built-in oracle suite run by the `validate` experiment.

use std::f64::consts::PI;

use statrs::function::erf::erfc;

use crate::alpha::{AlphaField, FieldKind, FieldLimits};
use crate::error::Result;
use crate::pde::{mild_residual, mittag_leffler, solve_fde, Boundary, Grid1D, InitialCondition};
use crate::rng::{laplace_estimate, RandomStream, StableLaw};
use crate::stats::{ks_pvalue, ks_statistic};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// CDF of the positive stable law of index 1/2 with `E exp(-l S) = exp(-sqrt(l))`.
pub fn half_stable_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        erfc(0.5 / x.sqrt())
    }
}

/// Runs every oracle with `n_samples` stable draws per index.
pub fn run_validation(seed: u64, n_samples: usize) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();

    for (k, &alpha) in [0.3, 0.5, 0.8].iter().enumerate() {
        let law = StableLaw::new(alpha, 1.0)?;
        let mut s = RandomStream::new(seed, k as u64);
        let xs: Vec<f64> = (0..n_samples).map(|_| law.sample_raw(&mut s)).collect();
        for &lam in &[0.5, 1.0, 2.0] {
            let (m, se) = laplace_estimate(&xs, lam);
            let want = (-lam.powf(alpha)).exp();
            let z = (m - want).abs() / se;
            out.push(check(
                &format!("laplace alpha={alpha} lambda={lam}"),
                z <= 4.0,
                format!("empirical {m:.6} exact {want:.6} z={z:.2}"),
            ));
        }
    }

    let law = StableLaw::new(0.5, 1.0)?;
    let mut s = RandomStream::new(seed, 100);
    let xs: Vec<f64> = (0..n_samples).map(|_| law.sample_raw(&mut s)).collect();
    let d = ks_statistic(&xs, half_stable_cdf);
    let p = ks_pvalue(xs.len(), d);
    out.push(check("ks half-stable", p > 1e-3, format!("D={d:.5} p={p:.4}")));

    let e1 = mittag_leffler(1.0, -1.0)?;
    out.push(check(
        "mittag-leffler order 1",
        (e1 - (-1.0f64).exp()).abs() < 1e-12,
        format!("{e1}"),
    ));
    let zero_ok = [0.1, 0.5, 0.9].iter().all(|&a| mittag_leffler(a, 0.0).map(|v| v == 1.0).unwrap_or(false));
    out.push(check("mittag-leffler at zero", zero_ok, String::new()));
    let worst = (0..=100)
        .map(|i| {
            let x = 0.2 * i as f64;
            (mittag_leffler(0.5, -x).unwrap() - (x * x).exp() * erfc(x)).abs()
        })
        .fold(0.0, f64::max);
    out.push(check("mittag-leffler half order vs erfc", worst < 1e-8, format!("max error {worst:.2e}")));

    let grid = Grid1D::new(-PI, PI, 128, Boundary::Periodic)?;
    let u = InitialCondition::Cosine { k: 1.0 }.sample(&grid);
    let near_one = AlphaField::new(
        FieldKind::PiecewiseConstant {
            breakpoints: vec![-10.0, 10.0],
            values: vec![0.999],
            tail_left: 0.999,
            tail_right: 0.999,
        },
        FieldLimits {
            min_alpha: 0.05,
            max_alpha: 0.9999,
        },
    )?;
    let sol = solve_fde(&near_one, &grid, &u, 1.0, 1e-3)?;
    let ratio = sol.final_row()[64] / u[64];
    let want = (-0.5f64).exp();
    out.push(check(
        "heat-equation reduction",
        (ratio - want).abs() < 5e-3,
        format!("decay {ratio:.5} vs {want:.5}"),
    ));

    let half = AlphaField::constant(0.5)?;
    let sol = solve_fde(&half, &grid, &u, 1.0, 1e-3)?;
    let got = sol.final_row()[64];
    let want = mittag_leffler(0.5, -0.5)?;
    out.push(check(
        "constant-order eigenmode",
        (got - want).abs() < 2e-3,
        format!("{got:.5} vs {want:.5}"),
    ));

    let two = AlphaField::two_level(0.3, -0.5, 0.5, 0.8)?;
    let ones = vec![1.0; grid.n_x];
    let sol = solve_fde(&two, &grid, &ones, 1.0, 1e-2)?;
    let dev = sol.q.iter().flatten().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    let res = mild_residual(&sol, &two);
    out.push(check(
        "constants invariant",
        dev <= 1e-12 && res <= 1e-10,
        format!("deviation {dev:.1e} residual {res:.1e}"),
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        let r = run_validation(1, 100_000).unwrap();
        for c in &r {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
        assert!(r.len() >= 14);
    }

    #[test]
    fn half_stable_cdf_is_a_cdf() {
        assert_eq!(half_stable_cdf(0.0), 0.0);
        assert!(half_stable_cdf(1e8) > 0.9999);
        // median of the law is 1/(4 q^2) with q the erfc median
        assert!((half_stable_cdf(1.0 / (4.0 * 0.476_936_276_204_47f64.powi(2))) - 0.5).abs() < 1e-9);
    }
}

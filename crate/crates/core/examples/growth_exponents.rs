//! Log-log slopes of the occupation time `H_t` and of the clock split
//! `sigma = sigma_1(H) + sigma_2(t - H)` against internal time.

use varorder::sim::{geometric_grid, SimConfig};
use varorder::stats::{fit_growth_exponent, run_growth_ensemble, GrowthQuantity};
use varorder::{AlphaField, IntervalUnion};

fn main() -> varorder::Result<()> {
    let field = AlphaField::two_level(0.3, 0.0, 1.0, 0.7)?;
    let split = IntervalUnion::single(0.0, 1.0);
    let grid = geometric_grid(1e2, 1e5, 20)?;
    let cfg = SimConfig::new(1.0, f64::INFINITY)
        .with_x0(0.5)
        .with_internal_horizon(1e5);
    let traces = run_growth_ensemble(&field, &cfg, &split, &grid, 100, 3)?;
    for q in [GrowthQuantity::Occupation, GrowthQuantity::Sigma1OfH, GrowthQuantity::Sigma2OfRest] {
        let fit = fit_growth_exponent(&traces, q)?;
        println!("{:>15}: slope {:.3} +- {:.3}", fit.quantity, fit.slope, fit.slope_stderr);
    }
    println!("reference: H ~ t^0.5, sigma_1(H) ~ t^(1/(2*0.3)) = t^{:.3}", 1.0 / 0.6);
    Ok(())
}

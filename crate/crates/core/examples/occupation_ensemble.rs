//! Fraction of external time spent in the low-order region, averaged over
//! an ensemble, with 95% intervals.

use varorder::sim::SimConfig;
use varorder::stats::run_ensemble;
use varorder::{AlphaField, IntervalUnion};

fn main() -> varorder::Result<()> {
    let field = AlphaField::two_level(0.3, 0.0, 1.0, 0.7)?;
    let target = IntervalUnion::single(0.0, 1.0);
    let grid = [1e2, 1e3, 1e4, 1e5];
    let cfg = SimConfig::new(0.05, 1e5).with_x0(0.5);
    let s = run_ensemble(&field, &cfg, &grid, 300, &target, 7)?;
    for j in 0..grid.len() {
        let (lo, hi) = s.occ_ci(j);
        println!(
            "t={:>8}: occupation {:.3} [{:.3}, {:.3}]  P(X in A) {:.3}",
            grid[j], s.occ_mean[j], lo, hi, s.hit_prob[j]
        );
    }
    Ok(())
}

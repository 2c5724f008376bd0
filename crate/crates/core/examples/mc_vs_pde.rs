//! Monte Carlo estimate of E[cos(X(T))] next to the solver value.

use std::f64::consts::PI;

use varorder::pde::{compare_mc_pde, mittag_leffler, Boundary, Grid1D, InitialCondition, McOptions};
use varorder::AlphaField;

fn main() -> varorder::Result<()> {
    let field = AlphaField::constant(0.5)?;
    let grid = Grid1D::new(-PI, PI, 256, Boundary::Periodic)?;
    let opts = McOptions {
        sim_dt: 1e-3,
        n_paths: 4000,
        base_seed: 5,
        start_points: vec![0.0, 1.0],
    };
    for t in [0.5, 1.0, 2.0] {
        let r = compare_mc_pde(&field, &grid, &InitialCondition::Cosine { k: 1.0 }, t, 1e-3, &opts, 0.02)?;
        let ml = mittag_leffler(0.5, -0.5 * t.sqrt())?;
        for p in &r.points {
            println!(
                "T={t} x={}: mc {:.4} +- {:.4}  pde {:.4}  closed form {:.4}",
                p.x,
                p.mc_mean,
                p.mc_stderr,
                p.pde,
                ml * p.x.cos()
            );
        }
    }
    Ok(())
}

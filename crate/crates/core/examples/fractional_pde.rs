//! Solves the backward equation for a cosine mode with constant order and
//! checks it against the Mittag-Leffler solution and the mild identity.

use std::f64::consts::PI;

use varorder::pde::{mild_residual, mittag_leffler, solve_fde, Boundary, Grid1D, InitialCondition};
use varorder::AlphaField;

fn main() -> varorder::Result<()> {
    let grid = Grid1D::new(-PI, PI, 128, Boundary::Periodic)?;
    let u = InitialCondition::Cosine { k: 1.0 }.sample(&grid);
    let field = AlphaField::constant(0.5)?;
    let centre = grid.n_x / 2;
    for dt in [0.04, 0.02, 0.01, 0.005] {
        let sol = solve_fde(&field, &grid, &u, 1.0, dt)?;
        let exact = mittag_leffler(0.5, -0.5)?;
        println!(
            "dt={dt:<6} q(1, 0)={:.6} exact={exact:.6} mild residual={:.3e}",
            sol.final_row()[centre],
            mild_residual(&sol, &field)
        );
    }
    let two = AlphaField::two_level(0.3, -1.0, 1.0, 0.8)?;
    let g = Grid1D::new(-15.0, 15.0, 300, Boundary::Dirichlet0)?;
    let bump = InitialCondition::SmoothIndicator { lo: -1.0, hi: 1.0, eps: 0.2 }.sample(&g);
    let sol = solve_fde(&two, &g, &bump, 2.0, 0.01)?;
    println!("two-level field: q(2, 0) = {:.4}, edge amplitude {:.1e}", g.interpolate(sol.final_row(), 0.0), sol.edge_amplitude(3));
    Ok(())
}

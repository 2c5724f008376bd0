//! Level sets `A_beta = {alpha <= alpha* + beta}` and minimum-set structure
//! of tabulated and piecewise order functions.

use varorder::alpha::{AlphaField, FieldKind, FieldLimits, Interpolation};

fn main() -> varorder::Result<()> {
    let tab = AlphaField::new(
        FieldKind::Tabulated {
            grid: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            values: vec![0.8, 0.4, 0.3, 0.3, 0.9],
            rule: Interpolation::Linear,
            tail_left: 0.8,
            tail_right: 0.9,
        },
        FieldLimits::default(),
    )?;
    for beta in [0.01, 0.05, 0.1, 0.3] {
        println!("beta={beta}: A_beta = {}", tab.level_set(beta)?);
    }
    let st = tab.min_structure()?;
    println!("alpha* = {}, argmin = {}, alpha_circ = {}", st.alpha_star, st.argmin_set, st.alpha_circ());

    let pw = AlphaField::piecewise(vec![-3.0, -1.0, 1.0, 4.0], vec![0.6, 0.25, 0.5], 0.7, 0.75)?;
    println!("piecewise alpha(0) = {}, A_0.3 = {}", pw.evaluate(0.0), pw.level_set(0.3)?);
    Ok(())
}

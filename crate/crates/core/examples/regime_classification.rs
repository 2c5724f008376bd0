//! Regime predictions for a few order functions, then a short simulation
//! check of one of them.

use varorder::alpha::{classify_regime, plateau_field, vee_field, Growth};
use varorder::sim::SimConfig;
use varorder::stats::{verify_regime, RegimeOptions};
use varorder::{AlphaField, IntervalUnion};

fn main() -> varorder::Result<()> {
    let lattice = IntervalUnion::power_lattice(0.5, 1.0, 0.5, 1e6, true)?;
    let fields = [
        ("two-level 0.3/0.7", AlphaField::two_level(0.3, 0.0, 1.0, 0.7)?.min_structure()?),
        ("two-level 0.4/0.7", AlphaField::two_level(0.4, 0.0, 1.0, 0.7)?.min_structure()?),
        ("two-level 0.35/0.7", AlphaField::two_level(0.35, 0.0, 1.0, 0.7)?.min_structure()?),
        ("plateau", plateau_field(0.3, 0.5, 0.0, 0.5, 1.0)?.min_structure()?),
        (
            "lattice c=0.5",
            AlphaField::indicator(&lattice, 0.2, 0.9)?.min_structure_with_growth(Growth {
                c1: 0.5,
                c2: 0.5,
                a1: 1.0,
                a2: 1.0,
            })?,
        ),
    ];
    for (name, st) in &fields {
        let p = classify_regime(st);
        println!("{name:>20}: {:?} ({:.4} vs {:.4})", p.kind, p.condition_lhs, p.condition_rhs);
    }
    // a point minimum has no set of positive length to localize on
    println!("vee field: {}", vee_field(0.3, 0.5, 0.0, 2.0)?.min_structure().unwrap_err());

    let field = AlphaField::indicator(&lattice, 0.2, 0.9)?;
    let st = &fields[4].1;
    let opts = RegimeOptions {
        checkpoints: vec![1e2, 1e3, 1e4],
        ..Default::default()
    };
    let r = verify_regime(&field, st, &SimConfig::new(0.05, 1e4), 50, &opts)?;
    println!("lattice check: occupation {:.3}, verdict {:?}", r.occ_final, r.verdict);
    Ok(())
}

//! One path of the time-changed process on a V-shaped order function,
//! printed on a geometric grid of external times.

use varorder::alpha::vee_field;
use varorder::rng::RandomStream;
use varorder::sim::{geometric_grid, invert_time_change, simulate_coupled, SimConfig};

fn main() -> varorder::Result<()> {
    let field = vee_field(0.3, 0.5, 0.0, 2.0)?;
    let cfg = SimConfig::new(0.01, 1e3);
    let mut stream = RandomStream::new(42, 0);
    let path = simulate_coupled(&field, &cfg, None, &[], &mut stream)?;
    println!("{} internal steps, sigma_final = {:.3e}", path.steps.len() - 1, path.sigma_final());
    let grid = geometric_grid(1.0, 1e3, 10)?;
    let s = invert_time_change(&path, &grid)?;
    println!("{:>10} {:>10} {:>10} {:>10} {:>10} {:>10}", "t", "X(t)", "L(t)", "g", "h", "age");
    for j in 0..s.len() {
        println!(
            "{:>10.3} {:>10.4} {:>10.3} {:>10.3} {:>10.3} {:>10.3}",
            s.external_times[j], s.positions[j], s.l_values[j], s.g_values[j], s.h_values[j], s.age[j]
        );
    }
    Ok(())
}

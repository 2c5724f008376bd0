//! Writes a stored path to the binary dump format and reads it back.

use varorder::rng::RandomStream;
use varorder::sim::{field_hash, read_path_dump, simulate_coupled, write_path_dump, SimConfig};
use varorder::{AlphaField, IntervalUnion};

fn main() -> varorder::Result<()> {
    let field = AlphaField::two_level(0.3, 0.0, 1.0, 0.7)?;
    let split = IntervalUnion::single(0.0, 1.0);
    let mut stream = RandomStream::new(9, 0);
    let path = simulate_coupled(&field, &SimConfig::new(0.05, 50.0).with_x0(0.5), Some(&split), &[], &mut stream)?;
    let mut buf = Vec::new();
    write_path_dump(&path, &field, &mut buf)?;
    let (header, records) = read_path_dump(&buf[..])?;
    assert_eq!(header.field_hash, field_hash(&field));
    assert_eq!(records, path.steps);
    println!(
        "{} records, {} bytes, sigma_1 = {:.3}, sigma_2 = {:.3}, sigma = {:.3}",
        records.len(),
        buf.len(),
        path.sigma1_acc,
        path.sigma2_acc,
        path.sigma_final()
    );
    Ok(())
}

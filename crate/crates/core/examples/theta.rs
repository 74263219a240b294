//! Cycles of angles for a rotation number and the characteristic angles of a pair.

use lamina::angles::{characteristic_angles, cycle_angles, ptilde};
use lamina::dynamics::{Case, PairSpec};

fn main() -> lamina::Result<()> {
    for (p, q) in [(1, 3), (2, 5), (3, 7)] {
        let set = cycle_angles(p, q)?;
        let angles: Vec<String> = set.angles.iter().map(|a| a.to_string()).collect();
        println!("{p}/{q}: {{{}}}  ptilde {}", angles.join(", "), ptilde(p as i64, q as i64)?);
    }
    let pair = PairSpec::rabbits(0.9, Case::A).resolve()?;
    let (plus, minus) = characteristic_angles(&pair)?;
    println!("rabbits: theta0+ = {plus} (period {}), theta0- = {minus}", plus.orbit_meta().period);
    Ok(())
}

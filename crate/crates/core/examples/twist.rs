//! Compares the gluing tables of the two Rabbit pairs.

use lamina::dynamics::{Case, PairSpec};
use lamina::quotient::verify_twist;
use lamina::tess::{Resolution, Tessellation};

fn main() -> lamina::Result<()> {
    let a = Tessellation::new(&PairSpec::rabbits(0.9, Case::A).resolve()?, Resolution::default())?;
    let b = Tessellation::new(&PairSpec::rabbits(0.9, Case::B).resolve()?, Resolution::default())?;
    let rep = verify_twist(&a, &b, 5, 1, 1)?;
    println!(
        "{} entries, mu shift {:?} mod {}, ptilde {}, {} mismatches, consistent {}",
        rep.entries,
        rep.shift,
        rep.q,
        rep.ptilde,
        rep.mismatches.len(),
        rep.consistent
    );
    Ok(())
}

//! Gluing table of degenerating edges in the lower end of the Rabbit pair of Case (b).

use lamina::dynamics::{Case, PairSpec};
use lamina::quotient::gluing_table;
use lamina::tess::{Resolution, Tessellation};

fn main() -> lamina::Result<()> {
    let pair = PairSpec::rabbits(0.9, Case::B).resolve()?;
    let tess = Tessellation::new(&pair, Resolution::default())?;
    let table = gluing_table(&tess, pair.lbar() + 1)?;
    table.check_bijective()?;
    print!("{}", table.to_text());
    println!("mu shifts {:?}", table.mu_shifts());
    Ok(())
}

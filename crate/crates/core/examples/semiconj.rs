//! Pinching semiconjugacy of the Cauliflower pair: conjugacy residual and distance to the identity.

use lamina::dynamics::PairSpec;
use lamina::semiconj::{default_window, grid, Semiconjugacy};
use lamina::tess::Resolution;

fn main() -> lamina::Result<()> {
    for r in [0.5, 0.9] {
        let pair = PairSpec::cauliflower(r).resolve()?;
        let semi = Semiconjugacy::new(&pair, Resolution::default())?;
        let (lo, hi) = default_window(&pair.f());
        let (res, id) = semi.residual_and_identity(&grid(lo, hi, 12));
        println!("r = {r}: sup |h(f) - g(h)| = {:.2e}, sup |h - id| = {:.2e} over {} points", res.value, id.value, res.evaluated);
    }
    Ok(())
}

//! Resolves the three named degeneration pairs and prints their invariants.

use lamina::dynamics::{Case, PairSpec};

fn main() -> lamina::Result<()> {
    for spec in [PairSpec::cauliflower(0.5), PairSpec::rabbits(0.9, Case::A), PairSpec::rabbits(0.9, Case::B), PairSpec::airplanes(0.5)] {
        let pair = spec.resolve()?;
        println!(
            "{:<14} c = {:.6}  sigma = {:.6}  (q,l,q',l') = ({},{},{},{})  case {}  lbar {}",
            pair.label(),
            pair.c,
            pair.sigma,
            pair.q,
            pair.l,
            pair.qprime,
            pair.lprime,
            pair.case,
            pair.lbar()
        );
    }
    Ok(())
}

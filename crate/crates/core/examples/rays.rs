//! Traces the external rays of the Rabbit cycle and checks where they land.

use lamina::dynamics::{Case, PairSpec, QuadMap};
use lamina::rays::{ray, RayParams};
use lamina::Angle;

fn main() -> lamina::Result<()> {
    let pair = PairSpec::rabbits(0.9, Case::A).resolve()?;
    let f = QuadMap::new(pair.c);
    for k in [1, 2, 4] {
        let theta = Angle::frac(k, 7);
        let trace = ray(pair.c, &theta, &RayParams::default())?;
        let image = ray(pair.c, &theta.double(), &RayParams::default())?.landing;
        println!(
            "{theta}: {} samples, lands at {:.8}, |f(landing) - landing(2theta)| = {:.1e}",
            trace.samples.len(),
            trace.landing,
            (f.f(trace.landing) - image).norm()
        );
    }
    Ok(())
}

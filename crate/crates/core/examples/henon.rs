//! Shadow addresses of Hénon orbits with small Jacobian.

use lamina::dynamics::{PairSpec, C64};
use lamina::henon::{sample_backward_julia, shadow_trials, HenonMap};
use lamina::tess::{Resolution, Tessellation};

fn main() -> lamina::Result<()> {
    let pair = PairSpec::cauliflower(0.5).resolve()?;
    let tess = Tessellation::new(&pair, Resolution::default())?;
    let a = C64::new(1e-4, 0.0);
    for t in shadow_trials(&tess, a, 5, 3, 11)? {
        println!("start {:.4}: address {}, equivariant {}, reduces {}", t.start, t.address, t.equivariant, t.reduces);
    }
    let samples = sample_backward_julia(&HenonMap::new(pair.c, a), 100, 6, 10.0, 11)?;
    println!("{} samples of the unstable manifold, {} refined", samples.len(), samples.iter().filter(|s| s.refined).count());
    Ok(())
}

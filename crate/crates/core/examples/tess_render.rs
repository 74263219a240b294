//! Builds the Cauliflower tiles of levels -2..2 on both sides and writes PNG and SVG pictures.

use std::path::Path;

use lamina::dynamics::PairSpec;
use lamina::export::write_text;
use lamina::render::{save_png, tiles_png, tiles_svg, Window};
use lamina::tess::{Resolution, Side, Tessellation};

fn main() -> lamina::Result<()> {
    let pair = PairSpec::cauliflower(0.5).resolve()?;
    let tess = Tessellation::new(&pair, Resolution::default())?;
    let levels = (-2, 2);
    let out = Path::new("out/examples");
    for side in [Side::Hyperbolic, Side::Parabolic] {
        let tiles = tess.addresses(levels.0, levels.1, 1).iter().map(|a| tess.build_tile(side, a)).collect::<lamina::Result<Vec<_>>>()?;
        let win = Window::around(&tiles).unwrap_or_default();
        write_text(&out.join(format!("tess-{side}.svg")), &tiles_svg(&tiles, &win, 600, 600, levels))?;
        save_png(&tiles_png(&tiles, &win, 600, 600, levels), &out.join(format!("tess-{side}.png")))?;
        let worst = tiles.iter().map(|t| tess.tile_law_residual(side, &t.address)).collect::<lamina::Result<Vec<_>>>()?;
        println!("{side}: {} tiles, tile law {:.2e}", tiles.len(), worst.iter().cloned().fold(0.0, f64::max));
    }
    Ok(())
}

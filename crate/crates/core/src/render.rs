//! SVG and PNG drawing of tiles and address maps.

use std::fmt::Write as _;

use image::{Rgb, RgbImage};

use crate::dynamics::C64;
use crate::error::{Error, Result};
use crate::tess::{EdgeKind, Sign, Tile, TileAddress};

/// Axis-aligned window of the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub lo: C64,
    pub hi: C64,
}

impl Window {
    pub fn new(lo: C64, hi: C64) -> Result<Self> {
        if !(hi.re > lo.re && hi.im > lo.im) {
            return Err(Error::input("empty drawing window"));
        }
        Ok(Self { lo, hi })
    }

    /// Smallest window containing every tile, padded by 5%.
    pub fn around(tiles: &[Tile]) -> Option<Self> {
        let pts = tiles.iter().flat_map(|t| t.boundary()).filter(|z| z.is_finite());
        let mut lo = C64::new(f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        for z in pts {
            lo = C64::new(lo.re.min(z.re), lo.im.min(z.im));
            hi = C64::new(hi.re.max(z.re), hi.im.max(z.im));
        }
        if !(lo.re.is_finite() && hi.re > lo.re && hi.im > lo.im) {
            return None;
        }
        let pad = 0.05 * (hi.re - lo.re).max(hi.im - lo.im);
        Some(Self { lo: lo - C64::new(pad, pad), hi: hi + C64::new(pad, pad) })
    }

    pub fn width(&self) -> f64 {
        self.hi.re - self.lo.re
    }

    pub fn height(&self) -> f64 {
        self.hi.im - self.lo.im
    }

    /// Plane point at the centre of pixel (i, j) of a w×h raster, row 0 at the top.
    pub fn pixel(&self, i: u32, j: u32, w: u32, h: u32) -> C64 {
        C64::new(self.lo.re + (i as f64 + 0.5) / w as f64 * self.width(), self.hi.im - (j as f64 + 0.5) / h as f64 * self.height())
    }

    fn to_raster(&self, z: C64, w: u32, h: u32) -> (f64, f64) {
        ((z.re - self.lo.re) / self.width() * w as f64, (self.hi.im - z.im) / self.height() * h as f64)
    }
}

impl Default for Window {
    fn default() -> Self {
        Self { lo: C64::new(-2.0, -2.0), hi: C64::new(2.0, 2.0) }
    }
}

/// HSL with h in degrees and s, l in [0, 1].
pub fn hsl(h: f64, s: f64, l: f64) -> [u8; 3] {
    let h = h.rem_euclid(360.0) / 60.0;
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    let q = |v: f64| ((v + m).clamp(0.0, 1.0) * 255.0).round() as u8;
    [q(r), q(g), q(b)]
}

/// Lightness for `level` within the inclusive range `levels`.
fn lightness(level: i64, levels: (i64, i64)) -> f64 {
    let span = (levels.1 - levels.0).max(1) as f64;
    0.25 + 0.55 * ((level - levels.0) as f64 / span).clamp(0.0, 1.0)
}

/// Fill colour of a tile: the sign picks the hue family, the angle shifts it, the level sets the lightness.
pub fn tile_color(addr: &TileAddress, levels: (i64, i64)) -> [u8; 3] {
    let base = match addr.sign {
        Sign::Plus => 20.0,
        Sign::Minus => 200.0,
    };
    hsl(base + 60.0 * addr.angle.to_f64(), 0.65, lightness(addr.level, levels))
}

/// Colour of a point of an address map: hue from the angle, lightness from the level.
pub fn address_color(angle: f64, level: i64, levels: (i64, i64)) -> [u8; 3] {
    hsl(360.0 * angle, 0.7, lightness(level, levels))
}

pub fn edge_color(kind: EdgeKind) -> [u8; 3] {
    match kind {
        EdgeKind::Equipotential => [60, 60, 60],
        EdgeKind::Critical => [200, 20, 20],
        EdgeKind::Degenerating => [20, 90, 220],
    }
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn svg_points(pts: &[C64], win: &Window, w: u32, h: u32) -> String {
    let mut s = String::new();
    for z in pts.iter().filter(|z| z.is_finite()) {
        let (x, y) = win.to_raster(*z, w, h);
        if !s.is_empty() {
            s.push(' ');
        }
        write!(s, "{x:.3},{y:.3}").unwrap();
    }
    s
}

/// Tiles as filled polygons with their edges stroked by kind.
pub fn tiles_svg(tiles: &[Tile], win: &Window, w: u32, h: u32, levels: (i64, i64)) -> String {
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#).unwrap();
    writeln!(s, r##"<rect width="{w}" height="{h}" fill="#ffffff"/>"##).unwrap();
    for t in tiles {
        writeln!(
            s,
            r#"<polygon data-address="{}" fill="{}" stroke="none" points="{}"/>"#,
            t.address,
            hex(tile_color(&t.address, levels)),
            svg_points(&t.boundary(), win, w, h)
        )
        .unwrap();
    }
    for t in tiles {
        for e in &t.edges {
            writeln!(
                s,
                r#"<polyline class="{}" fill="none" stroke="{}" stroke-width="0.6" points="{}"/>"#,
                e.kind,
                hex(edge_color(e.kind)),
                svg_points(&e.points, win, w, h)
            )
            .unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Polylines (e.g. external rays) in one colour.
pub fn polylines_svg(lines: &[(String, Vec<C64>)], win: &Window, w: u32, h: u32) -> String {
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#).unwrap();
    writeln!(s, r##"<rect width="{w}" height="{h}" fill="#ffffff"/>"##).unwrap();
    for (label, pts) in lines {
        writeln!(
            s,
            r##"<polyline data-label="{label}" fill="none" stroke="#202020" stroke-width="0.6" points="{}"/>"##,
            svg_points(pts, win, w, h)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Even-odd scanline fill of a closed polygon.
fn fill_polygon(img: &mut RgbImage, pts: &[(f64, f64)], color: [u8; 3]) {
    let (w, h) = img.dimensions();
    if pts.len() < 3 {
        return;
    }
    let ymin = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).floor().max(0.0) as u32;
    let ymax = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).ceil().min(h as f64) as u32;
    let mut xs = Vec::new();
    for j in ymin..ymax {
        let y = j as f64 + 0.5;
        xs.clear();
        for k in 0..pts.len() {
            let (a, b) = (pts[k], pts[(k + 1) % pts.len()]);
            if (a.1 <= y) != (b.1 <= y) {
                xs.push(a.0 + (y - a.1) / (b.1 - a.1) * (b.0 - a.0));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            let from = (pair[0] - 0.5).ceil().max(0.0) as u32;
            let to = ((pair[1] - 0.5).floor() + 1.0).clamp(0.0, w as f64) as u32;
            for i in from..to {
                img.put_pixel(i, j, Rgb(color));
            }
        }
    }
}

fn stroke(img: &mut RgbImage, pts: &[(f64, f64)], color: [u8; 3]) {
    let (w, h) = img.dimensions();
    for s in pts.windows(2) {
        let (a, b) = (s[0], s[1]);
        let n = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).clamp(1, 4 * (w + h) as usize);
        for k in 0..=n {
            let t = k as f64 / n as f64;
            let (x, y) = (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
            if x >= 0.0 && y >= 0.0 && x < w as f64 && y < h as f64 {
                img.put_pixel(x as u32, y as u32, Rgb(color));
            }
        }
    }
}

pub fn tiles_png(tiles: &[Tile], win: &Window, w: u32, h: u32, levels: (i64, i64)) -> RgbImage {
    let mut img = RgbImage::from_pixel(w, h, Rgb([255, 255, 255]));
    let raster = |pts: &[C64]| -> Vec<(f64, f64)> { pts.iter().filter(|z| z.is_finite()).map(|z| win.to_raster(*z, w, h)).collect() };
    for t in tiles {
        fill_polygon(&mut img, &raster(&t.boundary()), tile_color(&t.address, levels));
    }
    for t in tiles {
        for e in &t.edges {
            stroke(&mut img, &raster(&e.points), edge_color(e.kind));
        }
    }
    img
}

pub fn save_png(img: &RgbImage, path: &std::path::Path) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png).map_err(|e| Error::input(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angles::Angle;
    use crate::tess::{Edge, Side};

    fn square() -> Tile {
        let pts = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)];
        Tile {
            address: TileAddress::new(Angle::zero(), 0, Sign::Plus),
            side: Side::Hyperbolic,
            edges: vec![Edge { kind: EdgeKind::Equipotential, points: pts }],
            vertex: None,
        }
    }

    #[test]
    fn hsl_primaries() {
        assert_eq!(hsl(0.0, 1.0, 0.5), [255, 0, 0]);
        assert_eq!(hsl(120.0, 1.0, 0.5), [0, 255, 0]);
        assert_eq!(hsl(240.0, 1.0, 0.5), [0, 0, 255]);
        assert_eq!(hsl(17.0, 0.0, 1.0), [255, 255, 255]);
    }

    #[test]
    fn fill_covers_interior_only() {
        let win = Window::new(C64::new(-1.0, -1.0), C64::new(2.0, 2.0)).unwrap();
        let img = tiles_png(&[square()], &win, 30, 30, (0, 0));
        let c = tile_color(&square().address, (0, 0));
        assert_eq!(img.get_pixel(15, 15).0, c);
        assert_eq!(img.get_pixel(2, 2).0, [255, 255, 255]);
        let filled = img.pixels().filter(|p| p.0 == c).count();
        assert!((80..=110).contains(&filled), "{filled}");
    }

    #[test]
    fn svg_is_stable() {
        let win = Window::new(C64::new(-1.0, -1.0), C64::new(2.0, 2.0)).unwrap();
        let a = tiles_svg(&[square()], &win, 90, 90, (0, 0));
        assert_eq!(a, tiles_svg(&[square()], &win, 90, 90, (0, 0)));
        assert!(a.contains(r#"points="30.000,60.000 60.000,60.000 60.000,30.000 30.000,30.000 30.000,60.000""#));
        assert!(tiles_svg(&[], &win, 10, 10, (0, 0)).lines().count() == 3);
    }
}

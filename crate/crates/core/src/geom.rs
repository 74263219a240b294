//! Planar polyline helpers.

use std::f64::consts::PI;

use crate::dynamics::C64;

/// Winding number of the closed polyline `curve` around `z`.
pub fn winding(curve: &[C64], z: C64) -> f64 {
    let n = curve.len();
    let mut w = 0.0;
    for k in 0..n {
        let a = curve[k] - z;
        let b = curve[(k + 1) % n] - z;
        w += (b / a).arg();
    }
    w / (2.0 * PI)
}

/// Distance from `z` to the segment [a, b].
pub fn seg_dist(z: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let s = (((z - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + d * s)).norm()
}

/// Distance from `z` to a polyline.
pub fn polyline_dist(z: C64, line: &[C64]) -> f64 {
    match line.len() {
        0 => f64::INFINITY,
        1 => (z - line[0]).norm(),
        _ => line.windows(2).map(|w| seg_dist(z, w[0], w[1])).fold(f64::INFINITY, f64::min),
    }
}

/// Hausdorff distance between two polylines, measured from samples to segments.
pub fn hausdorff(a: &[C64], b: &[C64]) -> f64 {
    let one = |x: &[C64], y: &[C64]| x.iter().map(|z| polyline_dist(*z, y)).fold(0.0, f64::max);
    one(a, b).max(one(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::cx;

    #[test]
    fn square_winding_and_distances() {
        let sq = [cx(0.0, 0.0), cx(1.0, 0.0), cx(1.0, 1.0), cx(0.0, 1.0)];
        assert!((winding(&sq, cx(0.5, 0.5)) - 1.0).abs() < 1e-12);
        assert!(winding(&sq, cx(2.0, 0.5)).abs() < 1e-12);
        assert!((seg_dist(cx(0.5, 1.0), cx(0.0, 0.0), cx(1.0, 0.0)) - 1.0).abs() < 1e-15);
        assert!((seg_dist(cx(2.0, 0.0), cx(0.0, 0.0), cx(1.0, 0.0)) - 1.0).abs() < 1e-15);
        let a = [cx(0.0, 0.0), cx(1.0, 0.0)];
        let b = [cx(0.0, 0.1), cx(1.0, 0.1), cx(1.0, 0.3)];
        assert!((hausdorff(&a, &b) - 0.3).abs() < 1e-12);
    }
}

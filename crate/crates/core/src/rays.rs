//! Green's function, external rays and their landing points.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use serde::Serialize;

use crate::angles::Angle;
use crate::dynamics::{iterate2, polish_multiplier_one, QuadMap, C64};
use crate::error::{Error, Result};

/// Escape-time Green's function; zero on the filled Julia set.
pub fn green(c: C64, z: C64) -> f64 {
    let mut w = z;
    let mut scale = 1.0f64;
    for _ in 0..20_000 {
        let r = w.norm();
        if r > 1e40 {
            return r.ln() * scale;
        }
        w = w * w + c;
        scale *= 0.5;
    }
    0.0
}

/// Distance estimate |z_n|·ln|z_n| / |z_n′| to the Julia set from outside; 0 on K.
pub fn exterior_distance(c: C64, z: C64) -> f64 {
    let mut w = z;
    let mut d = C64::new(1.0, 0.0);
    for _ in 0..20_000 {
        let r = w.norm();
        if r > 1e20 {
            return r * r.ln() / d.norm();
        }
        d = 2.0 * w * d;
        w = w * w + c;
    }
    0.0
}

/// Radius beyond which the Böttcher product is summed directly.
pub const BOTTCHER_RADIUS: f64 = 1e6;

/// Böttcher coordinate φ_c(z) = z·∏(1 + c/z_k²)^{1/2^{k+1}}, valid for large |z|.
pub fn bottcher_far(c: C64, z: C64) -> C64 {
    let mut w = z;
    let mut log = z.ln();
    let mut scale = 0.5;
    for _ in 0..64 {
        let t = c / (w * w);
        if t.norm() < 1e-18 {
            break;
        }
        log += scale * (1.0 + t).ln();
        w = w * w + c;
        scale *= 0.5;
    }
    log.exp()
}

/// Inverse of `bottcher_far` near infinity.
pub fn bottcher_far_inverse(c: C64, b: C64) -> C64 {
    let mut u = b;
    for _ in 0..50 {
        let next = u * b / bottcher_far(c, u);
        let done = (next - u).norm() <= 1e-17 * u.norm();
        u = next;
        if done {
            break;
        }
    }
    u
}

/// φ_{c1}⁻¹ ∘ φ_{c0} on the basin of infinity. The orbit of z is pushed past
/// `BOTTCHER_RADIUS`, transported there, and pulled back; the parameter moves
/// from c0 to c1 in `steps` stages so that each pull-back picks the preimage
/// nearest the previous stage.
pub fn exterior_transport(c0: C64, c1: C64, z: C64, steps: usize) -> Result<C64> {
    let f = QuadMap::new(c0);
    let mut chain = vec![z];
    while chain.last().unwrap().norm() <= BOTTCHER_RADIUS {
        if chain.len() > 4000 {
            return Err(Error::numeric(format!("{z} does not escape")));
        }
        chain.push(f.f(*chain.last().unwrap()));
    }
    let n = chain.len() - 1;
    let b = bottcher_far(c0, chain[n]);
    for s in 1..=steps {
        let cs = c0 + (c1 - c0) * (s as f64 / steps as f64);
        let g = QuadMap::new(cs);
        let mut u = bottcher_far_inverse(cs, b);
        let mut next = vec![u; n + 1];
        for k in (0..n).rev() {
            let [p0, p1] = g.preimages(u);
            let (d0, d1) = ((p0 - chain[k]).norm(), (p1 - chain[k]).norm());
            if (d0 - d1).abs() < 1e-6 * (d0 + d1) {
                return Err(Error::numeric(format!("ambiguous pull-back transporting {z}")));
            }
            u = if d0 < d1 { p0 } else { p1 };
            next[k] = u;
        }
        chain = next;
    }
    Ok(chain[0])
}

/// Homotopy stages for moving the parameter from c0 to c1.
pub fn transport_steps(c0: C64, c1: C64) -> usize {
    ((c1 - c0).norm() / 0.005).ceil().max(1.0) as usize
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayParams {
    pub escape_radius: f64,
    /// Number of potential halvings below ln(escape_radius).
    pub levels: u32,
    /// Samples per halving.
    pub substeps: u32,
    pub tol: f64,
}

impl Default for RayParams {
    fn default() -> Self {
        Self { escape_radius: 1e4, levels: 24, substeps: 8, tol: 1e-12 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RayTrace {
    pub angle: Angle,
    /// (point, potential) with strictly decreasing potential.
    pub samples: Vec<(C64, f64)>,
    pub landing: C64,
}

impl RayTrace {
    pub fn endpoint(&self) -> C64 {
        self.samples.last().map(|s| s.0).unwrap_or(self.landing)
    }
}

fn angle_phase(theta: &Angle, n: u32) -> f64 {
    theta.double_n(n as usize).to_f64()
}

/// Traces R_c(θ) from `from` down to `to` potential; `step` is the spacing in
/// log₂ of potential (1/8 gives eight samples per halving).
pub fn trace_ray(c: C64, theta: &Angle, from: f64, to: f64, step: f64, tol: f64) -> Result<RayTrace> {
    if !(to > 0.0 && from > to && step > 0.0) {
        return Err(Error::input("trace_ray needs from > to > 0 and step > 0"));
    }
    let map = QuadMap::new(c);
    // Reference potential where the Böttcher map is the identity to working accuracy.
    let g_ref = 1e4f64.ln();
    let mut samples = Vec::new();
    let mut z: Option<C64> = None;
    let mut k = 0u32;
    loop {
        let g = from * (-(k as f64) * step).exp2();
        if g < to * (1.0 - 1e-12) {
            break;
        }
        let n = if g >= g_ref { 0 } else { (g_ref / g).log2().ceil() as u32 };
        let mod_ = (g * (n as f64).exp2()).exp();
        let arg = 2.0 * PI * angle_phase(theta, n);
        let w = C64::from_polar(mod_, arg);
        let mut y = match z {
            None => {
                // Initial guess from the outermost level.
                let g0 = g * (n as f64).exp2();
                let mut y0 = C64::from_polar(g0.exp(), 2.0 * PI * angle_phase(theta, n));
                for j in (0..n).rev() {
                    let t = angle_phase(theta, j);
                    let cands = map.preimages(y0);
                    y0 = *cands
                        .iter()
                        .min_by(|a, b| {
                            let da = (a.arg() / (2.0 * PI)).rem_euclid(1.0) - t;
                            let db = (b.arg() / (2.0 * PI)).rem_euclid(1.0) - t;
                            circ(da).total_cmp(&circ(db))
                        })
                        .unwrap();
                }
                y0
            }
            Some(prev) => prev,
        };
        let mut ok = false;
        for _ in 0..60 {
            let (v, d) = map.iterate_with_derivative(y, n as usize);
            let delta = (v - w) / d;
            y -= delta;
            if !y.is_finite() {
                break;
            }
            if delta.norm() <= tol * (1.0 + y.norm()) {
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(Error::numeric(format!("ray {theta} Newton failed at potential {g:.3e}")));
        }
        samples.push((y, g));
        z = Some(y);
        k += 1;
    }
    let landing = samples.last().map(|s| s.0).unwrap_or_default();
    Ok(RayTrace { angle: theta.clone(), samples, landing })
}

fn circ(x: f64) -> f64 {
    let y = x.rem_euclid(1.0);
    y.min(1.0 - y)
}

/// Full trace with default parameters and its landing point.
pub fn ray(c: C64, theta: &Angle, params: &RayParams) -> Result<RayTrace> {
    let from = params.escape_radius.ln();
    let to = from * (-(params.levels as f64)).exp2();
    let mut tr = trace_ray(c, theta, from, to, 1.0 / params.substeps as f64, params.tol)?;
    tr.landing = landing_point_with(c, theta, params)?;
    Ok(tr)
}

/// Periodic point of period dividing d near `z0`; handles double roots at
/// multiplier 1 by solving (f^d)' = 1 instead.
pub fn periodic_point_near(map: &QuadMap, z0: C64, d: usize) -> Option<(C64, C64)> {
    let mut z = z0;
    let mut converged = false;
    for _ in 0..200 {
        let (w, d1, _) = iterate2(map, z, d);
        let den = d1 - 1.0;
        if den.norm() < 1e-300 {
            break;
        }
        let step = (w - z) / den;
        z -= step;
        if !z.is_finite() || z.norm() > 1e3 {
            return None;
        }
        if step.norm() < 1e-15 * (1.0 + z.norm()) {
            converged = true;
            break;
        }
    }
    let (_, mult, _) = iterate2(map, z, d);
    if (mult - 1.0).norm() < 1e-3 {
        // Near-double root: the simple root of (f^d)' − 1 is far better conditioned.
        let y = polish_multiplier_one(map, z, d);
        let (w, _, _) = iterate2(map, y, d);
        if (w - y).norm() < 1e-10 {
            z = y;
            converged = true;
        }
    }
    let (w, mult, _) = iterate2(map, z, d);
    if !converged && (w - z).norm() > 1e-9 {
        return None;
    }
    Some((z, mult))
}

/// Landing point of R_c(θ) with default parameters.
pub fn landing_point(c: C64, theta: &Angle) -> Result<C64> {
    landing_point_with(c, theta, &RayParams::default())
}

pub fn landing_point_with(c: C64, theta: &Angle, params: &RayParams) -> Result<C64> {
    RayCache::new(c, *params).landing(theta)
}

/// Memoized landing points for one parameter.
pub struct RayCache {
    pub c: C64,
    pub params: RayParams,
    landings: Mutex<HashMap<Angle, C64>>,
    ends: Mutex<HashMap<Angle, C64>>,
}

impl RayCache {
    pub fn new(c: C64, params: RayParams) -> Self {
        Self { c, params, landings: Mutex::new(HashMap::new()), ends: Mutex::new(HashMap::new()) }
    }

    /// Deepest traced point of the ray.
    pub fn endpoint(&self, theta: &Angle) -> Result<C64> {
        if let Some(z) = self.ends.lock().unwrap().get(theta) {
            return Ok(*z);
        }
        let from = self.params.escape_radius.ln();
        let to = from * (-(self.params.levels as f64)).exp2();
        let tr = trace_ray(self.c, theta, from, to, 1.0 / self.params.substeps as f64, self.params.tol)?;
        let e = tr.endpoint();
        self.ends.lock().unwrap().insert(theta.clone(), e);
        Ok(e)
    }

    pub fn landing(&self, theta: &Angle) -> Result<C64> {
        if let Some(z) = self.landings.lock().unwrap().get(theta) {
            return Ok(*z);
        }
        let meta = theta.orbit_meta();
        let z = if meta.preperiod == 0 {
            self.periodic_landing(theta, meta.period)?
        } else {
            let image = self.landing(&theta.double())?;
            let e = self.endpoint(theta)?;
            let map = QuadMap::new(self.c);
            let [u, v] = map.preimages(image);
            if (u - e).norm() <= (v - e).norm() {
                u
            } else {
                v
            }
        };
        self.landings.lock().unwrap().insert(theta.clone(), z);
        Ok(z)
    }

    fn periodic_landing(&self, theta: &Angle, n: usize) -> Result<C64> {
        let map = QuadMap::new(self.c);
        let e = self.endpoint(theta)?;
        let mut found: Vec<(usize, f64, C64)> = Vec::new();
        for d in (1..=n).filter(|d| n.is_multiple_of(*d)) {
            if let Some((z, mult)) = periodic_point_near(&map, e, d) {
                if mult.norm() < 1.0 - 1e-9 {
                    continue;
                }
                found.push((d, (z - e).norm(), z));
            }
        }
        // Degenerate roots of higher iterates converge poorly; prefer the
        // smallest period giving the same point.
        let best = found.iter().min_by(|x, y| x.1.total_cmp(&y.1)).map(|&(_, _, z)| z).and_then(|zb| {
            found.iter().filter(|(_, _, z)| (z - zb).norm() < 1e-4).min_by_key(|(d, _, _)| *d).map(|&(_, dist, z)| (dist, z))
        });
        match best {
            Some((dist, z)) if dist < 0.3 => Ok(z),
            _ => Err(Error::numeric(format!("no landing point found for ray {theta} at c = {}", self.c))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{beta_fixed_point, cx};
    use proptest::prelude::*;

    fn a(n: u64, d: u64) -> Angle {
        Angle::frac(n, d)
    }

    #[test]
    fn green_examples() {
        assert!((green(cx(0.0, 0.0), cx(2.0, 0.0)) - 2f64.ln()).abs() < 1e-12);
        assert_eq!(green(cx(0.0, 0.0), cx(0.5, 0.1)), 0.0);
        assert_eq!(green(cx(0.0, 0.0), C64::from_polar(1.0, 0.3)), 0.0);
        assert_eq!(green(cx(3.0 / 16.0, 0.0), cx(0.25, 0.0)), 0.0);
    }

    #[test]
    fn radial_rays_at_zero() {
        for t in [a(1, 3), a(1, 7), a(5, 12), a(0, 1)] {
            let tr = trace_ray(cx(0.0, 0.0), &t, 9.0, 1e-6, 0.125, 1e-12).unwrap();
            for (z, g) in &tr.samples {
                let d = (z.arg() / (2.0 * PI) - t.to_f64()).rem_euclid(1.0);
                assert!(d.min(1.0 - d) < 1e-10);
                assert!((z.norm().ln() - g).abs() < 1e-9);
            }
        }
        let z = landing_point(cx(0.0, 0.0), &a(1, 3)).unwrap();
        assert!((z - C64::from_polar(1.0, 2.0 * PI / 3.0)).norm() < 1e-12);
    }

    #[test]
    fn forward_invariance_of_traces() {
        let c = cx(-0.12, 0.75);
        let t = a(1, 7);
        let tr = trace_ray(c, &t, 4.0, 1e-3, 0.25, 1e-12).unwrap();
        let map = QuadMap::new(c);
        for (z, g) in tr.samples.iter().step_by(5) {
            let w = map.f(*z);
            let g2 = green(c, w);
            assert!((g2 - 2.0 * g).abs() < 1e-8 * (1.0 + g));
            assert!((green(c, *z) - g).abs() < 1e-9 * (1.0 + g));
        }
    }

    #[test]
    fn beta_is_landing_of_zero() {
        for c in [cx(3.0 / 16.0, 0.0), cx(0.25, 0.0), cx(-1.0, 0.0), cx(-0.12, 0.75), cx(-1.75, 0.0)] {
            let z = landing_point(c, &Angle::zero()).unwrap();
            assert!((z - beta_fixed_point(c)).norm() < 1e-9, "{c}: {z}");
        }
    }

    #[test]
    fn rabbit_rays_share_alpha() {
        let c = crate::dynamics::solve_multiplier(3, cx(0.3, 0.0), cx(-0.12, 0.75)).unwrap();
        let zs: Vec<C64> = [a(1, 7), a(2, 7), a(4, 7)].iter().map(|t| landing_point(c, t).unwrap()).collect();
        assert!((zs[0] - zs[1]).norm() < 1e-6 && (zs[1] - zs[2]).norm() < 1e-6);
    }

    #[test]
    fn bottcher_far_conjugates_to_squaring() {
        let z = cx(3e3, -4e3);
        assert!((bottcher_far(cx(0.0, 0.0), z) - z).norm() < 1e-9);
        let c = cx(-0.12, 0.75);
        let b = bottcher_far(c, z);
        let b2 = bottcher_far(c, z * z + c);
        assert!((b2 - b * b).norm() < 1e-12 * b2.norm());
        assert!((bottcher_far_inverse(c, b) - z).norm() < 1e-9);
    }

    #[test]
    fn transport_follows_rays() {
        let (c0, c1) = (cx(3.0 / 16.0, 0.0), cx(0.25, 0.0));
        let steps = transport_steps(c0, c1);
        for t in [a(1, 3), a(0, 1), a(5, 8)] {
            let r0 = trace_ray(c0, &t, 4.0, 1e-3, 0.25, 1e-13).unwrap();
            let r1 = trace_ray(c1, &t, 4.0, 1e-3, 0.25, 1e-13).unwrap();
            for ((z0, g0), (z1, g1)) in r0.samples.iter().zip(&r1.samples).step_by(7) {
                assert!((g0 - g1).abs() < 1e-12);
                let w = exterior_transport(c0, c1, *z0, steps).unwrap();
                assert!((w - z1).norm() < 1e-9 * (1.0 + z1.norm()), "{t} {g0}: {w} {z1}");
            }
        }
        let z = cx(0.3, 1.2);
        assert!((exterior_transport(c0, c0, z, 1).unwrap() - z).norm() < 1e-12);
    }

    #[test]
    fn distance_estimate_scale() {
        let d = exterior_distance(cx(0.0, 0.0), cx(1.01, 0.0));
        assert!(d > 0.004 && d < 0.03, "{d}");
        assert_eq!(exterior_distance(cx(0.0, 0.0), cx(0.5, 0.0)), 0.0);
    }

    #[test]
    fn parabolic_landings() {
        let z = landing_point(cx(0.25, 0.0), &Angle::zero()).unwrap();
        assert!((z - cx(0.5, 0.0)).norm() < 1e-9);
        let z = landing_point(cx(0.25, 0.0), &a(1, 2)).unwrap();
        assert!((z - cx(-0.5, 0.0)).norm() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn landing_equivariance(k in 0u64..63, which in 0usize..3) {
            let c = [cx(3.0 / 16.0, 0.0), cx(-0.12, 0.75), cx(-1.0, 0.0)][which];
            let t = a(k, 62);
            let cache = RayCache::new(c, RayParams::default());
            let z = cache.landing(&t).unwrap();
            let w = cache.landing(&t.double()).unwrap();
            prop_assert!((QuadMap::new(c).f(z) - w).norm() < 1e-8);
        }
    }
}

//! Quadratic Hénon maps H(x, y) = (x² + c − ay, x) near the one-dimensional
//! limit a = 0: backward Julia set samples and shadowed tile addresses.
//!
//! Backward orbits are never computed with H⁻¹, which expands by 1/|a|.
//! They are kept as forward histories instead.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{QuadMap, C64};
use crate::error::{Error, Result};
use crate::natext::{lift_tile_address, BackwardOrbit, LiftedAddress};
use crate::tess::{Side, Tessellation};

/// Default bound on |a| for the small-Jacobian regime.
pub const SMALL_JACOBIAN: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HenonMap {
    pub c: C64,
    pub a: C64,
}

pub type Point2 = (C64, C64);

impl HenonMap {
    pub fn new(c: C64, a: C64) -> Self {
        Self { c, a }
    }

    pub fn is_small(&self) -> bool {
        self.a.norm() < SMALL_JACOBIAN
    }

    pub fn apply(&self, (x, y): Point2) -> Point2 {
        (x * x + self.c - self.a * y, x)
    }

    pub fn inverse(&self, (x, y): Point2) -> Result<Point2> {
        if self.a == C64::new(0.0, 0.0) {
            return Err(Error::input("H is not invertible when a = 0"));
        }
        Ok((y, (y * y + self.c - x) / self.a))
    }

    /// The fixed saddle with its unstable eigenvalue and eigenvector.
    pub fn saddle(&self) -> Result<(Point2, C64, Point2)> {
        // Fixed points solve x² − (1 + a)x + c = 0; eigenvalues solve λ² − 2xλ + a = 0.
        let b = 1.0 + self.a;
        let disc = (b * b - 4.0 * self.c).sqrt();
        for x in [(b + disc) / 2.0, (b - disc) / 2.0] {
            let x = self.newton_fixed(x)?;
            let d = (x * x - self.a).sqrt();
            let (l1, l2) = (x + d, x - d);
            let (lu, ls) = if l1.norm() >= l2.norm() { (l1, l2) } else { (l2, l1) };
            if lu.norm() > 1.0 && ls.norm() < 1.0 {
                return Ok(((x, x), lu, (lu, C64::new(1.0, 0.0))));
            }
        }
        Err(Error::numeric("no fixed saddle"))
    }

    fn newton_fixed(&self, mut x: C64) -> Result<C64> {
        for _ in 0..50 {
            let f = x * x - (1.0 + self.a) * x + self.c;
            let d = 2.0 * x - (1.0 + self.a);
            if d.norm() < 1e-14 {
                break;
            }
            let step = f / d;
            x -= step;
            if step.norm() < 1e-15 {
                return Ok(x);
            }
        }
        let f = x * x - (1.0 + self.a) * x + self.c;
        if f.norm() < 1e-12 {
            Ok(x)
        } else {
            Err(Error::numeric("Newton failed on the fixed-point equation"))
        }
    }
}

/// A truncated backward orbit (p₀, p₋₁, …) of H, with H(p₋ₙ₋₁) = p₋ₙ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HenonOrbit {
    pub points: Vec<Point2>,
}

impl HenonOrbit {
    pub fn new(h: &HenonMap, points: Vec<Point2>, tol: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::input("a backward orbit needs at least one point"));
        }
        for (n, w) in points.windows(2).enumerate() {
            let (x, y) = h.apply(w[1]);
            let err = (x - w[0].0).norm().max((y - w[0].1).norm());
            if !(err <= tol * (1.0 + w[0].0.norm())) {
                return Err(Error::verification(format!("H(p₋{}) misses p₋{n} by {err:.3e}", n + 1)));
            }
        }
        Ok(Self { points })
    }

    /// The H-orbit started at the deepest point of a one-dimensional f
    /// backward orbit (z₀, …, z₋N) and pushed forward N steps.
    pub fn shadowing(h: &HenonMap, zs: &[C64]) -> Result<Self> {
        if zs.len() < 2 {
            return Err(Error::input("shadowing needs a backward orbit of depth at least 1"));
        }
        let n = zs.len() - 1;
        let pre = QuadMap::new(h.c).preimages(zs[n]);
        let deep = (zs[n], pre[0]);
        let mut fwd = vec![deep];
        for _ in 0..n {
            fwd.push(h.apply(*fwd.last().unwrap()));
        }
        fwd.reverse();
        Ok(Self { points: fwd })
    }

    /// Backward orbit of p by H⁻¹ while it stays within `bound`; `None` once it leaves.
    pub fn backward(h: &HenonMap, p: Point2, depth: usize, bound: f64) -> Result<Option<Self>> {
        let mut points = vec![p];
        for _ in 0..depth {
            let q = h.inverse(*points.last().unwrap())?;
            if !(q.0.norm() <= bound && q.1.norm() <= bound) {
                return Ok(None);
            }
            points.push(q);
        }
        Ok(Some(Self { points }))
    }

    pub fn depth(&self) -> usize {
        self.points.len() - 1
    }

    /// (H(p₀), p₀, p₋₁, …).
    pub fn shift(&self, h: &HenonMap) -> Self {
        let mut points = vec![h.apply(self.points[0])];
        points.extend_from_slice(&self.points);
        Self { points }
    }

    pub fn truncate(&self, depth: usize) -> Self {
        Self { points: self.points[..=depth.min(self.depth())].to_vec() }
    }

    /// The shadowed one-dimensional orbit (x₀, x₋₁, …).
    pub fn xs(&self) -> Vec<C64> {
        self.points.iter().map(|p| p.0).collect()
    }

    /// max |f(x₋ₙ₋₁) − x₋ₙ|, which equals max |a·y₋ₙ₋₁|.
    pub fn shadow_residual(&self, c: C64) -> f64 {
        let f = QuadMap::new(c);
        self.points.windows(2).map(|w| (f.f(w[1].0) - w[0].0).norm()).fold(0.0, f64::max)
    }
}

/// Residual budget as a multiple of |a|·(1 + max |y|).
pub const SHADOW_BUDGET: f64 = 10.0;

/// Lifted tile address of the shadowed orbit; `None` when a coordinate
/// escapes or lies on a cut, or the coordinates do not share one lifted tile.
pub fn shadow_address(h: &HenonMap, tess: &Tessellation, orbit: &HenonOrbit) -> Result<Option<LiftedAddress>> {
    if !h.is_small() {
        return Err(Error::input(format!("|a| = {:.3e} is outside the small-Jacobian regime", h.a.norm())));
    }
    if (h.c - tess.pair.c).norm() > 1e-12 {
        return Err(Error::input("Hénon parameter c differs from the pair's c"));
    }
    let ymax = orbit.points.iter().map(|p| p.1.norm()).fold(0.0, f64::max);
    let budget = SHADOW_BUDGET * h.a.norm() * (1.0 + ymax) + 1e-12;
    let res = orbit.shadow_residual(h.c);
    if res > budget {
        return Err(Error::verification(format!("shadowing residual {res:.3e} exceeds the budget {budget:.3e}")));
    }
    // Coordinates are an f-orbit only up to O(|a|), so near tile boundaries they may not agree on one tile.
    match lift_tile_address(tess, Side::Hyperbolic, &BackwardOrbit { points: orbit.xs() }) {
        Err(Error::Verification(_)) => Ok(None),
        other => other,
    }
}

/// One equivariance trial of shadow addresses.
#[derive(Clone, Debug, Serialize)]
pub struct ShadowTrial {
    pub start: C64,
    pub address: LiftedAddress,
    pub image: Option<LiftedAddress>,
    /// Address of H(orbit) equals the lift of the address of the orbit.
    pub equivariant: bool,
    /// Address at a = 0 equals the address of the one-dimensional orbit.
    pub reduces: bool,
}

/// `count` trials from random one-dimensional backward orbits of the given
/// depth whose shadows at Jacobian `a` resolve to an address.
pub fn shadow_trials(tess: &Tessellation, a: C64, count: usize, depth: usize, seed: u64) -> Result<Vec<ShadowTrial>> {
    let pair = &tess.pair;
    let (f, h, h0) = (pair.f(), HenonMap::new(pair.c, a), HenonMap::new(pair.c, C64::new(0.0, 0.0)));
    let (lo, hi) = crate::semiconj::default_window(&f);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count {
        tries += 1;
        if tries > 50 * count.max(1) {
            return Err(Error::numeric(format!("only {} of {count} shadow trials resolved", out.len())));
        }
        let z0 = C64::new(rng.gen_range(lo.re..hi.re), rng.gen_range(lo.im..hi.im));
        let zs = BackwardOrbit::random(&f, z0, depth, &mut rng);
        let orbit = HenonOrbit::shadowing(&h, &zs.points)?;
        let Some(address) = shadow_address(&h, tess, &orbit)? else { continue };
        let image = shadow_address(&h, tess, &orbit.shift(&h))?;
        let equivariant = image.as_ref() == Some(&address.image());
        let exact = HenonOrbit::shadowing(&h0, &zs.points)?;
        let reduces = shadow_address(&h0, tess, &exact)? == lift_tile_address(tess, Side::Hyperbolic, &zs)?;
        out.push(ShadowTrial { start: z0, address, image, equivariant, reduces });
    }
    Ok(out)
}

/// One sample of the backward Julia set.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct JuliaSample {
    pub p: Point2,
    /// Whether the forward orbit leaves the bound.
    pub escapes: bool,
    /// Produced by bisection between escaping and bounded neighbours.
    pub refined: bool,
}

const ESCAPE_STEPS: usize = 200;

fn escapes(h: &HenonMap, mut p: Point2, bound: f64) -> bool {
    for _ in 0..ESCAPE_STEPS {
        p = h.apply(p);
        if !(p.0.norm() <= bound) {
            return true;
        }
    }
    false
}

/// Points of the unstable manifold of the fixed saddle, whose backward orbits
/// tend to the saddle, obtained by pushing a fundamental annulus forward up
/// to `depth` times and keeping those within `bound`. Pairs of neighbouring
/// seeds with different forward behaviour are bisected onto the boundary.
pub fn sample_backward_julia(h: &HenonMap, count: usize, depth: usize, bound: f64, seed: u64) -> Result<Vec<JuliaSample>> {
    if !h.is_small() {
        return Err(Error::input(format!("|a| = {:.3e} is outside the small-Jacobian regime", h.a.norm())));
    }
    let (p, lu, v) = h.saddle()?;
    let s0 = 1e-6;
    let at = |s: C64| -> Point2 { (p.0 + s * v.0, p.1 + s * v.1) };
    let push = |q: Point2, k: usize| -> Option<Point2> {
        let mut q = q;
        for _ in 0..k {
            q = h.apply(q);
            if !(q.0.norm() <= bound && q.1.norm() <= bound) {
                return None;
            }
        }
        Some(q)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut guard = 0;
    while out.len() < count && guard < 100 * count.max(1) {
        guard += 1;
        // Uniform in log-radius over one fundamental annulus, uniform in argument.
        let t: f64 = rng.gen();
        let arg: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let s = C64::from_polar(s0 * lu.norm().powf(t), arg);
        let k = rng.gen_range(0..=depth);
        let Some(q) = push(at(s), k) else { continue };
        let e = escapes(h, q, bound);
        out.push(JuliaSample { p: q, escapes: e, refined: false });
        if out.len() >= count {
            break;
        }
        let s2 = s * C64::from_polar(1.0, 0.05);
        if let Some(q2) = push(at(s2), k) {
            if escapes(h, q2, bound) != e {
                let (mut lo, mut hi) = (s, s2);
                for _ in 0..40 {
                    let mid = (lo + hi) / 2.0;
                    match push(at(mid), k) {
                        Some(qm) if escapes(h, qm, bound) == e => lo = mid,
                        _ => hi = mid,
                    }
                }
                if let Some(qb) = push(at(lo), k) {
                    out.push(JuliaSample { p: qb, escapes: e, refined: true });
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{cx, PairSpec};
    use crate::natext::BackwardOrbit;
    use crate::tess::Resolution;

    #[test]
    fn apply_and_inverse() {
        let h = HenonMap::new(cx(3.0 / 16.0, 0.0), cx(0.01, 0.0));
        assert_eq!(h.apply((cx(0.0, 0.0), cx(0.0, 0.0))), (cx(3.0 / 16.0, 0.0), cx(0.0, 0.0)));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let p = (cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let q = h.inverse(h.apply(p)).unwrap();
            assert!((q.0 - p.0).norm() < 1e-12 && (q.1 - p.1).norm() < 1e-12);
        }
        assert!(HenonMap::new(cx(0.2, 0.0), cx(0.0, 0.0)).inverse((cx(0.0, 0.0), cx(0.0, 0.0))).is_err());
    }

    #[test]
    fn saddle_and_samples() {
        let h = HenonMap::new(cx(3.0 / 16.0, 0.0), cx(1e-4, 0.0));
        let (p, lu, _) = h.saddle().unwrap();
        assert!((p.0 - cx(0.75, 0.0)).norm() < 1e-3 && (lu - cx(1.5, 0.0)).norm() < 1e-3);
        let pts = sample_backward_julia(&h, 200, 12, 10.0, 4).unwrap();
        assert_eq!(pts.len(), 200);
        assert!(pts.iter().all(|s| s.p.0.norm() <= 10.0));
    }

    #[test]
    fn shadowing() {
        let pair = PairSpec::cauliflower(0.5).resolve().unwrap();
        let tess = Tessellation::new(&pair, Resolution::default()).unwrap();
        let f = pair.f();
        let zs = BackwardOrbit::from_choices(&f, cx(0.3, 0.1), &[false, true, false]).points;
        let exact = HenonOrbit::shadowing(&HenonMap::new(pair.c, cx(0.0, 0.0)), &zs).unwrap();
        assert!(exact.shadow_residual(pair.c) < 1e-12);
        let h0 = HenonMap::new(pair.c, cx(0.0, 0.0));
        let one_d = lift_tile_address(&tess, Side::Hyperbolic, &BackwardOrbit { points: exact.xs() }).unwrap();
        assert_eq!(shadow_address(&h0, &tess, &exact).unwrap(), one_d);
        let r3 = HenonOrbit::shadowing(&HenonMap::new(pair.c, cx(1e-3, 0.0)), &zs).unwrap().shadow_residual(pair.c);
        let r4 = HenonOrbit::shadowing(&HenonMap::new(pair.c, cx(1e-4, 0.0)), &zs).unwrap().shadow_residual(pair.c);
        assert!(r3 <= 20.0 * 10.0 * r4 && r3 >= 10.0 * r4 / 20.0, "{r3} {r4}");
        let h = HenonMap::new(pair.c, cx(1e-4, 0.0));
        let far = HenonOrbit { points: vec![(cx(5.0, 0.0), cx(1.0, 0.0))] };
        assert_eq!(shadow_address(&h, &tess, &far).unwrap(), None);
        assert!(HenonOrbit::backward(&h, (cx(5.0, 0.0), cx(1.0, 0.0)), 3, 10.0).unwrap().is_none());
    }
}

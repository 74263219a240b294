//! Finite truncations of the natural extension: lifted angles, backward
//! orbits, lifted tile addresses and the lifted semiconjugacy.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angles::Angle;
use crate::dynamics::{DegenerationPair, QuadMap, C64};
use crate::error::{Error, Result};
use crate::geom::polyline_dist;
use crate::linearize::{invariant_arc_with, ArcSet};
use crate::semiconj::Semiconjugacy;
use crate::tess::{Side, Sign, Tessellation};

/// A backward choice sequence θ̂ = (θ₀, θ₋₁, …) with 2θ₋ₙ₋₁ = θ₋ₙ.
///
/// Bit n selects θ₋ₙ₋₁ = θ₋ₙ/2 + bit/2. With a cycle the bits continue
/// periodically forever; without one the angle is a truncation of depth
/// `prefix.len()`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LiftedAngle {
    pub head: Angle,
    pub prefix: Vec<bool>,
    pub cycle: Option<Vec<bool>>,
}

impl LiftedAngle {
    pub fn truncated(head: Angle, bits: Vec<bool>) -> Self {
        Self { head, prefix: bits, cycle: None }
    }

    /// Eventually periodic choices; errors on an empty cycle.
    pub fn periodic(head: Angle, prefix: Vec<bool>, cycle: Vec<bool>) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::input("cycle word must be nonempty"));
        }
        let mut out = Self { head, prefix, cycle: Some(cycle) };
        out.normalize();
        Ok(out)
    }

    /// The constant-in-cycle lift of a δ-periodic angle, with θ₋ₙ = δ^{P−n}θ.
    pub fn cyclic(theta: &Angle) -> Result<Self> {
        let meta = theta.orbit_meta();
        if meta.preperiod != 0 {
            return Err(Error::input(format!("{theta} is not periodic under doubling")));
        }
        let p = meta.period;
        let mut bits = Vec::with_capacity(p);
        let mut cur = theta.clone();
        for _ in 0..p {
            let prev = cur.double_n(p - 1);
            bits.push(cur.half(true) == prev);
            cur = prev;
        }
        Self::periodic(theta.clone(), Vec::new(), bits)
    }

    /// Canonical periodic representation: primitive cycle, shortest prefix.
    fn normalize(&mut self) {
        let Some(cycle) = self.cycle.as_mut() else { return };
        let n = cycle.len();
        if let Some(d) = (1..=n).find(|&d| n % d == 0 && (0..n).all(|i| cycle[i] == cycle[i % d])) {
            cycle.truncate(d);
        }
        while let (Some(&p), Some(&c)) = (self.prefix.last(), cycle.last()) {
            if p != c {
                break;
            }
            self.prefix.pop();
            cycle.rotate_right(1);
        }
    }

    pub fn is_periodic(&self) -> bool {
        self.cycle.is_some()
    }

    /// Stored depth of a truncation; `None` for a periodic lift.
    pub fn depth(&self) -> Option<usize> {
        match self.cycle {
            Some(_) => None,
            None => Some(self.prefix.len()),
        }
    }

    /// Bit n, if known.
    pub fn bit(&self, n: usize) -> Option<bool> {
        if n < self.prefix.len() {
            return Some(self.prefix[n]);
        }
        self.cycle.as_ref().map(|c| c[(n - self.prefix.len()) % c.len()])
    }

    /// θ₋ₙ, if within the stored depth.
    pub fn angle_at(&self, n: usize) -> Option<Angle> {
        let mut t = self.head.clone();
        for k in 0..n {
            t = t.half(self.bit(k)?);
        }
        Some(t)
    }

    /// (θ₀, …, θ₋ₙ) for n up to the stored depth.
    pub fn angles(&self, n: usize) -> Vec<Angle> {
        let mut out = vec![self.head.clone()];
        for k in 0..n {
            match self.bit(k) {
                Some(b) => {
                    let next = out[k].half(b);
                    out.push(next);
                }
                None => break,
            }
        }
        out
    }

    /// The depth-n truncation; errors when fewer bits are stored.
    pub fn truncate(&self, n: usize) -> Result<Self> {
        let bits = (0..n)
            .map(|k| self.bit(k))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::input(format!("truncation to depth {n} exceeds stored depth {}", self.prefix.len())))?;
        Ok(Self::truncated(self.head.clone(), bits))
    }

    /// δ̂θ̂ = (2θ₀, θ₀, θ₋₁, …).
    pub fn delta_hat(&self) -> Self {
        let mut prefix = Vec::with_capacity(self.prefix.len() + 1);
        prefix.push(self.head.double().half(true) == self.head);
        prefix.extend_from_slice(&self.prefix);
        let mut out = Self { head: self.head.double(), prefix, cycle: self.cycle.clone() };
        out.normalize();
        out
    }

    pub fn delta_hat_n(&self, n: usize) -> Self {
        (0..n).fold(self.clone(), |a, _| a.delta_hat())
    }

    /// δ̂⁻¹θ̂ = (θ₋₁, θ₋₂, …); errors on a depth-0 truncation.
    pub fn delta_hat_inv(&self) -> Result<Self> {
        let b = self.bit(0).ok_or_else(|| Error::input("cannot shift back a depth-0 truncation"))?;
        let head = self.head.half(b);
        if !self.prefix.is_empty() {
            return Ok(Self { head, prefix: self.prefix[1..].to_vec(), cycle: self.cycle.clone() });
        }
        let mut cycle = self.cycle.clone().unwrap();
        cycle.rotate_left(1);
        Ok(Self { head, prefix: Vec::new(), cycle: Some(cycle) })
    }

    pub fn delta_hat_inv_n(&self, n: usize) -> Result<Self> {
        (0..n).try_fold(self.clone(), |a, _| a.delta_hat_inv())
    }

    /// Whether the two agree on their common stored depth.
    pub fn agrees_with(&self, other: &Self) -> bool {
        let n = match (self.depth(), other.depth()) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => return self == other,
        };
        self.head == other.head && (0..n).all(|k| self.bit(k) == other.bit(k))
    }
}

impl fmt::Display for LiftedAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let word = |bits: &[bool]| bits.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>();
        write!(f, "{}:{}", self.head, word(&self.prefix))?;
        if let Some(c) = &self.cycle {
            write!(f, "({})", word(c))?;
        }
        Ok(())
    }
}

impl PartialOrd for LiftedAngle {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LiftedAngle {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.head, &self.prefix, &self.cycle).cmp(&(&other.head, &other.prefix, &other.cycle))
    }
}

/// A truncated backward orbit (z₀, z₋₁, …, z₋N).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BackwardOrbit {
    pub points: Vec<C64>,
}

/// Largest accepted |f(z₋ₙ₋₁) − z₋ₙ|.
pub const ORBIT_TOL: f64 = 1e-9;

impl BackwardOrbit {
    pub fn new(map: &QuadMap, points: Vec<C64>) -> Result<Self> {
        Self::with_tolerance(map, points, ORBIT_TOL)
    }

    pub fn with_tolerance(map: &QuadMap, points: Vec<C64>, tol: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::input("a backward orbit needs at least one point"));
        }
        for (n, w) in points.windows(2).enumerate() {
            let err = (map.f(w[1]) - w[0]).norm();
            if !(err <= tol * (1.0 + w[0].norm())) {
                return Err(Error::verification(format!("f(z₋{}) misses z₋{n} by {err:.3e}", n + 1)));
            }
        }
        Ok(Self { points })
    }

    /// The orbit taking preimage `bits[n]` (0 for the principal square root) at step n.
    pub fn from_choices(map: &QuadMap, z0: C64, bits: &[bool]) -> Self {
        let mut points = vec![z0];
        for &b in bits {
            let pre = map.preimages(*points.last().unwrap());
            points.push(pre[b as usize]);
        }
        Self { points }
    }

    pub fn random<R: Rng>(map: &QuadMap, z0: C64, depth: usize, rng: &mut R) -> Self {
        let bits: Vec<bool> = (0..depth).map(|_| rng.gen()).collect();
        Self::from_choices(map, z0, &bits)
    }

    pub fn constant(z: C64, depth: usize) -> Self {
        Self { points: vec![z; depth + 1] }
    }

    pub fn depth(&self) -> usize {
        self.points.len() - 1
    }

    /// f̂ẑ = (f(z₀), z₀, z₋₁, …).
    pub fn shift(&self, map: &QuadMap) -> Self {
        let mut points = Vec::with_capacity(self.points.len() + 1);
        points.push(map.f(self.points[0]));
        points.extend_from_slice(&self.points);
        Self { points }
    }

    pub fn truncate(&self, depth: usize) -> Self {
        Self { points: self.points[..=depth.min(self.depth())].to_vec() }
    }
}

/// A tile of the natural extension: lifted angle, level and signature.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LiftedAddress {
    pub angle: LiftedAngle,
    pub level: i64,
    pub sign: Sign,
}

impl LiftedAddress {
    /// Address of the image tile under f̂.
    pub fn image(&self) -> Self {
        Self { angle: self.angle.delta_hat(), level: self.level + 1, sign: self.sign }
    }
}

impl fmt::Display for LiftedAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.angle, self.level, self.sign)
    }
}

/// Depth-N truncations ω̂ with ω₀ = θ₀⁺ and ω₋ₙ ≠ θ₀⁺ for 1 ≤ n ≤ N, sorted.
pub fn omega_set(theta_plus: &Angle, depth: usize) -> Vec<LiftedAngle> {
    let mut out = Vec::new();
    let mut stack = vec![(theta_plus.clone(), Vec::new())];
    while let Some((t, bits)) = stack.pop() {
        if bits.len() == depth {
            out.push(LiftedAngle::truncated(theta_plus.clone(), bits));
            continue;
        }
        for b in [false, true] {
            let s = t.half(b);
            if &s != theta_plus {
                let mut nb = bits.clone();
                nb.push(b);
                stack.push((s, nb));
            }
        }
    }
    out.sort();
    out
}

/// The lifted tile containing every coordinate of ẑ; `None` when some
/// coordinate escapes or lies on a degenerating arc.
pub fn lift_tile_address(tess: &Tessellation, side: Side, orbit: &BackwardOrbit) -> Result<Option<LiftedAddress>> {
    let located: Vec<_> = orbit.points.par_iter().map(|&z| tess.locate(side, z)).collect::<Result<_>>()?;
    let mut found = Vec::with_capacity(located.len());
    for l in located {
        match l {
            Some(l) if !l.on_cut => found.push(l.address),
            _ => return Ok(None),
        }
    }
    let first = &found[0];
    let mut bits = Vec::with_capacity(found.len() - 1);
    let mut prev = first.angle.clone();
    for (n, a) in found.iter().enumerate().skip(1) {
        if a.sign != first.sign || a.level != first.level - n as i64 || a.angle.double() != prev {
            return Err(Error::verification(format!("z₋{n} lies in {a}, inconsistent with z₀ in {first}")));
        }
        bits.push(prev.half(true) == a.angle);
        prev = a.angle.clone();
    }
    Ok(Some(LiftedAddress { angle: LiftedAngle::truncated(first.angle.clone(), bits), level: first.level, sign: first.sign }))
}

/// Verdict of the principal-leaf test, stamped with the depth it used.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrincipalVerdict {
    pub principal: bool,
    pub depth: usize,
    /// Largest distance to the invariant star over the tested tail.
    pub distance: f64,
}

/// Minimum truncation depth as a multiple of l′.
pub const PRINCIPAL_DEPTH_FACTOR: usize = 30;
pub const PRINCIPAL_TOL: f64 = 1e-3;

/// Tests whether ẑ is consistent with lying on a principal leaf: the tail
/// points z₋ₙₗ′ over the last half of the truncation stay within `tol` of the
/// invariant star. Constant orbits at attracting points and orbits at ∞ are irregular.
pub fn is_principal(tess: &Tessellation, orbit: &BackwardOrbit, tol: f64) -> Result<PrincipalVerdict> {
    let star = invariant_arc_with(&tess.charts.koenigs, &tess.pair)?;
    is_principal_with(&tess.pair, &star, orbit, tol)
}

pub fn is_principal_with(pair: &DegenerationPair, star: &ArcSet, orbit: &BackwardOrbit, tol: f64) -> Result<PrincipalVerdict> {
    let lp = pair.lprime as usize;
    let need = PRINCIPAL_DEPTH_FACTOR * lp;
    if orbit.points.iter().any(|z| !z.is_finite() || z.norm() > 1e150) {
        return Err(Error::Irregular("backward orbit at ∞".into()));
    }
    let on_cycle = |z: &C64| pair.alpha.iter().any(|a| (a - z).norm() < 1e-9);
    if orbit.points.iter().all(on_cycle) {
        return Err(Error::Irregular("backward orbit on the attracting cycle".into()));
    }
    if orbit.depth() < need {
        return Err(Error::input(format!("depth {} below the minimum {need}", orbit.depth())));
    }
    let branches: Vec<&Vec<C64>> = star.arcs.iter().flat_map(|a| a.branches.iter()).collect();
    let n_max = orbit.depth() / lp;
    let mut distance = 0.0f64;
    for n in (n_max / 2).max(1)..=n_max {
        let z = orbit.points[n * lp];
        let d = branches.iter().map(|b| polyline_dist(z, b)).fold(f64::INFINITY, f64::min);
        distance = distance.max(d);
    }
    Ok(PrincipalVerdict { principal: distance <= tol, depth: orbit.depth(), distance })
}

/// ĥẑ = (h(z₀), h(z₋₁), …), checked to be a g-orbit within `tol`.
pub fn h_hat(semi: &Semiconjugacy, orbit: &BackwardOrbit, tol: f64) -> Result<BackwardOrbit> {
    let points = semi.h_batch(&orbit.points).into_iter().collect::<Result<Vec<_>>>()?;
    BackwardOrbit::with_tolerance(&semi.pair().g(), points, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{cx, PairSpec};
    use crate::tess::Resolution;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn a(n: u64, d: u64) -> Angle {
        Angle::frac(n, d)
    }

    #[test]
    fn delta_hat_examples() {
        let zero = LiftedAngle::cyclic(&Angle::zero()).unwrap();
        assert_eq!(zero.delta_hat(), zero);
        let t = LiftedAngle::truncated(a(1, 7), vec![true, false]);
        assert_eq!(t.angles(2), vec![a(1, 7), a(4, 7), a(2, 7)]);
        assert_eq!(t.delta_hat().angles(3), vec![a(2, 7), a(1, 7), a(4, 7), a(2, 7)]);
        let c = LiftedAngle::cyclic(&a(1, 7)).unwrap();
        assert_eq!(c.delta_hat_n(3), c);
        assert_ne!(c.delta_hat(), c);
        assert_eq!(c.angles(3), vec![a(1, 7), a(4, 7), a(2, 7), a(1, 7)]);
    }

    #[test]
    fn normalization() {
        let x = LiftedAngle::periodic(a(1, 7), vec![false, true], vec![false, true, false, true]).unwrap();
        let y = LiftedAngle::periodic(a(1, 7), vec![], vec![false, true]).unwrap();
        assert_eq!(x, y);
        let json = serde_json::to_string(&y).unwrap();
        assert!(json.contains("\"prefix\":[]") && json.contains("\"cycle\":[false,true]"));
    }

    #[test]
    fn omega_counts() {
        assert_eq!(omega_set(&Angle::zero(), 1), vec![LiftedAngle::truncated(Angle::zero(), vec![true])]);
        for n in 1..=8 {
            assert_eq!(omega_set(&Angle::zero(), n).len(), 1 << (n - 1));
        }
        let om = omega_set(&a(4, 7), 3);
        for w in &om {
            assert!(w.angles(3)[1..].iter().all(|t| t != &a(4, 7)));
        }
        // The branch 1/7 → 4/7 is pruned, so no member passes 2/7 → 1/7 → 4/7.
        assert!(om.iter().all(|w| !w.angles(3).windows(2).any(|p| p[0] == a(1, 7) && p[1] == a(4, 7))));
    }

    #[test]
    fn omega_prefix_consistent() {
        let t = a(4, 7);
        for n in 1..6 {
            let mut cut: Vec<_> = omega_set(&t, n + 1).iter().map(|w| w.truncate(n).unwrap()).collect();
            cut.dedup();
            assert_eq!(cut, omega_set(&t, n));
        }
    }

    proptest! {
        #[test]
        fn shift_inverts(num in 0u64..63, bits in proptest::collection::vec(any::<bool>(), 1..12)) {
            let t = LiftedAngle::truncated(Angle::frac(num, 63), bits);
            prop_assert_eq!(t.delta_hat().delta_hat_inv().unwrap(), t.clone());
            let angles = t.angles(t.prefix.len());
            for w in angles.windows(2) {
                prop_assert_eq!(w[1].double(), w[0].clone());
            }
        }

        #[test]
        fn periodic_shift_inverts(num in 0u64..31, pre in proptest::collection::vec(any::<bool>(), 0..5), cyc in proptest::collection::vec(any::<bool>(), 1..5)) {
            let t = LiftedAngle::periodic(Angle::frac(num, 31), pre, cyc).unwrap();
            prop_assert_eq!(t.delta_hat().delta_hat_inv().unwrap(), t.clone());
            prop_assert_eq!(t.delta_hat_inv().unwrap().delta_hat(), t);
        }
    }

    #[test]
    fn principal_examples() {
        let pair = PairSpec::cauliflower(0.5).resolve().unwrap();
        let tess = Tessellation::new(&pair, Resolution::default()).unwrap();
        let v = is_principal(&tess, &BackwardOrbit::constant(cx(0.75, 0.0), 30), PRINCIPAL_TOL).unwrap();
        assert!(v.principal);
        assert!(matches!(is_principal(&tess, &BackwardOrbit::constant(cx(0.25, 0.0), 30), PRINCIPAL_TOL), Err(Error::Irregular(_))));
        // Follow the preimage branch that tracks the rays of angles 1/3 and 2/3.
        let map = pair.f();
        let mut pts = vec![cx(0.1, 0.5)];
        let target = tess.landing(Side::Hyperbolic, &a(1, 3)).unwrap();
        let other = tess.landing(Side::Hyperbolic, &a(2, 3)).unwrap();
        for n in 0..40 {
            let goal = if n % 2 == 0 { target } else { other };
            let pre = map.preimages(*pts.last().unwrap());
            pts.push(if (pre[0] - goal).norm() < (pre[1] - goal).norm() { pre[0] } else { pre[1] });
        }
        let orbit = BackwardOrbit::new(&map, pts).unwrap();
        assert!(!is_principal(&tess, &orbit, PRINCIPAL_TOL).unwrap().principal);
    }

    #[test]
    fn lifted_addresses_are_equivariant() {
        let pair = PairSpec::cauliflower(0.5).resolve().unwrap();
        let tess = Tessellation::new(&pair, Resolution::default()).unwrap();
        let map = pair.f();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        let mut tries = 0;
        while checked < 50 && tries < 200 {
            tries += 1;
            let z0 = cx(rng.gen_range(-0.6..1.0), rng.gen_range(-0.5..0.5));
            let orbit = BackwardOrbit::random(&map, z0, 4, &mut rng);
            let Some(addr) = lift_tile_address(&tess, Side::Hyperbolic, &orbit).unwrap() else { continue };
            let img = lift_tile_address(&tess, Side::Hyperbolic, &orbit.shift(&map)).unwrap().expect("image resolves");
            assert_eq!(img, addr.image(), "at {z0}");
            checked += 1;
        }
        assert_eq!(checked, 50);
        let depth0 = BackwardOrbit::constant(cx(0.3, 0.1), 0);
        let a0 = lift_tile_address(&tess, Side::Hyperbolic, &depth0).unwrap().unwrap();
        let l = tess.locate(Side::Hyperbolic, cx(0.3, 0.1)).unwrap().unwrap();
        assert_eq!((a0.angle.head, a0.level, a0.sign), (l.address.angle, l.address.level, l.address.sign));
        assert!(lift_tile_address(&tess, Side::Hyperbolic, &BackwardOrbit::constant(cx(2.0, 0.0), 0)).unwrap().is_none());
    }

    #[test]
    fn h_hat_examples() {
        let pair = PairSpec::cauliflower(0.5).resolve().unwrap();
        let semi = Semiconjugacy::new(&pair, Resolution::default()).unwrap();
        let img = h_hat(&semi, &BackwardOrbit::constant(cx(0.75, 0.0), 3), 1e-4).unwrap();
        for p in &img.points {
            assert!((p - cx(0.5, 0.0)).norm() < 1e-6);
        }
        let map = pair.f();
        let orbit = BackwardOrbit::from_choices(&map, cx(0.3, 0.2), &[false, true, true]);
        let up = h_hat(&semi, &orbit.shift(&map), 1e-4).unwrap();
        let down = h_hat(&semi, &orbit, 1e-4).unwrap().shift(&pair.g());
        for (u, d) in up.points.iter().zip(&down.points) {
            assert!((u - d).norm() < 1e-4);
        }
    }
}

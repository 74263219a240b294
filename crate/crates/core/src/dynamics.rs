//! Quadratic maps, attracting and parabolic cycles, and degeneration pairs.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub fn cx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadMap {
    pub c: C64,
}

impl QuadMap {
    pub fn new(c: C64) -> Self {
        Self { c }
    }

    #[inline]
    pub fn f(&self, z: C64) -> C64 {
        z * z + self.c
    }

    pub fn iterate(&self, z: C64, n: usize) -> C64 {
        (0..n).fold(z, |w, _| self.f(w))
    }

    /// (f^n(z), (f^n)'(z)).
    pub fn iterate_with_derivative(&self, z: C64, n: usize) -> (C64, C64) {
        let mut w = z;
        let mut d = C64::new(1.0, 0.0);
        for _ in 0..n {
            d *= 2.0 * w;
            w = self.f(w);
        }
        (w, d)
    }

    /// Both preimages ±√(w − c), the principal one first.
    pub fn preimages(&self, w: C64) -> [C64; 2] {
        let s = (w - self.c).sqrt();
        [s, -s]
    }

    /// Lift of a polyline under f starting at the preimage of `path[0]`
    /// nearest `start`, continued by nearest root to the linear extrapolation.
    pub fn lift_path(&self, path: &[C64], start: C64) -> Vec<C64> {
        let mut out: Vec<C64> = Vec::with_capacity(path.len());
        for (k, w) in path.iter().enumerate() {
            let s = (w - self.c).sqrt();
            let guess = match k {
                0 => start,
                1 => out[0],
                _ => 2.0 * out[k - 1] - out[k - 2],
            };
            out.push(if (s - guess).norm() <= (s + guess).norm() { s } else { -s });
        }
        out
    }

    /// Lifts `path` n times; `anchors[j]` is the expected start after j + 1 lifts.
    pub fn lift_path_n(&self, path: &[C64], anchors: &[C64]) -> Vec<C64> {
        let mut cur = path.to_vec();
        for a in anchors {
            cur = self.lift_path(&cur, *a);
        }
        cur
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    /// Points in forward-orbit order.
    pub points: Vec<C64>,
    pub period: usize,
    pub multiplier: C64,
}

impl Cycle {
    fn from_point(map: &QuadMap, z: C64, period: usize) -> Self {
        let mut points = Vec::with_capacity(period);
        let mut w = z;
        let mut m = C64::new(1.0, 0.0);
        for _ in 0..period {
            points.push(w);
            m *= 2.0 * w;
            w = map.f(w);
        }
        Cycle { points, period, multiplier: m }
    }
}

fn divisors_below(p: usize) -> impl Iterator<Item = usize> {
    (1..p).filter(move |d| p.is_multiple_of(*d))
}

/// Newton polish of a period-`period` point of `map`; `mult` is the
/// expected root multiplicity of f^p(z) − z (1 for simple cycles).
pub fn polish_periodic(map: &QuadMap, z0: C64, period: usize, mult: usize) -> Result<C64> {
    let mut z = z0;
    let m = mult.max(1) as f64;
    for _ in 0..400 {
        let (w, d) = map.iterate_with_derivative(z, period);
        let g = w - z;
        let dg = d - 1.0;
        if dg.norm() == 0.0 {
            break;
        }
        let step = m * g / dg;
        z -= step;
        if !z.is_finite() {
            return Err(Error::numeric("periodic-point Newton diverged"));
        }
        if step.norm() < 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    Ok(z)
}

/// (f^d(z), (f^d)'(z), (f^d)''(z)).
pub fn iterate2(map: &QuadMap, z: C64, d: usize) -> (C64, C64, C64) {
    let (mut w, mut d1, mut d2) = (z, C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    for _ in 0..d {
        d2 = 2.0 * (d1 * d1 + w * d2);
        d1 *= 2.0 * w;
        w = map.f(w);
    }
    (w, d1, d2)
}

/// Newton on (f^d)'(z) = 1, the well-conditioned equation at a double fixed point.
pub fn polish_multiplier_one(map: &QuadMap, z0: C64, d: usize) -> C64 {
    let mut z = z0;
    for _ in 0..100 {
        let (_, d1, d2) = iterate2(map, z, d);
        if d2.norm() < 1e-300 {
            break;
        }
        let step = (d1 - 1.0) / d2;
        z -= step;
        if step.norm() < 1e-16 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

/// The attracting cycle found from the critical orbit.
pub fn attracting_cycle(c: C64, max_period: usize) -> Result<Cycle> {
    let map = QuadMap::new(c);
    let mut z = C64::new(0.0, 0.0);
    let budget = 400_000usize;
    let mut it = 0usize;
    while it < budget {
        for _ in 0..1000 {
            z = map.f(z);
        }
        it += 1000;
        if !z.is_finite() || z.norm() > 1e6 {
            return Err(Error::numeric(format!("critical orbit escapes for c = {c}")));
        }
        let mut w = z;
        for p in 1..=max_period {
            w = map.f(w);
            if (w - z).norm() < 1e-9 * (1.0 + z.norm()) {
                let zp = polish_periodic(&map, z, p, 1)?;
                let cyc = Cycle::from_point(&map, zp, p);
                let ok = cyc.multiplier.norm() < 1.0 + 1e-9 && divisors_below(p).all(|d| (map.iterate(zp, d) - zp).norm() > 1e-9);
                if ok {
                    return Ok(cyc);
                }
            }
        }
    }
    Err(Error::numeric(format!("no attracting cycle of period ≤ {max_period} detected for c = {c}")))
}

/// f_c^p(z), its z-derivative and their partials, for Newton in (z, c).
fn multiplier_system(z: C64, c: C64, p: usize) -> (C64, C64, [[C64; 2]; 2]) {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let (mut w, mut wz, mut wc) = (z, one, zero);
    let (mut d, mut dz, mut dc) = (one, zero, zero);
    for _ in 0..p {
        let nd = 2.0 * w * d;
        let ndz = 2.0 * (wz * d + w * dz);
        let ndc = 2.0 * (wc * d + w * dc);
        let nw = w * w + c;
        let nwz = 2.0 * w * wz;
        let nwc = 2.0 * w * wc + one;
        (w, wz, wc) = (nw, nwz, nwc);
        (d, dz, dc) = (nd, ndz, ndc);
    }
    (w - z, d, [[wz - one, wc], [dz, dc]])
}

fn newton_multiplier(p: usize, lambda: C64, z0: C64, c0: C64) -> Result<(C64, C64)> {
    let (mut z, mut c) = (z0, c0);
    for _ in 0..100 {
        let (g1, d, j) = multiplier_system(z, c, p);
        let g2 = d - lambda;
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.norm() < 1e-300 {
            return Err(Error::numeric("singular Jacobian in multiplier Newton"));
        }
        let dz = (g1 * j[1][1] - g2 * j[0][1]) / det;
        let dc = (j[0][0] * g2 - j[1][0] * g1) / det;
        z -= dz;
        c -= dc;
        if !z.is_finite() || !c.is_finite() {
            return Err(Error::numeric("multiplier Newton diverged"));
        }
        if dz.norm() < 1e-12 && dc.norm() < 1e-11 {
            // One more step to land well inside the tolerance.
            let (g1, d, j) = multiplier_system(z, c, p);
            let g2 = d - lambda;
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            z -= (g1 * j[1][1] - g2 * j[0][1]) / det;
            c -= (j[0][0] * g2 - j[1][0] * g1) / det;
            return Ok((z, c));
        }
    }
    Err(Error::numeric("multiplier Newton did not converge"))
}

fn check_minimal_period(z: C64, c: C64, p: usize) -> Result<()> {
    let map = QuadMap::new(c);
    for d in divisors_below(p) {
        if (map.iterate(z, d) - z).norm() < 1e-7 {
            return Err(Error::numeric(format!("converged to a cycle of period {d} instead of {p}")));
        }
    }
    Ok(())
}

/// Parameter c at which f_c has a period-`period` cycle with multiplier λ,
/// reached by continuation in the multiplier from the attracting cycle at `seed`.
pub fn solve_multiplier(period: usize, lambda: C64, seed: C64) -> Result<C64> {
    solve_multiplier_full(period, lambda, seed).map(|(_, c)| c)
}

/// As [`solve_multiplier`], also returning the cycle point.
pub fn solve_multiplier_full(period: usize, lambda: C64, seed: C64) -> Result<(C64, C64)> {
    if period == 0 {
        return Err(Error::input("period must be positive"));
    }
    if lambda.norm() > 1.0 + 1e-12 {
        return Err(Error::input("multiplier must satisfy |λ| ≤ 1"));
    }
    let start = attracting_cycle(seed, period)?;
    if start.period != period {
        return Err(Error::input(format!("seed {seed} lies in a period-{} component, not period {period}", start.period)));
    }
    let (mut z, mut c) = (start.points[0], seed);
    let lam0 = start.multiplier;
    let steps = (((lambda - lam0).norm() / 0.02).ceil() as usize).max(1);
    for k in 1..=steps {
        let t = k as f64 / steps as f64;
        let lam = lam0 + (lambda - lam0) * t;
        let (nz, nc) = newton_multiplier(period, lam, z, c)?;
        z = nz;
        c = nc;
    }
    check_minimal_period(z, c, period)?;
    Ok((z, c))
}

/// The fixed point (1 + √(1 − 4c))/2, principal branch.
pub fn beta_fixed_point(c: C64) -> C64 {
    (1.0 + (1.0 - 4.0 * c).sqrt()) / 2.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    A,
    B,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::A => "A",
            Case::B => "B",
        })
    }
}

/// Case from the integer data; errors when neither clause holds.
pub fn classify(q: u64, l: u64, qp: u64, lp: u64) -> Result<Case> {
    if l * q != lp * qp {
        return Err(Error::input(format!("l·q = {} differs from l′·q′ = {}", l * q, lp * qp)));
    }
    if q == qp && l == lp {
        Ok(Case::A)
    } else if q == 1 && qp > 1 && l == lp * qp {
        Ok(Case::B)
    } else {
        Err(Error::input(format!("(q,l,q′,l′) = ({q},{l},{qp},{lp}) is neither Case (a) nor (b)")))
    }
}

/// A hyperbolic map f = f_c and the parabolic map g = f_σ it degenerates to.
#[derive(Clone, Debug, Serialize)]
pub struct DegenerationPair {
    pub c: C64,
    pub sigma: C64,
    pub p: u64,
    pub q: u64,
    pub l: u64,
    pub pprime: u64,
    pub qprime: u64,
    pub lprime: u64,
    pub case: Case,
    pub r: f64,
    /// Attracting cycle of f, starting at the point of the critical component.
    pub alpha: Vec<C64>,
    pub alpha_multiplier: C64,
    /// Parabolic cycle of g, starting at the point on the critical component boundary.
    pub beta: Vec<C64>,
}

impl DegenerationPair {
    pub fn f(&self) -> QuadMap {
        QuadMap::new(self.c)
    }

    pub fn g(&self) -> QuadMap {
        QuadMap::new(self.sigma)
    }

    /// l̄ = l·q = l′·q′.
    pub fn lbar(&self) -> usize {
        (self.l * self.q) as usize
    }

    /// Number of attracting petals at a point of the parabolic cycle.
    pub fn petals(&self) -> usize {
        self.qprime as usize
    }

    pub fn classify_case(&self) -> Result<Case> {
        classify(self.q, self.l, self.qprime, self.lprime)
    }

    /// Short human label, e.g. `1/3:1:0.9:B`.
    pub fn label(&self) -> String {
        format!("{}/{}:{}:{}:{}", self.pprime, self.qprime, self.lprime, self.r, self.case)
    }
}

/// Seeds locating hyperbolic components of period > 1.
#[derive(Clone, Debug, Default)]
pub struct Seeds {
    /// A parameter inside the component X of period l′.
    pub component: Option<C64>,
}

/// Point of the l′-cycle of f_c in the component containing 0, i.e. lim f^{kl}(0).
fn cycle_from_critical(c: C64, cyc: &Cycle) -> (Vec<C64>, C64) {
    let map = QuadMap::new(c);
    let p = cyc.period;
    let mut z = C64::new(0.0, 0.0);
    for _ in 0..(20_000 * p) {
        z = map.f(z);
    }
    let start = cyc.points.iter().copied().min_by(|a, b| (a - z).norm().total_cmp(&(b - z).norm())).unwrap();
    let rotated = Cycle::from_point(&map, start, p);
    (rotated.points, rotated.multiplier)
}

/// Resolves a degeneration pair from internal angle p/q of the component of
/// period `lprime`, internal radius `r`, and the case tag.
pub fn make_pair(p: u64, q: u64, lprime: u64, r: f64, case: Case, seeds: &Seeds) -> Result<DegenerationPair> {
    use num_integer::Integer;
    if !(q >= 1 && p.gcd(&q) == 1 && (p < q || (p, q) == (1, 1))) {
        return Err(Error::input(format!("invalid internal angle {p}/{q}")));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::input("internal radius must lie in (0, 1)"));
    }
    if lprime == 0 {
        return Err(Error::input("l′ must be positive"));
    }
    if case == Case::B && q == 1 {
        return Err(Error::input("Case (b) needs q′ > 1"));
    }
    let per = lprime as usize;
    let seed_x = match (lprime, seeds.component) {
        (_, Some(s)) => s,
        (1, None) => C64::new(0.0, 0.0),
        _ => return Err(Error::input(format!("a component seed is required for l′ = {lprime}"))),
    };
    let angle = 2.0 * PI * (p as f64) / (q as f64);
    let root_mult = C64::from_polar(1.0, angle);
    let sigma = solve_multiplier(per, root_mult, seed_x)?;
    let (c, qq, ll) = match case {
        Case::A => (solve_multiplier(per, C64::from_polar(r, angle), seed_x)?, q, lprime),
        Case::B => {
            // Step just outside X along the internal ray to land in the satellite.
            let (_, c_out) = outside_root(per, angle, seed_x)?;
            let c = solve_multiplier(per * q as usize, C64::new(r, 0.0), c_out)?;
            (c, 1, lprime * q)
        }
    };
    let (pp, qp, lp) = (p, q, lprime);
    let case_checked = classify(qq, ll, qp, lp)?;
    debug_assert_eq!(case_checked, case);
    if (c - sigma).norm() < 1e-14 {
        return Err(Error::numeric("hyperbolic parameter coincides with the root"));
    }
    let cyc = attracting_cycle(c, (ll * qq) as usize)?;
    if cyc.period != ll as usize {
        return Err(Error::numeric(format!("attracting cycle has period {} but l = {ll}", cyc.period)));
    }
    if cyc.multiplier.norm() < 1e-12 {
        return Err(Error::input("superattracting parameters are not allowed"));
    }
    let (alpha, alpha_multiplier) = cycle_from_critical(c, &cyc);
    let beta = parabolic_cycle(sigma, per, q as usize)?;
    Ok(DegenerationPair { c, sigma, p: pp, q: qq, l: ll, pprime: pp, qprime: qp, lprime: lp, case, r, alpha, alpha_multiplier, beta })
}

/// Parameter slightly outside X beyond the root at the given internal angle.
fn outside_root(per: usize, angle: f64, seed_x: C64) -> Result<(C64, C64)> {
    // Reach multiplier 0.98·e^{iθ} inside X, then push across |λ| = 1.
    let (mut z, mut c) = solve_multiplier_full(per, C64::from_polar(0.98, angle), seed_x)?;
    for k in 1..=4 {
        let lam = C64::from_polar(0.98 + 0.01 * k as f64, angle);
        let (nz, nc) = newton_multiplier(per, lam, z, c)?;
        z = nz;
        c = nc;
    }
    Ok((z, c))
}

/// The parabolic cycle of f_σ with period `per`, starting at the point on
/// the boundary of the Fatou component containing 0.
pub fn parabolic_cycle(sigma: C64, per: usize, q: usize) -> Result<Vec<C64>> {
    let map = QuadMap::new(sigma);
    let lbar = per * q;
    let mut z = C64::new(0.0, 0.0);
    for _ in 0..200_000 {
        z = map.iterate(z, lbar);
        if !z.is_finite() || z.norm() > 1e3 {
            return Err(Error::numeric("critical orbit of g escapes"));
        }
    }
    let b = if q == 1 {
        // Double root of f^per − id: solve the simple equation (f^per)' = 1.
        let b = polish_periodic(&map, z, per, 2)?;
        polish_multiplier_one(&map, b, per)
    } else {
        polish_periodic(&map, z, per, 1)?
    };
    let (w, _) = map.iterate_with_derivative(b, per);
    if (w - b).norm() > 1e-8 {
        return Err(Error::numeric("parabolic point did not converge"));
    }
    Ok((0..per).map(|k| map.iterate(b, k)).collect())
}

/// Textual pair description `p/q:lprime:r:A|B[:seed=re,im]` or a preset name.
#[derive(Clone, Debug, PartialEq)]
pub struct PairSpec {
    pub p: u64,
    pub q: u64,
    pub lprime: u64,
    pub r: f64,
    pub case: Case,
    pub seed: Option<C64>,
}

/// Center of the real period-3 component.
pub const AIRPLANE_CENTER: f64 = -1.754_877_666_246_693;

impl PairSpec {
    pub fn resolve(&self) -> Result<DegenerationPair> {
        make_pair(self.p, self.q, self.lprime, self.r, self.case, &Seeds { component: self.seed })
    }

    pub fn cauliflower(r: f64) -> Self {
        Self { p: 1, q: 1, lprime: 1, r, case: Case::A, seed: None }
    }

    pub fn rabbits(r: f64, case: Case) -> Self {
        Self { p: 1, q: 3, lprime: 1, r, case, seed: None }
    }

    pub fn airplanes(r: f64) -> Self {
        Self { p: 1, q: 1, lprime: 3, r, case: Case::A, seed: Some(C64::new(AIRPLANE_CENTER, 0.0)) }
    }
}

impl FromStr for PairSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "cauliflower" | "cauliflowers" => return Ok(Self::cauliflower(0.5)),
            "rabbits-a" | "rabbit-a" => return Ok(Self::rabbits(0.9, Case::A)),
            "rabbits-b" | "rabbit-b" => return Ok(Self::rabbits(0.9, Case::B)),
            "airplanes" | "airplane" => return Ok(Self::airplanes(0.5)),
            _ => {}
        }
        let bad = || Error::input(format!("malformed pair spec {s:?}; expected p/q:lprime:r:A|B"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() < 4 || parts.len() > 5 {
            return Err(bad());
        }
        let (p, q) = parts[0].split_once('/').ok_or_else(bad)?;
        let p: u64 = p.trim().parse().map_err(|_| bad())?;
        let q: u64 = q.trim().parse().map_err(|_| bad())?;
        let lprime: u64 = parts[1].trim().parse().map_err(|_| bad())?;
        let r: f64 = parts[2].trim().parse().map_err(|_| bad())?;
        let case = match parts[3].trim() {
            "A" | "a" | "caseA" | "casea" => Case::A,
            "B" | "b" | "caseB" | "caseb" => Case::B,
            _ => return Err(bad()),
        };
        let seed = match parts.get(4) {
            None => None,
            Some(t) => {
                let t = t.trim().strip_prefix("seed=").ok_or_else(bad)?;
                let (re, im) = t.split_once(',').unwrap_or((t, "0"));
                Some(C64::new(re.trim().parse().map_err(|_| bad())?, im.trim().parse().map_err(|_| bad())?))
            }
        };
        if q == 0 || lprime == 0 {
            return Err(bad());
        }
        Ok(Self { p, q, lprime, r, case, seed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn attracting_cycle_examples() {
        let cyc = attracting_cycle(cx(3.0 / 16.0, 0.0), 4).unwrap();
        assert_eq!(cyc.period, 1);
        assert!(close(cyc.points[0], cx(0.25, 0.0), 1e-12));
        assert!(close(cyc.multiplier, cx(0.5, 0.0), 1e-12));
        let cyc = attracting_cycle(cx(0.0, 0.0), 4).unwrap();
        assert_eq!(cyc.points, vec![cx(0.0, 0.0)]);
        let cyc = attracting_cycle(cx(-1.0, 0.0), 4).unwrap();
        assert_eq!(cyc.period, 2);
        assert!(cyc.points.iter().any(|z| close(*z, cx(-1.0, 0.0), 1e-12)));
        assert!(cyc.points.iter().any(|z| close(*z, cx(0.0, 0.0), 1e-12)));
        assert!(cyc.multiplier.norm() < 1e-12);
    }

    /// c = λ/2 − λ²/4 on the main cardioid.
    fn cardioid(l: C64) -> C64 {
        l / 2.0 - l * l / 4.0
    }

    #[test]
    fn solve_multiplier_examples() {
        let c = solve_multiplier(1, cx(0.5, 0.0), cx(0.0, 0.0)).unwrap();
        assert!(close(c, cx(3.0 / 16.0, 0.0), 1e-11));
        let w = C64::from_polar(1.0, 2.0 * PI / 3.0);
        let c = solve_multiplier(1, w, cx(0.0, 0.0)).unwrap();
        assert!(close(c, cx(-1.0 / 8.0, 3.0 * 3f64.sqrt() / 8.0), 1e-11));
        let c = solve_multiplier(1, cx(1.0, 0.0), cx(0.0, 0.0)).unwrap();
        assert!(close(c, cx(0.25, 0.0), 1e-11));
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(3, 1, 3, 1).unwrap(), Case::A);
        assert_eq!(classify(1, 3, 3, 1).unwrap(), Case::B);
        assert!(classify(2, 1, 3, 1).is_err());
    }

    #[test]
    fn beta_examples() {
        assert!(close(beta_fixed_point(cx(0.0, 0.0)), cx(1.0, 0.0), 1e-15));
        assert!(close(beta_fixed_point(cx(3.0 / 16.0, 0.0)), cx(0.75, 0.0), 1e-15));
        assert!(close(beta_fixed_point(cx(0.25, 0.0)), cx(0.5, 0.0), 1e-15));
    }

    #[test]
    fn pairs_resolve() {
        let cauli = PairSpec::cauliflower(0.5).resolve().unwrap();
        assert!(close(cauli.c, cx(3.0 / 16.0, 0.0), 1e-11));
        assert!(close(cauli.sigma, cx(0.25, 0.0), 1e-11));
        assert!(close(cauli.alpha[0], cx(0.25, 0.0), 1e-11));
        assert!((cauli.beta[0] - cx(0.5, 0.0)).norm() < 1e-6);
        let a = PairSpec::rabbits(0.9, Case::A).resolve().unwrap();
        assert_eq!((a.q, a.l, a.qprime, a.lprime), (3, 1, 3, 1));
        let b = PairSpec::rabbits(0.9, Case::B).resolve().unwrap();
        assert_eq!((b.q, b.l, b.qprime, b.lprime), (1, 3, 3, 1));
        assert_eq!(b.classify_case().unwrap(), Case::B);
        assert!((b.alpha_multiplier - cx(0.9, 0.0)).norm() < 1e-9);
        assert!(close(a.sigma, b.sigma, 1e-11));
        let air = PairSpec::airplanes(0.5).resolve().unwrap();
        assert_eq!((air.q, air.l), (1, 3));
        assert!(close(air.sigma, cx(-1.75, 0.0), 1e-10));
        assert!(air.c.re < -1.75 && air.c.re > AIRPLANE_CENTER);
        assert!(air.alpha[0].norm() < air.alpha[1].norm());
    }

    #[test]
    fn monotone_approach_to_root() {
        let d: Vec<f64> = [0.5, 0.9, 0.99]
            .iter()
            .map(|&r| {
                let p = PairSpec::rabbits(r, Case::A).resolve().unwrap();
                (p.c - p.sigma).norm()
            })
            .collect();
        assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    }

    #[test]
    fn spec_parsing() {
        let s: PairSpec = "1/3:1:0.9:A".parse().unwrap();
        assert_eq!(s, PairSpec::rabbits(0.9, Case::A));
        assert!("1/3:1:0.9:C".parse::<PairSpec>().is_err());
        assert!("garbage".parse::<PairSpec>().is_err());
        let s: PairSpec = "1/1:3:0.5:caseA:seed=-1.75,0".parse().unwrap();
        assert_eq!(s.seed, Some(cx(-1.75, 0.0)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn multiplier_round_trip(r in 0.1f64..0.95, t in 0.0f64..1.0) {
            let lam = C64::from_polar(r, 2.0 * PI * t);
            let c = solve_multiplier(1, lam, cx(0.0, 0.0)).unwrap();
            prop_assert!((c - cardioid(lam)).norm() < 1e-10);
            let cyc = attracting_cycle(c, 2).unwrap();
            prop_assert!((cyc.multiplier - lam).norm() < 1e-10);
        }

        #[test]
        fn period_two_round_trip(r in 0.1f64..0.9, t in 0.0f64..1.0) {
            let lam = C64::from_polar(r, 2.0 * PI * t);
            let c = solve_multiplier(2, lam, cx(-1.0, 0.0)).unwrap();
            // Period-2 multiplier is 4(c + 1).
            prop_assert!((4.0 * (c + 1.0) - lam).norm() < 1e-9);
        }
    }
}

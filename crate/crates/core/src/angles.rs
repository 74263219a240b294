//! Exact angles on the circle and the doubling map.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use std::f64::consts::PI;

use crate::dynamics::{DegenerationPair, C64};
use crate::error::{Error, Result};
use crate::geom::winding;
use crate::rays::{trace_ray, RayCache, RayParams};

/// A point of R/Z stored as a reduced fraction `num/den` with `num < den`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Angle {
    num: BigUint,
    den: BigUint,
}

impl Angle {
    pub fn new(num: impl Into<BigUint>, den: impl Into<BigUint>) -> Result<Self> {
        let num = num.into();
        let den = den.into();
        if den.is_zero() {
            return Err(Error::input("angle denominator must be positive"));
        }
        Ok(Self::reduce(num, den))
    }

    /// `num/den` from machine integers; panics on a zero denominator.
    pub fn frac(num: u64, den: u64) -> Self {
        Self::new(num, den).expect("nonzero denominator")
    }

    pub fn zero() -> Self {
        Self { num: BigUint::zero(), den: BigUint::one() }
    }

    fn reduce(num: BigUint, den: BigUint) -> Self {
        let num = num % &den;
        if num.is_zero() {
            return Self::zero();
        }
        let g = num.gcd(&den);
        Self { num: num / &g, den: den / g }
    }

    pub fn num(&self) -> &BigUint {
        &self.num
    }

    pub fn den(&self) -> &BigUint {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        // Scale down huge denominators before converting.
        let bits = self.den.bits();
        if bits <= 1000 {
            self.num.to_f64().unwrap_or(0.0) / self.den.to_f64().unwrap_or(1.0)
        } else {
            let shift = bits - 60;
            let n = (&self.num >> shift).to_f64().unwrap_or(0.0);
            let d = (&self.den >> shift).to_f64().unwrap_or(1.0);
            n / d
        }
    }

    /// 2θ mod 1.
    pub fn double(&self) -> Self {
        Self::reduce(&self.num << 1u32, self.den.clone())
    }

    /// δ^n θ.
    pub fn double_n(&self, n: usize) -> Self {
        Self::reduce(&self.num << n, self.den.clone())
    }

    /// The two δ-preimages θ/2 and θ/2 + 1/2, in that order.
    pub fn halves(&self) -> [Self; 2] {
        let den2 = &self.den << 1u32;
        [Self::reduce(self.num.clone(), den2.clone()), Self::reduce(&self.num + &self.den, den2)]
    }

    /// The preimage θ/2 + bit/2.
    pub fn half(&self, bit: bool) -> Self {
        let [a, b] = self.halves();
        if bit {
            b
        } else {
            a
        }
    }

    /// θ + φ mod 1.
    pub fn add(&self, other: &Self) -> Self {
        let num = &self.num * &other.den + &other.num * &self.den;
        Self::reduce(num, &self.den * &other.den)
    }

    /// Counterclockwise arc length from `self` to `other`, in [0, 1).
    pub fn ccw_to(&self, other: &Self) -> Self {
        let a = &other.num * &self.den;
        let b = &self.num * &other.den;
        let d = &self.den * &other.den;
        if a >= b {
            Self::reduce(a - b, d)
        } else {
            Self::reduce(d.clone() + a - b, d)
        }
    }

    /// Minimal (preperiod, period) under doubling.
    pub fn orbit_meta(&self) -> OrbitMeta {
        let mut odd = self.den.clone();
        let mut preperiod = 0usize;
        while odd.is_even() {
            odd >>= 1u32;
            preperiod += 1;
        }
        OrbitMeta { preperiod, period: order_of_two(&odd) }
    }
}

/// Multiplicative order of 2 modulo an odd `m` (1 when `m == 1`).
fn order_of_two(m: &BigUint) -> usize {
    if m.is_one() {
        return 1;
    }
    let two = BigUint::from(2u32);
    let mut x = two.clone() % m;
    let mut k = 1usize;
    while !x.is_one() {
        x = (x * &two) % m;
        k += 1;
    }
    k
}

impl PartialOrd for Angle {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Angle {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.num * &other.den).cmp(&(&other.num * &self.den))
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl fmt::Debug for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Angle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let n: BigUint = n.parse().map_err(|_| Error::input(format!("bad angle numerator in {s:?}")))?;
        let d: BigUint = d.parse().map_err(|_| Error::input(format!("bad angle denominator in {s:?}")))?;
        Angle::new(n, d)
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitMeta {
    pub preperiod: usize,
    pub period: usize,
}

/// 2θ mod 1.
pub fn double(theta: &Angle) -> Angle {
    theta.double()
}

pub fn orbit_meta(theta: &Angle) -> OrbitMeta {
    theta.orbit_meta()
}

/// A δ-cycle together with its combinatorial rotation number.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CycleSet {
    pub angles: Vec<Angle>,
    pub rotation: (u64, u64),
}

pub const MAX_CYCLE_Q: u64 = 16;

fn check_pq(p: u64, q: u64) -> Result<()> {
    let ok = q >= 1 && p.gcd(&q) == 1 && ((1..q).contains(&p) || (p, q) == (1, 1));
    if ok {
        Ok(())
    } else {
        Err(Error::input(format!("invalid rotation number {p}/{q}")))
    }
}

/// The period-q cycle of angles k/(2^q − 1) on which δ acts as rotation by p/q.
pub fn cycle_angles(p: u64, q: u64) -> Result<CycleSet> {
    check_pq(p, q)?;
    if q > MAX_CYCLE_Q {
        return Err(Error::input(format!("q = {q} exceeds the cap {MAX_CYCLE_Q}")));
    }
    let d = (1u64 << q) - 1;
    let qs = q as usize;
    for k in 0..d.max(1) {
        let theta = Angle::frac(k, d.max(1));
        if theta.orbit_meta().period != qs {
            continue;
        }
        let mut orbit = Vec::with_capacity(qs);
        let mut t = theta.clone();
        for _ in 0..qs {
            orbit.push(t.clone());
            t = t.double();
        }
        if orbit.iter().any(|a| a < &theta) {
            continue;
        }
        let mut sorted = orbit.clone();
        sorted.sort();
        let rotates = sorted.iter().enumerate().all(|(i, a)| {
            let j = (i + p as usize) % qs;
            a.double() == sorted[j]
        });
        if rotates {
            return Ok(CycleSet { angles: sorted, rotation: (p % q.max(1), q) });
        }
    }
    Err(Error::numeric(format!("no cycle with rotation number {p}/{q}")))
}

/// Whether the δ-orbit of θ eventually enters `generators`.
pub fn in_theta(generators: &[Angle], theta: &Angle) -> bool {
    first_hit(generators, theta).is_some()
}

/// Smallest n ≥ 0 with δ^n θ ∈ `targets`.
pub fn first_hit(targets: &[Angle], theta: &Angle) -> Option<usize> {
    let meta = theta.orbit_meta();
    let mut t = theta.clone();
    for n in 0..=(meta.preperiod + meta.period) {
        if targets.contains(&t) {
            return Some(n);
        }
        t = t.double();
    }
    None
}

/// The inverse of p modulo q, represented in (−q/2, q/2].
pub fn ptilde(p: i64, q: i64) -> Result<i64> {
    if q < 1 || p.gcd(&q) != 1 {
        return Err(Error::input(format!("ptilde needs coprime p, q with q ≥ 1, got {p}/{q}")));
    }
    if q == 1 {
        return Ok(0);
    }
    let inv = p.extended_gcd(&q).x.rem_euclid(q);
    Ok(if 2 * inv > q { inv - q } else { inv })
}

/// The angles (θ₀⁺, θ₀⁻) of rays landing at β₀ that bound the sector containing
/// the critical point 0, with θ₀⁺ < θ₀⁻ ≤ θ₀⁺ + 1 read modulo 1.
pub fn characteristic_angles(pair: &DegenerationPair) -> Result<(Angle, Angle)> {
    let lbar = pair.lbar();
    if lbar as u64 > MAX_CYCLE_Q {
        return Err(Error::input(format!("l̄ = {lbar} exceeds the cap {MAX_CYCLE_Q}")));
    }
    let d = (1u64 << lbar) - 1;
    let params = RayParams::default();
    let cache = RayCache::new(pair.sigma, params);
    let beta0 = pair.beta[0];
    let mut cands = Vec::new();
    for k in 0..d.max(1) {
        let t = Angle::frac(k, d.max(1));
        if (cache.landing(&t)? - beta0).norm() < 1e-6 {
            cands.push(t);
        }
    }
    match cands.len() {
        0 => return Err(Error::numeric("no ray of period dividing l̄ lands at β₀")),
        1 => return Ok((cands[0].clone(), cands[0].clone())),
        _ => {}
    }
    cands.sort();
    let traces: Vec<Vec<C64>> = cands
        .iter()
        .map(|t| {
            trace_ray(
                pair.sigma,
                t,
                params.escape_radius.ln(),
                params.escape_radius.ln() * (-(params.levels as f64)).exp2(),
                1.0 / params.substeps as f64,
                params.tol,
            )
            .map(|tr| tr.samples.iter().map(|s| s.0).collect())
        })
        .collect::<Result<_>>()?;
    let n = cands.len();
    let mut hit = None;
    for i in 0..n {
        let j = (i + 1) % n;
        let (a0, mut a1) = (cands[i].to_f64(), cands[j].to_f64());
        if a1 <= a0 {
            a1 += 1.0;
        }
        let mut poly: Vec<C64> = traces[i].clone();
        poly.push(beta0);
        poly.extend(traces[j].iter().rev());
        let r = traces[j][0].norm();
        // Close along a large circle clockwise through the angles of the sector.
        for k in 1..64 {
            let a = a1 - (a1 - a0) * k as f64 / 64.0;
            poly.push(C64::from_polar(r, 2.0 * PI * a));
        }
        if winding(&poly, C64::new(0.0, 0.0)).abs() > 0.5 {
            if hit.is_some() {
                return Err(Error::numeric("critical point found in two sectors at β₀"));
            }
            hit = Some((cands[i].clone(), cands[j].clone()));
        }
    }
    hit.ok_or_else(|| Error::numeric("sector test failed to locate the critical point"))
}

/// Characteristic angles of the standard examples.
pub fn known_characteristic_angles(label: &str) -> Option<(Angle, Angle)> {
    match label {
        "cauliflower" => Some((Angle::zero(), Angle::zero())),
        "rabbits" => Some((Angle::frac(4, 7), Angle::frac(1, 7))),
        "airplanes" => Some((Angle::frac(5, 7), Angle::frac(2, 7))),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a(n: u64, d: u64) -> Angle {
        Angle::frac(n, d)
    }

    #[test]
    fn doubling_examples() {
        assert_eq!(a(1, 7).double(), a(2, 7));
        assert_eq!(a(5, 7).double(), a(3, 7));
        assert_eq!(Angle::zero().double(), Angle::zero());
    }

    #[test]
    fn orbit_meta_examples() {
        assert_eq!(a(1, 7).orbit_meta(), OrbitMeta { preperiod: 0, period: 3 });
        assert_eq!(a(1, 2).orbit_meta(), OrbitMeta { preperiod: 1, period: 1 });
        assert_eq!(a(1, 6).orbit_meta(), OrbitMeta { preperiod: 1, period: 2 });
    }

    /// Iterates δ and records first repeat.
    fn meta_by_iteration(theta: &Angle) -> OrbitMeta {
        let mut seen: Vec<Angle> = Vec::new();
        let mut t = theta.clone();
        loop {
            if let Some(i) = seen.iter().position(|s| s == &t) {
                return OrbitMeta { preperiod: i, period: seen.len() - i };
            }
            seen.push(t.clone());
            t = t.double();
        }
    }

    #[test]
    fn cycle_examples() {
        assert_eq!(cycle_angles(1, 3).unwrap().angles, vec![a(1, 7), a(2, 7), a(4, 7)]);
        assert_eq!(cycle_angles(1, 2).unwrap().angles, vec![a(1, 3), a(2, 3)]);
        assert_eq!(cycle_angles(1, 1).unwrap().angles, vec![Angle::zero()]);
        assert!(cycle_angles(2, 4).is_err());
        assert!(cycle_angles(0, 3).is_err());
    }

    #[test]
    fn ptilde_examples() {
        assert_eq!(ptilde(1, 3).unwrap(), 1);
        assert_eq!(ptilde(2, 5).unwrap(), -2);
        assert_eq!(ptilde(1, 1).unwrap(), 0);
    }

    #[test]
    fn ptilde_exhaustive() {
        for q in 1..=100i64 {
            for p in 0..q.max(2) {
                if p.gcd(&q) != 1 {
                    continue;
                }
                let t = ptilde(p, q).unwrap();
                assert_eq!((t * p - 1).rem_euclid(q), 0, "{p}/{q}");
                assert!(2 * t > -q && 2 * t <= q, "{p}/{q} -> {t}");
            }
        }
    }

    #[test]
    fn in_theta_examples() {
        let cauli = [Angle::zero()];
        let rab = cycle_angles(1, 3).unwrap().angles;
        let mut air = rab.clone();
        air.extend([a(3, 7), a(5, 7), a(6, 7)]);
        assert!(in_theta(&cauli, &a(3, 4)));
        assert!(!in_theta(&rab, &a(1, 3)));
        assert!(in_theta(&air, &a(3, 7)));
    }

    #[test]
    fn parse_and_display() {
        let t: Angle = "8/14".parse().unwrap();
        assert_eq!(t, a(4, 7));
        assert_eq!(t.to_string(), "4/7");
        assert_eq!("9/7".parse::<Angle>().unwrap(), a(2, 7));
        assert!("1/0".parse::<Angle>().is_err());
    }

    proptest! {
        #[test]
        fn orbit_meta_matches_iteration(k in 0u64..5000, d in 1u64..5000) {
            let t = Angle::frac(k, d);
            prop_assert_eq!(t.orbit_meta(), meta_by_iteration(&t));
        }

        #[test]
        fn halves_are_preimages(k in 0u64..1000, e in 0u32..12) {
            let d = (2u64 << e) | 1;
            let t = Angle::frac(k, d * 3);
            let [h0, h1] = t.halves();
            prop_assert_eq!(h0.double(), t.clone());
            prop_assert_eq!(h1.double(), t);
            prop_assert_ne!(h0, h1);
        }

        #[test]
        fn in_theta_is_doubling_invariant(k in 0u64..4000, e in 0u32..5) {
            let rab = cycle_angles(1, 3).unwrap().angles;
            let t = Angle::frac(k, 7 << e);
            prop_assert_eq!(in_theta(&rab, &t), in_theta(&rab, &t.double()));
        }
    }

    #[test]
    fn cycles_agree_with_brute_force_oracle() {
        for q in 1..=8u64 {
            for p in 1..q.max(2) {
                if p.gcd(&q) != 1 {
                    continue;
                }
                let got = cycle_angles(p, q).unwrap();
                let oracle = oracle_cycle(p, q);
                assert_eq!(got.angles, oracle, "{p}/{q}");
            }
        }
    }

    /// Independent oracle: every orbit point must advance by exactly
    /// p mod q positions, counted along the ccw arc to its image.
    fn oracle_cycle(p: u64, q: u64) -> Vec<Angle> {
        let d = (1u64 << q) - 1;
        let m = d.max(1);
        let mut found = Vec::new();
        for k in 0..m {
            let mut orbit = vec![k];
            let mut x = k;
            for _ in 1..q {
                x = (2 * x) % m;
                orbit.push(x);
            }
            if (2 * x) % m != k || orbit.iter().skip(1).any(|&y| y == k) {
                continue;
            }
            if *orbit.iter().min().unwrap() != k {
                continue;
            }
            let advances = orbit.iter().all(|&y| {
                let img = (2 * y) % m;
                let in_arc = |z: u64| if y <= img { z >= y && z < img } else { z >= y || z < img };
                orbit.iter().filter(|&&z| in_arc(z)).count() as u64 == p % q
            });
            if advances {
                let mut v: Vec<Angle> = orbit.iter().map(|&y| Angle::frac(y, m)).collect();
                v.sort();
                found.push(v);
            }
        }
        assert_eq!(found.len(), 1, "{p}/{q}");
        found.pop().unwrap()
    }

    #[test]
    fn characteristic_angles_of_examples() {
        use crate::dynamics::{Case, PairSpec};
        let cases = [
            (PairSpec::cauliflower(0.5), "cauliflower"),
            (PairSpec::rabbits(0.9, Case::A), "rabbits"),
            (PairSpec::rabbits(0.9, Case::B), "rabbits"),
            (PairSpec::airplanes(0.5), "airplanes"),
        ];
        for (spec, name) in cases {
            let pair = spec.resolve().unwrap();
            let got = characteristic_angles(&pair).unwrap();
            assert_eq!(Some(got.clone()), known_characteristic_angles(name), "{name}");
            for t in [&got.0, &got.1] {
                assert_eq!(pair.lbar() % t.orbit_meta().period, 0);
            }
        }
    }
}

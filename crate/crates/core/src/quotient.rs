//! Lower ends: canonical quotient addresses in the fundamental region Q ∪ P,
//! degenerating-edge gluing tables and the twist comparison between the two
//! cases of a degeneration.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::angles::{first_hit, ptilde, Angle};
use crate::dynamics::{Case, C64};
use crate::error::{Error, Result};
use crate::natext::{lift_tile_address, omega_set, BackwardOrbit, LiftedAddress, LiftedAngle};
use crate::semiconj::default_window;
use crate::tess::{EdgeKind, Side, Sign, Tessellation, TileAddress};

/// A tile of the fundamental region: the cyclic lift θ̂⁺ at a level in
/// [0, l̄), or a member of Ω at any level.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct QuotientAddress {
    pub angle: LiftedAngle,
    pub level: i64,
    /// ⌊level/l⌋ mod q.
    pub mu: i64,
    /// level mod l.
    pub phase: i64,
    pub sign: Sign,
    pub cyclic: bool,
}

impl fmt::Display for QuotientAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.cyclic { "Q" } else { "P" };
        write!(f, "{tag}[{}, μ={}, φ={}, {}]", self.angle, self.mu, self.phase, self.sign)
    }
}

/// Combinatorial data of the lower end of one map of a pair.
#[derive(Clone, Debug, Serialize)]
pub struct LowerEnd {
    pub case: Case,
    /// Rotation number p/q at β₀ and the period l of its rays.
    pub p: u64,
    pub q: u64,
    pub l: u64,
    pub theta_plus: Angle,
    pub theta_minus: Angle,
    /// δ-orbit of θ₀⁺.
    pub cycle: Vec<Angle>,
    pub ptilde: i64,
}

impl LowerEnd {
    pub fn new(tess: &Tessellation) -> Result<Self> {
        let pair = &tess.pair;
        let [tp, tm] = tess.theta0.clone();
        let mut cycle = vec![tp.clone()];
        loop {
            let next = cycle.last().unwrap().double();
            if next == tp {
                break;
            }
            cycle.push(next);
        }
        Ok(Self {
            case: pair.case,
            p: pair.pprime,
            q: pair.qprime,
            l: pair.lprime,
            theta_plus: tp,
            theta_minus: tm,
            cycle,
            ptilde: ptilde(pair.pprime as i64, pair.qprime as i64)?,
        })
    }

    pub fn lbar(&self) -> i64 {
        (self.q * self.l) as i64
    }

    fn address(&self, angle: LiftedAngle, level: i64, sign: Sign, cyclic: bool) -> QuotientAddress {
        let (l, q) = (self.l as i64, self.q as i64);
        let level = if cyclic { level.rem_euclid(self.lbar()) } else { level };
        QuotientAddress { angle, level, mu: level.div_euclid(l).rem_euclid(q), phase: level.rem_euclid(l), sign, cyclic }
    }

    pub fn theta_hat_plus(&self) -> LiftedAngle {
        LiftedAngle::cyclic(&self.theta_plus).expect("θ₀⁺ is periodic")
    }

    /// The representative of f̂-orbit of the lifted tile in Q ∪ P.
    pub fn canonical_address(&self, lifted: &LiftedAddress) -> Result<QuotientAddress> {
        Ok(self.canonical_with_shift(lifted)?.0)
    }

    /// Canonical address together with the power k of f̂ taking the input to it.
    pub fn canonical_with_shift(&self, lifted: &LiftedAddress) -> Result<(QuotientAddress, i64)> {
        let tp = std::slice::from_ref(&self.theta_plus);
        let k = match first_hit(tp, &lifted.angle.head) {
            Some(k) => k,
            None if first_hit(std::slice::from_ref(&self.theta_minus), &lifted.angle.head).is_some() => {
                return Err(Error::unsupported("θ₀⁻ lies on a different cycle from θ₀⁺"));
            }
            None => return Err(Error::input(format!("{} never maps to θ₀⁺", lifted.angle.head))),
        };
        let a = lifted.angle.delta_hat_n(k);
        let level = lifted.level + k as i64;
        let plus = self.theta_hat_plus();
        if a == plus {
            return Ok((self.address(a, level, lifted.sign, true), k as i64));
        }
        // Find where the backward choices leave the cycle; θ₀⁺ cannot recur after that.
        let limit = match a.depth() {
            Some(d) => d,
            None => a.prefix.len() + self.cycle.len() * a.cycle.as_ref().unwrap().len() + 1,
        };
        let mut last = 0;
        let mut t = a.head.clone();
        let mut left = false;
        for n in 1..=limit {
            t = t.half(a.bit(n - 1).unwrap());
            if t == self.theta_plus {
                last = n;
            }
            if !self.cycle.contains(&t) {
                left = true;
                break;
            }
        }
        if !left {
            return Err(Error::input(format!("truncation {} too short to decide membership in Ω", lifted.angle)));
        }
        let w = a.delta_hat_inv_n(last)?;
        Ok((self.address(w, level - last as i64, lifted.sign, false), k as i64 - last as i64))
    }

    /// Members of Ω of the given depth.
    pub fn omega(&self, depth: usize) -> Vec<LiftedAngle> {
        omega_set(&self.theta_plus, depth)
    }
}

/// Lifted angle of the − tile sharing a degenerating edge with a + tile.
///
/// In Case (a) it is the same angle. In Case (b) it starts at θ₀⁻ and at each
/// step takes the preimage landing where the + angle lands on the f side.
pub fn partner(tess: &Tessellation, le: &LowerEnd, w: &LiftedAngle) -> Result<LiftedAngle> {
    match le.case {
        Case::A => Ok(w.clone()),
        Case::B => {
            if w.is_periodic() {
                if *w == le.theta_hat_plus() {
                    return LiftedAngle::cyclic(&le.theta_minus);
                }
                return Err(Error::unsupported("partners of non-cyclic periodic lifts"));
            }
            let d = w.depth().unwrap();
            let ws = w.angles(d);
            let mut t = le.theta_minus.clone();
            let mut bits = Vec::with_capacity(d);
            for target in &ws[1..] {
                let goal = tess.landing(Side::Hyperbolic, target)?;
                let [h0, h1] = t.halves();
                let d0 = (tess.landing(Side::Hyperbolic, &h0)? - goal).norm();
                let d1 = (tess.landing(Side::Hyperbolic, &h1)? - goal).norm();
                let (bit, near, far) = if d0 <= d1 { (false, d0, d1) } else { (true, d1, d0) };
                if near > 1e-6 || far < 1e-3 {
                    return Err(Error::numeric(format!("no preimage of {t} lands with {target}")));
                }
                bits.push(bit);
                t = t.half(bit);
            }
            Ok(LiftedAngle::truncated(le.theta_minus.clone(), bits))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GluingEntry {
    pub plus: QuotientAddress,
    pub minus: QuotientAddress,
    pub kind: EdgeKind,
    /// Level difference plus − minus of the glued tiles.
    pub shift: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GluingTable {
    pub case: Case,
    pub q: u64,
    pub l: u64,
    pub ptilde: i64,
    pub depth: usize,
    pub entries: Vec<GluingEntry>,
}

/// Degenerating-edge gluing of the cyclic tiles μ ∈ [0, q) and of every Ω
/// member of the given depth at levels μl, μ ∈ [0, q). The − angles keep
/// whatever depth remains after canonicalization.
pub fn gluing_table(tess: &Tessellation, depth: usize) -> Result<GluingTable> {
    let le = LowerEnd::new(tess)?;
    let lbar = le.lbar() as usize;
    if depth <= lbar {
        return Err(Error::input(format!("gluing tables need Ω depth above l̄ = {lbar}")));
    }
    let l = le.l as i64;
    let mut entries = Vec::new();
    let mut glue = |w: &LiftedAngle| -> Result<()> {
        let u = partner(tess, &le, w)?;
        for mu in 0..le.q as i64 {
            let plus = le.canonical_address(&LiftedAddress { angle: w.clone(), level: mu * l, sign: Sign::Plus })?;
            let minus = le.canonical_address(&LiftedAddress { angle: u.clone(), level: mu * l, sign: Sign::Minus })?;
            let shift = plus.level - minus.level;
            entries.push(GluingEntry { plus, minus, kind: EdgeKind::Degenerating, shift });
        }
        Ok(())
    };
    glue(&le.theta_hat_plus())?;
    for w in le.omega(depth) {
        glue(&w)?;
    }
    Ok(GluingTable { case: le.case, q: le.q, l: le.l, ptilde: le.ptilde, depth, entries })
}

impl GluingTable {
    /// Each + tile and each − tile occurs exactly once.
    pub fn check_bijective(&self) -> Result<()> {
        let mut plus = BTreeMap::new();
        let mut minus = BTreeMap::new();
        for e in &self.entries {
            *plus.entry(&e.plus).or_insert(0) += 1;
            *minus.entry(&e.minus).or_insert(0) += 1;
        }
        if let Some((k, n)) = plus.iter().chain(minus.iter()).find(|(_, &n)| n != 1) {
            return Err(Error::verification(format!("{k} occurs {n} times in the gluing table")));
        }
        Ok(())
    }

    /// The partner of a tile on either side.
    pub fn glued_to(&self, x: &QuotientAddress) -> Option<&QuotientAddress> {
        self.entries.iter().find_map(|e| {
            if &e.plus == x {
                Some(&e.minus)
            } else if &e.minus == x {
                Some(&e.plus)
            } else {
                None
            }
        })
    }

    /// Shifts μ_plus − μ_minus mod q occurring in the table, reduced to (−q/2, q/2].
    pub fn mu_shifts(&self) -> Vec<i64> {
        let q = self.q as i64;
        let mut out: Vec<i64> = self
            .entries
            .iter()
            .map(|e| {
                let s = (e.plus.mu - e.minus.mu).rem_euclid(q);
                if 2 * s > q {
                    s - q
                } else {
                    s
                }
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Aligned text rendering, one entry per line.
    pub fn to_text(&self) -> String {
        let rows: Vec<[String; 4]> =
            self.entries.iter().map(|e| [e.plus.to_string(), e.minus.to_string(), e.kind.to_string(), e.shift.to_string()]).collect();
        let head = ["plus".to_string(), "minus".to_string(), "edge".to_string(), "shift".to_string()];
        let mut widths = [0; 4];
        for r in std::iter::once(&head).chain(rows.iter()) {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = format!("case {} q={} l={} p̃={} depth={}\n", self.case, self.q, self.l, self.ptilde, self.depth);
        for r in std::iter::once(&head).chain(rows.iter()) {
            let cells: Vec<String> = r.iter().zip(widths).map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count()))).collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        out
    }
}

/// Result of comparing the gluing of the two cases.
#[derive(Clone, Debug, Serialize)]
pub struct TwistReport {
    pub q: u64,
    pub ptilde: i64,
    /// The single μ shift of the second table relative to the first, if unique.
    pub shift: Option<i64>,
    pub entries: usize,
    /// Entries of the second table not explained by the shift and relabel.
    pub mismatches: Vec<String>,
    /// Degenerating edges checked on built tiles, and those that failed.
    pub numeric_checked: usize,
    pub numeric_failures: Vec<String>,
    /// μ shift of the cyclic tiles read off from built tiles of the second map.
    pub numeric_shift: Option<i64>,
    pub consistent: bool,
}

/// Compares the tables of `a` and `b` (same σ) at Ω depth `depth`. Every
/// entry of `b` must arise from the matching entry of `a` by the p̃-shift of μ
/// and the relabel of the − angle; the degenerating edges behind the first
/// `numeric_members` Ω members are traced on built tiles to depth `numeric_depth`.
pub fn verify_twist(a: &Tessellation, b: &Tessellation, depth: usize, numeric_members: usize, numeric_depth: usize) -> Result<TwistReport> {
    if (a.pair.sigma - b.pair.sigma).norm() > 1e-9 || a.pair.qprime != b.pair.qprime {
        return Err(Error::input("the two pairs degenerate to different parabolic maps"));
    }
    let (ta, tb) = (gluing_table(a, depth)?, gluing_table(b, depth)?);
    ta.check_bijective()?;
    tb.check_bijective()?;
    let (la, lb) = (LowerEnd::new(a)?, LowerEnd::new(b)?);
    let q = tb.q as i64;
    let expected = |le: &LowerEnd| if le.case == Case::B { le.ptilde } else { 0 };
    let expect = expected(&lb);
    let mut mismatches = Vec::new();
    if ta.entries.len() != tb.entries.len() {
        mismatches.push(format!("{} entries versus {}", ta.entries.len(), tb.entries.len()));
    }
    for (ea, eb) in ta.entries.iter().zip(&tb.entries) {
        if ea.plus != eb.plus {
            mismatches.push(format!("+ tiles differ: {} versus {}", ea.plus, eb.plus));
            continue;
        }
        if la.case == Case::A && !(ea.minus.angle.agrees_with(&ea.plus.angle) && ea.shift == 0) {
            mismatches.push(format!("first table is not the identity at {}", ea.plus));
        }
        let mu_ok = (eb.plus.mu - eb.minus.mu - expect).rem_euclid(q) == 0 && eb.minus.phase == eb.plus.phase;
        // The − tile of b pushed forward by the literal shift must be the partner of the + tile.
        let relabel_ok = if eb.plus.cyclic {
            eb.minus.cyclic
        } else {
            let u = partner(b, &lb, &eb.plus.angle)?;
            let moved = match eb.shift.cmp(&0) {
                std::cmp::Ordering::Less => Some(eb.minus.angle.delta_hat_inv_n((-eb.shift) as usize)?),
                _ => Some(eb.minus.angle.delta_hat_n(eb.shift as usize)),
            };
            moved.is_some_and(|m| m.agrees_with(&u))
        };
        if !mu_ok || !relabel_ok {
            mismatches.push(format!("{} ↔ {} is not the p̃-shift", eb.plus, eb.minus));
        }
    }
    let mut shifts = tb.mu_shifts();
    let shift = if shifts.len() == 1 { shifts.pop() } else { None };

    let mut numeric_checked = 0;
    let mut numeric_failures = Vec::new();
    for (tess, le) in [(a, &la), (b, &lb)] {
        for w in le.omega(depth).into_iter().take(numeric_members) {
            let u = partner(tess, le, &w)?;
            let (ws, us) = (w.angles(numeric_depth), u.angles(numeric_depth));
            for n in 0..ws.len().min(us.len()) {
                let tp = TileAddress::new(ws[n].clone(), -(n as i64), Sign::Plus);
                let tm = TileAddress::new(us[n].clone(), -(n as i64), Sign::Minus);
                numeric_checked += 1;
                if !tess.shares(Side::Hyperbolic, &tp, &tm, EdgeKind::Degenerating)? {
                    numeric_failures.push(format!("{}: {tp} and {tm} share no degenerating edge", tess.pair.label()));
                }
            }
        }
    }
    let numeric_shift = cyclic_shift_from_tiles(b, &lb)?;
    if numeric_shift.is_none() {
        numeric_failures.push("no − root tile shares the degenerating edge of the + root tile".into());
    }
    let consistent = mismatches.is_empty()
        && numeric_failures.is_empty()
        && shift.is_some_and(|s| (s - expect).rem_euclid(q) == 0)
        && numeric_shift.is_some_and(|s| (s - expect).rem_euclid(q) == 0);
    Ok(TwistReport {
        q: tb.q,
        ptilde: lb.ptilde,
        shift,
        entries: tb.entries.len(),
        mismatches,
        numeric_checked,
        numeric_failures,
        numeric_shift,
        consistent,
    })
}

/// j ∈ (−q/2, q/2] such that the root tile (δ^{jl}θ₀⁺, 0, −) shares the
/// degenerating edge of (θ₀⁺, 0, +).
fn cyclic_shift_from_tiles(tess: &Tessellation, le: &LowerEnd) -> Result<Option<i64>> {
    let q = le.q as i64;
    let tp = TileAddress::new(le.theta_plus.clone(), 0, Sign::Plus);
    let mut found = None;
    for j in 0..q {
        let theta = le.theta_plus.double_n((j * le.l as i64) as usize);
        if first_hit(std::slice::from_ref(&le.theta_minus), &theta).is_none() {
            continue;
        }
        let tm = TileAddress::new(theta, 0, Sign::Minus);
        if tess.shares(Side::Hyperbolic, &tp, &tm, EdgeKind::Degenerating)? {
            if found.is_some() {
                return Ok(None);
            }
            found = Some(if 2 * j > q { j - q } else { j });
        }
    }
    Ok(found)
}

/// One height of the parabolic-side witness.
#[derive(Clone, Debug, Serialize)]
pub struct HeightWitness {
    pub height: f64,
    pub z: C64,
    pub realized: f64,
    pub address: Option<QuotientAddress>,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompactnessReport {
    pub heights: Vec<HeightWitness>,
    pub samples: usize,
    pub in_q: usize,
    pub in_p: usize,
    pub failures: Vec<String>,
    /// The verdict holds at the sampled truncation depth only.
    pub depth_stamp: usize,
    pub ok: bool,
}

/// Relative tolerance on a realized Fatou height.
pub const HEIGHT_TOL: f64 = 1e-6;

/// On the parabolic side, points of the tile (θ₀⁺, 0, +) at the given Fatou
/// heights whose canonical addresses stay in Q_g(+). On the hyperbolic side,
/// `samples` random interior points with random backward orbits whose
/// canonical representatives are located in the tile they name.
pub fn end_compactness_witness(tess: &Tessellation, heights: &[f64], samples: usize, seed: u64) -> Result<CompactnessReport> {
    let le = LowerEnd::new(tess)?;
    let root = TileAddress::new(le.theta_plus.clone(), 0, Sign::Plus);
    let mut out = Vec::new();
    for &h in heights {
        let z = tess.model_to_plane(Side::Parabolic, &root, C64::new(0.5, h))?;
        let loc = tess.locate(Side::Parabolic, z)?;
        let (realized, address) = match &loc {
            Some(l) if !l.on_cut => {
                let lifted = LiftedAddress {
                    angle: LiftedAngle::cyclic(&l.address.angle)
                        .unwrap_or_else(|_| LiftedAngle::truncated(l.address.angle.clone(), vec![])),
                    level: l.address.level,
                    sign: l.address.sign,
                };
                (l.model.im, le.canonical_address(&lifted).ok())
            }
            _ => (f64::NAN, None),
        };
        let ok = (realized - h).abs() <= HEIGHT_TOL * h && address.as_ref().is_some_and(|a| a.cyclic && a.sign == Sign::Plus);
        out.push(HeightWitness { height: h, z, realized, address, ok });
    }

    let map = tess.pair.f();
    let (lo, hi) = default_window(&map);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base_depth = tess.lbar() + 2;
    let max_depth = 8 * tess.lbar() + 8;
    let (mut in_q, mut in_p, mut taken) = (0, 0, 0);
    let mut failures = Vec::new();
    let mut guard = 0;
    while taken < samples && guard < 50 * samples.max(1) {
        guard += 1;
        let z0 = C64::new(rng.gen_range(lo.re..hi.re), rng.gen_range(lo.im..hi.im));
        match tess.locate(Side::Hyperbolic, z0)? {
            Some(l) if !l.on_cut => {}
            _ => continue,
        }
        taken += 1;
        let mut depth = base_depth;
        let mut orbit = BackwardOrbit::random(&map, z0, depth, &mut rng);
        let result = loop {
            let lifted = match lift_tile_address(tess, Side::Hyperbolic, &orbit) {
                Ok(Some(a)) => a,
                Ok(None) => break Err(format!("{z0}: a backward coordinate lies on I_f")),
                Err(e) => break Err(format!("{z0}: {e}")),
            };
            match le.canonical_with_shift(&lifted) {
                Ok(x) => break Ok(x),
                Err(Error::Input(_)) if depth < max_depth => {
                    let more = BackwardOrbit::random(&map, *orbit.points.last().unwrap(), tess.lbar(), &mut rng);
                    orbit.points.extend_from_slice(&more.points[1..]);
                    depth = orbit.depth();
                }
                Err(e) => break Err(format!("{z0}: {e}")),
            }
        };
        match result {
            Ok((addr, k)) => {
                let rep = if k >= 0 { map.iterate(z0, k as usize) } else { orbit.points[(-k) as usize] };
                let want = TileAddress::new(addr.angle.head.clone(), addr.level, addr.sign);
                let here = tess.locate(Side::Hyperbolic, rep)?.map(|l| l.address);
                let named = if addr.cyclic {
                    here.as_ref()
                        .is_some_and(|h| h.angle == want.angle && h.sign == want.sign && (h.level - want.level).rem_euclid(le.lbar()) == 0)
                } else {
                    here.as_ref() == Some(&want)
                };
                if !named {
                    failures.push(format!("{z0}: representative lies in {here:?}, not {want}"));
                } else if addr.cyclic {
                    in_q += 1;
                } else {
                    in_p += 1;
                }
            }
            Err(msg) => failures.push(msg),
        }
    }
    if taken < samples {
        failures.push(format!("only {taken} of {samples} interior samples found"));
    }
    let ok = out.iter().all(|h| h.ok) && failures.is_empty();
    Ok(CompactnessReport { heights: out, samples: taken, in_q, in_p, failures, depth_stamp: max_depth, ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::PairSpec;
    use crate::tess::Resolution;

    fn tess(spec: PairSpec) -> Tessellation {
        Tessellation::new(&spec.resolve().unwrap(), Resolution::default()).unwrap()
    }

    #[test]
    fn canonical_examples() {
        let t = tess(PairSpec::cauliflower(0.5));
        let le = LowerEnd::new(&t).unwrap();
        let plus = le.theta_hat_plus();
        let c = le.canonical_address(&LiftedAddress { angle: plus.clone(), level: 5, sign: Sign::Plus }).unwrap();
        assert_eq!((c.mu, c.level, c.cyclic), (0, 0, true));
        let t = tess(PairSpec::rabbits(0.9, Case::A));
        let le = LowerEnd::new(&t).unwrap();
        let plus = le.theta_hat_plus();
        let c = le.canonical_address(&LiftedAddress { angle: plus.clone(), level: 5, sign: Sign::Plus }).unwrap();
        assert_eq!((c.mu, c.cyclic), (2, true));
        for w in le.omega(4) {
            let x = LiftedAddress { angle: w.clone(), level: 7, sign: Sign::Minus };
            let c = le.canonical_address(&x).unwrap();
            assert_eq!((c.angle.clone(), c.level, c.cyclic), (w, 7, false));
            assert_eq!(le.canonical_address(&x.image()).unwrap(), c);
        }
        let short = LiftedAddress { angle: LiftedAngle::truncated(Angle::frac(4, 7), vec![false]), level: 0, sign: Sign::Plus };
        assert!(matches!(le.canonical_address(&short), Err(Error::Input(_))));
    }

    #[test]
    fn rabbit_tables() {
        let a = tess(PairSpec::rabbits(0.9, Case::A));
        let b = tess(PairSpec::rabbits(0.9, Case::B));
        let ta = gluing_table(&a, 5).unwrap();
        let tb = gluing_table(&b, 5).unwrap();
        ta.check_bijective().unwrap();
        tb.check_bijective().unwrap();
        assert_eq!(ta.mu_shifts(), vec![0]);
        assert_eq!(tb.mu_shifts(), vec![1]);
        for e in tb.entries.iter().filter(|e| e.plus.cyclic) {
            assert_eq!(e.minus.mu, (e.plus.mu - 1).rem_euclid(3));
        }
        assert!(ta.to_text().lines().count() == ta.entries.len() + 2);
        let rep = verify_twist(&a, &b, 5, 2, 1).unwrap();
        assert!(rep.consistent, "{rep:?}");
        assert_eq!((rep.shift, rep.q, rep.numeric_shift), (Some(1), 3, Some(1)));
        let same = verify_twist(&a, &a, 5, 1, 0).unwrap();
        assert_eq!(same.shift, Some(0));
    }

    #[test]
    fn compactness_cauliflower() {
        let t = tess(PairSpec::cauliflower(0.5));
        let r = end_compactness_witness(&t, &[10.0, 100.0, 1000.0], 40, 3).unwrap();
        assert!(r.ok, "{r:?}");
        let e = end_compactness_witness(&t, &[], 0, 3).unwrap();
        assert!(e.ok && e.samples == 0);
    }
}

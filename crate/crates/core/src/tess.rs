//! Tessellations of the interiors of the filled Julia sets of f and g.
//!
//! A tile is the pull-back of a model half-annulus A(m, ±) (hyperbolic side)
//! or half-strip C(m, ±) (parabolic side). Tiles of the critical sector are
//! pulled back from the local charts anchored at a forward orbit; every other
//! tile is reached from one of them by further pull-backs, each branch being
//! the one whose far end is nearest the landing point of the wanted angle.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::angles::{characteristic_angles, first_hit, Angle};
use crate::dynamics::{Case, DegenerationPair, QuadMap, C64};
use crate::error::{Error, Result};
use crate::geom::{hausdorff, polyline_dist};
use crate::linearize::{cut_arm, level_grid, Charts, Polar};
use crate::pullback::{lift_once, root_lift, Hyperbolic, Link, Parabolic, PathSet};
use crate::rays::{green, RayCache, RayParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Hyperbolic,
    Parabolic,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Hyperbolic => "hyperbolic",
            Side::Parabolic => "parabolic",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn sgn(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    fn index(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

impl FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+" | "plus" => Ok(Sign::Plus),
            "-" | "−" | "minus" => Ok(Sign::Minus),
            other => Err(Error::input(format!("invalid sign {other:?}"))),
        }
    }
}

impl Serialize for Sign {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Sign {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// (θ, m, ±).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TileAddress {
    pub angle: Angle,
    pub level: i64,
    pub sign: Sign,
}

impl TileAddress {
    pub fn new(angle: Angle, level: i64, sign: Sign) -> Self {
        Self { angle, level, sign }
    }

    /// Address of the image tile.
    pub fn image(&self) -> Self {
        Self { angle: self.angle.double(), level: self.level + 1, sign: self.sign }
    }
}

impl fmt::Display for TileAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.angle, self.level, self.sign)
    }
}

impl FromStr for TileAddress {
    type Err = Error;

    /// Accepts `θ,m,±` or `θ:m:±`, optionally in parentheses.
    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts: Vec<&str> = body.split([',', ':']).map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::input(format!("tile address {s:?} needs three fields")));
        }
        let angle: Angle = parts[0].parse()?;
        let level = parts[1].parse::<i64>().map_err(|_| Error::input(format!("invalid level {:?}", parts[1])))?;
        Ok(Self { angle, level, sign: parts[2].parse()? })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Equipotential,
    Critical,
    Degenerating,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeKind::Equipotential => "equipotential",
            EdgeKind::Critical => "critical",
            EdgeKind::Degenerating => "degenerating",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Edge {
    pub kind: EdgeKind,
    pub points: Vec<C64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Tile {
    pub address: TileAddress,
    pub side: Side,
    /// Boundary edges in cyclic order.
    pub edges: Vec<Edge>,
    /// The vertex on I_g of a parabolic tile, inserted between its last two edges.
    pub vertex: Option<C64>,
}

impl Tile {
    /// Closed boundary polyline.
    pub fn boundary(&self) -> Vec<C64> {
        let mut out = Vec::new();
        let n = self.edges.len();
        for (i, e) in self.edges.iter().enumerate() {
            if i == n - 1 {
                if let Some(v) = self.vertex {
                    out.push(v);
                }
            }
            let skip = usize::from(!out.is_empty());
            out.extend(e.points.iter().skip(skip));
        }
        out
    }

    pub fn edges_of(&self, kind: EdgeKind) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    /// Image of every sample under `map`.
    pub fn image(&self, map: &QuadMap) -> Tile {
        Tile {
            address: self.address.image(),
            side: self.side,
            edges: self.edges.iter().map(|e| Edge { kind: e.kind, points: e.points.iter().map(|z| map.f(*z)).collect() }).collect(),
            vertex: self.vertex.map(|v| map.f(v)),
        }
    }
}

/// Sampling parameters for tile construction.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Resolution {
    /// Samples on each equipotential arc and critical segment.
    pub edge_samples: usize,
    /// Samples per level along cuts (at ρ = 1/2, scaled with |log ρ|) and per unit along strip paths.
    pub per_level: usize,
    /// Levels of cut beyond the tile used to reach its landing point.
    pub tail_levels: f64,
    /// Height of the vertical sides of parabolic strips.
    pub tail_height: f64,
    /// Extra passes of the cycle of the characteristic angle before the tile is reached.
    pub extra_cycles: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self { edge_samples: 64, per_level: 24, tail_levels: 12.0, tail_height: 1e4, extra_cycles: 0 }
    }
}

/// Where a point sits in a tessellation.
#[derive(Clone, Debug, Serialize)]
pub struct Located {
    pub address: TileAddress,
    /// Model coordinate: W = Φ_f(z) on the hyperbolic side, Φ_g(z) on the parabolic side.
    pub model: C64,
    /// On I_f (the cut of the hyperbolic model).
    pub on_cut: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Adjacency {
    Shared(EdgeKind),
    None,
    Inconclusive,
}

/// Shared-edge sample tolerance, dead band upper end, and the fraction of an
/// edge's length that must lie on the other tile.
pub const ADJ_TOL: f64 = 1e-6;
pub const ADJ_BAND: f64 = 1e-4;
pub const ADJ_MIN_FRACTION: f64 = 0.25;

/// Angular distance from the cut below which a point counts as on I_f.
const CUT_EPS: f64 = 1e-9;

/// Tessellations of both maps of a pair.
pub struct Tessellation {
    pub pair: DegenerationPair,
    pub charts: Charts,
    /// (θ₀⁺, θ₀⁻).
    pub theta0: [Angle; 2],
    pub res: Resolution,
    f_rays: RayCache,
    g_rays: RayCache,
}

impl Tessellation {
    pub fn new(pair: &DegenerationPair, res: Resolution) -> Result<Self> {
        let charts = Charts::new(pair)?;
        let (tp, tm) = characteristic_angles(pair)?;
        // Tails must reach as far out as the cut needs to approach its landing point.
        let (_, far) = cut_arm(&charts.koenigs, &pair.f(), pair.lbar(), 0)?;
        let res = Resolution { tail_levels: res.tail_levels.max(far), ..res };
        Ok(Self {
            pair: pair.clone(),
            charts,
            theta0: [tp, tm],
            res,
            f_rays: RayCache::new(pair.c, RayParams::default()),
            g_rays: RayCache::new(pair.sigma, RayParams::default()),
        })
    }

    pub fn with_resolution(&self, res: Resolution) -> Self {
        Self {
            pair: self.pair.clone(),
            charts: self.charts.clone(),
            theta0: self.theta0.clone(),
            res,
            f_rays: RayCache::new(self.pair.c, RayParams::default()),
            g_rays: RayCache::new(self.pair.sigma, RayParams::default()),
        }
    }

    pub fn map(&self, side: Side) -> QuadMap {
        match side {
            Side::Hyperbolic => self.pair.f(),
            Side::Parabolic => self.pair.g(),
        }
    }

    pub fn rays(&self, side: Side) -> &RayCache {
        match side {
            Side::Hyperbolic => &self.f_rays,
            Side::Parabolic => &self.g_rays,
        }
    }

    /// γ(θ) on the given side.
    pub fn landing(&self, side: Side, theta: &Angle) -> Result<C64> {
        self.rays(side).landing(theta)
    }

    pub fn lbar(&self) -> usize {
        self.pair.lbar()
    }

    /// Pull-backs separating the tile from the critical sector tile of the same sign.
    pub fn steps_to_root(&self, addr: &TileAddress) -> Result<usize> {
        let target = &self.theta0[addr.sign.index()];
        let n = first_hit(std::slice::from_ref(target), &addr.angle)
            .ok_or_else(|| Error::input(format!("angle {} never maps to θ₀{} = {}", addr.angle, addr.sign, target)))?;
        Ok(n + self.res.extra_cycles * self.lbar())
    }

    pub fn validate(&self, addr: &TileAddress) -> Result<()> {
        self.steps_to_root(addr).map(|_| ())
    }

    /// Keep the principal spine lift when its tail is nearer γ(θ) than its negative.
    fn keep_for(&self, side: Side, theta: &Angle, tail: C64) -> Result<bool> {
        let sib = theta.add(&Angle::frac(1, 2));
        let g0 = self.landing(side, theta)?;
        let g1 = self.landing(side, &sib)?;
        Ok((tail - g0).norm() + (-tail - g1).norm() <= (tail - g1).norm() + (-tail - g0).norm())
    }

    /// Lifts a root path set along the backward orbit of angles ending at `theta`.
    fn pull_to(&self, side: Side, mut set: PathSet, theta: &Angle, steps: usize) -> Result<PathSet> {
        let map = self.map(side);
        for i in 1..=steps {
            let target = theta.double_n(steps - i);
            let mut err = None;
            set = lift_once(&map, &set, |l| match self.keep_for(side, &target, *l.last().unwrap()) {
                Ok(k) => k,
                Err(e) => {
                    err = Some(e);
                    true
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        Ok(set)
    }

    pub fn build_tile(&self, side: Side, addr: &TileAddress) -> Result<Tile> {
        Ok(self.build_with_probes(side, addr, &[])?.0)
    }

    /// Builds a tile and maps model points of it (W or Z) into the dynamical plane.
    pub fn build_with_probes(&self, side: Side, addr: &TileAddress, probes: &[C64]) -> Result<(Tile, Vec<C64>)> {
        let n = self.steps_to_root(addr)?;
        let root = addr.level + n as i64;
        // Probes are given at the tile's own level; the root tile sits n levels deeper.
        let probes: Vec<C64> = match side {
            Side::Hyperbolic => {
                let k = &self.charts.koenigs;
                probes.iter().map(|w| Polar::from_w(*w, k.a).push(k.rho, n as i64).to_w(k.a)).collect()
            }
            Side::Parabolic => probes.iter().map(|z| z + n as f64).collect(),
        };
        let probes = &probes[..];
        match side {
            Side::Hyperbolic => self.build_hyperbolic(addr, root, n, probes),
            Side::Parabolic => self.build_parabolic(addr, root, n, probes),
        }
    }

    fn build_hyperbolic(&self, addr: &TileAddress, m: i64, n: usize, probes: &[C64]) -> Result<(Tile, Vec<C64>)> {
        let k = &self.charts.koenigs;
        let res = &self.res;
        let nl = k.samples_per_level(res.per_level);
        let phi_c = if addr.sign == Sign::Plus { 0.0 } else { 2.0 * PI };
        let (l_in, l_out) = ((m + 1) as f64, m as f64);
        let l_anchor = k.anchor_level(nl).max(l_in);
        let l_far = l_out.min(0.0) - res.tail_levels;
        let levels = level_grid(l_anchor, l_far, nl);
        let idx = |l: f64| (((l_anchor - l) * nl as f64).round() as usize).min(levels.len() - 1);
        let t = |l: f64| k.rho.powf(l);
        let spine: Vec<Polar> = levels.iter().map(|&l| Polar::new(t(l), phi_c)).collect();
        let ns = res.edge_samples;
        let offsets = arc_offsets(ns, res.tail_height);
        let dir = if addr.sign == Sign::Plus { 1.0 } else { -1.0 };
        let arc = |tt: f64| -> Vec<Polar> { offsets.iter().map(|u| Polar::new(tt, phi_c + dir * u)).collect() };
        let crit: Vec<Polar> = unit_params(ns, true, true).iter().map(|u| Polar::new(t(l_out + u), PI)).collect();
        let (i_in, i_out) = (idx(l_in), idx(l_out));
        let mut paths = vec![spine, arc(t(l_out)), arc(t(l_in)), crit];
        let mut links =
            vec![vec![], vec![Link::start_of(0, i_out)], vec![Link::start_of(0, i_in)], vec![Link::end_of(1), Link::end_of(2).reversed()]];
        for w in probes {
            let p = Polar::from_w(*w, k.a);
            let lp = p.t.ln() / k.rho.ln();
            let i = idx(lp.clamp(l_far, l_anchor));
            let mut path = vec![Polar::new(t(levels[i]), phi_c), Polar::new(p.t, phi_c)];
            let steps = ((p.phi - phi_c).abs() / PI * ns as f64).ceil().max(1.0) as usize;
            path.extend((1..=steps).map(|j| Polar::new(p.t, phi_c + (p.phi - phi_c) * j as f64 / steps as f64)));
            paths.push(path);
            links.push(vec![Link::start_of(0, i)]);
        }
        let model = Hyperbolic { chart: k, sector: 0 };
        let set = root_lift(&model, &paths, &links)?;
        let set = self.pull_to(Side::Hyperbolic, set, &addr.angle, n)?;
        let p = set.paths;
        let mut inner = p[2].clone();
        inner.reverse();
        let edges = vec![
            Edge { kind: EdgeKind::Degenerating, points: p[0][i_in..=i_out].to_vec() },
            Edge { kind: EdgeKind::Equipotential, points: p[1].clone() },
            Edge { kind: EdgeKind::Critical, points: p[3].clone() },
            Edge { kind: EdgeKind::Equipotential, points: inner },
        ];
        let pts = p[4..].iter().map(|q| *q.last().unwrap()).collect();
        Ok((Tile { address: addr.clone(), side: Side::Hyperbolic, edges, vertex: None }, pts))
    }

    /// Heights 0..=1 linearly, then geometrically up to `top`.
    fn heights(&self, top: f64) -> Vec<f64> {
        let nl = self.res.per_level;
        let mut ys = unit_params(nl, true, false);
        let mut y = 1.0f64;
        let q = (1.0 / nl as f64).exp();
        while y * q < top {
            y *= q;
            ys.push(y);
        }
        if top > 1.0 {
            ys.push(top);
        }
        ys
    }

    fn build_parabolic(&self, addr: &TileAddress, m: i64, n: usize, probes: &[C64]) -> Result<(Tile, Vec<C64>)> {
        let fc = &self.charts.fatou;
        let res = &self.res;
        let nl = res.per_level as f64;
        let s = addr.sign.sgn();
        let top = res.tail_height;
        let ys = self.heights(top);
        let mf = m as f64;
        let xa = fc.deep_re().max(mf + 1.5).ceil() + 0.5;
        let mid = mf + 0.5;
        let cx = |x: f64, y: f64| C64::new(x, s * y);
        let horiz = |x0: f64, x1: f64, y: f64| -> Vec<C64> {
            let k = (((x1 - x0).abs() * nl).ceil() as usize).max(1);
            (0..=k).map(|j| cx(x0 + (x1 - x0) * j as f64 / k as f64, y)).collect()
        };
        // Spacing relative to the distance from the tile suffices deep in the petal.
        let ku = (((xa - mid + 1.0).ln() * nl).ceil() as usize).max(1);
        let mut spine: Vec<C64> =
            (0..=ku).rev().map(|j| cx(mid + ((xa - mid + 1.0).ln() * j as f64 / ku as f64).exp() - 1.0, 1.0)).collect();
        let tall: Vec<f64> = ys.iter().copied().filter(|&y| y > 1.0).collect();
        spine.extend(tall.iter().map(|&y| cx(mid, y)));
        let side_path = |x: f64| -> (Vec<C64>, usize) {
            let mut p = horiz(mid, x, top);
            let conn = p.len() - 1;
            p.extend(ys.iter().rev().skip(1).map(|&y| cx(x, y)));
            (p, conn)
        };
        let (left, cl) = side_path(mf);
        let (right, cr) = side_path(mf + 1.0);
        let ns = res.edge_samples;
        let crit: Vec<C64> = unit_params(ns, true, true).iter().map(|u| cx(mf + u, 0.0)).collect();
        let mut paths = vec![spine, left, right, crit];
        let mut links = vec![vec![], vec![Link::end_of(0)], vec![Link::end_of(0)], vec![Link::end_of(1), Link::end_of(2).reversed()]];
        let spine_heights: Vec<f64> = std::iter::once(1.0).chain(tall.iter().copied()).collect();
        let spine_start = paths[0].len() - spine_heights.len();
        for zp in probes {
            let yp = zp.im.abs();
            let (hi, &h) = spine_heights
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1.ln() - yp.max(1e-300).ln()).abs().total_cmp(&(b.1.ln() - yp.max(1e-300).ln()).abs()))
                .unwrap();
            let mut path = horiz(mid, zp.re, h);
            let kv = ((h - yp).abs() * nl).ceil().max(1.0) as usize;
            let (la, lb) = (h.ln(), yp.max(1e-300).ln());
            for j in 1..=kv {
                let f = j as f64 / kv as f64;
                let y = if yp > 1.0 && h > 1.0 { (la + (lb - la) * f).exp() } else { h + (yp - h) * f };
                path.push(C64::new(zp.re, s * y));
            }
            paths.push(path);
            links.push(vec![Link::start_of(0, spine_start + hi)]);
        }
        let model = Parabolic { chart: fc };
        let set = root_lift(&model, &paths, &links)?;
        let set = self.pull_to(Side::Parabolic, set, &addr.angle, n)?;
        let p = set.paths;
        let mut right = p[2][cr..].to_vec();
        right.reverse();
        let edges = vec![
            Edge { kind: EdgeKind::Critical, points: p[3].clone() },
            Edge { kind: EdgeKind::Equipotential, points: right },
            Edge { kind: EdgeKind::Equipotential, points: p[1][cl..].to_vec() },
        ];
        let vertex = self.landing(Side::Parabolic, &addr.angle)?;
        let pts = p[4..].iter().map(|q| *q.last().unwrap()).collect();
        Ok((Tile { address: addr.clone(), side: Side::Parabolic, edges, vertex: Some(vertex) }, pts))
    }

    /// Image of a model point (W or Z) of the tile `addr`.
    pub fn model_to_plane(&self, side: Side, addr: &TileAddress, model: C64) -> Result<C64> {
        Ok(self.build_with_probes(side, addr, &[model])?.1[0])
    }

    /// Tile address and model coordinate of z; `None` when z escapes.
    pub fn locate(&self, side: Side, z: C64) -> Result<Option<Located>> {
        let map = self.map(side);
        if green(map.c, z) > 0.0 {
            return Ok(None);
        }
        match side {
            Side::Hyperbolic => self.locate_hyperbolic(z).map(Some),
            Side::Parabolic => self.locate_parabolic(z).map(Some),
        }
    }

    /// Lifts a single anchored spine along the orbit, reading off the angle at each step.
    fn track_angle(&self, side: Side, deep: Vec<C64>, orbit: &[C64], sign: Sign) -> Result<Angle> {
        let map = self.map(side);
        let mut theta = self.theta0[sign.index()].clone();
        let mut path = deep;
        let n = orbit.len() - 1;
        for i in 1..=n {
            path = map.lift_path(&path, orbit[n - i]);
            let tail = *path.last().unwrap();
            let [h0, h1] = theta.halves();
            let d0 = (tail - self.landing(side, &h0)?).norm();
            let d1 = (tail - self.landing(side, &h1)?).norm();
            theta = if d0 <= d1 { h0 } else { h1 };
        }
        Ok(theta)
    }

    fn orbit(map: &QuadMap, z: C64, n: usize) -> Vec<C64> {
        let mut out = Vec::with_capacity(n + 1);
        let mut w = z;
        for _ in 0..=n {
            out.push(w);
            w = map.f(w);
        }
        out
    }

    fn locate_hyperbolic(&self, z: C64) -> Result<Located> {
        let k = &self.charts.koenigs;
        let (p, e, sector) = k.polar(z)?;
        let on_cut = p.phi < CUT_EPS || p.phi > 2.0 * PI - CUT_EPS;
        let sign = if p.phi <= PI { Sign::Plus } else { Sign::Minus };
        let phi_c = if sign == Sign::Plus { 0.0 } else { 2.0 * PI };
        // f^l turns sectors by p; find the passes bringing the entry point to sector 0.
        let q = k.q as i64;
        let pp = self.pair.p as i64;
        let turns = (0..q).find(|j| (sector as i64 + j * pp).rem_euclid(q) == 0).unwrap_or(0) as usize;
        let s1 = e.n + turns * k.l;
        let lz = p.t.ln() / k.rho.ln();
        let nl = k.samples_per_level(self.res.per_level);
        let ns = self.res.edge_samples;
        let steps = ((p.phi - phi_c).abs() / PI * ns as f64).ceil().max(1.0) as usize;
        let mut path: Vec<Polar> = (0..=steps).map(|j| Polar::new(p.t, p.phi + (phi_c - p.phi) * j as f64 / steps as f64)).collect();
        let far = lz.min(0.0) - self.res.tail_levels;
        let start = (lz * nl as f64).floor() / nl as f64;
        path.extend(level_grid(start, far, nl).into_iter().filter(|&l| l < lz).map(|l| Polar::new(k.rho.powf(l), phi_c)));
        let tmax = path.iter().map(|q| q.t).fold(0.0, f64::max);
        let big_n = s1 + k.pushes_needed(tmax * k.rho.powi(s1 as i32));
        let orbit = Self::orbit(&self.pair.f(), z, big_n);
        let deep: Vec<C64> = path
            .iter()
            .map(|q| k.local_inverse(q.push(k.rho, big_n as i64)))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::numeric("located path leaves the local chart"))?;
        let tol = 1e-7 * (1.0 + orbit[big_n].norm());
        if (deep[0] - orbit[big_n]).norm() > tol {
            return Err(Error::numeric(format!("sector bookkeeping failed for {z}")));
        }
        let theta = self.track_angle(Side::Hyperbolic, deep, &orbit, sign)?;
        Ok(Located { address: TileAddress::new(theta, lz.floor() as i64, sign), model: p.to_w(k.a), on_cut })
    }

    fn locate_parabolic(&self, z: C64) -> Result<Located> {
        let fc = &self.charts.fatou;
        let e = fc.entry(z, 0)?;
        let w = fc.phi(z)?;
        let sign = if w.im >= 0.0 { Sign::Plus } else { Sign::Minus };
        let s = sign.sgn();
        let top = self.res.tail_height.max(2.0 * w.im.abs());
        let nl = self.res.per_level;
        let mut path = vec![w];
        let y0 = w.im.abs();
        let mut y = y0;
        while y < top {
            y = if y < 1.0 { (y + 1.0 / nl as f64).min(1.0).max(y + 1e-9) } else { y * (1.0 / nl as f64).exp() };
            path.push(C64::new(w.re, s * y.min(top)));
        }
        let lbar = self.lbar();
        let deep_re = fc.deep_re();
        let base = e.n as f64 + w.re;
        let k = if base >= deep_re { 0 } else { (((deep_re - base) / lbar as f64).ceil() as usize) * lbar };
        let big_n = e.n + k;
        let orbit = Self::orbit(&self.pair.g(), z, big_n);
        let deep: Vec<C64> = path
            .iter()
            .map(|q| fc.local_inverse(q + big_n as f64))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::numeric("located path leaves the petal chart"))?;
        if (deep[0] - orbit[big_n]).norm() > 1e-7 * (1.0 + orbit[big_n].norm()) {
            return Err(Error::numeric(format!("petal bookkeeping failed for {z}")));
        }
        let theta = self.track_angle(Side::Parabolic, deep, &orbit, sign)?;
        Ok(Located { address: TileAddress::new(theta, w.re.floor() as i64, sign), model: w, on_cut: false })
    }

    /// Shared-edge kind of two tiles.
    pub fn adjacency(&self, side: Side, a: &TileAddress, b: &TileAddress) -> Result<Adjacency> {
        let ta = self.build_tile(side, a)?;
        let tb = self.build_tile(side, b)?;
        Ok(adjacency_of(&ta, &tb))
    }

    /// Whether the two tiles share an edge of the given kind.
    pub fn shares(&self, side: Side, a: &TileAddress, b: &TileAddress, kind: EdgeKind) -> Result<bool> {
        Ok(shares_kind(&self.build_tile(side, a)?, &self.build_tile(side, b)?, kind))
    }

    /// Angles θ with δ^k(θ) = θ₀^± for some k ≤ depth, sorted.
    pub fn tile_angles(&self, sign: Sign, depth: usize) -> Vec<Angle> {
        let mut all = vec![self.theta0[sign.index()].clone()];
        let mut frontier = all.clone();
        for _ in 0..depth {
            frontier = frontier.iter().flat_map(|t| t.halves()).filter(|t| !all.contains(t)).collect();
            frontier.sort();
            frontier.dedup();
            all.extend(frontier.iter().cloned());
        }
        all.sort();
        all
    }

    /// Addresses with angles from `tile_angles(_, depth)` and levels in `from..=to`, both signs.
    pub fn addresses(&self, from: i64, to: i64, depth: usize) -> Vec<TileAddress> {
        let mut out = Vec::new();
        for sign in [Sign::Plus, Sign::Minus] {
            for theta in self.tile_angles(sign, depth) {
                for m in from..=to {
                    out.push(TileAddress::new(theta.clone(), m, sign));
                }
            }
        }
        out.sort();
        out
    }

    /// Adjacency of the same two addresses on both sides.
    pub fn compare_adjacency(&self, a: &TileAddress, b: &TileAddress) -> Result<AdjacencyCheck> {
        let hyperbolic = self.adjacency(Side::Hyperbolic, a, b)?;
        let parabolic = self.adjacency(Side::Parabolic, a, b)?;
        let matched = match (hyperbolic, parabolic) {
            (Adjacency::Inconclusive, _) | (_, Adjacency::Inconclusive) => None,
            (h, p) => Some(collapsed(h) == p),
        };
        Ok(AdjacencyCheck { a: a.clone(), b: b.clone(), hyperbolic, parabolic, matched })
    }

    /// Hausdorff distance between f(T(θ, m, ∗)) and T(2θ, m+1, ∗), the latter
    /// built through one more cycle of pull-backs.
    pub fn tile_law_residual(&self, side: Side, addr: &TileAddress) -> Result<f64> {
        let t = self.build_tile(side, addr)?;
        let img = t.image(&self.map(side));
        let deeper = self.with_resolution(Resolution { extra_cycles: self.res.extra_cycles + 1, ..self.res });
        let t2 = deeper.build_tile(side, &addr.image())?;
        Ok(hausdorff(&img.boundary(), &t2.boundary()))
    }
}

/// Steps of refinement towards a corner, by factors of √2.
const CORNER_STEPS: i32 = 60;

/// Uniform parameters in [0, 1], refined geometrically towards the chosen ends,
/// where edges may meet at critical corners.
fn unit_params(n: usize, lo: bool, hi: bool) -> Vec<f64> {
    let mut u: Vec<f64> = (0..=n).map(|j| j as f64 / n as f64).collect();
    for k in 1..=CORNER_STEPS {
        let e = 0.5f64.powf(k as f64 / 2.0) / n as f64;
        if lo {
            u.push(e);
        }
        if hi {
            u.push(1.0 - e);
        }
    }
    u.sort_by(f64::total_cmp);
    u.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    u
}

/// Angular offsets in [0, π] from the cut: uniform, plus offsets 2·atan(1/y)
/// for geometric y up to `top`, which crowd towards the cut where tiles pinch.
fn arc_offsets(ns: usize, top: f64) -> Vec<f64> {
    let mut u: Vec<f64> = unit_params(ns, false, true).iter().map(|v| PI * v).collect();
    let mut y = 1.0f64;
    while y <= top {
        u.push(2.0 * (1.0 / y).atan());
        y *= 0.25f64.exp();
    }
    u.sort_by(f64::total_cmp);
    u.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    u
}

fn kind_rank(k: EdgeKind) -> u8 {
    match k {
        EdgeKind::Critical => 0,
        EdgeKind::Equipotential => 1,
        EdgeKind::Degenerating => 2,
    }
}

/// Fraction of the length of `edge` whose samples lie within `tol` of `other`.
fn covered_fraction(edge: &[C64], ds: &[f64], tol: f64) -> f64 {
    let (mut covered, mut total) = (0.0, 0.0);
    for i in 1..edge.len() {
        let len = (edge[i] - edge[i - 1]).norm();
        total += len;
        if ds[i] < tol && ds[i - 1] < tol {
            covered += len;
        }
    }
    if total > 0.0 {
        covered / total
    } else {
        0.0
    }
}

/// Numeric shared-edge test between two built tiles.
pub fn adjacency_of(a: &Tile, b: &Tile) -> Adjacency {
    let (ba, bb) = (a.boundary(), b.boundary());
    let mut shared: Option<EdgeKind> = None;
    let mut band = false;
    for (x, other) in [(a, &bb), (b, &ba)] {
        for e in &x.edges {
            let ds: Vec<f64> = e.points.iter().map(|z| polyline_dist(*z, other)).collect();
            if covered_fraction(&e.points, &ds, ADJ_TOL) >= ADJ_MIN_FRACTION {
                if shared.is_none_or(|k| kind_rank(e.kind) < kind_rank(k)) {
                    shared = Some(e.kind);
                }
            } else if covered_fraction(&e.points, &ds, ADJ_BAND) >= ADJ_MIN_FRACTION {
                band = true;
            }
        }
    }
    match (shared, band) {
        (Some(k), _) => Adjacency::Shared(k),
        (None, true) => Adjacency::Inconclusive,
        (None, false) => Adjacency::None,
    }
}

/// Whether an edge of `kind` of one tile runs along an edge of the same kind of the other.
pub fn shares_kind(a: &Tile, b: &Tile, kind: EdgeKind) -> bool {
    a.edges_of(kind).any(|e| {
        b.edges_of(kind).any(|f| {
            let ds: Vec<f64> = e.points.iter().map(|z| polyline_dist(*z, &f.points)).collect();
            covered_fraction(&e.points, &ds, ADJ_TOL) >= ADJ_MIN_FRACTION
        })
    })
}

/// Adjacency on the parabolic side that corresponds to `h` on the hyperbolic side:
/// degenerating edges collapse to points.
pub fn collapsed(h: Adjacency) -> Adjacency {
    match h {
        Adjacency::Shared(EdgeKind::Degenerating) => Adjacency::None,
        other => other,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AdjacencyCheck {
    pub a: TileAddress,
    pub b: TileAddress,
    pub hyperbolic: Adjacency,
    pub parabolic: Adjacency,
    /// None when either side is inconclusive.
    pub matched: Option<bool>,
}

/// Random address pairs biased towards neighbours: the next level, the other
/// sign, the sibling angle, or an unrelated address, in equal proportion.
pub fn sample_address_pairs<R: rand::Rng>(
    tess: &Tessellation,
    levels: (i64, i64),
    depth: usize,
    n: usize,
    rng: &mut R,
) -> Vec<(TileAddress, TileAddress)> {
    let all = tess.addresses(levels.0, levels.1, depth);
    let mut out = Vec::with_capacity(n);
    if all.is_empty() {
        return out;
    }
    while out.len() < n {
        let a = all[rng.gen_range(0..all.len())].clone();
        let b = match rng.gen_range(0..4) {
            0 => TileAddress::new(a.angle.clone(), a.level + 1, a.sign),
            1 => TileAddress::new(a.angle.clone(), a.level, a.sign.flip()),
            2 => TileAddress::new(a.angle.add(&Angle::frac(1, 2)), a.level, a.sign),
            _ => all[rng.gen_range(0..all.len())].clone(),
        };
        if a != b && tess.validate(&b).is_ok() && !out.contains(&(a.clone(), b.clone())) {
            out.push((a, b));
        }
    }
    out
}

/// The q addresses (θ, m + μ·l, ∗), 0 ≤ μ < q, of the Case (a) partner whose
/// union is the Case (b) tile.
pub fn subdivided_tiles(pair_b: &DegenerationPair, addr: &TileAddress) -> Result<Vec<TileAddress>> {
    if pair_b.case != Case::B {
        return Err(Error::input("subdivision needs a Case (b) pair"));
    }
    let (qa, la) = (pair_b.qprime as i64, pair_b.lprime as i64);
    Ok((0..qa).map(|mu| TileAddress::new(addr.angle.clone(), addr.level + mu * la, addr.sign)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{cx, PairSpec};

    fn tess(spec: PairSpec) -> Tessellation {
        Tessellation::new(&spec.resolve().unwrap(), Resolution::default()).unwrap()
    }

    fn addr(s: &str) -> TileAddress {
        s.parse().unwrap()
    }

    #[test]
    fn address_round_trip() {
        let a = addr("(4/7,-2,-)");
        assert_eq!(a, TileAddress::new(Angle::frac(4, 7), -2, Sign::Minus));
        assert_eq!(a.to_string().parse::<TileAddress>().unwrap(), a);
        assert_eq!(addr("1/2:3:+").image(), addr("(0,4,+)"));
    }

    #[test]
    fn cauliflower_root_tile_degenerating_edge_on_invariant_segment() {
        let t = tess(PairSpec::cauliflower(0.5));
        let tile = t.build_tile(Side::Hyperbolic, &addr("(0,0,+)")).unwrap();
        assert_eq!(tile.edges.len(), 4);
        let deg = tile.edges_of(EdgeKind::Degenerating).next().unwrap();
        for z in &deg.points {
            assert!(z.im.abs() < 1e-12 && z.re > 0.25 && z.re < 0.75, "{z}");
        }
        // The critical edge of level 0 joins 0 to c.
        let cr = &tile.edges_of(EdgeKind::Critical).next().unwrap().points;
        assert!(cr[0].norm() < 1e-5 && (cr.last().unwrap() - cx(3.0 / 16.0, 0.0)).norm() < 1e-7);
        // The upper tile lies in the upper half plane.
        assert!(tile.boundary().iter().all(|z| z.im > -1e-5));
    }

    #[test]
    fn cauliflower_parabolic_tile_vertex() {
        let t = tess(PairSpec::cauliflower(0.5));
        let tile = t.build_tile(Side::Parabolic, &addr("(0,0,+)")).unwrap();
        assert_eq!(tile.edges.len(), 3);
        assert!((tile.vertex.unwrap() - cx(0.5, 0.0)).norm() < 1e-9);
        let top = tile.edges[1].points.last().unwrap();
        assert!((top - cx(0.5, 0.0)).norm() < 1e-3);
    }

    #[test]
    fn tile_law_cauliflower() {
        let t = tess(PairSpec::cauliflower(0.5));
        for side in [Side::Hyperbolic, Side::Parabolic] {
            for a in ["(0,0,+)", "(0,-2,-)", "(1/2,1,+)", "(1/4,-1,-)", "(3/4,2,+)"] {
                let r = t.tile_law_residual(side, &addr(a)).unwrap();
                assert!(r < 1e-5, "{side} {a}: {r}");
            }
        }
    }

    #[test]
    fn locate_recovers_tile_probes() {
        let t = tess(PairSpec::cauliflower(0.5));
        for side in [Side::Hyperbolic, Side::Parabolic] {
            for a in ["(0,0,+)", "(1/2,-1,-)", "(1/4,1,+)"] {
                let a = addr(a);
                let model = match side {
                    Side::Hyperbolic => {
                        let k = &t.charts.koenigs;
                        Polar::new(k.rho.powf(a.level as f64 + 0.5), if a.sign == Sign::Plus { 1.0 } else { 5.0 }).to_w(k.a)
                    }
                    Side::Parabolic => cx(a.level as f64 + 0.3, a.sign.sgn() * 0.7),
                };
                let z = t.model_to_plane(side, &a, model).unwrap();
                let loc = t.locate(side, z).unwrap().unwrap();
                assert_eq!(loc.address, a, "{side}");
                assert!((loc.model - model).norm() < 1e-7 * (1.0 + model.norm()), "{side} {} {}", loc.model, model);
            }
        }
    }

    #[test]
    fn rabbit_root_tiles_follow_characteristic_rays() {
        let t = tess(PairSpec::rabbits(0.9, Case::A));
        for a in ["(4/7,0,+)", "(1/7,0,-)"] {
            let a = addr(a);
            let r = t.tile_law_residual(Side::Hyperbolic, &a).unwrap();
            assert!(r < 1e-5, "{a}: {r}");
            let r = t.tile_law_residual(Side::Parabolic, &a).unwrap();
            assert!(r < 1e-5, "{a}: {r}");
        }
    }

    #[test]
    fn adjacency_examples() {
        let t = tess(PairSpec::cauliflower(0.5));
        let h = Side::Hyperbolic;
        assert_eq!(t.adjacency(h, &addr("(0,1,+)"), &addr("(0,2,+)")).unwrap(), Adjacency::Shared(EdgeKind::Equipotential));
        assert_eq!(t.adjacency(h, &addr("(0,1,+)"), &addr("(0,1,-)")).unwrap(), Adjacency::Shared(EdgeKind::Critical));
        assert_eq!(t.adjacency(h, &addr("(0,1,+)"), &addr("(1/2,1,+)")).unwrap(), Adjacency::None);
        let p = Side::Parabolic;
        assert_eq!(t.adjacency(p, &addr("(0,1,+)"), &addr("(0,2,+)")).unwrap(), Adjacency::Shared(EdgeKind::Equipotential));
        assert_eq!(t.adjacency(p, &addr("(0,1,+)"), &addr("(0,1,-)")).unwrap(), Adjacency::Shared(EdgeKind::Critical));
    }

    #[test]
    fn rabbit_signs_share_degenerating_edge() {
        let t = tess(PairSpec::rabbits(0.9, Case::A));
        for a in ["4/7", "2/7", "9/14"] {
            let plus = addr(&format!("({a},0,+)"));
            let minus = addr(&format!("({a},0,-)"));
            assert_eq!(t.adjacency(Side::Hyperbolic, &plus, &minus).unwrap(), Adjacency::Shared(EdgeKind::Degenerating), "{a}");
            assert_eq!(t.adjacency(Side::Parabolic, &plus, &minus).unwrap(), Adjacency::None, "{a}");
        }
    }

    #[test]
    fn subdivision_of_rabbit_tile() {
        let pair = PairSpec::rabbits(0.9, Case::B).resolve().unwrap();
        let got = subdivided_tiles(&pair, &addr("(4/7,0,+)")).unwrap();
        assert_eq!(got, vec![addr("(4/7,0,+)"), addr("(4/7,1,+)"), addr("(4/7,2,+)")]);
        let a = PairSpec::rabbits(0.9, Case::A).resolve().unwrap();
        assert!(subdivided_tiles(&a, &addr("(4/7,0,+)")).is_err());
    }
}

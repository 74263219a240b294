//! Pulling model-plane paths back to the dynamical plane.
//!
//! Paths are pushed by the model map until they lie in the domain of a local
//! inverse chart, mapped there, and lifted back one step at a time. The first
//! path (the spine) never meets the critical value; its sign at each step is
//! chosen by a caller-supplied rule. Every other path starts at a point of an
//! already lifted path.

use crate::dynamics::{QuadMap, C64};
use crate::error::{Error, Result};
use crate::linearize::{FatouChart, KoenigsChart, Polar};

/// A linearizing model with a local inverse near its attracting end.
pub trait Model {
    type P: Copy;
    fn map(&self) -> QuadMap;
    /// Period of the local inverse under the model map.
    fn period(&self) -> usize;
    fn push(&self, p: Self::P, k: usize) -> Self::P;
    /// Smallest multiple of `period` after which every point is deep.
    fn pushes_needed(&self, pts: &[Self::P]) -> usize;
    fn deep_inverse(&self, p: Self::P) -> Option<C64>;
}

/// The hyperbolic model restricted to one sector of the critical component.
pub struct Hyperbolic<'a> {
    pub chart: &'a KoenigsChart,
    pub sector: usize,
}

impl Model for Hyperbolic<'_> {
    type P = Polar;

    fn map(&self) -> QuadMap {
        QuadMap::new(self.chart.c)
    }

    fn period(&self) -> usize {
        self.chart.lbar
    }

    fn push(&self, p: Polar, k: usize) -> Polar {
        p.push(self.chart.rho, k as i64)
    }

    fn pushes_needed(&self, pts: &[Polar]) -> usize {
        let tmax = pts.iter().map(|p| p.t).fold(0.0, f64::max);
        self.chart.pushes_needed(tmax)
    }

    fn deep_inverse(&self, p: Polar) -> Option<C64> {
        self.chart.local_inverse_sector(p, self.sector)
    }
}

pub struct Parabolic<'a> {
    pub chart: &'a FatouChart,
}

impl Model for Parabolic<'_> {
    type P = C64;

    fn map(&self) -> QuadMap {
        QuadMap::new(self.chart.sigma)
    }

    fn period(&self) -> usize {
        self.chart.lbar
    }

    fn push(&self, p: C64, k: usize) -> C64 {
        p + k as f64
    }

    fn pushes_needed(&self, pts: &[C64]) -> usize {
        let deep = self.chart.deep_re();
        let lo = pts.iter().map(|p| p.re).fold(f64::INFINITY, f64::min);
        let per = self.period();
        if lo >= deep {
            0
        } else {
            (((deep - lo) / per as f64).ceil() as usize) * per
        }
    }

    fn deep_inverse(&self, p: C64) -> Option<C64> {
        self.chart.local_inverse(p)
    }
}

/// How a non-spine path is started.
#[derive(Clone, Copy, Debug)]
pub struct Link {
    /// Index of an earlier path providing the anchor point.
    pub from: usize,
    /// Sample of that path; `None` for its last sample.
    pub sample: Option<usize>,
    /// Lift the path from its last sample backwards.
    pub reverse: bool,
}

impl Link {
    pub fn start_of(from: usize, sample: usize) -> Self {
        Self { from, sample: Some(sample), reverse: false }
    }

    pub fn end_of(from: usize) -> Self {
        Self { from, sample: None, reverse: false }
    }

    pub fn reversed(self) -> Self {
        Self { reverse: true, ..self }
    }
}

/// A family of paths with its linking rules; `links[0]` is ignored (spine).
#[derive(Clone, Debug)]
pub struct PathSet {
    pub paths: Vec<Vec<C64>>,
    /// Candidate links per path, tried in order until the start is not critical.
    pub links: Vec<Vec<Link>>,
}

fn anchor_point(paths: &[Vec<C64>], link: &Link) -> C64 {
    let p = &paths[link.from];
    match link.sample {
        Some(i) => p[i],
        None => *p.last().unwrap(),
    }
}

/// One lift of every path under `map`; `keep(spine_lift)` decides whether the
/// principal spine lift or its negative is taken.
pub fn lift_once(map: &QuadMap, set: &PathSet, keep: impl FnOnce(&[C64]) -> bool) -> PathSet {
    let spine = &set.paths[0];
    let s0 = (spine[0] - map.c).sqrt();
    let mut lifted0 = map.lift_path(spine, s0);
    if !keep(&lifted0) {
        for z in lifted0.iter_mut() {
            *z = -*z;
        }
    }
    let mut out: Vec<Vec<C64>> = vec![lifted0];
    let tiny = 1e-12 * (1.0 + map.c.norm());
    for (i, path) in set.paths.iter().enumerate().skip(1) {
        let links = &set.links[i];
        let link = links
            .iter()
            .find(|lk| {
                let w = if lk.reverse { *path.last().unwrap() } else { path[0] };
                (w - map.c).norm() > tiny
            })
            .or(links.first())
            .copied()
            .expect("non-spine path without a link");
        let a = anchor_point(&out, &link);
        let lifted = if link.reverse {
            let rev: Vec<C64> = path.iter().rev().copied().collect();
            let mut l = map.lift_path(&rev, a);
            l.reverse();
            l
        } else {
            map.lift_path(path, a)
        };
        out.push(lifted);
    }
    PathSet { paths: out, links: set.links.clone() }
}

/// Lift `steps` times, keeping the spine start nearest `anchors[i]` after i + 1 lifts.
pub fn lift_anchored(map: &QuadMap, set: PathSet, anchors: &[C64]) -> PathSet {
    anchors.iter().fold(set, |cur, a| lift_once(map, &cur, |l| (l[0] - a).norm() <= (l[0] + a).norm()))
}

/// Maps model paths through the local inverse after pushing into the deep
/// domain, and lifts them back anchored at the orbit of the deep spine start.
/// Each point is re-read from the chart once the remaining pushes match its
/// own depth, so shallow points do not inherit the error growth of deep ones.
pub fn root_lift<M: Model>(model: &M, paths: &[Vec<M::P>], links: &[Vec<Link>]) -> Result<PathSet> {
    let all: Vec<M::P> = paths.iter().flatten().copied().collect();
    let k = model.pushes_needed(&all);
    let map = model.map();
    let outside = || Error::numeric("model point outside the local chart after pushing");
    let mut deep = Vec::with_capacity(paths.len());
    // (stage, path, sample, value): after `stage` lifts the sample is replaced.
    let mut refresh: Vec<(usize, usize, usize, C64)> = Vec::new();
    for (pi, p) in paths.iter().enumerate() {
        let mut zs = Vec::with_capacity(p.len());
        for (si, &x) in p.iter().enumerate() {
            zs.push(model.deep_inverse(model.push(x, k)).ok_or_else(outside)?);
            let kp = model.pushes_needed(&[x]);
            if kp < k {
                let v = model.deep_inverse(model.push(x, kp)).ok_or_else(outside)?;
                refresh.push((k - kp, pi, si, v));
            }
        }
        deep.push(zs);
    }
    refresh.sort_by_key(|r| r.0);
    // The spine start is deep without pushing, so its forward orbit anchors every lift.
    let a0 = model.deep_inverse(paths[0][0]).ok_or_else(|| Error::numeric("spine anchor is not in the local chart"))?;
    let mut orbit = Vec::with_capacity(k + 1);
    let mut z = a0;
    for _ in 0..=k {
        orbit.push(z);
        z = map.f(z);
    }
    let mut set = PathSet { paths: deep, links: links.to_vec() };
    let mut next = 0;
    for i in 1..=k {
        let a = orbit[k - i];
        set = lift_once(&map, &set, |l| (l[0] - a).norm() <= (l[0] + a).norm());
        while next < refresh.len() && refresh[next].0 == i {
            let (_, pi, si, v) = refresh[next];
            let cur = set.paths[pi][si];
            // A chart value nearer the sibling preimage −cur would mean another branch; keep the lift then.
            // Deep lifts may carry large rounding errors, so only the branch is compared.
            if (cur - v).norm() < 1e-6 * (1.0 + v.norm()) || (cur - v).norm() < 0.25 * (cur + v).norm() {
                set.paths[pi][si] = v;
            }
            next += 1;
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::PairSpec;

    #[test]
    fn lift_of_real_segment_is_real() {
        let pair = PairSpec::cauliflower(0.5).resolve().unwrap();
        let ch = KoenigsChart::new(&pair).unwrap();
        let model = Hyperbolic { chart: &ch, sector: 0 };
        // For t < 1 the critical line φ = π is the real segment (0, α₁).
        let t0 = ch.t_local() * 0.4;
        let path: Vec<Polar> = (0..50).map(|j| Polar::new(t0 * (0.95 / t0).powf(j as f64 / 49.0), std::f64::consts::PI)).collect();
        let set = root_lift(&model, std::slice::from_ref(&path), &[vec![]]).unwrap();
        for (z, p) in set.paths[0].iter().zip(&path) {
            assert!(z.im.abs() < 1e-12);
            let w = ch.phi(*z).unwrap();
            assert!((w - p.to_w(ch.a)).norm() < 1e-8 * (1.0 + w.norm()), "{z} {w}");
        }
        assert!(set.paths[0].iter().all(|z| z.re > 0.0 && z.re < 0.25 + 1e-12));
    }
}

//! The pinching semiconjugacy h from f to g.
//!
//! Outside the filled Julia set h is the Böttcher transport. On the interior
//! it reads the tile address and model coordinate W of a point, sends W to the
//! parabolic model by χ and maps the result into the tile of g with the same
//! address. Components of I_f collapse to the landing point of their type.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::angles::Angle;
use crate::dynamics::{DegenerationPair, QuadMap, C64};
use crate::error::{Error, Result};
use crate::linearize::Polar;
use crate::rays::{exterior_distance, exterior_transport, green, transport_steps};
use crate::tess::{Resolution, Side, Tessellation, TileAddress};

/// χ(W) = log_ρ(|W − a|/a) + i·s·cot(arg(W − a)/2), sending A(m, ±) onto C(m, ±).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ModelConjugacy {
    pub rho: f64,
    pub a: f64,
    /// Factor on the imaginary part; 2/|ln ρ| makes χ conformal at W = 0.
    pub scale: f64,
}

impl ModelConjugacy {
    pub fn new(rho: f64) -> Self {
        Self { rho, a: 1.0 / (1.0 - rho), scale: 2.0 / rho.ln().abs() }
    }

    pub fn unscaled(rho: f64) -> Self {
        Self { scale: 1.0, ..Self::new(rho) }
    }

    pub fn chi(&self, w: C64) -> Result<C64> {
        let p = Polar::from_w(w, self.a);
        if p.t == 0.0 || p.phi == 0.0 || !p.t.is_finite() {
            return Err(Error::input(format!("W = {w} lies on the cut")));
        }
        Ok(self.chi_polar(p))
    }

    pub fn chi_polar(&self, p: Polar) -> C64 {
        C64::new(p.t.ln() / self.rho.ln(), self.scale / (0.5 * p.phi).tan())
    }

    pub fn chi_inverse(&self, zeta: C64) -> Polar {
        Polar::new(self.rho.powf(zeta.re), 2.0 * self.scale.atan2(zeta.im))
    }

    /// F(W) = ρW + 1.
    pub fn model_map(&self, w: C64) -> C64 {
        self.rho * w + 1.0
    }
}

/// Chordal distance on the Riemann sphere.
pub fn spherical_distance(z: C64, w: C64) -> f64 {
    match (z.is_finite(), w.is_finite()) {
        (false, false) => 0.0,
        (true, false) => 2.0 / (1.0 + z.norm_sqr()).sqrt(),
        (false, true) => 2.0 / (1.0 + w.norm_sqr()).sqrt(),
        (true, true) => 2.0 * (z - w).norm() / ((1.0 + z.norm_sqr()) * (1.0 + w.norm_sqr())).sqrt(),
    }
}

/// Distance kept from J_f ∪ I_f by residual grids.
pub const GRID_MARGIN: f64 = 1e-4;

/// Boundary sampling for tile naming checks.
pub const NAMING_RESOLUTION: Resolution =
    Resolution { edge_samples: 256, per_level: 96, tail_levels: 12.0, tail_height: 1e4, extra_cycles: 0 };

/// Depth of angle preimages whose landing points are handled exactly.
const SPECIAL_DEPTH: usize = 3;

pub struct Semiconjugacy {
    pub tess: Tessellation,
    pub chi: ModelConjugacy,
    steps: usize,
    /// Points of J_f and of the attracting cycle with known images.
    special: Vec<(C64, C64)>,
}

/// How a grid point was excluded or evaluated.
#[derive(Clone, Debug, Serialize)]
pub struct Residual {
    pub value: f64,
    pub evaluated: usize,
    pub skipped: usize,
    pub worst: Option<C64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FieldSample {
    pub z: C64,
    pub h: Option<C64>,
}

impl Semiconjugacy {
    pub fn new(pair: &DegenerationPair, res: Resolution) -> Result<Self> {
        Self::with_model(pair, res, false)
    }

    pub fn with_model(pair: &DegenerationPair, res: Resolution, unscaled: bool) -> Result<Self> {
        let tess = Tessellation::new(pair, res)?;
        let rho = tess.charts.koenigs.rho;
        let chi = if unscaled { ModelConjugacy::unscaled(rho) } else { ModelConjugacy::new(rho) };
        let mut special = Vec::new();
        let f = pair.f();
        // Landing points of the characteristic cycles and a few of their preimages.
        let mut angles: Vec<Angle> = Vec::new();
        for t0 in &tess.theta0 {
            let mut t = t0.clone();
            for _ in 0..tess.lbar() {
                angles.push(t.clone());
                t = t.double();
            }
        }
        let mut frontier = angles.clone();
        for _ in 0..SPECIAL_DEPTH {
            frontier = frontier.iter().flat_map(|t| t.halves()).collect();
            angles.extend(frontier.iter().cloned());
        }
        angles.sort();
        angles.dedup();
        for t in &angles {
            special.push((tess.landing(Side::Hyperbolic, t)?, tess.landing(Side::Parabolic, t)?));
        }
        // The attracting cycle lies on I_f; f^j(α₁) has the type of δ^j θ₀⁺.
        let mut z = tess.charts.koenigs.alpha1;
        let mut t = tess.theta0[0].clone();
        for _ in 0..tess.lbar() {
            special.push((z, tess.landing(Side::Parabolic, &t)?));
            z = f.f(z);
            t = t.double();
        }
        Ok(Self { steps: transport_steps(pair.c, pair.sigma), tess, chi, special })
    }

    pub fn pair(&self) -> &DegenerationPair {
        &self.tess.pair
    }

    fn special_image(&self, z: C64) -> Option<C64> {
        self.special.iter().find(|(p, _)| (p - z).norm() < 1e-10).map(|(_, w)| *w)
    }

    /// h(γ_f(θ)) = γ_g(θ).
    pub fn h_landing(&self, theta: &Angle) -> Result<C64> {
        self.tess.landing(Side::Parabolic, theta)
    }

    pub fn h(&self, z: C64) -> Result<C64> {
        self.h_batch(&[z]).pop().unwrap()
    }

    /// h on many points; interior points sharing a tile are transported together.
    pub fn h_batch(&self, zs: &[C64]) -> Vec<Result<C64>> {
        enum Stage {
            Done(Result<C64>),
            Tile(TileAddress, C64),
        }
        let c = self.pair().c;
        let staged: Vec<Stage> = zs
            .par_iter()
            .map(|&z| {
                if !z.is_finite() {
                    return Stage::Done(Ok(z));
                }
                if let Some(w) = self.special_image(z) {
                    return Stage::Done(Ok(w));
                }
                if green(c, z) > 0.0 {
                    return Stage::Done(exterior_transport(c, self.pair().sigma, z, self.steps));
                }
                match self.tess.locate(Side::Hyperbolic, z) {
                    Ok(Some(loc)) if loc.on_cut => Stage::Done(self.h_landing(&loc.address.angle)),
                    Ok(Some(loc)) => match self.chi.chi(loc.model) {
                        Ok(zeta) => Stage::Tile(loc.address, zeta),
                        Err(_) => Stage::Done(self.h_landing(&loc.address.angle)),
                    },
                    Ok(None) => Stage::Done(Err(Error::numeric(format!("{z} escapes")))),
                    Err(e) => Stage::Done(Err(Error::numeric(format!("{z} is unresolvable near J_f: {e}")))),
                }
            })
            .collect();
        let mut groups: BTreeMap<TileAddress, Vec<(usize, C64)>> = BTreeMap::new();
        for (i, s) in staged.iter().enumerate() {
            if let Stage::Tile(a, zeta) = s {
                groups.entry(a.clone()).or_default().push((i, *zeta));
            }
        }
        let groups: Vec<(TileAddress, Vec<(usize, C64)>)> = groups.into_iter().collect();
        let mapped: Vec<(usize, Result<C64>)> = groups
            .par_iter()
            .flat_map_iter(|(a, pts)| {
                let zetas: Vec<C64> = pts.iter().map(|p| p.1).collect();
                let out: Vec<(usize, Result<C64>)> = match self.tess.build_with_probes(Side::Parabolic, a, &zetas) {
                    Ok((_, ws)) => pts.iter().zip(ws).map(|(p, w)| (p.0, Ok(w))).collect(),
                    Err(e) => pts.iter().map(|p| (p.0, Err(e.clone()))).collect(),
                };
                out
            })
            .collect();
        let mut out: Vec<Result<C64>> = staged
            .into_iter()
            .map(|s| match s {
                Stage::Done(r) => r,
                Stage::Tile(..) => Err(Error::numeric("unmapped")),
            })
            .collect();
        for (i, r) in mapped {
            out[i] = r;
        }
        out
    }

    /// Whether z stays `GRID_MARGIN` away from J_f and from I_f.
    pub fn admissible(&self, z: C64) -> bool {
        let c = self.pair().c;
        if green(c, z) > 0.0 {
            return exterior_distance(c, z) > GRID_MARGIN;
        }
        let ring = (0..8).all(|j| green(c, z + C64::from_polar(GRID_MARGIN, PI * j as f64 / 4.0)) == 0.0);
        if !ring {
            return false;
        }
        let k = &self.tess.charts.koenigs;
        let Ok((w, dw)) = k.phi_jet(z) else { return false };
        let d = w - k.a;
        // Distance from W to the cut [a, ∞), brought back by |Φ′|.
        let dw_cut = if d.re > 0.0 { d.im.abs() } else { d.norm() };
        dw.norm() == 0.0 || dw_cut / dw.norm() > GRID_MARGIN
    }

    /// sup over admissible grid points of the chordal distance between h(f(z)) and g(h(z)).
    pub fn residual(&self, grid: &[C64]) -> Residual {
        self.residual_and_identity(grid).0
    }

    /// sup over admissible grid points of the chordal distance between h(z) and z.
    pub fn identity_distance(&self, grid: &[C64]) -> Residual {
        self.residual_and_identity(grid).1
    }

    /// Both sups in one pass, sharing the evaluations of h at grid points.
    pub fn residual_and_identity(&self, grid: &[C64]) -> (Residual, Residual) {
        let f = self.pair().f();
        let g = self.pair().g();
        let ok: Vec<bool> = grid.par_iter().map(|&z| !z.is_finite() || self.admissible(z)).collect();
        let ok_image: Vec<bool> = grid.par_iter().zip(&ok).map(|(&z, &a)| a && (!z.is_finite() || self.admissible(f.f(z)))).collect();
        let base: Vec<C64> = grid.iter().zip(&ok).filter(|(_, &a)| a).map(|(z, _)| *z).collect();
        let images: Vec<C64> =
            grid.iter().zip(&ok_image).filter(|(_, &a)| a).map(|(&z, _)| if z.is_finite() { f.f(z) } else { z }).collect();
        let mut pts = base.clone();
        pts.extend_from_slice(&images);
        let hs = self.h_batch(&pts);
        let (h_base, h_img) = hs.split_at(base.len());
        let h_at: std::collections::HashMap<(u64, u64), &Result<C64>> =
            base.iter().zip(h_base).map(|(z, h)| ((z.re.to_bits(), z.im.to_bits()), h)).collect();

        let mut ident = Residual { value: 0.0, evaluated: 0, skipped: 0, worst: None };
        for (z, h) in base.iter().zip(h_base) {
            if let Ok(w) = h {
                ident.evaluated += 1;
                let d = spherical_distance(*z, *w);
                if d > ident.value {
                    ident.value = d;
                    ident.worst = Some(*z);
                }
            }
        }
        ident.skipped = grid.len() - ident.evaluated;

        let mut res = Residual { value: 0.0, evaluated: 0, skipped: 0, worst: None };
        let mut failed = 0;
        let kept: Vec<C64> = grid.iter().zip(&ok_image).filter(|(_, &a)| a).map(|(z, _)| *z).collect();
        for (z, hfz) in kept.iter().zip(h_img) {
            match (h_at[&(z.re.to_bits(), z.im.to_bits())], hfz) {
                (Ok(hz), Ok(hfz)) => {
                    let ghz = if hz.is_finite() { g.f(*hz) } else { *hz };
                    let d = spherical_distance(*hfz, ghz);
                    res.evaluated += 1;
                    if d > res.value || d.is_nan() {
                        res.value = if d.is_nan() { f64::INFINITY } else { d };
                        res.worst = Some(*z);
                    }
                }
                _ => failed += 1,
            }
        }
        if failed > 0 {
            res.value = f64::INFINITY;
        }
        res.skipped = grid.len() - kept.len() + failed;
        (res, ident)
    }

    /// (z, h(z)) on a grid; failed points carry no image.
    pub fn field(&self, grid: &[C64]) -> Vec<FieldSample> {
        self.h_batch(grid).into_iter().zip(grid).map(|(h, z)| FieldSample { z: *z, h: h.ok() }).collect()
    }

    /// Hausdorff distance between h(∂T_f(addr)) and ∂T_g(addr), both sampled
    /// at `NAMING_RESOLUTION` so that chords stay well inside the tolerance.
    pub fn tile_naming_residual(&self, addr: &TileAddress) -> Result<f64> {
        let dense = self.tess.with_resolution(Resolution { tail_levels: self.tess.res.tail_levels, ..NAMING_RESOLUTION });
        let tf = dense.build_tile(Side::Hyperbolic, addr)?;
        let tg = dense.build_tile(Side::Parabolic, addr)?;
        let hs: Vec<C64> = self.h_batch(&tf.boundary()).into_iter().collect::<Result<_>>()?;
        Ok(crate::geom::hausdorff(&hs, &tg.boundary()))
    }

    /// Largest disagreement of the transports through two tiles at `samples`
    /// parabolic model points of their common edge.
    pub fn seam_residual(&self, a: &TileAddress, b: &TileAddress, edge: &[C64]) -> Result<f64> {
        let (_, wa) = self.tess.build_with_probes(Side::Parabolic, a, edge)?;
        let (_, wb) = self.tess.build_with_probes(Side::Parabolic, b, edge)?;
        Ok(wa.iter().zip(&wb).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
    }
}

/// n × n grid over the rectangle with the given corners, cell centers.
pub fn grid(lo: C64, hi: C64, n: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let x = lo.re + (hi.re - lo.re) * (i as f64 + 0.5) / n as f64;
            let y = lo.im + (hi.im - lo.im) * (j as f64 + 0.5) / n as f64;
            out.push(C64::new(x, y));
        }
    }
    out
}

/// Default residual window: a square around the filled Julia set.
pub fn default_window(map: &QuadMap) -> (C64, C64) {
    let r = 0.5 + (0.25 + map.c.norm()).sqrt() + 0.1;
    (C64::new(-r, -r), C64::new(r, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{cx, PairSpec};

    fn sc(r: f64) -> Semiconjugacy {
        Semiconjugacy::new(&PairSpec::cauliflower(r).resolve().unwrap(), Resolution::default()).unwrap()
    }

    #[test]
    fn chi_examples() {
        let m = ModelConjugacy::new(0.5);
        for k in -3..4 {
            let w = m.a * (1.0 - 0.5f64.powi(k));
            let z = m.chi(cx(w, 0.0)).unwrap();
            assert!((z - cx(k as f64, 0.0)).norm() < 1e-12, "{k}: {z}");
        }
        let near = m.chi(cx(m.a + 1.0, 1e-9)).unwrap();
        assert!(near.im > 1e8);
        let near = m.chi(cx(m.a + 1.0, -1e-9)).unwrap();
        assert!(near.im < -1e8);
        assert!(m.chi(cx(m.a + 1.0, 0.0)).is_err());
        let p = Polar::new(0.3, 2.0);
        let back = m.chi_inverse(m.chi_polar(p));
        assert!((back.t - p.t).abs() < 1e-14 && (back.phi - p.phi).abs() < 1e-14);
    }

    #[test]
    fn chi_conjugates_model_maps() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for rho in [0.5, 0.9, 0.729] {
            let m = ModelConjugacy::new(rho);
            for _ in 0..1000 {
                let w = cx(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0));
                if w.im == 0.0 {
                    continue;
                }
                let d = m.chi(m.model_map(w)).unwrap() - m.chi(w).unwrap() - 1.0;
                assert!(d.norm() < 1e-12 * (1.0 + m.chi(w).unwrap().norm()), "{w}");
            }
        }
    }

    #[test]
    fn cauliflower_pinching() {
        let s = sc(0.5);
        assert!((s.h(cx(0.75, 0.0)).unwrap() - cx(0.5, 0.0)).norm() < 1e-9);
        for x in [0.25, 0.3, 0.5, 0.7] {
            let w = s.h(cx(x, 0.0)).unwrap();
            assert!((w - cx(0.5, 0.0)).norm() < 1e-9, "{x}: {w}");
        }
        assert!(!s.h(C64::new(f64::INFINITY, 0.0)).unwrap().is_finite());
    }

    #[test]
    fn exterior_residual_is_tiny() {
        let s = sc(0.5);
        let g: Vec<C64> = grid(cx(-2.0, 1.0), cx(2.0, 2.0), 8);
        let r = s.residual(&g);
        assert_eq!(r.evaluated, 64);
        assert!(r.value < 1e-8, "{r:?}");
    }

    #[test]
    fn interior_residual() {
        let s = sc(0.5);
        let g: Vec<C64> = grid(cx(-0.4, -0.3), cx(0.6, 0.3), 6);
        let r = s.residual(&g);
        assert!(r.evaluated > 20, "{r:?}");
        assert!(r.value < 1e-4, "{r:?}");
    }

    #[test]
    fn tile_naming_and_seams() {
        let s = sc(0.5);
        for a in ["(0,0,+)", "(1/2,-1,-)"] {
            let a: TileAddress = a.parse().unwrap();
            let r = s.tile_naming_residual(&a).unwrap();
            assert!(r < 1e-4, "{a}: {r}");
        }
        let a: TileAddress = "(0,0,+)".parse().unwrap();
        let b: TileAddress = "(0,1,+)".parse().unwrap();
        let edge: Vec<C64> = (1..=20).map(|j| cx(1.0, 0.2 * j as f64)).collect();
        assert!(s.seam_residual(&a, &b, &edge).unwrap() < 1e-6);
        let c: TileAddress = "(0,0,-)".parse().unwrap();
        let crit: Vec<C64> = (1..=20).map(|j| cx(j as f64 / 21.0, 0.0)).collect();
        assert!(s.seam_residual(&a, &c, &crit).unwrap() < 1e-6);
    }
}

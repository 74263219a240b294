//! Linearizing coordinates: the modified Königs coordinate on the attracting
//! basin of f, the Fatou coordinate on the parabolic basin of g, and the
//! degenerating arc system.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{Case, DegenerationPair, QuadMap, C64};
use crate::error::{Error, Result};
use crate::pullback::{root_lift, Hyperbolic};
use crate::rays::periodic_point_near;
use crate::series;
use crate::tess::Side;

/// A point of the hyperbolic model written as W = a + a·t·e^{iφ}, φ ∈ [0, 2π].
/// The upper half plane is φ ∈ [0, π], the cut [a, ∞) is φ = 0 (upper side)
/// or φ = 2π (lower side), and the critical line (−∞, a) is φ = π.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Polar {
    pub t: f64,
    pub phi: f64,
}

impl Polar {
    pub fn new(t: f64, phi: f64) -> Self {
        Self { t, phi }
    }

    pub fn to_w(self, a: f64) -> C64 {
        a + a * C64::from_polar(self.t, self.phi)
    }

    pub fn from_w(w: C64, a: f64) -> Self {
        let d = (w - a) / a;
        Self { t: d.norm(), phi: d.arg().rem_euclid(2.0 * PI) }
    }

    /// Image under F^k.
    pub fn push(self, rho: f64, k: i64) -> Self {
        Self { t: self.t * rho.powi(k as i32), phi: self.phi }
    }
}

const KOENIGS_ORDER: usize = 48;

/// Φ_f with Φ_f(f(z)) = ρΦ_f(z) + 1, Φ_f(0) = 0, Φ_f(α₁) = a.
#[derive(Clone, Debug)]
pub struct KoenigsChart {
    pub c: C64,
    pub alpha1: C64,
    /// Multiplier of f^l at α₁.
    pub lambda: C64,
    pub l: usize,
    pub q: usize,
    pub lbar: usize,
    /// Per-step contraction of the model, r^{q/l}.
    pub rho: f64,
    pub r: f64,
    pub a: f64,
    coeffs: Vec<C64>,
    /// Radius in u = z − α₁ of the series domain.
    pub radius: f64,
    /// Bound on |κ| below which the local inverse is trusted.
    pub kappa_max: f64,
    pub kappa0: C64,
}

/// Where the orbit of z first enters the local disk of a chart.
#[derive(Clone, Copy, Debug)]
pub struct Entry {
    pub n: usize,
    pub u: C64,
    /// (f^n)'(z).
    pub deriv: C64,
}

impl KoenigsChart {
    pub fn new(pair: &DegenerationPair) -> Result<Self> {
        let map = pair.f();
        let l = pair.l as usize;
        let q = pair.q as usize;
        let alpha1 = pair.alpha[0];
        let lambda = pair.alpha_multiplier;
        if lambda.norm() < 1e-8 {
            return Err(Error::numeric("Königs chart needs a nonzero multiplier"));
        }
        let t = series::iterate_series(map.c, alpha1, l, KOENIGS_ORDER);
        // Powers of the map series for the conjugacy recursion.
        let mut powers: Vec<series::Series> = vec![series::zero(KOENIGS_ORDER); KOENIGS_ORDER + 1];
        powers[1] = t.clone();
        for m in 2..=KOENIGS_ORDER {
            powers[m] = series::mul(&powers[m - 1], &t, KOENIGS_ORDER);
        }
        let mut k = series::zero(KOENIGS_ORDER);
        k[1] = C64::new(1.0, 0.0);
        for n in 2..=KOENIGS_ORDER {
            let s: C64 = (1..n).map(|m| k[m] * powers[m][n]).sum();
            k[n] = s / (lambda - lambda.powu(n as u32));
        }
        let mut chart = KoenigsChart {
            c: map.c,
            alpha1,
            lambda,
            l,
            q,
            lbar: pair.lbar(),
            rho: pair.r.powf(q as f64 / l as f64),
            r: pair.r,
            a: 0.0,
            coeffs: k,
            radius: 0.0,
            kappa_max: 0.0,
            kappa0: C64::new(0.0, 0.0),
        };
        chart.a = 1.0 / (1.0 - chart.rho);
        chart.calibrate(&map)?;
        let e = chart.entry(C64::new(0.0, 0.0), 0)?;
        chart.kappa0 = chart.kappa_global(e);
        Ok(chart)
    }

    fn calibrate(&mut self, map: &QuadMap) -> Result<()> {
        let exact = series::iterate_series(map.c, self.alpha1, self.l, 1usize << self.l.min(10));
        let mut ru = 0.5 * self.alpha1.norm().max(1e-3);
        for _ in 0..80 {
            let mut ok = true;
            let mut kmin = f64::INFINITY;
            for j in 0..24 {
                let u = C64::from_polar(ru, 2.0 * PI * j as f64 / 24.0);
                let (ku, _) = series::eval(&self.coeffs, u);
                let (img, _) = series::eval(&exact, u);
                let (kimg, _) = series::eval(&self.coeffs, img);
                if (kimg - self.lambda * ku).norm() > 1e-13 * ku.norm().max(1e-300) {
                    ok = false;
                    break;
                }
                kmin = kmin.min(ku.norm());
            }
            if ok {
                self.radius = ru;
                self.kappa_max = 0.9 * kmin;
                return Ok(());
            }
            ru *= 0.8;
        }
        Err(Error::numeric("Königs series did not reach the required accuracy"))
    }

    pub fn kappa_local(&self, u: C64) -> (C64, C64) {
        series::eval(&self.coeffs, u)
    }

    /// u with κ(u) = k, for |k| below `kappa_max`.
    pub fn kappa_inverse(&self, k: C64) -> Option<C64> {
        if k.norm() > self.kappa_max {
            return None;
        }
        let mut u = k;
        for _ in 0..60 {
            let (v, d) = self.kappa_local(u);
            let step = (v - k) / d;
            u -= step;
            if step.norm() <= 1e-17 + 1e-16 * u.norm() {
                break;
            }
        }
        (u.norm() <= self.radius * 1.0001).then_some(u)
    }

    /// First entry of the orbit into the local disk, then `extra` further
    /// passes of f^l̄ inside it.
    pub fn entry(&self, z: C64, extra: usize) -> Result<Entry> {
        let map = QuadMap::new(self.c);
        let mut w = z;
        let mut d = C64::new(1.0, 0.0);
        for n in 0..2_000_000usize {
            if (w - self.alpha1).norm() < self.radius {
                let mut n = n;
                for _ in 0..extra * self.lbar {
                    d *= 2.0 * w;
                    w = map.f(w);
                    n += 1;
                }
                return Ok(Entry { n, u: w - self.alpha1, deriv: d });
            }
            if w.norm() > 1e3 || !w.is_finite() {
                return Err(Error::numeric(format!("{z} is not in the attracting basin")));
            }
            d *= 2.0 * w;
            w = map.f(w);
        }
        Err(Error::numeric(format!("orbit of {z} did not enter the linearization disk")))
    }

    /// κ of the entry point pulled back along f^l (only meaningful inside U₀).
    fn kappa_global(&self, e: Entry) -> C64 {
        let (k, _) = self.kappa_local(e.u);
        k / self.lambda.powi((e.n / self.l) as i32)
    }

    /// (κ/κ₀)^q of the entry point.
    fn sector_power(&self, u: C64) -> (C64, C64) {
        let (k, dk) = self.kappa_local(u);
        let v = k / self.kappa0;
        let vq = v.powu(self.q as u32);
        let dvq = (self.q as f64) * v.powu(self.q as u32 - 1) * dk / self.kappa0;
        (vq, dvq)
    }

    /// Φ_f(z).
    pub fn phi(&self, z: C64) -> Result<C64> {
        self.phi_deep(z, 0)
    }

    /// Φ_f(z) evaluated after `extra` additional passes of f^l̄.
    pub fn phi_deep(&self, z: C64, extra: usize) -> Result<C64> {
        let e = self.entry(z, extra)?;
        let (vq, _) = self.sector_power(e.u);
        Ok(self.a - self.a * vq * self.rho.powi(-(e.n as i32)))
    }

    /// (Φ_f(z), Φ_f'(z)).
    pub fn phi_jet(&self, z: C64) -> Result<(C64, C64)> {
        let e = self.entry(z, 0)?;
        let (vq, dvq) = self.sector_power(e.u);
        let s = self.rho.powi(-(e.n as i32));
        Ok((self.a - self.a * vq * s, -self.a * s * dvq * e.deriv))
    }

    /// Polar model point of z together with the entry data and the sector
    /// index j ∈ [0, q) of the entry point (sector j has arg(κ/κ₀) near 2πj/q).
    pub fn polar(&self, z: C64) -> Result<(Polar, Entry, usize)> {
        let e = self.entry(z, 0)?;
        let (k, _) = self.kappa_local(e.u);
        let v = k / self.kappa0;
        let q = self.q as f64;
        let sector = ((v.arg() * q / (2.0 * PI)).round() as i64).rem_euclid(self.q as i64) as usize;
        // Rotate into sector 0 and read off (t, φ) there.
        let v0 = v * C64::from_polar(1.0, -2.0 * PI * sector as f64 / q);
        let t = v0.norm().powf(q) * self.rho.powi(-(e.n as i32));
        let phi = (v0.arg() * q + PI).clamp(0.0, 2.0 * PI);
        Ok((Polar::new(t, phi), e, sector))
    }

    /// Largest t handled by the local inverse.
    pub fn t_local(&self) -> f64 {
        (self.kappa_max / self.kappa0.norm()).powf(self.q as f64)
    }

    /// Sector-0 local inverse, defined for t ≤ `t_local`.
    pub fn local_inverse(&self, p: Polar) -> Option<C64> {
        self.local_inverse_sector(p, 0)
    }

    pub fn local_inverse_sector(&self, p: Polar, sector: usize) -> Option<C64> {
        let q = self.q as f64;
        let v = C64::from_polar(p.t.powf(1.0 / q), (p.phi - PI) / q + 2.0 * PI * sector as f64 / q);
        self.kappa_inverse(self.kappa0 * v).map(|u| self.alpha1 + u)
    }

    /// Multiple of l̄ pushes needed to bring t into the local domain.
    pub fn pushes_needed(&self, t: f64) -> usize {
        let tl = self.t_local() * 0.5;
        if t <= tl {
            return 0;
        }
        let steps = ((t / tl).ln() / -self.rho.ln()).ceil() as usize;
        steps.div_ceil(self.lbar) * self.lbar
    }

    /// Residual |Φ(f(z)) − F(Φ(z))| with Φ(z) evaluated one cycle deeper.
    pub fn residual(&self, z: C64) -> Result<f64> {
        let fz = QuadMap::new(self.c).f(z);
        let w0 = self.phi_deep(z, 1)?;
        let w1 = self.phi(fz)?;
        Ok((w1 - (self.rho * w0 + 1.0)).norm())
    }

    /// F^k(0) = a(1 − ρ^k).
    pub fn critical_level(&self, k: i64) -> f64 {
        self.a * (1.0 - self.rho.powi(k as i32))
    }
}

const FATOU_ORDER: usize = 28;

/// Φ_g with Φ_g(g(z)) = Φ_g(z) + 1 and Φ_g(0) = 0.
#[derive(Clone, Debug)]
pub struct FatouChart {
    pub sigma: C64,
    pub beta0: C64,
    pub lbar: usize,
    /// Number of petals of g^l̄ at β₀.
    pub nu: usize,
    /// Coefficient of u^{ν+1} in g^l̄(β₀ + u) − β₀.
    pub b: C64,
    /// Attracting direction of the critical petal.
    pub d0: C64,
    /// e_k for k = −ν..=K, stored at index k + ν.
    coeffs: Vec<C64>,
    pub alpha_log: C64,
    pub radius: f64,
    pub shift: C64,
}

impl FatouChart {
    pub fn new(pair: &DegenerationPair) -> Result<Self> {
        let g = pair.g();
        let lbar = pair.lbar();
        let nu = pair.qprime as usize;
        let beta0 = pair.beta[0];
        let order = FATOU_ORDER + nu + 1;
        let t = series::iterate_series(g.c, beta0, lbar, order);
        if (t[1] - 1.0).norm() > 1e-6 {
            return Err(Error::numeric("β₀ is not parabolic with multiplier 1 for g^l̄"));
        }
        // V(u) = T(u)/u with the vanishing low-order terms set exactly.
        let mut v: series::Series = t[1..].to_vec();
        v[0] = C64::new(1.0, 0.0);
        for c in v.iter_mut().take(nu).skip(1) {
            *c = C64::new(0.0, 0.0);
        }
        let b = v[nu];
        if b.norm() < 1e-8 {
            return Err(Error::numeric("degenerate parabolic point"));
        }
        let jmax = FATOU_ORDER;
        let kmax = jmax as i64 - nu as i64;
        let idx = |k: i64| (k + nu as i64) as usize;
        let mut e = vec![C64::new(0.0, 0.0); (kmax + nu as i64 + 1) as usize];
        // Powers V^k − 1 for each exponent used.
        let vpow: Vec<series::Series> = (-(nu as i64)..=kmax)
            .map(|k| {
                let mut p = series::pow1(&v, k as f64, jmax + nu);
                p[0] -= 1.0;
                p
            })
            .collect();
        let mut lv = v.clone();
        lv.resize(jmax + 2, C64::new(0.0, 0.0));
        lv[0] = C64::new(0.0, 0.0);
        let logv = series::log1p(&lv, jmax + 1);
        let mut alpha = C64::new(0.0, 0.0);
        for j in 0..=jmax as i64 {
            let k = j - nu as i64;
            let mut s = C64::new(0.0, 0.0);
            for kp in -(nu as i64)..k {
                let deg = (j - kp) as usize;
                s += e[idx(kp)] * vpow[idx(kp)].get(deg).copied().unwrap_or_default();
            }
            if k > 0 {
                s += alpha * logv[j as usize];
            }
            let rhs = if j == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) } - s;
            if k == 0 {
                alpha = rhs / b;
            } else {
                e[idx(k)] = rhs / (k as f64 * b);
            }
        }
        // Critical petal direction from the orbit of 0.
        let mut z = C64::new(0.0, 0.0);
        for _ in 0..20_000 {
            z = g.iterate(z, lbar);
        }
        let approach = (z - beta0) / (z - beta0).norm();
        // Attracting directions satisfy arg(b·u^ν) = π.
        let base = -b.conj() / b.norm();
        let d0 = (0..nu)
            .map(|j| (base.arg() + 2.0 * PI * j as f64) / nu as f64)
            .map(|th| C64::from_polar(1.0, th))
            .min_by(|x, y| (x - approach).norm().total_cmp(&(y - approach).norm()))
            .unwrap();
        let mut chart =
            FatouChart { sigma: g.c, beta0, lbar, nu, b, d0, coeffs: e, alpha_log: alpha, radius: 0.0, shift: C64::new(0.0, 0.0) };
        chart.calibrate(&g)?;
        let z0 = chart.phi_raw(C64::new(0.0, 0.0), 0)?;
        chart.shift = -z0;
        Ok(chart)
    }

    fn calibrate(&mut self, g: &QuadMap) -> Result<()> {
        // Exact Taylor polynomial of g^l̄ at β₀, accurate relative to |u|.
        let exact = series::iterate_series(g.c, self.beta0, self.lbar, 1usize << self.lbar.min(10));
        let mut ru = 0.5 * (self.beta0.norm()).max(0.05);
        for _ in 0..80 {
            let mut ok = true;
            for j in 0..9 {
                let ang = (j as f64 / 8.0 - 0.5) * 1.5 * PI / self.nu as f64;
                let u = self.d0 * C64::from_polar(ru, ang);
                let (img, _) = series::eval(&exact, u);
                let (p0, _) = self.phi_local(u);
                let (p1, _) = self.phi_local(img);
                if (p1 - p0 - 1.0).norm() > 1e-12 {
                    ok = false;
                    break;
                }
            }
            if ok {
                self.radius = ru;
                return Ok(());
            }
            ru *= 0.8;
        }
        Err(Error::numeric("Fatou expansion did not reach the required accuracy"))
    }

    /// Local Fatou coordinate of g^l̄ and its derivative.
    pub fn phi_local(&self, u: C64) -> (C64, C64) {
        let nu = self.nu as i64;
        let mut v = self.alpha_log * (u / self.d0).ln();
        let mut d = self.alpha_log / u;
        let inv = 1.0 / u;
        for (i, e) in self.coeffs.iter().enumerate() {
            let k = i as i64 - nu;
            if *e == C64::new(0.0, 0.0) {
                continue;
            }
            let pk = if k >= 0 { u.powi(k as i32) } else { inv.powi((-k) as i32) };
            v += e * pk;
            if k != 0 {
                d += e * (k as f64) * pk / u;
            }
        }
        (v, d)
    }

    fn in_domain(&self, u: C64) -> bool {
        u.norm() < self.radius && (u / self.d0).arg().abs() < 0.8 * PI / self.nu as f64
    }

    pub fn entry(&self, z: C64, extra: usize) -> Result<Entry> {
        let g = QuadMap::new(self.sigma);
        let mut w = z;
        let mut d = C64::new(1.0, 0.0);
        for n in 0..5_000_000usize {
            if self.in_domain(w - self.beta0) {
                let mut n = n;
                for _ in 0..extra * self.lbar {
                    d *= 2.0 * w;
                    w = g.f(w);
                    n += 1;
                }
                return Ok(Entry { n, u: w - self.beta0, deriv: d });
            }
            if w.norm() > 1e3 || !w.is_finite() {
                return Err(Error::numeric(format!("{z} is not in the parabolic basin")));
            }
            d *= 2.0 * w;
            w = g.f(w);
        }
        Err(Error::numeric(format!("orbit of {z} did not enter the petal")))
    }

    fn phi_raw(&self, z: C64, extra: usize) -> Result<C64> {
        let e = self.entry(z, extra)?;
        let (p, _) = self.phi_local(e.u);
        Ok(self.lbar as f64 * p - e.n as f64)
    }

    pub fn phi(&self, z: C64) -> Result<C64> {
        self.phi_deep(z, 0)
    }

    pub fn phi_deep(&self, z: C64, extra: usize) -> Result<C64> {
        Ok(self.phi_raw(z, extra)? + self.shift)
    }

    pub fn phi_jet(&self, z: C64) -> Result<(C64, C64)> {
        let e = self.entry(z, 0)?;
        let (p, dp) = self.phi_local(e.u);
        Ok((self.lbar as f64 * p - e.n as f64 + self.shift, self.lbar as f64 * dp * e.deriv))
    }

    /// Point of the critical petal with Φ_g = `w`, if the leading-order guess
    /// lands inside the trusted domain.
    pub fn local_inverse(&self, w: C64) -> Option<C64> {
        let target = (w - self.shift) / self.lbar as f64;
        let lead = self.coeffs[0];
        let un = lead / target;
        let nu = self.nu as f64;
        let r = un.norm().powf(1.0 / nu);
        let mut u = (0..self.nu)
            .map(|j| C64::from_polar(r, (un.arg() + 2.0 * PI * j as f64) / nu))
            .min_by(|x, y| (x / r - self.d0).norm().total_cmp(&(y / r - self.d0).norm()))?;
        for _ in 0..80 {
            let (p, d) = self.phi_local(u);
            let step = (p - target) / d;
            u -= step;
            if !u.is_finite() {
                return None;
            }
            if step.norm() < 1e-16 * u.norm() + 1e-300 {
                break;
            }
        }
        let (p, _) = self.phi_local(u);
        (self.in_domain(u) && (p - target).norm() < 1e-9 * (1.0 + target.norm())).then_some(self.beta0 + u)
    }

    /// Smallest real part guaranteeing the local inverse on the whole vertical line.
    pub fn deep_re(&self) -> f64 {
        let lead = self.coeffs[0].norm();
        let base = lead / (0.5 * self.radius).powf(self.nu as f64);
        self.lbar as f64 * base + self.alpha_log.norm() * 40.0 + self.shift.norm() + 2.0
    }

    pub fn residual(&self, z: C64) -> Result<f64> {
        let gz = QuadMap::new(self.sigma).f(z);
        let w0 = self.phi_deep(z, 1)?;
        let w1 = self.phi(gz)?;
        Ok((w1 - w0 - 1.0).norm())
    }
}

/// Both charts of a pair.
#[derive(Clone, Debug)]
pub struct Charts {
    pub pair: DegenerationPair,
    pub koenigs: KoenigsChart,
    pub fatou: FatouChart,
}

impl Charts {
    pub fn new(pair: &DegenerationPair) -> Result<Self> {
        Ok(Self { pair: pair.clone(), koenigs: KoenigsChart::new(pair)?, fatou: FatouChart::new(pair)? })
    }

    pub fn case(&self) -> Case {
        self.pair.case
    }
}

pub fn koenigs_chart(pair: &DegenerationPair) -> Result<KoenigsChart> {
    KoenigsChart::new(pair)
}

pub fn fatou_chart(pair: &DegenerationPair) -> Result<FatouChart> {
    FatouChart::new(pair)
}

const BASIN_STEPS: usize = 4000;

/// Random points of the basin of the attracting cycle of f (hyperbolic side)
/// or of the parabolic cycle of g (parabolic side), drawn uniformly from the
/// square |Re|, |Im| ≤ 2 and kept when the orbit has settled near the cycle.
pub fn basin_samples(pair: &DegenerationPair, side: Side, n: usize, seed: u64) -> Result<Vec<C64>> {
    let (map, cycle, tol) = match side {
        Side::Hyperbolic => (pair.f(), &pair.alpha, 1e-6),
        Side::Parabolic => (pair.g(), &pair.beta, 5e-2),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut tries = 0;
    while out.len() < n {
        tries += 1;
        if tries > 1000 * n.max(1) {
            return Err(Error::numeric(format!("found only {} of {n} basin samples", out.len())));
        }
        let z0 = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let mut z = z0;
        for _ in 0..BASIN_STEPS {
            z = map.f(z);
            if !(z.norm() < 4.0) {
                break;
            }
        }
        if z.norm() < 4.0 && cycle.iter().any(|b| (z - b).norm() < tol) {
            out.push(z0);
        }
    }
    Ok(out)
}

/// Samples per level along cut paths when ρ = 1/2.
pub const SAMPLES_PER_LEVEL: usize = 24;

/// Levels of the hyperbolic model, t = ρ^λ, from `from` to `to` on the grid
/// λ ∈ ℤ/n, inclusive of both grid ends.
pub fn level_grid(from: f64, to: f64, n: usize) -> Vec<f64> {
    let (a, b) = ((from * n as f64).round() as i64, (to * n as f64).round() as i64);
    let step = if b >= a { 1 } else { -1 };
    let mut out = Vec::with_capacity((b - a).unsigned_abs() as usize + 1);
    let mut j = a;
    loop {
        out.push(j as f64 / n as f64);
        if j == b {
            break;
        }
        j += step;
    }
    out
}

impl KoenigsChart {
    /// Samples per level giving the same spacing in log t as `base` does at ρ = 1/2.
    pub fn samples_per_level(&self, base: usize) -> usize {
        ((base as f64 * self.rho.ln() / 0.5f64.ln()).ceil() as usize).max(1)
    }

    /// Grid level at which every point is in the local chart without pushing.
    pub fn anchor_level(&self, n: usize) -> f64 {
        let lam = (0.5 * self.t_local()).ln() / self.rho.ln();
        (lam * n as f64).ceil() / n as f64
    }

    /// The cut φ ∈ {0, 2π} of sector `sector`, from the deep anchor out to level `-far`,
    /// pulled back into the dynamical plane.
    pub fn cut_path(&self, sector: usize, phi: f64, far: f64) -> Result<Vec<C64>> {
        let n = self.samples_per_level(SAMPLES_PER_LEVEL);
        let lv = level_grid(self.anchor_level(n), -far, n);
        let path: Vec<Polar> = lv.iter().map(|&l| Polar::new(self.rho.powf(l), phi)).collect();
        let model = Hyperbolic { chart: self, sector };
        Ok(root_lift(&model, &[path], &[vec![]])?.paths.remove(0))
    }

    /// The deep loop |W − a| = ρ^m·a around α₁ through all sectors, φ = 0 of sector 0 first.
    fn deep_loop(&self, m: f64, samples: usize) -> Option<Vec<C64>> {
        let t = self.rho.powf(m);
        let mut out = Vec::with_capacity(samples * self.q);
        for j in 0..self.q {
            for i in 0..samples {
                let phi = 2.0 * PI * i as f64 / samples as f64;
                out.push(self.local_inverse_sector(Polar::new(t, phi), j)?);
            }
        }
        Some(out)
    }

    /// Boundary of the component of {|Φ − a| < ρ^m·a} containing α₁, as a
    /// closed polyline. Once the component contains 0 the curve covers the
    /// model circle several times; at the level through 0 it has a corner there.
    pub fn equipotential(&self, m: i64, samples: usize) -> Result<Vec<C64>> {
        let map = QuadMap::new(self.c);
        let k = self.pushes_needed(self.rho.powi(m as i32));
        let mut lp = self.deep_loop(m as f64 + k as f64, samples).ok_or_else(|| Error::numeric("deep equipotential outside the chart"))?;
        // Orbit of the curve's point on the cut anchors each lift.
        let z_end = *self.cut_path(0, 0.0, -(m as f64))?.last().unwrap();
        let orbit: Vec<C64> = (0..=k)
            .scan(z_end, |z, _| {
                let cur = *z;
                *z = map.f(*z);
                Some(cur)
            })
            .collect();
        for i in 1..=k {
            let anchor = orbit[k - i];
            if let Some(ic) = lp.iter().position(|z| (z - self.c).norm() < 1e-12) {
                // Through the critical value: the boundary is one lobe of a figure
                // eight at 0; take the lobe passing through the anchor.
                let mut path: Vec<C64> = lp[ic..].iter().chain(lp[..=ic].iter()).copied().collect();
                path[0] = self.c;
                *path.last_mut().unwrap() = self.c;
                let lift = map.lift_path(&path, C64::new(0.0, 0.0));
                let neg: Vec<C64> = lift.iter().map(|z| -z).collect();
                let d = |l: &[C64]| crate::geom::polyline_dist(anchor, l);
                lp = if d(&lift) <= d(&neg) { lift } else { neg };
                lp.pop();
                continue;
            }
            let closed = crate::geom::winding(&lp, self.c).abs() > 0.5;
            let path: Vec<C64> = if closed { lp.iter().chain(lp.iter()).copied().collect() } else { lp.clone() };
            lp = map.lift_path(&path, anchor);
        }
        Ok(lp)
    }
}

/// A star-shaped arc: branches that all start at `center`.
#[derive(Clone, Debug, Serialize)]
pub struct Arc {
    pub depth: usize,
    /// Preimage word: one bit per lift, outermost first.
    pub word: String,
    pub center: C64,
    pub branches: Vec<Vec<C64>>,
}

impl Arc {
    pub fn ends(&self) -> Vec<C64> {
        self.branches.iter().map(|b| *b.last().unwrap()).collect()
    }

    fn lift(&self, map: &QuadMap, bit: bool) -> Arc {
        let [s0, s1] = map.preimages(self.center);
        let root = if bit { s1 } else { s0 };
        Arc {
            depth: self.depth + 1,
            word: format!("{}{}", if bit { '1' } else { '0' }, self.word),
            center: root,
            branches: self.branches.iter().map(|b| map.lift_path(b, root)).collect(),
        }
    }

    /// Arcs are told apart by their centers, which are distinct preimages of one point.
    fn same_as(&self, other: &Arc, tol: f64) -> bool {
        (self.center - other.center).norm() < tol
    }
}

/// Arcs of depth ≤ `depth`, grouped by increasing depth.
#[derive(Clone, Debug, Serialize)]
pub struct ArcSet {
    pub depth: usize,
    pub arcs: Vec<Arc>,
}

impl ArcSet {
    pub fn at_depth(&self, k: usize) -> impl Iterator<Item = &Arc> {
        self.arcs.iter().filter(move |a| a.depth == k)
    }
}

/// Levels beyond 0 used to reach the repelling ends of the arms.
pub const ARM_LEVELS: f64 = 24.0;
const MAX_ARM_LEVELS: f64 = 6144.0;
/// Largest accepted distance between an arm's last sample and its end.
pub const ARM_GAP: f64 = 1e-3;

/// The invariant star of f: the q arms at α₁ in Case (a), or the q′ arms
/// joining the repelling center to the attracting cycle in Case (b).
pub fn invariant_arc(pair: &DegenerationPair) -> Result<ArcSet> {
    let chart = KoenigsChart::new(pair)?;
    invariant_arc_with(&chart, pair)
}

pub fn invariant_arc_with(chart: &KoenigsChart, pair: &DegenerationPair) -> Result<ArcSet> {
    let map = pair.f();
    let arm = |sector: usize| cut_arm(chart, &map, pair.lbar(), sector).map(|(a, _)| a);
    let arc = match pair.case {
        Case::A => {
            let mut branches = Vec::with_capacity(chart.q);
            for j in 0..chart.q {
                branches.push(arm(j)?);
            }
            Arc { depth: 0, word: String::new(), center: chart.alpha1, branches }
        }
        Case::B => {
            let mut arm = arm(0)?;
            let center = *arm.last().unwrap();
            arm.reverse();
            let step = pair.lprime as usize;
            let branches = (0..pair.qprime as usize).map(|j| arm.iter().map(|&z| map.iterate(z, j * step)).collect()).collect();
            Arc { depth: 0, word: String::new(), center, branches }
        }
    };
    Ok(ArcSet { depth: 0, arcs: vec![arc] })
}

/// The cut of `sector` from α₁ to the repelling periodic point it lands on,
/// with the number of levels beyond 0 it took. Arms are lengthened until
/// Newton from the tail finds the repelling end nearby.
pub fn cut_arm(chart: &KoenigsChart, map: &QuadMap, lbar: usize, sector: usize) -> Result<(Vec<C64>, f64)> {
    let mut far = ARM_LEVELS;
    while far <= MAX_ARM_LEVELS {
        let mut arm = vec![chart.alpha1];
        arm.extend(chart.cut_path(sector, 0.0, far)?);
        let tail = *arm.last().unwrap();
        if let Some((p, mult)) = periodic_point_near(map, tail, lbar) {
            if mult.norm() > 1.0 && (p - tail).norm() < ARM_GAP {
                arm.push(p);
                return Ok((arm, far));
            }
        }
        far *= 2.0;
    }
    Err(Error::numeric("arm does not reach a repelling periodic point"))
}

/// All preimages of the invariant star up to `depth`.
pub fn degenerating_arcs(pair: &DegenerationPair, depth: usize) -> Result<ArcSet> {
    let base = invariant_arc(pair)?;
    Ok(extend_arcs(&pair.f(), base, depth))
}

pub fn extend_arcs(map: &QuadMap, base: ArcSet, depth: usize) -> ArcSet {
    let mut arcs = base.arcs;
    let mut frontier: Vec<usize> = (0..arcs.len()).collect();
    for _ in 0..depth {
        let mut next = Vec::new();
        for &i in &frontier {
            for bit in [false, true] {
                let cand = arcs[i].lift(map, bit);
                if !arcs.iter().any(|a| cand.same_as(a, 1e-8)) {
                    arcs.push(cand);
                    next.push(arcs.len() - 1);
                }
            }
        }
        frontier = next;
    }
    ArcSet { depth, arcs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{cx, PairSpec};
    use crate::geom::winding;

    fn cauli() -> DegenerationPair {
        PairSpec::cauliflower(0.5).resolve().unwrap()
    }

    #[test]
    fn koenigs_cauliflower_values() {
        let k = KoenigsChart::new(&cauli()).unwrap();
        assert!((k.a - 2.0).abs() < 1e-15);
        assert!((k.phi(cx(0.25, 0.0)).unwrap() - cx(2.0, 0.0)).norm() < 1e-12);
        assert!(k.phi(cx(0.0, 0.0)).unwrap().norm() < 1e-12);
        assert!(k.residual(cx(0.3, 0.0)).unwrap() < 1e-9);
        assert!(k.residual(cx(-0.2, 0.3)).unwrap() < 1e-9);
        // Φ is a real-analytic map of the real basin with Φ(c) = F(0) = 1.
        assert!((k.phi(cx(3.0 / 16.0, 0.0)).unwrap() - cx(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn koenigs_local_inverse_round_trip() {
        for spec in [PairSpec::cauliflower(0.5), PairSpec::rabbits(0.9, Case::A), PairSpec::rabbits(0.9, Case::B)] {
            let k = KoenigsChart::new(&spec.resolve().unwrap()).unwrap();
            for (t, phi) in [(0.1, 0.3), (0.5, 2.0), (0.9, 5.5)] {
                let p = Polar::new(k.t_local() * t, phi);
                let z = k.local_inverse(p).unwrap();
                let (back, e, sector) = k.polar(z).unwrap();
                assert_eq!((e.n, sector), (0, 0));
                assert!((back.t / p.t - 1.0).abs() < 1e-9 && (back.phi - p.phi).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fatou_cauliflower_values() {
        let f = FatouChart::new(&cauli()).unwrap();
        let g = QuadMap::new(cx(0.25, 0.0));
        assert!(f.phi(cx(0.0, 0.0)).unwrap().norm() < 1e-12);
        assert!((f.phi(g.f(cx(0.0, 0.0))).unwrap() - cx(1.0, 0.0)).norm() < 1e-9);
        assert!((f.phi(g.iterate(cx(0.0, 0.0), 5)).unwrap() - cx(5.0, 0.0)).norm() < 1e-9);
        for z in [cx(0.3, 0.1), cx(-0.2, 0.3), cx(0.45, -0.02)] {
            assert!(f.residual(z).unwrap() < 1e-6);
        }
        let z = f.local_inverse(cx(200.0, 7.0)).unwrap();
        assert!((f.phi(z).unwrap() - cx(200.0, 7.0)).norm() < 1e-8);
    }

    #[test]
    fn charts_for_all_examples() {
        for spec in [PairSpec::rabbits(0.9, Case::A), PairSpec::rabbits(0.9, Case::B), PairSpec::airplanes(0.5)] {
            let pair = spec.resolve().unwrap();
            let ch = Charts::new(&pair).unwrap();
            assert!(ch.koenigs.phi(cx(0.0, 0.0)).unwrap().norm() < 1e-10);
            let crit = pair.c;
            assert!((ch.koenigs.phi(crit).unwrap() - 1.0).norm() < 1e-9);
            assert!(ch.koenigs.residual(cx(0.01, 0.02)).unwrap() < 1e-8);
            assert!((ch.fatou.phi(pair.sigma).unwrap() - 1.0).norm() < 1e-8);
            assert!(ch.fatou.residual(cx(0.01, 0.02)).unwrap() < 1e-6);
        }
    }

    #[test]
    fn cauliflower_invariant_arc_is_real_segment() {
        let set = invariant_arc(&cauli()).unwrap();
        assert_eq!(set.arcs.len(), 1);
        let arm = &set.arcs[0].branches[0];
        assert!((arm[0] - cx(0.25, 0.0)).norm() < 1e-14);
        assert!((arm.last().unwrap() - cx(0.75, 0.0)).norm() < 1e-12);
        assert!(arm.iter().all(|z| z.im.abs() < 1e-12 && z.re >= 0.25 - 1e-12 && z.re <= 0.75 + 1e-12));
        assert!(arm.windows(2).all(|w| w[1].re >= w[0].re - 1e-15));
    }

    #[test]
    fn cauliflower_depth_one_adds_the_mirror_segment() {
        let set = degenerating_arcs(&cauli(), 1).unwrap();
        let new: Vec<&Arc> = set.at_depth(1).collect();
        assert_eq!(new.len(), 1);
        let arm = &new[0].branches[0];
        assert!((arm[0] - cx(-0.25, 0.0)).norm() < 1e-12);
        assert!((arm.last().unwrap() - cx(-0.75, 0.0)).norm() < 1e-9);
        assert!(arm.iter().all(|z| z.im.abs() < 1e-12));
    }

    /// Brute-force oracles: centers of depth-≤k arcs are the backward orbit of
    /// α₁, and the real arcs are the real preimages of real intervals.
    #[test]
    fn cauliflower_component_counts_match_oracles() {
        let c = 3.0 / 16.0;
        let set = degenerating_arcs(&cauli(), 6).unwrap();
        let mut pts = vec![cx(0.25, 0.0)];
        let mut all = pts.clone();
        let mut intervals = vec![(0.25f64, 0.75f64)];
        let mut real_total = 1;
        for k in 1..=6 {
            let mut next = Vec::new();
            for p in &pts {
                for s in [(p - c).sqrt(), -(p - c).sqrt()] {
                    if !all.iter().any(|q: &C64| (q - s).norm() < 1e-9) {
                        all.push(s);
                        next.push(s);
                    }
                }
            }
            pts = next;
            let mut ivs = Vec::new();
            for &(x, y) in &intervals {
                if x - c >= 0.0 {
                    let (u, v) = ((x - c).sqrt(), (y - c).sqrt());
                    ivs.push((u, v));
                    ivs.push((-u, -v));
                }
            }
            ivs.retain(|&(u, _)| (u - 0.25).abs() > 1e-12 || k == 0);
            let fresh: Vec<(f64, f64)> = ivs.iter().copied().filter(|&(u, _)| (u - 0.25).abs() > 1e-12).collect();
            real_total += fresh.iter().filter(|iv| !intervals.contains(iv)).count();
            intervals = fresh;
            assert_eq!(set.arcs.iter().filter(|a| a.depth <= k).count(), all.len(), "depth {k}");
            let real = set.arcs.iter().filter(|a| a.depth <= k && a.branches.iter().flatten().all(|z| z.im.abs() < 1e-9)).count();
            assert_eq!(real, real_total, "real arcs at depth {k}");
        }
    }

    #[test]
    fn arcs_map_onto_shallower_arcs() {
        let pair = cauli();
        let set = degenerating_arcs(&pair, 4).unwrap();
        let f = pair.f();
        for a in set.arcs.iter().filter(|a| a.depth > 0) {
            let img = f.f(a.center);
            let target = set.arcs.iter().find(|b| b.depth + 1 == a.depth && (b.center - img).norm() < 1e-9);
            let target = target.expect("image arc");
            for (br, tb) in a.branches.iter().zip(&target.branches) {
                for (z, w) in br.iter().zip(tb) {
                    assert!((f.f(*z) - w).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn rabbit_star_ends_at_landing_points() {
        use crate::angles::Angle;
        use crate::rays::landing_point;
        for case in [Case::A, Case::B] {
            let pair = PairSpec::rabbits(0.9, case).resolve().unwrap();
            let set = invariant_arc(&pair).unwrap();
            let arc = &set.arcs[0];
            assert_eq!(arc.branches.len(), 3);
            let lands: Vec<C64> = (1..7).map(|k| landing_point(pair.c, &Angle::frac(k, 7)).unwrap()).collect();
            // The repelling points are the arm ends in Case (a) and the center in Case (b).
            let repelling = if case == Case::A { arc.ends() } else { vec![arc.center] };
            for e in repelling {
                assert!(lands.iter().any(|w| (w - e).norm() < 1e-7), "{case} {e}");
            }
        }
    }

    #[test]
    fn equipotentials_are_nested() {
        for spec in [PairSpec::cauliflower(0.5), PairSpec::rabbits(0.9, Case::A)] {
            let k = KoenigsChart::new(&spec.resolve().unwrap()).unwrap();
            let curves: Vec<Vec<C64>> = (-2..=3).map(|m| k.equipotential(m, 256).unwrap()).collect();
            for (i, cur) in curves.iter().enumerate() {
                assert!((winding(cur, k.alpha1) - 1.0).abs() < 1e-6);
                if let Some(inner) = curves.get(i + 1) {
                    for z in inner.iter().step_by(9) {
                        assert!((winding(cur, *z) - 1.0).abs() < 1e-6);
                    }
                }
            }
        }
    }
}

//! Command line front end.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::angles::{characteristic_angles, cycle_angles, ptilde, Angle, CycleSet, OrbitMeta};
use crate::dynamics::{Case, DegenerationPair, PairSpec, C64};
use crate::error::{Error, Result};
use crate::export::{to_json, write_json, write_text};
use crate::henon::{sample_backward_julia, shadow_trials, HenonMap, HenonOrbit, JuliaSample};
use crate::linearize::basin_samples;
use crate::natext::BackwardOrbit;
use crate::quotient::{gluing_table, verify_twist};
use crate::rays::{green, ray, RayParams};
use crate::render::{address_color, polylines_svg, save_png, tiles_png, tiles_svg, Window};
use crate::semiconj::{default_window, grid, Residual, Semiconjugacy};
use crate::tess::{sample_address_pairs, Resolution, Side, Tessellation, Tile};

#[derive(Parser, Debug)]
#[command(name = "lamina", version, about = "Tessellations, pinching semiconjugacies and lower ends of degeneration pairs")]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand; each may also be set in the config file.
#[derive(Args, Debug, Default, Clone)]
struct Flags {
    /// Pair as p/q:lprime:r:A|B[:re,im] or a preset (cauliflower, rabbits-a, rabbits-b, airplanes).
    #[arg(long, global = true)]
    pair: Option<String>,
    /// Inclusive level range a:b.
    #[arg(long, global = true, allow_hyphen_values = true)]
    levels: Option<String>,
    /// Pull-back depth of angles, or Ω depth for gluing tables.
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Image width in pixels, or grid size for residual checks.
    #[arg(long, global = true)]
    res: Option<usize>,
    /// Tolerance of the residual or ray check.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed of the random samplers.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat key = value file with defaults for these flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// hyperbolic, parabolic or both.
    #[arg(long, global = true)]
    side: Option<String>,
    /// Second pair for `twist compare`.
    #[arg(long, global = true)]
    other: Option<String>,
    /// Hénon Jacobian as re or re,im.
    #[arg(long, global = true, allow_hyphen_values = true)]
    jacobian: Option<String>,
    /// Comma-separated angles num/den.
    #[arg(long, global = true)]
    angles: Option<String>,
    /// Rotation number p/q for `theta`.
    #[arg(long, global = true)]
    rotation: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Resolve and classify a degeneration pair.
    Pair,
    /// Angle cycles and characteristic angles.
    Theta,
    /// Trace external rays.
    Rays,
    /// Tessellation tiles.
    Tess {
        #[command(subcommand)]
        action: TessAction,
    },
    /// Pinching semiconjugacy.
    Semiconj {
        #[command(subcommand)]
        action: SemiconjAction,
    },
    /// Lower-end gluing tables.
    Quotient {
        #[command(subcommand)]
        action: QuotientAction,
    },
    /// Compare the gluing tables of two cases.
    Twist {
        #[command(subcommand)]
        action: TwistAction,
    },
    /// Hénon shadow addresses.
    Henon {
        #[command(subcommand)]
        action: HenonAction,
    },
    /// Run the invariant suite and write a JUnit-style report.
    Verify,
}

#[derive(Subcommand, Debug)]
enum TessAction {
    /// Build tiles and draw them.
    Render,
}

#[derive(Subcommand, Debug)]
enum SemiconjAction {
    /// Residual of h∘f = g∘h on a grid and the h field.
    Check,
}

#[derive(Subcommand, Debug)]
enum QuotientAction {
    /// Gluing table of degenerating edges of the lower end.
    Table,
}

#[derive(Subcommand, Debug)]
enum TwistAction {
    /// Compare the gluing tables of two pairs.
    Compare,
}

#[derive(Subcommand, Debug)]
enum HenonAction {
    /// Draw the x-plane coloured by shadowed address.
    Render,
}

/// Resolved settings of one run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunConfig {
    pub pair: Option<String>,
    pub levels: Option<(i64, i64)>,
    pub depth: Option<usize>,
    pub res: Option<usize>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub side: Option<String>,
    pub other: Option<String>,
    pub jacobian: Option<C64>,
    pub angles: Option<Vec<Angle>>,
    pub rotation: Option<(u64, u64)>,
}

const KEYS: [&str; 12] = ["pair", "levels", "depth", "res", "tol", "out", "seed", "side", "other", "jacobian", "angles", "rotation"];

/// Parses a flat `key = value` file; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::input(format!("config line {}: expected key = value", n + 1)))?;
        let k = k.trim().trim_start_matches("--").to_string();
        if !KEYS.contains(&k.as_str()) {
            return Err(Error::input(format!("config line {}: unknown key {k:?}", n + 1)));
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

/// Inclusive level range `a:b`.
pub fn parse_levels(s: &str) -> Result<(i64, i64)> {
    let bad = || Error::input(format!("invalid level range {s:?}; expected a:b"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn parse_complex(s: &str) -> Result<C64> {
    let bad = || Error::input(format!("invalid complex number {s:?}"));
    let mut it = s.split(',').map(|p| p.trim().parse::<f64>().map_err(|_| bad()));
    let re = it.next().ok_or_else(bad)??;
    let im = it.next().transpose()?.unwrap_or(0.0);
    if it.next().is_some() {
        return Err(bad());
    }
    Ok(C64::new(re, im))
}

fn parse_rotation(s: &str) -> Result<(u64, u64)> {
    let bad = || Error::input(format!("invalid rotation number {s:?}"));
    let (p, q) = s.split_once('/').ok_or_else(bad)?;
    Ok((p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?))
}

impl RunConfig {
    /// Flag values override the config file.
    fn from_flags(flags: &Flags) -> Result<Self> {
        let file = match &flags.config {
            Some(p) => parse_config(&std::fs::read_to_string(p).map_err(|e| Error::input(format!("cannot read {}: {e}", p.display())))?)?,
            None => BTreeMap::new(),
        };
        let pick = |flag: &Option<String>, key: &str| flag.clone().or_else(|| file.get(key).cloned());
        let num = |flag: Option<String>, key: &str| -> Result<Option<String>> { Ok(flag.or_else(|| file.get(key).cloned())) };
        let parse_usize = |v: Option<String>, key: &str| -> Result<Option<usize>> {
            v.map(|s| s.parse::<usize>().map_err(|_| Error::input(format!("invalid {key} {s:?}")))).transpose()
        };
        let cfg = Self {
            pair: pick(&flags.pair, "pair"),
            levels: pick(&flags.levels, "levels").map(|s| parse_levels(&s)).transpose()?,
            depth: parse_usize(num(flags.depth.map(|v| v.to_string()), "depth")?, "depth")?,
            res: parse_usize(num(flags.res.map(|v| v.to_string()), "res")?, "res")?,
            tol: num(flags.tol.map(|v| v.to_string()), "tol")?
                .map(|s| s.parse::<f64>().map_err(|_| Error::input(format!("invalid tol {s:?}"))))
                .transpose()?,
            out: flags.out.clone().or_else(|| file.get("out").map(PathBuf::from)),
            seed: num(flags.seed.map(|v| v.to_string()), "seed")?
                .map(|s| s.parse::<u64>().map_err(|_| Error::input(format!("invalid seed {s:?}"))))
                .transpose()?,
            side: pick(&flags.side, "side"),
            other: pick(&flags.other, "other"),
            jacobian: pick(&flags.jacobian, "jacobian").map(|s| parse_complex(&s)).transpose()?,
            angles: pick(&flags.angles, "angles")
                .map(|s| s.split(',').map(|a| a.trim().parse::<Angle>()).collect::<Result<Vec<_>>>())
                .transpose()?,
            rotation: pick(&flags.rotation, "rotation").map(|s| parse_rotation(&s)).transpose()?,
        };
        if let Some(t) = cfg.tol {
            if !(t > 0.0) {
                return Err(Error::input("tol must be positive"));
            }
        }
        if cfg.res == Some(0) {
            return Err(Error::input("res must be positive"));
        }
        Ok(cfg)
    }

    fn pair_spec(&self, default: &str) -> Result<PairSpec> {
        self.pair.as_deref().unwrap_or(default).parse()
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    fn sides(&self) -> Result<Vec<Side>> {
        match self.side.as_deref().unwrap_or("both") {
            "both" => Ok(vec![Side::Hyperbolic, Side::Parabolic]),
            "hyperbolic" | "f" => Ok(vec![Side::Hyperbolic]),
            "parabolic" | "g" => Ok(vec![Side::Parabolic]),
            other => Err(Error::input(format!("unknown side {other:?}"))),
        }
    }
}

/// Resolves a pair; solver failures count as input errors.
pub fn resolve_pair(spec: &PairSpec) -> Result<DegenerationPair> {
    spec.resolve().map_err(|e| match e {
        Error::Numeric(m) => Error::input(format!("pair could not be resolved: {m}")),
        other => other,
    })
}

#[derive(Serialize)]
struct PairReport {
    c: C64,
    sigma: C64,
    r: f64,
    p: u64,
    q: u64,
    l: u64,
    pprime: u64,
    qprime: u64,
    lprime: u64,
    lbar: usize,
    case: Case,
    theta0_plus: Angle,
    theta0_minus: Angle,
    ptilde: i64,
    alpha: Vec<C64>,
    alpha_multiplier: C64,
    beta: Vec<C64>,
}

fn pair_report(pair: &DegenerationPair) -> Result<PairReport> {
    let (tp, tm) = characteristic_angles(pair)?;
    Ok(PairReport {
        c: pair.c,
        sigma: pair.sigma,
        r: pair.r,
        p: pair.p,
        q: pair.q,
        l: pair.l,
        pprime: pair.pprime,
        qprime: pair.qprime,
        lprime: pair.lprime,
        lbar: pair.lbar(),
        case: pair.case,
        theta0_plus: tp,
        theta0_minus: tm,
        ptilde: ptilde(pair.pprime as i64, pair.qprime as i64)?,
        alpha: pair.alpha.clone(),
        alpha_multiplier: pair.alpha_multiplier,
        beta: pair.beta.clone(),
    })
}

/// Prints JSON and also writes it when an output path was given.
fn emit_json<T: Serialize>(cfg: &RunConfig, value: &T) -> Result<()> {
    let s = to_json(value)?;
    if let Some(p) = &cfg.out {
        write_text(p, &s)?;
    }
    print!("{s}");
    Ok(())
}

fn cmd_pair(cfg: &RunConfig) -> Result<i32> {
    let pair = resolve_pair(&cfg.pair_spec("cauliflower")?)?;
    emit_json(cfg, &pair_report(&pair)?)?;
    Ok(0)
}

#[derive(Serialize)]
struct ThetaReport {
    cycle: CycleSet,
    theta0_plus: Option<Angle>,
    theta0_minus: Option<Angle>,
    orbit_plus: Option<OrbitMeta>,
    orbit_minus: Option<OrbitMeta>,
    ptilde: i64,
}

fn cmd_theta(cfg: &RunConfig) -> Result<i32> {
    let report = match (cfg.rotation, &cfg.pair) {
        (Some((p, q)), None) => ThetaReport {
            cycle: cycle_angles(p, q)?,
            theta0_plus: None,
            theta0_minus: None,
            orbit_plus: None,
            orbit_minus: None,
            ptilde: ptilde(p as i64, q as i64)?,
        },
        _ => {
            let pair = resolve_pair(&cfg.pair_spec("cauliflower")?)?;
            let (tp, tm) = characteristic_angles(&pair)?;
            ThetaReport {
                cycle: cycle_angles(pair.pprime, pair.qprime)?,
                orbit_plus: Some(tp.orbit_meta()),
                orbit_minus: Some(tm.orbit_meta()),
                theta0_plus: Some(tp),
                theta0_minus: Some(tm),
                ptilde: ptilde(pair.pprime as i64, pair.qprime as i64)?,
            }
        }
    };
    emit_json(cfg, &report)?;
    Ok(0)
}

#[derive(Serialize)]
struct RayExport {
    angle: Angle,
    landing: C64,
    /// [re, im, potential].
    samples: Vec<[f64; 3]>,
}

fn cmd_rays(cfg: &RunConfig) -> Result<i32> {
    let pair = resolve_pair(&cfg.pair_spec("cauliflower")?)?;
    let side = match cfg.side.as_deref().unwrap_or("hyperbolic") {
        "hyperbolic" | "f" => Side::Hyperbolic,
        "parabolic" | "g" => Side::Parabolic,
        other => return Err(Error::input(format!("rays need one side, not {other:?}"))),
    };
    let c = match side {
        Side::Hyperbolic => pair.c,
        Side::Parabolic => pair.sigma,
    };
    let angles = match &cfg.angles {
        Some(a) => a.clone(),
        None => {
            let tess = Tessellation::new(&pair, Resolution::default())?;
            let depth = cfg.depth.unwrap_or(2);
            let mut all = tess.tile_angles(crate::tess::Sign::Plus, depth);
            all.extend(tess.tile_angles(crate::tess::Sign::Minus, depth));
            all.sort();
            all.dedup();
            all
        }
    };
    let params = RayParams { tol: cfg.tol.unwrap_or(RayParams::default().tol), ..RayParams::default() };
    let mut traces = Vec::new();
    for theta in &angles {
        let t = ray(c, theta, &params)?;
        traces.push(RayExport {
            angle: theta.clone(),
            landing: t.landing,
            samples: t.samples.iter().map(|(z, g)| [z.re, z.im, *g]).collect(),
        });
    }
    let dir = cfg.out_dir();
    write_json(&dir.join(format!("rays-{side}.json")), &traces)?;
    let (lo, hi) = default_window(&crate::dynamics::QuadMap::new(c));
    let win = Window::new(lo, hi)?;
    let w = cfg.res.unwrap_or(512) as u32;
    let lines: Vec<(String, Vec<C64>)> =
        traces.iter().map(|t| (t.angle.to_string(), t.samples.iter().map(|s| C64::new(s[0], s[1])).collect())).collect();
    write_text(&dir.join(format!("rays-{side}.svg")), &polylines_svg(&lines, &win, w, w))?;
    print!("{}", to_json(&serde_json::json!({ "rays": traces.len(), "side": side, "out": dir }))?);
    Ok(0)
}

#[derive(Serialize)]
struct TessExport<'a> {
    pair: String,
    side: Side,
    levels: (i64, i64),
    depth: usize,
    tiles: &'a [Tile],
}

fn cmd_tess_render(cfg: &RunConfig) -> Result<i32> {
    let pair = resolve_pair(&cfg.pair_spec("cauliflower")?)?;
    let levels = cfg.levels.unwrap_or((-3, 3));
    let depth = cfg.depth.unwrap_or(2);
    let w = cfg.res.unwrap_or(512) as u32;
    let tess = Tessellation::new(&pair, Resolution::default())?;
    let addrs = tess.addresses(levels.0, levels.1, depth);
    let dir = cfg.out_dir();
    let mut summary = BTreeMap::new();
    for side in cfg.sides()? {
        let tiles = addrs.iter().map(|a| tess.build_tile(side, a)).collect::<Result<Vec<_>>>()?;
        let win = Window::around(&tiles).unwrap_or_default();
        write_json(&dir.join(format!("tess-{side}.json")), &TessExport { pair: pair.label(), side, levels, depth, tiles: &tiles })?;
        write_text(&dir.join(format!("tess-{side}.svg")), &tiles_svg(&tiles, &win, w, w, levels))?;
        save_png(&tiles_png(&tiles, &win, w, w, levels), &dir.join(format!("tess-{side}.png")))?;
        summary.insert(side.to_string(), tiles.len());
    }
    print!("{}", to_json(&serde_json::json!({ "tiles": summary, "out": dir }))?);
    Ok(0)
}

#[derive(Serialize)]
struct SemiconjReport {
    pair: String,
    grid: usize,
    window: (C64, C64),
    residual: Residual,
    identity: Residual,
    tol: f64,
    pass: bool,
}

fn cmd_semiconj_check(cfg: &RunConfig) -> Result<i32> {
    let pair = resolve_pair(&cfg.pair_spec("cauliflower")?)?;
    let n = cfg.res.unwrap_or(20);
    let tol = cfg.tol.unwrap_or(1e-4);
    let semi = Semiconjugacy::new(&pair, Resolution::default())?;
    let (lo, hi) = default_window(&pair.f());
    let pts = grid(lo, hi, n);
    let (residual, identity) = semi.residual_and_identity(&pts);
    let pass = residual.value < tol;
    let report = SemiconjReport { pair: pair.label(), grid: n, window: (lo, hi), residual, identity, tol, pass };
    let dir = cfg.out_dir();
    write_json(&dir.join("semiconj.json"), &report)?;
    write_json(&dir.join("h-field.json"), &semi.field(&pts))?;
    print!("{}", to_json(&report)?);
    Ok(if pass { 0 } else { 1 })
}

fn cmd_quotient_table(cfg: &RunConfig) -> Result<i32> {
    let pair = resolve_pair(&cfg.pair_spec("rabbits-b")?)?;
    let tess = Tessellation::new(&pair, Resolution::default())?;
    let table = gluing_table(&tess, cfg.depth.unwrap_or(pair.lbar() + 2))?;
    table.check_bijective()?;
    let dir = cfg.out_dir();
    write_json(&dir.join("quotient.json"), &table)?;
    let text = table.to_text();
    write_text(&dir.join("quotient.txt"), &text)?;
    print!("{text}");
    Ok(0)
}

fn counterpart(spec: &PairSpec) -> PairSpec {
    let case = match (spec.case, spec.q) {
        (_, 1) => spec.case,
        (Case::A, _) => Case::B,
        (Case::B, _) => Case::A,
    };
    PairSpec { case, ..spec.clone() }
}

fn cmd_twist_compare(cfg: &RunConfig) -> Result<i32> {
    let spec = cfg.pair_spec("rabbits-b")?;
    let other = match &cfg.other {
        Some(s) => s.parse()?,
        None => counterpart(&spec),
    };
    let (pa, pb) = (resolve_pair(&spec)?, resolve_pair(&other)?);
    let (pa, pb) = if pa.case == Case::B && pb.case == Case::A { (pb, pa) } else { (pa, pb) };
    let ta = Tessellation::new(&pa, Resolution::default())?;
    let tb = Tessellation::new(&pb, Resolution::default())?;
    let depth = cfg.depth.unwrap_or(pa.lbar() + 2);
    let report = verify_twist(&ta, &tb, depth, 2, 1)?;
    match report.shift {
        Some(k) => println!("shift {k} q {}", report.q),
        None => println!("shift none q {}", report.q),
    }
    if let Some(p) = &cfg.out {
        write_json(p, &report)?;
    }
    Ok(if report.consistent { 0 } else { 1 })
}

#[derive(Serialize)]
struct HenonExport {
    pair: String,
    a: C64,
    width: u32,
    depth: usize,
    resolved: usize,
    escaping: usize,
    unresolved: usize,
    julia: Vec<JuliaSample>,
}

fn cmd_henon_render(cfg: &RunConfig) -> Result<i32> {
    let pair = resolve_pair(&cfg.pair_spec("cauliflower")?)?;
    let a = cfg.jacobian.unwrap_or(C64::new(1e-4, 0.0));
    let h = HenonMap::new(pair.c, a);
    let w = cfg.res.unwrap_or(48) as u32;
    let depth = cfg.depth.unwrap_or(3);
    let tess = Tessellation::new(&pair, Resolution::default())?;
    let f = pair.f();
    let (lo, hi) = default_window(&f);
    let win = Window::new(lo, hi)?;
    let bits = vec![false; depth];
    let mut cells = Vec::with_capacity((w * w) as usize);
    for j in 0..w {
        for i in 0..w {
            let x = win.pixel(i, j, w, w);
            if green(pair.c, x) > 0.0 {
                cells.push(None::<Option<(f64, i64)>>);
                continue;
            }
            let zs = BackwardOrbit::from_choices(&f, x, &bits);
            let orbit = HenonOrbit::shadowing(&h, &zs.points)?;
            let addr = crate::henon::shadow_address(&h, &tess, &orbit)?;
            cells.push(Some(addr.map(|a| (a.angle.head.to_f64(), a.level))));
        }
    }
    let lv: Vec<i64> = cells.iter().flatten().flatten().map(|c| c.1).collect();
    let levels = (lv.iter().copied().min().unwrap_or(0), lv.iter().copied().max().unwrap_or(0));
    let mut img = image::RgbImage::new(w, w);
    let (mut resolved, mut escaping, mut unresolved) = (0, 0, 0);
    for (k, cell) in cells.iter().enumerate() {
        let color = match cell {
            None => {
                escaping += 1;
                [255, 255, 255]
            }
            Some(None) => {
                unresolved += 1;
                [200, 200, 200]
            }
            Some(Some((theta, m))) => {
                resolved += 1;
                address_color(*theta, *m, levels)
            }
        };
        img.put_pixel(k as u32 % w, k as u32 / w, image::Rgb(color));
    }
    let julia = sample_backward_julia(&h, 200, 12, 10.0, cfg.seed.unwrap_or(1))?;
    let dir = cfg.out_dir();
    save_png(&img, &dir.join("henon.png"))?;
    let export = HenonExport { pair: pair.label(), a, width: w, depth, resolved, escaping, unresolved, julia };
    write_json(&dir.join("henon.json"), &export)?;
    print!("{}", to_json(&serde_json::json!({ "resolved": resolved, "escaping": escaping, "unresolved": unresolved, "out": dir }))?);
    Ok(0)
}

#[derive(Clone, Debug, Serialize)]
pub struct TestCase {
    pub name: String,
    pub classname: String,
    /// passed, failed or error.
    pub status: String,
    pub message: Option<String>,
    #[serde(skip)]
    pub code: i32,
}

#[derive(Clone, Debug, Serialize)]
pub struct TestSuite {
    pub name: String,
    pub tests: usize,
    pub failures: usize,
    pub errors: usize,
    pub testcases: Vec<TestCase>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub testsuite: TestSuite,
}

impl VerifyReport {
    /// 0 when every check passed, otherwise the code of the first one that did not.
    pub fn exit_code(&self) -> i32 {
        self.testsuite.testcases.iter().find(|c| c.status != "passed").map_or(0, |c| c.code)
    }
}

/// Runs one named check; `Ok(None)` passes, `Ok(Some(msg))` fails.
fn check(cases: &mut Vec<TestCase>, class: &str, name: &str, f: impl FnOnce() -> Result<Option<String>>) {
    let t = Instant::now();
    let (status, message, code) = match f() {
        Ok(None) => ("passed", None, 0),
        Ok(Some(m)) => ("failed", Some(m), 1),
        Err(e) => ("error", Some(e.to_string()), e.exit_code()),
    };
    eprintln!("{status:>6} {class}.{name} ({:.1}s)", t.elapsed().as_secs_f64());
    cases.push(TestCase { name: name.into(), classname: class.into(), status: status.into(), message, code });
}

fn fail_if(cond: bool, msg: impl FnOnce() -> String) -> Option<String> {
    if cond {
        Some(msg())
    } else {
        None
    }
}

/// The invariant suite for one pair.
pub fn verify_suite(spec: &PairSpec, grid_n: usize, seed: u64) -> Result<VerifyReport> {
    let pair = resolve_pair(spec)?;
    let mut cases = Vec::new();
    let tess = Tessellation::new(&pair, Resolution::default())?;
    let label = pair.label();

    check(&mut cases, "dynamics", "classification", || {
        let case = pair.classify_case()?;
        Ok(fail_if(case != pair.case || pair.l * pair.q != pair.lprime * pair.qprime, || format!("case {case}")))
    });
    check(&mut cases, "angles", "cycle", || {
        let cyc = cycle_angles(pair.pprime, pair.qprime)?;
        Ok(fail_if(cyc.rotation != (pair.pprime % pair.qprime, pair.qprime), || format!("rotation {:?}", cyc.rotation)))
    });
    check(&mut cases, "linearize", "koenigs", || {
        let mut worst: f64 = 0.0;
        for z in basin_samples(&pair, Side::Hyperbolic, 20, seed)? {
            worst = worst.max(tess.charts.koenigs.residual(z)?);
        }
        Ok(fail_if(!(worst < 1e-8), || format!("residual {worst:.3e}")))
    });
    check(&mut cases, "linearize", "fatou", || {
        let mut worst: f64 = 0.0;
        for z in basin_samples(&pair, Side::Parabolic, 20, seed)? {
            worst = worst.max(tess.charts.fatou.residual(z)?);
        }
        Ok(fail_if(!(worst < 1e-6), || format!("residual {worst:.3e}")))
    });
    check(&mut cases, "tess", "tile_law", || {
        let mut worst: f64 = 0.0;
        for side in [Side::Hyperbolic, Side::Parabolic] {
            for a in tess.addresses(-1, 1, 0) {
                worst = worst.max(tess.tile_law_residual(side, &a)?);
            }
        }
        Ok(fail_if(!(worst < 1e-5), || format!("Hausdorff distance {worst:.3e}")))
    });
    check(&mut cases, "tess", "adjacency", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs = sample_address_pairs(&tess, (-2, 2), 1, 8, &mut rng);
        let mut bad = Vec::new();
        for (a, b) in &pairs {
            let r = tess.compare_adjacency(a, b)?;
            if r.matched != Some(true) {
                bad.push(format!("{a}~{b}: {:?} vs {:?}", r.hyperbolic, r.parabolic));
            }
        }
        Ok(fail_if(!bad.is_empty(), || bad.join("; ")))
    });
    check(&mut cases, "semiconj", "residual", || {
        let semi = Semiconjugacy::new(&pair, Resolution::default())?;
        let (lo, hi) = default_window(&pair.f());
        let r = semi.residual(&grid(lo, hi, grid_n));
        Ok(fail_if(!(r.value < 1e-4), || format!("residual {:.3e} at {:?}", r.value, r.worst)))
    });
    check(&mut cases, "quotient", "gluing", || {
        let table = gluing_table(&tess, pair.lbar() + 2)?;
        table.check_bijective()?;
        let expected = if pair.case == Case::A { 0 } else { ptilde(pair.pprime as i64, pair.qprime as i64)? };
        let ok = table.mu_shifts().iter().all(|&s| (s - expected).rem_euclid(pair.qprime as i64) == 0);
        Ok(fail_if(!ok, || format!("μ shifts {:?}", table.mu_shifts())))
    });
    if pair.qprime > 1 {
        check(&mut cases, "quotient", "twist", || {
            let other = resolve_pair(&counterpart(spec))?;
            let (a, b) = if pair.case == Case::A { (pair.clone(), other) } else { (other, pair.clone()) };
            let ta = Tessellation::new(&a, Resolution::default())?;
            let tb = Tessellation::new(&b, Resolution::default())?;
            let rep = verify_twist(&ta, &tb, a.lbar() + 2, 1, 1)?;
            Ok(fail_if(!rep.consistent, || format!("{} mismatches, {:?}", rep.mismatches.len(), rep.mismatches.first())))
        });
    }
    check(&mut cases, "henon", "shadowing", || {
        let trials = shadow_trials(&tess, C64::new(1e-4, 0.0), 10, 3, seed)?;
        let eq = trials.iter().filter(|t| t.equivariant).count();
        let red = trials.iter().filter(|t| t.reduces).count();
        Ok(fail_if(eq < 9 || red < trials.len(), || format!("{eq}/10 equivariant, {red}/10 reduce")))
    });

    let failures = cases.iter().filter(|c| c.status == "failed").count();
    let errors = cases.iter().filter(|c| c.status == "error").count();
    Ok(VerifyReport { testsuite: TestSuite { name: label, tests: cases.len(), failures, errors, testcases: cases } })
}

fn cmd_verify(cfg: &RunConfig) -> Result<i32> {
    let spec = cfg.pair_spec("cauliflower")?;
    let report = verify_suite(&spec, cfg.res.unwrap_or(8), cfg.seed.unwrap_or(1))?;
    let path = cfg.out_dir().join("verify.json");
    write_json(&path, &report)?;
    print!("{}", to_json(&report)?);
    if let Some(c) = report.testsuite.testcases.iter().find(|c| c.status != "passed") {
        eprintln!("first failing check: {}.{}", c.classname, c.name);
    }
    Ok(report.exit_code())
}

fn run(cli: Cli) -> Result<i32> {
    let cfg = RunConfig::from_flags(&cli.flags)?;
    match cli.command {
        Command::Pair => cmd_pair(&cfg),
        Command::Theta => cmd_theta(&cfg),
        Command::Rays => cmd_rays(&cfg),
        Command::Tess { action: TessAction::Render } => cmd_tess_render(&cfg),
        Command::Semiconj { action: SemiconjAction::Check } => cmd_semiconj_check(&cfg),
        Command::Quotient { action: QuotientAction::Table } => cmd_quotient_table(&cfg),
        Command::Twist { action: TwistAction::Compare } => cmd_twist_compare(&cfg),
        Command::Henon { action: HenonAction::Render } => cmd_henon_render(&cfg),
        Command::Verify => cmd_verify(&cfg),
    }
}

/// Runs the command line in `args` and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("lamina: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    main_with(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let m = parse_config("# defaults\npair = rabbits-a\n--levels=-2:1 # trailing\n\n").unwrap();
        assert_eq!(m["pair"], "rabbits-a");
        assert_eq!(parse_levels(&m["levels"]).unwrap(), (-2, 1));
        assert!(parse_config("colour = red").is_err());
        assert!(parse_config("pair").is_err());
        assert_eq!(parse_complex("1e-4").unwrap(), C64::new(1e-4, 0.0));
        assert_eq!(parse_complex("0, -2").unwrap(), C64::new(0.0, -2.0));
        assert!(parse_levels("3").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("lamina-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(&path, "pair = rabbits-a\ndepth = 4\ntol = 1e-3\n").unwrap();
        let flags = Flags { config: Some(path), depth: Some(7), ..Flags::default() };
        let cfg = RunConfig::from_flags(&flags).unwrap();
        assert_eq!((cfg.pair.as_deref(), cfg.depth, cfg.tol), (Some("rabbits-a"), Some(7), Some(1e-3)));
        let bad = Flags { tol: Some(-1.0), ..Flags::default() };
        assert!(RunConfig::from_flags(&bad).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_with(["lamina", "pair", "--pair", "not-a-pair"]), 2);
        assert_eq!(main_with(["lamina", "frobnicate"]), 2);
        assert_eq!(main_with(["lamina", "pair", "--pair", "1/3:1:1.5:A"]), 2);
        assert_eq!(main_with(["lamina", "--help"]), 0);
    }

    #[test]
    fn pair_reports() {
        let a = pair_report(&resolve_pair(&"1/3:1:0.9:A".parse().unwrap()).unwrap()).unwrap();
        assert_eq!((a.case, a.q, a.qprime, a.l, a.lprime), (Case::A, 3, 3, 1, 1));
        let b = pair_report(&resolve_pair(&"1/3:1:0.9:B".parse().unwrap()).unwrap()).unwrap();
        assert_eq!((b.case, b.q, b.l, b.lbar), (Case::B, 1, 3, 3));
        let c = pair_report(&resolve_pair(&"1/1:1:0.5:A".parse().unwrap()).unwrap()).unwrap();
        assert!((c.c - C64::new(3.0 / 16.0, 0.0)).norm() < 1e-14);
        let s = to_json(&c).unwrap();
        assert!(s.contains("\"theta0_minus\": \"1/1\"") || s.contains("\"theta0_minus\": \"0/1\""), "{s}");
    }

    #[test]
    fn empty_level_range_renders_nothing() {
        let dir = std::env::temp_dir().join(format!("lamina-empty-{}", std::process::id()));
        let code = main_with([
            "lamina",
            "tess",
            "render",
            "--pair",
            "cauliflower",
            "--levels",
            "2:1",
            "--res",
            "16",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("tess-hyperbolic.json")).unwrap()).unwrap();
        assert_eq!(json["tiles"].as_array().unwrap().len(), 0);
        let img = image::open(dir.join("tess-parabolic.png")).unwrap().to_rgb8();
        assert!(img.pixels().all(|p| p.0 == [255, 255, 255]));
    }
}

use std::f64::consts::{FRAC_PI_4, PI};
use std::path::{Path, PathBuf};

use scherk_core::mesher::{self, CheckReport, LatticeGroup, MeshPatch, PieceFrame};
use scherk_core::periods::{self, CycleName};
use scherk_core::riemann_core::SurfaceParams;
use scherk_core::solver::{self, AlphaStar, FamilyPoint, QUAD_TOL};
use scherk_core::weierstrass::{self, RowCheck};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Mode, Params, RunConfig};
use crate::error::{io_err, Module, RunError};
use crate::export::{fmt, svg_polylines, write_csv, write_json, write_mesh, Num};

/// Parameters used by `verify` and `periods` when none are given.
pub const SMOKE_PARAMS: Params = Params { alpha: PI / 8.0, x: 1.05, y: 1.30 };

/// A point of the continued family, used by `mesh` when no parameters are
/// given.
pub const FAMILY_POINT: Params = Params { alpha: 0.4297196191, x: 0.9575927405, y: 1.0905620724 };

/// Tolerance of the limit-data root recorded in every sidecar.
pub const ALPHA_STAR_TOL: f64 = 1e-12;

/// What a run produced, plus the deferred failure of a run that still wrote
/// its outputs (partial continuation, failed identity).
#[derive(Debug)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
    pub failure: Option<RunError>,
}

#[derive(Serialize)]
struct ParamsOut {
    alpha: Num,
    x: Num,
    y: Num,
}

impl From<Params> for ParamsOut {
    fn from(p: Params) -> Self {
        ParamsOut { alpha: Num(p.alpha), x: Num(p.x), y: Num(p.y) }
    }
}

#[derive(Serialize)]
struct Tolerances {
    tol: Num,
    quadrature: Num,
    alpha_star: Num,
}

#[derive(Serialize)]
struct Versions {
    sclab: &'static str,
    scherk_core: &'static str,
}

#[derive(Serialize)]
struct Meta {
    mode: &'static str,
    params: Option<ParamsOut>,
    tolerances: Tolerances,
    alpha_star: Num,
    t2: Option<Num>,
    t3: Option<Num>,
    versions: Versions,
    settings: Value,
    report: Value,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    alpha_star: f64,
    files: Vec<PathBuf>,
    summary: Vec<String>,
}

impl Ctx<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }

    fn settings(&self) -> Value {
        let c = self.cfg;
        match c.mode {
            Mode::Solve => json!({ "steps": c.steps, "s_max": Num(c.s_max) }),
            Mode::Verify => json!({ "samples": c.samples }),
            Mode::Periods | Mode::Chm => json!({}),
            Mode::Mesh => json!({
                "resolution": c.resolution,
                "end_cutoff": Num(c.end_cutoff),
                "copies": [c.copies.0, c.copies.1],
                "format": c.format.extension(),
                "normalize": c.normalize,
                "scan": c.scan,
            }),
            Mode::Plot => json!({ "samples": c.samples, "grid": [c.grid.0, c.grid.1] }),
        }
    }

    /// Sidecar (or self-contained report) for the outputs sharing `stem`.
    fn meta(&mut self, stem: &str, params: Option<Params>, lattice: Option<(f64, f64)>, report: Value) -> Result<(), RunError> {
        let meta = Meta {
            mode: self.cfg.mode.as_str(),
            params: params.map(Into::into),
            tolerances: Tolerances { tol: Num(self.cfg.tol), quadrature: Num(QUAD_TOL), alpha_star: Num(ALPHA_STAR_TOL) },
            alpha_star: Num(self.alpha_star),
            t2: lattice.map(|l| Num(l.0)),
            t3: lattice.map(|l| Num(l.1)),
            versions: Versions { sclab: env!("CARGO_PKG_VERSION"), scherk_core: scherk_core::VERSION },
            settings: self.settings(),
            report,
        };
        let path = self.path(&format!("{stem}.json"));
        write_json(&path, &meta)?;
        self.files.push(path);
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), RunError> {
        let path = self.path(name);
        write_csv(&path, header, rows)?;
        self.files.push(path);
        Ok(())
    }
}

fn surface(p: Params) -> Result<SurfaceParams, RunError> {
    SurfaceParams::new(p.alpha, p.x, p.y).map_err(|e| RunError::Config(e.to_string()))
}

fn lattice(sp: &SurfaceParams, tol: f64) -> Result<(f64, f64), RunError> {
    let g = LatticeGroup::new(sp, tol).module("periods")?;
    Ok((g.t2, g.t3))
}

fn rows_json(rows: &[RowCheck]) -> Value {
    Value::Array(rows.iter().map(|r| json!({ "curve": r.name, "samples": r.samples, "max_dev": Num(r.max_dev) })).collect())
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput, RunError> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    let star = solver::chm_alpha_star(ALPHA_STAR_TOL).module("solver")?;
    let mut ctx = Ctx { cfg, alpha_star: star.alpha, files: Vec::new(), summary: Vec::new() };
    let failure = match cfg.mode {
        Mode::Solve => solve(&mut ctx)?,
        Mode::Verify => verify(&mut ctx)?,
        Mode::Periods => period_table(&mut ctx)?,
        Mode::Mesh => mesh(&mut ctx)?,
        Mode::Plot => plot(&mut ctx)?,
        Mode::Chm => chm(&mut ctx, &star)?,
    };
    Ok(RunOutput { files: ctx.files, summary: ctx.summary, failure })
}

fn family_row(k: usize, fp: &FamilyPoint, tol: f64) -> Vec<String> {
    let (t2, t3) = match SurfaceParams::new(fp.alpha, fp.x, fp.y) {
        Ok(sp) => (
            periods::scherk_end_residue(&sp).map(f64::abs).unwrap_or(f64::INFINITY),
            periods::vertical_period(&sp, tol.min(QUAD_TOL)).unwrap_or(f64::NAN),
        ),
        // the anchor x = y = 1 has an infinite horizontal period
        Err(_) => (f64::INFINITY, f64::NAN),
    };
    vec![
        k.to_string(),
        fmt(fp.t),
        fmt(fp.alpha),
        fmt(fp.x),
        fmt(fp.y),
        fmt(fp.residual.f1),
        fmt(fp.residual.f2),
        fmt(fp.residual.err),
        fmt(fp.y - fp.x),
        fmt(t2),
        fmt(t3),
    ]
}

const FAMILY_HEADER: [&str; 11] = ["index", "t", "alpha", "x", "y", "f1", "f2", "quad_err", "gap", "t2", "t3"];

fn solve(ctx: &mut Ctx) -> Result<Option<RunError>, RunError> {
    let cfg = ctx.cfg;
    let (points, stopped) = match cfg.params {
        Some(p) => {
            let fp = solver::solve_at_alpha(p.alpha, (p.x, p.y), cfg.tol).module("solver")?;
            (vec![fp], None)
        }
        None => {
            let fam = solver::continue_family(cfg.s_max, cfg.steps, cfg.tol).module("solver")?;
            (fam.points, fam.stopped)
        }
    };
    let rows: Vec<_> = points.iter().enumerate().map(|(k, fp)| family_row(k, fp, cfg.tol)).collect();
    ctx.csv("family.csv", &FAMILY_HEADER, &rows)?;
    let last = points.last().copied();
    let lat = match last.and_then(|fp| SurfaceParams::new(fp.alpha, fp.x, fp.y).ok()) {
        Some(sp) => Some(lattice(&sp, QUAD_TOL)?),
        None => None,
    };
    let report = json!({
        "points": points.len(),
        "max_residual": Num(points.iter().map(|fp| fp.residual.max_abs()).fold(0.0, f64::max)),
        "stopped": stopped.as_ref().map(|e| e.to_string()),
        "lattice_at": last.map(|fp| ParamsOut::from(Params { alpha: fp.alpha, x: fp.x, y: fp.y })),
    });
    ctx.meta("family", cfg.params, lat, report)?;
    ctx.summary.push(format!("family points: {}", points.len()));
    Ok(stopped.map(|err| RunError::Numeric { module: "solver", err }))
}

fn verify(ctx: &mut Ctx) -> Result<Option<RunError>, RunError> {
    let cfg = ctx.cfg;
    let params = cfg.params.unwrap_or(SMOKE_PARAMS);
    let sp = surface(params)?;
    let gauss = weierstrass::gauss_table(&sp, cfg.samples).module("weierstrass")?;
    let dh = weierstrass::dh_table(&sp, cfg.samples).module("weierstrass")?;
    let ids = periods::verify_identities(&sp, cfg.tol).module("periods")?;
    let residue = periods::scherk_end_residue(&sp).module("periods")?;
    let end = periods::integrate_cycle(&periods::end_loop(&sp, 1e-3).module("periods")?, &sp, false, QUAD_TOL).module("periods")?;
    let lat = lattice(&sp, QUAD_TOL)?;
    let table_tol = 1e-9;
    let cal = &ids.calibration;
    let passes: Vec<Value> = ids.passes().iter().map(|(id, ok)| json!({ "identity": id.to_string(), "pass": ok })).collect();
    let report = json!({
        "symmetry_tolerance": Num(table_tol),
        "gauss_rows": rows_json(&gauss),
        "dh_rows": rows_json(&dh),
        "symmetry_pass": gauss.iter().chain(&dh).all(|r| r.max_dev < table_tol),
        "identities": {
            "a": Num(ids.a),
            "b": Num(ids.b),
            "b_imag": Num(ids.b_imag),
            "c": Num(ids.c),
            "d": Num(ids.d),
            "d_third": Num(ids.d_third),
            "passes": passes,
        },
        "curve1": Value::Array(ids.curve1.re().iter().map(|&v| json!(Num(v))).collect()),
        "beta_gdh": [Num(ids.beta_gdh.re), Num(ids.beta_gdh.im)],
        "beta_plus_gdh": [Num(ids.beta_plus_gdh.re), Num(ids.beta_plus_gdh.im)],
        "calibration": {
            "generators": cal.labels,
            "fiber_states": cal.fiber_states,
            "words_examined": cal.words_examined,
            "closed_words": cal.closed_words,
            "curve1_word": cal.curve1.as_ref().map(|w| cal.word_string(w)),
            "curve3_word": cal.curve3.as_ref().map(|w| cal.word_string(w)),
            "curve3_periods": cal.curve3_periods.map(|v| v.map(Num)),
            "phi1_values": cal.phi1_values.iter().map(|&v| Num(v)).collect::<Vec<_>>(),
        },
        "end_residue": Num(residue),
        "end_loop": end.re().map(Num),
    });
    ctx.meta("verify", Some(params), Some(lat), report)?;
    for (id, ok) in ids.passes() {
        ctx.summary.push(format!("identity ({id}): {}", if ok { "pass" } else { "fail" }));
    }
    Ok(ids.check().err().map(|err| RunError::Numeric { module: "periods", err }))
}

const CYCLES: [CycleName; 7] = [
    CycleName::Curve1,
    CycleName::Curve2,
    CycleName::Curve3,
    CycleName::Beta,
    CycleName::BetaPlus,
    CycleName::BetaMinus,
    CycleName::EndLoop,
];

fn period_table(ctx: &mut Ctx) -> Result<Option<RunError>, RunError> {
    let cfg = ctx.cfg;
    let params = cfg.params.unwrap_or(SMOKE_PARAMS);
    let sp = surface(params)?;
    let mut rows = Vec::new();
    for name in CYCLES {
        let cy = periods::named_cycle(&sp, name).module("periods")?;
        for rotated in [false, true] {
            let v = periods::integrate_cycle(&cy, &sp, rotated, cfg.tol).module("periods")?;
            rows.push(vec![
                name.as_str().to_string(),
                if rotated { "rotated" } else { "plain" }.to_string(),
                fmt(v.p1.re),
                fmt(v.p1.im),
                fmt(v.p2.re),
                fmt(v.p2.im),
                fmt(v.p3.re),
                fmt(v.p3.im),
                fmt(v.gdh.re),
                fmt(v.gdh.im),
                fmt(v.err),
            ]);
        }
    }
    let header = ["cycle", "gauss_map", "p1_re", "p1_im", "p2_re", "p2_im", "p3_re", "p3_im", "gdh_re", "gdh_im", "err"];
    ctx.csv("periods.csv", &header, &rows)?;
    let lat = lattice(&sp, QUAD_TOL)?;
    ctx.meta("periods", Some(params), Some(lat), json!({ "cycles": rows.len() / 2 }))?;
    ctx.summary.push(format!("cycles: {}", rows.len() / 2));
    Ok(None)
}

fn check_json(r: &CheckReport) -> Value {
    json!({
        "rms_mean_curvature": Num(r.rms_mean_curvature),
        "median_normal_deviation_deg": Num(r.median_normal_deviation),
        "degree_estimate": Num(r.degree_estimate),
        "planarity": Num(r.planarity),
        "collinearity": Num(r.collinearity),
        "diameter": Num(r.diameter),
        "max_closure": Num(r.max_closure),
    })
}

fn scaled(mut m: MeshPatch, s: f64) -> MeshPatch {
    for v in &mut m.vertices {
        *v = v.map(|c| c * s);
    }
    m
}

fn mesh(ctx: &mut Ctx) -> Result<Option<RunError>, RunError> {
    let cfg = ctx.cfg;
    let params = cfg.params.unwrap_or(FAMILY_POINT);
    let sp = surface(params)?;
    let dm = mesher::triangulate_domain(&sp, cfg.resolution, cfg.end_cutoff).module("mesher")?;
    let im = mesher::immerse(&dm, &sp).module("mesher")?;
    let checks = mesher::discrete_checks(&dm, &im, &sp).module("mesher")?;
    let frame = PieceFrame::new(&sp, QUAD_TOL).module("mesher")?;
    let group = LatticeGroup::new(&sp, QUAD_TOL).module("mesher")?;
    let piece = mesher::assemble_piece(&im.patch, &frame, &group, cfg.copies);
    let intersections = cfg.scan.then(|| mesher::count_self_intersections(&piece, 1e-9 * checks.diameter));
    let scale = if cfg.normalize { 1.0 / group.t3 } else { 1.0 };
    let out = scaled(piece, scale);
    let path = ctx.path(&format!("surface.{}", cfg.format.extension()));
    write_mesh(&path, &out, cfg.format)?;
    ctx.files.push(path);
    let copies: Vec<Value> = out
        .copy_tags
        .iter()
        .map(|t| json!({ "word": t.word, "first_vertex": t.first_vertex, "first_face": t.first_face }))
        .collect();
    let report = json!({
        "scale": Num(scale),
        "vertices": out.vertices.len(),
        "faces": out.faces.len(),
        "patch_vertices": im.patch.vertices.len(),
        "checks": check_json(&checks),
        "max_sheet_mismatch": Num(im.max_sheet_mismatch),
        "intersections": intersections,
        "copies": copies,
    });
    ctx.meta("surface", Some(params), Some((group.t2, group.t3)), report)?;
    ctx.summary.push(format!("vertices: {}, faces: {}", out.vertices.len(), out.faces.len()));
    Ok(None)
}

fn write_text(ctx: &mut Ctx, name: &str, text: &str) -> Result<(), RunError> {
    let path = ctx.path(name);
    std::fs::write(&path, text).map_err(io_err(&path))?;
    ctx.files.push(path);
    Ok(())
}

fn plot(ctx: &mut Ctx) -> Result<Option<RunError>, RunError> {
    let cfg = ctx.cfg;
    let params = cfg.params.unwrap_or(Params { alpha: ctx.alpha_star, x: 1.0, y: 1.0 + 1e-2 });
    let sp = surface(params)?;

    // g^2 along beta+, z = -x e^{it}
    let cy = periods::beta_plus(&sp).module("periods")?;
    let pts = periods::trace_cycle(&cy, &sp, cfg.samples).module("periods")?;
    let mut rows = Vec::new();
    let (mut modulus, mut phase) = (Vec::new(), Vec::new());
    for (_, u, s) in &pts {
        let t = PI * u;
        let g2 = s.g * s.g;
        let (re, im) = if s.g.is_finite() { (g2.re, g2.im) } else { (f64::INFINITY, f64::NAN) };
        let abs = if s.g.is_finite() { g2.norm() } else { f64::INFINITY };
        rows.push(vec![fmt(t), fmt(s.z.re), fmt(s.z.im), fmt(re), fmt(im), fmt(abs)]);
        modulus.push((t, abs.log10()));
        phase.push((t, if abs > 0.0 && abs.is_finite() { g2.arg() / PI } else { f64::NAN }));
    }
    ctx.csv("beta_g2.csv", &["t", "z_re", "z_im", "g2_re", "g2_im", "g2_abs"], &rows)?;
    let svg = svg_polylines("g^2 along beta+: log10|g^2| and arg/pi against t", &[("log10|g^2|", modulus), ("arg(g^2)/pi", phase)]);
    write_text(ctx, "beta_g2.svg", &svg)?;
    let lat = lattice(&sp, QUAD_TOL)?;
    ctx.meta("beta_g2", Some(params), Some(lat), json!({ "samples": pts.len() }))?;

    // first-cycle residuals over an (alpha, y) grid at fixed x
    let (na, ny) = cfg.grid;
    let a0 = (params.alpha - 0.05).max(1e-2);
    let a1 = (params.alpha + 0.05).min(FRAC_PI_4 - 1e-2);
    let (y0, y1) = (params.x * 1.005, params.x * 1.1);
    let mut grid = Vec::new();
    let mut failures = 0;
    for i in 0..na {
        let a = a0 + (a1 - a0) * i as f64 / (na - 1) as f64;
        for j in 0..ny {
            let y = y0 + (y1 - y0) * j as f64 / (ny - 1) as f64;
            let row = match solver::period_residual(a, params.x, y, QUAD_TOL) {
                Ok(r) => vec![fmt(a), fmt(params.x), fmt(y), fmt(r.f1), fmt(r.f2), fmt(r.err), String::new()],
                Err(e) => {
                    failures += 1;
                    let nan = fmt(f64::NAN);
                    vec![fmt(a), fmt(params.x), fmt(y), nan.clone(), nan.clone(), nan, e.to_string()]
                }
            };
            grid.push(row);
        }
    }
    ctx.csv("residual_grid.csv", &["alpha", "x", "y", "f1", "f2", "quad_err", "error"], &grid)?;
    let report = json!({
        "alpha_range": [Num(a0), Num(a1)],
        "y_range": [Num(y0), Num(y1)],
        "points": grid.len(),
        "failures": failures,
    });
    ctx.meta("residual_grid", Some(params), Some(lat), report)?;
    ctx.summary.push(format!("beta+ samples: {}, grid points: {} ({} failed)", pts.len(), grid.len(), failures));
    Ok(None)
}

fn chm(ctx: &mut Ctx, recorded: &AlphaStar) -> Result<Option<RunError>, RunError> {
    let cfg = ctx.cfg;
    let star = if cfg.tol == ALPHA_STAR_TOL { recorded.clone() } else { solver::chm_alpha_star(cfg.tol).module("solver")? };
    let secant = solver::chm_alpha_star_secant(star.bracket, cfg.tol).module("solver")?;
    let rows: Vec<_> = star.scan.iter().map(|&(a, f)| vec![fmt(a), fmt(f)]).collect();
    ctx.csv("chm_scan.csv", &["alpha", "f2"], &rows)?;
    let above = solver::period_residual(star.alpha, 1.0, 1.0 + 1e-2, QUAD_TOL).module("solver")?;
    let below = solver::period_residual_relaxed(star.alpha, 1.0, 1.0 - 1e-2, QUAD_TOL).module("solver")?;
    let near = SurfaceParams::relaxed(star.alpha, 1.0 - 1e-3, 1.0 - 1e-3).module("riemann_core")?;
    let quartic = weierstrass::chm_comparison(&near, 0.5, 100).module("weierstrass")?;
    let report = json!({
        "alpha_star": Num(star.alpha),
        "f2_at_alpha_star": Num(star.f2),
        "sign_changes": star.sign_changes,
        "bracket": [Num(star.bracket.0), Num(star.bracket.1)],
        "secant": Num(secant),
        "bisection_secant_gap": Num((secant - star.alpha).abs()),
        "f1_above": Num(above.f1),
        "f1_below": Num(below.f1),
        "quartic_gap": Num(quartic),
    });
    ctx.alpha_star = star.alpha;
    ctx.meta("chm_scan", None, None, report)?;
    ctx.summary.push(format!("alpha* = {}", fmt(star.alpha)));
    ctx.summary.push(format!("|F2(alpha*)| = {}", fmt(star.f2.abs())));
    Ok(None)
}

/// Sidecar path of an output file.
pub fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

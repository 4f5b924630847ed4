//! Cycle representatives and their periods.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use crate::quadrature::{panel_nodes, Endpoint, GaussLegendre};
use crate::riemann_core::{base_point, SheetPoint, SurfaceParams, Tracker};
use crate::weierstrass::{forms_from, gauss_map_rotated};
use crate::{c, Error, Result, C64};

/// A parameterized piece of path, `u in [0,1] -> (z, dz/du)`.
pub trait PathCurve: Send + Sync {
    fn point(&self, u: f64) -> (C64, C64);
}

#[derive(Debug, Clone, Copy)]
pub struct Line(pub C64, pub C64);

impl PathCurve for Line {
    fn point(&self, u: f64) -> (C64, C64) {
        let d = self.1 - self.0;
        (self.0 + d * u, d)
    }
}

/// `center + radius e^{i t}`, `t` from `t0` to `t1`.
#[derive(Debug, Clone, Copy)]
pub struct Arc {
    pub center: C64,
    pub radius: f64,
    pub t0: f64,
    pub t1: f64,
}

impl PathCurve for Arc {
    fn point(&self, u: f64) -> (C64, C64) {
        let t = self.t0 + (self.t1 - self.t0) * u;
        let e = C64::new(t.cos(), t.sin());
        (self.center + e * self.radius, C64::new(0.0, 1.0) * e * (self.radius * (self.t1 - self.t0)))
    }
}

/// `a cos t + i b sin t`, `t` from `t0` to `t1`.
#[derive(Debug, Clone, Copy)]
pub struct Ellipse {
    pub a: f64,
    pub b: f64,
    pub t0: f64,
    pub t1: f64,
}

impl PathCurve for Ellipse {
    fn point(&self, u: f64) -> (C64, C64) {
        let t = self.t0 + (self.t1 - self.t0) * u;
        let (s, co) = t.sin_cos();
        (C64::new(self.a * co, self.b * s), C64::new(-self.a * s, self.b * co) * (self.t1 - self.t0))
    }
}

pub struct Piece {
    pub curve: Box<dyn PathCurve>,
    pub sub: Endpoint,
}

impl Piece {
    pub fn line(a: C64, b: C64) -> Self {
        Self { curve: Box::new(Line(a, b)), sub: Endpoint::Smooth }
    }
    pub fn line_sub(a: C64, b: C64, sub: Endpoint) -> Self {
        Self { curve: Box::new(Line(a, b)), sub }
    }
    pub fn arc(center: C64, radius: f64, t0: f64, t1: f64, sub: Endpoint) -> Self {
        Self { curve: Box::new(Arc { center, radius, t0, t1 }), sub }
    }
    fn polyline(pts: &[C64]) -> Vec<Self> {
        pts.windows(2).map(|w| Self::line(w[0], w[1])).collect()
    }
}

/// How the lift of `g` is chosen when a leg leaves a branch point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lift {
    /// Regular start; continue the current values.
    Continue,
    /// First node takes the root with `Re(g conj r) >= 0`.
    Ref(C64),
    /// Reference is the conjugate of the last `g` of the previous leg.
    ConjPrev,
}

pub struct Leg {
    pub pieces: Vec<Piece>,
    pub lift: Lift,
    /// Connecting legs are tracked but not integrated.
    pub integrate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleName {
    Curve1,
    Curve2,
    Curve3,
    Beta,
    BetaPlus,
    BetaMinus,
    EndLoop,
    Word,
}

impl CycleName {
    pub fn as_str(self) -> &'static str {
        match self {
            CycleName::Curve1 => "curve1",
            CycleName::Curve2 => "curve2",
            CycleName::Curve3 => "curve3",
            CycleName::Beta => "beta",
            CycleName::BetaPlus => "beta_plus",
            CycleName::BetaMinus => "beta_minus",
            CycleName::EndLoop => "end_loop",
            CycleName::Word => "word",
        }
    }
}

pub struct CyclePath {
    pub name: CycleName,
    pub start: SheetPoint,
    pub legs: Vec<Leg>,
    pub closed: bool,
    pub clearance: f64,
}

/// Integrals of `(phi1, phi2, phi3)` plus `g dh` (never rotated).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodVector {
    pub p1: C64,
    pub p2: C64,
    pub p3: C64,
    pub gdh: C64,
    pub err: f64,
}

impl PeriodVector {
    pub fn re(&self) -> [f64; 3] {
        [self.p1.re, self.p2.re, self.p3.re]
    }
}

const MIN_PANELS: usize = 2;
const MAX_PANELS: usize = 1024;

fn run_cycle(p: &SurfaceParams, cy: &CyclePath, rotated: bool, panels: usize, rule: &GaussLegendre) -> Result<([C64; 4], SheetPoint)> {
    let crit = p.critical_points();
    let mut acc = [C64::new(0.0, 0.0); 4];
    let mut state = cy.start;
    let mut last_g = cy.start.g;
    for leg in &cy.legs {
        let mut tr = match leg.lift {
            Lift::Continue => Tracker::new(state),
            Lift::Ref(r) => Tracker::from_branch(state, r),
            Lift::ConjPrev => Tracker::from_branch(state, last_g.conj()),
        };
        let n = leg.pieces.len();
        for (k, piece) in leg.pieces.iter().enumerate() {
            let nodes = panel_nodes(rule, panels, piece.sub);
            for (u, wt) in nodes {
                let (z, dz) = piece.curve.point(u);
                if piece.sub == Endpoint::Smooth {
                    for q in &crit {
                        let d = (z - q).norm();
                        if d < cy.clearance {
                            return Err(Error::Clearance { z, dist: d });
                        }
                    }
                }
                let sp = tr.step(p, z)?;
                last_g = sp.g;
                if leg.integrate {
                    let dh = dz * wt / sp.zprime;
                    let g = if rotated { gauss_map_rotated(sp.g) } else { sp.g };
                    let f = forms_from(g, dh);
                    acc[0] += f.phi1;
                    acc[1] += f.phi2;
                    acc[2] += f.phi3;
                    acc[3] += sp.g * dh;
                }
            }
            let (zend, _) = piece.curve.point(1.0);
            if matches!(piece.sub, Endpoint::End | Endpoint::Both) {
                debug_assert!(k + 1 == n, "branch endpoint must close the leg");
                state = tr.branch_state(p, zend)?;
            } else {
                tr.step(p, zend)?;
                state = tr.current();
            }
        }
    }
    Ok((acc, state))
}

/// Integrate the Weierstrass forms over a cycle, doubling the panel count
/// until two successive results agree within `tol`.
pub fn integrate_cycle(cy: &CyclePath, p: &SurfaceParams, rotated: bool, tol: f64) -> Result<PeriodVector> {
    integrate_cycle_with_end(cy, p, rotated, tol).map(|r| r.0)
}

pub fn integrate_cycle_with_end(cy: &CyclePath, p: &SurfaceParams, rotated: bool, tol: f64) -> Result<(PeriodVector, SheetPoint)> {
    let rule = GaussLegendre::new(12);
    let mut panels = MIN_PANELS;
    let mut prev: Option<[C64; 4]> = None;
    loop {
        // a coarse node spacing can leave the branch choice ambiguous;
        // that is treated like an unconverged level
        match run_cycle(p, cy, rotated, panels, &rule) {
            Ok((cur, end)) => {
                if let Some(pv) = prev {
                    let err = (0..4).map(|k| (cur[k] - pv[k]).norm()).fold(0.0, f64::max);
                    if err < tol {
                        return Ok((PeriodVector { p1: cur[0], p2: cur[1], p3: cur[2], gdh: cur[3], err }, end));
                    }
                    if panels >= MAX_PANELS {
                        return Err(Error::NonConvergence { what: "cycle quadrature", err });
                    }
                }
                prev = Some(cur);
            }
            Err(e @ Error::StepFailure { .. }) => {
                if panels >= MAX_PANELS {
                    return Err(e);
                }
                prev = None;
            }
            Err(e) => return Err(e),
        }
        panels *= 2;
    }
}

/// Follow a polyline from `start` without integrating.
pub fn track_polyline(p: &SurfaceParams, start: SheetPoint, pts: &[C64], h: f64) -> Result<Tracker> {
    let mut tr = Tracker::new(start);
    for w in pts.windows(2) {
        let n = ((w[1] - w[0]).norm() / h).ceil().max(1.0) as usize;
        for k in 1..=n {
            tr.step(p, w[0] + (w[1] - w[0]) * (k as f64 / n as f64))?;
        }
    }
    Ok(tr)
}

/// Sheet data at `u = k/n`, `k = 0..n`, on every integrated piece of a
/// cycle, as `(piece index, u, point)`. A branch endpoint is reported by its
/// branch state. Connecting legs are tracked but not sampled.
pub fn trace_cycle(cy: &CyclePath, p: &SurfaceParams, n: usize) -> Result<Vec<(usize, f64, SheetPoint)>> {
    let n = n.max(1);
    let h = 1e-2;
    let mut out = Vec::new();
    let mut state = cy.start;
    let mut last_g = cy.start.g;
    let mut index = 0;
    for leg in &cy.legs {
        let mut tr = match leg.lift {
            Lift::Continue => Tracker::new(state),
            Lift::Ref(r) => Tracker::from_branch(state, r),
            Lift::ConjPrev => Tracker::from_branch(state, last_g.conj()),
        };
        let mut at = tr.current();
        for piece in &leg.pieces {
            let branch_end = matches!(piece.sub, Endpoint::End | Endpoint::Both);
            let (z0, _) = piece.curve.point(0.0);
            if leg.integrate {
                out.push((index, 0.0, SheetPoint { z: z0, ..at }));
            }
            let mut prev_z = z0;
            for k in 1..=n {
                let u = k as f64 / n as f64;
                let (z, _) = piece.curve.point(u);
                if k == n && branch_end {
                    at = tr.branch_state(p, z)?;
                } else {
                    // substeps keep the tracker's predictor short on coarse samplings
                    let m = ((z - prev_z).norm() / h).ceil().max(1.0) as usize;
                    let (u0, du) = ((k - 1) as f64 / n as f64, 1.0 / (n * m) as f64);
                    for j in 1..m {
                        tr.step(p, piece.curve.point(u0 + j as f64 * du).0)?;
                    }
                    at = tr.step(p, z)?;
                }
                last_g = at.g;
                prev_z = z;
                if leg.integrate {
                    out.push((index, u, at));
                }
            }
            if leg.integrate {
                index += 1;
            }
        }
        state = at;
    }
    Ok(out)
}

/// The point `S = (-x, base sheet)`, where `g = 0`.
pub fn s_point(p: &SurfaceParams) -> Result<SheetPoint> {
    let b = base_point(p)?;
    let tr = track_polyline(p, b, &[c(0.0, 0.0), c(-0.5 * p.x(), 0.0)], 1e-2)?;
    tr.branch_state(p, c(-p.x(), 0.0))
}

/// The point `F = (x, base sheet)`, where `g = inf`.
pub fn f_point(p: &SurfaceParams) -> Result<SheetPoint> {
    let b = base_point(p)?;
    let tr = track_polyline(p, b, &[c(0.0, 0.0), c(0.5 * p.x(), 0.0)], 1e-2)?;
    tr.branch_state(p, c(p.x(), 0.0))
}

/// Half of `beta`: the circle `|z| = x` when it separates the slits,
/// otherwise an ellipse through `+-x` whose imaginary semi-axis sits in the
/// widest gap between `tan`, the pole of `w` and `cot`.
fn beta_piece(p: &SurfaceParams, t0: f64, t1: f64) -> Piece {
    let (x, t, k) = (p.x(), p.tan(), p.cot());
    let wp = p.w_pole();
    let clear = p.default_clearance();
    if x > t + clear && x < k - clear && (x - wp).abs() > clear {
        return Piece::arc(c(0.0, 0.0), x, t0, t1, Endpoint::Both);
    }
    let b = if wp - t > k - wp { 0.5 * (t + wp) } else { 0.5 * (wp + k) };
    Piece { curve: Box::new(Ellipse { a: x, b, t0, t1 }), sub: Endpoint::Both }
}

fn beta_plus_leg(p: &SurfaceParams) -> Leg {
    Leg {
        pieces: alloc::vec![beta_piece(p, PI, TAU)],
        lift: Lift::Ref(c(1.0, 0.0)),
        integrate: true,
    }
}

fn beta_minus_leg(p: &SurfaceParams) -> Leg {
    Leg {
        pieces: alloc::vec![beta_piece(p, 0.0, PI)],
        lift: Lift::ConjPrev,
        integrate: true,
    }
}

/// `z = -x e^{it}`, `t in [0, pi]`, from `S` to the point over `x` on the
/// other sheet.
pub fn beta_plus(p: &SurfaceParams) -> Result<CyclePath> {
    Ok(CyclePath {
        name: CycleName::BetaPlus,
        start: s_point(p)?,
        legs: alloc::vec![beta_plus_leg(p)],
        closed: false,
        clearance: p.default_clearance(),
    })
}

/// Second half of `beta`; the lift is the conjugation image of `beta_plus`.
pub fn beta_minus(p: &SurfaceParams) -> Result<CyclePath> {
    let mut first = beta_plus_leg(p);
    first.integrate = false;
    Ok(CyclePath {
        name: CycleName::BetaMinus,
        start: s_point(p)?,
        legs: alloc::vec![first, beta_minus_leg(p)],
        closed: false,
        clearance: p.default_clearance(),
    })
}

pub fn beta(p: &SurfaceParams) -> Result<CyclePath> {
    Ok(CyclePath {
        name: CycleName::Beta,
        start: s_point(p)?,
        legs: alloc::vec![beta_plus_leg(p), beta_minus_leg(p)],
        closed: true,
        clearance: p.default_clearance(),
    })
}

/// Small loop around the puncture `z = y`. `delta` is the radius of the
/// image circle in `w`; since `w - cot` vanishes to second order at the
/// puncture, the `z`-radius is `sqrt(delta)`, capped by the clearance to
/// the other critical points.
pub fn end_loop(p: &SurfaceParams, delta: f64) -> Result<CyclePath> {
    let (x, y, t) = (p.x(), p.y(), p.tan());
    if y <= x {
        return Err(Error::Ordering { x, y });
    }
    let others = p
        .critical_points()
        .iter()
        .map(|q| (q - c(y, 0.0)).norm())
        .filter(|d| *d > 1e-12)
        .fold(f64::INFINITY, f64::min);
    let r = delta.sqrt().min(0.4 * others);
    let d = 0.5 * t;
    let connect = Piece::polyline(&[c(0.0, 0.0), c(0.0, -d), c(y - r, -d), c(y - r, 0.0)]);
    Ok(CyclePath {
        name: CycleName::EndLoop,
        start: base_point(p)?,
        legs: alloc::vec![
            Leg { pieces: connect, lift: Lift::Continue, integrate: false },
            Leg {
                pieces: alloc::vec![Piece::arc(c(y, 0.0), r, PI, PI + TAU, Endpoint::Smooth)],
                lift: Lift::Continue,
                integrate: true,
            },
        ],
        closed: true,
        clearance: p.default_clearance(),
    })
}

fn curve1_leg(p: &SurfaceParams, lift: C64) -> Leg {
    let x = p.x();
    let r = 0.25f64.min(0.5 * x);
    let lo = -0.5 * p.tan();
    let hi = -(p.cot() + 0.25);
    let a = c(-r, lo);
    let b = c(r, lo);
    let cc = c(r, hi);
    let d = c(-r, hi);
    let s = c(-x, 0.0);
    let mut pieces = alloc::vec![Piece::line_sub(s, a, Endpoint::Start)];
    pieces.extend(Piece::polyline(&[a, b, cc, d, a]));
    pieces.push(Piece::line_sub(a, s, Endpoint::End));
    Leg { pieces, lift: Lift::Ref(lift), integrate: true }
}

/// Loop from `S` running clockwise once around the lower slit
/// `[-i cot, -i tan]`.
pub fn curve1(p: &SurfaceParams) -> Result<CyclePath> {
    Ok(CyclePath {
        name: CycleName::Curve1,
        start: s_point(p)?,
        legs: alloc::vec![curve1_leg(p, c(1.0, 0.0))],
        closed: true,
        clearance: p.default_clearance(),
    })
}

/// `curve1` followed by its image under `g -> -g`.
pub fn curve2(p: &SurfaceParams) -> Result<CyclePath> {
    Ok(CyclePath {
        name: CycleName::Curve2,
        start: s_point(p)?,
        legs: alloc::vec![curve1_leg(p, c(1.0, 0.0)), curve1_leg(p, c(-1.0, 0.0))],
        closed: true,
        clearance: p.default_clearance(),
    })
}

/// Closed form of the end residue,
/// `2 pi / sqrt(cot^2 - tan^2) * sqrt((y+x)/(y-x))`.
pub fn scherk_end_residue(p: &SurfaceParams) -> Result<f64> {
    let (x, y) = (p.x(), p.y());
    if !(y - x > 1e-12 * y) {
        return Err(Error::Divergence);
    }
    let k = p.cot() * p.cot() - p.tan() * p.tan();
    Ok(TAU / k.sqrt() * ((y + x) / (y - x)).sqrt())
}

/// `2 Re int_{beta+} dh`.
pub fn vertical_period(p: &SurfaceParams, tol: f64) -> Result<f64> {
    let v = integrate_cycle(&beta_plus(p)?, p, false, tol)?;
    Ok(2.0 * v.p3.re)
}

// ---------------------------------------------------------------------------
// generator loops and the word search

/// A small loop around one critical point, based at `z = 0`.
#[derive(Debug, Clone)]
pub struct Generator {
    pub label: &'static str,
    pub center: C64,
    approach: Vec<C64>,
    radius: f64,
    theta0: f64,
}

/// Loops around `+-x`, `+-i tan`, `+-y`, `+-i cot`.
pub fn generators(p: &SurfaceParams) -> Vec<Generator> {
    let (x, y, t, k) = (p.x(), p.y(), p.tan(), p.cot());
    let crit = p.critical_points();
    let room = |q: C64| 0.3 * crit.iter().map(|o| (o - q).norm()).filter(|d| *d > 1e-12).fold(f64::INFINITY, f64::min);
    let z0 = c(0.0, 0.0);
    let d = 0.5 * t;
    let mut out = Vec::new();
    for (label, s) in [("x", 1.0), ("-x", -1.0)] {
        let r = room(c(s * x, 0.0)).min(0.5 * x);
        out.push(Generator {
            label,
            center: c(s * x, 0.0),
            approach: alloc::vec![z0, c(s * (x - r), 0.0)],
            radius: r,
            theta0: if s > 0.0 { PI } else { 0.0 },
        });
    }
    for (label, s) in [("i*tan", 1.0), ("-i*tan", -1.0)] {
        let r = room(c(0.0, s * t)).min(0.5 * t);
        out.push(Generator {
            label,
            center: c(0.0, s * t),
            approach: alloc::vec![z0, c(0.0, s * (t - r))],
            radius: r,
            theta0: -s * PI / 2.0,
        });
    }
    for (label, s) in [("y", 1.0), ("-y", -1.0)] {
        let r = room(c(s * y, 0.0)).min(0.5 * d);
        out.push(Generator {
            label,
            center: c(s * y, 0.0),
            approach: alloc::vec![z0, c(0.0, d), c(s * y, d), c(s * y, r)],
            radius: r,
            theta0: PI / 2.0,
        });
    }
    for (label, s) in [("i*cot", 1.0), ("-i*cot", -1.0)] {
        let r = room(c(0.0, s * k)).min(0.5 * x);
        out.push(Generator {
            label,
            center: c(0.0, s * k),
            approach: alloc::vec![z0, c(r, 0.0), c(r, s * k)],
            radius: r,
            theta0: 0.0,
        });
    }
    out
}

impl Generator {
    /// Pieces of the loop traversed counterclockwise (`dir = 1`) or
    /// clockwise (`dir = -1`).
    fn pieces(&self, dir: f64) -> Vec<Piece> {
        let mut v = Piece::polyline(&self.approach);
        v.push(Piece::arc(self.center, self.radius, self.theta0, self.theta0 + dir * TAU, Endpoint::Smooth));
        let back: Vec<C64> = self.approach.iter().rev().copied().collect();
        v.extend(Piece::polyline(&back));
        v
    }
}

/// A letter is a generator index with an orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Letter {
    pub gen: usize,
    pub ccw: bool,
}

/// Cycle made from a word in the generator loops, based at `start`.
pub fn word_cycle(p: &SurfaceParams, gens: &[Generator], word: &[Letter], start: SheetPoint) -> CyclePath {
    let mut pieces = Vec::new();
    for l in word {
        pieces.extend(gens[l.gen].pieces(if l.ccw { 1.0 } else { -1.0 }));
    }
    CyclePath {
        name: CycleName::Word,
        start,
        legs: alloc::vec![Leg { pieces, lift: Lift::Continue, integrate: true }],
        closed: true,
        clearance: p.default_clearance(),
    }
}

fn same_state(a: &SheetPoint, b: &SheetPoint) -> bool {
    let close = |u: C64, v: C64| (u - v).norm() <= 1e-6 * (1.0 + u.norm());
    close(a.zprime, b.zprime) && close(a.w, b.w) && close(a.g, b.g)
}

/// Result of the search over words of bounded length.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub labels: Vec<&'static str>,
    /// Number of distinct sheet states over `z = 0` reached by the loops.
    pub fiber_states: usize,
    pub words_examined: usize,
    pub closed_words: usize,
    /// Shortest word meeting the first identity with vanishing third
    /// period, if any.
    pub curve1: Option<Vec<Letter>>,
    /// Shortest word with vanishing horizontal periods and third period
    /// above `0.1`.
    pub curve3: Option<Vec<Letter>>,
    pub curve3_periods: Option<[f64; 3]>,
    /// Distinct values of `Re int phi1` over closed words with
    /// `Re int phi3 = 0`, sorted.
    pub phi1_values: Vec<f64>,
}

impl Calibration {
    pub fn word_string(&self, w: &[Letter]) -> alloc::string::String {
        let mut s = alloc::string::String::new();
        for (i, l) in w.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            s.push_str(self.labels[l.gen]);
            if !l.ccw {
                s.push('\'');
            }
        }
        s
    }
}

/// Enumerate words of length `<= max_len` in the generator loops, keep the
/// closed ones, and select representatives. `target` is `Re int_beta g dh`.
pub fn calibrate(p: &SurfaceParams, max_len: usize, target: f64, tol: f64) -> Result<Calibration> {
    let gens = generators(p);
    let base = base_point(p)?;
    let letters: Vec<Letter> = (0..gens.len()).flat_map(|g| [Letter { gen: g, ccw: true }, Letter { gen: g, ccw: false }]).collect();
    // discover the fiber and the transfer table
    let mut states = alloc::vec![base];
    let mut table: Vec<Vec<([f64; 3], usize)>> = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let mut row = Vec::with_capacity(letters.len());
        for l in &letters {
            let cy = word_cycle(p, &gens, &[*l], states[i]);
            let (v, end) = integrate_cycle_with_end(&cy, p, false, 1e-11)?;
            let j = match states.iter().position(|s| same_state(s, &end)) {
                Some(j) => j,
                None => {
                    states.push(end);
                    states.len() - 1
                }
            };
            row.push((v.re(), j));
        }
        table.push(row);
        i += 1;
    }
    let mut cal = Calibration {
        labels: gens.iter().map(|g| g.label).collect(),
        fiber_states: states.len(),
        words_examined: 0,
        closed_words: 0,
        curve1: None,
        curve3: None,
        curve3_periods: None,
        phi1_values: Vec::new(),
    };
    let mut word: Vec<usize> = Vec::new();
    for len in 1..=max_len {
        word.clear();
        word.resize(len, 0);
        loop {
            cal.words_examined += 1;
            let mut s = 0;
            let mut per = [0.0; 3];
            for &li in &word {
                let (v, j) = table[s][li];
                for k in 0..3 {
                    per[k] += v[k];
                }
                s = j;
            }
            if s == 0 {
                cal.closed_words += 1;
                if per[2].abs() < tol {
                    if !cal.phi1_values.iter().any(|q| (q - per[0]).abs() < 1e-6) {
                        cal.phi1_values.push(per[0]);
                    }
                    if cal.curve1.is_none() && (per[0] + target).abs() < tol {
                        cal.curve1 = Some(word.iter().map(|&li| letters[li]).collect());
                    }
                }
                if cal.curve3.is_none() && per[0].abs() < tol && per[1].abs() < tol && per[2] > 0.1 {
                    cal.curve3 = Some(word.iter().map(|&li| letters[li]).collect());
                    cal.curve3_periods = Some(per);
                }
            }
            // next word in lexicographic order
            let mut done = true;
            for k in (0..len).rev() {
                word[k] += 1;
                if word[k] < letters.len() {
                    done = false;
                    break;
                }
                word[k] = 0;
            }
            if done {
                break;
            }
        }
    }
    cal.phi1_values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    Ok(cal)
}

/// Residuals of the four period identities.
#[derive(Debug, Clone)]
pub struct IdentityReport {
    /// `|Re int_(1) phi1 + Re int_beta g dh|`
    pub a: f64,
    /// `|Re(int_beta g dh - 2 int_beta+ g dh)|`
    pub b: f64,
    /// Imaginary part of the same difference, reported only.
    pub b_imag: f64,
    /// `max |Re int_(2) phi_{1,2}|`
    pub c: f64,
    /// `max |Re int_(3) phi_{1,2}|`
    pub d: f64,
    /// `Re int_(3) phi3`, must be nonzero.
    pub d_third: f64,
    pub tol: f64,
    pub curve1: PeriodVector,
    pub beta_gdh: C64,
    pub beta_plus_gdh: C64,
    pub calibration: Calibration,
}

impl IdentityReport {
    pub fn passes(&self) -> [(char, bool); 4] {
        [
            ('a', self.a < self.tol),
            ('b', self.b < self.tol),
            ('c', self.c < self.tol),
            ('d', self.d < self.tol && self.d_third.abs() > 0.1),
        ]
    }

    /// Calibration error for the first identity off by more than `10 tol`.
    pub fn check(&self) -> Result<()> {
        for (id, r) in [('a', self.a), ('b', self.b), ('c', self.c), ('d', self.d)] {
            if r > 10.0 * self.tol {
                return Err(Error::Calibration { identity: id, residual: r });
            }
        }
        if self.d_third.abs() <= 0.1 {
            return Err(Error::Calibration { identity: 'd', residual: self.d_third });
        }
        Ok(())
    }
}

/// Curve (3): the calibrated word if the search found one, else `beta`.
pub fn curve3(p: &SurfaceParams, cal: &Calibration) -> Result<CyclePath> {
    match &cal.curve3 {
        Some(w) => {
            let mut cy = word_cycle(p, &generators(p), w, base_point(p)?);
            cy.name = CycleName::Curve3;
            Ok(cy)
        }
        None => {
            let mut cy = beta(p)?;
            cy.name = CycleName::Curve3;
            Ok(cy)
        }
    }
}

pub fn verify_identities(p: &SurfaceParams, tol: f64) -> Result<IdentityReport> {
    let qt = (tol * 1e-3).max(1e-12);
    let b = integrate_cycle(&beta(p)?, p, false, qt)?;
    let bp = integrate_cycle(&beta_plus(p)?, p, false, qt)?;
    let cal = calibrate(p, 4, b.gdh.re, tol)?;
    let c1 = integrate_cycle(&curve1(p)?, p, false, qt)?;
    let c2 = integrate_cycle(&curve2(p)?, p, false, qt)?;
    let c3 = integrate_cycle(&curve3(p, &cal)?, p, false, qt)?;
    let diff = b.gdh - bp.gdh * 2.0;
    Ok(IdentityReport {
        a: (c1.p1.re + b.gdh.re).abs(),
        b: diff.re.abs(),
        b_imag: diff.im,
        c: c2.p1.re.abs().max(c2.p2.re.abs()),
        d: c3.p1.re.abs().max(c3.p2.re.abs()),
        d_third: c3.p3.re,
        tol,
        curve1: c1,
        beta_gdh: b.gdh,
        beta_plus_gdh: bp.gdh,
        calibration: cal,
    })
}

/// Named cycle at its default settings.
pub fn named_cycle(p: &SurfaceParams, name: CycleName) -> Result<CyclePath> {
    match name {
        CycleName::Curve1 => curve1(p),
        CycleName::Curve2 => curve2(p),
        CycleName::Curve3 => {
            let b = integrate_cycle(&beta(p)?, p, false, 1e-11)?;
            let cal = calibrate(p, 4, b.gdh.re, 1e-6)?;
            curve3(p, &cal)
        }
        CycleName::Beta => beta(p),
        CycleName::BetaPlus => beta_plus(p),
        CycleName::BetaMinus => beta_minus(p),
        CycleName::EndLoop => end_loop(p, 1e-3),
        CycleName::Word => Err(Error::Domain("words are built with word_cycle")),
    }
}

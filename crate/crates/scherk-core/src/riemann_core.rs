//! Parameters, the torus relation, `W^2`, and branch-tracked continuation.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_4;

use crate::{c, Error, Result, C64, I};

/// One member of the family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceParams {
    alpha: f64,
    x: f64,
    y: f64,
    tan: f64,
    cot: f64,
    xi: C64,
    c: f64,
    relaxed: bool,
}

fn check_finite(v: f64, what: &'static str) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(what))
    }
}

impl SurfaceParams {
    /// Strict constructor: `0 < alpha < pi/4`, `0 < x < y < inf`.
    pub fn new(alpha: f64, x: f64, y: f64) -> Result<Self> {
        let p = Self::relaxed(alpha, x, y)?;
        if y <= x {
            return Err(Error::Ordering { x, y });
        }
        Ok(Self { relaxed: false, ..p })
    }

    /// Same closed forms without the `x < y` rule. Used for the limit
    /// data at `x = y = 1` and for the Case II probes.
    pub fn relaxed(alpha: f64, x: f64, y: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < FRAC_PI_4) {
            return Err(Error::Domain("alpha must lie in (0, pi/4)"));
        }
        check_finite(x, "x must be positive and finite")?;
        check_finite(y, "y must be positive and finite")?;
        let tan = alpha.tan();
        let cot = 1.0 / tan;
        let (t2, c2) = (tan * tan, cot * cot);
        let yy = y * y + 1.0 / (y * y);
        let xi_abs2 = yy + t2 + c2;
        let xi = c(0.0, xi_abs2.sqrt());
        let num = t2 - c2 + xi_abs2;
        let den = 2.0 + c2 * yy;
        let cc = c2 * y * y / (den * den) * num * num;
        Ok(Self { alpha, x, y, tan, cot, xi, c: cc, relaxed: true })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    pub fn tan(&self) -> f64 {
        self.tan
    }
    pub fn cot(&self) -> f64 {
        self.cot
    }
    pub fn xi(&self) -> C64 {
        self.xi
    }
    /// The constant `c`; it is real for every admissible triple.
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn is_relaxed(&self) -> bool {
        self.relaxed
    }

    /// Imaginary coordinate `s` of the poles `z = +-i s` of `w`.
    pub fn w_pole(&self) -> f64 {
        let (y2, c2) = (self.y * self.y, self.cot * self.cot);
        ((1.0 + y2 * c2) / (y2 + c2)).sqrt()
    }

    /// Branch points, punctures and poles of `w`, in a fixed order.
    pub fn critical_points(&self) -> Vec<C64> {
        let (x, y, t, k, s) = (self.x, self.y, self.tan, self.cot, self.w_pole());
        alloc::vec![
            c(x, 0.0),
            c(-x, 0.0),
            c(0.0, t),
            c(0.0, -t),
            c(0.0, k),
            c(0.0, -k),
            c(y, 0.0),
            c(-y, 0.0),
            c(0.0, s),
            c(0.0, -s),
        ]
    }

    /// `1e-3` times the smallest distance between distinct critical points.
    pub fn default_clearance(&self) -> f64 {
        let pts = self.critical_points();
        let mut m = f64::INFINITY;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                let d = (a - b).norm();
                if d > 1e-12 && d < m {
                    m = d;
                }
            }
        }
        1e-3 * m
    }

    /// Distance from `z` to the critical set.
    pub fn critical_distance(&self, z: C64) -> f64 {
        self.critical_points()
            .iter()
            .map(|q| (z - q).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Right side of the torus equation: `-(z^2+tan^2)(z^2+cot^2)`.
pub fn zprime_squared(z: C64, p: &SurfaceParams) -> C64 {
    let z2 = z * z;
    -(z2 + p.tan * p.tan) * (z2 + p.cot * p.cot)
}

/// `cot^2 + (cot^2 - tan^2)/(c f^2 - 1)` with `f = (z^2 - y^-2)/(Z' + xi z)`.
///
/// `f` also equals `(xi z - Z')/(z^2 - y^2)`; each quotient is taken in the
/// form with the larger denominator, and `1/f` replaces `f` once `|f| > 1`
/// so that the puncture `z = +-y` stays regular.
pub fn w_squared(z: C64, zprime: C64, p: &SurfaceParams) -> Result<C64> {
    let (t2, c2) = (p.tan * p.tan, p.cot * p.cot);
    let n1 = z * z - 1.0 / (p.y * p.y);
    let d1 = zprime + p.xi * z;
    let n2 = p.xi * z - zprime;
    let d2 = z * z - p.y * p.y;
    let f = if d1.norm() >= d2.norm() { n1 / d1 } else { n2 / d2 };
    if f.norm() <= 1.0 {
        let q = p.c * f * f;
        let den = q - 1.0;
        if den.norm() <= 1e-14 * (1.0 + q.norm()) {
            return Err(Error::Pole { z });
        }
        Ok(c2 + (c2 - t2) / den)
    } else {
        let u = if n1.norm() >= n2.norm() { d1 / n1 } else { d2 / n2 };
        let u2 = u * u;
        let den = p.c - u2;
        if den.norm() <= 1e-14 * (p.c + u2.norm()) {
            return Err(Error::Pole { z });
        }
        Ok(c2 + (c2 - t2) * u2 / den)
    }
}

/// `(x+z)/(x-z) * (cot+w)/(cot-w)`.
pub fn g_squared(z: C64, w: C64, p: &SurfaceParams) -> Result<C64> {
    let a = p.x - z;
    let b = p.cot - w;
    if a.norm() == 0.0 || b.norm() <= 1e-15 * p.cot {
        return Err(Error::Pole { z });
    }
    Ok((p.x + z) / a * (p.cot + w) / b)
}

/// A point of the cover: `z` with coherent values of `Z'`, `w`, `g`.
/// At the branch points `z = +-x` of `g`, `g` is stored as `0` or `inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SheetPoint {
    pub z: C64,
    pub zprime: C64,
    pub w: C64,
    pub g: C64,
}

impl SheetPoint {
    pub fn g_is_branch(&self) -> bool {
        self.g.norm() == 0.0 || !self.g.is_finite()
    }

    /// Largest residual of the three defining relations, scaled.
    pub fn residual(&self, p: &SurfaceParams) -> f64 {
        let z = self.z;
        let r1 = (self.zprime * self.zprime - zprime_squared(z, p)).norm() / (1.0 + z.norm().powi(4));
        let r2 = match w_squared(z, self.zprime, p) {
            Ok(w2) => (self.w * self.w - w2).norm() / (1.0 + w2.norm()),
            Err(_) => f64::INFINITY,
        };
        let r3 = if self.g_is_branch() {
            0.0
        } else {
            match g_squared(z, self.w, p) {
                Ok(g2) => (self.g * self.g - g2).norm() / (1.0 + g2.norm()),
                Err(_) => f64::INFINITY,
            }
        };
        r1.max(r2).max(r3)
    }
}

/// Base point: `z = 0`, `Z' = -i`, `w > 0`, `g > 0`.
pub fn base_point(p: &SurfaceParams) -> Result<SheetPoint> {
    let z = C64::new(0.0, 0.0);
    let zprime = -I;
    let mut w = w_squared(z, zprime, p)?.sqrt();
    if w.re < 0.0 {
        w = -w;
    }
    let mut g = g_squared(z, w, p)?.sqrt();
    if g.re < 0.0 {
        g = -g;
    }
    Ok(SheetPoint { z, zprime, w, g })
}

/// Linear extrapolation of the next value from the last two.
fn predicted(prev: C64, prev2: Option<C64>, ratio: f64) -> C64 {
    match prev2 {
        Some(q) if q.is_finite() && prev.is_finite() => prev + (prev - q) * ratio.min(4.0),
        _ => prev,
    }
}

/// Choose `cand` or `-cand` by direction relative to `prev`.
pub fn pick_branch(cand: C64, prev: C64, prev2: Option<C64>) -> C64 {
    let d = predicted(prev, prev2, 1.0);
    if (cand * d.conj()).re >= 0.0 {
        cand
    } else {
        -cand
    }
}

/// The root nearest the prediction, or `None` when the other root is not
/// clearly farther away. Large values are extrapolated through their
/// reciprocal, which is smooth near a pole; small values directly, which
/// sees a real function pass through a simple zero.
fn nearest_root(cand: C64, prev: C64, prev2: Option<C64>, ratio: f64) -> Option<C64> {
    let recip = prev.norm() > 1.0;
    let inv = |v: C64| if recip { v.inv() } else { v };
    let d = predicted(inv(prev), prev2.map(inv), ratio);
    let r = inv(cand);
    if d.norm() == 0.0 {
        // leaving a zero: either root is admissible
        return Some(cand);
    }
    let (dp, dm) = ((r - d).norm(), (r + d).norm());
    let (v, near, far) = if dp <= dm { (cand, dp, dm) } else { (-cand, dm, dp) };
    if near <= ROOT_SEPARATION * far {
        Some(v)
    } else {
        None
    }
}

/// The chosen root must be this much closer to the prediction than the other.
pub const ROOT_SEPARATION: f64 = 0.5;
const MAX_HALVINGS: u32 = 24;

enum StepErr {
    Ambiguous,
    Hard(Error),
}

/// Sequential continuation state.
#[derive(Debug, Clone, Copy)]
pub struct Tracker {
    cur: SheetPoint,
    prev: Option<SheetPoint>,
    g_ref: Option<C64>,
}

impl Tracker {
    pub fn new(start: SheetPoint) -> Self {
        Self { cur: start, prev: None, g_ref: None }
    }

    /// Start at a branch point of `g`. The first step picks the root with
    /// `Re(g conj(g_ref)) >= 0`.
    pub fn from_branch(start: SheetPoint, g_ref: C64) -> Self {
        Self { cur: start, prev: None, g_ref: Some(g_ref) }
    }

    pub fn current(&self) -> SheetPoint {
        self.cur
    }

    fn try_step(&self, p: &SurfaceParams, z: C64) -> core::result::Result<SheetPoint, StepErr> {
        let pr = self.prev;
        let ratio = match pr {
            Some(q) => {
                let d = (self.cur.z - q.z).norm();
                if d > 0.0 {
                    (z - self.cur.z).norm() / d
                } else {
                    1.0
                }
            }
            None => 1.0,
        };
        let zp2 = zprime_squared(z, p);
        if zp2.norm() == 0.0 {
            return Err(StepErr::Hard(Error::Singular { z }));
        }
        let zprime = nearest_root(zp2.sqrt(), self.cur.zprime, pr.map(|q| q.zprime), ratio)
            .ok_or(StepErr::Ambiguous)?;
        let w2 = w_squared(z, zprime, p).map_err(StepErr::Hard)?;
        let w = nearest_root(w2.sqrt(), self.cur.w, pr.map(|q| q.w), ratio).ok_or(StepErr::Ambiguous)?;
        let g2 = g_squared(z, w, p).map_err(StepErr::Hard)?;
        let gc = g2.sqrt();
        let g = if let Some(r) = self.g_ref {
            if (gc * r.conj()).re >= 0.0 {
                gc
            } else {
                -gc
            }
        } else {
            let prev2 = pr.map(|q| q.g).filter(|q| q.norm() > 0.0 && q.is_finite());
            nearest_root(gc, self.cur.g, prev2, ratio).ok_or(StepErr::Ambiguous)?
        };
        Ok(SheetPoint { z, zprime, w, g })
    }

    fn push(&mut self, sp: SheetPoint) {
        self.prev = Some(self.cur);
        self.cur = sp;
        self.g_ref = None;
    }

    /// Continue to `z` along the chord from the current point, halving on
    /// ambiguity.
    pub fn step(&mut self, p: &SurfaceParams, z: C64) -> Result<SheetPoint> {
        self.step_depth(p, z, 0)?;
        Ok(self.cur)
    }

    fn step_depth(&mut self, p: &SurfaceParams, z: C64, depth: u32) -> Result<()> {
        match self.try_step(p, z) {
            Ok(sp) => {
                self.push(sp);
                Ok(())
            }
            Err(StepErr::Hard(e)) => Err(e),
            Err(StepErr::Ambiguous) => {
                if depth >= MAX_HALVINGS {
                    return Err(Error::StepFailure { z });
                }
                let zm = (self.cur.z + z) * 0.5;
                self.step_depth(p, zm, depth + 1)?;
                self.step_depth(p, z, depth + 1)
            }
        }
    }

    /// Values at a branch point `zb` of `g` reached from the current point:
    /// `Z'` and `w` by continuity, `g` set to `0` or `inf`.
    pub fn branch_state(&self, p: &SurfaceParams, zb: C64) -> Result<SheetPoint> {
        let mut t = *self;
        // stop short enough to see the local sheet, far enough to avoid
        // cancellation in z - zb
        let gap = (zb - t.cur.z).norm();
        let floor = 1e-9 * (1.0 + zb.norm());
        if gap > floor {
            let near = zb - (zb - t.cur.z) * (1e-7f64).max(floor / gap);
            t.step(p, near)?;
        }
        let zp2 = zprime_squared(zb, p);
        let zprime = pick_branch(zp2.sqrt(), t.cur.zprime, None);
        let w = pick_branch(w_squared(zb, zprime, p)?.sqrt(), t.cur.w, None);
        let g = if t.cur.g.norm() < 1.0 {
            C64::new(0.0, 0.0)
        } else {
            C64::new(f64::INFINITY, 0.0)
        };
        Ok(SheetPoint { z: zb, zprime, w, g })
    }
}

/// Polyline with start values and sampling policy.
#[derive(Debug, Clone)]
pub struct PathSpec {
    pub waypoints: Vec<C64>,
    pub start: SheetPoint,
    pub max_step: f64,
    pub clearance: f64,
}

impl PathSpec {
    pub fn new(waypoints: Vec<C64>, start: SheetPoint, p: &SurfaceParams) -> Self {
        Self { waypoints, start, max_step: 1e-2, clearance: p.default_clearance() }
    }
}

fn segment_distance(a: C64, b: C64, q: C64) -> f64 {
    let d = b - a;
    let l2 = d.norm_sqr();
    let t = if l2 == 0.0 { 0.0 } else { (((q - a) * d.conj()).re / l2).clamp(0.0, 1.0) };
    (a + d * t - q).norm()
}

/// Sampled continuation along a polyline. The first sample is the start.
pub fn continue_along(path: &PathSpec, p: &SurfaceParams) -> Result<Vec<SheetPoint>> {
    let crit = p.critical_points();
    for w in path.waypoints.windows(2) {
        for q in &crit {
            let d = segment_distance(w[0], w[1], *q);
            if d < path.clearance {
                return Err(Error::Clearance { z: *q, dist: d });
            }
        }
    }
    let mut tr = Tracker::new(path.start);
    let mut out = alloc::vec![path.start];
    for w in path.waypoints.windows(2) {
        let n = ((w[1] - w[0]).norm() / path.max_step).ceil().max(1.0) as usize;
        for k in 1..=n {
            let z = w[0] + (w[1] - w[0]) * (k as f64 / n as f64);
            out.push(tr.step(p, z)?);
        }
    }
    Ok(out)
}

/// Single-point evaluation nearest to `hint` (no prediction).
pub fn evaluate_sheet(p: &SurfaceParams, z: C64, hint: &SheetPoint) -> Result<SheetPoint> {
    let zprime = pick_branch(zprime_squared(z, p).sqrt(), hint.zprime, None);
    let w = pick_branch(w_squared(z, zprime, p)?.sqrt(), hint.w, None);
    let g = pick_branch(g_squared(z, w, p)?.sqrt(), hint.g, None);
    Ok(SheetPoint { z, zprime, w, g })
}

//! The period problem: the limit root `alpha*` and the family through it.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_4;

use crate::linalg::{cross, dot, norm, solve};
use crate::periods::{curve1, integrate_cycle};
use crate::riemann_core::SurfaceParams;
use crate::{Error, Result};

/// `(Re int_(1) phi~1, Re int_(1) phi~2)` with the rotated Gauss map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodResidual {
    pub f1: f64,
    pub f2: f64,
    pub err: f64,
}

impl PeriodResidual {
    pub fn max_abs(&self) -> f64 {
        self.f1.abs().max(self.f2.abs())
    }
}

/// Default quadrature tolerance inside the solver loops.
pub const QUAD_TOL: f64 = 1e-12;

pub fn period_residual_params(p: &SurfaceParams, tol: f64) -> Result<PeriodResidual> {
    let v = integrate_cycle(&curve1(p)?, p, true, tol)?;
    Ok(PeriodResidual { f1: v.p1.re, f2: v.p2.re, err: v.err })
}

pub fn period_residual(alpha: f64, x: f64, y: f64, tol: f64) -> Result<PeriodResidual> {
    period_residual_params(&SurfaceParams::new(alpha, x, y)?, tol)
}

/// Residual with the ordering rule switched off (limit data, Case II).
pub fn period_residual_relaxed(alpha: f64, x: f64, y: f64, tol: f64) -> Result<PeriodResidual> {
    period_residual_params(&SurfaceParams::relaxed(alpha, x, y)?, tol)
}

fn f2_limit(alpha: f64) -> Result<f64> {
    Ok(period_residual_relaxed(alpha, 1.0, 1.0, QUAD_TOL)?.f2)
}

/// Outcome of the scan and root search for the limit data.
#[derive(Debug, Clone)]
pub struct AlphaStar {
    pub alpha: f64,
    pub f2: f64,
    pub sign_changes: usize,
    pub scan: Vec<(f64, f64)>,
    pub bracket: (f64, f64),
}

pub const SCAN_POINTS: usize = 64;

/// 64-point scan of `F2(., 1, 1)` on `(0.01, pi/4 - 0.01)`.
pub fn chm_scan() -> Result<(Vec<(f64, f64)>, usize, (f64, f64))> {
    let (a, b) = (0.01, FRAC_PI_4 - 0.01);
    let mut scan = Vec::with_capacity(SCAN_POINTS);
    for k in 0..SCAN_POINTS {
        let al = a + (b - a) * k as f64 / (SCAN_POINTS - 1) as f64;
        scan.push((al, f2_limit(al)?));
    }
    let mut changes = 0;
    let mut bracket = (f64::NAN, f64::NAN);
    for w in scan.windows(2) {
        if w[0].1.signum() != w[1].1.signum() {
            changes += 1;
            bracket = (w[0].0, w[1].0);
        }
    }
    Ok((scan, changes, bracket))
}

/// `alpha*` by scan and bisection.
pub fn chm_alpha_star(tol: f64) -> Result<AlphaStar> {
    let (scan, changes, (mut lo, mut hi)) = chm_scan()?;
    if changes != 1 {
        return Err(Error::Bracket { sign_changes: changes });
    }
    let mut flo = f2_limit(lo)?;
    let bracket = (lo, hi);
    let mut mid = 0.5 * (lo + hi);
    let mut fm = f2_limit(mid)?;
    for _ in 0..200 {
        if fm.abs() < tol && hi - lo < 1e-12 {
            break;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        let next = 0.5 * (lo + hi);
        if next == mid {
            break;
        }
        mid = next;
        fm = f2_limit(mid)?;
    }
    if fm.abs() >= tol {
        return Err(Error::NonConvergence { what: "bisection for alpha*", err: fm.abs() });
    }
    Ok(AlphaStar { alpha: mid, f2: fm, sign_changes: changes, scan, bracket })
}

/// Secant iteration for the same root, started from the scan bracket.
pub fn chm_alpha_star_secant(bracket: (f64, f64), tol: f64) -> Result<f64> {
    let (mut a, mut b) = bracket;
    let (mut fa, mut fb) = (f2_limit(a)?, f2_limit(b)?);
    for _ in 0..60 {
        if fb == fa {
            break;
        }
        let c = b - fb * (b - a) / (fb - fa);
        if !(c > 0.0 && c < FRAC_PI_4) {
            return Err(Error::NonConvergence { what: "secant for alpha*", err: fb.abs() });
        }
        a = b;
        fa = fb;
        b = c;
        fb = f2_limit(b)?;
        if fb.abs() < tol && (b - a).abs() < 1e-12 {
            return Ok(b);
        }
    }
    if fb.abs() < tol {
        Ok(b)
    } else {
        Err(Error::NonConvergence { what: "secant for alpha*", err: fb.abs() })
    }
}

/// A point of the solution curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyPoint {
    /// `s/(1+s)` with `s` the arclength in `(alpha, x, y)` from the anchor.
    pub t: f64,
    pub alpha: f64,
    pub x: f64,
    pub y: f64,
    pub residual: PeriodResidual,
}

pub const MAX_NEWTON: usize = 40;
pub const MAX_HALVINGS: usize = 8;

fn fd_step(v: f64) -> f64 {
    1e-5 * (1.0 + v.abs())
}

fn eval(u: [f64; 3]) -> Result<PeriodResidual> {
    period_residual_relaxed(u[0], u[1], u[2], QUAD_TOL)
}

fn jacobian(u: [f64; 3], f0: PeriodResidual) -> Result<[[f64; 3]; 2]> {
    let mut j = [[0.0; 3]; 2];
    for k in 0..3 {
        let mut v = u;
        let h = fd_step(u[k]);
        v[k] += h;
        let f = eval(v)?;
        j[0][k] = (f.f1 - f0.f1) / h;
        j[1][k] = (f.f2 - f0.f2) / h;
    }
    Ok(j)
}

/// Damped Newton on `(x, y)` at fixed `alpha`.
pub fn solve_at_alpha(alpha: f64, seed: (f64, f64), tol: f64) -> Result<FamilyPoint> {
    let mut v = [seed.0, seed.1];
    let mut f = period_residual(alpha, v[0], v[1], QUAD_TOL)?;
    for _ in 0..MAX_NEWTON {
        if f.max_abs() < tol {
            return Ok(FamilyPoint { t: f64::NAN, alpha, x: v[0], y: v[1], residual: f });
        }
        let mut j = [[0.0; 2]; 2];
        for k in 0..2 {
            let mut w = v;
            let h = fd_step(v[k]);
            w[k] += h;
            let g = period_residual(alpha, w[0], w[1], QUAD_TOL)?;
            j[0][k] = (g.f1 - f.f1) / h;
            j[1][k] = (g.f2 - f.f2) / h;
        }
        let d = solve(j, [-f.f1, -f.f2])?;
        let mut lam = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let w = [v[0] + lam * d[0], v[1] + lam * d[1]];
            if let Ok(g) = period_residual(alpha, w[0], w[1], QUAD_TOL) {
                if g.max_abs() < f.max_abs() {
                    v = w;
                    f = g;
                    accepted = true;
                    break;
                }
            }
            lam *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence { what: "Newton at fixed alpha", err: f.max_abs() });
        }
    }
    if f.max_abs() < tol {
        Ok(FamilyPoint { t: f64::NAN, alpha, x: v[0], y: v[1], residual: f })
    } else {
        Err(Error::NonConvergence { what: "Newton at fixed alpha", err: f.max_abs() })
    }
}

/// Unit null vector of a 2x3 Jacobian, oriented along `prev`.
fn tangent(j: [[f64; 3]; 2], prev: [f64; 3]) -> Result<[f64; 3]> {
    let t = cross(j[0], j[1]);
    let n = norm(t);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::Jacobian);
    }
    let s = if dot(t, prev) < 0.0 { -1.0 / n } else { 1.0 / n };
    Ok([t[0] * s, t[1] * s, t[2] * s])
}

/// Corrector: Newton on `[F(u); tau . (u - u_pred)] = 0`.
fn correct(u_pred: [f64; 3], tau: [f64; 3], tol: f64) -> Result<([f64; 3], PeriodResidual)> {
    let mut u = u_pred;
    let mut f = eval(u)?;
    let aug = |u: [f64; 3]| dot(tau, [u[0] - u_pred[0], u[1] - u_pred[1], u[2] - u_pred[2]]);
    for _ in 0..MAX_NEWTON {
        if f.max_abs() < tol {
            return Ok((u, f));
        }
        let j = jacobian(u, f)?;
        let d = solve([j[0], j[1], tau], [-f.f1, -f.f2, -aug(u)])?;
        let mut lam = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let w = [u[0] + lam * d[0], u[1] + lam * d[1], u[2] + lam * d[2]];
            if let Ok(g) = eval(w) {
                if g.max_abs() < f.max_abs() {
                    u = w;
                    f = g;
                    accepted = true;
                    break;
                }
            }
            lam *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if f.max_abs() < tol {
        Ok((u, f))
    } else {
        Err(Error::NonConvergence { what: "continuation corrector", err: f.max_abs() })
    }
}

/// Result of a continuation run.
#[derive(Debug, Clone)]
pub struct Family {
    pub alpha_star: f64,
    pub points: Vec<FamilyPoint>,
    /// Set when the run stopped early; `points` ends at the last good one.
    pub stopped: Option<Error>,
}

/// Pseudo-arclength continuation from `(alpha*, 1, 1)` toward `x < 1 < y`.
/// `s_max` is the arclength budget in `(alpha, x, y)`, split in `steps`.
pub fn continue_family(s_max: f64, steps: usize, tol: f64) -> Result<Family> {
    let star = chm_alpha_star(tol * 1e-2)?;
    let u0 = [star.alpha, 1.0, 1.0];
    let f0 = eval(u0)?;
    let mut points = alloc::vec![FamilyPoint { t: 0.0, alpha: u0[0], x: 1.0, y: 1.0, residual: f0 }];
    // initial direction: decreasing x
    let mut tau = tangent(jacobian(u0, f0)?, [0.0, -1.0, 1.0])?;
    let mut u = u0;
    let mut s = 0.0;
    let h0 = s_max / steps as f64;
    let mut stopped = None;
    for _ in 0..steps {
        let mut h = h0;
        let mut done = None;
        for _ in 0..=MAX_HALVINGS {
            let pred = [u[0] + h * tau[0], u[1] + h * tau[1], u[2] + h * tau[2]];
            match correct(pred, tau, tol) {
                Ok((v, f)) if v[2] > v[1] && v[1] > v[0].tan() => {
                    done = Some((v, f, h));
                    break;
                }
                Ok(_) => {
                    stopped = Some(Error::Domain("continuation left the admissible region"));
                }
                Err(e) => stopped = Some(e),
            }
            h *= 0.5;
        }
        let Some((v, f, _)) = done else { break };
        stopped = None;
        let ds = norm([v[0] - u[0], v[1] - u[1], v[2] - u[2]]);
        s += ds;
        let j = jacobian(v, f)?;
        tau = tangent(j, tau)?;
        u = v;
        points.push(FamilyPoint { t: s / (1.0 + s), alpha: v[0], x: v[1], y: v[2], residual: f });
    }
    Ok(Family { alpha_star: star.alpha, points, stopped })
}

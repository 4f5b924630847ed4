//! Gauss map, height differential, Weierstrass forms and symmetries.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use crate::riemann_core::{base_point, g_squared, SheetPoint, SurfaceParams, Tracker};
use crate::{c, Error, Result, C64, I};

/// `g^2` from the sheet data.
pub fn gauss_map_squared(sp: &SheetPoint, p: &SurfaceParams) -> Result<C64> {
    g_squared(sp.z, sp.w, p)
}

/// `e^{-i pi/4} g`.
pub fn gauss_map_rotated(g: C64) -> C64 {
    g * c(FRAC_1_SQRT_2, -FRAC_1_SQRT_2)
}

/// `dh = dz / Z'`.
pub fn height_differential(sp: &SheetPoint, dz: C64) -> Result<C64> {
    if sp.zprime.norm() == 0.0 {
        return Err(Error::Singular { z: sp.z });
    }
    Ok(dz / sp.zprime)
}

/// The three forms contracted with a tangent vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FormValue {
    pub phi1: C64,
    pub phi2: C64,
    pub phi3: C64,
}

impl FormValue {
    /// `phi1^2 + phi2^2 + phi3^2`, relative to `|phi|^2`.
    pub fn null_defect(&self) -> f64 {
        let s = self.phi1 * self.phi1 + self.phi2 * self.phi2 + self.phi3 * self.phi3;
        let n = self.phi1.norm_sqr() + self.phi2.norm_sqr() + self.phi3.norm_sqr();
        if n == 0.0 {
            0.0
        } else {
            s.norm() / n
        }
    }
}

/// Forms for a given `g` and `dh`.
#[inline]
pub fn forms_from(g: C64, dh: C64) -> FormValue {
    let gi = g.inv();
    FormValue {
        phi1: (gi - g) * dh * 0.5,
        phi2: (gi + g) * dh * I * 0.5,
        phi3: dh,
    }
}

/// `1/2 (1/g - g, i/g + i g, 2) dh`, with `g` rotated when asked.
pub fn phi_forms(sp: &SheetPoint, dz: C64, rotated: bool) -> Result<FormValue> {
    if sp.g_is_branch() {
        return Err(Error::Pole { z: sp.z });
    }
    let dh = height_differential(sp, dz)?;
    let g = if rotated { gauss_map_rotated(sp.g) } else { sp.g };
    Ok(forms_from(g, dh))
}

/// Limit of `g^4` as `x, y -> 1`, written in `w`.
pub fn chm_gauss_quartic(w: C64, p: &SurfaceParams) -> Result<C64> {
    let (t, k) = (p.tan(), p.cot());
    let a = t + w;
    let b = k - w;
    if a.norm() <= 1e-15 || b.norm() <= 1e-15 {
        return Err(Error::Pole { z: w });
    }
    let r = (k + w) / b;
    Ok((w - t) / a * r * r * r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Involution {
    /// `(g, z) -> (-g, z)`
    Rho,
    /// `z -> conj z`, `w -> conj w`, `g -> conj g`
    ConjZ,
    /// `z -> -conj z`, `w -> -conj w`, `g -> 1/conj g`
    AntiConjZ,
    /// `(g, z) -> (-1/conj g, -conj z)`
    Sigma,
}

impl Involution {
    pub fn apply(self, sp: &SheetPoint) -> SheetPoint {
        let SheetPoint { z, zprime, w, g } = *sp;
        match self {
            Involution::Rho => SheetPoint { z, zprime, w, g: -g },
            Involution::ConjZ => SheetPoint { z: z.conj(), zprime: -zprime.conj(), w: w.conj(), g: g.conj() },
            Involution::AntiConjZ => SheetPoint {
                z: -z.conj(),
                zprime: zprime.conj(),
                w: -w.conj(),
                g: g.conj().inv(),
            },
            Involution::Sigma => SheetPoint {
                z: -z.conj(),
                zprime: zprime.conj(),
                w: -w.conj(),
                g: -g.conj().inv(),
            },
        }
    }
}

/// One row of the symmetry checks along a curve family.
#[derive(Debug, Clone)]
pub struct RowCheck {
    pub name: &'static str,
    pub samples: usize,
    /// Largest scale-aware deviation from the stated property.
    pub max_dev: f64,
}

/// Samples of a symmetry curve: sheet data with the unit tangent.
struct Samples {
    pts: Vec<(SheetPoint, C64)>,
}

fn goto(p: &SurfaceParams, tr: &mut Tracker, pts: &[C64], h: f64) -> Result<()> {
    for w in pts.windows(2) {
        let n = ((w[1] - w[0]).norm() / h).ceil().max(1.0) as usize;
        for k in 1..=n {
            tr.step(p, w[0] + (w[1] - w[0]) * (k as f64 / n as f64))?;
        }
    }
    Ok(())
}

/// Sample `n` points strictly inside the segment `[a, b]` starting from the
/// tracker's current position, which must lie on the segment.
fn sample_segment(p: &SurfaceParams, tr: Tracker, a: C64, b: C64, n: usize, h: f64) -> Result<Vec<(SheetPoint, C64)>> {
    let tangent = (b - a) / (b - a).norm();
    let ts: Vec<C64> = (1..=n).map(|k| a + (b - a) * (k as f64 / (n + 1) as f64)).collect();
    let z0 = tr.current().z;
    let proj = |z: C64| ((z - a) * tangent.conj()).re;
    let split = ts.iter().position(|z| proj(*z) > proj(z0)).unwrap_or(n);
    let mut res: Vec<Option<SheetPoint>> = alloc::vec![None; n];
    let (mut fwd, mut last) = (tr, z0);
    for k in split..n {
        goto(p, &mut fwd, &[last, ts[k]], h)?;
        last = ts[k];
        res[k] = Some(fwd.current());
    }
    let (mut back, mut last) = (tr, z0);
    for k in (0..split).rev() {
        goto(p, &mut back, &[last, ts[k]], h)?;
        last = ts[k];
        res[k] = Some(back.current());
    }
    Ok(res.into_iter().flatten().map(|s| (s, tangent)).collect())
}

fn row_samples(p: &SurfaceParams, row: usize, n: usize) -> Result<Samples> {
    let b = base_point(p)?;
    let (x, y, t, k) = (p.x(), p.y(), p.tan(), p.cot());
    let h = 2e-3;
    let d = 0.5 * t;
    let mut tr = Tracker::new(b);
    let zero = c(0.0, 0.0);
    let pts = match row {
        // (-x, x)
        0 => sample_segment(p, tr, c(-x, 0.0), c(x, 0.0), n, h)?,
        // (x, y), reached above x
        1 => {
            let m = 0.5 * (x + y);
            goto(p, &mut tr, &[zero, c(0.0, d), c(m, d), c(m, 0.0)], h)?;
            sample_segment(p, tr, c(x, 0.0), c(y, 0.0), n, h)?
        }
        // (y, inf) then (-inf, -x), joined by a large arc
        2 => {
            let r = 4.0 * (y + 1.0);
            let m = 0.5 * (y + r);
            goto(p, &mut tr, &[zero, c(0.0, d), c(m, d), c(m, 0.0)], h)?;
            let n1 = n / 2;
            let mut a = sample_segment(p, tr, c(y, 0.0), c(r, 0.0), n1, h)?;
            goto(p, &mut tr, &[c(m, 0.0), c(r, 0.0)], h)?;
            let steps = 4000;
            for j in 1..=steps {
                let th = core::f64::consts::PI * j as f64 / steps as f64;
                tr.step(p, c(r * th.cos(), r * th.sin()))?;
            }
            // now at -r; walk in along the axis
            let mut bseg = sample_segment(p, tr, c(-r, 0.0), c(-x, 0.0), n - n1, h)?;
            a.append(&mut bseg);
            a
        }
        // upper slit, entered from the right
        3 | 4 => {
            let s = if row == 3 { 1.0 } else { -1.0 };
            let e = 0.5 * x.min(t);
            let m = 0.5 * (t + k);
            goto(p, &mut tr, &[zero, c(e, 0.0), c(e, s * m), c(0.0, s * m)], h)?;
            sample_segment(p, tr, c(0.0, s * t), c(0.0, s * k), n, h)?
        }
        _ => return Err(Error::Domain("row index")),
    };
    Ok(Samples { pts })
}

const ROW_NAMES: [&str; 5] = ["(-x,x)", "(x,y)", "(y,inf,-x)", "i(tan,cot)", "-i(tan,cot)"];

/// Gauss-map rows: real on `(-x,x)`, imaginary on the other two real
/// segments, unimodular on the two slits. Each row is sampled at `n` points.
pub fn gauss_table(p: &SurfaceParams, n: usize) -> Result<Vec<RowCheck>> {
    let mut out = Vec::new();
    for row in 0..5 {
        let s = row_samples(p, row, n)?;
        let mut m: f64 = 0.0;
        for (sp, _) in &s.pts {
            let g = sp.g;
            let dev = match row {
                0 => g.im.abs() / (1.0 + g.norm()),
                1 | 2 => g.re.abs() / (1.0 + g.norm()),
                _ => (g.norm() - 1.0).abs(),
            };
            m = m.max(dev);
        }
        out.push(RowCheck { name: ROW_NAMES[row], samples: s.pts.len(), max_dev: m });
    }
    Ok(out)
}

/// Height-differential rows: `dh` of the unit tangent is imaginary on all
/// five curve families.
pub fn dh_table(p: &SurfaceParams, n: usize) -> Result<Vec<RowCheck>> {
    let mut out = Vec::new();
    for row in 0..5 {
        let s = row_samples(p, row, n)?;
        let mut m: f64 = 0.0;
        for (sp, tangent) in &s.pts {
            let dh = height_differential(sp, *tangent)?;
            m = m.max(dh.re.abs() / dh.norm());
        }
        out.push(RowCheck { name: ROW_NAMES[row], samples: s.pts.len(), max_dev: m });
    }
    Ok(out)
}

/// Largest relative gap between `(g^2)^2` and [`chm_gauss_quartic`] over
/// `n` points of a circle `|z| = r` on the base sheet.
pub fn chm_comparison(p: &SurfaceParams, r: f64, n: usize) -> Result<f64> {
    let b = base_point(p)?;
    let mut tr = Tracker::new(b);
    let h = 2e-3;
    goto(p, &mut tr, &[c(0.0, 0.0), c(r, 0.0)], h)?;
    let sub = 40;
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for q in 1..=sub {
            let th = core::f64::consts::TAU * (j as f64 + q as f64 / sub as f64) / n as f64;
            tr.step(p, c(r * th.cos(), r * th.sin()))?;
        }
        let sp = tr.current();
        let g2 = gauss_map_squared(&sp, p)?;
        let q4 = chm_gauss_quartic(sp.w, p)?;
        let rel = (g2 * g2 - q4).norm() / q4.norm().max((g2 * g2).norm());
        worst = worst.max(rel);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn rotation() {
        assert!((gauss_map_rotated(c(1.0, 0.0)) - c(FRAC_1_SQRT_2, -FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((gauss_map_rotated(c(FRAC_1_SQRT_2, FRAC_1_SQRT_2)) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn quartic_anchors() {
        let p = SurfaceParams::relaxed(PI / 8.0, 1.0, 1.0).unwrap();
        assert!(chm_gauss_quartic(c(p.tan(), 0.0), &p).unwrap().norm() < 1e-15);
        assert!((chm_gauss_quartic(c(0.0, 0.0), &p).unwrap() + 1.0).norm() < 1e-14);
        assert!(chm_gauss_quartic(c(p.cot(), 0.0), &p).is_err());
    }

    #[test]
    fn involutions_square_to_identity() {
        let sp = SheetPoint { z: c(0.3, 0.2), zprime: c(-0.1, 1.2), w: c(0.7, -0.4), g: c(1.3, 0.5) };
        for inv in [Involution::Rho, Involution::ConjZ, Involution::AntiConjZ, Involution::Sigma] {
            let b = inv.apply(&inv.apply(&sp));
            assert!((b.z - sp.z).norm() + (b.zprime - sp.zprime).norm() + (b.w - sp.w).norm() + (b.g - sp.g).norm() < 1e-12);
        }
    }
}

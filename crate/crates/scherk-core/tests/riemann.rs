use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use scherk_core::riemann_core::*;
use scherk_core::weierstrass::Involution;
use scherk_core::{Error, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

const ALPHAS: [f64; 3] = [PI / 16.0, PI / 8.0, PI / 6.0];

fn smoke() -> SurfaceParams {
    SurfaceParams::new(PI / 8.0, 1.05, 1.30).unwrap()
}

#[test]
fn xi_closed_form_at_pi_over_8() {
    let p = SurfaceParams::new(PI / 8.0, 1.0, 1.0 + 1e-9).unwrap();
    assert!((p.xi() - c(0.0, 8f64.sqrt())).norm() < 1e-8);
    // exactly at y = 1
    let q = SurfaceParams::new(PI / 8.0, 0.5, 1.0).unwrap();
    assert!((q.xi() - c(0.0, 2.0 * 2f64.sqrt())).norm() < 1e-12);
    assert_eq!(q.xi().re, 0.0);
}

#[test]
fn c_is_tan_squared_at_y_one() {
    for a in ALPHAS {
        let p = SurfaceParams::relaxed(a, 0.5, 1.0).unwrap();
        let t2 = a.tan().powi(2);
        assert!((p.c() - t2).abs() < 1e-12 * (1.0 + t2), "alpha {a}: {} vs {t2}", p.c());
    }
}

#[test]
fn xi_is_imaginary_above_two() {
    for a in ALPHAS {
        for y in [0.3, 1.0, 2.5, 40.0] {
            let p = SurfaceParams::relaxed(a, 0.2, y).unwrap();
            assert_eq!(p.xi().re, 0.0);
            assert!(p.xi().im > 2.0);
        }
    }
}

#[test]
fn w_squared_anchor() {
    for a in ALPHAS {
        let p = SurfaceParams::relaxed(a, 0.5, 1.0).unwrap();
        let w2 = w_squared(c(0.0, 0.0), c(0.0, 1.0), &p).unwrap();
        assert!((w2 - 1.0).norm() < 1e-12, "alpha {a}: {w2}");
    }
}

#[test]
fn params_errors() {
    assert!(matches!(SurfaceParams::new(PI / 8.0, 2.0, 1.0), Err(Error::Ordering { .. })));
    assert!(matches!(SurfaceParams::new(PI / 8.0, 1.0, 1.0), Err(Error::Ordering { .. })));
    assert!(matches!(SurfaceParams::new(0.0, 1.0, 2.0), Err(Error::Domain(_))));
    assert!(matches!(SurfaceParams::new(PI / 4.0, 1.0, 2.0), Err(Error::Domain(_))));
    assert!(matches!(SurfaceParams::new(PI / 8.0, -1.0, 2.0), Err(Error::Domain(_))));
    assert!(matches!(SurfaceParams::new(PI / 8.0, 1.0, f64::INFINITY), Err(Error::Domain(_))));
}

#[test]
fn torus_relation_examples() {
    let p = smoke();
    assert!(zprime_squared(c(0.0, p.tan()), &p).norm() < 1e-14);
    assert!((zprime_squared(c(0.0, 0.0), &p) + 1.0).norm() < 1e-14);
    for t in [-3.0, -0.4, 0.0, 0.7, 5.0] {
        let v = zprime_squared(c(t, 0.0), &p);
        assert_eq!(v.im, 0.0);
        assert!(v.re < 0.0);
    }
}

#[test]
fn w_is_real_and_bounded_on_the_real_axis() {
    let p = smoke();
    for k in 0..200 {
        let t = -6.0 + 12.0 * k as f64 / 199.0;
        let z = c(t, 0.0);
        for zp in [zprime_squared(z, &p).sqrt(), -zprime_squared(z, &p).sqrt()] {
            let w2 = w_squared(z, zp, &p).unwrap();
            assert!(w2.im.abs() < 1e-12 * (1.0 + w2.norm()));
            assert!(w2.re >= 0.0 && w2.re.sqrt() <= p.cot() * (1.0 + 1e-12));
        }
    }
}

#[test]
fn poles_of_w() {
    let p = smoke();
    for s in [1.0, -1.0] {
        let z = c(0.0, s * p.w_pole());
        let zp = zprime_squared(z, &p).sqrt();
        let hit = [zp, -zp].iter().filter(|v| matches!(w_squared(z, **v, &p), Err(Error::Pole { .. }))).count();
        assert_eq!(hit, 1);
    }
}

#[test]
fn base_point_convention() {
    let p = smoke();
    let b = base_point(&p).unwrap();
    assert_eq!(b.zprime, c(0.0, -1.0));
    assert!(b.w.re > 0.0 && b.w.im.abs() < 1e-15);
    assert!(b.g.re > 0.0 && b.g.im.abs() < 1e-15);
    assert!(b.residual(&p) < 1e-14);
}

fn circle(center: C64, r: f64, th0: f64, turns: f64, n: usize) -> Vec<C64> {
    (0..=n).map(|k| center + C64::from_polar(r, th0 + turns * TAU * k as f64 / n as f64)).collect()
}

/// Follow `approach`, then `turns` loops of radius `r` around `center`.
fn loop_around(p: &SurfaceParams, approach: &[C64], center: C64, r: f64, turns: f64) -> (SheetPoint, SheetPoint) {
    let b = base_point(p).unwrap();
    let path = PathSpec::new(approach.to_vec(), b, p);
    let start = *continue_along(&path, p).unwrap().last().unwrap();
    let a = *approach.last().unwrap();
    let th0 = (a - center).arg();
    let pts = circle(center, r, th0, turns, (10_000.0 * turns) as usize);
    let mut spec = PathSpec::new(pts, start, p);
    spec.clearance = 0.5 * r;
    let end = *continue_along(&spec, p).unwrap().last().unwrap();
    (start, end)
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / (1.0 + a.norm())
}

#[test]
fn monodromy_around_slit_tip_flips_zprime() {
    let p = smoke();
    let r = 1e-2;
    let tip = c(0.0, p.tan());
    let (s, e) = loop_around(&p, &[c(0.0, 0.0), c(0.0, p.tan() - r)], tip, r, 1.0);
    assert!((e.z - s.z).norm() < 1e-12);
    assert!(rel(e.zprime, -s.zprime) < 1e-9, "{:?} {:?}", s, e);
    let (s, e) = loop_around(&p, &[c(0.0, 0.0), c(0.0, p.tan() - r)], tip, r, 2.0);
    assert!(rel(e.zprime, s.zprime) < 1e-9 && rel(e.w, s.w) < 1e-9 && rel(e.g, s.g) < 1e-9);
}

#[test]
fn monodromy_around_x_flips_g() {
    let p = smoke();
    let r = 1e-2;
    let x = c(p.x(), 0.0);
    let (s, e) = loop_around(&p, &[c(0.0, 0.0), c(p.x() - r, 0.0)], x, r, 1.0);
    assert!(rel(e.g, -s.g) < 1e-9, "{:?} {:?}", s, e);
    assert!(rel(e.zprime, s.zprime) < 1e-9 && rel(e.w, s.w) < 1e-9);
    let (s, e) = loop_around(&p, &[c(0.0, 0.0), c(p.x() - r, 0.0)], x, r, 2.0);
    assert!(rel(e.zprime, s.zprime) < 1e-9 && rel(e.w, s.w) < 1e-9 && rel(e.g, s.g) < 1e-9);
}

#[test]
fn double_loops_restore_everywhere() {
    let p = smoke();
    let r = 1e-2;
    let d = 0.5 * p.tan();
    let cases = [
        (vec![c(0.0, 0.0), c(-p.x() + r, 0.0)], c(-p.x(), 0.0)),
        (vec![c(0.0, 0.0), c(0.0, -p.tan() + r)], c(0.0, -p.tan())),
        (vec![c(0.0, 0.0), c(r, 0.0), c(r, p.cot())], c(0.0, p.cot())),
        (vec![c(0.0, 0.0), c(0.0, d), c(p.y(), d), c(p.y(), r)], c(p.y(), 0.0)),
        (vec![c(0.0, 0.0), c(0.0, d), c(-p.y(), d), c(-p.y(), r)], c(-p.y(), 0.0)),
    ];
    for (approach, center) in cases {
        let (s, e) = loop_around(&p, &approach, center, r, 2.0);
        assert!(rel(e.zprime, s.zprime) < 1e-9 && rel(e.w, s.w) < 1e-9 && rel(e.g, s.g) < 1e-9, "around {center}");
    }
}

#[test]
fn contractible_loop_is_trivial() {
    let p = smoke();
    let b = base_point(&p).unwrap();
    // a wide loop in the lower half plane that encloses no critical point
    let pts = vec![c(0.0, 0.0), c(0.6, -0.05), c(0.6, -0.3), c(-0.6, -0.3), c(-0.6, -0.05), c(0.0, 0.0)];
    let track = continue_along(&PathSpec::new(pts, b, &p), &p).unwrap();
    let e = track.last().unwrap();
    assert!(rel(e.zprime, b.zprime) < 1e-9 && rel(e.w, b.w) < 1e-9 && rel(e.g, b.g) < 1e-9);
    // a loop enclosing both g branch points x and -x and the whole slit pair
    // is not contractible; one enclosing both slit tips i tan, i cot is
    let r = 0.2;
    let pts = vec![c(0.0, 0.0), c(r, 0.0), c(r, p.cot() + r), c(-r, p.cot() + r), c(-r, 0.0), c(0.0, 0.0)];
    let track = continue_along(&PathSpec::new(pts, b, &p), &p).unwrap();
    let e = track.last().unwrap();
    assert!(rel(e.zprime, b.zprime) < 1e-9, "zprime has no monodromy around both tips");
}

#[test]
fn torus_residual_along_tracks() {
    let p = smoke();
    let b = base_point(&p).unwrap();
    let pts = circle(c(0.0, 0.0), 2.5, -1.45, 1.0, 400);
    let mut start_path = vec![c(0.0, 0.0), c(0.3, -0.3)];
    start_path.extend(pts);
    let track = continue_along(&PathSpec::new(start_path, b, &p), &p).unwrap();
    for sp in &track {
        let r = (sp.zprime * sp.zprime - zprime_squared(sp.z, &p)).norm();
        assert!(r < 1e-10 * (1.0 + sp.z.norm().powi(4)));
        assert!(sp.residual(&p) < 1e-10);
    }
}

#[test]
fn clearance_is_enforced() {
    let p = smoke();
    let b = base_point(&p).unwrap();
    let spec = PathSpec::new(vec![c(0.0, 0.0), c(2.0 * p.x(), 0.0)], b, &p);
    assert!(matches!(continue_along(&spec, &p), Err(Error::Clearance { .. })));
}

/// Points `(z, Z')` where `g^2 = g0^2` for one of the two `w` signs, found by
/// Newton from a grid of starts on both `Z'` sheets. Returns `(z, Z', w)`.
fn g2_preimages(p: &SurfaceParams, g0: C64) -> Vec<(C64, C64, C64)> {
    let big = g0 * g0;
    let (x, k) = (p.x(), p.cot());
    // w forced by g^2 = G
    let w_of = |z: C64| k * (big * (x - z) - (x + z)) / (big * (x - z) + (x + z));
    let f = |z: C64, zp: C64| -> Option<C64> {
        let w = w_of(z);
        w_squared(z, zp, p).ok().map(|w2| w * w - w2)
    };
    let mut roots: Vec<(C64, C64, C64)> = Vec::new();
    for i in 0..24 {
        for j in 0..24 {
            let z0 = c(-4.0 + 8.0 * (i as f64 + 0.5) / 24.0, -4.0 + 8.0 * (j as f64 + 0.5) / 24.0);
            for sign in [1.0, -1.0] {
                let mut z = z0;
                let mut zp = zprime_squared(z, p).sqrt() * sign;
                let mut ok = false;
                for _ in 0..60 {
                    let h = 1e-7 * (1.0 + z.norm());
                    let zp_at = |u: C64, near: C64| pick_branch(zprime_squared(u, p).sqrt(), near, None);
                    let (Some(v), Some(vh)) = (f(z, zp), f(z + h, zp_at(z + h, zp))) else { break };
                    let d = (vh - v) / h;
                    if d.norm() == 0.0 || !d.is_finite() {
                        break;
                    }
                    let mut step = v / d;
                    if step.norm() > 0.5 {
                        step = step / step.norm() * 0.5;
                    }
                    let zn = z - step;
                    zp = zp_at(zn, zp);
                    z = zn;
                    if step.norm() < 1e-13 * (1.0 + z.norm()) {
                        ok = true;
                        break;
                    }
                }
                if !ok || !z.is_finite() || z.norm() > 1e3 {
                    continue;
                }
                let Some(v) = f(z, zp) else { continue };
                if v.norm() > 1e-9 {
                    continue;
                }
                if !roots.iter().any(|(a, b, _)| (a - z).norm() < 1e-6 && (b - zp).norm() < 1e-6 * (1.0 + b.norm())) {
                    roots.push((z, zp, w_of(z)));
                }
            }
        }
    }
    roots
}

/// Continue the base point to `(z, zp)` on the torus, flipping `Z'` first by a
/// loop around the slit tip when needed.
fn reach(p: &SurfaceParams, z: C64, zp: C64) -> Option<SheetPoint> {
    let base = base_point(p).ok()?;
    let r = 0.05;
    let tip = c(0.0, p.tan());
    for flip in [false, true] {
        let mut prefix = vec![c(0.0, 0.0)];
        if flip {
            prefix.push(c(0.0, p.tan() - r));
            prefix.extend(circle(tip, r, -PI / 2.0, 1.0, 400).into_iter().skip(1));
            prefix.push(c(0.0, 0.0));
        }
        prefix.push(c(0.0, -0.02));
        for i in 0..9 {
            for j in 0..9 {
                let m = c(-3.0 + 0.75 * i as f64 + 0.013, -3.0 + 0.75 * j as f64 + 0.017);
                let mut pts = prefix.clone();
                pts.push(m);
                pts.push(z);
                let Ok(track) = continue_along(&PathSpec::new(pts, base, p), p) else { continue };
                let end = *track.last().unwrap();
                if (end.zprime - zp).norm() < 1e-6 * (1.0 + zp.norm()) {
                    return Some(end);
                }
            }
        }
    }
    None
}

#[test]
fn gauss_map_has_degree_four() {
    let p = smoke();
    for g0 in [c(0.7, 0.4), c(1.9, -0.8), c(-0.35, 0.2)] {
        let roots = g2_preimages(&p, g0);
        // W is single valued on the torus: each root lies on exactly one of
        // the two global W branches
        let mut on_branch = 0;
        for &(z, zp, w) in &roots {
            let sp = reach(&p, z, zp).expect("route to root");
            let tol = 1e-7 * (1.0 + w.norm());
            if (sp.w - w).norm() < tol {
                on_branch += 1;
            } else {
                assert!((sp.w + w).norm() < tol);
            }
        }
        assert_eq!(on_branch, 4, "g0 = {g0}, {} roots on both branches", roots.len());
    }
}

fn arb_point() -> impl Strategy<Value = C64> {
    (-2.0f64..2.0, 0.05f64..2.0).prop_map(|(a, b)| c(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conjugation_symmetries(a in arb_point(), b in arb_point()) {
        let p = smoke();
        let crit = p.critical_points();
        let clear = |u: C64, v: C64| {
            (0..=200).all(|k| {
                let z = u + (v - u) * (k as f64 / 200.0);
                crit.iter().all(|q| (z - q).norm() > 0.05)
            })
        };
        let z0 = c(0.0, 0.0);
        let lift = c(0.0, 0.02);
        prop_assume!(clear(z0, lift) && clear(lift, a) && clear(a, b));
        let base = base_point(&p).unwrap();
        let path = vec![z0, lift, a, b];
        let track = continue_along(&PathSpec::new(path.clone(), base, &p), &p).unwrap();
        let conj: Vec<C64> = path.iter().map(|z| z.conj()).collect();
        let tc = continue_along(&PathSpec::new(conj, Involution::ConjZ.apply(&base), &p), &p).unwrap();
        let anti: Vec<C64> = path.iter().map(|z| -z.conj()).collect();
        let ta = continue_along(&PathSpec::new(anti, Involution::AntiConjZ.apply(&base), &p), &p).unwrap();
        for ((u, v), q) in track.iter().zip(&tc).zip(&ta) {
            prop_assert!((v.w - u.w.conj()).norm() < 1e-9 * (1.0 + u.w.norm()));
            prop_assert!((q.w + u.w.conj()).norm() < 1e-9 * (1.0 + u.w.norm()));
        }
    }

    #[test]
    fn evaluation_matches_hint(a in arb_point()) {
        let p = smoke();
        prop_assume!(p.critical_distance(a) > 0.05);
        let base = base_point(&p).unwrap();
        let track = continue_along(&PathSpec::new(vec![c(0.0, 0.0), c(0.0, 0.02), a], base, &p), &p);
        prop_assume!(track.is_ok());
        let end = *track.unwrap().last().unwrap();
        let again = evaluate_sheet(&p, end.z, &end).unwrap();
        prop_assert!((again.g - end.g).norm() < 1e-12 * (1.0 + end.g.norm()));
        prop_assert!(end.residual(&p) < 1e-10);
    }
}

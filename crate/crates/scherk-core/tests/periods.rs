use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use scherk_core::periods::*;
use scherk_core::quadrature::{integrate_real, panel_nodes, Endpoint, GaussLegendre};
use scherk_core::riemann_core::SurfaceParams;
use scherk_core::{Error, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn smoke() -> SurfaceParams {
    SurfaceParams::new(PI / 8.0, 1.05, 1.30).unwrap()
}

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..40 {
        (a, b) = (0.5 * (a + b), (a * b).sqrt());
    }
    a
}

/// Complete elliptic integral of the first kind, modulus `k`.
fn ellip_k(k: f64) -> f64 {
    PI / (2.0 * agm(1.0, (1.0 - k * k).sqrt()))
}

#[test]
fn residue_closed_form() {
    let p = SurfaceParams::new(PI / 8.0, 1.0, 2.0).unwrap();
    let v = scherk_end_residue(&p).unwrap();
    let expect = TAU * 3f64.sqrt() / (4.0 * 2f64.sqrt()).sqrt();
    assert!((v - expect).abs() < 1e-12);
    assert!((v - 4.57565).abs() < 1e-5);

    let far = SurfaceParams::new(PI / 8.0, 1.0, 1e6).unwrap();
    let limit = TAU / (4.0 * 2f64.sqrt()).sqrt();
    assert!((scherk_end_residue(&far).unwrap() / limit - 1.0).abs() < 1e-5);

    let flat = SurfaceParams::relaxed(PI / 8.0, 1.0, 1.0).unwrap();
    assert!(matches!(scherk_end_residue(&flat), Err(Error::Divergence)));
}

#[test]
fn end_loop_matches_residue_on_a_grid() {
    for a in [PI / 16.0, PI / 8.0, PI / 6.0] {
        for ratio in [1.5, 2.0, 3.0] {
            let p = SurfaceParams::new(a, 1.0, ratio).unwrap();
            let v = integrate_cycle(&end_loop(&p, 1e-3).unwrap(), &p, false, 1e-12).unwrap();
            let r = v.re();
            let expect = scherk_end_residue(&p).unwrap();
            assert!(r[0].abs() < 1e-6 && r[2].abs() < 1e-6, "alpha {a} y {ratio}: {r:?}");
            assert!((r[1].abs() / expect - 1.0).abs() < 1e-6, "alpha {a} y {ratio}: {} vs {expect}", r[1]);
        }
    }
}

#[test]
fn end_loop_is_independent_of_delta() {
    let p = smoke();
    let a = integrate_cycle(&end_loop(&p, 1e-3).unwrap(), &p, false, 1e-12).unwrap();
    let b = integrate_cycle(&end_loop(&p, 5e-4).unwrap(), &p, false, 1e-12).unwrap();
    for k in 0..3 {
        assert!((a.re()[k] - b.re()[k]).abs() < 1e-7);
    }
}

#[test]
fn vertical_period_anchor() {
    // int_0^pi dt / sqrt(6 + 2 cos 2t) = K(1/sqrt 2) / sqrt 2
    let half = ellip_k(FRAC_1_SQRT_2) * FRAC_1_SQRT_2;
    let n = 4096;
    let trap: f64 = (0..n).map(|j| 1.0 / (6.0 + 2.0 * (TAU * j as f64 / n as f64).cos()).sqrt()).sum::<f64>() * PI / n as f64;
    assert!((trap - half).abs() < 1e-13);
    assert!((2.0 * half - 2.622057).abs() < 1e-6);
    for y in [1.3, 2.0] {
        let p = SurfaceParams::new(PI / 8.0, 1.0, y).unwrap();
        let v = vertical_period(&p, 1e-12).unwrap();
        assert!((v - 2.0 * half).abs() < 1e-9, "{v}");
    }
}

struct Wobble {
    x: f64,
    amp: f64,
}

impl PathCurve for Wobble {
    fn point(&self, u: f64) -> (C64, C64) {
        // -x e^{it} with radius x (1 + amp sin^2 t sin 3t)
        let t = PI * u;
        let r = self.x * (1.0 + self.amp * t.sin().powi(2) * (3.0 * t).sin());
        let dr = self.x * self.amp * (2.0 * t.sin() * t.cos() * (3.0 * t).sin() + 3.0 * t.sin().powi(2) * (3.0 * t).cos());
        let e = -C64::from_polar(1.0, t);
        (e * r, (e * dr + e * c(0.0, r)) * PI)
    }
}

#[test]
fn vertical_period_is_homotopy_invariant() {
    let p = smoke();
    let base = integrate_cycle(&beta_plus(&p).unwrap(), &p, false, 1e-12).unwrap();
    for amp in [0.03, -0.04] {
        let mut cy = beta_plus(&p).unwrap();
        cy.legs[0].pieces = vec![Piece { curve: Box::new(Wobble { x: p.x(), amp }), sub: Endpoint::Both }];
        let v = integrate_cycle(&cy, &p, false, 1e-12).unwrap();
        assert!((v.p3.re - base.p3.re).abs() < 1e-8);
        assert!((v.gdh - base.gdh).norm() < 1e-8);
    }
}

#[test]
fn vertical_period_is_positive_on_a_grid() {
    for a in [0.25, 0.35, 0.45, 0.55, 0.65] {
        for x in [0.7, 0.85, 1.0, 1.15, 1.3] {
            for r in [1.2, 1.5, 2.0, 3.0, 5.0] {
                let p = SurfaceParams::new(a, x, r * x).unwrap();
                let v = vertical_period(&p, 1e-10).unwrap();
                assert!(v > 0.0, "({a}, {x}, {}): {v}", r * x);
            }
        }
    }
}

#[test]
fn closed_cycles_are_homotopy_invariant() {
    let p = smoke();
    let a = integrate_cycle(&end_loop(&p, 1e-3).unwrap(), &p, false, 1e-12).unwrap();
    let mut cy = end_loop(&p, 1e-3).unwrap();
    let y = p.y();
    cy.legs[1].pieces = vec![Piece::arc(c(y, 0.0), 0.9 * (1e-3f64).sqrt(), PI, PI + TAU, Endpoint::Smooth)];
    cy.legs[0].pieces = {
        let r = 0.9 * (1e-3f64).sqrt();
        let d = 0.4 * p.tan();
        let pts = [c(0.0, 0.0), c(0.0, -d), c(0.5 * y, -1.3 * d), c(y - r, -d), c(y - r, 0.0)];
        pts.windows(2).map(|w| Piece::line(w[0], w[1])).collect()
    };
    let b = integrate_cycle(&cy, &p, false, 1e-12).unwrap();
    assert!((a.p1 - b.p1).norm() < 1e-9 && (a.p2 - b.p2).norm() < 1e-9 && (a.p3 - b.p3).norm() < 1e-9);
}

#[test]
fn quadrature_order() {
    let f = |u: f64| (3.0 * u).cos() * (-u).exp();
    let exact = {
        // int_0^2 cos 3u e^{-u} du
        let e = (-2.0f64).exp();
        (1.0 + e * (3.0 * (6.0f64).sin() - (6.0f64).cos())) / 10.0
    };
    let rule = GaussLegendre::new(2);
    let mut prev = f64::INFINITY;
    for panels in [2, 4, 8, 16, 32] {
        let err = (integrate_real(f, 0.0, 2.0, panels, &rule) - exact).abs();
        assert!(err * 4.0 <= prev, "panels {panels}: {err:e} after {prev:e}");
        prev = err;
    }
    // with the endpoint substitution a square-root singularity converges
    // at the same rate
    let g = |u: f64| (2.0 * u).cos() / u.sqrt();
    let mut prev = f64::INFINITY;
    let reference: f64 = panel_nodes(&GaussLegendre::new(20), 64, Endpoint::Start).iter().map(|&(u, w)| w * g(u)).sum();
    for panels in [2, 4, 8, 16] {
        let v: f64 = panel_nodes(&rule, panels, Endpoint::Start).iter().map(|&(u, w)| w * g(u)).sum();
        let err = (v - reference).abs();
        assert!(err * 4.0 <= prev, "panels {panels}: {err:e} after {prev:e}");
        prev = err;
    }
}

#[test]
fn beta_halves_agree() {
    for (a, x, y) in [(PI / 8.0, 1.05, 1.30), (PI / 8.0, 1.0, 2.0), (0.43, 0.96, 1.09), (0.3, 0.7, 1.5)] {
        let p = SurfaceParams::new(a, x, y).unwrap();
        let whole = integrate_cycle(&beta(&p).unwrap(), &p, false, 1e-12).unwrap();
        let half = integrate_cycle(&beta_plus(&p).unwrap(), &p, false, 1e-12).unwrap();
        assert!((whole.gdh.re - 2.0 * half.gdh.re).abs() < 1e-8, "({a}, {x}, {y})");
    }
}

#[test]
fn identities_at_the_smoke_triple() {
    let p = smoke();
    let r = verify_identities(&p, 1e-6).unwrap();
    assert!(r.b < 1e-8, "b = {:e}", r.b);
    assert!(r.c < 1e-6, "c = {:e}", r.c);
    assert!(r.d < 1e-6, "d = {:e}", r.d);
    assert!(r.d_third.abs() > 0.1);
    assert!(r.curve1.p3.re.abs() < 1e-6);
    let cal = &r.calibration;
    assert!(cal.closed_words > 0 && cal.words_examined >= cal.closed_words);
    let c3 = cal.curve3.as_ref().expect("curve3 representative");
    assert_eq!(cal.word_string(c3), "-i*tan i*tan");
    // the first identity: no closed word reproduces -Re int_beta g dh
    let target = -r.beta_gdh.re;
    assert!(cal.phi1_values.iter().all(|v| (v - target).abs() > 1.0));
    assert!(matches!(r.check(), Err(Error::Calibration { .. })));
}

#[test]
fn curve2_closes_horizontally() {
    let p = smoke();
    let v = integrate_cycle(&curve2(&p).unwrap(), &p, false, 1e-12).unwrap();
    assert!(v.p1.re.abs() < 1e-6 && v.p2.re.abs() < 1e-6);
}

#[test]
fn calibration_is_deterministic() {
    let p = smoke();
    let a = calibrate(&p, 4, 0.0, 1e-6).unwrap();
    let b = calibrate(&p, 4, 0.0, 1e-6).unwrap();
    assert_eq!(a.words_examined, b.words_examined);
    assert_eq!(a.closed_words, b.closed_words);
    assert_eq!(a.phi1_values, b.phi1_values);
    assert_eq!(a.curve3.as_ref().map(|w| a.word_string(w)), b.curve3.as_ref().map(|w| b.word_string(w)));
}

#[test]
fn named_cycles_integrate() {
    let p = smoke();
    for name in [CycleName::Curve1, CycleName::Curve2, CycleName::Curve3, CycleName::Beta, CycleName::BetaPlus, CycleName::BetaMinus, CycleName::EndLoop] {
        let cy = named_cycle(&p, name).unwrap();
        assert_eq!(cy.name, name);
        let v = integrate_cycle(&cy, &p, false, 1e-10).unwrap();
        assert!(v.err < 1e-10 && v.p1.is_finite() && v.p2.is_finite() && v.p3.is_finite(), "{}", name.as_str());
    }
}

#[test]
fn tracing_beta_plus_runs_from_zero_to_the_pole() {
    let p = SurfaceParams::new(0.43, 1.0, 1.01).unwrap();
    let cy = beta_plus(&p).unwrap();
    let pts = trace_cycle(&cy, &p, 200).unwrap();
    assert_eq!(pts.len(), 201);
    let (_, u0, first) = pts[0];
    assert_eq!(u0, 0.0);
    assert!((first.z - c(-p.x(), 0.0)).norm() < 1e-14 && first.g.norm() == 0.0);
    let (_, _, last) = pts[200];
    assert!(!last.g.is_finite());
    let g2: Vec<f64> = pts[1..200].iter().map(|(_, _, s)| (s.g * s.g).norm()).collect();
    // simple zero at -x and simple pole at x
    let d = (pts[1].2.z + p.x()).norm();
    assert!(g2[0] < 2.0 * d && g2[198] > 0.5 / d, "{} {}", g2[0], g2[198]);
    assert!(g2[0] * g2[198] > 0.1 && g2[0] * g2[198] < 10.0);
    let (_, end) = integrate_cycle_with_end(&cy, &p, false, 1e-10).unwrap();
    assert_eq!(end.z, last.z);
    assert!(!end.g.is_finite());
    // interior samples agree with the tracker used by the quadrature
    let (_, mid_u, mid) = pts[100];
    assert_eq!(mid_u, 0.5);
    assert!(mid.residual(&p) < 1e-10);
}

/// Base point on the `Z'(0) = zp` sheet with `w(0) > 0`, `g(0) > 0`.
fn seed(p: &SurfaceParams, zp: C64) -> scherk_core::riemann_core::SheetPoint {
    use scherk_core::riemann_core::{g_squared, w_squared, SheetPoint};
    let z = c(0.0, 0.0);
    let mut w = w_squared(z, zp, p).unwrap().sqrt();
    if w.re < 0.0 {
        w = -w;
    }
    let mut g = g_squared(z, w, p).unwrap().sqrt();
    if g.re < 0.0 {
        g = -g;
    }
    SheetPoint { z, zprime: zp, w, g }
}

fn s_from(p: &SurfaceParams, zp: C64) -> scherk_core::Result<scherk_core::riemann_core::SheetPoint> {
    let x = p.x();
    track_polyline(p, seed(p, zp), &[c(0.0, 0.0), c(-0.5 * x, 0.0)], 1e-2)?.branch_state(p, c(-x, 0.0))
}

#[test]
fn both_base_seeds_are_tried() {
    let (down, up) = (c(0.0, -1.0), c(0.0, 1.0));
    assert_eq!(scherk_core::riemann_core::base_point(&smoke()).unwrap(), seed(&smoke(), down));
    // limit data: the chosen seed closes both rotated periods; on the other
    // sheet the puncture -y sits on S
    let lim = SurfaceParams::relaxed(0.4301371733744524, 1.0, 1.0).unwrap();
    let mut c1 = curve1(&lim).unwrap();
    c1.start = s_from(&lim, down).unwrap();
    let r = integrate_cycle(&c1, &lim, true, 1e-12).unwrap();
    assert!(r.p1.re.abs() < 1e-10 && r.p2.re.abs() < 1e-10);
    assert!(matches!(s_from(&lim, up), Err(Error::Pole { .. })));
    // smoke triple: only the chosen seed gives dh > 0 along beta+
    let p = smoke();
    let mut half = [0.0; 2];
    for (k, zp) in [down, up].into_iter().enumerate() {
        let mut bp = beta_plus(&p).unwrap();
        bp.start = s_from(&p, zp).unwrap();
        half[k] = integrate_cycle(&bp, &p, false, 1e-12).unwrap().p3.re;
    }
    assert!(half[0] > 0.0 && half[1] < 0.0 && (half[0] + half[1]).abs() < 1e-9, "{half:?}");
}

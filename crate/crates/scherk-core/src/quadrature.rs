//! Gauss-Legendre rules, composite panels and endpoint substitutions.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;

/// `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        for i in 0..(n + 1) / 2 {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }
}

/// `P_n(x)` and `P_n'(x)`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Where a path piece has an inverse-square-root endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Smooth,
    /// `u = t^2`
    Start,
    /// `u = 1 - (1-t)^2`
    End,
    /// `u = 3t^2 - 2t^3`
    Both,
}

impl Endpoint {
    /// `(u(t), u'(t))`.
    #[inline]
    pub fn map(self, t: f64) -> (f64, f64) {
        match self {
            Endpoint::Smooth => (t, 1.0),
            Endpoint::Start => (t * t, 2.0 * t),
            Endpoint::End => (1.0 - (1.0 - t) * (1.0 - t), 2.0 * (1.0 - t)),
            Endpoint::Both => (t * t * (3.0 - 2.0 * t), 6.0 * t * (1.0 - t)),
        }
    }
}

/// Nodes `u` in `(0,1)` and weights (including `du/dt`) for `panels` equal
/// panels in `t`, ordered by increasing `u`.
pub fn panel_nodes(rule: &GaussLegendre, panels: usize, sub: Endpoint) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(panels * rule.nodes.len());
    let h = 1.0 / panels as f64;
    for k in 0..panels {
        let a = k as f64 * h;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let t = a + 0.5 * h * (x + 1.0);
            let (u, du) = sub.map(t);
            out.push((u, 0.5 * h * w * du));
        }
    }
    out
}

/// Composite rule for a real function on `[a, b]`.
pub fn integrate_real<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize, rule: &GaussLegendre) -> f64 {
    let mut s = 0.0;
    for (u, w) in panel_nodes(rule, panels, Endpoint::Smooth) {
        s += w * f(a + (b - a) * u);
    }
    s * (b - a)
}

/// Richardson estimate for a rule of order `order` from results at `h`
/// and `h/2`: returns the extrapolated value and `|fine - coarse|`.
pub fn richardson(coarse: f64, fine: f64, order: i32) -> (f64, f64) {
    let r = 2f64.powi(order);
    ((r * fine - coarse) / (r - 1.0), (fine - coarse).abs())
}

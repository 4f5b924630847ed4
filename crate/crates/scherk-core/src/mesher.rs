//! Triangulation of a fundamental domain, the immersion `X = Re int phi`,
//! assembly of the fundamental piece, and discrete checks.
//!
//! The domain is the upper half `z`-plane minus the slit `i[tan, cot]`,
//! seen through `zeta = (z - i)/(z + i)`: the slit becomes `[-k, k]` with
//! `k = tan(pi/4 - alpha)` and the real axis becomes the unit circle. The
//! annulus between them is parameterized by `(s, theta)`, blending confocal
//! ellipses around the slit (`s = 0`) into the circle (`s = 1`). Going once
//! around the slit flips the sign of `g`, so the `theta` range is cut open
//! at a seam and the patch is a strip with two copies of the seam.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_4, PI, TAU};

use crate::linalg::{add, cross, dot, norm, scale, sub};
use crate::periods::{integrate_cycle, scherk_end_residue, vertical_period, CycleName, CyclePath, Leg, Lift, Piece};
use crate::quadrature::{panel_nodes, Endpoint, GaussLegendre};
use crate::riemann_core::{base_point, evaluate_sheet, SheetPoint, SurfaceParams, Tracker};
use crate::weierstrass::forms_from;
use crate::{c, Error, Result, C64, I};

/// Geometric grading ratio toward the branch points of `g` and the end.
pub const GRADING_RATIO: f64 = 0.7;
/// Number of graded cells between the coarse spacing and the finest one.
pub const GRADING_DEPTH: i32 = 8;

const EDGE_TOL: f64 = 1e-11;
const MAX_EDGE_PANELS: usize = 256;
/// Relative tolerance for matching the sheet data carried along two edges.
const SHEET_MATCH: f64 = 1e-6;

// ---------------------------------------------------------------------------
// chart

/// The `(s, theta)` chart of the slit upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chart {
    k: f64,
    m: f64,
}

#[inline]
fn cis(t: f64) -> C64 {
    C64::new(t.cos(), t.sin())
}

impl Chart {
    pub fn new(p: &SurfaceParams) -> Self {
        let k = (FRAC_PI_4 - p.alpha()).tan();
        // outermost ellipse has semi-axis (1 + k)/2, strictly inside the circle
        let m = ((1.0 + k) / (2.0 * k)).acosh();
        Self { k, m }
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn zeta(&self, s: f64, theta: f64) -> C64 {
        let b = s * s;
        C64::new(self.m * s, theta).cosh() * (self.k * (1.0 - b)) + cis(theta) * b
    }

    /// `(d zeta/ds, d zeta/dtheta)`.
    pub fn zeta_partials(&self, s: f64, theta: f64) -> (C64, C64) {
        let e = C64::new(self.m * s, theta);
        let (ch, sh) = (e.cosh(), e.sinh());
        let u = cis(theta);
        let b = s * s;
        let ds = ch * (-2.0 * s * self.k) + sh * (self.k * self.m * (1.0 - b)) + u * (2.0 * s);
        let dt = I * (sh * (self.k * (1.0 - b)) + u * b);
        (ds, dt)
    }

    /// Jacobian determinant of `(s, theta) -> zeta`.
    pub fn jacobian(&self, s: f64, theta: f64) -> f64 {
        let (a, b) = self.zeta_partials(s, theta);
        a.re * b.im - a.im * b.re
    }

    pub fn z(&self, s: f64, theta: f64) -> C64 {
        if s == 1.0 {
            return c(-1.0 / (0.5 * theta).tan(), 0.0);
        }
        if s == 0.0 {
            let v = self.k * theta.cos();
            return c(0.0, (1.0 + v) / (1.0 - v));
        }
        zeta_to_z(self.zeta(s, theta))
    }

    /// `theta` of a real point `z` on the outer circle.
    pub fn theta_real(z: f64) -> f64 {
        let t = 2.0 * (1.0 / z.abs()).atan();
        if z < 0.0 {
            t
        } else {
            TAU - t
        }
    }

    /// `theta` in `[0, pi]` of the slit point `i t` (left side; the right
    /// side is `2 pi - theta`).
    pub fn theta_slit(&self, t: f64) -> f64 {
        ((t - 1.0) / ((t + 1.0) * self.k)).clamp(-1.0, 1.0).acos()
    }
}

#[inline]
fn zeta_to_z(zeta: C64) -> C64 {
    I * (1.0 + zeta) / (1.0 - zeta)
}

#[inline]
fn dz_dzeta(zeta: C64) -> C64 {
    let d = 1.0 - zeta;
    I * 2.0 / (d * d)
}

// ---------------------------------------------------------------------------
// domain mesh

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    /// Image of a real-axis segment: a straight line.
    LineSegment,
    /// Image of the slit: a planar geodesic.
    PlanarGeodesic,
    /// Cut around the puncture `z = y`.
    EndTruncation,
    /// The two copies of the cut that makes the strip simply connected.
    Seam,
}

#[derive(Debug, Clone, Copy)]
pub struct DomainNode {
    pub s: f64,
    pub theta: f64,
    pub z: C64,
    pub sheet: SheetPoint,
    pub tag: Option<BoundaryTag>,
    pub row: usize,
    pub col: usize,
    /// For nodes on the real axis: index of the boundary run between
    /// consecutive branch points of `g`, the puncture, or the seam.
    pub run: usize,
}

/// A straight segment in `(s, theta)` from node `a` to node `b`, pushed
/// into the interior by `bump * u (1 - u)` when it would otherwise run
/// through a critical point on the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub bump: f64,
}

#[derive(Debug, Clone)]
pub struct DomainMesh {
    pub chart: Chart,
    pub nodes: Vec<DomainNode>,
    /// Positively oriented in the `(s, theta)` chart and hence in `z`.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// Edge index for each ordered triangle side.
    pub triangle_edges: Vec<[(usize, bool); 3]>,
    pub base: usize,
    /// Breadth-first order from the base node.
    pub order: Vec<usize>,
    /// `(edge, forward)` through which each node was reached.
    pub parent: Vec<Option<(usize, bool)>>,
    pub seam: f64,
    pub resolution: usize,
    pub end_cutoff: f64,
}

#[derive(Debug, Clone, Copy)]
enum End {
    /// Node at the end, uniform spacing.
    Plain,
    /// Node at the end, graded away from it with first step `d`.
    Graded(f64),
    /// No node at the end; first node at distance `d`, graded.
    Avoid(f64),
}

/// Offsets from one end of an interval of length `len` (excluding the end
/// itself) for a grading ladder, stopping before the midpoint.
fn ladder(first: f64, h: f64, len: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut step = first;
    let mut o = first;
    while o < 0.5 * len && step < h {
        out.push(o);
        step = (step / GRADING_RATIO).min(h);
        o += step;
    }
    out
}

/// Interior nodes of `[a, b]` (plus `a`, `b` when the ends carry nodes).
fn fill(a: f64, b: f64, ea: End, eb: End, h: f64) -> Vec<f64> {
    let len = b - a;
    let side = |e: End| -> (bool, Vec<f64>) {
        match e {
            End::Plain => (true, Vec::new()),
            End::Graded(d) => (true, ladder(d.min(len / 3.0), h, len)),
            End::Avoid(d) => {
                let d = d.min(len / 3.0);
                let mut l = ladder(d, h, len);
                if l.is_empty() {
                    l.push(d);
                }
                (false, l)
            }
        }
    };
    let (na, mut la) = side(ea);
    let (nb, mut lb) = side(eb);
    // avoid a sliver where the two ladders meet
    loop {
        let pa = la.last().copied().unwrap_or(0.0);
        let pb = lb.last().copied().unwrap_or(0.0);
        let gap = len - pa - pb;
        let sa = if la.len() >= 2 { la[la.len() - 1] - la[la.len() - 2] } else { pa };
        let sb = if lb.len() >= 2 { lb[lb.len() - 1] - lb[lb.len() - 2] } else { pb };
        let min_step = sa.min(sb).max(1e-300);
        if gap >= 0.6 * min_step || (la.len() <= 1 && lb.len() <= 1) {
            break;
        }
        if pa >= pb && la.len() > 1 {
            la.pop();
        } else if lb.len() > 1 {
            lb.pop();
        } else {
            la.pop();
        }
    }
    let mut out = Vec::new();
    if na {
        out.push(a);
    }
    for &o in &la {
        out.push(a + o);
    }
    let lo = a + la.last().copied().unwrap_or(0.0);
    let hi = b - lb.last().copied().unwrap_or(0.0);
    let n = ((hi - lo) / h - 1e-9).ceil().max(1.0) as usize;
    for k in 1..n {
        out.push(lo + (hi - lo) * k as f64 / n as f64);
    }
    for &o in lb.iter().rev() {
        out.push(b - o);
    }
    if nb {
        out.push(b);
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct Critical {
    theta: f64,
    graded: bool,
    inner: bool,
    outer: bool,
    /// Separates boundary runs on the real axis.
    splits_run: bool,
}

fn critical_thetas(p: &SurfaceParams, chart: &Chart) -> Vec<Critical> {
    let tw = chart.theta_slit(p.w_pole());
    let mut v = alloc::vec![
        // slit tips on the inner row, z = inf / z = 0 on the outer row
        Critical { theta: 0.0, graded: false, inner: true, outer: true, splits_run: false },
        Critical { theta: PI, graded: false, inner: true, outer: false, splits_run: false },
        Critical { theta: tw, graded: false, inner: true, outer: false, splits_run: false },
        Critical { theta: TAU - tw, graded: false, inner: true, outer: false, splits_run: false },
        Critical { theta: Chart::theta_real(-p.x()), graded: true, inner: false, outer: true, splits_run: true },
        Critical { theta: Chart::theta_real(p.x()), graded: true, inner: false, outer: true, splits_run: true },
        Critical { theta: Chart::theta_real(p.y()), graded: true, inner: false, outer: true, splits_run: true },
    ];
    v.sort_by(|a, b| a.theta.partial_cmp(&b.theta).unwrap());
    v
}

/// Seam angle: middle of the widest gap between critical angles that does
/// not lie on the image of `[-x, x]`.
fn seam_angle(p: &SurfaceParams, crit: &[Critical]) -> f64 {
    let (lo, hi) = (Chart::theta_real(-p.x()), Chart::theta_real(p.x()));
    let mut best = (0.0, f64::NAN);
    for i in 0..crit.len() {
        let a = crit[i].theta;
        let b = if i + 1 < crit.len() { crit[i + 1].theta } else { crit[0].theta + TAU };
        let mid = 0.5 * (a + b);
        let m = if mid >= TAU { mid - TAU } else { mid };
        if m > lo && m < hi {
            continue;
        }
        if b - a > best.0 {
            best = (b - a, m);
        }
    }
    best.1
}

/// Graded triangulation of the fundamental domain, with sheet data carried
/// from the base sheet along a breadth-first spanning tree.
pub fn triangulate_domain(p: &SurfaceParams, resolution: usize, end_cutoff: f64) -> Result<DomainMesh> {
    if resolution < 8 {
        return Err(Error::Domain("mesh resolution must be at least 8"));
    }
    if p.y() <= p.x() {
        return Err(Error::Ordering { x: p.x(), y: p.y() });
    }
    let y = c(p.y(), 0.0);
    let end_room = p
        .critical_points()
        .iter()
        .map(|q| (q - y).norm())
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !(end_cutoff > 0.0 && end_cutoff < 0.5 * end_room) {
        return Err(Error::Domain("end cutoff must lie in (0, half the distance from the puncture to the other critical points)"));
    }
    let chart = Chart::new(p);
    let crit = critical_thetas(p, &chart);
    let h = PI / resolution as f64;
    let d_fine = h * GRADING_RATIO.powi(GRADING_DEPTH);
    for i in 0..crit.len() {
        let b = if i + 1 < crit.len() { crit[i + 1].theta } else { crit[0].theta + TAU };
        if b - crit[i].theta < 1e-9 {
            return Err(Error::Degenerate("critical points of the boundary coincide"));
        }
    }
    let seam = seam_angle(p, &crit);
    let mut unwrapped: Vec<Critical> = crit
        .iter()
        .map(|q| Critical { theta: if q.theta < seam { q.theta + TAU } else { q.theta }, ..*q })
        .collect();
    unwrapped.sort_by(|a, b| a.theta.partial_cmp(&b.theta).unwrap());

    // theta nodes
    let clearance = p.default_clearance();
    let end_of = |q: &Critical| {
        if q.graded {
            End::Avoid(d_fine)
        } else {
            End::Avoid(0.5 * h)
        }
    };
    let mut thetas = Vec::new();
    let mut prev = (seam, End::Plain);
    for q in &unwrapped {
        let mut seg = fill(prev.0, q.theta, prev.1, end_of(q), h);
        if !thetas.is_empty() && matches!(prev.1, End::Plain) {
            seg.remove(0);
        }
        thetas.extend(seg);
        prev = (q.theta, end_of(q));
    }
    thetas.extend(fill(prev.0, seam + TAU, prev.1, End::Plain, h));

    // s nodes, graded toward the real axis
    let hs = 2.0 / resolution as f64;
    let ss = fill(0.0, 1.0, End::Plain, End::Graded(d_fine), hs);

    let (ns, nt) = (ss.len(), thetas.len());
    let idx = |i: usize, j: usize| i * nt + j;
    let mut removed = alloc::vec![false; ns * nt];
    let mut zs = alloc::vec![c(0.0, 0.0); ns * nt];
    for (i, &s) in ss.iter().enumerate() {
        for (j, &t) in thetas.iter().enumerate() {
            let z = chart.z(s, t);
            zs[idx(i, j)] = z;
            removed[idx(i, j)] = (z - y).norm() < end_cutoff;
        }
    }

    // The chart is quadratic at the slit tips, so fine grids put slit nodes
    // very close to them. Such nodes are folded onto the nearest admissible
    // slit node on the same side; the edge across the tip is bumped.
    let mut alias: Vec<usize> = (0..ns * nt).collect();
    let tight: Vec<bool> = (0..nt).map(|j| p.critical_distance(zs[idx(0, j)]) < 2.0 * clearance).collect();
    for j in (0..nt).filter(|&j| tight[j]) {
        let q = unwrapped
            .iter()
            .filter(|q| q.inner)
            .min_by(|a, b| (a.theta - thetas[j]).abs().partial_cmp(&(b.theta - thetas[j]).abs()).unwrap())
            .ok_or(Error::Degenerate("no critical points on the slit"))?;
        let k = if thetas[j] < q.theta { (0..j).rev().find(|&k| !tight[k]) } else { (j + 1..nt).find(|&k| !tight[k]) };
        match k {
            Some(k) if (thetas[k] - q.theta).abs() < PI / 4.0 => alias[idx(0, j)] = idx(0, k),
            _ => return Err(Error::Degenerate("slit nodes crowd a critical point")),
        }
    }

    // triangles and truncation neighbours
    let mut near_cut = alloc::vec![false; ns * nt];
    let mut tris_grid = Vec::new();
    for i in 0..ns - 1 {
        for j in 0..nt - 1 {
            let q = [idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)];
            if q.iter().any(|&v| removed[v]) {
                for &v in &q {
                    near_cut[v] = true;
                }
                continue;
            }
            let q = q.map(|v| alias[v]);
            for t in [[q[0], q[1], q[2]], [q[0], q[2], q[3]]] {
                if t[0] != t[1] && t[1] != t[2] && t[2] != t[0] {
                    tris_grid.push(t);
                }
            }
        }
    }
    let mut used = alloc::vec![false; ns * nt];
    for t in &tris_grid {
        for &v in t {
            used[v] = true;
        }
    }
    let mut new_index = alloc::vec![usize::MAX; ns * nt];
    let mut nodes = Vec::new();
    let base_sheet = base_point(p)?;
    let run_breaks: Vec<f64> = unwrapped.iter().filter(|q| q.outer && q.splits_run).map(|q| q.theta).collect();
    for i in 0..ns {
        for j in 0..nt {
            let g = idx(i, j);
            if !used[g] {
                continue;
            }
            let tag = if i == 0 {
                Some(BoundaryTag::PlanarGeodesic)
            } else if i == ns - 1 {
                Some(BoundaryTag::LineSegment)
            } else if j == 0 || j == nt - 1 {
                Some(BoundaryTag::Seam)
            } else if near_cut[g] {
                Some(BoundaryTag::EndTruncation)
            } else {
                None
            };
            let run = run_breaks.iter().filter(|&&t| t < thetas[j]).count();
            new_index[g] = nodes.len();
            nodes.push(DomainNode { s: ss[i], theta: thetas[j], z: zs[g], sheet: base_sheet, tag, row: i, col: j, run });
        }
    }
    let triangles: Vec<[usize; 3]> = tris_grid.iter().map(|t| [new_index[t[0]], new_index[t[1]], new_index[t[2]]]).collect();

    // edges
    let mut edge_map: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut edges = Vec::new();
    let mut triangle_edges = Vec::with_capacity(triangles.len());
    for t in &triangles {
        let mut te = [(0usize, true); 3];
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            let e = *edge_map.entry(key).or_insert_with(|| {
                edges.push(make_edge(&nodes, &ss, &unwrapped, key.0, key.1));
                edges.len() - 1
            });
            te[k] = (e, a == key.0);
        }
        triangle_edges.push(te);
    }

    // clearance of the nodes from the critical set
    for n in &nodes {
        let d = p.critical_distance(n.z);
        if d < clearance {
            return Err(Error::Clearance { z: n.z, dist: d });
        }
    }

    // base node: the real-axis node closest to z = 0
    let base = (0..nodes.len())
        .filter(|&v| nodes[v].row == ns - 1)
        .min_by(|&a, &b| nodes[a].z.norm().partial_cmp(&nodes[b].z.norm()).unwrap())
        .ok_or(Error::Degenerate("no real-axis nodes"))?;
    let mut tr = Tracker::new(base_sheet);
    let zb = nodes[base].z;
    for k in 1..=32 {
        tr.step(p, zb * (k as f64 / 32.0))?;
    }
    nodes[base].sheet = tr.current();
    nodes[base].sheet.z = zb;

    // spanning tree
    let mut adj: Vec<Vec<(usize, usize, bool)>> = alloc::vec![Vec::new(); nodes.len()];
    for (k, e) in edges.iter().enumerate() {
        adj[e.a].push((e.b, k, true));
        adj[e.b].push((e.a, k, false));
    }
    let mut parent = alloc::vec![None; nodes.len()];
    let mut seen = alloc::vec![false; nodes.len()];
    let mut order = Vec::with_capacity(nodes.len());
    let mut queue = VecDeque::new();
    seen[base] = true;
    queue.push_back(base);
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &(v, k, fwd) in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            let sp = track_edge(&chart, p, &nodes, &edges[k], fwd, nodes[u].sheet)?;
            nodes[v].sheet = sp;
            parent[v] = Some((k, fwd));
            queue.push_back(v);
        }
    }
    if order.len() != nodes.len() {
        return Err(Error::Degenerate("domain mesh is not connected"));
    }
    Ok(DomainMesh {
        chart,
        nodes,
        triangles,
        edges,
        triangle_edges,
        base,
        order,
        parent,
        seam,
        resolution,
        end_cutoff,
    })
}

fn make_edge(nodes: &[DomainNode], ss: &[f64], crit: &[Critical], a: usize, b: usize) -> Edge {
    let (na, nb) = (&nodes[a], &nodes[b]);
    let mut bump = 0.0;
    if na.row == nb.row && (na.row == 0 || na.row == ss.len() - 1) {
        let (t0, t1) = if na.theta < nb.theta { (na.theta, nb.theta) } else { (nb.theta, na.theta) };
        let inner = na.row == 0;
        let hit = crit.iter().any(|q| (if inner { q.inner } else { q.outer }) && q.theta > t0 && q.theta < t1);
        if hit {
            bump = if inner { ss[1] } else { ss[ss.len() - 2] - 1.0 };
        }
    }
    Edge { a, b, bump }
}

/// Point and `dz/du` on an edge path, `u` running from the first to the
/// second node when `forward`.
fn edge_point(chart: &Chart, nodes: &[DomainNode], e: &Edge, forward: bool, u: f64) -> (C64, C64) {
    let (na, nb) = (&nodes[e.a], &nodes[e.b]);
    let t = if forward { u } else { 1.0 - u };
    let sgn = if forward { 1.0 } else { -1.0 };
    let s = na.s + (nb.s - na.s) * t + e.bump * t * (1.0 - t);
    let th = na.theta + (nb.theta - na.theta) * t;
    let dsdt = (nb.s - na.s) + e.bump * (1.0 - 2.0 * t);
    let dthdt = nb.theta - na.theta;
    if t == 0.0 || t == 1.0 {
        let n = if t == 0.0 { na } else { nb };
        let zeta = chart.zeta(n.s, n.theta);
        let (ps, pt) = chart.zeta_partials(n.s, n.theta);
        return (n.z, dz_dzeta(zeta) * (ps * dsdt + pt * dthdt) * sgn);
    }
    let zeta = chart.zeta(s, th);
    let (ps, pt) = chart.zeta_partials(s, th);
    (zeta_to_z(zeta), dz_dzeta(zeta) * (ps * dsdt + pt * dthdt) * sgn)
}

/// Step the tracker from parameter `u0` to `u1` of `path`, subdividing
/// until each chord is short next to `|z|`. The tracker halves chords in
/// `z`, which is wrong for a path passing near `z = inf`.
fn advance<F: Fn(f64) -> (C64, C64)>(tr: &mut Tracker, p: &SurfaceParams, path: &F, u0: f64, u1: f64, depth: u32) -> Result<SheetPoint> {
    let z0 = tr.current().z;
    let (z1, _) = path(u1);
    let scale = z0.norm().min(z1.norm()).max(1.0);
    if depth < 40 && (z1 - z0).norm() > 0.25 * scale {
        let um = 0.5 * (u0 + u1);
        advance(tr, p, path, u0, um, depth + 1)?;
        return advance(tr, p, path, um, u1, depth + 1);
    }
    tr.step(p, z1)
}

fn track_edge(chart: &Chart, p: &SurfaceParams, nodes: &[DomainNode], e: &Edge, forward: bool, start: SheetPoint) -> Result<SheetPoint> {
    let mut tr = Tracker::new(start);
    let path = |u| edge_point(chart, nodes, e, forward, u);
    let n = 24;
    for k in 1..=n {
        advance(&mut tr, p, &path, (k - 1) as f64 / n as f64, k as f64 / n as f64, 0)?;
    }
    Ok(tr.current())
}

/// `int phi` along an edge, starting from `start`; also returns the sheet
/// data on arrival.
fn integrate_edge(chart: &Chart, p: &SurfaceParams, nodes: &[DomainNode], e: &Edge, forward: bool, start: SheetPoint, rule: &GaussLegendre) -> Result<([C64; 3], SheetPoint)> {
    integrate_path(p, start, rule, |u| edge_point(chart, nodes, e, forward, u))
}

fn integrate_path<F: Fn(f64) -> (C64, C64)>(p: &SurfaceParams, start: SheetPoint, rule: &GaussLegendre, path: F) -> Result<([C64; 3], SheetPoint)> {
    let mut panels = 1;
    let mut prev: Option<[C64; 3]> = None;
    loop {
        let mut tr = Tracker::new(start);
        let mut acc = [C64::new(0.0, 0.0); 3];
        let mut ok = true;
        let mut u_prev = 0.0;
        for (u, w) in panel_nodes(rule, panels, Endpoint::Smooth) {
            let (_, dz) = path(u);
            let step = advance(&mut tr, p, &path, u_prev, u, 0);
            u_prev = u;
            let sp = match step {
                Ok(sp) => sp,
                Err(Error::StepFailure { .. }) if panels < MAX_EDGE_PANELS => {
                    ok = false;
                    break;
                }
                Err(e) => return Err(e),
            };
            let f = forms_from(sp.g, dz * w / sp.zprime);
            acc[0] += f.phi1;
            acc[1] += f.phi2;
            acc[2] += f.phi3;
        }
        if ok {
            let end = advance(&mut tr, p, &path, u_prev, 1.0, 0)?;
            if let Some(pv) = prev {
                let err = (0..3).map(|k| (acc[k] - pv[k]).norm()).fold(0.0, f64::max);
                let size = acc.iter().map(|v| v.norm()).fold(0.0, f64::max);
                if err <= EDGE_TOL * (1.0 + size) {
                    return Ok((acc, end));
                }
                if panels >= MAX_EDGE_PANELS {
                    return Err(Error::NonConvergence { what: "edge quadrature", err });
                }
            }
            prev = Some(acc);
        } else {
            prev = None;
        }
        panels *= 2;
    }
}

fn sheet_mismatch(a: &SheetPoint, b: &SheetPoint) -> f64 {
    let r = |u: C64, v: C64| (u - v).norm() / (1.0 + u.norm().max(v.norm()));
    r(a.zprime, b.zprime).max(r(a.w, b.w)).max(r(a.g, b.g))
}

// ---------------------------------------------------------------------------
// immersion

/// Triangle mesh in `R^3`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeshPatch {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    pub normals: Vec<[f64; 3]>,
    pub copy_tags: Vec<CopyTag>,
}

/// Symmetry word applied to the vertices and faces starting at the given
/// offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct CopyTag {
    pub word: String,
    pub first_vertex: usize,
    pub first_face: usize,
}

/// The immersed domain plus its closure diagnostics.
#[derive(Debug, Clone)]
pub struct Immersion {
    pub patch: MeshPatch,
    /// Per-triangle `|sum of edge integrals|` relative to the largest edge
    /// integral of that triangle.
    pub closure: Vec<f64>,
    pub max_closure: f64,
    /// Largest mismatch between sheet data carried along different edges.
    pub max_sheet_mismatch: f64,
    pub edge_mismatch: Vec<f64>,
}

/// Unit normal from the stereographic projection `g`.
pub fn normal_from_g(g: C64) -> [f64; 3] {
    if !g.is_finite() {
        return [0.0, 0.0, 1.0];
    }
    let n2 = g.norm_sqr();
    let v = [2.0 * g.re, 2.0 * g.im, n2 - 1.0];
    scale(v, 1.0 / (1.0 + n2))
}

/// `X = Re int phi` from `z = 0` on the base sheet, accumulated along the
/// spanning tree. Every edge is integrated once; the closure of each
/// triangle is checked against `tol` (relative to its edge integrals).
pub fn immerse(dm: &DomainMesh, p: &SurfaceParams) -> Result<Immersion> {
    immerse_with(dm, p, 1e-8)
}

pub fn immerse_with(dm: &DomainMesh, p: &SurfaceParams, tol: f64) -> Result<Immersion> {
    let im = immerse_unchecked(dm, p)?;
    if im.max_sheet_mismatch > SHEET_MATCH {
        return Err(Error::Consistency { defect: im.max_sheet_mismatch });
    }
    if im.max_closure > tol {
        return Err(Error::Consistency { defect: im.max_closure });
    }
    Ok(im)
}

/// The immersion without the consistency checks (for diagnostics).
pub fn immerse_unchecked(dm: &DomainMesh, p: &SurfaceParams) -> Result<Immersion> {
    let rule = GaussLegendre::new(12);
    let nodes = &dm.nodes;
    let mut integrals = Vec::with_capacity(dm.edges.len());
    let mut mismatch: f64 = 0.0;
    let mut edge_mismatch = Vec::with_capacity(dm.edges.len());
    for e in &dm.edges {
        let (val, end) = integrate_edge(&dm.chart, p, nodes, e, true, nodes[e.a].sheet, &rule)?;
        let mm = sheet_mismatch(&end, &nodes[e.b].sheet);
        mismatch = mismatch.max(mm);
        edge_mismatch.push(mm);
        integrals.push(val);
    }

    let b = &nodes[dm.base];
    let (v0, _) = integrate_path(p, base_point(p)?, &rule, |u| (b.z * u, b.z))?;
    let mut x = alloc::vec![[0.0; 3]; nodes.len()];
    x[dm.base] = [v0[0].re, v0[1].re, v0[2].re];
    for &v in &dm.order {
        if let Some((k, fwd)) = dm.parent[v] {
            let e = &dm.edges[k];
            let u = if fwd { e.a } else { e.b };
            let s = if fwd { 1.0 } else { -1.0 };
            let d = integrals[k];
            x[v] = add(x[u], scale([d[0].re, d[1].re, d[2].re], s));
        }
    }

    let mut closure = Vec::with_capacity(dm.triangles.len());
    let mut worst: f64 = 0.0;
    for te in &dm.triangle_edges {
        let mut sum = [C64::new(0.0, 0.0); 3];
        let mut size: f64 = 0.0;
        for &(k, fwd) in te {
            let s = if fwd { 1.0 } else { -1.0 };
            for j in 0..3 {
                sum[j] += integrals[k][j] * s;
            }
            size = size.max(integrals[k].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt());
        }
        let d = sum.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() / size.max(1e-300);
        worst = worst.max(d);
        closure.push(d);
    }
    let normals = nodes.iter().map(|n| normal_from_g(n.sheet.g)).collect();
    Ok(Immersion {
        patch: MeshPatch {
            vertices: x,
            faces: dm.triangles.clone(),
            normals,
            copy_tags: alloc::vec![CopyTag { word: String::from("id"), first_vertex: 0, first_face: 0 }],
        },
        closure,
        max_closure: worst,
        max_sheet_mismatch: mismatch,
        edge_mismatch,
    })
}

// ---------------------------------------------------------------------------
// symmetry group and assembly

/// Images of `S`, `F` and the slit tip, which fix the rotation axes and the
/// reflection planes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PieceFrame {
    pub s: [f64; 3],
    pub f: [f64; 3],
    /// Height of the planar geodesic through the slit image.
    pub slit_height: f64,
    /// Height of the lower reflection plane before the shift.
    pub lower: f64,
}

fn endpoint_image(p: &SurfaceParams, target: C64, tol: f64) -> Result<[f64; 3]> {
    let cy = CyclePath {
        name: CycleName::Word,
        start: base_point(p)?,
        legs: alloc::vec![Leg {
            pieces: alloc::vec![Piece::line_sub(c(0.0, 0.0), target, Endpoint::End)],
            lift: Lift::Continue,
            integrate: true,
        }],
        closed: false,
        clearance: p.default_clearance(),
    };
    Ok(integrate_cycle(&cy, p, false, tol)?.re())
}

impl PieceFrame {
    pub fn new(p: &SurfaceParams, tol: f64) -> Result<Self> {
        let s = endpoint_image(p, c(-p.x(), 0.0), tol)?;
        let f = endpoint_image(p, c(p.x(), 0.0), tol)?;
        let tip = endpoint_image(p, c(0.0, p.tan()), tol)?;
        let axis = 0.5 * (s[2] + f[2]);
        let other = 2.0 * axis - tip[2];
        Ok(Self { s, f, slit_height: tip[2], lower: tip[2].min(other) })
    }

    /// 180-degree rotation about the line through `X(S)` and `X(F)`.
    pub fn rotate_segment(&self, v: [f64; 3]) -> [f64; 3] {
        let d = sub(self.f, self.s);
        let u = scale(d, 1.0 / norm(d));
        let r = sub(v, self.s);
        let proj = add(self.s, scale(u, dot(r, u)));
        sub(scale(proj, 2.0), v)
    }

    /// `rho`: 180-degree rotation about the vertical axis through `X(S)`.
    pub fn rho(&self, v: [f64; 3]) -> [f64; 3] {
        [2.0 * self.s[0] - v[0], 2.0 * self.s[1] - v[1], v[2]]
    }
}

/// Vertical reflection generator and horizontal translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeGroup {
    pub t2: f64,
    pub t3: f64,
}

impl LatticeGroup {
    pub fn new(p: &SurfaceParams, tol: f64) -> Result<Self> {
        Ok(Self { t2: scherk_end_residue(p)?.abs(), t3: vertical_period(p, tol)? })
    }

    /// `(x1, x2, x3) -> (x1, x2, -x3 + T3)`: reflection in `x3 = T3/2`.
    pub fn vertical(&self, v: [f64; 3]) -> [f64; 3] {
        [v[0], v[1], -v[2] + self.t3]
    }

    /// Reflection in the lower plane `x3 = 0`.
    pub fn lower_reflection(&self, v: [f64; 3]) -> [f64; 3] {
        [v[0], v[1], -v[2]]
    }

    pub fn horizontal(&self, v: [f64; 3], n: i64) -> [f64; 3] {
        [v[0], v[1] + n as f64 * self.t2, v[2]]
    }
}

fn push_copy<F: Fn([f64; 3]) -> [f64; 3], G: Fn([f64; 3]) -> [f64; 3]>(out: &mut MeshPatch, src: &MeshPatch, word: String, map: F, lin: G, flip: bool) {
    let (v0, f0) = (out.vertices.len(), out.faces.len());
    out.copy_tags.push(CopyTag { word, first_vertex: v0, first_face: f0 });
    out.vertices.extend(src.vertices.iter().map(|&v| map(v)));
    out.normals.extend(src.normals.iter().map(|&n| lin(n)));
    out.faces.extend(src.faces.iter().map(|f| if flip { [f[0] + v0, f[2] + v0, f[1] + v0] } else { [f[0] + v0, f[1] + v0, f[2] + v0] }));
}

/// The fundamental piece `P` (the patch, its `rho` image and the rotations
/// of both about the segment), shifted so that the lower reflection plane
/// is `x3 = 0`, followed by `n2 x n3` copies under the lattice. Vertical
/// layer `j` is the piece reflected in `x3 = T3/2` when `j` is odd and
/// translated by `floor(j/2) T3`.
pub fn assemble_piece(patch: &MeshPatch, frame: &PieceFrame, group: &LatticeGroup, copies: (usize, usize)) -> MeshPatch {
    let shift = frame.lower;
    let sh = |v: [f64; 3]| [v[0], v[1], v[2] - shift];
    let mut piece = MeshPatch::default();
    let id = |n: [f64; 3]| n;
    let rho_lin = |n: [f64; 3]| [-n[0], -n[1], n[2]];
    let d = sub(frame.f, frame.s);
    let u = scale(d, 1.0 / norm(d));
    let rot_lin = move |n: [f64; 3]| sub(scale(u, 2.0 * dot(n, u)), n);
    push_copy(&mut piece, patch, String::from("id"), |v| sh(v), id, false);
    push_copy(&mut piece, patch, String::from("rho"), |v| sh(frame.rho(v)), rho_lin, false);
    push_copy(&mut piece, patch, String::from("rot"), |v| sh(frame.rotate_segment(v)), rot_lin, false);
    push_copy(&mut piece, patch, String::from("rot.rho"), |v| sh(frame.rotate_segment(frame.rho(v))), move |n| rot_lin(rho_lin(n)), false);

    let (n2, n3) = (copies.0.max(1), copies.1.max(1));
    if n2 == 1 && n3 == 1 {
        return piece;
    }
    let mut out = MeshPatch::default();
    for j3 in 0..n3 {
        for j2 in 0..n2 {
            let odd = j3 % 2 == 1;
            let lift = (j3 / 2) as f64 * group.t3;
            let (vs, fs) = (out.vertices.len(), out.faces.len());
            for tag in &piece.copy_tags {
                let word = match (j2, j3) {
                    (0, 0) => tag.word.clone(),
                    _ => format!("H^{j2}.Z^{}{}.{}", j3 / 2, if odd { ".V" } else { "" }, tag.word),
                };
                out.copy_tags.push(CopyTag { word, first_vertex: vs + tag.first_vertex, first_face: fs + tag.first_face });
            }
            for &v in &piece.vertices {
                let w = if odd { group.vertical(v) } else { v };
                let w = group.horizontal(w, j2 as i64);
                out.vertices.push([w[0], w[1], w[2] + lift]);
            }
            for &n in &piece.normals {
                out.normals.push(if odd { [n[0], n[1], -n[2]] } else { n });
            }
            for f in &piece.faces {
                out.faces.push(if odd { [f[0] + vs, f[2] + vs, f[1] + vs] } else { [f[0] + vs, f[1] + vs, f[2] + vs] });
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// discrete checks

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckReport {
    /// Area-weighted RMS of the cotangent mean curvature over interior
    /// vertices.
    pub rms_mean_curvature: f64,
    /// Median angle in degrees between face normals and the normal from
    /// `g` at the face centroid.
    pub median_normal_deviation: f64,
    /// Gauss image area of the piece, counted on the quotient surface (eight
    /// copies of the patch), in units of the sphere.
    pub degree_estimate: f64,
    /// Largest deviation of the slit image from a horizontal plane.
    pub planarity: f64,
    /// Largest deviation of a real-axis run from a line.
    pub collinearity: f64,
    pub diameter: f64,
    pub max_closure: f64,
}

fn diameter(v: &[[f64; 3]]) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in v {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if v.is_empty() {
        0.0
    } else {
        norm(sub(hi, lo))
    }
}

fn cot_angle(a: [f64; 3], b: [f64; 3]) -> f64 {
    dot(a, b) / norm(cross(a, b)).max(1e-300)
}

/// Cotangent-weight mean curvature with mixed Voronoi areas. Returns
/// `(|H|, area)` per vertex.
pub fn mean_curvature(patch: &MeshPatch) -> Vec<(f64, f64)> {
    let n = patch.vertices.len();
    let mut lap = alloc::vec![[0.0; 3]; n];
    let mut area = alloc::vec![0.0; n];
    let v = &patch.vertices;
    for f in &patch.faces {
        let p = [v[f[0]], v[f[1]], v[f[2]]];
        let tri_area = 0.5 * norm(cross(sub(p[1], p[0]), sub(p[2], p[0])));
        if tri_area == 0.0 {
            continue;
        }
        let mut cots = [0.0; 3];
        let mut obtuse = None;
        for k in 0..3 {
            let (a, b) = (sub(p[(k + 1) % 3], p[k]), sub(p[(k + 2) % 3], p[k]));
            cots[k] = cot_angle(a, b);
            if dot(a, b) < 0.0 {
                obtuse = Some(k);
            }
        }
        for k in 0..3 {
            // the edge opposite vertex k joins the other two
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            let d = scale(sub(p[j], p[i]), cots[k]);
            lap[f[i]] = add(lap[f[i]], d);
            lap[f[j]] = sub(lap[f[j]], d);
        }
        match obtuse {
            None => {
                for k in 0..3 {
                    let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                    let e2 = dot(sub(p[j], p[i]), sub(p[j], p[i]));
                    area[f[i]] += e2 * cots[k] / 8.0;
                    area[f[j]] += e2 * cots[k] / 8.0;
                }
            }
            Some(o) => {
                for k in 0..3 {
                    area[f[k]] += if k == o { tri_area / 2.0 } else { tri_area / 4.0 };
                }
            }
        }
    }
    (0..n)
        .map(|i| {
            if area[i] > 0.0 {
                (0.5 * norm(lap[i]) / (2.0 * area[i]), area[i])
            } else {
                (0.0, 0.0)
            }
        })
        .collect()
}

/// Spherical area of the triangle with unit vertices `a`, `b`, `c`.
fn spherical_area(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let num = dot(a, cross(b, c)).abs();
    let den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * num.atan2(den)
}

fn line_deviation(pts: &[[f64; 3]]) -> f64 {
    if pts.len() < 3 {
        return 0.0;
    }
    let a = pts[0];
    let mut b = pts[1];
    let mut best = 0.0;
    for &q in pts {
        let d = norm(sub(q, a));
        if d > best {
            best = d;
            b = q;
        }
    }
    if best == 0.0 {
        return 0.0;
    }
    let u = scale(sub(b, a), 1.0 / best);
    pts.iter()
        .map(|&q| {
            let r = sub(q, a);
            norm(sub(r, scale(u, dot(r, u))))
        })
        .fold(0.0, f64::max)
}

/// Checks on an immersed domain patch (vertices indexed like the nodes).
pub fn discrete_checks(dm: &DomainMesh, im: &Immersion, p: &SurfaceParams) -> Result<CheckReport> {
    let patch = &im.patch;
    let diam = diameter(&patch.vertices);

    let hc = mean_curvature(patch);
    let (mut num, mut den) = (0.0, 0.0);
    for (i, n) in dm.nodes.iter().enumerate() {
        if n.tag.is_none() {
            num += hc[i].1 * hc[i].0 * hc[i].0;
            den += hc[i].1;
        }
    }
    let rms = if den > 0.0 { (num / den).sqrt() } else { 0.0 };

    let mut devs = Vec::with_capacity(patch.faces.len());
    let mut gauss_area = 0.0;
    for f in &patch.faces {
        let v = &patch.vertices;
        let fnrm = cross(sub(v[f[1]], v[f[0]]), sub(v[f[2]], v[f[0]]));
        let l = norm(fnrm);
        let (ns, nt) = (&dm.nodes[f[0]], (&dm.nodes[f[1]], &dm.nodes[f[2]]));
        let s = (ns.s + nt.0.s + nt.1.s) / 3.0;
        let th = (ns.theta + nt.0.theta + nt.1.theta) / 3.0;
        let z = dm.chart.z(s, th);
        let sp = evaluate_sheet(p, z, &ns.sheet)?;
        let gn = normal_from_g(sp.g);
        if l > 0.0 {
            let cosang = (dot(fnrm, gn) / l).clamp(-1.0, 1.0);
            devs.push(cosang.acos().to_degrees());
        }
        let nn = &patch.normals;
        gauss_area += spherical_area(nn[f[0]], nn[f[1]], nn[f[2]]);
    }
    devs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if devs.is_empty() { 0.0 } else { devs[devs.len() / 2] };

    let slit: Vec<f64> = dm
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.tag == Some(BoundaryTag::PlanarGeodesic))
        .map(|(i, _)| patch.vertices[i][2])
        .collect();
    let planarity = if slit.is_empty() {
        0.0
    } else {
        let lo = slit.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = slit.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };

    let mut runs: BTreeMap<usize, Vec<[f64; 3]>> = BTreeMap::new();
    for (i, n) in dm.nodes.iter().enumerate() {
        if n.tag == Some(BoundaryTag::LineSegment) {
            runs.entry(n.run).or_default().push(patch.vertices[i]);
        }
    }
    let collinearity = runs.values().map(|r| line_deviation(r)).fold(0.0, f64::max);

    Ok(CheckReport {
        rms_mean_curvature: rms,
        median_normal_deviation: median,
        degree_estimate: 8.0 * gauss_area / (4.0 * PI),
        planarity,
        collinearity,
        diameter: diam,
        max_closure: im.max_closure,
    })
}

// ---------------------------------------------------------------------------
// self-intersection scan

/// Merge vertices closer than `tol` (lexicographic grid hashing).
fn weld(v: &[[f64; 3]], tol: f64) -> Vec<usize> {
    let mut map: BTreeMap<(i64, i64, i64), Vec<usize>> = BTreeMap::new();
    let key = |p: [f64; 3]| ((p[0] / tol).floor() as i64, (p[1] / tol).floor() as i64, (p[2] / tol).floor() as i64);
    let mut rep = alloc::vec![0usize; v.len()];
    for (i, &p) in v.iter().enumerate() {
        let k = key(p);
        let mut found = None;
        'outer: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = map.get(&(k.0 + dx, k.1 + dy, k.2 + dz)) {
                        for &j in list {
                            if norm(sub(v[j], p)) <= tol {
                                found = Some(j);
                                break 'outer;
                            }
                        }
                    }
                }
            }
        }
        match found {
            Some(j) => rep[i] = rep[j],
            None => {
                rep[i] = i;
                map.entry(k).or_default().push(i);
            }
        }
    }
    rep
}

/// Does segment `p q` cross the interior of triangle `t`?
fn segment_hits_triangle(p: [f64; 3], q: [f64; 3], t: [[f64; 3]; 3], eps: f64) -> bool {
    let d = sub(q, p);
    let e1 = sub(t[1], t[0]);
    let e2 = sub(t[2], t[0]);
    let h = cross(d, e2);
    let a = dot(e1, h);
    if a.abs() < 1e-300 {
        return false;
    }
    let f = 1.0 / a;
    let s = sub(p, t[0]);
    let u = f * dot(s, h);
    if u <= eps || u >= 1.0 - eps {
        return false;
    }
    let qv = cross(s, e1);
    let v = f * dot(d, qv);
    if v <= eps || u + v >= 1.0 - eps {
        return false;
    }
    let tt = f * dot(e2, qv);
    tt > eps && tt < 1.0 - eps
}

/// Number of pairs of faces without a common (welded) vertex that
/// intersect, using a uniform spatial hash of face bounding boxes.
pub fn count_self_intersections(mesh: &MeshPatch, weld_tol: f64) -> usize {
    let rep = weld(&mesh.vertices, weld_tol);
    let v = &mesh.vertices;
    let faces: Vec<[usize; 3]> = mesh.faces.iter().map(|f| [rep[f[0]], rep[f[1]], rep[f[2]]]).collect();
    if faces.is_empty() {
        return 0;
    }
    let mut mean_edge = 0.0;
    for f in &faces {
        mean_edge += norm(sub(v[f[1]], v[f[0]]));
    }
    let cell = (mean_edge / faces.len() as f64).max(1e-12) * 2.0;
    let mut grid: BTreeMap<(i64, i64, i64), Vec<usize>> = BTreeMap::new();
    let bbox = |f: &[usize; 3]| {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in f {
            for k in 0..3 {
                lo[k] = lo[k].min(v[i][k]);
                hi[k] = hi[k].max(v[i][k]);
            }
        }
        (lo, hi)
    };
    let boxes: Vec<([f64; 3], [f64; 3])> = faces.iter().map(bbox).collect();
    for (fi, (lo, hi)) in boxes.iter().enumerate() {
        let a = [(lo[0] / cell).floor() as i64, (lo[1] / cell).floor() as i64, (lo[2] / cell).floor() as i64];
        let b = [(hi[0] / cell).floor() as i64, (hi[1] / cell).floor() as i64, (hi[2] / cell).floor() as i64];
        // very large faces (near the ends) are capped to keep the grid small
        let span = (b[0] - a[0] + 1) * (b[1] - a[1] + 1) * (b[2] - a[2] + 1);
        if span > 4096 {
            grid.entry((i64::MIN, 0, 0)).or_default().push(fi);
            continue;
        }
        for x in a[0]..=b[0] {
            for y in a[1]..=b[1] {
                for z in a[2]..=b[2] {
                    grid.entry((x, y, z)).or_default().push(fi);
                }
            }
        }
    }
    let big: Vec<usize> = grid.get(&(i64::MIN, 0, 0)).cloned().unwrap_or_default();
    let mut pairs: BTreeMap<(usize, usize), ()> = BTreeMap::new();
    let mut consider = |i: usize, j: usize| {
        if i == j {
            return;
        }
        let key = (i.min(j), i.max(j));
        if pairs.contains_key(&key) {
            return;
        }
        let (fa, fb) = (&faces[key.0], &faces[key.1]);
        if fa.iter().any(|x| fb.contains(x)) {
            return;
        }
        let (la, ha) = boxes[key.0];
        let (lb, hb) = boxes[key.1];
        if (0..3).any(|k| ha[k] < lb[k] || hb[k] < la[k]) {
            return;
        }
        pairs.insert(key, ());
    };
    for (k, list) in grid.iter() {
        if k.0 == i64::MIN {
            continue;
        }
        for (a, &i) in list.iter().enumerate() {
            for &j in &list[a + 1..] {
                consider(i, j);
            }
        }
    }
    for &i in &big {
        for j in 0..faces.len() {
            consider(i, j);
        }
    }
    let eps = 1e-9;
    pairs
        .keys()
        .filter(|&&(i, j)| {
            let ta = [v[faces[i][0]], v[faces[i][1]], v[faces[i][2]]];
            let tb = [v[faces[j][0]], v[faces[j][1]], v[faces[j][2]]];
            (0..3).any(|k| segment_hits_triangle(ta[k], ta[(k + 1) % 3], tb, eps) || segment_hits_triangle(tb[k], tb[(k + 1) % 3], ta, eps))
        })
        .count()
}

/// Largest triangle diameter in the `zeta` chart.
pub fn max_chart_diameter(dm: &DomainMesh) -> f64 {
    let zeta: Vec<C64> = dm.nodes.iter().map(|n| dm.chart.zeta(n.s, n.theta)).collect();
    dm.triangles
        .iter()
        .map(|t| {
            let (a, b, c) = (zeta[t[0]], zeta[t[1]], zeta[t[2]]);
            (a - b).norm().max((b - c).norm()).max((c - a).norm())
        })
        .fold(0.0, f64::max)
}

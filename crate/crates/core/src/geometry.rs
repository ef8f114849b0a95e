//! Parameterized boundary patches and the built-in scenes.
//!
//! Curves are traversed so that the normal `ν = (r′₂, −r′₁)/|r′|` (right of
//! the direction of travel) points out of the fluid: downward on the ground
//! line and into obstacles. Surfaces carry an explicit orientation sign.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cheb::{chi, GradedMap};
use crate::error::{Error, Result};
use crate::pml::PmlProfile;

/// Position, tangents, unit normal and area element at one parameter point.
#[derive(Debug, Clone, Copy)]
pub struct Frame<const D: usize> {
    pub point: [f64; D],
    pub du: [f64; D],
    /// Second tangent; zero for curves.
    pub dv: [f64; D],
    pub normal: [f64; D],
    pub jacobian: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchKind {
    /// Piece of the flat interface `Π`.
    Flat,
    /// Piece of an obstacle or of a local defect.
    Obstacle,
}

pub trait Patch<const D: usize>: Send + Sync + Debug {
    /// `r(u, v)` and its parameter derivatives; curves ignore `v`.
    fn map(&self, u: f64, v: f64) -> ([f64; D], [f64; D], [f64; D]);

    fn kind(&self) -> PatchKind;

    /// Sign applied to `r_u × r_v` (surfaces only).
    fn orientation(&self) -> f64 {
        1.0
    }

    /// `r(u + du, v + dv) − r(u, v)`; overridden where it can be formed
    /// without cancellation for small offsets.
    fn displacement(&self, u: f64, v: f64, du: f64, dv: f64) -> [f64; D] {
        let (a, _, _) = self.map(u, v);
        let (b, _, _) = self.map(u + du, v + dv);
        std::array::from_fn(|i| b[i] - a[i])
    }

    fn frame(&self, u: f64, v: f64) -> Frame<D> {
        let (point, du, dv) = self.map(u, v);
        let mut normal = [0.0; D];
        let (n, jacobian) = {
            let a: &[f64] = &du;
            let b: &[f64] = &dv;
            if D == 2 {
                let j = a[0].hypot(a[1]);
                (vec![a[1] / j, -a[0] / j], j)
            } else {
                let c = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
                let j = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
                let s = self.orientation() / j;
                (vec![c[0] * s, c[1] * s, c[2] * s], j)
            }
        };
        normal.copy_from_slice(&n);
        Frame { point, du, dv, normal, jacobian }
    }
}

/// Straight segment from `a` to `b`.
#[derive(Debug, Clone)]
pub struct Segment {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub kind: PatchKind,
}

impl Patch<2> for Segment {
    fn map(&self, u: f64, _v: f64) -> ([f64; 2], [f64; 2], [f64; 2]) {
        let s = 0.5 * (u + 1.0);
        let d = [0.5 * (self.b[0] - self.a[0]), 0.5 * (self.b[1] - self.a[1])];
        (
            [self.a[0] + s * (self.b[0] - self.a[0]), self.a[1] + s * (self.b[1] - self.a[1])],
            d,
            [0.0; 2],
        )
    }

    fn displacement(&self, _u: f64, _v: f64, du: f64, _dv: f64) -> [f64; 2] {
        [0.5 * du * (self.b[0] - self.a[0]), 0.5 * du * (self.b[1] - self.a[1])]
    }

    fn kind(&self) -> PatchKind {
        self.kind
    }
}

/// Closed curve `c + (Σ aₙ cos nt + bₙ sin nt, Σ cₙ cos nt + dₙ sin nt)`,
/// counterclockwise for increasing `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigCurve {
    pub center: [f64; 2],
    pub x_cos: Vec<f64>,
    pub x_sin: Vec<f64>,
    pub y_cos: Vec<f64>,
    pub y_sin: Vec<f64>,
}

impl TrigCurve {
    pub fn circle(center: [f64; 2], radius: f64) -> Self {
        Self {
            center,
            x_cos: vec![0.0, radius],
            x_sin: vec![],
            y_cos: vec![],
            y_sin: vec![0.0, radius],
        }
    }

    /// `(cos t + 0.65 cos 2t − 0.65, 1.5 sin t)` scaled and shifted.
    pub fn kite(center: [f64; 2], scale: f64) -> Self {
        Self {
            center,
            x_cos: vec![-0.65 * scale, scale, 0.65 * scale],
            x_sin: vec![],
            y_cos: vec![],
            y_sin: vec![0.0, 1.5 * scale],
        }
    }

    pub fn eval(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        let series = |cs: &[f64], sn: &[f64]| {
            let mut v = 0.0;
            let mut d = 0.0;
            for (n, c) in cs.iter().enumerate() {
                let nf = n as f64;
                v += c * (nf * t).cos();
                d -= c * nf * (nf * t).sin();
            }
            for (n, s) in sn.iter().enumerate() {
                let nf = n as f64;
                v += s * (nf * t).sin();
                d += s * nf * (nf * t).cos();
            }
            (v, d)
        };
        let (x, dx) = series(&self.x_cos, &self.x_sin);
        let (y, dy) = series(&self.y_cos, &self.y_sin);
        ([self.center[0] + x, self.center[1] + y], [dx, dy])
    }

    /// `r(t + dt) − r(t)` via sum-to-product identities.
    pub fn displacement(&self, t: f64, dt: f64) -> [f64; 2] {
        let mid = t + 0.5 * dt;
        let series = |cs: &[f64], sn: &[f64]| {
            let mut v = 0.0;
            for (n, c) in cs.iter().enumerate() {
                let nf = n as f64;
                v -= 2.0 * c * (nf * mid).sin() * (0.5 * nf * dt).sin();
            }
            for (n, s) in sn.iter().enumerate() {
                let nf = n as f64;
                v += 2.0 * s * (nf * mid).cos() * (0.5 * nf * dt).sin();
            }
            v
        };
        [series(&self.x_cos, &self.x_sin), series(&self.y_cos, &self.y_sin)]
    }

    /// Arc length by the periodic trapezoid rule.
    pub fn perimeter(&self) -> f64 {
        let m = 512;
        (0..m).map(|i| self.eval(2.0 * PI * i as f64 / m as f64).1).map(|d| d[0].hypot(d[1])).sum::<f64>() * 2.0 * PI / m as f64
    }

    /// Sampled bounding box (min, max).
    pub fn extent(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for i in 0..4096 {
            let (p, _) = self.eval(2.0 * PI * i as f64 / 4096.0);
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }
}

/// Piece of a [`TrigCurve`] for `t` running linearly from `t0` to `t1`.
#[derive(Debug, Clone)]
pub struct CurveArc {
    pub curve: Arc<TrigCurve>,
    pub t0: f64,
    pub t1: f64,
    pub kind: PatchKind,
}

impl Patch<2> for CurveArc {
    fn map(&self, u: f64, _v: f64) -> ([f64; 2], [f64; 2], [f64; 2]) {
        let half = 0.5 * (self.t1 - self.t0);
        let t = self.t0 + (u + 1.0) * half;
        let (p, d) = self.curve.eval(t);
        (p, [d[0] * half, d[1] * half], [0.0; 2])
    }

    fn displacement(&self, u: f64, _v: f64, du: f64, _dv: f64) -> [f64; 2] {
        let half = 0.5 * (self.t1 - self.t0);
        self.curve.displacement(self.t0 + (u + 1.0) * half, du * half)
    }

    fn kind(&self) -> PatchKind {
        self.kind
    }
}

/// Which ends of a curve patch get the corner-resolving reparameterization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradedEnds {
    Start,
    End,
    Both,
}

/// Curve patch reparameterized so that `dr/du` vanishes to order `p − 1` at
/// the flagged ends.
#[derive(Debug)]
pub struct CornerGraded<P> {
    pub inner: P,
    pub ends: GradedEnds,
    pub p: u32,
}

impl<P> CornerGraded<P> {
    fn warp(&self, u: f64) -> (f64, f64) {
        match self.ends {
            GradedEnds::End => GradedMap::new(1.0, self.p).eval(u),
            GradedEnds::Start => GradedMap::new(-1.0, self.p).eval(u),
            GradedEnds::Both => chi(self.p, u),
        }
    }
}

impl<P: Patch<2>> Patch<2> for CornerGraded<P> {
    fn map(&self, u: f64, v: f64) -> ([f64; 2], [f64; 2], [f64; 2]) {
        let (g, dg) = self.warp(u);
        let (p, d, _) = self.inner.map(g, v);
        (p, [d[0] * dg, d[1] * dg], [0.0; 2])
    }

    fn displacement(&self, u: f64, v: f64, du: f64, dv: f64) -> [f64; 2] {
        let (g0, d0) = self.warp(u);
        let dgu = if du.abs() < 2e-3 {
            // Simpson on g′ keeps the offset accurate where g(u + du) − g(u) cancels.
            let (_, dm) = self.warp(u + 0.5 * du);
            let (_, d1) = self.warp(u + du);
            du * (d0 + 4.0 * dm + d1) / 6.0
        } else {
            self.warp(u + du).0 - g0
        };
        self.inner.displacement(g0, v, dgu, dv)
    }

    fn kind(&self) -> PatchKind {
        self.inner.kind()
    }
}

/// Axis-aligned rectangle in the plane `x₃ = 0`, normal pointing down.
#[derive(Debug, Clone)]
pub struct Rect {
    pub center: [f64; 2],
    pub half: [f64; 2],
}

impl Patch<3> for Rect {
    fn map(&self, u: f64, v: f64) -> ([f64; 3], [f64; 3], [f64; 3]) {
        (
            [self.center[0] + self.half[0] * u, self.center[1] + self.half[1] * v, 0.0],
            [self.half[0], 0.0, 0.0],
            [0.0, self.half[1], 0.0],
        )
    }

    fn displacement(&self, _u: f64, _v: f64, du: f64, dv: f64) -> [f64; 3] {
        [self.half[0] * du, self.half[1] * dv, 0.0]
    }

    fn kind(&self) -> PatchKind {
        PatchKind::Flat
    }

    fn orientation(&self) -> f64 {
        -1.0
    }
}

/// One face of the equiangular cube-to-sphere map, normal pointing into the ball.
#[derive(Debug, Clone)]
pub struct SphereFace {
    pub center: [f64; 3],
    pub radius: f64,
    pub face: usize,
    sign: f64,
}

impl SphereFace {
    pub fn new(center: [f64; 3], radius: f64, face: usize) -> Self {
        let mut f = Self { center, radius, face, sign: 1.0 };
        let (p, du, dv) = f.map(0.0, 0.0);
        let c = cross(&du, &dv);
        let out = [p[0] - center[0], p[1] - center[1], p[2] - center[2]];
        f.sign = if dot(&c, &out) > 0.0 { -1.0 } else { 1.0 };
        f
    }

    fn cube(&self, u: f64, v: f64) -> ([f64; 3], [f64; 3], [f64; 3]) {
        let (a, b) = ((FRAC_PI_4 * u).tan(), (FRAC_PI_4 * v).tan());
        let (da, db) = (FRAC_PI_4 * (1.0 + a * a), FRAC_PI_4 * (1.0 + b * b));
        let s = if self.face % 2 == 0 { 1.0 } else { -1.0 };
        match self.face / 2 {
            0 => ([s, a, b], [0.0, da, 0.0], [0.0, 0.0, db]),
            1 => ([b, s, a], [0.0, 0.0, da], [db, 0.0, 0.0]),
            _ => ([a, b, s], [da, 0.0, 0.0], [0.0, db, 0.0]),
        }
    }
}

impl Patch<3> for SphereFace {
    fn map(&self, u: f64, v: f64) -> ([f64; 3], [f64; 3], [f64; 3]) {
        let (q, qu, qv) = self.cube(u, v);
        let n = dot(&q, &q).sqrt();
        let r = self.radius;
        let proj = |dq: &[f64; 3]| {
            let s = dot(&q, dq) / (n * n * n);
            [r * (dq[0] / n - q[0] * s), r * (dq[1] / n - q[1] * s), r * (dq[2] / n - q[2] * s)]
        };
        (
            [self.center[0] + r * q[0] / n, self.center[1] + r * q[1] / n, self.center[2] + r * q[2] / n],
            proj(&qu),
            proj(&qv),
        )
    }

    fn displacement(&self, u: f64, v: f64, du: f64, dv: f64) -> [f64; 3] {
        let (q0, _, _) = self.cube(u, v);
        let (q1, _, _) = self.cube(u + du, v + dv);
        let tan_diff = |x: f64, dx: f64| {
            let (a, b) = (FRAC_PI_4 * x, FRAC_PI_4 * (x + dx));
            (FRAC_PI_4 * dx).sin() / (a.cos() * b.cos())
        };
        let (da, db) = (tan_diff(u, du), tan_diff(v, dv));
        let dq = match self.face / 2 {
            0 => [0.0, da, db],
            1 => [db, 0.0, da],
            _ => [da, db, 0.0],
        };
        let (n0, n1) = (dot(&q0, &q0).sqrt(), dot(&q1, &q1).sqrt());
        let sum = [2.0 * q0[0] + dq[0], 2.0 * q0[1] + dq[1], 2.0 * q0[2] + dq[2]];
        let inv_diff = dot(&dq, &sum) / (n0 * n1 * (n0 + n1));
        let r = self.radius;
        std::array::from_fn(|i| r * (dq[i] / n1 - q0[i] * inv_diff))
    }

    fn kind(&self) -> PatchKind {
        PatchKind::Obstacle
    }

    fn orientation(&self) -> f64 {
        self.sign
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
    Transmission,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    Disc2d,
    Kite2d,
    Bump2layer,
    Ball3d,
    Custom,
}

/// Patches of `Γᵇ` plus the data needed to pose and check a problem.
#[derive(Debug, Clone)]
pub struct Scene<const D: usize> {
    pub kind: SceneKind,
    pub patches: Vec<Arc<dyn Patch<D>>>,
    pub profile: PmlProfile<f64>,
    /// A point strictly inside the obstacle (or below the interface).
    pub interior_point: [f64; D],
    /// A point in the fluid above the defect (used by two-sided manufactured tests).
    pub exterior_point: [f64; D],
    /// Sample points of the error screen `Γ_test`.
    pub test_points: Vec<[f64; D]>,
}

impl<const D: usize> Scene<D> {
    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }
}

/// Geometry overrides for the 2D scenes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanarSceneParams {
    pub center: [f64; 2],
    /// Radius for disc/bump, scale for the kite.
    pub size: f64,
    pub flat_patches: usize,
    pub obstacle_patches: usize,
    /// Grading order at bump corners.
    pub corner_p: u32,
    /// Custom obstacle curve (only for `custom`).
    #[serde(default)]
    pub curve: Option<TrigCurve>,
    /// Pieces per side covering the absorbing layer (part of `flat_patches`).
    #[serde(default = "one")]
    pub absorbing_patches: usize,
}

fn one() -> usize {
    1
}

fn flat_pieces(lo: f64, hi: f64, inner: f64, count: usize, outer: usize) -> Vec<(f64, f64)> {
    // outer pieces cover the absorbing layer exactly, the rest is split evenly
    let mut cuts = Vec::new();
    let outer = outer.max(1);
    if count > 2 * outer && lo < -inner && hi > inner {
        for i in 0..outer {
            cuts.push(lo + (-inner - lo) * i as f64 / outer as f64);
        }
        let m = count - 2 * outer;
        for i in 0..=m {
            cuts.push(-inner + 2.0 * inner * i as f64 / m as f64);
        }
        for i in 1..=outer {
            cuts.push(inner + (hi - inner) * i as f64 / outer as f64);
        }
    } else {
        for i in 0..=count.max(1) {
            cuts.push(lo + (hi - lo) * i as f64 / count.max(1) as f64);
        }
    }
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

fn line_screen(height: f64, half: f64, samples: usize) -> Vec<[f64; 2]> {
    (0..samples)
        .map(|i| [-half + 2.0 * half * i as f64 / (samples - 1) as f64, height])
        .collect()
}

/// Ground line plus a floating closed obstacle.
pub fn obstacle_scene(kind: SceneKind, curve: TrigCurve, params: &PlanarSceneParams, profile: PmlProfile<f64>) -> Result<Scene<2>> {
    if !profile.is_active() {
        return Err(Error::InvalidParameter("half-space scenes need an active PML".into()));
    }
    let (lo, hi) = curve.extent();
    if lo[1] <= 0.0 {
        return Err(Error::InvalidParameter("obstacle intersects the ground line".into()));
    }
    let (a1, a2) = (profile.a[0], profile.a[1]);
    let top = hi[1];
    let screen_h = top + 0.5;
    if lo[0] < -a1 || hi[0] > a1 || screen_h > a2 {
        return Err(Error::InvalidParameter("obstacle or test screen leaves the physical box".into()));
    }
    if params.flat_patches == 0 || params.obstacle_patches == 0 {
        return Err(Error::InvalidParameter("patch counts must be positive".into()));
    }
    let ext = a1 + profile.t[0];
    let mut patches: Vec<Arc<dyn Patch<2>>> = flat_pieces(-ext, ext, a1, params.flat_patches, params.absorbing_patches)
        .into_iter()
        .map(|(x0, x1)| Arc::new(Segment { a: [x0, 0.0], b: [x1, 0.0], kind: PatchKind::Flat }) as Arc<dyn Patch<2>>)
        .collect();
    let curve = Arc::new(curve);
    let m = params.obstacle_patches;
    // clockwise from the top
    for i in 0..m {
        let t0 = FRAC_PI_2 - 2.0 * PI * i as f64 / m as f64;
        let t1 = FRAC_PI_2 - 2.0 * PI * (i + 1) as f64 / m as f64;
        patches.push(Arc::new(CurveArc { curve: curve.clone(), t0, t1, kind: PatchKind::Obstacle }));
    }
    let centre = curve.center;
    Ok(Scene {
        kind,
        patches,
        profile,
        interior_point: centre,
        exterior_point: [centre[0], screen_h],
        test_points: line_screen(screen_h, 0.5 * a1, 101),
    })
}

/// Flat interface with a semicircular bump protruding into the upper layer.
pub fn bump_scene(params: &PlanarSceneParams, profile: PmlProfile<f64>) -> Result<Scene<2>> {
    let rb = params.size;
    let a1 = profile.a[0];
    if !(rb > 0.0) || rb >= a1 {
        return Err(Error::InvalidParameter("bump radius must lie in (0, a₁)".into()));
    }
    let screen_h = params.center[1] + rb + 0.5;
    if screen_h > profile.a[1] {
        return Err(Error::InvalidParameter("test screen leaves the physical box".into()));
    }
    let ext = a1 + profile.t[0];
    let side = params.flat_patches.max(2) / 2;
    let p = params.corner_p;
    let cx = params.center[0];
    let mut patches: Vec<Arc<dyn Patch<2>>> = Vec::new();
    let outer = params.absorbing_patches.max(1);
    let inner = side.saturating_sub(outer).max(1);
    let split = |x0: f64, x1: f64, m: usize| -> Vec<(f64, f64)> {
        (0..m).map(|i| (x0 + (x1 - x0) * i as f64 / m as f64, x0 + (x1 - x0) * (i + 1) as f64 / m as f64)).collect()
    };
    // left flat: absorbing pieces then the physical part up to the corner
    let mut left = split(-ext, -a1, outer);
    left.extend(split(-a1, cx - rb, inner));
    let nl = left.len();
    for (i, (x0, x1)) in left.into_iter().enumerate() {
        let seg = Segment { a: [x0, 0.0], b: [x1, 0.0], kind: PatchKind::Flat };
        if i + 1 == nl {
            patches.push(Arc::new(CornerGraded { inner: seg, ends: GradedEnds::End, p }));
        } else {
            patches.push(Arc::new(seg));
        }
    }
    let curve = Arc::new(TrigCurve::circle([cx, params.center[1]], rb));
    let m = params.obstacle_patches.max(1);
    for i in 0..m {
        let t0 = PI - PI * i as f64 / m as f64;
        let t1 = PI - PI * (i + 1) as f64 / m as f64;
        let arc = CurveArc { curve: curve.clone(), t0, t1, kind: PatchKind::Obstacle };
        let ends = match (i == 0, i + 1 == m) {
            (true, true) => Some(GradedEnds::Both),
            (true, false) => Some(GradedEnds::Start),
            (false, true) => Some(GradedEnds::End),
            _ => None,
        };
        match ends {
            Some(e) => patches.push(Arc::new(CornerGraded { inner: arc, ends: e, p })),
            None => patches.push(Arc::new(arc)),
        }
    }
    let mut right = split(cx + rb, a1, inner);
    right.extend(split(a1, ext, outer));
    for (i, (x0, x1)) in right.into_iter().enumerate() {
        let seg = Segment { a: [x0, 0.0], b: [x1, 0.0], kind: PatchKind::Flat };
        if i == 0 {
            patches.push(Arc::new(CornerGraded { inner: seg, ends: GradedEnds::Start, p }));
        } else {
            patches.push(Arc::new(seg));
        }
    }
    Ok(Scene {
        kind: SceneKind::Bump2layer,
        patches,
        profile,
        interior_point: [cx, params.center[1] - 0.5 * rb],
        exterior_point: [cx, screen_h],
        test_points: line_screen(screen_h, 0.5 * a1, 101),
    })
}

/// Geometry overrides for the 3D ball scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSceneParams {
    pub center: [f64; 3],
    pub radius: f64,
    /// Rectangles per side of the ground square.
    pub plane_grid: usize,
    pub screen_samples: usize,
    /// Pieces per side covering the absorbing layer (part of `plane_grid`).
    #[serde(default = "one")]
    pub absorbing_patches: usize,
}

impl Default for BallSceneParams {
    fn default() -> Self {
        Self { center: [0.0, 0.0, 2.0], radius: 1.0, plane_grid: 6, screen_samples: 21, absorbing_patches: 1 }
    }
}

pub fn ball_scene(params: &BallSceneParams, profile: PmlProfile<f64>) -> Result<Scene<3>> {
    let c = params.center;
    let r = params.radius;
    if c[2] - r <= 0.0 {
        return Err(Error::InvalidParameter("ball intersects the ground plane".into()));
    }
    let (a1, a2) = (profile.a[0], profile.a[1]);
    let screen_h = c[2] + r + 0.5;
    if (c[0].abs() + r) > a1 || (c[1].abs() + r) > a2 || screen_h > profile.a[2] {
        return Err(Error::InvalidParameter("ball or test screen leaves the physical box".into()));
    }
    let g = params.plane_grid.max(1);
    let e1 = a1 + profile.t[0];
    let e2 = a2 + profile.t[1];
    let cuts = |lo: f64, inner: f64| -> Vec<(f64, f64)> { flat_pieces(-lo, lo, inner, g, params.absorbing_patches) };
    let xs = cuts(e1, a1);
    let ys = cuts(e2, a2);
    let mut patches: Vec<Arc<dyn Patch<3>>> = Vec::new();
    for &(x0, x1) in &xs {
        for &(y0, y1) in &ys {
            patches.push(Arc::new(Rect {
                center: [0.5 * (x0 + x1), 0.5 * (y0 + y1)],
                half: [0.5 * (x1 - x0), 0.5 * (y1 - y0)],
            }));
        }
    }
    for face in 0..6 {
        patches.push(Arc::new(SphereFace::new(c, r, face)));
    }
    let n = params.screen_samples.max(2);
    let mut test_points = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let s = |k: usize, a: f64| -0.5 * a + a * k as f64 / (n - 1) as f64;
            test_points.push([s(i, a1), s(j, a2), screen_h]);
        }
    }
    Ok(Scene {
        kind: SceneKind::Ball3d,
        patches,
        profile,
        interior_point: c,
        exterior_point: [c[0], c[1], screen_h],
        test_points,
    })
}

/// A closed curve alone (no ground line); used with the absorbing layer off.
pub fn closed_curve_scene(curve: TrigCurve, patches: usize) -> Scene<2> {
    let curve = Arc::new(curve);
    let centre = curve.center;
    let list = (0..patches)
        .map(|i| {
            let t0 = FRAC_PI_2 - 2.0 * PI * i as f64 / patches as f64;
            let t1 = FRAC_PI_2 - 2.0 * PI * (i + 1) as f64 / patches as f64;
            Arc::new(CurveArc { curve: curve.clone(), t0, t1, kind: PatchKind::Obstacle }) as Arc<dyn Patch<2>>
        })
        .collect();
    Scene {
        kind: SceneKind::Custom,
        patches: list,
        profile: PmlProfile::off(2),
        interior_point: centre,
        exterior_point: [centre[0], centre[1] + 10.0],
        test_points: Vec::new(),
    }
}

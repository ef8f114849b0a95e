//! Nyström discretization of the layer operators on `Γᵇ`.
//!
//! Smooth (non-adjacent) interactions use the tensor Fejér rule on each
//! patch. When a target lies within `δ` of a patch, the patch integral is
//! recomputed on a graded mesh clustered at the closest parameter point and
//! folded back onto the Chebyshev nodes through the cardinal functions.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cheb::{ChebGrid, GradedMap};
use crate::error::{Error, Result};
use crate::geometry::{Frame, Patch, Scene};
use crate::kernels::{layer_kernels, layer_kernels_with, stretched_diff, KernelPoint, LayerKind};
use crate::pml::PmlProfile;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Quadrature parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadParams {
    /// Chebyshev points per patch direction.
    pub n: usize,
    /// Points per direction of the graded adjacent mesh.
    pub n_beta: usize,
    /// Order `p` of the graded map `ξ_α`.
    pub grading: u32,
    /// Adjacency distance.
    pub delta: f64,
}

impl Default for QuadParams {
    fn default() -> Self {
        Self { n: 32, n_beta: 200, grading: 8, delta: 0.1 }
    }
}

impl QuadParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: &str| Err(Error::Config { field: field.into(), message: message.into() });
        if self.n < 4 {
            return bad("n", "at least 4 points per patch direction");
        }
        if self.n_beta < 2 || self.n_beta % 2 != 0 {
            return bad("n_beta", "must be even and positive");
        }
        if self.grading < 2 {
            return bad("grading", "must be at least 2");
        }
        if !(self.delta > 0.0) {
            return bad("delta", "must be positive");
        }
        Ok(())
    }
}

impl LayerKind {
    pub fn index(self) -> usize {
        match self {
            LayerKind::S => 0,
            LayerKind::K => 1,
            LayerKind::Kt => 2,
        }
    }

    pub const ALL: [LayerKind; 3] = [LayerKind::S, LayerKind::K, LayerKind::Kt];
}

/// A patch within `δ` of a target, with the closest parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adjacent {
    pub patch: usize,
    pub uv: [f64; 2],
    pub dist: f64,
}

/// Chebyshev nodes of all patches with cached geometry and adjacency.
#[derive(Debug)]
pub struct Discretization<const D: usize> {
    pub patches: Vec<Arc<dyn Patch<D>>>,
    pub profile: PmlProfile<f64>,
    pub params: QuadParams,
    pub grid: ChebGrid<f64>,
    pub beta: ChebGrid<f64>,
    pub nodes: Vec<KernelPoint<D>>,
    pub frames: Vec<Frame<D>>,
    /// Fejér weight times area element.
    pub weights: Vec<f64>,
    pub uv: Vec<[f64; 2]>,
    /// Adjacent patches of every node, ordered by patch index.
    pub adjacency: Vec<Vec<Adjacent>>,
    bboxes: Vec<([f64; D], [f64; D])>,
}

impl<const D: usize> Discretization<D> {
    pub fn new(scene: &Scene<D>, params: QuadParams) -> Result<Self> {
        params.validate()?;
        let n = params.n;
        let grid = ChebGrid::new(n);
        let beta = ChebGrid::new(params.n_beta);
        let per = n.pow(D as u32 - 1);
        let total = per * scene.patches.len();
        let mut nodes = Vec::with_capacity(total);
        let mut frames = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut uv = Vec::with_capacity(total);
        for patch in &scene.patches {
            for local in 0..per {
                let (i, j) = if D == 2 { (local, 0) } else { (local / n, local % n) };
                let u = grid.nodes[i];
                let (v, wv) = if D == 2 { (0.0, 1.0) } else { (grid.nodes[j], grid.weights[j]) };
                let frame = patch.frame(u, v);
                nodes.push(KernelPoint::new(&scene.profile, &frame));
                weights.push(grid.weights[i] * wv * frame.jacobian);
                frames.push(frame);
                uv.push([u, v]);
            }
        }
        let bboxes = scene.patches.iter().map(|p| bounding_box(p.as_ref())).collect();
        let mut disc = Self {
            patches: scene.patches.clone(),
            profile: scene.profile.clone(),
            params,
            grid,
            beta,
            nodes,
            frames,
            weights,
            uv,
            adjacency: Vec::new(),
            bboxes,
        };
        let adjacency = (0..total)
            .into_par_iter()
            .map(|i| disc.find_adjacent(&disc.frames[i].point, Some((i / per, disc.uv[i]))))
            .collect();
        disc.adjacency = adjacency;
        Ok(disc)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes per patch, `N^{d−1}`.
    pub fn per_patch(&self) -> usize {
        self.params.n.pow(D as u32 - 1)
    }

    pub fn patch_of(&self, node: usize) -> usize {
        node / self.per_patch()
    }

    /// Patches within `δ` of `x`. `own` short-circuits the search for the
    /// patch that carries `x` as a node.
    pub fn find_adjacent(&self, x: &[f64; D], own: Option<(usize, [f64; 2])>) -> Vec<Adjacent> {
        let delta = self.params.delta;
        let mut out = Vec::new();
        for (q, patch) in self.patches.iter().enumerate() {
            if let Some((p, uv)) = own {
                if p == q {
                    out.push(Adjacent { patch: q, uv, dist: 0.0 });
                    continue;
                }
            }
            let (lo, hi) = &self.bboxes[q];
            let mut d2 = 0.0;
            for j in 0..D {
                let e = (lo[j] - x[j]).max(x[j] - hi[j]).max(0.0);
                d2 += e * e;
            }
            if d2.sqrt() > delta {
                continue;
            }
            let (uv, dist) = closest_point(patch.as_ref(), x);
            if dist <= delta {
                out.push(Adjacent { patch: q, uv, dist });
            }
        }
        out
    }

    /// Real points of all nodes.
    pub fn points(&self) -> Vec<[f64; D]> {
        self.frames.iter().map(|f| f.point).collect()
    }
}

fn bounding_box<const D: usize>(patch: &dyn Patch<D>) -> ([f64; D], [f64; D]) {
    let m = 33;
    let mut lo = [f64::INFINITY; D];
    let mut hi = [f64::NEG_INFINITY; D];
    let sv = if D == 2 { 1 } else { m };
    for a in 0..m {
        for b in 0..sv {
            let u = -1.0 + 2.0 * a as f64 / (m - 1) as f64;
            let v = if D == 2 { 0.0 } else { -1.0 + 2.0 * b as f64 / (m - 1) as f64 };
            let (p, _, _) = patch.map(u, v);
            for j in 0..D {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
    }
    let diam = (0..D).map(|j| (hi[j] - lo[j]).powi(2)).sum::<f64>().sqrt();
    let pad = 0.05 * diam + 1e-12;
    for j in 0..D {
        lo[j] -= pad;
        hi[j] += pad;
    }
    (lo, hi)
}

fn dist2<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Closest parameter point of a patch to `x` and the distance: coarse scan,
/// then projected Gauss–Newton with backtracking.
pub fn closest_point<const D: usize>(patch: &dyn Patch<D>, x: &[f64; D]) -> ([f64; 2], f64) {
    let m = if D == 2 { 41 } else { 13 };
    let sv = if D == 2 { 1 } else { m };
    let mut best = ([0.0, 0.0], f64::INFINITY);
    for a in 0..m {
        for b in 0..sv {
            let u = -1.0 + 2.0 * a as f64 / (m - 1) as f64;
            let v = if D == 2 { 0.0 } else { -1.0 + 2.0 * b as f64 / (m - 1) as f64 };
            let d = dist2(&patch.map(u, v).0, x);
            if d < best.1 {
                best = ([u, v], d);
            }
        }
    }
    let (mut uv, mut f) = best;
    let clamp = |t: f64| t.clamp(-1.0, 1.0);
    for _ in 0..60 {
        let (p, du, dv) = patch.map(uv[0], uv[1]);
        let r: Vec<f64> = (0..D).map(|j| p[j] - x[j]).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let step = if D == 2 {
            let h = dot(&du, &du);
            [-dot(&du, &r) / h, 0.0]
        } else {
            let (a, b, c) = (dot(&du, &du), dot(&du, &dv), dot(&dv, &dv));
            let (g0, g1) = (dot(&du, &r), dot(&dv, &r));
            let det = a * c - b * b;
            [-(c * g0 - b * g1) / det, -(a * g1 - b * g0) / det]
        };
        if !step[0].is_finite() || !step[1].is_finite() {
            break;
        }
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-8 {
            let cand = [clamp(uv[0] + t * step[0]), clamp(uv[1] + t * step[1])];
            let fc = dist2(&patch.map(cand[0], cand[1]).0, x);
            if fc <= f {
                moved = (cand[0] - uv[0]).abs() + (cand[1] - uv[1]).abs() > 1e-15;
                uv = cand;
                f = fc;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (uv, f.sqrt())
}

/// Graded nodes that round onto the singular parameter carry weights below
/// roundoff; they are dropped.
fn at_center(xi: f64, alpha: f64) -> bool {
    (xi - alpha).abs() <= 8.0 * f64::EPSILON * alpha.abs().max(1.0)
}

/// Rectangular-polar weights `A_n` for one target and one adjacent patch.
///
/// The graded sum interpolates `Jφ` rather than `φ`, so nodal noise where a
/// corner map flattens `J` is damped instead of spread over the patch.
/// `kernel` writes `slots` kernel values for a source point; the result holds,
/// per slot, one weight per Chebyshev node of the patch.
pub fn adjacent_weights<const D: usize, F>(
    disc: &Discretization<D>,
    adj: &Adjacent,
    slots: usize,
    mut kernel: F,
) -> Result<Vec<Vec<Complex64>>>
where
    F: FnMut(&KernelPoint<D>, Option<[f64; D]>, &mut [Complex64]) -> Result<()>,
{
    // On the patch itself `y − x` is formed from parameter offsets.
    let on_patch = adj.dist == 0.0;
    let per = disc.per_patch();
    let node_jac: Vec<f64> = disc.nodes[adj.patch * per..(adj.patch + 1) * per].iter().map(|p| p.jacobian).collect();
    let n = disc.grid.n;
    let nb = disc.beta.n;
    let patch = &disc.patches[adj.patch];
    let graded = |alpha: f64| -> (Vec<(f64, f64, f64)>, Vec<f64>) {
        let map = GradedMap::new(alpha, disc.params.grading);
        let xs: Vec<(f64, f64, f64)> = disc
            .beta
            .nodes
            .iter()
            .map(|&t| {
                let (xi, d) = map.eval(t);
                (xi, d, map.offset(t).0)
            })
            .collect();
        let mut card = vec![0.0; nb * n];
        for (l, (xi, _, _)) in xs.iter().enumerate() {
            disc.grid.cardinal_into(*xi, &mut card[l * n..(l + 1) * n]);
        }
        (xs, card)
    };
    let (xu, mu) = graded(adj.uv[0]);
    let mut kv = vec![ZERO; slots];
    if D == 2 {
        let mut acc = vec![vec![ZERO; n]; slots];
        for l in 0..nb {
            let (xi, dxi, off) = xu[l];
            let c = dxi * disc.beta.weights[l];
            if c == 0.0 || at_center(xi, adj.uv[0]) {
                continue;
            }
            let frame = patch.frame(xi, 0.0);
            let y = KernelPoint::new(&disc.profile, &frame);
            let disp = on_patch.then(|| patch.displacement(adj.uv[0], 0.0, off, 0.0));
            kernel(&y, disp, &mut kv)?;
            let row = &mu[l * n..(l + 1) * n];
            for (s, a) in acc.iter_mut().enumerate() {
                let f = kv[s] * c;
                for (am, &r) in a.iter_mut().zip(row) {
                    *am += f * r;
                }
            }
        }
        for a in acc.iter_mut() {
            for (m, v) in a.iter_mut().enumerate() {
                *v *= node_jac[m];
            }
        }
        return Ok(acc);
    }
    let (xv, mv) = graded(adj.uv[1]);
    let mut cvals = vec![vec![ZERO; nb * nb]; slots];
    for l1 in 0..nb {
        let (u, du, off_u) = xu[l1];
        let c1 = du * disc.beta.weights[l1];
        if c1 == 0.0 || at_center(u, adj.uv[0]) {
            continue;
        }
        for l2 in 0..nb {
            let (v, dv, off_v) = xv[l2];
            let c = c1 * dv * disc.beta.weights[l2];
            if c == 0.0 || at_center(v, adj.uv[1]) {
                continue;
            }
            let frame = patch.frame(u, v);
            let y = KernelPoint::new(&disc.profile, &frame);
            let disp = on_patch.then(|| patch.displacement(adj.uv[0], adj.uv[1], off_u, off_v));
            kernel(&y, disp, &mut kv)?;
            for s in 0..slots {
                cvals[s][l1 * nb + l2] = kv[s] * c;
            }
        }
    }
    let mut out = Vec::with_capacity(slots);
    let mut t = vec![ZERO; nb * n];
    for cs in &cvals {
        // T = C·Mv, then A = Muᵀ·T
        t.iter_mut().for_each(|x| *x = ZERO);
        for l1 in 0..nb {
            let trow = &mut t[l1 * n..(l1 + 1) * n];
            for l2 in 0..nb {
                let c = cs[l1 * nb + l2];
                if c == ZERO {
                    continue;
                }
                for (tm, &m) in trow.iter_mut().zip(&mv[l2 * n..(l2 + 1) * n]) {
                    *tm += c * m;
                }
            }
        }
        let mut a = vec![ZERO; n * n];
        for l1 in 0..nb {
            let trow = &t[l1 * n..(l1 + 1) * n];
            for i in 0..n {
                let w = mu[l1 * n + i];
                if w == 0.0 {
                    continue;
                }
                for (am, &tm) in a[i * n..(i + 1) * n].iter_mut().zip(trow) {
                    *am += tm * w;
                }
            }
        }
        for (v, j) in a.iter_mut().zip(&node_jac) {
            *v *= j;
        }
        out.push(a);
    }
    Ok(out)
}

/// Precomputed adjacent interaction entries for one target and one patch.
#[derive(Debug, Clone)]
pub struct Block {
    pub patch: usize,
    /// Entries per operator kind (empty when not requested).
    pub entries: [Vec<Complex64>; 3],
}

/// Adjacent blocks of one target for several wavenumbers at once.
pub fn target_blocks<const D: usize>(
    disc: &Discretization<D>,
    x: &KernelPoint<D>,
    adjacent: &[Adjacent],
    ks: &[f64],
    kinds: [bool; 3],
) -> Result<Vec<Vec<Block>>> {
    let chosen: Vec<usize> = (0..3).filter(|&i| kinds[i]).collect();
    let slots = ks.len() * chosen.len();
    let mut per_k: Vec<Vec<Block>> = vec![Vec::with_capacity(adjacent.len()); ks.len()];
    for adj in adjacent {
        let w = adjacent_weights(disc, adj, slots, |y, disp, out| {
            let diff = stretched_diff(x, y, disp);
            if diff.iter().all(|d| *d == ZERO) {
                // a flattened corner map rounded the source onto the target; its weight is negligible
                out.iter_mut().for_each(|v| *v = ZERO);
                return Ok(());
            }
            for (ki, &k) in ks.iter().enumerate() {
                let v = layer_kernels_with(x, y, &diff, k)?;
                for (ci, &kind) in chosen.iter().enumerate() {
                    out[ki * chosen.len() + ci] = v[kind];
                }
            }
            Ok(())
        })?;
        let mut w = w.into_iter();
        for blocks in per_k.iter_mut() {
            let mut entries: [Vec<Complex64>; 3] = Default::default();
            for &kind in &chosen {
                entries[kind] = w.next().expect("slot");
            }
            blocks.push(Block { patch: adj.patch, entries });
        }
    }
    Ok(per_k)
}

/// `Σ_y kernel(x, y) φ(y)` for several (kind, density) jobs at one target.
pub fn row_apply<const D: usize>(
    disc: &Discretization<D>,
    x: &KernelPoint<D>,
    blocks: &[Block],
    k: f64,
    jobs: &[(LayerKind, &[Complex64])],
    out: &mut [Complex64],
) -> Result<()> {
    out.iter_mut().for_each(|o| *o = ZERO);
    let per = disc.per_patch();
    for q in 0..disc.patches.len() {
        let base = q * per;
        if let Some(b) = blocks.iter().find(|b| b.patch == q) {
            for (o, (kind, dens)) in out.iter_mut().zip(jobs) {
                let e = &b.entries[kind.index()];
                *o += e.iter().zip(&dens[base..base + per]).map(|(a, d)| a * d).sum::<Complex64>();
            }
        } else {
            for j in base..base + per {
                let v = layer_kernels(x, &disc.nodes[j], k)?;
                let w = disc.weights[j];
                for (o, (kind, dens)) in out.iter_mut().zip(jobs) {
                    *o += v[kind.index()] * (w * dens[j]);
                }
            }
        }
    }
    Ok(())
}

/// How non-adjacent interactions are held.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Storage {
    /// Dense in 2D, matrix-free in 3D.
    #[default]
    Auto,
    Dense,
    MatrixFree,
}

/// Discrete `S̃`, `K̃`, `K̃′` at one wavenumber.
#[derive(Debug)]
pub struct LayerOps<const D: usize> {
    pub disc: Arc<Discretization<D>>,
    pub k: f64,
    kinds: [bool; 3],
    blocks: Vec<Vec<Block>>,
    dense: Option<[Vec<Complex64>; 3]>,
    pub precompute_seconds: f64,
}

impl<const D: usize> LayerOps<D> {
    /// Builds operators for each wavenumber in `ks`, sharing the graded-mesh geometry.
    pub fn build(disc: &Arc<Discretization<D>>, ks: &[f64], kinds: [bool; 3], storage: Storage) -> Result<Vec<Self>> {
        let start = Instant::now();
        let n = disc.len();
        let all: Vec<Vec<Vec<Block>>> = (0..n)
            .into_par_iter()
            .map(|i| target_blocks(disc, &disc.nodes[i], &disc.adjacency[i], ks, kinds))
            .collect::<Result<_>>()?;
        let mut per_k: Vec<Vec<Vec<Block>>> = (0..ks.len()).map(|_| Vec::with_capacity(n)).collect();
        for target in all {
            for (ki, b) in target.into_iter().enumerate() {
                per_k[ki].push(b);
            }
        }
        let dense = match storage {
            Storage::Dense => true,
            Storage::MatrixFree => false,
            Storage::Auto => D == 2,
        };
        let mut ops = Vec::with_capacity(ks.len());
        for (ki, blocks) in per_k.into_iter().enumerate() {
            let mut op = Self { disc: disc.clone(), k: ks[ki], kinds, blocks, dense: None, precompute_seconds: 0.0 };
            if dense {
                op.dense = Some(op.assemble()?);
            }
            ops.push(op);
        }
        let secs = start.elapsed().as_secs_f64();
        for op in &mut ops {
            op.precompute_seconds = secs;
        }
        Ok(ops)
    }

    fn assemble(&self) -> Result<[Vec<Complex64>; 3]> {
        let disc = &self.disc;
        let n = disc.len();
        let per = disc.per_patch();
        let rows: Vec<[Vec<Complex64>; 3]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let x = &disc.nodes[i];
                let mut row: [Vec<Complex64>; 3] = Default::default();
                for kind in 0..3 {
                    if self.kinds[kind] {
                        row[kind] = vec![ZERO; n];
                    }
                }
                for q in 0..disc.patches.len() {
                    let base = q * per;
                    if let Some(b) = self.blocks[i].iter().find(|b| b.patch == q) {
                        for kind in 0..3 {
                            if self.kinds[kind] {
                                row[kind][base..base + per].copy_from_slice(&b.entries[kind]);
                            }
                        }
                    } else {
                        for j in base..base + per {
                            let v = layer_kernels(x, &disc.nodes[j], self.k)?;
                            for kind in 0..3 {
                                if self.kinds[kind] {
                                    row[kind][j] = v[kind] * disc.weights[j];
                                }
                            }
                        }
                    }
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        let mut mats: [Vec<Complex64>; 3] = Default::default();
        for kind in 0..3 {
            if self.kinds[kind] {
                mats[kind] = Vec::with_capacity(n * n);
            }
        }
        for row in rows {
            for kind in 0..3 {
                if self.kinds[kind] {
                    mats[kind].extend_from_slice(&row[kind]);
                }
            }
        }
        Ok(mats)
    }

    pub fn has(&self, kind: LayerKind) -> bool {
        self.kinds[kind.index()]
    }

    pub fn is_dense(&self) -> bool {
        self.dense.is_some()
    }

    /// Dense matrix of one kind, row-major (dense storage only).
    pub fn matrix(&self, kind: LayerKind) -> Option<&[Complex64]> {
        self.dense.as_ref().map(|m| m[kind.index()].as_slice()).filter(|m| !m.is_empty())
    }

    pub fn apply(&self, kind: LayerKind, density: &[Complex64]) -> Result<Vec<Complex64>> {
        Ok(self.apply_many(&[(kind, density)])?.pop().expect("one job"))
    }

    /// Applies several operators in one sweep over the source nodes.
    pub fn apply_many(&self, jobs: &[(LayerKind, &[Complex64])]) -> Result<Vec<Vec<Complex64>>> {
        let n = self.disc.len();
        for (kind, dens) in jobs {
            if !self.has(*kind) {
                return Err(Error::InvalidParameter(format!("operator {kind:?} was not precomputed")));
            }
            if dens.len() != n {
                return Err(Error::InvalidParameter(format!("density has {} values, expected {n}", dens.len())));
            }
        }
        if let Some(mats) = &self.dense {
            return Ok(jobs
                .iter()
                .map(|(kind, dens)| {
                    let m = &mats[kind.index()];
                    (0..n)
                        .into_par_iter()
                        .map(|i| m[i * n..(i + 1) * n].iter().zip(*dens).map(|(a, d)| a * d).sum())
                        .collect()
                })
                .collect());
        }
        let rows: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut out = vec![ZERO; jobs.len()];
                row_apply(&self.disc, &self.disc.nodes[i], &self.blocks[i], self.k, jobs, &mut out)?;
                Ok(out)
            })
            .collect::<Result<_>>()?;
        Ok((0..jobs.len()).map(|j| rows.iter().map(|r| r[j]).collect()).collect())
    }

    /// Regularized hyper-singular operator `Ñφ`. `tangent` supplies the
    /// tangential data of `φ` (`dφ/ds` in 2D, `ν×∇φ` in 3D); when absent it is
    /// obtained by spectral differentiation.
    pub fn apply_hyper(&self, phi: &[Complex64], tangent: Option<&[Vec<Complex64>]>) -> Result<Vec<Complex64>> {
        let disc = &self.disc;
        let owned;
        let tangent = match tangent {
            Some(t) => t,
            None => {
                owned = tangential(disc, phi);
                &owned
            }
        };
        let k2 = self.k * self.k;
        let weighted = |i: usize| -> Vec<Complex64> { disc.nodes.iter().zip(phi).map(|(x, p)| x.conormal[i] * p).collect() };
        let zero_dens: Vec<Vec<Complex64>> = (0..D).map(weighted).collect();
        if D == 2 {
            let mut jobs: Vec<(LayerKind, &[Complex64])> = vec![(LayerKind::S, &tangent[0])];
            jobs.extend(zero_dens.iter().map(|d| (LayerKind::S, d.as_slice())));
            let r = self.apply_many(&jobs)?;
            let dv = arclength_derivative(disc, &r[0]);
            Ok((0..disc.len())
                .map(|i| {
                    let x = &disc.nodes[i];
                    dv[i] + k2 * (x.conormal[0] * r[1][i] + x.conormal[1] * r[2][i])
                })
                .collect())
        } else {
            let weak: Vec<Vec<Complex64>> = (0..3)
                .map(|c| disc.nodes.iter().zip(&tangent[c]).map(|(y, t)| y.stretched.alpha[c] * t).collect())
                .collect();
            let mut jobs: Vec<(LayerKind, &[Complex64])> = weak.iter().map(|d| (LayerKind::S, d.as_slice())).collect();
            jobs.extend(zero_dens.iter().map(|d| (LayerKind::S, d.as_slice())));
            let r = self.apply_many(&jobs)?;
            let mut out: Vec<Complex64> = (0..disc.len())
                .map(|i| {
                    let x = &disc.nodes[i];
                    (0..3).map(|c| x.conormal[c] * r[3 + c][i]).sum::<Complex64>() * k2
                })
                .collect();
            for c in 0..3 {
                let curl = surface_curl(disc, &r[c]);
                for (i, o) in out.iter_mut().enumerate() {
                    *o += disc.nodes[i].stretched.alpha[c] * curl[c][i];
                }
            }
            Ok(out)
        }
    }
}

/// Derivatives of nodal data with respect to the patch parameters `(u, v)`.
pub fn param_derivatives<const D: usize>(disc: &Discretization<D>, phi: &[Complex64]) -> [Vec<Complex64>; 2] {
    let n = disc.grid.n;
    let per = disc.per_patch();
    let mut du = vec![ZERO; phi.len()];
    let mut dv = if D == 2 { Vec::new() } else { vec![ZERO; phi.len()] };
    for q in 0..disc.patches.len() {
        let r = q * per..(q + 1) * per;
        let vals = &phi[r.clone()];
        if D == 2 {
            disc.grid.differentiate_strided(vals, 0, 1, &mut du[r]);
        } else {
            let (ou, ov) = (&mut du[r.clone()], &mut dv[r]);
            for j in 0..n {
                disc.grid.differentiate_strided(vals, j, n, ou);
            }
            for i in 0..n {
                disc.grid.differentiate_strided(vals, i * n, 1, ov);
            }
        }
    }
    [du, dv]
}

/// `dφ/ds` along each curve patch (2D).
pub fn arclength_derivative<const D: usize>(disc: &Discretization<D>, phi: &[Complex64]) -> Vec<Complex64> {
    let [du, _] = param_derivatives(disc, phi);
    du.iter().zip(&disc.frames).map(|(d, f)| d / f.jacobian).collect()
}

/// Surface gradient `∇^S φ = φ_u a^u + φ_v a^v` with the dual tangent basis (3D).
pub fn surface_gradient<const D: usize>(disc: &Discretization<D>, phi: &[Complex64]) -> [Vec<Complex64>; 3] {
    let [du, dv] = param_derivatives(disc, phi);
    let mut g: [Vec<Complex64>; 3] = Default::default();
    for c in g.iter_mut() {
        *c = vec![ZERO; phi.len()];
    }
    for (i, f) in disc.frames.iter().enumerate() {
        let (ru, rv): (&[f64], &[f64]) = (&f.du, &f.dv);
        let e = ru.iter().map(|x| x * x).sum::<f64>();
        let ff = ru.iter().zip(rv).map(|(a, b)| a * b).sum::<f64>();
        let gg = rv.iter().map(|x| x * x).sum::<f64>();
        let det = e * gg - ff * ff;
        for c in 0..3 {
            let au = (gg * ru[c] - ff * rv[c]) / det;
            let av = (e * rv[c] - ff * ru[c]) / det;
            g[c][i] = du[i] * au + dv[i] * av;
        }
    }
    g
}

/// `ν × ∇^S φ` (3D).
pub fn surface_curl<const D: usize>(disc: &Discretization<D>, phi: &[Complex64]) -> [Vec<Complex64>; 3] {
    let g = surface_gradient(disc, phi);
    let mut out: [Vec<Complex64>; 3] = Default::default();
    for c in out.iter_mut() {
        *c = vec![ZERO; phi.len()];
    }
    for (i, f) in disc.frames.iter().enumerate() {
        let n: &[f64] = &f.normal;
        out[0][i] = g[2][i] * n[1] - g[1][i] * n[2];
        out[1][i] = g[0][i] * n[2] - g[2][i] * n[0];
        out[2][i] = g[1][i] * n[0] - g[0][i] * n[1];
    }
    out
}

/// Tangential data consumed by the weak part of `Ñ`: `[dφ/ds]` in 2D,
/// the components of `ν×∇^S φ` in 3D.
pub fn tangential<const D: usize>(disc: &Discretization<D>, phi: &[Complex64]) -> Vec<Vec<Complex64>> {
    if D == 2 {
        vec![arclength_derivative(disc, phi)]
    } else {
        surface_curl(disc, phi).into_iter().collect()
    }
}

/// Tangential data of `x ↦ F(x̃)` from the gradient of `F` in stretched
/// coordinates, given at every node.
pub fn tangential_from_gradient<const D: usize>(disc: &Discretization<D>, grads: &[[Complex64; D]]) -> Vec<Vec<Complex64>> {
    // real-coordinate gradient: ∂_{x_j} F(x̃) = α_j ∂_{x̃_j} F
    let real_grad = |i: usize| -> Vec<Complex64> {
        let a = &disc.nodes[i].stretched.alpha;
        (0..D).map(|j| a[j] * grads[i][j]).collect()
    };
    if D == 2 {
        vec![(0..disc.len())
            .map(|i| {
                let g = real_grad(i);
                let f = &disc.frames[i];
                (g[0] * f.du[0] + g[1] * f.du[1]) / f.jacobian
            })
            .collect()]
    } else {
        let mut out = vec![vec![ZERO; disc.len()]; 3];
        for i in 0..disc.len() {
            let g = real_grad(i);
            let n: &[f64] = &disc.frames[i].normal;
            out[0][i] = g[2] * n[1] - g[1] * n[2];
            out[1][i] = g[0] * n[2] - g[2] * n[0];
            out[2][i] = g[1] * n[0] - g[0] * n[1];
        }
        out
    }
}

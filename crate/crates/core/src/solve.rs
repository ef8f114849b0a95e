//! Boundary data, GMRES, the three boundary integral systems, field
//! evaluation by the representation formula and the error metric.

use std::sync::Arc;
use std::time::Instant;

use log::{debug, warn};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryCondition, Scene};
use crate::kernels::{
    incident_field, point_source, reference_field, twolayer_reference, FieldValue, Incidence, KernelPoint, Layer,
    LayerKind,
};
use crate::operators::{row_apply, tangential_from_gradient, target_blocks, Discretization, LayerOps, QuadParams, Storage};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// What drives the scattering problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Excitation {
    PlaneWave {
        theta: f64,
        #[serde(default)]
        phi: f64,
    },
    PointSource { z: Vec<f64> },
    /// Outgoing scattered field `G(·, z)` with `z` behind the boundary; the
    /// scene's interior point when `z` is omitted.
    Manufactured {
        #[serde(default)]
        z: Option<Vec<f64>>,
    },
}

impl Excitation {
    pub fn incidence(&self) -> Option<Incidence> {
        match self {
            Excitation::PlaneWave { theta, phi } => Some(Incidence::PlaneWave { theta: *theta, phi: *phi }),
            Excitation::PointSource { z } => Some(Incidence::PointSource { z: z.clone() }),
            Excitation::Manufactured { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmresParams {
    /// Relative residual tolerance `ε_r`.
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for GmresParams {
    fn default() -> Self {
        Self { tol: 1e-12, restart: 200, max_iter: 1000 }
    }
}

impl GmresParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Config { field: "gmres.tol".into(), message: "must lie in (0, 1)".into() });
        }
        if self.restart == 0 || self.max_iter == 0 {
            return Err(Error::Config { field: "gmres".into(), message: "restart and max_iter must be positive".into() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GmresResult {
    pub x: Vec<Complex64>,
    pub iterations: usize,
    /// Final relative residual.
    pub residual: f64,
    pub converged: bool,
    /// Relative residual after every iteration.
    pub history: Vec<f64>,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Restarted GMRES with modified Gram–Schmidt and Givens rotations, zero
/// initial guess.
pub fn gmres<F>(mut apply: F, b: &[Complex64], params: &GmresParams) -> Result<GmresResult>
where
    F: FnMut(&[Complex64]) -> Result<Vec<Complex64>>,
{
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![ZERO; n];
    let mut history = Vec::new();
    if bnorm == 0.0 {
        return Ok(GmresResult { x, iterations: 0, residual: 0.0, converged: true, history });
    }
    let m = params.restart.min(n.max(1));
    let mut iterations = 0;
    let mut residual;
    loop {
        let ax = if iterations == 0 { vec![ZERO; n] } else { apply(&x)? };
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        residual = beta / bnorm;
        if residual <= params.tol || iterations >= params.max_iter {
            break;
        }
        let mut v: Vec<Vec<Complex64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut h = vec![vec![ZERO; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![ZERO; m];
        let mut g = vec![ZERO; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut used = 0;
        for j in 0..m {
            let mut w = apply(&v[j])?;
            iterations += 1;
            for i in 0..=j {
                let hij: Complex64 = v[i].iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                h[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(&v[i]) {
                    *wk -= hij * vk;
                }
            }
            let hn = norm(&w);
            h[j + 1][j] = Complex64::new(hn, 0.0);
            for i in 0..j {
                let (a, bb) = (h[i][j], h[i + 1][j]);
                h[i][j] = cs[i] * a + sn[i] * bb;
                h[i + 1][j] = -sn[i].conj() * a + cs[i] * bb;
            }
            let (a, bb) = (h[j][j], h[j + 1][j]);
            let t = a.norm().hypot(bb.norm());
            if a.norm() == 0.0 {
                cs[j] = 0.0;
                sn[j] = bb.conj() / bb.norm();
            } else {
                cs[j] = a.norm() / t;
                sn[j] = a / a.norm() * bb.conj() / t;
            }
            h[j][j] = cs[j] * a + sn[j] * bb;
            h[j + 1][j] = ZERO;
            let gj = g[j];
            g[j] = cs[j] * gj;
            g[j + 1] = -sn[j].conj() * gj;
            used = j + 1;
            residual = g[j + 1].norm() / bnorm;
            history.push(residual);
            debug!("gmres iteration {iterations}: residual {residual:e}");
            if residual <= params.tol || iterations >= params.max_iter || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|z| z / hn).collect());
        }
        let mut y = vec![ZERO; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for l in i + 1..used {
                s -= h[i][l] * y[l];
            }
            y[i] = s / h[i][i];
        }
        for (l, yl) in y.iter().enumerate() {
            for (xk, vk) in x.iter_mut().zip(&v[l]) {
                *xk += yl * vk;
            }
        }
        if residual <= params.tol || iterations >= params.max_iter {
            break;
        }
    }
    Ok(GmresResult { x, iterations, residual, converged: residual <= params.tol, history })
}

/// A fully specified boundary value problem.
#[derive(Debug, Clone)]
pub struct Problem<const D: usize> {
    pub scene: Scene<D>,
    pub bc: BoundaryCondition,
    /// Wavenumber (of the upper layer for transmission).
    pub k: f64,
    /// Lower-layer wavenumber (transmission only).
    pub k2: Option<f64>,
    pub excitation: Excitation,
    pub quad: QuadParams,
    pub gmres: GmresParams,
    pub storage: Storage,
}

impl<const D: usize> Problem<D> {
    pub fn validate(&self) -> Result<()> {
        self.quad.validate()?;
        self.gmres.validate()?;
        if !(self.k > 0.0) {
            return Err(Error::Config { field: "k".into(), message: "must be positive".into() });
        }
        match (self.bc, self.k2) {
            (BoundaryCondition::Transmission, None) => {
                Err(Error::Config { field: "k2".into(), message: "transmission needs a second wavenumber".into() })
            }
            (BoundaryCondition::Transmission, Some(k2)) if !(k2 > 0.0) => {
                Err(Error::Config { field: "k2".into(), message: "must be positive".into() })
            }
            (BoundaryCondition::Transmission, _) if D != 2 => {
                Err(Error::Config { field: "bc".into(), message: "transmission is implemented in 2D".into() })
            }
            _ => Ok(()),
        }
    }

    fn source_point(&self, z: &Option<Vec<f64>>) -> Result<[f64; D]> {
        match z {
            None => Ok(self.scene.interior_point),
            Some(v) if v.len() == D => {
                let mut p = [0.0; D];
                p.copy_from_slice(v);
                Ok(p)
            }
            Some(_) => Err(Error::Config { field: "excitation.z".into(), message: format!("needs {D} coordinates") }),
        }
    }
}

/// Traces `f̃` and `∂̃_ν f̃`-type data with the stretched-coordinate gradients.
#[derive(Debug, Clone)]
pub struct BoundaryData<const D: usize> {
    /// `f̃` (Dirichlet data or transmission jump in `u`).
    pub f: Vec<Complex64>,
    /// `g̃` (Neumann data or transmission jump in `∂̃_ν u`).
    pub g: Vec<Complex64>,
    /// Gradient of the field defining `f̃`, for analytic tangential derivatives.
    pub grad_f: Vec<[Complex64; D]>,
}

fn add<const D: usize>(a: FieldValue<D>, b: FieldValue<D>, sb: f64) -> FieldValue<D> {
    let mut g = a.1;
    for j in 0..D {
        g[j] += b.1[j] * sb;
    }
    (a.0 + b.0 * sb, g)
}

fn scale<const D: usize>(a: FieldValue<D>, s: f64) -> FieldValue<D> {
    let mut g = a.1;
    g.iter_mut().for_each(|v| *v *= s);
    (a.0 * s, g)
}

/// `f̃ = −u^inc(x̃) − u_ref(x̃)` and `g̃ = −∂̃_ν(u^inc + u_ref)` at the nodes;
/// for manufactured runs `f̃ = G̃(·, z)`. Transmission data are the jumps
/// `u₁ − u₂` of the incident-plus-reference fields.
pub fn boundary_data<const D: usize>(problem: &Problem<D>, disc: &Discretization<D>) -> Result<BoundaryData<D>> {
    let k = problem.k;
    let field = |x: &KernelPoint<D>| -> Result<FieldValue<D>> {
        let xs = x.xs();
        match (&problem.excitation, problem.bc) {
            (Excitation::Manufactured { z }, BoundaryCondition::Transmission) => {
                let k2 = problem.k2.expect("validated");
                let below = problem.source_point(z)?;
                let above = problem.scene.exterior_point;
                Ok(add(point_source(&below, k, xs)?, point_source(&above, k2, xs)?, -1.0))
            }
            (Excitation::Manufactured { z }, _) => point_source(&problem.source_point(z)?, k, xs),
            (exc, BoundaryCondition::Transmission) => {
                let inc = exc.incidence().expect("incident excitation");
                let k2 = problem.k2.expect("validated");
                let upper = add(incident_field(&inc, k, xs)?, twolayer_reference(&inc, k, k2, Layer::Upper, xs)?, 1.0);
                let lower = twolayer_reference(&inc, k, k2, Layer::Lower, xs)?;
                Ok(add(lower, upper, -1.0))
            }
            (exc, bc) => {
                let inc = exc.incidence().expect("incident excitation");
                let total = add(incident_field(&inc, k, xs)?, reference_field(&inc, bc, k, xs)?, 1.0);
                Ok(scale(total, -1.0))
            }
        }
    };
    let values: Vec<FieldValue<D>> = disc.nodes.par_iter().map(field).collect::<Result<_>>()?;
    let f = values.iter().map(|v| v.0).collect();
    let g = disc.nodes.iter().zip(&values).map(|(x, v)| x.conormal_derivative(&v.1)).collect();
    let grad_f = values.iter().map(|v| v.1).collect();
    Ok(BoundaryData { f, g, grad_f })
}

/// Iteration count, residual and timing of a solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveStats {
    pub n_dof: usize,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub precompute_seconds: f64,
    /// Mean wall time per GMRES iteration.
    pub iteration_seconds: f64,
}

/// Densities on `Γᵇ` and what is needed to evaluate fields from them.
#[derive(Debug)]
pub struct Solution<const D: usize> {
    pub problem: Problem<D>,
    pub disc: Arc<Discretization<D>>,
    /// `ũ` on `Γᵇ` (`ũ₂` for transmission).
    pub trace: Vec<Complex64>,
    /// `∂̃_ν ũ` on `Γᵇ` (`∂̃_ν ũ₂` for transmission).
    pub normal_trace: Vec<Complex64>,
    pub data: BoundaryData<D>,
    pub stats: SolveStats,
}

fn warn_boundary_values<const D: usize>(disc: &Discretization<D>, f: &[Complex64]) {
    let p = &disc.profile;
    if !p.is_active() {
        return;
    }
    let max = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let edge = disc
        .frames
        .iter()
        .zip(f)
        .filter(|(fr, _)| (0..D).any(|j| fr.point[j].abs() > p.a[j] + 0.95 * p.t[j]))
        .map(|(_, z)| z.norm())
        .fold(0.0, f64::max);
    if edge > 1e-6 * max {
        warn!("data do not vanish at the end of the truncated boundary: {edge:e} vs max {max:e}");
    }
}

fn finish_stats<const D: usize>(disc: &Discretization<D>, res: &GmresResult, pre: f64, iter_secs: f64) -> SolveStats {
    if !res.converged {
        warn!("GMRES stopped after {} iterations at residual {:e}", res.iterations, res.residual);
    }
    SolveStats {
        n_dof: disc.len(),
        iterations: res.iterations,
        residual: res.residual,
        converged: res.converged,
        precompute_seconds: pre,
        iteration_seconds: if res.iterations > 0 { iter_secs / res.iterations as f64 } else { 0.0 },
    }
}

pub fn discretize<const D: usize>(problem: &Problem<D>) -> Result<Arc<Discretization<D>>> {
    Ok(Arc::new(Discretization::new(&problem.scene, problem.quad)?))
}

/// `(½I + K̃)ũ = S̃g̃`.
pub fn solve_neumann<const D: usize>(problem: &Problem<D>) -> Result<Solution<D>> {
    problem.validate()?;
    let start = Instant::now();
    let disc = discretize(problem)?;
    let data = boundary_data(problem, &disc)?;
    let ops = LayerOps::build(&disc, &[problem.k], [true, true, false], problem.storage)?.remove(0);
    let rhs = ops.apply(LayerKind::S, &data.g)?;
    let pre = start.elapsed().as_secs_f64();
    let t = Instant::now();
    let res = gmres(
        |u| {
            let ku = ops.apply(LayerKind::K, u)?;
            Ok(u.iter().zip(ku).map(|(a, b)| 0.5 * a + b).collect())
        },
        &rhs,
        &problem.gmres,
    )?;
    let stats = finish_stats(&disc, &res, pre, t.elapsed().as_secs_f64());
    let normal_trace = data.g.clone();
    Ok(Solution { problem: problem.clone(), disc, trace: res.x, normal_trace, data, stats })
}

fn jacobians<const D: usize>(disc: &Discretization<D>) -> Vec<f64> {
    disc.nodes.iter().map(|p| p.jacobian).collect()
}

/// `(−½I + K̃′)∂̃_ν ũ = Ñf̃`, solved for `J∂̃_ν ũ` with rows scaled by `J` so the
/// `1/J` of the outer tangential derivative never meets a vanishing corner jacobian.
pub fn solve_dirichlet<const D: usize>(problem: &Problem<D>) -> Result<Solution<D>> {
    problem.validate()?;
    let start = Instant::now();
    let disc = discretize(problem)?;
    let data = boundary_data(problem, &disc)?;
    warn_boundary_values(&disc, &data.f);
    let ops = LayerOps::build(&disc, &[problem.k], [true, false, true], problem.storage)?.remove(0);
    let tangent = tangential_from_gradient(&disc, &data.grad_f);
    let jac = jacobians(&disc);
    let rhs: Vec<Complex64> = ops.apply_hyper(&data.f, Some(&tangent))?.iter().zip(&jac).map(|(v, j)| v * j).collect();
    let pre = start.elapsed().as_secs_f64();
    let t = Instant::now();
    let res = gmres(
        |mu| {
            let psi: Vec<Complex64> = mu.iter().zip(&jac).map(|(m, j)| m / j).collect();
            let kp = ops.apply(LayerKind::Kt, &psi)?;
            Ok(mu.iter().zip(kp).zip(&jac).map(|((a, b), j)| b * j - 0.5 * a).collect())
        },
        &rhs,
        &problem.gmres,
    )?;
    let stats = finish_stats(&disc, &res, pre, t.elapsed().as_secs_f64());
    let trace = data.f.clone();
    let normal_trace = res.x.iter().zip(&jac).map(|(m, j)| m / j).collect();
    Ok(Solution { problem: problem.clone(), disc, trace, normal_trace, data, stats })
}

/// Action of the two-layer system on `(ũ₂, J∂̃_ν ũ₂)`, second block row scaled by `J`.
fn transmission_apply<const D: usize>(
    o1: &LayerOps<D>,
    o2: &LayerOps<D>,
    jac: &[f64],
    x: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = x.len() / 2;
    let (u, mu) = x.split_at(n);
    let p: Vec<Complex64> = mu.iter().zip(jac).map(|(m, j)| m / j).collect();
    let r1 = o1.apply_many(&[(LayerKind::K, u), (LayerKind::S, &p), (LayerKind::Kt, &p)])?;
    let r2 = o2.apply_many(&[(LayerKind::K, u), (LayerKind::S, &p), (LayerKind::Kt, &p)])?;
    let n1 = o1.apply_hyper(u, None)?;
    let n2 = o2.apply_hyper(u, None)?;
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        out.push(u[i] + r1[0][i] - r2[0][i] + r2[1][i] - r1[1][i]);
    }
    for i in 0..n {
        out.push(mu[i] + (n1[i] - n2[i] + r2[2][i] - r1[2][i]) * jac[i]);
    }
    Ok(out)
}

/// Applies the two-layer system matrix to `(ũ₂, ∂̃_ν ũ₂)` (exposed for consistency checks).
pub fn transmission_operator<const D: usize>(ops: &[LayerOps<D>], x: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = x.len() / 2;
    let jac = jacobians(&ops[0].disc);
    let mut scaled = x.to_vec();
    for i in 0..n {
        scaled[n + i] *= jac[i];
    }
    let mut out = transmission_apply(&ops[0], &ops[1], &jac, &scaled)?;
    for i in 0..n {
        out[n + i] /= jac[i];
    }
    Ok(out)
}

/// `[I+K̃₁−K̃₂, S̃₂−S̃₁; Ñ₁−Ñ₂, I+K̃′₂−K̃′₁](ũ₂, ∂̃_ν ũ₂) =
/// (−(½I+K̃₁)f̃ + S̃₁g̃, −Ñ₁f̃ + (K̃′₁−½I)g̃)` with `ũ₁ = ũ₂ + f̃`, `∂̃_ν ũ₁ = ∂̃_ν ũ₂ + g̃`.
pub fn solve_transmission<const D: usize>(problem: &Problem<D>) -> Result<Solution<D>> {
    problem.validate()?;
    let start = Instant::now();
    let disc = discretize(problem)?;
    let data = boundary_data(problem, &disc)?;
    warn_boundary_values(&disc, &data.f);
    let k2 = problem.k2.expect("validated");
    let ops = LayerOps::build(&disc, &[problem.k, k2], [true, true, true], problem.storage)?;
    let n = disc.len();
    let tangent = tangential_from_gradient(&disc, &data.grad_f);
    let r = ops[0].apply_many(&[(LayerKind::K, &data.f), (LayerKind::S, &data.g), (LayerKind::Kt, &data.g)])?;
    let nf = ops[0].apply_hyper(&data.f, Some(&tangent))?;
    let mut rhs = Vec::with_capacity(2 * n);
    for i in 0..n {
        rhs.push(-0.5 * data.f[i] - r[0][i] + r[1][i]);
    }
    let jac = jacobians(&disc);
    for i in 0..n {
        rhs.push((-nf[i] + r[2][i] - 0.5 * data.g[i]) * jac[i]);
    }
    let pre = start.elapsed().as_secs_f64();
    let t = Instant::now();
    let res = gmres(|x| transmission_apply(&ops[0], &ops[1], &jac, x), &rhs, &problem.gmres)?;
    let stats = finish_stats(&disc, &res, pre, t.elapsed().as_secs_f64());
    let mut x = res.x;
    let normal_trace = x.split_off(n).iter().zip(&jac).map(|(m, j)| m / j).collect();
    Ok(Solution { problem: problem.clone(), disc, trace: x, normal_trace, data, stats })
}

/// Max-norm residuals `‖(½I+K̃)f̃ − S̃g̃‖` and `‖(−½I+K̃′)g̃ − Ñf̃‖` of the two
/// boundary identities for the traces of a manufactured outgoing field.
pub fn calderon_residuals<const D: usize>(problem: &Problem<D>) -> Result<[f64; 2]> {
    problem.validate()?;
    if !matches!(problem.excitation, Excitation::Manufactured { .. }) || problem.bc == BoundaryCondition::Transmission {
        return Err(Error::Config { field: "excitation".into(), message: "residuals need a manufactured half-space problem".into() });
    }
    let disc = discretize(problem)?;
    let data = boundary_data(problem, &disc)?;
    let ops = LayerOps::build(&disc, &[problem.k], [true, true, true], problem.storage)?.remove(0);
    let r = ops.apply_many(&[(LayerKind::K, &data.f), (LayerKind::S, &data.g), (LayerKind::Kt, &data.g)])?;
    let tangent = tangential_from_gradient(&disc, &data.grad_f);
    let nf = ops.apply_hyper(&data.f, Some(&tangent))?;
    let mut out = [0.0f64; 2];
    for i in 0..disc.len() {
        out[0] = out[0].max((0.5 * data.f[i] + r[0][i] - r[1][i]).norm());
        out[1] = out[1].max((r[2][i] - 0.5 * data.g[i] - nf[i]).norm());
    }
    Ok(out)
}

pub fn solve<const D: usize>(problem: &Problem<D>) -> Result<Solution<D>> {
    match problem.bc {
        BoundaryCondition::Dirichlet => solve_dirichlet(problem),
        BoundaryCondition::Neumann => solve_neumann(problem),
        BoundaryCondition::Transmission => solve_transmission(problem),
    }
}

/// `∫_{Γᵇ} [G̃ ψ − ∂̃_{ν_y} G̃ u] ds_y` at points of the physical box.
pub fn potential<const D: usize>(
    disc: &Discretization<D>,
    k: f64,
    points: &[[f64; D]],
    psi: &[Complex64],
    u: &[Complex64],
) -> Result<Vec<Complex64>> {
    points
        .par_iter()
        .map(|p| {
            if !disc.profile.in_box(p) {
                return Err(Error::OutsideBox(p.to_vec()));
            }
            let x = KernelPoint::target(&disc.profile, *p);
            let adj = disc.find_adjacent(p, None);
            let blocks = target_blocks(disc, &x, &adj, &[k], [true, true, false])?.remove(0);
            let mut out = [ZERO; 2];
            row_apply(disc, &x, &blocks, k, &[(LayerKind::S, psi), (LayerKind::K, u)], &mut out)?;
            Ok(out[0] - out[1])
        })
        .collect()
}

impl<const D: usize> Solution<D> {
    /// Layer containing `x`: the side of the nearest boundary node, `ν` pointing into the lower one.
    pub fn layer_of(&self, x: &[f64; D]) -> Layer {
        let (i, _) = self
            .disc
            .frames
            .iter()
            .enumerate()
            .map(|(i, f)| (i, (0..D).map(|j| (f.point[j] - x[j]).powi(2)).sum::<f64>()))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        let f = &self.disc.frames[i];
        let s: f64 = (0..D).map(|j| (x[j] - f.point[j]) * f.normal[j]).sum();
        if s > 0.0 {
            Layer::Lower
        } else {
            Layer::Upper
        }
    }

    /// Scattered field at points of the fluid (per layer for transmission).
    pub fn scattered(&self, points: &[[f64; D]]) -> Result<Vec<Complex64>> {
        let disc = &self.disc;
        if self.problem.bc != BoundaryCondition::Transmission {
            return potential(disc, self.problem.k, points, &self.normal_trace, &self.trace);
        }
        let k2 = self.problem.k2.expect("validated");
        let u1: Vec<Complex64> = self.trace.iter().zip(&self.data.f).map(|(a, b)| a + b).collect();
        let p1: Vec<Complex64> = self.normal_trace.iter().zip(&self.data.g).map(|(a, b)| a + b).collect();
        let layers: Vec<Layer> = points.iter().map(|p| self.layer_of(p)).collect();
        let up: Vec<[f64; D]> = points.iter().zip(&layers).filter(|(_, l)| **l == Layer::Upper).map(|(p, _)| *p).collect();
        let lo: Vec<[f64; D]> = points.iter().zip(&layers).filter(|(_, l)| **l == Layer::Lower).map(|(p, _)| *p).collect();
        let vu = potential(disc, self.problem.k, &up, &p1, &u1)?;
        let vl = potential(disc, k2, &lo, &self.normal_trace, &self.trace)?;
        let (mut iu, mut il) = (vu.into_iter(), vl.into_iter());
        Ok(layers
            .iter()
            .map(|l| match l {
                Layer::Upper => iu.next().expect("upper"),
                Layer::Lower => -il.next().expect("lower"),
            })
            .collect())
    }

    /// Total field: scattered plus incident and reference fields. Manufactured
    /// runs have no incident field.
    pub fn total(&self, points: &[[f64; D]]) -> Result<Vec<Complex64>> {
        let sca = self.scattered(points)?;
        let Some(inc) = self.problem.excitation.incidence() else {
            return Ok(sca);
        };
        let k = self.problem.k;
        sca.into_iter()
            .zip(points)
            .map(|(s, p)| {
                let xs = p.map(|v| Complex64::new(v, 0.0));
                let extra = match self.problem.bc {
                    BoundaryCondition::Transmission => {
                        let k2 = self.problem.k2.expect("validated");
                        match self.layer_of(p) {
                            Layer::Upper => incident_field(&inc, k, &xs)?.0 + twolayer_reference(&inc, k, k2, Layer::Upper, &xs)?.0,
                            Layer::Lower => twolayer_reference(&inc, k, k2, Layer::Lower, &xs)?.0,
                        }
                    }
                    bc => incident_field(&inc, k, &xs)?.0 + reference_field(&inc, bc, k, &xs)?.0,
                };
                Ok(s + extra)
            })
            .collect()
    }

    /// Exact scattered field of a manufactured run (upper layer for transmission).
    pub fn exact(&self, points: &[[f64; D]]) -> Result<Option<Vec<Complex64>>> {
        let Excitation::Manufactured { z } = &self.problem.excitation else {
            return Ok(None);
        };
        let z = self.problem.source_point(z)?;
        let k = self.problem.k;
        points
            .iter()
            .map(|p| Ok(point_source(&z, k, &p.map(|v| Complex64::new(v, 0.0)))?.0))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

/// `max|u_num − u_ref| / max|u_ref|`.
pub fn error_linf(numeric: &[Complex64], reference: &[Complex64]) -> Result<f64> {
    if numeric.len() != reference.len() {
        return Err(Error::InvalidParameter("sample sets differ in length".into()));
    }
    let den = reference.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if den == 0.0 {
        return Err(Error::Domain("reference field vanishes identically".into()));
    }
    let num = numeric.iter().zip(reference).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gmres_identity_one_iteration() {
        let b: Vec<Complex64> = (0..10).map(|i| c(i as f64, 1.0)).collect();
        let r = gmres(|x| Ok(x.to_vec()), &b, &GmresParams::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
        for (x, y) in r.x.iter().zip(&b) {
            assert!((x - y).norm() < 1e-14);
        }
        let z = gmres(|x| Ok(x.to_vec()), &vec![ZERO; 4], &GmresParams::default()).unwrap();
        assert_eq!(z.iterations, 0);
        assert!(z.x.iter().all(|v| *v == ZERO));
    }

    fn lu_solve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let n = b.len();
        let mut m = a.to_vec();
        let mut x = b.to_vec();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| m[i * n + k].norm().total_cmp(&m[j * n + k].norm())).unwrap();
            if p != k {
                for j in 0..n {
                    m.swap(k * n + j, p * n + j);
                }
                x.swap(k, p);
            }
            for i in k + 1..n {
                let f = m[i * n + k] / m[k * n + k];
                for j in k..n {
                    let v = m[k * n + j];
                    m[i * n + j] -= f * v;
                }
                let v = x[k];
                x[i] -= f * v;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..n {
                s -= m[k * n + j] * x[j];
            }
            x[k] = s / m[k * n + k];
        }
        x
    }

    #[test]
    fn gmres_matches_direct_solve() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let n = 50;
        let mut a = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 0.1;
            }
            a[i * n + i] += c(3.0, 0.5);
        }
        let b: Vec<Complex64> = (0..n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let direct = lu_solve(&a, &b);
        let apply = |x: &[Complex64]| Ok((0..n).map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum()).collect());
        let r = gmres(apply, &b, &GmresParams { tol: 1e-14, ..Default::default() }).unwrap();
        for (x, y) in r.x.iter().zip(&direct) {
            assert!((x - y).norm() < 1e-10);
        }
        for w in r.history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        // restarted run converges to the same solution
        let r2 = gmres(apply, &b, &GmresParams { tol: 1e-13, restart: 7, max_iter: 500 }).unwrap();
        assert!(r2.converged);
        for (x, y) in r2.x.iter().zip(&direct) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn gmres_reports_unconverged_best_iterate() {
        let n = 30;
        let apply = |x: &[Complex64]| Ok((0..n).map(|i| x[i] * (1.0 + i as f64)).collect());
        let b = vec![c(1.0, 0.0); n];
        let r = gmres(apply, &b, &GmresParams { tol: 1e-14, restart: 5, max_iter: 5 }).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 5);
        assert!(r.residual < 1.0);
    }

    #[test]
    fn error_metric_examples() {
        let r = vec![c(1.0, 0.0), c(0.0, 2.0)];
        assert_eq!(error_linf(&r, &r).unwrap(), 0.0);
        let s: Vec<Complex64> = r.iter().map(|z| z * 1.01).collect();
        assert!((error_linf(&s, &r).unwrap() - 0.01).abs() < 1e-15);
        assert!(error_linf(&r, &[ZERO, ZERO]).is_err());
    }
}

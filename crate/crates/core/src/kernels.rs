//! Green's functions, layer-potential kernels and incident/reference fields,
//! all evaluated at (possibly) complex-stretched points.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryCondition, Frame};
use crate::pml::{complex_distance, PmlProfile, StretchedPoint};
use crate::specfun::{branch_sqrt, hankel01};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Boundary or target point with cached stretch data.
#[derive(Debug, Clone, Copy)]
pub struct KernelPoint<const D: usize> {
    pub stretched: StretchedPoint<f64, D>,
    pub normal: [f64; D],
    pub jacobian: f64,
    /// `ν_j Π_{i≠j} α_i`: coefficients of the stretched normal derivative.
    pub conormal: [Complex64; D],
}

impl<const D: usize> KernelPoint<D> {
    pub fn new(profile: &PmlProfile<f64>, frame: &Frame<D>) -> Self {
        Self::from_parts(profile.stretch(frame.point), frame.normal, frame.jacobian)
    }

    pub fn from_parts(stretched: StretchedPoint<f64, D>, normal: [f64; D], jacobian: f64) -> Self {
        let mut conormal = [ZERO; D];
        for j in 0..D {
            let mut c = Complex64::new(normal[j], 0.0);
            for i in 0..D {
                if i != j {
                    c *= stretched.alpha[i];
                }
            }
            conormal[j] = c;
        }
        Self { stretched, normal, jacobian, conormal }
    }

    /// Off-surface target (no normal).
    pub fn target(profile: &PmlProfile<f64>, x: [f64; D]) -> Self {
        Self::from_parts(profile.stretch(x), [0.0; D], 0.0)
    }

    pub fn x(&self) -> &[f64; D] {
        &self.stretched.x
    }

    pub fn xs(&self) -> &[Complex64; D] {
        &self.stretched.xs
    }

    /// `∂̃_ν` applied to a gradient taken with respect to stretched coordinates.
    pub fn conormal_derivative(&self, grad: &[Complex64; D]) -> Complex64 {
        self.conormal.iter().zip(grad).map(|(c, g)| c * g).sum()
    }
}

/// `G`, `dG/dρ` and `ρ` for one pair.
#[derive(Debug, Clone, Copy)]
pub struct GreenValue {
    pub g: Complex64,
    pub dg: Complex64,
    pub rho: Complex64,
}

fn green_from_rho<const D: usize>(rho: Complex64, k: f64) -> Result<GreenValue> {
    if rho.norm() == 0.0 {
        return Err(Error::Domain("Green's function at coincident points".into()));
    }
    if D == 2 {
        let (h0, h1) = hankel01(rho * k)?;
        Ok(GreenValue { g: I * 0.25 * h0, dg: -I * (0.25 * k) * h1, rho })
    } else {
        let e = (I * k * rho).exp();
        let g = e / (4.0 * PI * rho);
        Ok(GreenValue { g, dg: g * (I * k * rho - 1.0) / rho, rho })
    }
}

/// Free-space Green's function at real points.
pub fn green_free<const D: usize>(x: &[f64; D], y: &[f64; D], k: f64) -> Result<Complex64> {
    let r = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok(green_from_rho::<D>(Complex64::new(r, 0.0), k)?.g)
}

/// Green's function between stretched points.
pub fn green_pml<const D: usize>(x: &StretchedPoint<f64, D>, y: &StretchedPoint<f64, D>, k: f64) -> Result<GreenValue> {
    green_from_rho::<D>(complex_distance(x, y), k)
}

/// Green's function between complex coordinate tuples.
pub fn green_complex<const D: usize>(x: &[Complex64; D], y: &[Complex64; D], k: f64) -> Result<GreenValue> {
    let mut s = ZERO;
    for j in 0..D {
        let d = x[j] - y[j];
        s += d * d;
    }
    green_from_rho::<D>(branch_sqrt(s), k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LayerKind {
    /// Single layer `G̃`.
    S,
    /// Double layer `∂̃_{ν_y} G̃`.
    K,
    /// Adjoint double layer `∂̃_{ν_x} G̃`.
    Kt,
}

/// `[S, K, Kt]` kernels for one pair, sharing one Green evaluation.
pub fn layer_kernels<const D: usize>(x: &KernelPoint<D>, y: &KernelPoint<D>, k: f64) -> Result<[Complex64; 3]> {
    layer_kernels_with(x, y, &stretched_diff(x, y, None), k)
}

/// `ỹ − x̃`. When `disp` carries an accurately computed `y − x` it replaces
/// the real part, which otherwise loses all relative precision as `y → x`.
pub fn stretched_diff<const D: usize>(x: &KernelPoint<D>, y: &KernelPoint<D>, disp: Option<[f64; D]>) -> [Complex64; D] {
    let mut d = [ZERO; D];
    for j in 0..D {
        let re = match disp {
            Some(v) => v[j],
            None => y.stretched.x[j] - x.stretched.x[j],
        };
        d[j] = Complex64::new(re, y.stretched.xs[j].im - x.stretched.xs[j].im);
    }
    d
}

/// [`layer_kernels`] with a precomputed `ỹ − x̃`.
pub fn layer_kernels_with<const D: usize>(
    x: &KernelPoint<D>,
    y: &KernelPoint<D>,
    diff: &[Complex64; D],
    k: f64,
) -> Result<[Complex64; 3]> {
    let rho = branch_sqrt(diff.iter().map(|d| d * d).sum());
    let gv = green_from_rho::<D>(rho, k)?;
    let f = gv.dg / gv.rho;
    let mut ky = ZERO;
    let mut kx = ZERO;
    for j in 0..D {
        ky += y.conormal[j] * diff[j];
        kx -= x.conormal[j] * diff[j];
    }
    Ok([gv.g, f * ky, f * kx])
}

pub fn kernel_layer<const D: usize>(kind: LayerKind, x: &KernelPoint<D>, y: &KernelPoint<D>, k: f64) -> Result<Complex64> {
    let v = layer_kernels(x, y, k)?;
    Ok(match kind {
        LayerKind::S => v[0],
        LayerKind::K => v[1],
        LayerKind::Kt => v[2],
    })
}

/// Weakly singular factor of the regularized hyper-singular kernel.
#[derive(Debug, Clone, Copy)]
pub enum HyperWeak {
    /// 2D: `G̃`, integrated against `dφ/ds` and differentiated along the target.
    Planar(Complex64),
    /// 3D: `A₂ (ν_x × ∇_x) G̃`, contracted with `ν_y × ∇φ`.
    Spatial([Complex64; 3]),
}

#[derive(Debug, Clone, Copy)]
pub struct HyperParts {
    pub weak: HyperWeak,
    /// `k² ν_xᵀ A ν_y G̃` with `A = A₁` (2D) or `A₃` (3D).
    pub zero_order: Complex64,
}

/// `Σ_i (A)_ii ν_x^i ν_y^i`; both `A₁` and `A₃` have `(A)_ii = Π_{j≠i} α_j(x)α_j(y)`.
pub fn zero_order_weight<const D: usize>(x: &KernelPoint<D>, y: &KernelPoint<D>) -> Complex64 {
    x.conormal.iter().zip(&y.conormal).map(|(a, b)| a * b).sum()
}

pub fn kernel_hyper_parts<const D: usize>(x: &KernelPoint<D>, y: &KernelPoint<D>, k: f64) -> Result<HyperParts> {
    let gv = green_pml(&x.stretched, &y.stretched, k)?;
    let zero_order = k * k * zero_order_weight(x, y) * gv.g;
    let weak = if D == 2 {
        HyperWeak::Planar(gv.g)
    } else {
        let f = gv.dg / gv.rho;
        let xa: &[Complex64] = &x.stretched.alpha;
        let ya: &[Complex64] = &y.stretched.alpha;
        let xs: &[Complex64] = &x.stretched.xs;
        let ys: &[Complex64] = &y.stretched.xs;
        let n: &[f64] = &x.normal;
        // real gradient in x: α_j(x) ∂_{x̃_j} G̃
        let grad: Vec<Complex64> = (0..3).map(|j| xa[j] * f * (xs[j] - ys[j])).collect();
        let c = [
            n[1] * grad[2] - n[2] * grad[1],
            n[2] * grad[0] - n[0] * grad[2],
            n[0] * grad[1] - n[1] * grad[0],
        ];
        HyperWeak::Spatial([c[0] * xa[0] * ya[0], c[1] * xa[1] * ya[1], c[2] * xa[2] * ya[2]])
    };
    Ok(HyperParts { weak, zero_order })
}

/// Incident wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Incidence {
    /// `exp(ik x·d)` with `d = (sin θ, −cos θ)` or `(sin θ cos φ, sin θ sin φ, −cos θ)`.
    PlaneWave {
        theta: f64,
        #[serde(default)]
        phi: f64,
    },
    /// `G(x, z)`.
    PointSource { z: Vec<f64> },
}

impl Incidence {
    pub fn direction<const D: usize>(&self) -> Option<[f64; D]> {
        match self {
            Incidence::PlaneWave { theta, phi } => {
                let mut d = [0.0; D];
                let (s, c) = theta.sin_cos();
                if D == 2 {
                    d.copy_from_slice(&[s, -c]);
                } else {
                    d.copy_from_slice(&[s * phi.cos(), s * phi.sin(), -c]);
                }
                Some(d)
            }
            Incidence::PointSource { .. } => None,
        }
    }
}

/// Value and stretched-coordinate gradient of a field.
pub type FieldValue<const D: usize> = (Complex64, [Complex64; D]);

/// `amp·exp(i kv·x)` for a possibly complex wavevector `kv`.
fn wave<const D: usize>(kv: &[Complex64; D], x: &[Complex64; D], amp: Complex64) -> FieldValue<D> {
    let phase: Complex64 = x.iter().zip(kv).map(|(xi, ki)| xi * ki).sum();
    let v = amp * (I * phase).exp();
    (v, kv.map(|kj| I * kj * v))
}

fn plane_wave<const D: usize>(d: &[f64; D], k: f64, x: &[Complex64; D], amp: Complex64) -> FieldValue<D> {
    wave(&d.map(|dj| Complex64::new(k * dj, 0.0)), x, amp)
}

pub fn point_source<const D: usize>(z: &[f64; D], k: f64, x: &[Complex64; D]) -> Result<FieldValue<D>> {
    let mut zc = [ZERO; D];
    for j in 0..D {
        zc[j] = Complex64::new(z[j], 0.0);
    }
    let gv = green_complex(x, &zc, k)?;
    let f = gv.dg / gv.rho;
    let mut g = [ZERO; D];
    for j in 0..D {
        g[j] = f * (x[j] - zc[j]);
    }
    Ok((gv.g, g))
}

fn source_point<const D: usize>(z: &[f64]) -> Result<[f64; D]> {
    if z.len() != D {
        return Err(Error::InvalidParameter(format!("source point needs {D} coordinates")));
    }
    let mut p = [0.0; D];
    p.copy_from_slice(z);
    Ok(p)
}

/// `u^inc` and its gradient at a (complex) point.
pub fn incident_field<const D: usize>(inc: &Incidence, k: f64, x: &[Complex64; D]) -> Result<FieldValue<D>> {
    match inc {
        Incidence::PlaneWave { .. } => {
            let d = inc.direction::<D>().expect("plane wave");
            Ok(plane_wave(&d, k, x, Complex64::new(1.0, 0.0)))
        }
        Incidence::PointSource { z } => point_source(&source_point::<D>(z)?, k, x),
    }
}

/// Field reflected by the flat ground: `∓exp(ik x′·d)`, zero for point sources.
pub fn reference_field<const D: usize>(inc: &Incidence, bc: BoundaryCondition, k: f64, x: &[Complex64; D]) -> Result<FieldValue<D>> {
    match inc {
        Incidence::PointSource { .. } => Ok((ZERO, [ZERO; D])),
        Incidence::PlaneWave { .. } => {
            let mut d = inc.direction::<D>().expect("plane wave");
            // x′·d = x·d′ with the vertical component of d mirrored
            d[D - 1] = -d[D - 1];
            let amp = match bc {
                BoundaryCondition::Dirichlet => -1.0,
                BoundaryCondition::Neumann => 1.0,
                BoundaryCondition::Transmission => {
                    return Err(Error::InvalidParameter("use twolayer_reference for transmission".into()))
                }
            };
            Ok(plane_wave(&d, k, x, Complex64::new(amp, 0.0)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Upper,
    Lower,
}

/// Reflection and transmission coefficients and the lower vertical wavenumber.
pub fn fresnel(theta: f64, k1: f64, k2: f64) -> (Complex64, Complex64, Complex64) {
    let kz1 = k1 * theta.cos();
    // kz1² + (k2² − k1²) avoids cancellation and is exact when k1 = k2
    let kz2 = branch_sqrt(Complex64::new(kz1 * kz1 + (k2 - k1) * (k2 + k1), 0.0));
    let den = kz1 + kz2;
    ((kz1 - kz2) / den, 2.0 * kz1 / den, kz2)
}

/// Reference field of the unperturbed two-layer medium: reflected wave in the
/// upper layer, transmitted wave in the lower one.
pub fn twolayer_reference<const D: usize>(inc: &Incidence, k1: f64, k2: f64, layer: Layer, x: &[Complex64; D]) -> Result<FieldValue<D>> {
    let Incidence::PlaneWave { theta, .. } = inc else {
        return Ok((ZERO, [ZERO; D]));
    };
    let d = inc.direction::<D>().expect("plane wave");
    let (r, t, kz2) = fresnel(*theta, k1, k2);
    match layer {
        Layer::Upper => {
            let mut m = d;
            m[D - 1] = -m[D - 1];
            Ok(plane_wave(&m, k1, x, r))
        }
        Layer::Lower => {
            let mut kv = d.map(|dj| Complex64::new(k1 * dj, 0.0));
            kv[D - 1] = -kz2;
            Ok(wave(&kv, x, t))
        }
    }
}

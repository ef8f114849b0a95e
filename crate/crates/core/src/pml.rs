//! Complex coordinate stretching: absorption profile, stretched coordinates,
//! complex distance and the coefficient matrices of the stretched equation.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{branch_sqrt, Real};

const PIECES: usize = 8;
const PIECE_DEGREE: usize = 24;

/// Per-axis absorber description. The layer on axis `i` occupies
/// `a_i < |x_i| < a_i + T_i`; beyond it `σ_i ≡ S`.
#[derive(Debug, Clone)]
pub struct PmlProfile<T: Real> {
    pub a: Vec<T>,
    pub t: Vec<T>,
    pub s: T,
    pub p: u32,
    active: bool,
    ramps: Vec<RampIntegral<T>>,
}

/// Serializable profile parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmlParams {
    pub s: f64,
    pub p: u32,
}

impl Default for PmlParams {
    fn default() -> Self {
        Self { s: 6.0, p: 6 }
    }
}

impl<T: Real> PmlProfile<T> {
    pub fn new(a: Vec<T>, t: Vec<T>, s: T, p: u32) -> Result<Self> {
        if a.len() != t.len() || !(2..=3).contains(&a.len()) {
            return Err(Error::InvalidParameter("PML needs 2 or 3 axes".into()));
        }
        if a.iter().chain(t.iter()).any(|&v| !(v > T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidParameter("PML box sizes must be positive".into()));
        }
        if !(s > T::zero()) || p < 2 {
            return Err(Error::InvalidParameter("PML needs S > 0 and P >= 2".into()));
        }
        let ramps = a
            .iter()
            .zip(&t)
            .map(|(&ai, &ti)| RampIntegral::new(ai, ti, s, p))
            .collect();
        Ok(Self { a, t, s, p, active: true, ramps })
    }

    /// Identity stretch (no absorbing layer) in `dim` dimensions.
    pub fn off(dim: usize) -> Self {
        let big = T::max_value();
        Self {
            a: vec![big; dim],
            t: vec![T::one(); dim],
            s: T::zero(),
            p: 2,
            active: false,
            ramps: Vec::new(),
        }
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// `σ_i(t)`.
    pub fn sigma(&self, axis: usize, t: T) -> T {
        if !self.active {
            return T::zero();
        }
        sigma_ramp(self.a[axis], self.t[axis], self.s, self.p, t)
    }

    /// `Im x̃_i = ∫₀^{x_i} σ_i`.
    pub fn stretch_im(&self, axis: usize, x: T) -> T {
        if !self.active {
            return T::zero();
        }
        let (a, t) = (self.a[axis], self.t[axis]);
        let ax = x.abs();
        if ax <= a {
            return T::zero();
        }
        let ramp = &self.ramps[axis];
        let v = if ax < a + t {
            ramp.eval(ax)
        } else {
            ramp.total + self.s * (ax - a - t)
        };
        if x < T::zero() {
            -v
        } else {
            v
        }
    }

    /// Cached value of `∫_{a_i}^{a_i+T_i} σ_i`.
    pub fn ramp_integral(&self, axis: usize) -> T {
        if self.active {
            self.ramps[axis].total
        } else {
            T::zero()
        }
    }

    pub fn stretch<const D: usize>(&self, x: [T; D]) -> StretchedPoint<T, D> {
        let zero = Complex::new(T::zero(), T::zero());
        let mut xs = [zero; D];
        let mut alpha = [zero; D];
        for i in 0..D {
            xs[i] = Complex::new(x[i], self.stretch_im(i, x[i]));
            alpha[i] = Complex::new(T::one(), self.sigma(i, x[i]));
        }
        StretchedPoint { x, xs, alpha }
    }

    /// True when `x` lies in the closed physical box `B_a`.
    pub fn in_box(&self, x: &[T]) -> bool {
        x.iter().zip(&self.a).all(|(xi, ai)| xi.abs() <= *ai)
    }
}

fn sigma_ramp<T: Real>(a: T, t: T, s: T, p: u32, x: T) -> T {
    let ax = x.abs();
    if ax <= a {
        return T::zero();
    }
    if ax >= a + t {
        return s;
    }
    let xb = (ax - (a + t)) / t;
    let f1 = crate::cheb::eta(p, xb).0;
    let f2 = T::one() - f1;
    let pi = p as i32;
    let g1 = f1.powi(pi);
    T::lit(2.0) * s * g1 / (g1 + f2.powi(pi))
}

/// Antiderivative of σ on the ramp, as piecewise Chebyshev series.
#[derive(Debug, Clone)]
struct RampIntegral<T: Real> {
    a: T,
    t: T,
    coeffs: Vec<Vec<T>>,
    total: T,
}

impl<T: Real> RampIntegral<T> {
    fn new(a: T, t: T, s: T, p: u32) -> Self {
        let m = PIECE_DEGREE;
        let h = t / T::from_usize_lossy(PIECES);
        let half = T::lit(0.5);
        let mut coeffs = Vec::with_capacity(PIECES);
        let mut offset = T::zero();
        for k in 0..PIECES {
            let x0 = a + h * T::from_usize_lossy(k);
            // σ at first-kind points, then its Chebyshev coefficients
            let vals: Vec<T> = (0..m)
                .map(|j| {
                    let th = T::from_usize_lossy(2 * j + 1) * T::PI() / T::from_usize_lossy(2 * m);
                    sigma_ramp(a, t, s, p, x0 + h * half * (th.cos() + T::one()))
                })
                .collect();
            let mut c = vec![T::zero(); m + 2];
            for (n, cn) in c.iter_mut().enumerate().take(m) {
                let mut acc = T::zero();
                for (j, v) in vals.iter().enumerate() {
                    let th = T::from_usize_lossy(2 * j + 1) * T::PI() / T::from_usize_lossy(2 * m);
                    acc = acc + *v * (T::from_usize_lossy(n) * th).cos();
                }
                *cn = acc * T::lit(2.0) / T::from_usize_lossy(m);
            }
            c[0] = c[0] * half;
            // integrate term by term; x = x0 + (h/2)(u+1)
            let mut ic = vec![T::zero(); m + 1];
            for n in 1..=m {
                let prev = if n == 1 { c[0] * T::lit(2.0) } else { c[n - 1] };
                ic[n] = (prev - c[n + 1]) / T::from_usize_lossy(2 * n) * h * half;
            }
            let at_left = clenshaw(&ic, -T::one());
            ic[0] = offset - at_left;
            offset = clenshaw(&ic, T::one());
            coeffs.push(ic);
        }
        Self { a, t, coeffs, total: offset }
    }

    fn eval(&self, x: T) -> T {
        let h = self.t / T::from_usize_lossy(PIECES);
        let r = ((x - self.a) / h).floor();
        let k = r.to_usize().unwrap_or(0).min(PIECES - 1);
        let x0 = self.a + h * T::from_usize_lossy(k);
        let u = T::lit(2.0) * (x - x0) / h - T::one();
        clenshaw(&self.coeffs[k], u)
    }
}

fn clenshaw<T: Real>(c: &[T], u: T) -> T {
    let mut b1 = T::zero();
    let mut b2 = T::zero();
    for &ck in c.iter().skip(1).rev() {
        let b0 = T::lit(2.0) * u * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    u * b1 - b2 + c[0]
}

/// A point with its stretched image and the stretch derivatives `α_i`.
#[derive(Debug, Clone, Copy)]
pub struct StretchedPoint<T: Real, const D: usize> {
    pub x: [T; D],
    pub xs: [Complex<T>; D],
    pub alpha: [Complex<T>; D],
}

impl<T: Real, const D: usize> StretchedPoint<T, D> {
    /// Identity stretch.
    pub fn real(x: [T; D]) -> Self {
        let zero = Complex::new(T::zero(), T::zero());
        let mut xs = [zero; D];
        let mut alpha = [zero; D];
        for i in 0..D {
            xs[i] = Complex::new(x[i], T::zero());
            alpha[i] = Complex::new(T::one(), T::zero());
        }
        Self { x, xs, alpha }
    }
}

/// `ρ = √(Σ (x̃_j − ỹ_j)²)` with the `Re ≥ 0` branch.
pub fn complex_distance<T: Real, const D: usize>(x: &StretchedPoint<T, D>, y: &StretchedPoint<T, D>) -> Complex<T> {
    let mut s = Complex::new(T::zero(), T::zero());
    for j in 0..D {
        let d = x.xs[j] - y.xs[j];
        s = s + d * d;
    }
    branch_sqrt(s)
}

/// Diagonal of `A` and the factor `J` of the stretched operator.
pub fn pml_matrices<T: Real, const D: usize>(x: &StretchedPoint<T, D>) -> ([Complex<T>; D], Complex<T>) {
    let one = Complex::new(T::one(), T::zero());
    let j = x.alpha.iter().fold(one, |acc, a| acc * a);
    let mut a = [one; D];
    for i in 0..D {
        a[i] = j / (x.alpha[i] * x.alpha[i]);
    }
    (a, j)
}

/// Diagonal weights of the regularized hyper-singular form.
#[derive(Debug, Clone, Copy)]
pub enum LemmaWeights<T: Real> {
    /// `A₁` in 2D.
    Planar([Complex<T>; 2]),
    /// `A₂`, `A₃` in 3D.
    Spatial([Complex<T>; 3], [Complex<T>; 3]),
}

pub fn lemma_weights<T: Real, const D: usize>(x: &StretchedPoint<T, D>, y: &StretchedPoint<T, D>) -> LemmaWeights<T> {
    let one = Complex::new(T::one(), T::zero());
    let prod = |i: usize| x.alpha[i] * y.alpha[i];
    if D == 2 {
        LemmaWeights::Planar([prod(1), prod(0)])
    } else {
        let a2 = [prod(0), prod(1), prod(2)];
        let alpha = a2.iter().fold(one, |acc, v| acc * v);
        LemmaWeights::Spatial(a2, [alpha / a2[0], alpha / a2[1], alpha / a2[2]])
    }
}

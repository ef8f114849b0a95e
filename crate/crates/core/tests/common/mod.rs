//! Oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use pmlbie::geometry::{closed_curve_scene, TrigCurve};
use pmlbie::operators::{Discretization, LayerOps, QuadParams, Storage};
use pmlbie::specfun::hankel01;

const EULER: f64 = 0.577_215_664_901_532_9;

fn i() -> Complex64 {
    Complex64::i()
}

/// Classical Maue form `Nφ = d/ds S[dφ/ds] + k² ν·S[νφ]` on the unit circle,
/// discretized independently: trapezoidal nodes `t_j = πj/n`, Kress's
/// logarithmic splitting for `S`, trigonometric differentiation.
pub struct KressCircle {
    pub k: f64,
    pub n: usize,
}

impl KressCircle {
    fn nodes(&self) -> Vec<f64> {
        (0..2 * self.n).map(|j| PI * j as f64 / self.n as f64).collect()
    }

    /// `R_j(t)`: weights of `∫ ln(4 sin²((t−τ)/2)) f(τ) dτ`.
    fn log_weight(&self, t: f64, tj: f64) -> f64 {
        let n = self.n;
        let d = t - tj;
        let s: f64 = (1..n).map(|m| (m as f64 * d).cos() / m as f64).sum();
        -2.0 * PI / n as f64 * s - PI / (n * n) as f64 * (n as f64 * d).cos()
    }

    /// `S[ψ](t)` from samples of `ψ` at the trapezoidal nodes.
    pub fn single_layer(&self, psi: &[Complex64], t: f64) -> Complex64 {
        let k = self.k;
        let h = PI / self.n as f64;
        self.nodes()
            .iter()
            .zip(psi)
            .map(|(&tj, &p)| {
                let r = 2.0 * ((t - tj) / 2.0).sin().abs();
                let (m1, m2) = if r < 1e-14 {
                    (-1.0 / (4.0 * PI), i() / 4.0 - EULER / (2.0 * PI) - (k / 2.0).ln() / (2.0 * PI))
                } else {
                    let h0 = hankel01(Complex64::new(k * r, 0.0)).unwrap().0;
                    let m1 = -h0.re / (4.0 * PI);
                    (m1, i() / 4.0 * h0 - m1 * (r * r).ln())
                };
                (self.log_weight(t, tj) * m1 + h * m2) * p
            })
            .sum()
    }

    /// `d/dt` of the trigonometric interpolant of `v` at `t`.
    pub fn derivative(&self, v: &[Complex64], t: f64) -> Complex64 {
        let m = v.len();
        let nodes = self.nodes();
        let half = (m / 2) as i64;
        let mut out = Complex64::new(0.0, 0.0);
        for q in (-half + 1)..half {
            let c: Complex64 = nodes.iter().zip(v).map(|(&tj, &vj)| vj * Complex64::from_polar(1.0, -(q as f64) * tj)).sum::<Complex64>() / m as f64;
            out += i() * q as f64 * c * Complex64::from_polar(1.0, q as f64 * t);
        }
        out
    }

    /// `Nφ` at the angles `targets` for a density given as a function of the angle.
    pub fn hyper(&self, phi: &dyn Fn(f64) -> Complex64, targets: &[f64]) -> Vec<Complex64> {
        let nodes = self.nodes();
        let samples: Vec<Complex64> = nodes.iter().map(|&t| phi(t)).collect();
        let w: Vec<Complex64> = nodes.iter().map(|&t| self.derivative(&samples, t)).collect();
        let v: Vec<Complex64> = nodes.iter().map(|&t| self.single_layer(&w, t)).collect();
        let cx: Vec<Complex64> = nodes.iter().zip(&samples).map(|(t, p)| t.cos() * p).collect();
        let cy: Vec<Complex64> = nodes.iter().zip(&samples).map(|(t, p)| t.sin() * p).collect();
        targets
            .iter()
            .map(|&t| {
                let zero = t.cos() * self.single_layer(&cx, t) + t.sin() * self.single_layer(&cy, t);
                self.derivative(&v, t) + self.k * self.k * zero
            })
            .collect()
    }
}

/// `(J_m(k), J_m′(k), H_m(k), H_m′(k))` for `m ∈ {0, 1}`.
pub fn bessel_pair(m: u32, k: f64) -> (f64, f64, Complex64, Complex64) {
    let (h0, h1) = hankel01(Complex64::new(k, 0.0)).unwrap();
    if m == 0 {
        (h0.re, -h1.re, h0, -h1)
    } else {
        (h1.re, h0.re - h1.re / k, h1, h0 - h1 / k)
    }
}

/// Max-norm gap between the regularized `Ñ` (layer off, Chebyshev patches)
/// and the classical Maue form on the unit circle.
pub fn maue_gap(k: f64, n: usize) -> f64 {
    let scene = closed_curve_scene(TrigCurve::circle([0.0, 0.0], 1.0), 4);
    let disc = Arc::new(Discretization::new(&scene, QuadParams { n, ..Default::default() }).unwrap());
    let ops = LayerOps::build(&disc, &[k], [true, false, false], Storage::Dense).unwrap().remove(0);
    let phi = |t: f64| Complex64::new(t.cos().exp(), 0.5 * (2.0 * t).sin());
    let angles: Vec<f64> = disc.frames.iter().map(|f| f.point[1].atan2(f.point[0])).collect();
    let dens: Vec<Complex64> = angles.iter().map(|&t| phi(t)).collect();
    let ours = ops.apply_hyper(&dens, None).unwrap();
    let reference = KressCircle { k, n: 64 }.hyper(&phi, &angles);
    ours.iter().zip(&reference).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
}

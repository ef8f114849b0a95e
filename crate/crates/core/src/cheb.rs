//! Chebyshev points of the first kind, Fejér's first rule, the cardinal
//! interpolation basis, spectral differentiation and the graded maps used by
//! the rectangular-polar quadrature.

use num_complex::Complex;

use crate::scalar::Real;

/// `N` first-kind Chebyshev points with Fejér weights and barycentric data.
#[derive(Debug, Clone)]
pub struct ChebGrid<T: Real> {
    pub n: usize,
    /// `u_j = cos((2j+1)π/(2N))`, strictly decreasing.
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
    bary: Vec<T>,
    diff: Vec<T>,
}

impl<T: Real> ChebGrid<T> {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Chebyshev grid needs at least one node");
        let nf = T::from_usize_lossy(n);
        let two = T::lit(2.0);
        let theta: Vec<T> = (0..n)
            .map(|j| T::from_usize_lossy(2 * j + 1) * T::PI() / (two * nf))
            .collect();
        let nodes: Vec<T> = theta.iter().map(|t| t.cos()).collect();
        let weights = theta
            .iter()
            .map(|&th| {
                let mut s = T::zero();
                for l in 1..=n / 2 {
                    let lf = T::from_usize_lossy(l);
                    s = s + (two * lf * th).cos() / (T::lit(4.0) * lf * lf - T::one());
                }
                two / nf * (T::one() - two * s)
            })
            .collect();
        let bary: Vec<T> = theta
            .iter()
            .enumerate()
            .map(|(j, th)| if j % 2 == 0 { th.sin() } else { -th.sin() })
            .collect();
        let mut diff = vec![T::zero(); n * n];
        for i in 0..n {
            let mut row = T::zero();
            for j in 0..n {
                if i != j {
                    let d = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                    diff[i * n + j] = d;
                    row = row + d;
                }
            }
            diff[i * n + i] = -row;
        }
        Self { n, nodes, weights, bary, diff }
    }

    /// Values `a_j(u)` of all cardinal functions at `u`.
    pub fn cardinal_into(&self, u: T, out: &mut [T]) {
        debug_assert_eq!(out.len(), self.n);
        if let Some(k) = self.nodes.iter().position(|&x| x == u) {
            out.iter_mut().for_each(|o| *o = T::zero());
            out[k] = T::one();
            return;
        }
        let mut den = T::zero();
        for j in 0..self.n {
            let t = self.bary[j] / (u - self.nodes[j]);
            out[j] = t;
            den = den + t;
        }
        out.iter_mut().for_each(|o| *o = *o / den);
    }

    pub fn cardinal(&self, u: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        self.cardinal_into(u, &mut out);
        out
    }

    /// Tensor cardinal function `a_ij(u, v) = a_i(u) a_j(v)`.
    pub fn interp_coeff(&self, i: usize, j: usize, u: T, v: T) -> T {
        self.cardinal(u)[i] * self.cardinal(v)[j]
    }

    pub fn interpolate(&self, values: &[T], u: T) -> T {
        self.cardinal(u)
            .iter()
            .zip(values)
            .fold(T::zero(), |acc, (a, v)| acc + *a * *v)
    }

    pub fn integrate(&self, values: &[T]) -> T {
        self.weights
            .iter()
            .zip(values)
            .fold(T::zero(), |acc, (w, v)| acc + *w * *v)
    }

    /// Row-major `N×N` differentiation matrix at the nodes.
    pub fn diff_matrix(&self) -> &[T] {
        &self.diff
    }

    /// Parameter derivative of nodal data (strided access for tensor grids).
    pub fn differentiate_strided(&self, values: &[Complex<T>], offset: usize, stride: usize, out: &mut [Complex<T>]) {
        let n = self.n;
        for i in 0..n {
            let mut acc = Complex::new(T::zero(), T::zero());
            for j in 0..n {
                acc = acc + values[offset + j * stride] * self.diff[i * n + j];
            }
            out[offset + i * stride] = acc;
        }
    }

    pub fn differentiate(&self, values: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.n];
        self.differentiate_strided(values, 0, 1, &mut out);
        out
    }

    pub fn differentiate_real(&self, values: &[T]) -> Vec<T> {
        let n = self.n;
        (0..n)
            .map(|i| (0..n).fold(T::zero(), |acc, j| acc + self.diff[i * n + j] * values[j]))
            .collect()
    }
}

/// `η_p(s) = (1/2 − 1/p)s³ + s/p + 1/2` and its derivative.
pub fn eta<T: Real>(p: u32, s: T) -> (T, T) {
    let pf = T::from_u32(p).expect("order");
    let c3 = T::lit(0.5) - T::one() / pf;
    (c3 * s * s * s + s / pf + T::lit(0.5), T::lit(3.0) * c3 * s * s + T::one() / pf)
}

/// `χ_p(s) = 2η_p(s)^p/(η_p(s)^p + η_p(−s)^p) − 1` and its derivative.
pub fn chi<T: Real>(p: u32, s: T) -> (T, T) {
    let (c, dc) = chi_complement(p, s);
    (T::one() - c, dc)
}

/// `1 − χ_p(s) = 2η_p(−s)^p/(η_p(s)^p + η_p(−s)^p)`, accurate where `χ_p ≈ 1`,
/// and `χ_p′(s)`.
pub fn chi_complement<T: Real>(p: u32, s: T) -> (T, T) {
    let (e1, d1) = eta(p, s);
    let (e2, d2) = eta(p, -s);
    let pi = p as i32;
    let a = e1.powi(pi);
    let b = e2.powi(pi);
    let pf = T::from_u32(p).expect("order");
    let da = pf * e1.powi(pi - 1) * d1;
    // d/ds η(−s) = −η′(−s)
    let db = -pf * e2.powi(pi - 1) * d2;
    let two = T::lit(2.0);
    let sum = a + b;
    (two * b / sum, two * (da * b - a * db) / (sum * sum))
}

/// Graded change of variables `ξ_α` clustering points at `α`.
#[derive(Debug, Clone, Copy)]
pub struct GradedMap<T: Real> {
    pub alpha: T,
    pub p: u32,
}

impl<T: Real> GradedMap<T> {
    pub fn new(alpha: T, p: u32) -> Self {
        Self { alpha, p }
    }

    /// `(ξ_α(t) − α, ξ_α′(t))` without cancellation near `α`.
    pub fn offset(&self, t: T) -> (T, T) {
        let one = T::one();
        let two = T::lit(2.0);
        let half = T::lit(0.5);
        if self.alpha >= one {
            let (c, dc) = chi_complement(self.p, (t + one) * half);
            ((one - self.alpha) - two * c, dc)
        } else if self.alpha <= -one {
            let (c, dc) = chi_complement(self.p, (one - t) * half);
            ((-one - self.alpha) + two * c, dc)
        } else {
            let sg = if t >= T::zero() { one } else { -one };
            let (c, dc) = chi_complement(self.p, one - t.abs());
            ((sg - self.alpha) * c, (one - self.alpha * sg) * dc)
        }
    }

    /// `(ξ_α(t), ξ_α′(t))`, formed as offsets from the clustering point.
    pub fn eval(&self, t: T) -> (T, T) {
        let one = T::one();
        let two = T::lit(2.0);
        let half = T::lit(0.5);
        if self.alpha >= one {
            let (c, dc) = chi_complement(self.p, (t + one) * half);
            (one - two * c, dc)
        } else if self.alpha <= -one {
            let (c, dc) = chi_complement(self.p, (one - t) * half);
            (-one + two * c, dc)
        } else {
            let sg = if t >= T::zero() { one } else { -one };
            let (c, dc) = chi_complement(self.p, one - t.abs());
            (self.alpha + (sg - self.alpha) * c, (one - self.alpha * sg) * dc)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_rules() {
        let g = ChebGrid::<f64>::new(1);
        assert!(g.nodes[0].abs() < 1e-16 && (g.weights[0] - 2.0).abs() < 1e-15);
        let g = ChebGrid::<f64>::new(2);
        assert!((g.nodes[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((g.weights[0] - 1.0).abs() < 1e-15 && (g.weights[1] - 1.0).abs() < 1e-15);
        let g = ChebGrid::<f64>::new(5);
        let v: Vec<f64> = g.nodes.iter().map(|x| x.powi(4)).collect();
        assert!((g.integrate(&v) - 0.4).abs() < 1e-14);
    }

    #[test]
    fn fejer_weights_positive_and_sum_to_two() {
        for n in 1..=512 {
            let g = ChebGrid::<f64>::new(n);
            assert!(g.weights.iter().all(|&w| w > 0.0), "n = {n}");
            let s: f64 = g.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-12);
            assert!(g.nodes.windows(2).all(|w| w[0] > w[1]));
        }
    }

    #[test]
    fn exact_for_polynomials_below_n() {
        let n = 12;
        let g = ChebGrid::<f64>::new(n);
        for deg in 0..n {
            let v: Vec<f64> = g.nodes.iter().map(|x| x.powi(deg as i32)).collect();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((g.integrate(&v) - exact).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn cardinal_property() {
        let g = ChebGrid::<f64>::new(8);
        for m in 0..8 {
            for n in 0..8 {
                for i in 0..8 {
                    for j in 0..8 {
                        let a = g.interp_coeff(i, j, g.nodes[m], g.nodes[n]);
                        let e = if i == m && j == n { 1.0 } else { 0.0 };
                        assert!((a - e).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_interpolation_of_smooth_function() {
        use rand::{Rng, SeedableRng};
        let g = ChebGrid::<f64>::new(16);
        let f = |u: f64, v: f64| (3.0 * u).cos() * (2.0 * v).sin();
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        for _ in 0..100 {
            let (u, v) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let au = g.cardinal(u);
            let av = g.cardinal(v);
            let mut s = 0.0;
            let mut total = 0.0;
            for i in 0..16 {
                for j in 0..16 {
                    s += au[i] * av[j] * f(g.nodes[i], g.nodes[j]);
                    total += au[i] * av[j];
                }
            }
            assert!((total - 1.0).abs() < 1e-12);
            assert!((s - f(u, v)).abs() < 1e-9);
        }
    }

    #[test]
    fn differentiation_exact_for_low_degree() {
        let n = 10;
        let g = ChebGrid::<f64>::new(n);
        for deg in 1..=n - 2 {
            let v: Vec<f64> = g.nodes.iter().map(|x| x.powi(deg as i32)).collect();
            let d = g.differentiate_real(&v);
            for (x, dv) in g.nodes.iter().zip(d) {
                assert!((dv - deg as f64 * x.powi(deg as i32 - 1)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chi_example_and_endpoints() {
        let (c, _) = chi::<f64>(6, 0.5);
        let expect = 2.0 * 0.625f64.powi(6) / (0.625f64.powi(6) + 0.375f64.powi(6)) - 1.0;
        assert!((c - expect).abs() < 1e-15);
        assert!((c - 0.910_847).abs() < 1e-6);
        assert_eq!(chi::<f64>(6, 0.0).0, 0.0);
        assert!((chi::<f64>(6, 1.0).0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn graded_map_endpoints_and_centre() {
        for &alpha in &[-1.0f64, -0.7, 0.0, 0.3, 0.99, 1.0] {
            let m = GradedMap::new(alpha, 6);
            assert!((m.eval(-1.0).0 + 1.0).abs() < 1e-15);
            assert!((m.eval(1.0).0 - 1.0).abs() < 1e-15);
            if alpha.abs() < 1.0 {
                assert!((m.eval(0.0).0 - alpha).abs() < 1e-15);
                assert!((m.eval(-0.0).0 - alpha).abs() < 1e-15);
            }
            let mut prev = -1.0;
            for i in 1..=200 {
                let t = -1.0 + i as f64 / 100.0;
                let x = m.eval(t).0;
                assert!(x >= prev - 1e-15);
                prev = x;
            }
        }
    }

    #[test]
    fn graded_map_derivative_matches_fd() {
        let h = 1e-6;
        for &alpha in &[-1.0f64, -0.4, 0.25, 1.0] {
            let m = GradedMap::new(alpha, 6);
            for i in 0..50 {
                let t = -0.98 + 1.96 * (i as f64 + 0.5) / 50.0;
                if t.abs() < 2.0 * h {
                    continue;
                }
                let fd = (m.eval(t + h).0 - m.eval(t - h).0) / (2.0 * h);
                assert!((fd - m.eval(t).1).abs() < 1e-6);
            }
        }
    }
}

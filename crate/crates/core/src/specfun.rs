//! Hankel functions of the first kind, orders 0 and 1, for complex argument.
//!
//! Three regimes: ascending series with the logarithmic `Y` terms for small
//! `|z|`, Steed's continued fraction for the modified Bessel function `K` at
//! `−iz` in the middle range, and the Hankel asymptotic expansion for large
//! `|z|`. Every branch produces the scaled value `e^{−iz} H(z)`, which stays
//! representable when `Im z` is large.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use crate::scalar::branch_sqrt;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_RADIUS: f64 = 2.0;
const ASYMPTOTIC_RADIUS: f64 = 20.0;
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Which evaluation branch a given argument falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HankelMethod {
    Series,
    ContinuedFraction,
    Asymptotic,
}

pub fn method_for(z: Complex64) -> HankelMethod {
    let r = z.norm();
    if r <= SERIES_RADIUS {
        HankelMethod::Series
    } else if r < ASYMPTOTIC_RADIUS {
        HankelMethod::ContinuedFraction
    } else {
        HankelMethod::Asymptotic
    }
}

/// `(e^{−iz} H₀⁽¹⁾(z), e^{−iz} H₁⁽¹⁾(z))`.
pub fn hankel01_scaled(z: Complex64) -> Result<(Complex64, Complex64)> {
    hankel01_scaled_with(z, method_for(z))
}

/// Scaled pair from an explicitly chosen branch; used to cross-check branches.
pub fn hankel01_scaled_with(z: Complex64, method: HankelMethod) -> Result<(Complex64, Complex64)> {
    if z.norm() == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain(format!("Hankel function at z = {z}")));
    }
    Ok(match method {
        HankelMethod::Series => {
            let (h0, h1) = series(z);
            let s = (-I * z).exp();
            (h0 * s, h1 * s)
        }
        HankelMethod::ContinuedFraction => steed_cf2(z)?,
        HankelMethod::Asymptotic => asymptotic(z),
    })
}

/// `(H₀⁽¹⁾(z), H₁⁽¹⁾(z))`. Underflows gracefully to zero for large `Im z`.
pub fn hankel01(z: Complex64) -> Result<(Complex64, Complex64)> {
    let (h0, h1) = hankel01_scaled(z)?;
    let e = (I * z).exp();
    Ok((h0 * e, h1 * e))
}

/// `H_order⁽¹⁾(z)` for order 0 or 1.
pub fn hankel1(order: u32, z: Complex64) -> Result<Complex64> {
    let (h0, h1) = hankel01(z)?;
    match order {
        0 => Ok(h0),
        1 => Ok(h1),
        _ => Err(Error::Domain(format!("Hankel order {order} not supported"))),
    }
}

/// `e^{−iz} H_order⁽¹⁾(z)` for order 0 or 1.
pub fn hankel1_scaled(order: u32, z: Complex64) -> Result<Complex64> {
    let (h0, h1) = hankel01_scaled(z)?;
    match order {
        0 => Ok(h0),
        1 => Ok(h1),
        _ => Err(Error::Domain(format!("Hankel order {order} not supported"))),
    }
}

fn series(z: Complex64) -> (Complex64, Complex64) {
    let w = z * z * 0.25;
    let mut term = Complex64::new(1.0, 0.0);
    let (mut j0, mut j1) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    let (mut y0s, mut y1s) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    let mut harm = 0.0;
    for k in 0..200usize {
        let t1 = term / (k + 1) as f64;
        j0 += term;
        j1 += t1;
        y0s -= term * harm;
        // ψ(k+1) + ψ(k+2) = −2γ + 2H_k + 1/(k+1)
        y1s += t1 * (-2.0 * EULER_GAMMA + 2.0 * harm + 1.0 / (k + 1) as f64);
        let kk = (k + 1) as f64;
        harm += 1.0 / kk;
        term *= -w / (kk * kk);
        if term.norm() * (1.0 + harm) < 1e-17 * (j0.norm() + y0s.norm()) {
            break;
        }
    }
    let half = z * 0.5;
    j1 *= half;
    let lg = half.ln();
    let y0 = ((lg + EULER_GAMMA) * j0 + y0s) * (2.0 / PI);
    let y1 = lg * j1 * (2.0 / PI) - 2.0 / (PI * z) - half * y1s / PI;
    (j0 + I * y0, j1 + I * y1)
}

/// Scaled `K₀, K₁` at `w = −iz` by Steed's CF2 with the Temme normalization sum.
fn steed_cf2(z: Complex64) -> Result<(Complex64, Complex64)> {
    let x = -I * z;
    let one = Complex64::new(1.0, 0.0);
    let mut b = (one + x) * 2.0;
    let mut d = one / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = Complex64::new(0.0, 0.0);
    let mut q2 = one;
    let a1 = 0.25;
    let mut q = Complex64::new(a1, 0.0);
    let mut c = a1;
    let mut a = -a1;
    let mut s = one + q * delh;
    let mut converged = false;
    for i in 1..10_000usize {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = one / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).norm() < 1e-16 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Domain(format!("continued fraction failed at z = {z}")));
    }
    h *= a1;
    let k0 = (Complex64::new(FRAC_PI_2, 0.0) / x).sqrt() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    // H₀(z) = (2/(πi)) K₀(−iz), H₁(z) = −(2/π) K₁(−iz); scalings coincide since e^{x} = e^{−iz}
    Ok((k0 * (2.0 / PI) * (-I), -k1 * (2.0 / PI)))
}

fn asymptotic(z: Complex64) -> (Complex64, Complex64) {
    let pref = (Complex64::new(2.0 / PI, 0.0) / z).sqrt();
    let sum = |nu: f64| {
        let mu = 4.0 * nu * nu;
        let mut total = Complex64::new(1.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        let mut last = f64::INFINITY;
        for k in 1..60usize {
            let kk = k as f64;
            let odd = 2.0 * kk - 1.0;
            term *= I * (mu - odd * odd) / (8.0 * kk * z);
            let mag = term.norm();
            if mag > last {
                break;
            }
            total += term;
            last = mag;
            if mag < 1e-17 * total.norm() {
                break;
            }
        }
        total
    };
    let h0 = pref * Complex64::from_polar(1.0, -FRAC_PI_4) * sum(0.0);
    let h1 = pref * Complex64::from_polar(1.0, -FRAC_PI_2 - FRAC_PI_4) * sum(1.0);
    (h0, h1)
}

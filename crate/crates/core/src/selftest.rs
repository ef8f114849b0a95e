//! Quick invariant checks across the modules, run by the `selftest` command.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::config::{AnyProblem, ProblemSpec, SceneName};
use crate::driver::Check;
use crate::error::Result;
use crate::geometry::{closed_curve_scene, BoundaryCondition, TrigCurve};
use crate::operators::{Discretization, LayerOps, QuadParams, Storage};
use crate::solve::{calderon_residuals, error_linf, gmres, solve, transmission_operator, GmresParams};
use crate::specfun::hankel01;

fn check(name: &str, outcome: Result<(bool, String)>) -> Check {
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    Check { name: name.into(), passed, detail }
}

fn hankel_values() -> Result<(bool, String)> {
    // H₀⁽¹⁾(1), H₁⁽¹⁾(1) and H₀⁽¹⁾(10)
    let cases = [
        (1.0, Complex64::new(0.765_197_686_557_966_6, 0.088_256_964_215_676_96), 0),
        (1.0, Complex64::new(0.440_050_585_744_933_5, -0.781_212_821_300_288_7), 1),
        (10.0, Complex64::new(-0.245_935_764_451_348_3, 0.055_671_167_283_599_4), 0),
    ];
    let mut worst = 0.0f64;
    for (x, want, order) in cases {
        let (h0, h1) = hankel01(Complex64::new(x, 0.0))?;
        let got = if order == 0 { h0 } else { h1 };
        worst = worst.max((got - want).norm() / want.norm());
    }
    Ok((worst <= 1e-12, format!("max relative error {worst:.3e}")))
}

fn gmres_small() -> Result<(bool, String)> {
    let a = [[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]];
    let want = [Complex64::new(1.0, 0.0), Complex64::new(0.0, -2.0), Complex64::new(0.5, 0.5)];
    let apply = |x: &[Complex64]| -> Result<Vec<Complex64>> {
        Ok((0..3).map(|i| (0..3).map(|j| a[i][j] * x[j]).sum()).collect())
    };
    let b = apply(&want)?;
    let res = gmres(apply, &b, &GmresParams::default())?;
    let err = res.x.iter().zip(&want).map(|(x, w)| (x - w).norm()).fold(0.0, f64::max);
    Ok((res.converged && err <= 1e-12 && res.iterations <= 3, format!("{} iterations, error {err:.3e}", res.iterations)))
}

fn closed_normal_integral() -> Result<(bool, String)> {
    let scene = closed_curve_scene(TrigCurve::kite([0.0, 3.0], 1.0), 6);
    let disc = Discretization::new(&scene, QuadParams { n: 32, ..Default::default() })?;
    let mut s = [0.0f64; 2];
    for (f, w) in disc.frames.iter().zip(&disc.weights) {
        s[0] += f.normal[0] * w;
        s[1] += f.normal[1] * w;
    }
    let m = s[0].hypot(s[1]);
    Ok((m <= 1e-8, format!("|∮ν ds| = {m:.3e}")))
}

fn resolve2(spec: &ProblemSpec) -> Result<crate::solve::Problem<2>> {
    match spec.resolve()? {
        AnyProblem::Two(p) => Ok(p),
        AnyProblem::Three(_) => unreachable!("planar scene"),
    }
}

fn residuals() -> Result<(bool, String)> {
    let p = resolve2(&ProblemSpec { n: Some(64), ..Default::default() })?;
    let [r1, r2] = calderon_residuals(&p)?;
    Ok((r1 <= 1e-8 && r2 <= 1e-6, format!("N = 64: {r1:.3e}, {r2:.3e}")))
}

fn manufactured_neumann() -> Result<(bool, String)> {
    let p = resolve2(&ProblemSpec { n: Some(32), bc: Some(BoundaryCondition::Neumann), ..Default::default() })?;
    let sol = solve(&p)?;
    let pts = &p.scene.test_points;
    let err = error_linf(&sol.scattered(pts)?, &sol.exact(pts)?.expect("manufactured"))?;
    Ok((err <= 1e-6, format!("disc2d N = 32: eps_inf {err:.3e}, {} iterations", sol.stats.iterations)))
}

fn equal_wavenumbers() -> Result<(bool, String)> {
    let spec = ProblemSpec { scene: SceneName::Bump2layer, k2: Some(PI), n: Some(16), ..Default::default() };
    let p = resolve2(&spec)?;
    let disc = Arc::new(Discretization::new(&p.scene, p.quad)?);
    let ops = LayerOps::build(&disc, &[PI, PI], [true, true, true], Storage::Auto)?;
    let x: Vec<Complex64> = (0..2 * disc.len()).map(|i| Complex64::new((0.7 * i as f64).sin(), (1.3 * i as f64).cos())).collect();
    let y = transmission_operator(&ops, &x)?;
    let err = y.iter().zip(&x).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok((err <= 1e-12, format!("‖Ax − x‖∞ = {err:.3e}")))
}

/// Runs every check; a failed check never aborts the others.
pub fn run_all() -> Vec<Check> {
    vec![
        check("hankel-spot-values", hankel_values()),
        check("gmres-small-system", gmres_small()),
        check("closed-curve-normal-integral", closed_normal_integral()),
        check("boundary-identity-residuals", residuals()),
        check("manufactured-neumann-disc", manufactured_neumann()),
        check("equal-wavenumber-transmission", equal_wavenumbers()),
    ]
}

use std::sync::Arc;

use num_complex::Complex64;

use pmlbie::config::{AnyProblem, ProblemSpec, SceneName};
use pmlbie::geometry::{BoundaryCondition, PatchKind};
use pmlbie::kernels::{point_source, LayerKind};
use pmlbie::operators::{Discretization, LayerOps, QuadParams, Storage};
use pmlbie::solve::{discretize, solve, Problem};

fn disc2d(bc: BoundaryCondition, n: usize, delta: f64) -> Problem<2> {
    let spec = ProblemSpec { scene: SceneName::Disc2d, bc: Some(bc), n: Some(n), delta, ..Default::default() };
    match spec.resolve().unwrap() {
        AnyProblem::Two(p) => p,
        AnyProblem::Three(_) => unreachable!(),
    }
}

fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn densities_decay_toward_truncation_ends() {
    for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
        let sol = solve(&disc2d(bc, 32, 0.1)).unwrap();
        let density = if bc == BoundaryCondition::Dirichlet { &sol.normal_trace } else { &sol.trace };
        let p = &sol.disc.profile;
        let outer = 0.9 * (p.a[0] + p.t[0]);
        let edge = (0..sol.disc.len())
            .filter(|&i| sol.problem.scene.patches[sol.disc.patch_of(i)].kind() == PatchKind::Flat)
            .filter(|&i| sol.disc.frames[i].point[0].abs() >= outer)
            .map(|i| density[i].norm())
            .fold(0.0, f64::max);
        let max = max_norm(density);
        assert!(edge <= 1e-3 * max, "{bc:?}: edge {edge:e} vs max {max:e}");
    }
}

/// Neumann trace error against the exact point-source values at the nodes.
fn neumann_trace(delta: f64) -> (Vec<Complex64>, f64) {
    let problem = disc2d(BoundaryCondition::Neumann, 32, delta);
    let sol = solve(&problem).unwrap();
    let z = sol.problem.scene.interior_point;
    let exact: Vec<Complex64> = sol
        .disc
        .frames
        .iter()
        .map(|f| point_source(&z, problem.k, &f.point.map(|v| Complex64::new(v, 0.0))).unwrap().0)
        .collect();
    let err = sol.trace.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / max_norm(&exact);
    (sol.trace, err)
}

#[test]
fn adjacency_distance_does_not_change_densities_beyond_discretization_error() {
    let (coarse, err_coarse) = neumann_trace(0.1);
    let (wide, err_wide) = neumann_trace(0.2);
    let diff = coarse.iter().zip(&wide).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / max_norm(&coarse);
    assert!(diff < err_coarse.max(err_wide), "diff {diff:e}, errors {err_coarse:e} {err_wide:e}");
}

#[test]
fn adjacent_quadrature_is_saturated_at_default_resolution() {
    let problem = disc2d(BoundaryCondition::Dirichlet, 16, 0.1);
    let build = |n_beta: usize| {
        let disc = Arc::new(Discretization::new(&problem.scene, QuadParams { n_beta, ..problem.quad }).unwrap());
        LayerOps::build(&disc, &[problem.k], [true, true, true], Storage::Dense).unwrap().remove(0)
    };
    let base = build(200);
    let fine = build(400);
    for kind in LayerKind::ALL {
        let a = base.matrix(kind).unwrap();
        let b = fine.matrix(kind).unwrap();
        let worst = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(worst <= 1e-10, "{kind:?}: {worst:e}");
    }
}

#[test]
fn operator_norms_are_stable_under_refinement() {
    let mut gains: Vec<[f64; 3]> = Vec::new();
    for n in [16, 32, 64] {
        let problem = disc2d(BoundaryCondition::Dirichlet, n, 0.1);
        let disc = discretize(&problem).unwrap();
        let ops = LayerOps::build(&disc, &[problem.k], [true, true, true], Storage::MatrixFree).unwrap().remove(0);
        let phi: Vec<Complex64> = disc
            .frames
            .iter()
            .map(|f| Complex64::new((0.7 * f.point[0]).cos(), (1.3 * f.point[1]).sin()))
            .collect();
        let input = max_norm(&phi);
        let mut g = [0.0; 3];
        for (slot, kind) in g.iter_mut().zip(LayerKind::ALL) {
            *slot = max_norm(&ops.apply(kind, &phi).unwrap()) / input;
        }
        gains.push(g);
    }
    for j in 0..3 {
        let hi = gains.iter().map(|g| g[j]).fold(0.0, f64::max);
        let lo = gains.iter().map(|g| g[j]).fold(f64::INFINITY, f64::min);
        assert!(hi <= 1.5 * lo, "operator {j}: {gains:?}");
    }
}

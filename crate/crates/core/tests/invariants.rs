use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use pmlbie::config::{AnyProblem, GeometrySpec, PmlSpec, ProblemSpec, RunConfig, SceneName};
use pmlbie::geometry::BoundaryCondition;
use pmlbie::kernels::{layer_kernels, KernelPoint};
use pmlbie::pml::{complex_distance, PmlProfile};
use pmlbie::solve::{discretize, gmres, GmresParams};

fn profile2() -> PmlProfile<f64> {
    PmlProfile::new(vec![2.0, 2.0], vec![2.0, 2.0], 6.0, 6).unwrap()
}

fn profile3() -> PmlProfile<f64> {
    PmlProfile::new(vec![2.0, 2.0, 4.0], vec![2.0, 2.0, 2.0], 6.0, 6).unwrap()
}

fn unit(angle: f64) -> [f64; 2] {
    [angle.cos(), angle.sin()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn stretched_distance_has_nonnegative_real_part(
        x in prop::array::uniform2(-4.0f64..4.0),
        y in prop::array::uniform2(-4.0f64..4.0),
    ) {
        let p = profile2();
        let rho = complex_distance(&p.stretch(x), &p.stretch(y));
        prop_assert!(rho.re >= 0.0, "{rho}");
    }

    #[test]
    fn stretched_distance_3d_has_nonnegative_real_part(
        x in prop::array::uniform3(-6.0f64..6.0),
        y in prop::array::uniform3(-6.0f64..6.0),
    ) {
        let p = profile3();
        let rho = complex_distance(&p.stretch(x), &p.stretch(y));
        prop_assert!(rho.re >= 0.0, "{rho}");
    }

    #[test]
    fn distance_is_euclidean_inside_box(
        x in prop::array::uniform2(-2.0f64..2.0),
        y in prop::array::uniform2(-2.0f64..2.0),
    ) {
        let p = profile2();
        let rho = complex_distance(&p.stretch(x), &p.stretch(y));
        let d = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
        prop_assert_eq!(rho.im, 0.0);
        prop_assert!((rho.re - d).abs() <= 1e-15 * d.max(1.0));
    }

    #[test]
    fn stretch_is_identity_inside_box(x in prop::array::uniform3(-2.0f64..2.0)) {
        let s = profile3().stretch(x);
        for j in 0..3 {
            prop_assert_eq!(s.xs[j], Complex64::new(x[j], 0.0));
            prop_assert_eq!(s.alpha[j], Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn layer_kernels_are_reciprocal(
        x in prop::array::uniform2(-4.0f64..4.0),
        y in prop::array::uniform2(-4.0f64..4.0),
        nx in 0.0f64..2.0 * PI,
        ny in 0.0f64..2.0 * PI,
        k in 0.5f64..30.0,
    ) {
        let d = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
        prop_assume!(d > 1e-6);
        let p = profile2();
        let px = KernelPoint::from_parts(p.stretch(x), unit(nx), 1.0);
        let py = KernelPoint::from_parts(p.stretch(y), unit(ny), 1.0);
        let a = layer_kernels(&px, &py, k).unwrap();
        let b = layer_kernels(&py, &px, k).unwrap();
        let scale = a.iter().map(|z| z.norm()).fold(1e-300, f64::max);
        prop_assert!((a[0] - b[0]).norm() <= 1e-13 * scale);
        prop_assert!((a[2] - b[1]).norm() <= 1e-13 * scale);
    }

    #[test]
    fn gmres_residual_history_is_monotone(
        seed in any::<u64>(),
        n in 2usize..24,
        shift in 1.0f64..4.0,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let a: Vec<Complex64> = (0..n * n)
            .map(|idx| {
                let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / n as f64;
                if idx % (n + 1) == 0 { z + shift } else { z }
            })
            .collect();
        let b: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let apply = |v: &[Complex64]| -> pmlbie::Result<Vec<Complex64>> {
            Ok((0..n).map(|i| (0..n).map(|j| a[i * n + j] * v[j]).sum()).collect())
        };
        let params = GmresParams { tol: 1e-12, restart: 50, max_iter: 50 };
        let res = gmres(apply, &b, &params).unwrap();
        prop_assert!(res.converged);
        for w in res.history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", res.history);
        }
        let ax = apply(&res.x).unwrap();
        let r: f64 = ax.iter().zip(&b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
        let bn: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(r <= 1e-10 * bn);

        let zero = gmres(apply, &vec![Complex64::new(0.0, 0.0); n], &params).unwrap();
        prop_assert!(zero.x.iter().all(|z| z.norm() == 0.0));
    }
}

fn spec_strategy() -> impl Strategy<Value = ProblemSpec> {
    (
        prop_oneof![Just(SceneName::Disc2d), Just(SceneName::Kite2d), Just(SceneName::Bump2layer)],
        0.5f64..12.0,
        (4usize..40).prop_map(|h| 2 * h),
        0.5f64..3.0,
        2.0f64..10.0,
        2u32..8,
        prop::option::of(1usize..4),
    )
        .prop_map(|(scene, k, n, t, s, p, absorbing)| {
            let bc = if scene == SceneName::Bump2layer { BoundaryCondition::Transmission } else { BoundaryCondition::Neumann };
            ProblemSpec {
                scene,
                bc: Some(bc),
                k,
                n: Some(n),
                pml: PmlSpec { t_over_lambda: t, s, p, ..Default::default() },
                geometry: GeometrySpec { absorbing_patches: absorbing, ..Default::default() },
                ..Default::default()
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_json_round_trip(spec in spec_strategy()) {
        let cfg = RunConfig { problem: spec, ..Default::default() };
        let text = serde_json::to_string(&cfg).unwrap();
        let back = RunConfig::from_json(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        let resolved = cfg.problem.resolved().unwrap();
        prop_assert_eq!(resolved.resolved().unwrap(), resolved);
    }

    #[test]
    fn dof_count_is_patches_times_nodes(spec in spec_strategy()) {
        let n = spec.n();
        match spec.resolve().unwrap() {
            AnyProblem::Two(p) => {
                let disc = discretize(&p).unwrap();
                prop_assert_eq!(disc.len(), p.scene.len() * n);
            }
            AnyProblem::Three(_) => unreachable!(),
        }
    }
}

#[test]
fn ball_dof_count_is_patches_times_nodes_squared() {
    let spec = ProblemSpec { scene: SceneName::Ball3d, n: Some(6), ..Default::default() };
    let AnyProblem::Three(p) = spec.resolve().unwrap() else { panic!("ball is 3D") };
    let disc = discretize(&p).unwrap();
    assert_eq!(disc.len(), p.scene.len() * 36);
}

#[test]
fn single_layer_kernel_has_point_singularity_in_3d() {
    let p = profile3();
    let normal = [0.0, 0.0, 1.0];
    let x = KernelPoint::from_parts(p.stretch([0.3, -0.2, 1.0]), normal, 1.0);
    for h in [1e-2, 1e-4, 1e-6, 1e-8] {
        let y = KernelPoint::from_parts(p.stretch([0.3 + h, -0.2, 1.0]), normal, 1.0);
        let s = layer_kernels(&x, &y, PI).unwrap()[0];
        assert!((h * s - 1.0 / (4.0 * PI)).norm() < 2.0 * h, "h = {h}: {}", h * s);
    }
}

use num_complex::Complex64;
use pmlbie::specfun::{branch_sqrt, hankel01, hankel01_scaled};
use proptest::prelude::*;

const ORACLE: &str = include_str!("data/hankel_oracle.csv");

fn oracle_rows() -> Vec<(Complex64, Complex64, Complex64)> {
    ORACLE
        .lines()
        .skip(1)
        .map(|line| {
            let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            (
                Complex64::new(v[0], v[1]),
                Complex64::new(v[2], v[3]),
                Complex64::new(v[4], v[5]),
            )
        })
        .collect()
}

#[test]
fn scaled_hankel_matches_series_oracle() {
    let rows = oracle_rows();
    assert_eq!(rows.len(), 200);
    let mut worst = 0.0f64;
    for (z, h0, h1) in rows {
        let (a0, a1) = hankel01_scaled(z).unwrap();
        worst = worst.max((a0 - h0).norm() / h0.norm());
        worst = worst.max((a1 - h1).norm() / h1.norm());
    }
    assert!(worst <= 1e-12, "worst relative error {worst:e}");
}

#[test]
fn unscaled_hankel_matches_oracle_where_representable() {
    for (z, h0, h1) in oracle_rows() {
        if z.im > 600.0 {
            continue;
        }
        let e = (Complex64::i() * z).exp();
        let (a0, a1) = hankel01(z).unwrap();
        assert!((a0 - h0 * e).norm() <= 1e-12 * (h0 * e).norm(), "{z}");
        assert!((a1 - h1 * e).norm() <= 1e-12 * (h1 * e).norm(), "{z}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn sqrt_squares_back(re in -1e6f64..1e6, im in -1e6f64..1e6) {
        let z = Complex64::new(re, im);
        let w = branch_sqrt(z);
        prop_assert!((w * w - z).norm() <= 1e-15 * z.norm().max(1e-300) * 4.0);
        prop_assert!(w.re >= 0.0);
        let arg = w.arg();
        prop_assert!(arg > -std::f64::consts::FRAC_PI_2 && arg <= std::f64::consts::FRAC_PI_2);
    }
}

#[test]
fn sqrt_squares_back_bulk() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    for _ in 0..100_000 {
        let r: f64 = rng.gen_range(0.0..1e6);
        let th: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let z = Complex64::from_polar(r, th);
        let w = branch_sqrt(z);
        assert!((w * w - z).norm() <= 4e-16 * r.max(1e-300) * 2.0);
    }
}

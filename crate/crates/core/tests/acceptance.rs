//! One line per acceptance criterion; exits nonzero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use pmlbie::config::{AnyProblem, Experiment, ProblemSpec, ReferenceMode, RunConfig, SceneName};
use pmlbie::driver::{run, write_artifacts, Row};
use pmlbie::geometry::BoundaryCondition;
use pmlbie::operators::Discretization;
use pmlbie::solve::{boundary_data, calderon_residuals};
use pmlbie::specfun::hankel01_scaled;

type Outcome = Result<(bool, String), String>;

fn rows(cfg: RunConfig) -> Result<Vec<Row>, String> {
    let report = run(&cfg).map_err(|e| e.to_string())?;
    match report.error {
        Some(e) => Err(e),
        None => Ok(report.rows),
    }
}

fn spec(scene: SceneName, bc: BoundaryCondition, k: f64) -> ProblemSpec {
    ProblemSpec { scene, bc: Some(bc), k, ..Default::default() }
}

fn convergence(spec: ProblemSpec, ns: &[usize]) -> Result<Vec<Row>, String> {
    rows(RunConfig { problem: spec, experiment: Experiment::Convergence { ns: ns.to_vec() }, ..Default::default() })
}

fn eps(r: &Row) -> f64 {
    r.eps_inf.unwrap_or(f64::NAN)
}

const BCS: [BoundaryCondition; 2] = [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann];

/// Convergence tables at `k = π`, N = 16, 32, 64, for (disc, kite) × (Dirichlet, Neumann).
struct Tables {
    runs: Vec<(SceneName, BoundaryCondition, Vec<Row>)>,
}

impl Tables {
    fn compute() -> Result<Self, String> {
        let mut runs = Vec::new();
        for scene in [SceneName::Disc2d, SceneName::Kite2d] {
            for bc in BCS {
                runs.push((scene, bc, convergence(spec(scene, bc, PI), &[16, 32, 64])?));
            }
        }
        Ok(Self { runs })
    }

    fn get(&self, scene: SceneName, bc: BoundaryCondition) -> &[Row] {
        &self.runs.iter().find(|(s, b, _)| *s == scene && *b == bc).expect("computed").2
    }
}

fn table1(t: &Tables) -> Outcome {
    let d = eps(&t.get(SceneName::Disc2d, BoundaryCondition::Dirichlet)[2]);
    let n = eps(&t.get(SceneName::Disc2d, BoundaryCondition::Neumann)[2]);
    Ok((d <= 1e-9 && n <= 1e-10, format!("disc2d k=π N=64: Dirichlet {d:.3e} (≤1e-9), Neumann {n:.3e} (≤1e-10)")))
}

fn table2(t: &Tables) -> Outcome {
    let d = eps(&t.get(SceneName::Kite2d, BoundaryCondition::Dirichlet)[2]);
    let n = eps(&t.get(SceneName::Kite2d, BoundaryCondition::Neumann)[2]);
    let mut hi = Vec::new();
    for bc in BCS {
        let s = ProblemSpec { n: Some(64), ..spec(SceneName::Kite2d, bc, 10.0 * PI) };
        hi.push(eps(&rows(RunConfig { problem: s, ..Default::default() })?[0]));
    }
    let ok = d <= 1e-8 && n <= 1e-8 && hi.iter().all(|e| *e <= 1e-5);
    Ok((
        ok,
        format!(
            "kite2d N=64: k=π Dirichlet {d:.3e}, Neumann {n:.3e} (≤1e-8); k=10π Dirichlet {:.3e}, Neumann {:.3e} (≤1e-5)",
            hi[0], hi[1]
        ),
    ))
}

fn second_kind(t: &Tables) -> Outcome {
    let published = |scene, bc| match (scene, bc) {
        (SceneName::Disc2d, BoundaryCondition::Dirichlet) => [16.0, 13.0, 13.0],
        (SceneName::Disc2d, _) => [12.0, 12.0, 12.0],
        (_, BoundaryCondition::Dirichlet) => [22.0, 22.0, 22.0],
        _ => [21.0, 21.0, 21.0],
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for (scene, bc, rows) in &t.runs {
        let it: Vec<usize> = rows.iter().map(|r| r.n_iter).collect();
        let spread = it.iter().max().unwrap() - it.iter().min().unwrap();
        let within = it.iter().zip(published(*scene, *bc)).all(|(&a, p)| a as f64 <= 3.0 * p && a as f64 >= p / 3.0);
        ok &= spread <= 2 && within;
        parts.push(format!("{scene:?}/{bc:?} {it:?}"));
    }
    Ok((ok, format!("N_iter at N=16,32,64: {}", parts.join(", "))))
}

fn pml_sweep() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for bc in BCS {
        let s = ProblemSpec { n: Some(64), ..spec(SceneName::Disc2d, bc, 2.0 * PI) };
        let r = rows(RunConfig {
            problem: s,
            experiment: Experiment::PmlSweep { t_over_lambda: vec![0.5, 2.0, 2.5, 3.0] },
            ..Default::default()
        })?;
        let e: Vec<f64> = r.iter().map(eps).collect();
        let flat = e[1..].iter().cloned().fold(0.0, f64::max) / e[1..].iter().cloned().fold(f64::INFINITY, f64::min);
        ok &= e[1] <= 1e-2 * e[0] && flat <= 10.0;
        parts.push(format!("{bc:?} T/λ=0.5,2,2.5,3: {:.2e} {:.2e} {:.2e} {:.2e}", e[0], e[1], e[2], e[3]));
    }
    Ok((ok, format!("disc2d k=2π N=64: {}", parts.join("; "))))
}

fn calderon() -> Outcome {
    let mut r = Vec::new();
    for n in [16, 32, 64] {
        let s = ProblemSpec { n: Some(n), ..Default::default() };
        let AnyProblem::Two(p) = s.resolve().map_err(|e| e.to_string())? else { unreachable!() };
        r.push(calderon_residuals(&p).map_err(|e| e.to_string())?);
    }
    let decays = (0..2).all(|i| r[0][i] >= 1e2 * r[1][i] && r[1][i] >= 1e2 * r[2][i]);
    let floor = r[2][0] <= 1e-6 && r[2][1] <= 1e-6;
    Ok((
        decays && floor,
        format!(
            "disc2d k=π N=16,32,64: first identity {:.2e} {:.2e} {:.2e}; second identity {:.2e} {:.2e} {:.2e}",
            r[0][0], r[1][0], r[2][0], r[0][1], r[1][1], r[2][1]
        ),
    ))
}

fn maue() -> Outcome {
    let gap = common::maue_gap(PI, 32);
    Ok((gap <= 1e-8, format!("unit circle, layer off, N=32: max gap {gap:.3e} (≤1e-8)")))
}

fn ball() -> Outcome {
    let one = |n: usize| -> Result<(f64, f64), String> {
        let s = ProblemSpec { n: Some(n), ..spec(SceneName::Ball3d, BoundaryCondition::Dirichlet, PI) };
        let t = Instant::now();
        let r = rows(RunConfig { problem: s, ..Default::default() })?;
        Ok((eps(&r[0]), t.elapsed().as_secs_f64()))
    };
    let (e16, t16) = one(16)?;
    let mut detail = format!("ball3d k=π 42 patches: N=16 {e16:.3e} (≤1e-4, {t16:.0} s)");
    let mut ok = e16 <= 1e-4;
    if std::env::var_os("PMLBIE_ACCEPT_3D_FULL").is_some() {
        let (e32, t32) = one(32)?;
        ok &= e32 <= 1e-5;
        detail.push_str(&format!("; N=32 {e32:.3e} (≤1e-5, {t32:.0} s)"));
    } else {
        detail.push_str("; N=32 not run (set PMLBIE_ACCEPT_3D_FULL=1)");
    }
    Ok((ok, detail))
}

fn transmission() -> Outcome {
    let s = ProblemSpec { scene: SceneName::Bump2layer, ..Default::default() };
    let r = rows(RunConfig {
        problem: s.clone(),
        experiment: Experiment::Convergence { ns: vec![16, 32, 48, 64] },
        reference: Some(ReferenceMode::SelfConvergence { n_ref: 96 }),
        ..Default::default()
    })?;
    let e: Vec<f64> = r.iter().map(eps).collect();
    let spectral = e.windows(2).all(|w| w[1] < 1e-2 * w[0]) && e[3] <= 1e-6;
    let same = ProblemSpec { k2: Some(s.k), n: Some(32), ..s };
    let AnyProblem::Two(p) = same.resolve().map_err(|e| e.to_string())? else { unreachable!() };
    let disc = Discretization::new(&p.scene, p.quad).map_err(|e| e.to_string())?;
    let data = boundary_data(&p, &disc).map_err(|e| e.to_string())?;
    let zero = data.f.iter().chain(&data.g).map(|z| z.norm()).fold(0.0, f64::max);
    Ok((
        spectral && zero <= 1e-12,
        format!(
            "bump2layer k₁=π k₂=2π vs N=96: {:.2e} {:.2e} {:.2e} {:.2e} at N=16,32,48,64 (≤1e-6 at 64); k₁=k₂ data {zero:.1e}",
            e[0], e[1], e[2], e[3]
        ),
    ))
}

fn hankel() -> Outcome {
    let text = include_str!("data/hankel_oracle.csv");
    let mut worst = 0.0f64;
    let mut count = 0;
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        let z = Complex64::new(v[0], v[1]);
        let (h0, h1) = hankel01_scaled(z).map_err(|e| e.to_string())?;
        worst = worst.max((h0 - Complex64::new(v[2], v[3])).norm() / Complex64::new(v[2], v[3]).norm());
        worst = worst.max((h1 - Complex64::new(v[4], v[5])).norm() / Complex64::new(v[4], v[5]).norm());
        count += 1;
    }
    Ok((count == 200 && worst <= 1e-12, format!("{count} points, |z| ∈ [1e-3, 1e3]: max relative error {worst:.2e} (≤1e-12)")))
}

fn determinism() -> Outcome {
    let cfg = RunConfig {
        problem: ProblemSpec { bc: Some(BoundaryCondition::Neumann), ..Default::default() },
        experiment: Experiment::Convergence { ns: vec![16, 32] },
        ..Default::default()
    };
    let mut tables = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let report = run(&cfg).map_err(|e| e.to_string())?;
        write_artifacts(&cfg, &report, dir.path()).map_err(|e| e.to_string())?;
        tables.push(std::fs::read(dir.path().join("table.csv")).map_err(|e| e.to_string())?);
    }
    Ok((tables[0] == tables[1], format!("two disc2d convergence runs: table.csv {} bytes, identical: {}", tables[0].len(), tables[0] == tables[1])))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let tables = Tables::compute();
    let with_tables = |f: fn(&Tables) -> Outcome| -> Outcome {
        match &tables {
            Ok(t) => f(t),
            Err(e) => Err(e.clone()),
        }
    };
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("table1-disc", Box::new(|| with_tables(table1))),
        ("table2-kite", Box::new(|| with_tables(table2))),
        ("second-kind-iterations", Box::new(|| with_tables(second_kind))),
        ("pml-sweep", Box::new(pml_sweep)),
        ("boundary-identity-residuals", Box::new(calderon)),
        ("maue-oracle", Box::new(maue)),
        ("ball3d-dirichlet", Box::new(ball)),
        ("transmission-bump", Box::new(transmission)),
        ("hankel-oracle", Box::new(hankel)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (name, f) in &criteria {
        let t = Instant::now();
        let (ok, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        failed += usize::from(!ok);
        println!("{} {name}: {detail} [{:.1} s]", if ok { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} criteria passed in {:.0} s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

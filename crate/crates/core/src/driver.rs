//! Experiment drivers and their artifacts: `table.csv`, `sweep.csv`,
//! `field.csv` and `run.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::info;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::config::{AnyProblem, Experiment, FieldGrid, ProblemSpec, ReferenceMode, RunConfig};
use crate::error::{Error, Result};
use crate::solve::{error_linf, solve, Problem, SolveStats};

/// One solve of an experiment.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub k: f64,
    pub n: usize,
    pub n_dof: usize,
    pub n_iter: usize,
    pub residual: f64,
    pub eps_inf: Option<f64>,
    pub t_precompute_s: f64,
    pub t_iter_s: f64,
    pub converged: bool,
    /// Absorbing-layer thickness in wavelengths (sweeps only).
    pub t_over_lambda: Option<f64>,
}

/// Values on a grid of points.
#[derive(Debug, Clone)]
pub struct FieldData {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<Complex64>,
}

/// Outcome of one named check of the self-test.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub rows: Vec<Row>,
    pub field: Option<FieldData>,
    pub checks: Vec<Check>,
    /// Solver failure that ended the experiment early.
    pub error: Option<String>,
}

impl Report {
    /// A solver failure, an unconverged solve (residual above `10³·tol`) or a failed check.
    pub fn failed(&self, tol: f64) -> bool {
        self.error.is_some()
            || self.rows.iter().any(|r| !r.converged && r.residual > 1e3 * tol)
            || self.checks.iter().any(|c| !c.passed)
    }
}

/// Scalar in the artifacts' 17-significant-digit form.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

const TABLE_HEADER: &str = "k,N,N_DOF,N_iter,residual,eps_inf,t_precompute_s,t_iter_s";

fn row_fields(r: &Row, timings: bool) -> String {
    let eps = r.eps_inf.map(fmt_real).unwrap_or_default();
    let (tp, ti) = if timings { (fmt_real(r.t_precompute_s), fmt_real(r.t_iter_s)) } else { Default::default() };
    format!("{},{},{},{},{},{},{},{}", fmt_real(r.k), r.n, r.n_dof, r.n_iter, fmt_real(r.residual), eps, tp, ti)
}

/// `table.csv`; timing columns stay empty unless `timings` is set so that
/// repeated runs are byte-identical.
pub fn table_csv(rows: &[Row], timings: bool) -> String {
    let mut s = format!("{TABLE_HEADER}\n");
    for r in rows {
        s.push_str(&row_fields(r, timings));
        s.push('\n');
    }
    s
}

/// `sweep.csv`: the table with the layer thickness in front.
pub fn sweep_csv(rows: &[Row], timings: bool) -> String {
    let mut s = format!("t_over_lambda,{TABLE_HEADER}\n");
    for r in rows {
        let t = r.t_over_lambda.map(fmt_real).unwrap_or_default();
        let _ = writeln!(s, "{t},{}", row_fields(r, timings));
    }
    s
}

pub fn field_csv(field: &FieldData) -> String {
    let d = field.points.first().map_or(2, |p| p.len());
    let names = ["x1", "x2", "x3"];
    let mut s = names[..d].join(",");
    s.push_str(",re_u,im_u,abs_u\n");
    for (p, v) in field.points.iter().zip(&field.values) {
        for x in p {
            s.push_str(&fmt_real(*x));
            s.push(',');
        }
        let _ = writeln!(s, "{},{},{}", fmt_real(v.re), fmt_real(v.im), fmt_real(v.norm()));
    }
    s
}

fn row_from(problem_k: f64, n: usize, stats: &SolveStats, eps: Option<f64>) -> Row {
    Row {
        k: problem_k,
        n,
        n_dof: stats.n_dof,
        n_iter: stats.iterations,
        residual: stats.residual,
        eps_inf: eps,
        t_precompute_s: stats.precompute_seconds,
        t_iter_s: stats.iteration_seconds,
        converged: stats.converged,
        t_over_lambda: None,
    }
}

/// Field used for error measurement: scattered for manufactured sources, total otherwise.
fn screen_values<const D: usize>(problem: &Problem<D>) -> Result<(SolveStats, Vec<Complex64>, Option<Vec<Complex64>>)> {
    let sol = solve(problem)?;
    let pts = &problem.scene.test_points;
    let exact = sol.exact(pts)?;
    let vals = if exact.is_some() { sol.scattered(pts)? } else { sol.total(pts)? };
    Ok((sol.stats, vals, exact))
}

enum Reference {
    None,
    Exact,
    Values(Vec<Complex64>),
}

fn reference_values<const D: usize>(problem: &Problem<D>, n_ref: usize) -> Result<Vec<Complex64>> {
    let mut p = problem.clone();
    p.quad.n = n_ref;
    info!("reference solve with N = {n_ref}");
    Ok(screen_values(&p)?.1)
}

fn measured<const D: usize>(problem: &Problem<D>, reference: &Reference) -> Result<Row> {
    info!("solving with N = {}", problem.quad.n);
    let (stats, vals, exact) = screen_values(problem)?;
    let eps = match reference {
        Reference::None => None,
        Reference::Exact => Some(error_linf(&vals, exact.as_deref().expect("manufactured"))?),
        Reference::Values(r) => Some(error_linf(&vals, r)?),
    };
    Ok(row_from(problem.k, problem.quad.n, &stats, eps))
}

fn default_n_ref(ns: &[usize]) -> usize {
    let m = ns.iter().copied().max().unwrap_or(32);
    (3 * m).div_ceil(4) * 2
}

fn pick_reference(cfg: &RunConfig, ns: &[usize], always: bool) -> Option<ReferenceMode> {
    match &cfg.reference {
        Some(r) => Some(r.clone()),
        None if cfg.problem.is_manufactured() => Some(ReferenceMode::Manufactured),
        None if always => Some(ReferenceMode::SelfConvergence { n_ref: default_n_ref(ns) }),
        None => None,
    }
}

fn build_reference<const D: usize>(problem: &Problem<D>, mode: &Option<ReferenceMode>) -> Result<Reference> {
    Ok(match mode {
        None => Reference::None,
        Some(ReferenceMode::Manufactured) => Reference::Exact,
        Some(ReferenceMode::SelfConvergence { n_ref }) => Reference::Values(reference_values(problem, *n_ref)?),
    })
}

fn with_n(spec: &ProblemSpec, n: usize) -> ProblemSpec {
    ProblemSpec { n: Some(n), ..spec.clone() }
}

fn run_rows<const D: usize>(problems: &[(Problem<D>, Option<f64>)], reference: &Reference, report: &mut Report) {
    for (p, t) in problems {
        match measured(p, reference) {
            Ok(mut row) => {
                row.t_over_lambda = *t;
                report.rows.push(row);
            }
            Err(e) => {
                report.error = Some(e.to_string());
                return;
            }
        }
    }
}

fn dispatch_rows(specs: &[(ProblemSpec, Option<f64>)], ref_spec: Option<&ProblemSpec>, mode: &Option<ReferenceMode>, report: &mut Report) -> Result<()> {
    let resolved: Vec<(AnyProblem, Option<f64>)> =
        specs.iter().map(|(s, t)| Ok((s.resolve()?, *t))).collect::<Result<_>>()?;
    let ref_problem = ref_spec.map(|s| s.resolve()).transpose()?;
    macro_rules! go {
        ($variant:ident) => {{
            let problems: Vec<_> = resolved
                .into_iter()
                .map(|(p, t)| match p {
                    AnyProblem::$variant(p) => (p, t),
                    _ => unreachable!("one dimension per experiment"),
                })
                .collect();
            let base = match ref_problem {
                Some(AnyProblem::$variant(p)) => p,
                _ => problems[0].0.clone(),
            };
            match build_reference(&base, mode) {
                Ok(r) => run_rows(&problems, &r, report),
                Err(e) => report.error = Some(e.to_string()),
            }
        }};
    }
    match resolved.first().map(|(p, _)| p) {
        Some(AnyProblem::Two(_)) => go!(Two),
        Some(AnyProblem::Three(_)) => go!(Three),
        None => {}
    }
    Ok(())
}

/// Grid points in row-major order, last coordinate fastest.
pub fn grid_points(grid: &FieldGrid) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = (0..grid.lo.len())
        .map(|i| {
            let m = grid.resolution[i];
            (0..m)
                .map(|j| if m == 1 { grid.lo[i] } else { grid.lo[i] + (grid.hi[i] - grid.lo[i]) * j as f64 / (m - 1) as f64 })
                .collect()
        })
        .collect();
    let mut pts: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &axes {
        pts = pts.iter().flat_map(|p| axis.iter().map(move |x| [p.as_slice(), &[*x]].concat())).collect();
    }
    pts
}

/// Default plotting grid: the whole physical region above the ground (a
/// vertical slice through the defect in 3D).
pub fn default_grid(spec: &ProblemSpec) -> FieldGrid {
    let a = spec.box_half_widths();
    if a.len() == 3 {
        FieldGrid { lo: vec![-a[0], 0.0, 0.0], hi: vec![a[0], 0.0, a[2]], resolution: vec![81, 1, 81], total: true }
    } else {
        let lo1 = if spec.scene == crate::config::SceneName::Bump2layer { -a[1] } else { 0.0 };
        FieldGrid { lo: vec![-a[0], lo1], hi: vec![a[0], a[1]], resolution: vec![161, 81], total: true }
    }
}

fn field_values<const D: usize>(problem: &Problem<D>, grid: &FieldGrid) -> Result<(Row, FieldData)> {
    let sol = solve(problem)?;
    let points = grid_points(grid);
    let arr: Vec<[f64; D]> = points.iter().map(|p| std::array::from_fn(|i| p[i])).collect();
    // points on the far side of the boundary (inside the obstacle, below the ground) carry no field
    let fluid: Vec<bool> = if problem.bc == crate::geometry::BoundaryCondition::Transmission {
        vec![true; arr.len()]
    } else {
        arr.iter().map(|p| sol.layer_of(p) == crate::kernels::Layer::Upper).collect()
    };
    let inside: Vec<[f64; D]> = arr.iter().zip(&fluid).filter(|(_, f)| **f).map(|(p, _)| *p).collect();
    let vals = if grid.total { sol.total(&inside)? } else { sol.scattered(&inside)? };
    let mut it = vals.into_iter();
    let values = fluid.iter().map(|f| if *f { it.next().expect("value") } else { Complex64::new(0.0, 0.0) }).collect();
    Ok((row_from(problem.k, problem.quad.n, &sol.stats, None), FieldData { points, values }))
}

/// Runs one experiment. Configuration errors are returned; solver failures
/// are recorded in the report next to the rows completed so far.
pub fn run(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let spec = &cfg.problem;
    let mut report = Report::default();
    match &cfg.experiment {
        Experiment::Solve => {
            let mode = pick_reference(cfg, &[spec.n()], false);
            dispatch_rows(&[(spec.clone(), None)], None, &mode, &mut report)?;
        }
        Experiment::Convergence { ns } => {
            let mode = pick_reference(cfg, ns, true);
            let specs: Vec<_> = ns.iter().map(|&n| (with_n(spec, n), None)).collect();
            dispatch_rows(&specs, None, &mode, &mut report)?;
        }
        Experiment::PmlSweep { t_over_lambda } => {
            let mode = pick_reference(cfg, &[spec.n()], true);
            let specs: Vec<_> = t_over_lambda
                .iter()
                .map(|&t| {
                    let mut s = spec.clone();
                    s.pml.t_over_lambda = t;
                    (s, Some(t))
                })
                .collect();
            // plane-wave sweeps compare against the thickest layer at a finer grid
            let mut thickest = spec.clone();
            thickest.pml.t_over_lambda = t_over_lambda.iter().copied().fold(f64::MIN, f64::max);
            dispatch_rows(&specs, Some(&thickest), &mode, &mut report)?;
        }
        Experiment::Field { grid } => {
            let outcome = match spec.resolve()? {
                AnyProblem::Two(p) => field_values(&p, grid),
                AnyProblem::Three(p) => field_values(&p, grid),
            };
            match outcome {
                Ok((row, field)) => {
                    report.rows.push(row);
                    report.field = Some(field);
                }
                Err(e) => report.error = Some(e.to_string()),
            }
        }
        Experiment::Selftest => report.checks = crate::selftest::run_all(),
    }
    Ok(report)
}

/// Writes `table.csv` (and `sweep.csv`, `field.csv` where they apply) plus `run.json`.
pub fn write_artifacts(cfg: &RunConfig, report: &Report, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let timings = cfg.timings_in_table;
    fs::write(dir.join("table.csv"), table_csv(&report.rows, timings))?;
    if matches!(cfg.experiment, Experiment::PmlSweep { .. }) {
        fs::write(dir.join("sweep.csv"), sweep_csv(&report.rows, timings))?;
    }
    if let Some(field) = &report.field {
        fs::write(dir.join("field.csv"), field_csv(field))?;
    }
    let tol = cfg.problem.gmres().tol;
    let status = if report.error.is_some() || report.checks.iter().any(|c| !c.passed) {
        "failed"
    } else if report.failed(tol) {
        "unconverged"
    } else {
        "ok"
    };
    let resolved = cfg.problem.resolved().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let doc = json!({
        "status": status,
        "error": report.error,
        "experiment": cfg.experiment,
        "reference": cfg.reference,
        "problem": resolved,
        "environment": {
            "version": env!("CARGO_PKG_VERSION"),
            "os": std::env::consts::OS,
            "arch": std::env::consts::ARCH,
            "threads": rayon::current_num_threads(),
        },
        "rows": report.rows,
        "checks": report.checks,
    });
    fs::write(dir.join("run.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(())
}

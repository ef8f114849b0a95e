//! Run configuration: a single JSON document naming a scene, the physics and
//! the experiment, with every numerical default filled in on resolution.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    ball_scene, bump_scene, obstacle_scene, BallSceneParams, BoundaryCondition, PlanarSceneParams, Scene, SceneKind,
    TrigCurve,
};
use crate::operators::{QuadParams, Storage};
use crate::pml::PmlProfile;
use crate::solve::{Excitation, GmresParams, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneName {
    Disc2d,
    Kite2d,
    Bump2layer,
    Ball3d,
    Custom,
}

impl SceneName {
    pub fn dim(self) -> usize {
        if self == SceneName::Ball3d {
            3
        } else {
            2
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PmlSpec {
    /// Half-widths of the physical box `B_a`; per-scene default when absent.
    pub a: Option<Vec<f64>>,
    /// Layer thickness in wavelengths (all directions).
    pub t_over_lambda: f64,
    pub s: f64,
    pub p: u32,
}

impl Default for PmlSpec {
    fn default() -> Self {
        Self { a: None, t_over_lambda: 2.0, s: 6.0, p: 6 }
    }
}

/// Geometry overrides; anything left out takes the scene default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySpec {
    pub center: Option<Vec<f64>>,
    /// Disc/bump/ball radius or kite scale.
    pub size: Option<f64>,
    pub flat_patches: Option<usize>,
    pub obstacle_patches: Option<usize>,
    pub absorbing_patches: Option<usize>,
    pub corner_p: Option<u32>,
    pub curve: Option<TrigCurve>,
    pub plane_grid: Option<usize>,
    pub screen_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSpec {
    pub scene: SceneName,
    /// Defaults to transmission for `bump2layer`, Dirichlet otherwise.
    pub bc: Option<BoundaryCondition>,
    pub k: f64,
    /// Lower-layer wavenumber (transmission).
    pub k2: Option<f64>,
    /// Defaults to a manufactured source for half-space scenes and a plane wave
    /// at `θ = π/4` for the two-layer scene.
    pub excitation: Option<Excitation>,
    /// Chebyshev points per patch direction (32 in 2D, 16 in 3D).
    pub n: Option<usize>,
    pub n_beta: usize,
    pub grading: u32,
    pub delta: f64,
    pub pml: PmlSpec,
    /// Tolerance defaults to 1e-12 in 2D and 1e-9 in 3D.
    pub gmres: Option<GmresParams>,
    pub storage: Storage,
    pub geometry: GeometrySpec,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        let q = QuadParams::default();
        Self {
            scene: SceneName::Disc2d,
            bc: None,
            k: PI,
            k2: None,
            excitation: None,
            n: None,
            n_beta: q.n_beta,
            grading: q.grading,
            delta: q.delta,
            pml: PmlSpec::default(),
            gmres: None,
            storage: Storage::Auto,
            geometry: GeometrySpec::default(),
        }
    }
}

/// Uniform grid of evaluation points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Samples per direction.
    pub resolution: Vec<usize>,
    /// Total field (default) or scattered field only.
    #[serde(default = "yes")]
    pub total: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    #[default]
    Solve,
    Convergence {
        ns: Vec<usize>,
    },
    PmlSweep {
        t_over_lambda: Vec<f64>,
    },
    Field {
        grid: FieldGrid,
    },
    Selftest,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Solve => "solve",
            Experiment::Convergence { .. } => "convergence",
            Experiment::PmlSweep { .. } => "pml-sweep",
            Experiment::Field { .. } => "field",
            Experiment::Selftest => "selftest",
        }
    }
}

/// How `eps_inf` is measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceMode {
    /// Against the exact field of a manufactured source.
    Manufactured,
    /// Against a solve with `n_ref` points per patch direction.
    SelfConvergence { n_ref: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub experiment: Experiment,
    /// Output directory (overridden by `--out`).
    pub output: Option<PathBuf>,
    /// Manufactured runs use the exact field; otherwise self-convergence
    /// against `⌈1.5·max N⌉`.
    pub reference: Option<ReferenceMode>,
    /// Fill the timing columns of `table.csv` (breaks byte-identical output).
    pub timings_in_table: bool,
}

/// A problem of either dimension.
#[derive(Debug, Clone)]
pub enum AnyProblem {
    Two(Problem<2>),
    Three(Problem<3>),
}

fn bad<T>(field: &str, message: impl Into<String>) -> Result<T> {
    Err(Error::Config { field: field.into(), message: message.into() })
}

fn fixed<const D: usize>(field: &str, v: &[f64]) -> Result<[f64; D]> {
    if v.len() != D {
        return bad(field, format!("needs {D} components"));
    }
    let mut out = [0.0; D];
    out.copy_from_slice(v);
    Ok(out)
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        match &self.experiment {
            Experiment::Convergence { ns } => {
                if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("experiment.ns", "must be a non-empty increasing list");
                }
            }
            Experiment::PmlSweep { t_over_lambda } => {
                if t_over_lambda.is_empty() || t_over_lambda.iter().any(|t| !(*t > 0.0)) {
                    return bad("experiment.t_over_lambda", "must be a non-empty list of positive values");
                }
            }
            Experiment::Field { grid } => {
                let d = self.problem.scene.dim();
                if grid.lo.len() != d || grid.hi.len() != d || grid.resolution.len() != d {
                    return bad("experiment.grid", format!("lo, hi and resolution need {d} components"));
                }
                if grid.resolution.iter().any(|&r| r == 0) || grid.lo.iter().zip(&grid.hi).any(|(l, h)| !(l <= h)) {
                    return bad("experiment.grid", "empty grid");
                }
                let a = self.problem.box_half_widths();
                if grid.lo.iter().chain(&grid.hi).enumerate().any(|(i, x)| x.abs() > a[i % d]) {
                    return bad("experiment.grid", "grid leaves the physical box");
                }
            }
            Experiment::Solve | Experiment::Selftest => {}
        }
        if let Some(ReferenceMode::SelfConvergence { n_ref }) = self.reference {
            if n_ref < 4 {
                return bad("reference.n_ref", "at least 4");
            }
        }
        if self.reference == Some(ReferenceMode::Manufactured) && !self.problem.is_manufactured() {
            return bad("reference", "manufactured reference needs a manufactured excitation");
        }
        Ok(())
    }
}

impl ProblemSpec {
    pub fn bc(&self) -> BoundaryCondition {
        self.bc.unwrap_or(if self.scene == SceneName::Bump2layer {
            BoundaryCondition::Transmission
        } else {
            BoundaryCondition::Dirichlet
        })
    }

    pub fn k2(&self) -> Option<f64> {
        match self.bc() {
            BoundaryCondition::Transmission => Some(self.k2.unwrap_or(2.0 * self.k)),
            _ => self.k2,
        }
    }

    pub fn excitation(&self) -> Excitation {
        self.excitation.clone().unwrap_or(if self.bc() == BoundaryCondition::Transmission {
            Excitation::PlaneWave { theta: PI / 4.0, phi: 0.0 }
        } else {
            Excitation::Manufactured { z: None }
        })
    }

    pub fn is_manufactured(&self) -> bool {
        matches!(self.excitation(), Excitation::Manufactured { .. })
    }

    pub fn n(&self) -> usize {
        self.n.unwrap_or(if self.scene.dim() == 3 { 16 } else { 32 })
    }

    /// Longest wavelength present.
    pub fn wavelength(&self) -> f64 {
        let k = self.k2().map_or(self.k, |k2| self.k.min(k2));
        2.0 * PI / k
    }

    pub fn box_half_widths(&self) -> Vec<f64> {
        if let Some(a) = &self.pml.a {
            return a.clone();
        }
        match self.scene {
            SceneName::Kite2d => vec![4.0, 6.0],
            SceneName::Ball3d => vec![2.0, 2.0, 4.0],
            _ => vec![4.0, 4.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.scene.dim();
        if !(self.k > 0.0 && self.k.is_finite()) {
            return bad("problem.k", "must be positive");
        }
        if let Some(k2) = self.k2 {
            if !(k2 > 0.0 && k2.is_finite()) {
                return bad("problem.k2", "must be positive");
            }
        }
        if self.bc() == BoundaryCondition::Transmission && self.scene != SceneName::Bump2layer {
            return bad("problem.bc", "transmission is available on the bump2layer scene");
        }
        if self.scene == SceneName::Bump2layer && self.bc() != BoundaryCondition::Transmission {
            return bad("problem.bc", "the bump2layer scene is a transmission problem");
        }
        if self.box_half_widths().len() != d {
            return bad("problem.pml.a", format!("needs {d} components"));
        }
        if !(self.pml.t_over_lambda > 0.0) {
            return bad("problem.pml.t_over_lambda", "must be positive");
        }
        if self.scene == SceneName::Custom && self.geometry.curve.is_none() {
            return bad("problem.geometry.curve", "the custom scene needs a curve");
        }
        match self.excitation() {
            Excitation::PointSource { z } if z.len() != d => bad("problem.excitation.z", format!("needs {d} coordinates")),
            Excitation::Manufactured { z: Some(z) } if z.len() != d => {
                bad("problem.excitation.z", format!("needs {d} coordinates"))
            }
            _ => Ok(()),
        }?;
        self.quad().validate()
    }

    pub fn quad(&self) -> QuadParams {
        QuadParams { n: self.n(), n_beta: self.n_beta, grading: self.grading, delta: self.delta }
    }

    pub fn gmres(&self) -> GmresParams {
        self.gmres.unwrap_or(GmresParams { tol: if self.scene.dim() == 3 { 1e-9 } else { 1e-12 }, ..Default::default() })
    }

    fn profile(&self) -> Result<PmlProfile<f64>> {
        let a = self.box_half_widths();
        let t = self.pml.t_over_lambda * self.wavelength();
        PmlProfile::new(a.clone(), vec![t; a.len()], self.pml.s, self.pml.p)
    }

    /// Absorbing-layer pieces per side.
    fn absorbing(&self) -> usize {
        let ratio = self.pml.t_over_lambda;
        let per = if self.scene.dim() == 3 { 1.0 } else { 2.0 };
        self.geometry.absorbing_patches.unwrap_or(((ratio / per) - 1e-9).ceil().max(1.0) as usize)
    }

    /// Geometry with every scene default and patch count filled in.
    pub fn resolved_geometry(&self) -> Result<GeometrySpec> {
        let g = &self.geometry;
        let lambda = self.wavelength();
        let a1 = self.box_half_widths()[0];
        let outer = self.absorbing();
        let (center, size) = match self.scene {
            SceneName::Disc2d => (vec![0.0, 2.0], 1.0),
            SceneName::Kite2d => (vec![0.0, 3.0], 1.0),
            SceneName::Bump2layer => (vec![0.0, 0.0], 1.0),
            SceneName::Ball3d => (BallSceneParams::default().center.to_vec(), BallSceneParams::default().radius),
            SceneName::Custom => (g.curve.as_ref().map_or(vec![0.0, 0.0], |c| c.center.to_vec()), 1.0),
        };
        let center = g.center.clone().unwrap_or(center);
        let size = g.size.unwrap_or(size);
        let mut out = GeometrySpec { center: Some(center.clone()), size: Some(size), absorbing_patches: Some(outer), ..g.clone() };
        if self.scene == SceneName::Ball3d {
            let d = BallSceneParams::default();
            out.plane_grid = Some(g.plane_grid.unwrap_or(d.plane_grid.max(2 * outer + 2)));
            out.screen_samples = Some(g.screen_samples.unwrap_or(d.screen_samples));
            return Ok(out);
        }
        let c: [f64; 2] = fixed("problem.geometry.center", &center)?;
        let (flat, obstacle) = match self.scene {
            SceneName::Bump2layer => {
                let inner = ((a1 - size) / (4.0 * lambda)).ceil().max(1.0) as usize;
                let arc = (PI * size / (6.5 * lambda)).ceil() as usize;
                (2 * (outer + inner), arc.max(2))
            }
            _ => {
                let (curve, base) = match self.scene {
                    SceneName::Kite2d => (TrigCurve::kite(c, size), 6),
                    SceneName::Custom => (g.curve.clone().expect("validated"), 2),
                    _ => (TrigCurve::circle(c, size), 2),
                };
                let inner = (2.0 * a1 / (8.0 * lambda)).ceil().max(2.0) as usize;
                let arc = (curve.perimeter() / (6.5 * lambda)).ceil() as usize;
                (2 * outer + inner, arc.max(base))
            }
        };
        out.flat_patches = Some(g.flat_patches.unwrap_or(flat));
        out.obstacle_patches = Some(g.obstacle_patches.unwrap_or(obstacle));
        out.corner_p = Some(g.corner_p.unwrap_or(2));
        Ok(out)
    }

    /// The specification with every default made explicit.
    pub fn resolved(&self) -> Result<ProblemSpec> {
        self.validate()?;
        Ok(ProblemSpec {
            bc: Some(self.bc()),
            k2: self.k2(),
            excitation: Some(self.excitation()),
            n: Some(self.n()),
            pml: PmlSpec { a: Some(self.box_half_widths()), ..self.pml.clone() },
            gmres: Some(self.gmres()),
            geometry: self.resolved_geometry()?,
            ..self.clone()
        })
    }

    fn scene2(&self) -> Result<Scene<2>> {
        let g = self.resolved_geometry()?;
        let center: [f64; 2] = fixed("problem.geometry.center", g.center.as_deref().unwrap_or_default())?;
        let size = g.size.unwrap_or(1.0);
        let params = PlanarSceneParams {
            center,
            size,
            flat_patches: g.flat_patches.unwrap_or(1),
            obstacle_patches: g.obstacle_patches.unwrap_or(1),
            corner_p: g.corner_p.unwrap_or(2),
            curve: g.curve.clone(),
            absorbing_patches: g.absorbing_patches.unwrap_or(1),
        };
        let profile = self.profile()?;
        match self.scene {
            SceneName::Disc2d => obstacle_scene(SceneKind::Disc2d, TrigCurve::circle(center, size), &params, profile),
            SceneName::Kite2d => obstacle_scene(SceneKind::Kite2d, TrigCurve::kite(center, size), &params, profile),
            SceneName::Custom => obstacle_scene(SceneKind::Custom, g.curve.clone().expect("validated"), &params, profile),
            SceneName::Bump2layer => bump_scene(&params, profile),
            SceneName::Ball3d => unreachable!("3D scene"),
        }
    }

    fn scene3(&self) -> Result<Scene<3>> {
        let g = self.resolved_geometry()?;
        let params = BallSceneParams {
            center: fixed("problem.geometry.center", g.center.as_deref().unwrap_or_default())?,
            radius: g.size.unwrap_or(1.0),
            plane_grid: g.plane_grid.unwrap_or(6),
            screen_samples: g.screen_samples.unwrap_or(21),
            absorbing_patches: g.absorbing_patches.unwrap_or(1),
        };
        ball_scene(&params, self.profile()?)
    }

    /// Builds the scene and problem with every default filled in.
    pub fn resolve(&self) -> Result<AnyProblem> {
        self.validate()?;
        let (bc, k, k2, excitation) = (self.bc(), self.k, self.k2(), self.excitation());
        let (quad, gmres, storage) = (self.quad(), self.gmres(), self.storage);
        Ok(if self.scene.dim() == 3 {
            AnyProblem::Three(Problem { scene: self.scene3()?, bc, k, k2, excitation, quad, gmres, storage })
        } else {
            AnyProblem::Two(Problem { scene: self.scene2()?, bc, k, k2, excitation, quad, gmres, storage })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patches(spec: &ProblemSpec) -> usize {
        match spec.resolve().unwrap() {
            AnyProblem::Two(p) => p.scene.len(),
            AnyProblem::Three(p) => p.scene.len(),
        }
    }

    #[test]
    fn default_patch_counts() {
        let mut s = ProblemSpec::default();
        assert_eq!(patches(&s), 6);
        s.k = 10.0 * PI;
        assert_eq!(patches(&s), 12);
        s.scene = SceneName::Kite2d;
        s.k = PI;
        assert_eq!(patches(&s), 10);
        s.k = 10.0 * PI;
        assert_eq!(patches(&s), 15);
        s.scene = SceneName::Ball3d;
        s.k = PI;
        assert_eq!(patches(&s), 42);
        s.scene = SceneName::Bump2layer;
        assert_eq!(patches(&s), 6);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::from_json(r#"{"problem": {"k": -1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"problem": {"wavenumber": 1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"experiment": {"kind": "convergence", "ns": [32, 16]}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"problem": {"scene": "disc2d", "bc": "transmission"}}"#).is_err());
        let grid = r#"{"experiment": {"kind": "field", "grid": {"lo": [-5, 0], "hi": [1, 1], "resolution": [3, 3]}}}"#;
        assert!(RunConfig::from_json(grid).is_err());
    }

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg.problem.n(), 32);
        assert_eq!(cfg.problem.bc(), BoundaryCondition::Dirichlet);
        assert!(cfg.problem.is_manufactured());
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
    }
}

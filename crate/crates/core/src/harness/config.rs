//! Scenario files: TOML with one section per concern.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AxisBoundary, Grid, GridField};
use crate::medium::{AdvectionSpec, DiffusionSpec, MediumBuilder, PeriodicMedium, ReactionSpec};
use crate::solver::{DiffusionSolve, StepOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub medium: MediumConfig,
    pub initial: InitialConfig,
    pub grid: GridConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub dim: usize,
    pub reaction: ReactionSpec,
    #[serde(default)]
    pub diffusion: DiffusionConfig,
    #[serde(default)]
    pub advection: AdvectionConfig,
    #[serde(default)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DiffusionConfig {
    #[default]
    Identity,
    Constant { a11: f64, a22: f64, a12: f64 },
    Oscillating { amp: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AdvectionConfig {
    #[default]
    None,
    Shear { amp: f64 },
    Cellular { amp: f64 },
}

/// Initial data families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialConfig {
    /// `theta` on the open ball `B_rho(center)`.
    CompactBall {
        theta: f64,
        rho: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// `theta` inside the ellipse with semi-axes `semi` centred at the origin.
    Ellipse { theta: f64, semi: [f64; 2] },
    /// `1` on `{x.e <= 0}`.
    Step { e: [f64; 2] },
    /// `1` on `{y <= alpha |x|}`.
    Cone { alpha: f64 },
    /// Snapshot CSV as written by `simulate`.
    Raster { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    /// Mesh width; `1 / h` must be an integer.
    pub h: f64,
    #[serde(default = "default_boundary")]
    pub boundary: BoundaryConfig,
}

fn default_boundary() -> BoundaryConfig {
    BoundaryConfig::Neumann
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryConfig {
    Neumann,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_final: f64,
    #[serde(default)]
    pub output_times: Vec<f64>,
    #[serde(default)]
    pub output_every: Option<f64>,
    #[serde(default = "default_dt")]
    pub dt_max: f64,
}

fn default_dt() -> f64 {
    StepOptions::default().dt_max
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub speeds: Option<SpeedsConfig>,
    #[serde(default)]
    pub wulff: bool,
    pub hausdorff: Option<HausdorffConfig>,
    pub omega: Option<OmegaConfig>,
    pub cones: Option<ConesConfig>,
    pub eigen: Option<EigenConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpeedMethod {
    /// Planar shooting rescaled by `sqrt(e.A e)`; homogeneous media only.
    Shooting,
    /// Long-time strip simulations.
    Simulation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedsConfig {
    pub method: SpeedMethod,
    #[serde(default = "default_den")]
    pub max_denominator: i64,
    #[serde(default = "default_speed_t")]
    pub t_final: f64,
    /// Directions for the shooting method (uniform on the circle).
    #[serde(default = "default_count")]
    pub count: usize,
}

fn default_den() -> i64 {
    3
}
fn default_speed_t() -> f64 {
    120.0
}
fn default_count() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HausdorffConfig {
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    /// Final distance must stay below `rel_tol * max c`.
    #[serde(default = "default_haus_tol")]
    pub rel_tol: f64,
    /// Window half-side in units of `c` for unbounded data.
    #[serde(default = "default_half")]
    pub window_half: f64,
    #[serde(default = "default_pixels")]
    pub pixels: usize,
}

fn default_levels() -> Vec<f64> {
    vec![0.5]
}
fn default_haus_tol() -> f64 {
    0.1
}
fn default_half() -> f64 {
    2.0
}
fn default_pixels() -> usize {
    1024
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaConfig {
    pub direction: [f64; 2],
    pub times: Vec<f64>,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_level")]
    pub level: f64,
}

fn default_radius() -> f64 {
    crate::omega::WINDOW_RADIUS
}
fn default_level() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConesConfig {
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Spreading run `theta 1_{B_rho}` that measures `gamma`.
    pub theta: f64,
    pub rho: f64,
    pub t_final: f64,
    /// Level whose rescaled inradius gives `gamma`.
    #[serde(default = "default_gamma_level")]
    pub gamma_level: f64,
}

fn default_lambdas() -> Vec<f64> {
    vec![0.25, 0.5, 0.75, 1.5, 2.0]
}
fn default_samples() -> usize {
    16
}
fn default_gamma_level() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenConfig {
    pub direction: [f64; 2],
    pub lambdas: Vec<f64>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Scenario> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Cell resolution `1 / h`.
    pub fn resolution(&self) -> Result<usize> {
        let h = self.grid.h;
        if !(h > 0.0 && h <= 0.5) {
            return Err(Error::Config(format!("h = {h} must lie in (0, 1/2]")));
        }
        let m = 1.0 / h;
        if (m - m.round()).abs() > 1e-9 {
            return Err(Error::Config(format!("h = {h} does not divide 1")));
        }
        Ok(m.round() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!("scenario name {:?} is not a plain file name", self.name)));
        }
        self.resolution()?;
        let t = &self.time;
        if !(t.t_final > 0.0) {
            return Err(Error::Config("t_final must be positive".into()));
        }
        if t.output_times.iter().any(|&s| !(0.0..=t.t_final).contains(&s)) {
            return Err(Error::Config("output_times must lie in [0, t_final]".into()));
        }
        if let Some(e) = t.output_every {
            if !(e > 0.0) {
                return Err(Error::Config("output_every must be positive".into()));
            }
        }
        if let Some(h) = &self.analysis.hausdorff {
            if h.levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
                return Err(Error::Config("Hausdorff levels must lie in (0, 1)".into()));
            }
        }
        if let Some(o) = &self.analysis.omega {
            if o.times.iter().any(|&s| !(0.0..=t.t_final).contains(&s)) {
                return Err(Error::Config("omega times must lie in [0, t_final]".into()));
            }
        }
        self.grid_spec()?;
        self.medium()?;
        Ok(())
    }

    /// Sorted output times including `t_final`.
    pub fn output_times(&self) -> Vec<f64> {
        let t = &self.time;
        let mut out = t.output_times.clone();
        if let Some(e) = t.output_every {
            let n = (t.t_final / e + 1e-9).floor() as usize;
            out.extend((1..=n).map(|k| k as f64 * e));
        }
        if let Some(o) = &self.analysis.omega {
            out.extend(o.times.iter().copied());
        }
        out.push(t.t_final);
        out.retain(|s| *s > 0.0);
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        out
    }

    pub fn medium(&self) -> Result<PeriodicMedium> {
        let m = &self.medium;
        let mut b = MediumBuilder::new(m.dim, self.resolution()?, m.reaction.clone())
            .diffusion(match m.diffusion {
                DiffusionConfig::Identity => DiffusionSpec::Identity,
                DiffusionConfig::Constant { a11, a22, a12 } => DiffusionSpec::Constant { a11, a22, a12 },
                DiffusionConfig::Oscillating { amp } => DiffusionSpec::Oscillating { amp },
            })
            .advection(match m.advection {
                AdvectionConfig::None => AdvectionSpec::None,
                AdvectionConfig::Shear { amp } => AdvectionSpec::Shear { amp },
                AdvectionConfig::Cellular { amp } => AdvectionSpec::Cellular { amp },
            });
        if let Some(d) = m.delta {
            b = b.delta(d);
        }
        b.build().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn grid_spec(&self) -> Result<Grid> {
        let g = &self.grid;
        let bc = match g.boundary {
            BoundaryConfig::Neumann => AxisBoundary::Neumann,
            BoundaryConfig::Periodic => AxisBoundary::Periodic,
        };
        // a periodic axis identifies `hi` with `lo`
        let top = |v: f64| if g.boundary == BoundaryConfig::Periodic { v - g.h } else { v };
        let (lo, hi) = if self.medium.dim == 1 {
            ([g.lo[0], 0.0], [top(g.hi[0]), 0.0])
        } else {
            (g.lo, [top(g.hi[0]), top(g.hi[1])])
        };
        Grid::rect(lo, hi, self.resolution()?, [bc, bc]).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn step_options(&self) -> StepOptions {
        StepOptions {
            dt_max: self.time.dt_max,
            solve: DiffusionSolve::Auto,
        }
    }

    pub fn initial_field(&self) -> Result<GridField> {
        let grid = self.grid_spec()?;
        Ok(match &self.initial {
            InitialConfig::CompactBall { theta, rho, center } => GridField::from_fn(grid, |p| {
                if (p[0] - center[0]).hypot(p[1] - center[1]) < *rho {
                    *theta
                } else {
                    0.0
                }
            }),
            InitialConfig::Ellipse { theta, semi } => GridField::from_fn(grid, |p| {
                if (p[0] / semi[0]).powi(2) + (p[1] / semi[1]).powi(2) < 1.0 {
                    *theta
                } else {
                    0.0
                }
            }),
            InitialConfig::Step { e } => {
                GridField::from_fn(grid, |p| if p[0] * e[0] + p[1] * e[1] <= 0.0 { 1.0 } else { 0.0 })
            }
            InitialConfig::Cone { alpha } => {
                GridField::from_fn(grid, |p| if p[1] <= alpha * p[0].abs() { 1.0 } else { 0.0 })
            }
            InitialConfig::Raster { path } => {
                let f = std::fs::File::open(path)?;
                let u = GridField::read_csv(std::io::BufReader::new(f))?;
                if u.grid.n != grid.n || (u.grid.h - grid.h).abs() > 1e-12 || u.grid.offset != grid.offset {
                    return Err(Error::Config(format!("raster {path} does not match the scenario grid")));
                }
                GridField { grid, values: u.values, t: 0.0 }
            }
        })
    }
}

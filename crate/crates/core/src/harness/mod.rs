//! Scenario pipelines, report bundles and the acceptance suite.
//!
//! A scenario runs a fixed sequence of stages. A failing stage is recorded
//! and every stage that depends on it is skipped, so a partial bundle still
//! produces a report.

pub mod acceptance;
pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::eigen::{principal_eigenvalue, slope_check};
use crate::error::{Error, Result};
use crate::fronts::{
    extract_front_profile, lattice_directions, planar_front_shooting, run_front, unit, FrontProfile, SpeedParams,
};
use crate::grid::GridField;
use crate::levelsets::{rescaled_convergence, upper_level_set, windowed_convergence, PlanarSet, Shape};
use crate::medium::{Check, PeriodicMedium};
use crate::omega::{fit_window, ray_crossing, reports_to_csv, track_and_fit, WindowClass, WindowReport};
use crate::solver::{simulate, BoundarySpec, Trajectory};
use crate::wulff::{
    cone_conditions_check, regular_fg_check, shifted_shape, wulff_shape, ShiftKind, SpeedCurve, WulffShape,
    EVAL_DIRECTIONS,
};

pub use config::{
    AdvectionConfig, AnalysisConfig, BoundaryConfig, ConesConfig, DiffusionConfig, EigenConfig, GridConfig,
    HausdorffConfig, InitialConfig, MediumConfig, OmegaConfig, Scenario, SpeedMethod, SpeedsConfig, TimeConfig,
};

/// Pipeline stages in dependency order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Simulate,
    Speeds,
    Wulff,
    Hausdorff,
    Omega,
    Eigen,
    Cones,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Simulate,
        Stage::Speeds,
        Stage::Wulff,
        Stage::Hausdorff,
        Stage::Omega,
        Stage::Eigen,
        Stage::Cones,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Simulate => "simulate",
            Stage::Speeds => "speeds",
            Stage::Wulff => "wulff",
            Stage::Hausdorff => "hausdorff",
            Stage::Omega => "omega",
            Stage::Eigen => "eigen",
            Stage::Cones => "cones",
        }
    }

    pub fn depends_on(self) -> &'static [Stage] {
        match self {
            Stage::Simulate | Stage::Eigen => &[],
            Stage::Speeds => &[],
            Stage::Wulff => &[Stage::Speeds],
            Stage::Hausdorff => &[Stage::Simulate, Stage::Wulff],
            Stage::Omega => &[Stage::Simulate],
            Stage::Cones => &[Stage::Simulate],
        }
    }

    /// `self` plus everything it needs, in run order.
    pub fn closure(stages: &[Stage]) -> Vec<Stage> {
        let mut want = std::collections::BTreeSet::new();
        let mut stack: Vec<Stage> = stages.to_vec();
        while let Some(s) = stack.pop() {
            if want.insert(s) {
                stack.extend_from_slice(s.depends_on());
            }
        }
        want.into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum StageStatus {
    Completed,
    Failed { error: String },
    Skipped { reason: String },
}

/// Text artifact written as `<scenario>/<stage>/<name>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub name: String,
    #[serde(skip)]
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: StageStatus,
    pub checks: Vec<Check>,
    pub summary: Value,
    pub artifacts: Vec<Artifact>,
}

impl StageRecord {
    pub fn passed(&self) -> bool {
        self.status == StageStatus::Completed && self.checks.iter().all(|c| c.passed)
    }
}

/// Everything a pipeline run produced.
#[derive(Debug, Clone, Default)]
pub struct ReportBundle {
    pub scenario: Option<Scenario>,
    pub stages: Vec<StageRecord>,
    pub trajectory: Option<Trajectory>,
    pub wulff: Option<WulffShape>,
    pub measured: Option<PlanarSet>,
}

impl ReportBundle {
    pub fn passed(&self) -> bool {
        self.stages.iter().all(|s| s.passed())
    }

    pub fn stage(&self, s: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|r| r.stage == s)
    }

    /// Summary JSON embedding the resolved configuration.
    pub fn summary_json(&self) -> String {
        let v = json!({
            "scenario": self.scenario.as_ref().map(|s| s.name.clone()),
            "config": self.scenario,
            "passed": self.passed(),
            "stages": self.stages,
        });
        let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
        s.push('\n');
        s
    }
}

fn check(name: &str, passed: bool, worst_residual: f64) -> Check {
    Check {
        name: name.into(),
        passed,
        worst_residual,
    }
}

fn text(name: &str, contents: String) -> Artifact {
    Artifact {
        name: name.into(),
        contents,
    }
}

/// Per-stage output of a successful run.
struct Done {
    checks: Vec<Check>,
    summary: Value,
    artifacts: Vec<Artifact>,
}

struct Context<'a> {
    s: &'a Scenario,
    medium: PeriodicMedium,
    speeds: Option<SpeedCurve>,
    bundle: ReportBundle,
}

/// Runs every stage the scenario asks for.
pub fn run_scenario(s: &Scenario) -> Result<ReportBundle> {
    run_stages(s, &requested_stages(s))
}

/// Stages implied by the analysis section.
pub fn requested_stages(s: &Scenario) -> Vec<Stage> {
    let a = &s.analysis;
    let mut v = vec![Stage::Simulate];
    if a.speeds.is_some() {
        v.push(Stage::Speeds);
    }
    if a.wulff {
        v.push(Stage::Wulff);
    }
    if a.hausdorff.is_some() {
        v.push(Stage::Hausdorff);
    }
    if a.omega.is_some() {
        v.push(Stage::Omega);
    }
    if a.eigen.is_some() {
        v.push(Stage::Eigen);
    }
    if a.cones.is_some() {
        v.push(Stage::Cones);
    }
    v
}

/// Runs `stages` and their dependencies; validation errors are returned,
/// stage errors are recorded in the bundle.
pub fn run_stages(s: &Scenario, stages: &[Stage]) -> Result<ReportBundle> {
    s.validate()?;
    let mut cx = Context {
        s,
        medium: s.medium()?,
        speeds: None,
        bundle: ReportBundle {
            scenario: Some(s.clone()),
            ..Default::default()
        },
    };
    for stage in Stage::closure(stages) {
        let blocked = stage
            .depends_on()
            .iter()
            .find(|d| cx.bundle.stage(**d).is_some_and(|r| r.status != StageStatus::Completed));
        let status_and_out = match blocked {
            Some(d) => Err(StageStatus::Skipped {
                reason: format!("{} did not complete", d.name()),
            }),
            None => run_stage(&mut cx, stage).map_err(|e| StageStatus::Failed { error: e.to_string() }),
        };
        let rec = match status_and_out {
            Ok(d) => StageRecord {
                stage,
                status: StageStatus::Completed,
                checks: d.checks,
                summary: d.summary,
                artifacts: d.artifacts,
            },
            Err(status) => StageRecord {
                stage,
                status,
                checks: Vec::new(),
                summary: Value::Null,
                artifacts: Vec::new(),
            },
        };
        cx.bundle.stages.push(rec);
    }
    Ok(cx.bundle)
}

fn run_stage(cx: &mut Context, stage: Stage) -> Result<Done> {
    match stage {
        Stage::Simulate => stage_simulate(cx),
        Stage::Speeds => stage_speeds(cx),
        Stage::Wulff => stage_wulff(cx),
        Stage::Hausdorff => stage_hausdorff(cx),
        Stage::Omega => stage_omega(cx),
        Stage::Eigen => stage_eigen(cx),
        Stage::Cones => stage_cones(cx),
    }
}

fn level(s: &Scenario) -> f64 {
    s.analysis
        .hausdorff
        .as_ref()
        .and_then(|h| h.levels.first().copied())
        .unwrap_or(0.5)
}

fn stage_simulate(cx: &mut Context) -> Result<Done> {
    let s = cx.s;
    let u0 = cx.s.initial_field()?;
    let traj = simulate(
        &cx.medium,
        &u0,
        s.time.t_final,
        &s.output_times(),
        BoundarySpec::AsGrid,
        s.step_options(),
    )?;
    let last = traj.last().expect("t_final is an output time");
    let lv = level(s);
    let measured = if last.grid.dim == 2 {
        let e = upper_level_set(last, lv).scaled(1.0 / last.t);
        Some(e)
    } else {
        None
    };
    let extinct = last.max() <= lv;
    let mut series = String::from("t,min,max\n");
    for u in &traj.snapshots {
        let _ = writeln!(series, "{},{},{}", u.t, u.min(), u.max());
    }
    let summary = json!({
        "times": traj.times(),
        "final_min": last.min(),
        "final_max": last.max(),
        "level": lv,
        "empty_invasion_shape": extinct,
        "nodes": last.grid.len(),
    });
    let bounded = check("within-bounds", last.min() >= -1e-12 && last.max() <= 1.0 + 1e-12, 0.0);
    cx.bundle.measured = measured;
    cx.bundle.trajectory = Some(traj);
    Ok(Done {
        checks: vec![bounded],
        summary,
        artifacts: vec![text("extrema.csv", series)],
    })
}

/// `sqrt(e.A e)` when the medium is a constant-coefficient one.
fn constant_scale(s: &Scenario, e: [f64; 2]) -> Option<f64> {
    let m = &s.medium;
    if !m.reaction.is_homogeneous() || m.advection != AdvectionConfig::None {
        return None;
    }
    let (a11, a22, a12) = match m.diffusion {
        DiffusionConfig::Identity => (1.0, 1.0, 0.0),
        DiffusionConfig::Constant { a11, a22, a12 } => (a11, a22, a12),
        DiffusionConfig::Oscillating { .. } => return None,
    };
    Some((a11 * e[0] * e[0] + 2.0 * a12 * e[0] * e[1] + a22 * e[1] * e[1]).sqrt())
}

/// Speed table for a scenario: directions, speeds and oscillation bounds.
pub fn scenario_speeds(s: &Scenario, m: &PeriodicMedium, cfg: &SpeedsConfig) -> Result<Vec<([f64; 2], f64, f64)>> {
    let dirs: Vec<[f64; 2]> = if s.medium.dim == 1 {
        vec![[1.0, 0.0], [-1.0, 0.0]]
    } else {
        match cfg.method {
            SpeedMethod::Shooting => (0..cfg.count)
                .map(|k| {
                    let a = std::f64::consts::TAU * k as f64 / cfg.count as f64;
                    [a.cos(), a.sin()]
                })
                .collect(),
            SpeedMethod::Simulation => lattice_directions(cfg.max_denominator).into_iter().map(unit).collect(),
        }
    };
    match cfg.method {
        SpeedMethod::Shooting => {
            let pf = planar_front_shooting(&s.medium.reaction, 1e-10)?;
            dirs.iter()
                .map(|&e| {
                    let k = constant_scale(s, e).ok_or_else(|| {
                        Error::Config("shooting speeds need a homogeneous constant-coefficient medium".into())
                    })?;
                    Ok((e, pf.c * k, 0.0))
                })
                .collect()
        }
        SpeedMethod::Simulation => {
            let params = SpeedParams {
                t_final: cfg.t_final,
                max_denominator: cfg.max_denominator,
                step: s.step_options(),
                ..SpeedParams::default()
            };
            let table = crate::fronts::speed_table(m, &dirs, &params)?;
            Ok(table.entries.iter().map(|e| (e.direction, e.c, e.oscillation)).collect())
        }
    }
}

fn stage_speeds(cx: &mut Context) -> Result<Done> {
    let cfg = cx.s.analysis.speeds.clone().unwrap_or(SpeedsConfig {
        method: SpeedMethod::Shooting,
        max_denominator: 3,
        t_final: 120.0,
        count: EVAL_DIRECTIONS,
    });
    let rows = scenario_speeds(cx.s, &cx.medium, &cfg)?;
    let mut csv = String::from("ex,ey,c,oscillation\n");
    for (e, c, o) in &rows {
        let _ = writeln!(csv, "{},{},{},{}", e[0], e[1], c, o);
    }
    let dirs: Vec<[f64; 2]> = rows.iter().map(|r| r.0).collect();
    let cs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let curve = SpeedCurve::new(&dirs, &cs)?;
    let h = 1.0 / cx.s.resolution()? as f64;
    let worst_osc = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let summary = json!({
        "method": cfg.method,
        "count": rows.len(),
        "c_min": curve.min_speed(),
        "c_max": curve.max_speed(),
        "max_gap": curve.max_gap(),
    });
    cx.speeds = Some(curve);
    Ok(Done {
        checks: vec![check("oscillation-within-cell", worst_osc <= 1.0 + h, worst_osc)],
        summary,
        artifacts: vec![text("speeds.csv", csv)],
    })
}

fn stage_wulff(cx: &mut Context) -> Result<Done> {
    let curve = cx.speeds.as_ref().expect("speeds stage completed");
    let w = wulff_shape(cx.s.medium.dim, &curve.directions, &curve.speeds, EVAL_DIRECTIONS)?;
    let fg = regular_fg_check(&w, 64);
    let overlay = cx.bundle.measured.as_ref().and_then(|m| m.region().cloned());
    let json = w.to_json();
    let mut js = serde_json::to_string_pretty(&json).expect("shape serializes");
    js.push('\n');
    let mut artifacts = vec![text("shape.json", js)];
    if w.dim == 2 {
        artifacts.push(text("shape.svg", w.to_svg(overlay.as_ref())));
    }
    let summary = json!({
        "vertices": w.vertices.len(),
        "r_min": w.radii.iter().cloned().fold(f64::INFINITY, f64::min),
        "r_max": w.radii.iter().cloned().fold(0.0, f64::max),
        "fg_max_relative": fg.max_relative,
    });
    let checks = vec![
        check("convex", w.dim == 1 || w.is_convex(), 0.0),
        check("regular-fg-identity", fg.max_relative < 1e-9, fg.max_relative),
    ];
    cx.bundle.wulff = Some(w);
    Ok(Done {
        checks,
        summary,
        artifacts,
    })
}

fn isotropic_speed(curve: &SpeedCurve) -> Result<f64> {
    let (lo, hi) = (curve.min_speed(), curve.max_speed());
    if hi - lo > 1e-6 * hi {
        return Err(Error::Config(
            "unbounded-data targets are built for media with direction-independent speed".into(),
        ));
    }
    Ok(0.5 * (lo + hi))
}

fn stage_hausdorff(cx: &mut Context) -> Result<Done> {
    let cfg = cx.s.analysis.hausdorff.clone().expect("requested");
    let traj = cx.bundle.trajectory.as_ref().expect("simulation completed");
    let w = cx.bundle.wulff.as_ref().expect("wulff completed");
    let c_max = w.speeds.max_speed();
    let mut series: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    let mut window = None;
    for &lv in &cfg.levels {
        let rows = match cx.s.initial {
            InitialConfig::Cone { alpha } => {
                let c = isotropic_speed(&w.speeds)?;
                let t = shifted_shape(ShiftKind::Cone { alpha }, c)?;
                let a = t.apex();
                let half = cfg.window_half * c;
                let (lo, hi) = ([a[0] - half, a[1] - half], [a[0] + half, a[1] + half]);
                window = Some((lo, hi));
                windowed_convergence(traj, lv, &t, lo, hi, cfg.pixels)?
            }
            InitialConfig::Step { e } => {
                let n = e[0].hypot(e[1]);
                let e = [e[0] / n, e[1] / n];
                let t = shifted_shape(ShiftKind::Halfspace { e }, w.speeds.at(e))?;
                let a = t.apex();
                let half = cfg.window_half * c_max;
                let (lo, hi) = ([a[0] - half, a[1] - half], [a[0] + half, a[1] + half]);
                window = Some((lo, hi));
                windowed_convergence(traj, lv, &t, lo, hi, cfg.pixels)?
            }
            _ => rescaled_convergence(traj, lv, w)?,
        };
        series.push((lv, rows));
    }
    let mut csv = String::from("level,t,d\n");
    for (lv, rows) in &series {
        for (t, d) in rows {
            let _ = writeln!(csv, "{lv},{t},{d}");
        }
    }
    let first = &series[0].1;
    let finals: Vec<f64> = series.iter().map(|(_, r)| r.last().map_or(f64::INFINITY, |x| x.1)).collect();
    let d_final = finals[0];
    let tail: Vec<f64> = first.iter().rev().take(5).rev().map(|x| x.1).collect();
    let decreasing = tail.len() >= 2 && tail.windows(2).all(|p| p[1] < p[0]);
    let spread = finals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - finals.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut checks = vec![
        check("final-distance", d_final < cfg.rel_tol * c_max, d_final / c_max),
        check("decreasing-tail", decreasing, 0.0),
    ];
    if series.len() > 1 {
        checks.push(check("levels-agree", spread < 0.05, spread));
    }
    let empty = cx.bundle.measured.as_ref().is_some_and(|m| m.is_empty());
    let summary = json!({
        "c_max": c_max,
        "final_distance": finals,
        "window": window,
        "empty_invasion_shape": empty,
    });
    Ok(Done {
        checks,
        summary,
        artifacts: vec![text("series.csv", csv)],
    })
}

/// Candidate profiles for window fits along `e`.
pub fn profile_candidates(s: &Scenario, m: &PeriodicMedium, e: [f64; 2]) -> Result<Vec<FrontProfile>> {
    let iso = constant_scale(s, e).is_some_and(|k| (k - 1.0).abs() < 1e-12)
        && matches!(s.medium.diffusion, DiffusionConfig::Identity);
    if iso {
        let pf = planar_front_shooting(&s.medium.reaction, 1e-10)?;
        let z = pf.z_max().min(40.0);
        return Ok(vec![FrontProfile::from_planar(&pf, e, m, (-z, z), 0.05)?]);
    }
    let params = SpeedParams {
        keep_from: Some(60.0),
        step: s.step_options(),
        ..SpeedParams::default()
    };
    let run = run_front(m, e, &params)?;
    let p = extract_front_profile(m, &run.estimate, &run.snapshots, (-15.0, 20.0))?;
    Ok(vec![p])
}

fn stage_omega(cx: &mut Context) -> Result<Done> {
    let cfg = cx.s.analysis.omega.clone().expect("requested");
    let n = cfg.direction[0].hypot(cfg.direction[1]);
    let e = [cfg.direction[0] / n, cfg.direction[1] / n];
    let traj = cx.bundle.trajectory.as_ref().expect("simulation completed");
    let cands = profile_candidates(cx.s, &cx.medium, e)?;
    let mut rows = track_and_fit(traj, e, cfg.level, &cfg.times, cfg.radius, &cands)?;
    let last = rows.last().cloned().ok_or_else(|| Error::InsufficientData("no omega times".into()))?;
    let front_res: Vec<f64> = rows.iter().map(|r| r.fit.residual).collect();
    let decreasing = front_res.windows(2).all(|p| p[1] < p[0]);
    let u = traj.at(last.t).expect("snapshot exists");
    let bulk = bulk_windows(u, e, last.center, cfg.radius, &cands)?;
    let mut checks = vec![
        check("front-residual", last.fit.residual < crate::omega::FRONT_TOL, last.fit.residual),
        check("front-residual-decreasing", decreasing, 0.0),
    ];
    if let Some(b1) = &bulk.0 {
        checks.push(check("bulk-one", b1.class == WindowClass::Bulk1, b1.constant1));
    }
    if let Some(b0) = &bulk.1 {
        checks.push(check("bulk-zero", b0.class == WindowClass::Bulk0, b0.constant0));
    }
    rows.extend(bulk.0.iter().cloned());
    rows.extend(bulk.1.iter().cloned());
    let summary = json!({
        "direction": e,
        "residuals": front_res,
        "classes": rows.iter().map(|r| r.class.label()).collect::<Vec<_>>(),
    });
    Ok(Done {
        checks,
        summary,
        artifacts: vec![text("windows.csv", reports_to_csv(&rows))],
    })
}

/// Windows well behind and well ahead of the front along `e`, where they fit
/// on the grid.
pub fn bulk_windows(
    u: &GridField,
    e: [f64; 2],
    front: [f64; 2],
    radius: f64,
    cands: &[FrontProfile],
) -> Result<(Option<WindowReport>, Option<WindowReport>)> {
    let s = front[0] * e[0] + front[1] * e[1];
    let gap = radius + 10.0;
    let inner = (s - gap > 0.0).then(|| [(s - gap) * e[0], (s - gap) * e[1]]);
    let outer = [(s + gap) * e[0], (s + gap) * e[1]];
    let fit = |c: [f64; 2]| match fit_window(u, c, radius, cands) {
        Ok(r) => Ok(Some(r)),
        Err(Error::DomainTooSmall(_)) => Ok(None),
        Err(e) => Err(e),
    };
    let one = match inner {
        Some(c) => fit(c)?,
        None => None,
    };
    Ok((one, fit(outer)?))
}

fn stage_eigen(cx: &mut Context) -> Result<Done> {
    let cfg = cx.s.analysis.eigen.clone().expect("requested");
    let n = cfg.direction[0].hypot(cfg.direction[1]);
    let e = [cfg.direction[0] / n, cfg.direction[1] / n];
    let k0 = principal_eigenvalue(&cx.medium, e, 0.0)?.k;
    let rep = slope_check(&cx.medium, e, &cfg.lambdas, f64::INFINITY)?;
    let mut csv = String::from("lambda,k,ratio\n");
    for r in &rep.rows {
        let _ = writeln!(csv, "{},{},{}", r.lambda, r.k, r.ratio);
    }
    let halving = rep.final_ratio <= 0.5 * rep.rows[0].ratio;
    Ok(Done {
        checks: vec![
            check("k-at-zero", k0.abs() <= 1e-10, k0.abs()),
            check("ratio-decreasing", rep.decreasing, 0.0),
            check("ratio-halves", halving, rep.final_ratio),
        ],
        summary: json!({ "k0": k0, "rows": rep.rows }),
        artifacts: vec![text("slope.csv", csv)],
    })
}

/// Smallest distance from the origin to the `level` crossing over `rays`
/// equally spaced rays.
pub fn level_inradius(u: &GridField, level: f64, rays: usize) -> Result<f64> {
    let mut r = f64::INFINITY;
    for k in 0..rays {
        let a = std::f64::consts::TAU * k as f64 / rays as f64;
        let x = ray_crossing(u, [a.cos(), a.sin()], level)
            .ok_or_else(|| Error::InsufficientData(format!("no level-{level} crossing along ray {k}")))?;
        r = r.min(x[0].hypot(x[1]));
    }
    Ok(r)
}

/// Growth rate of the `level` inradius between two snapshots of a spreading
/// run; the initial radius drops out of the difference.
pub fn spreading_gamma(early: &GridField, late: &GridField, level: f64, rays: usize) -> Result<f64> {
    let dt = late.t - early.t;
    if !(dt > 0.0) {
        return Err(Error::Domain("spreading rate needs two increasing times".into()));
    }
    Ok((level_inradius(late, level, rays)? - level_inradius(early, level, rays)?) / dt)
}

/// Tolerance of cone margins for a shape measured on spacing `h` at time `t`.
pub fn cone_tolerance(h: f64, t: f64) -> f64 {
    2.0 * h / t
}

fn stage_cones(cx: &mut Context) -> Result<Done> {
    let cfg = cx.s.analysis.cones.clone().expect("requested");
    let measured = cx
        .bundle
        .measured
        .clone()
        .ok_or_else(|| Error::Config("cone conditions need a 2D run".into()))?;
    let region = measured
        .region()
        .ok_or_else(|| Error::InsufficientData("empty invasion shape".into()))?;
    let grid = cx.s.grid_spec()?;
    let u0 = GridField::from_fn(grid.clone(), |p| if p[0].hypot(p[1]) < cfg.rho { cfg.theta } else { 0.0 });
    let half = 0.5 * cfg.t_final;
    let run = simulate(&cx.medium, &u0, cfg.t_final, &[half, cfg.t_final], BoundarySpec::AsGrid, cx.s.step_options())?;
    let gamma = spreading_gamma(&run.snapshots[0], &run.snapshots[1], cfg.gamma_level, 64)?;
    let boundary = region.boundary_points(cfg.samples);
    let tol = cone_tolerance(grid.h, cx.s.time.t_final);
    let rep = cone_conditions_check(region, gamma, &boundary, &cfg.lambdas, tol)?;
    let mut csv = String::from("zx,zy,lambda,margin\n");
    for r in &rep.rows {
        let _ = writeln!(csv, "{},{},{},{}", r.z[0], r.z[1], r.lambda, r.margin);
    }
    Ok(Done {
        checks: vec![check("cone-conditions", rep.passed, rep.worst_margin)],
        summary: json!({ "gamma": gamma, "worst_margin": rep.worst_margin, "tolerance": tol }),
        artifacts: vec![text("margins.csv", csv)],
    })
}

/// Output families for [`emit_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
    /// Write every snapshot under `simulate/`.
    pub snapshots: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Self {
            csv: true,
            json: true,
            svg: true,
            snapshots: true,
        }
    }
}

fn wanted(name: &str, f: Formats) -> bool {
    match Path::new(name).extension().and_then(|e| e.to_str()) {
        Some("csv") => f.csv,
        Some("json") => f.json,
        Some("svg") => f.svg,
        _ => true,
    }
}

/// Snapshot file name for time `t`.
pub fn snapshot_name(t: f64) -> String {
    format!("u_t{t:010.4}.csv")
}

/// Writes `<out>/<scenario>/<stage>/<artifact>` plus `report.json`; returns
/// the written paths in order.
pub fn emit_report(bundle: &ReportBundle, out: &Path, formats: Formats) -> Result<Vec<PathBuf>> {
    let name = bundle.scenario.as_ref().map_or("empty", |s| s.name.as_str());
    let root = out.join(name);
    std::fs::create_dir_all(&root)?;
    let mut written = Vec::new();
    for rec in &bundle.stages {
        let dir = root.join(rec.stage.name());
        let files: Vec<&Artifact> = rec.artifacts.iter().filter(|a| wanted(&a.name, formats)).collect();
        let snaps = rec.stage == Stage::Simulate && formats.snapshots && formats.csv;
        if files.is_empty() && !snaps {
            continue;
        }
        std::fs::create_dir_all(&dir)?;
        for a in files {
            let p = dir.join(&a.name);
            std::fs::write(&p, &a.contents)?;
            written.push(p);
        }
        if let (true, Some(traj)) = (snaps, &bundle.trajectory) {
            for u in &traj.snapshots {
                let p = dir.join(snapshot_name(u.t));
                let f = std::io::BufWriter::new(std::fs::File::create(&p)?);
                u.write_csv(f)?;
                written.push(p);
            }
        }
    }
    if formats.json {
        let p = root.join("report.json");
        std::fs::write(&p, bundle.summary_json())?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(extra: &str) -> Scenario {
        let base = format!(
            r#"
name = "small"

[medium]
dim = 2
reaction = {{ kind = "bistable", alpha = 0.25 }}

[initial]
kind = "compact-ball"
theta = 1.0
rho = 4.0

[grid]
lo = [-16.0, -16.0]
hi = [16.0, 16.0]
h = 0.5

[time]
t_final = 20.0
output_every = 4.0
{extra}
"#
        );
        Scenario::from_toml(&base).unwrap()
    }

    #[test]
    fn closure_orders_dependencies() {
        assert_eq!(
            Stage::closure(&[Stage::Hausdorff]),
            vec![Stage::Simulate, Stage::Speeds, Stage::Wulff, Stage::Hausdorff]
        );
        assert_eq!(Stage::closure(&[Stage::Eigen]), vec![Stage::Eigen]);
    }

    #[test]
    fn pipeline_is_deterministic_and_self_describing() {
        let s = scenario(
            r#"
[analysis]
wulff = true
speeds = { method = "shooting", count = 64 }
hausdorff = { levels = [0.25, 0.75], rel_tol = 0.5 }
"#,
        );
        let b = run_scenario(&s).unwrap();
        assert_eq!(b.stages.len(), 4, "{:?}", b.stages);
        assert!(b.stages.iter().all(|r| r.status == StageStatus::Completed), "{:#?}", b.stages);
        let j1 = b.summary_json();
        let j2 = run_scenario(&s).unwrap().summary_json();
        assert_eq!(j1, j2);
        let v: Value = serde_json::from_str(&j1).unwrap();
        let back: Scenario = serde_json::from_value(v["config"].clone()).unwrap();
        assert_eq!(back, s);

        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&b, dir.path(), Formats::default()).unwrap();
        let svg = dir.path().join("small/wulff/shape.svg");
        assert!(files.contains(&svg));
        let svg = std::fs::read_to_string(svg).unwrap();
        assert!(svg.matches("<polygon").count() >= 2, "target and measured overlays");
        assert!(dir.path().join("small/simulate").join(snapshot_name(20.0)).exists());
        assert!(dir.path().join("small/hausdorff/series.csv").exists());
    }

    #[test]
    fn failures_skip_dependents() {
        // speeds by shooting are refused for a spatially varying medium
        let mut s = scenario("[analysis]\nwulff = true\nspeeds = { method = \"shooting\" }\n");
        s.medium.diffusion = DiffusionConfig::Oscillating { amp: 0.2 };
        let b = run_scenario(&s).unwrap();
        assert!(matches!(b.stage(Stage::Speeds).unwrap().status, StageStatus::Failed { .. }));
        assert!(matches!(b.stage(Stage::Wulff).unwrap().status, StageStatus::Skipped { .. }));
        assert!(!b.passed());
        let v: Value = serde_json::from_str(&b.summary_json()).unwrap();
        assert_eq!(v["stages"][2]["status"]["state"], "skipped");
    }

    #[test]
    fn extinction_flags_empty_shape() {
        let mut s = scenario("");
        s.initial = InitialConfig::CompactBall {
            theta: 0.3,
            rho: 2.0,
            center: [0.0, 0.0],
        };
        let b = run_scenario(&s).unwrap();
        let sim = b.stage(Stage::Simulate).unwrap();
        assert_eq!(sim.summary["empty_invasion_shape"], true);
        assert!(b.measured.as_ref().unwrap().is_empty());
    }

    #[test]
    fn empty_bundle_is_valid_json() {
        let b = ReportBundle::default();
        let v: Value = serde_json::from_str(&b.summary_json()).unwrap();
        assert_eq!(v["stages"], json!([]));
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&b, dir.path(), Formats::default()).unwrap();
        assert_eq!(files, vec![dir.path().join("empty/report.json")]);
    }
}

//! Acceptance suites A1 to A10 with pinned tolerances.

use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::spreading_gamma;
use crate::eigen::principal_eigenvalue;
use crate::error::{Error, Result};
use crate::fronts::{extract_front_profile, planar_front_shooting, run_front, FrontProfile, SpeedParams};
use crate::fronts::{lattice_directions, speed_table, unit};
use crate::grid::{AxisBoundary, Grid, GridField};
use crate::levelsets::{rescaled_convergence, upper_level_set, windowed_convergence, Disk, Region};
use crate::medium::{AdvectionSpec, DiffusionSpec, MediumBuilder, PeriodicMedium, ReactionSpec};
use crate::omega::{fit_window, track_and_fit, WindowClass};
use crate::solver::{simulate, BoundarySpec, StepOptions, Trajectory};
use crate::wulff::{
    ball_condition_probe, cone_conditions_check, regular_fg_check_region, shifted_shape, wulff_shape, ShiftKind,
    SpeedCurve,
};

/// Registered suite names, in order.
pub const SUITES: [&str; 10] = [
    "A1-front-speed",
    "A2-eigen-slope",
    "A3-disk",
    "A4-hausdorff",
    "A5-ellipse",
    "A6-cone",
    "A7-omega",
    "A8-comparison",
    "A9-pulsating",
    "A10-cone-conditions",
];

/// Pass thresholds. Defaults are the pinned values; a TOML file may override
/// individual keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub a1_speed_rel: f64,
    pub a1_seconds: f64,
    pub a2_k0: f64,
    pub a2_ratio_drop: f64,
    pub a2_seconds: f64,
    pub a3_radius_abs: f64,
    pub a3_seconds: f64,
    pub a4_final_rel: f64,
    pub a4_level_gap: f64,
    pub a4_seconds: f64,
    pub a5_ratio_rel: f64,
    pub a5_fg_rel: f64,
    pub a5_seconds: f64,
    pub a6_window_rel: f64,
    pub a6_seconds: f64,
    pub a7_front: f64,
    pub a7_bulk: f64,
    pub a8_violation: f64,
    pub a9_oscillation_cells: f64,
    pub a9_speed_rel: f64,
    /// Cone and ball margins may dip below zero by this many mesh widths of
    /// the rescaled shape.
    pub margin_cells: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            a1_speed_rel: 0.02,
            a1_seconds: 60.0,
            a2_k0: 1e-10,
            a2_ratio_drop: 0.5,
            a2_seconds: 10.0,
            a3_radius_abs: 1e-12,
            a3_seconds: 1.0,
            a4_final_rel: 0.1,
            a4_level_gap: 0.05,
            a4_seconds: 600.0,
            a5_ratio_rel: 0.05,
            a5_fg_rel: 0.05,
            a5_seconds: 900.0,
            a6_window_rel: 0.15,
            a6_seconds: 1200.0,
            a7_front: 0.05,
            a7_bulk: 0.02,
            a8_violation: 1e-12,
            a9_oscillation_cells: 1.0,
            a9_speed_rel: 0.03,
            margin_cells: 2.0,
        }
    }
}

impl Tolerances {
    pub fn from_toml(text: &str) -> Result<Tolerances> {
        let t: Tolerances = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let v = serde_json::to_value(self).expect("tolerances serialize");
        for (k, x) in v.as_object().expect("struct") {
            let x = x.as_f64().unwrap_or(f64::NAN);
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Config(format!("tolerance {k} = {x} must be positive and finite")));
            }
        }
        if self.a2_ratio_drop >= 1.0 {
            return Err(Error::Config("a2_ratio_drop must be below 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureKind {
    /// `value <= limit`.
    Bound,
    /// Yes/no requirement; `value` is 1 when it holds.
    Flag,
    Info,
}

/// One measured quantity and its bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub kind: MeasureKind,
    pub value: f64,
    pub limit: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub suite: String,
    pub passed: bool,
    pub measurements: Vec<Measurement>,
    pub note: String,
    /// Wall time; kept out of the JSON table so it stays reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

impl Verdict {
    /// `A1-front-speed PASS name=value<=limit ...`
    pub fn line(&self) -> String {
        let mut s = format!("{} {}", self.suite, if self.passed { "PASS" } else { "FAIL" });
        for m in &self.measurements {
            match (m.kind, m.limit) {
                (MeasureKind::Bound, Some(l)) => {
                    s += &format!(" {}={:.4e}{}{:.4e}", m.name, m.value, if m.passed { "<=" } else { ">" }, l)
                }
                (MeasureKind::Flag, _) => s += &format!(" {}={}", m.name, if m.passed { "yes" } else { "NO" }),
                _ => s += &format!(" {}={:.4e}", m.name, m.value),
            }
        }
        s += &format!(" ({:.1}s)", self.seconds);
        if !self.note.is_empty() {
            s += &format!(" [{}]", self.note);
        }
        s
    }
}

/// JSON verdict table.
pub fn verdict_table_json(v: &[Verdict]) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("verdicts serialize");
    s.push('\n');
    s
}

#[derive(Default)]
struct Sheet {
    rows: Vec<Measurement>,
    note: String,
}

impl Sheet {
    fn le(&mut self, name: &str, value: f64, limit: f64) {
        self.rows.push(Measurement {
            name: name.into(),
            kind: MeasureKind::Bound,
            value,
            limit: Some(limit),
            passed: value <= limit,
        });
    }

    fn holds(&mut self, name: &str, ok: bool) {
        self.rows.push(Measurement {
            name: name.into(),
            kind: MeasureKind::Flag,
            value: if ok { 1.0 } else { 0.0 },
            limit: None,
            passed: ok,
        });
    }

    fn info(&mut self, name: &str, value: f64) {
        self.rows.push(Measurement {
            name: name.into(),
            kind: MeasureKind::Info,
            value,
            limit: None,
            passed: true,
        });
    }
}

/// Runs one registered suite. Unknown names are configuration errors; a
/// suite that cannot finish reports a failed verdict with the error as note.
pub fn acceptance(suite: &str, tol: &Tolerances) -> Result<Verdict> {
    tol.validate()?;
    let f: fn(&Tolerances, &mut Sheet) -> Result<()> = match suite {
        "A1-front-speed" => a1,
        "A2-eigen-slope" => a2,
        "A3-disk" => a3,
        "A4-hausdorff" => a4,
        "A5-ellipse" => a5,
        "A6-cone" => a6,
        "A7-omega" => a7,
        "A8-comparison" => a8,
        "A9-pulsating" => a9,
        "A10-cone-conditions" => a10,
        _ => return Err(Error::Config(format!("unknown acceptance suite {suite:?}"))),
    };
    let start = Instant::now();
    let mut sheet = Sheet::default();
    let outcome = f(tol, &mut sheet);
    let seconds = start.elapsed().as_secs_f64();
    let limit = match suite {
        "A1-front-speed" => Some(tol.a1_seconds),
        "A2-eigen-slope" => Some(tol.a2_seconds),
        "A3-disk" => Some(tol.a3_seconds),
        "A4-hausdorff" => Some(tol.a4_seconds),
        "A5-ellipse" => Some(tol.a5_seconds),
        "A6-cone" => Some(tol.a6_seconds),
        _ => None,
    };
    if let (Some(l), Ok(())) = (limit, &outcome) {
        sheet.holds("within_runtime", seconds <= l);
    }
    if let Err(e) = &outcome {
        sheet.note = e.to_string();
    }
    Ok(Verdict {
        suite: suite.into(),
        passed: outcome.is_ok() && sheet.rows.iter().all(|m| m.passed),
        measurements: sheet.rows,
        note: sheet.note,
        seconds,
    })
}

/// Looks a suite up by its full name or its `A<n>` prefix.
pub fn resolve_suite(name: &str) -> Option<&'static str> {
    SUITES
        .iter()
        .copied()
        .find(|s| *s == name || s.split('-').next() == Some(name))
}

pub fn run_all(tol: &Tolerances) -> Result<Vec<Verdict>> {
    SUITES.iter().map(|s| acceptance(s, tol)).collect()
}

fn bistable() -> ReactionSpec {
    ReactionSpec::Bistable { alpha: 0.25 }
}

fn homogeneous(dim: usize, res: usize) -> Result<PeriodicMedium> {
    MediumBuilder::new(dim, res, bistable()).build()
}

fn shooting_speed() -> Result<f64> {
    Ok(planar_front_shooting(&bistable(), 1e-10)?.c)
}

/// Rightmost `level` crossing of a 1D field by linear interpolation.
fn crossing_1d(u: &GridField, level: f64) -> Option<f64> {
    let v = &u.values;
    (0..v.len() - 1).rev().find(|&i| v[i] > level && v[i + 1] <= level).map(|i| {
        let f = (v[i] - level) / (v[i] - v[i + 1]);
        u.grid.position(i)[0] + f * u.grid.h
    })
}

/// Least-squares slope of `(t, x)` pairs.
fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mx = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mx)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    num / den
}

fn a1(tol: &Tolerances, s: &mut Sheet) -> Result<()> {
    let c_shoot = shooting_speed()?;
    let m = homogeneous(1, 50)?;
    let g = Grid::rect([-100.0, 0.0], [100.0, 0.0], 50, [AxisBoundary::Neumann; 2])?;
    let u0 = GridField::from_fn(g, |p| if p[0] <= -60.0 { 1.0 } else { 0.0 });
    let times: Vec<f64> = (1..=150).map(f64::from).collect();
    let traj = simulate(&m, &u0, 150.0, &times, BoundarySpec::Neumann, StepOptions::default())?;
    let pts: Vec<(f64, f64)> = traj
        .snapshots
        .iter()
        .filter(|u| u.t >= 75.0)
        .map(|u| crossing_1d(u, 0.5).map(|x| (u.t, x)))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::DomainTooSmall("level 1/2 left the line".into()))?;
    let c_sim = slope(&pts);
    s.info("c_shooting", c_shoot);
    s.info("c_simulated", c_sim);
    s.le("relative_gap", (c_sim - c_shoot).abs() / c_shoot, tol.a1_speed_rel);
    Ok(())
}

fn a2(tol: &Tolerances, s: &mut Sheet) -> Result<()> {
    let m = MediumBuilder::new(2, 16, bistable())
        .advection(AdvectionSpec::Shear { amp: 1.0 })
        .build()?;
    let e = [1.0, 0.0];
    let k0 = principal_eigenvalue(&m, e, 0.0)?.k;
    s.le("abs_k0", k0.abs(), tol.a2_k0);
    let lambdas = [0.2, 0.1, 0.05];
    let ratios: Vec<f64> = lambdas
        .iter()
        .map(|&l| principal_eigenvalue(&m, e, l).map(|p| p.k.abs() / l))
        .collect::<Result<_>>()?;
    for (l, r) in lambdas.iter().zip(&ratios) {
        s.info(&format!("ratio_{l}"), *r);
    }
    s.holds("strictly_decreasing", ratios.windows(2).all(|w| w[1] < w[0]));
    s.le("ratio_drop", ratios[2] / ratios[0], tol.a2_ratio_drop);
    Ok(())
}

fn a3(tol: &Tolerances, s: &mut Sheet) -> Result<()> {
    let n = 256;
    let dirs: Vec<[f64; 2]> = (0..n)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / n as f64;
            [a.cos(), a.sin()]
        })
        .collect();
    let w = wulff_shape(2, &dirs, &vec![1.0; n], n)?;
    let spread = w.radii.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    s.info("directions", w.radii.len() as f64);
    s.le("max_abs_w_minus_c", spread, tol.a3_radius_abs);
    Ok(())
}

/// Compact-data run shared by A4 and A10: `u0 = 1` on `B_7`, `h = 1/4`,
/// `[-50, 50]^2`, snapshots every 10 up to 100.
fn disk_run() -> Result<&'static Trajectory> {
    static RUN: OnceLock<std::result::Result<Trajectory, Error>> = OnceLock::new();
    RUN.get_or_init(|| {
        let m = homogeneous(2, 4)?;
        let g = Grid::centered(2, 50.0, 4, AxisBoundary::Neumann)?;
        let u0 = GridField::from_fn(g, |p| if p[0].hypot(p[1]) < 7.0 { 1.0 } else { 0.0 });
        let times: Vec<f64> = (1..=10).map(|k| 10.0 * k as f64).collect();
        simulate(&m, &u0, 100.0, &times, BoundarySpec::Neumann, StepOptions::default())
    })
    .as_ref()
    .map_err(Clone::clone)
}

fn a4(tol: &Tolerances, s: &mut Sheet) -> Result<()> {
    let c = shooting_speed()?;
    let traj = disk_run()?;
    let target = Disk {
        center: [0.0, 0.0],
        radius: c,
    };
    let half = rescaled_convergence(traj, 0.5, &target)?;
    let d = |lv: f64| -> Result<f64> {
        let u = traj.last().expect("snapshots");
        let e = crate::levelsets::rescaled_level_set(u, lv)?;
        Ok(crate::levelsets::hausdorff(&e, &target))
    };
    let tail: Vec<f64> = half.iter().rev().take(5).rev().map(|x| x.1).collect();
    for (t, v) in half.iter().rev().take(5).rev() {
        s.info(&format!("d_t{t}"), *v);
    }
    s.holds("decreasing_last5", tail.windows(2).all(|w| w[1] < w[0]));
    s.le("d_final_over_c", tail[tail.len() - 1] / c, tol.a4_final_rel);
    let gap = (d(0.25)? - d(0.75)?).abs();
    s.le("level_gap", gap, tol.a4_level_gap);
    Ok(())
}

fn a5(tol: &Tolerances, s: &mut Sheet) -> Result<()> {
    let diff = DiffusionSpec::Constant {
        a11: 1.0,
        a22: 4.0,
        a12: 0.0,
    };
    let m = MediumBuilder::new(2, 4, bistable()).diffusion(diff).build()?;
    let t_final = 150.0;
    let g = Grid::rect([-65.0, -125.0], [65.0, 125.0], 4, [AxisBoundary::Neumann; 2])?;
    let u0 = GridField::from_fn(g, |p| {
        if (p[0] / 7.0).powi(2) + (p[1] / 14.0).powi(2) < 1.0 {
            1.0
        } else {
            0.0
        }
    });
    let traj = simulate(&m, &u0, t_final, &[t_final], BoundarySpec::Neumann, StepOptions::default())?;
    let u = traj.last().expect("snapshot");
    let set = upper_level_set(u, 0.5).scaled(1.0 / t_final);
    let region = set
        .region()
        .ok_or_else(|| Error::InsufficientData("empty invasion shape".into()))?;
    let (lo, hi) = region.bounds();
    let (gl, gh) = u.grid.bounds();
    if lo[0] * t_final <= gl[0] + 1.0 || hi[1] * t_final >= gh[1] - 1.0 {
        return Err(Error::DomainTooSmall("level set reached the boundary".into()));
    }
    let ratio = (hi[1] - lo[1]) / (hi[0] - lo[0]);
    s.info("semi_x", 0.5 * (hi[0] - lo[0]));
    s.info("semi_y", 0.5 * (hi[1] - lo[1]));
    s.le("ratio_rel_error", (ratio / 2.0 - 1.0).abs(), tol.a5_ratio_rel);

    let params = SpeedParams {
        max_denominator: 3,
        ..SpeedParams::default()
    };
    let dirs: Vec<[f64; 2]> = lattice_directions(3).into_iter().map(unit).collect();
    let table = speed_table(&m, &dirs, &params)?;
    let curve = SpeedCurve::new(&table.directions(), &table.speeds())?;
    let fg = regular_fg_check_region(region, &curve, 32, 0.005);
    s.info("table_directions", curve.len() as f64);
    s.le("fg_max_relative", fg.max_relative, tol.a5_fg_rel);
    Ok(())
}

/// Measured boundary point nearest to `p`.
fn nearest_boundary(dense: &[[f64; 2]], p: [f64; 2]) -> [f64; 2] {
    *dense
        .iter()
        .min_by(|a, b| {
            let da = (a[0] - p[0]).hypot(a[1] - p[1]);
            let db = (b[0] - p[0]).hypot(b[1] - p[1]);
            da.total_cmp(&db)
        })
        .expect("nonempty boundary")
}

fn a6(tol: &Tolerances, s: &mut Sheet) -> Result<()> {
    let c = shooting_speed()?;
    let m = homogeneous(2, 4)?;
    let t_final = 80.0;
    let g = Grid::rect([-70.0, -75.0], [70.0, 90.0], 4, [AxisBoundary::Neumann; 2])?;
    let h = g.h;
    let u0 = GridField::from_fn(g, |p| if p[1] <= -p[0].abs() { 1.0 } else { 0.0 });
    let traj = simulate(&m, &u0, t_final, &[40.0, 60.0, 80.0], BoundarySpec::Neumann, StepOptions::default())?;
    let target = shifted_shape(ShiftKind::Cone { alpha: -1.0 }, c)?;
    let a = target.apex();
    let lo = [a[0] - 2.0 * c, a[1] - 2.0 * c];
    let hi = [a[0] + 2.0 * c, a[1] + 2.0 * c];
    let series = windowed_convergence(&traj, 0.5, &target, lo, hi, 800)?;
    for (t, d) in &series {
        s.info(&format!("d_over_c_t{t}"), d / c);
    }
    let d_final = series.last().expect("three snapshots").1;
    s.le("d_final_over_c", d_final / c, tol.a6_window_rel);

    let u = traj.last().expect("snapshot");
    let set = upper_level_set(u, 0.5).scaled(1.0 / t_final);
    let region = set
        .region()
        .ok_or_else(|| Error::InsufficientData("empty level set".into()))?;
    let dense = region.boundary_points(20_000);
    let mtol = tol.margin_cells * h / t_final;
    let mut worst = f64::INFINITY;
    let mut passed = 0;
    for p in target.boundary_samples(16, 1.5 * c) {
        let z = nearest_boundary(&dense, p);
        let probe = ball_condition_probe(region, z, 0.5 * c, mtol);
        worst = worst.min(probe.margin);
        if probe.interior && probe.exterior {
            passed += 1;
        }
    }
    s.info("ball_worst_margin", worst);
    s.le("ball_failures", (16 - passed) as f64, 0.0);
    Ok(())
}

fn a7(tol: &Tolerances, s: &mut Sheet) -> Result<()> {
    let m = homogeneous(2, 4)?;
    let g = Grid::rect([0.0, -100.0], [120.0, 100.0], 4, [AxisBoundary::Neumann; 2])?;
    let u0 = GridField::from_fn(g, |p| if p[0].hypot(p[1]) < 50.0 { 1.0 } else { 0.0 });
    let times = [40.0, 60.0, 80.0];
    let traj = simulate(&m, &u0, 80.0, &times, BoundarySpec::Neumann, StepOptions::default())?;
    let pf = planar_front_shooting(&bistable(), 1e-10)?;
    let e = [1.0, 0.0];
    let zr = pf.z_max().min(40.0);
    let cand = [FrontProfile::from_planar(&pf, e, &m, (-zr, zr), 0.05)?];
    let rows = track_and_fit(&traj, e, 0.5, &times, crate::omega::WINDOW_RADIUS, &cand)?;
    let res: Vec<f64> = rows.iter().map(|r| r.fit.residual).collect();
    for (t, r) in times.iter().zip(&res) {
        s.info(&format!("front_residual_t{t}"), *r);
    }
    s.holds("front_residual_decreasing", res.windows(2).all(|w| w[1] < w[0]));
    s.le("front_residual_final", res[2], tol.a7_front);
    let last = rows.last().expect("three windows");
    s.holds("front_classified", last.class == WindowClass::Front);
    let u = traj.last().expect("snapshot");
    let one = fit_window(u, [10.0, 0.0], crate::omega::WINDOW_RADIUS, &cand)?;
    let zero = fit_window(u, [last.center[0] + 18.0, 0.0], crate::omega::WINDOW_RADIUS, &cand)?;
    s.holds("bulk_one_classified", one.class == WindowClass::Bulk1);
    s.le("bulk_one_residual", one.constant1, tol.a7_bulk);
    s.holds("bulk_zero_classified", zero.class == WindowClass::Bulk0);
    s.le("bulk_zero_residual", zero.constant0, tol.a7_bulk);
    Ok(())
}

/// Periodic medium used by the comparison suite.
pub fn comparison_medium() -> Result<PeriodicMedium> {
    MediumBuilder::new(
        2,
        4,
        ReactionSpec::PeriodicBistable {
            alpha_mean: 0.25,
            alpha_amp: 0.1,
        },
    )
    .diffusion(DiffusionSpec::Oscillating { amp: 0.3 })
    .advection(AdvectionSpec::Shear { amp: 0.5 })
    .build()
}

/// Random ordered pair `lower <= upper` on `grid`; about a tenth of the nodes
/// are ties.
pub fn ordered_pair(grid: &Grid, rng: &mut ChaCha8Rng) -> (GridField, GridField) {
    let n = grid.len();
    let mut lo = Vec::with_capacity(n);
    let mut up = Vec::with_capacity(n);
    for _ in 0..n {
        let v: f64 = rng.random();
        let gap: f64 = if rng.random_bool(0.1) { 0.0 } else { 0.5 * rng.random::<f64>() };
        lo.push(v);
        up.push((v + gap).min(1.0));
    }
    (
        GridField::new(grid.clone(), lo, 0.0).expect("sized"),
        GridField::new(grid.clone(), up, 0.0).expect("sized"),
    )
}

/// Largest `lower - upper` over every snapshot pair.
pub fn max_violation(a: &Trajectory, b: &Trajectory) -> f64 {
    a.snapshots
        .iter()
        .zip(&b.snapshots)
        .flat_map(|(x, y)| x.values.iter().zip(&y.values).map(|(p, q)| p - q))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn a8(tol: &Tolerances, s: &mut Sheet) -> Result<()> {
    let m = comparison_medium()?;
    let g = Grid::rect([0.0, 0.0], [7.75, 7.75], 4, [AxisBoundary::Periodic; 2])?;
    let times: Vec<f64> = (1..=10).map(|k| 0.5 * k as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let pairs: Vec<_> = (0..100).map(|_| ordered_pair(&g, &mut rng)).collect();
    let worst = crate::par::map_slice(&pairs, |(lo, up)| -> Result<(f64, bool)> {
        let a = simulate(&m, lo, 5.0, &times, BoundarySpec::AsGrid, StepOptions::default())?;
        let b = simulate(&m, up, 5.0, &times, BoundarySpec::AsGrid, StepOptions::default())?;
        let v = max_violation(&a, &b);
        Ok((v, v > tol.a8_violation))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let violations = worst.iter().filter(|w| w.1).count();
    s.info("pairs", worst.len() as f64);
    s.info("max_lower_minus_upper", worst.iter().map(|w| w.0).fold(f64::NEG_INFINITY, f64::max));
    s.le("violating_pairs", violations as f64, 0.0);
    Ok(())
}

fn a9(tol: &Tolerances, s: &mut Sheet) -> Result<()> {
    let f = ReactionSpec::PeriodicBistable {
        alpha_mean: 0.25,
        alpha_amp: 0.1,
    };
    let e = [1.0, 0.0];
    let params = SpeedParams {
        keep_from: Some(80.0),
        ..SpeedParams::default()
    };
    let m8 = MediumBuilder::new(2, 8, f.clone()).build()?;
    let m16 = MediumBuilder::new(2, 16, f).build()?;
    let r8 = run_front(&m8, e, &params)?;
    let r16 = run_front(&m16, e, &SpeedParams { keep_from: None, ..params })?;
    let (c8, c16) = (r8.estimate.c, r16.estimate.c);
    s.info("c_h", c8);
    s.info("c_h_half", c16);
    s.le("oscillation_cells", r8.estimate.oscillation, tol.a9_oscillation_cells);
    s.le("speed_rel_gap", (c8 - c16).abs() / c16, tol.a9_speed_rel);
    let p = extract_front_profile(&m8, &r8.estimate, &r8.snapshots, (-15.0, 20.0))?;
    s.le("monotonicity_violations", p.monotonicity_violations() as f64, 0.0);
    s.info("lambda0", p.lambda0);
    s.holds("lambda0_positive", p.lambda0 > 0.0);
    s.holds("tail_bound", p.tail_bound_holds());
    Ok(())
}

fn a10(tol: &Tolerances, s: &mut Sheet) -> Result<()> {
    let traj = disk_run()?;
    let u = traj.last().expect("snapshots");
    let set = upper_level_set(u, 0.5).scaled(1.0 / u.t);
    let region: &Region = set
        .region()
        .ok_or_else(|| Error::InsufficientData("empty invasion shape".into()))?;
    // gamma from a separate spreading run of 0.9 on B_8
    let m = homogeneous(2, 4)?;
    let g = Grid::centered(2, 35.0, 4, AxisBoundary::Neumann)?;
    let h = g.h;
    let v0 = GridField::from_fn(g, |p| if p[0].hypot(p[1]) < 8.0 { 0.9 } else { 0.0 });
    let run = simulate(&m, &v0, 60.0, &[30.0, 60.0], BoundarySpec::Neumann, StepOptions::default())?;
    let gamma = spreading_gamma(&run.snapshots[0], &run.snapshots[1], 0.9, 64)?;
    s.info("gamma", gamma);
    let boundary = region.boundary_points(16);
    let mtol = tol.margin_cells * h / u.t;
    let rep = cone_conditions_check(region, gamma, &boundary, &[0.25, 0.5, 0.75, 1.5, 2.0], mtol)?;
    s.info("samples", boundary.len() as f64);
    s.le("negative_worst_margin", -rep.worst_margin, mtol);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corrupted_tolerances_are_config_errors() {
        assert!(matches!(Tolerances::from_toml("a1_speed_rel = -0.1"), Err(Error::Config(_))));
        assert!(matches!(Tolerances::from_toml("a1_speed_rel = \"x\""), Err(Error::Config(_))));
        assert!(matches!(Tolerances::from_toml("nonsense = 1.0"), Err(Error::Config(_))));
        let t = Tolerances::from_toml("a1_speed_rel = 0.01").unwrap();
        assert_eq!(t.a1_speed_rel, 0.01);
        assert_eq!(t.a3_radius_abs, Tolerances::default().a3_radius_abs);
        let mut bad = Tolerances::default();
        bad.a4_final_rel = f64::NAN;
        assert!(matches!(acceptance("A3-disk", &bad), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(matches!(acceptance("A11", &Tolerances::default()), Err(Error::Config(_))));
        assert_eq!(resolve_suite("A3"), Some("A3-disk"));
        assert_eq!(resolve_suite("A10"), Some("A10-cone-conditions"));
        assert_eq!(resolve_suite("A1-front-speed"), Some("A1-front-speed"));
    }

    #[test]
    fn disk_suite_passes() {
        let v = acceptance("A3-disk", &Tolerances::default()).unwrap();
        assert!(v.passed, "{}", v.line());
        assert!(v.line().starts_with("A3-disk PASS"));
    }

    #[test]
    fn ordered_pairs_are_ordered() {
        let g = Grid::rect([0.0, 0.0], [1.75, 1.75], 4, [AxisBoundary::Periodic; 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (a, b) = ordered_pair(&g, &mut rng);
        assert!(a.values.iter().zip(&b.values).all(|(x, y)| x <= y));
        assert!(a.values.iter().zip(&b.values).any(|(x, y)| x == y));
    }
}

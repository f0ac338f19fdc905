//! Space-time windows along rays, fitted against pulsating front profiles.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fronts::{cell_of, FrontProfile};
use crate::grid::GridField;
use crate::par;
use crate::solver::Trajectory;

/// Default window radius, in cells.
pub const WINDOW_RADIUS: f64 = 8.0;
/// Residual below which a window counts as a front.
pub const FRONT_TOL: f64 = 0.05;
/// Constant-fit residual below which a window counts as a bulk state.
pub const BULK_TOL: f64 = 0.02;
/// Coarse step of the time-shift scan, in units of `1 / c`.
pub const SHIFT_STEP: f64 = 0.1;

/// Values `u(t, x_n + y)` at the grid nodes with `|y| <= radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub t: f64,
    /// Grid node nearest to the requested centre.
    pub center: [f64; 2],
    pub radius: f64,
    pub dim: usize,
    pub resolution: usize,
    /// Physical lattice coordinates of the centre node.
    pub center_lattice: [i64; 2],
    /// Lattice offsets of the samples from the centre.
    pub offsets: Vec<[i64; 2]>,
    pub values: Vec<f64>,
}

impl Window {
    /// Cuts a window out of a snapshot; the whole disk must lie on the grid.
    pub fn extract(u: &GridField, center: [f64; 2], radius: f64) -> Result<Window> {
        let g = &u.grid;
        if !(radius > 0.0) {
            return Err(Error::Domain(format!("window radius {radius} must be positive")));
        }
        let h = g.h;
        let l = g.frame.to_local(center);
        let ci = (l[0] / h).round() as i64 - g.offset[0];
        let cj = if g.dim == 2 { (l[1] / h).round() as i64 - g.offset[1] } else { 0 };
        let k = (radius / h).floor() as i64;
        let ny = if g.dim == 2 { g.n[1] as i64 } else { 1 };
        let kj = if g.dim == 2 { k } else { 0 };
        if ci - k < 0 || ci + k >= g.n[0] as i64 || cj - kj < 0 || cj + kj >= ny {
            return Err(Error::DomainTooSmall(format!(
                "window of radius {radius} at {center:?} leaves the grid"
            )));
        }
        let cidx = g.index(ci as usize, cj as usize);
        let mut offsets = Vec::new();
        let mut values = Vec::new();
        for dj in -kj..=kj {
            for di in -k..=k {
                if di * di + dj * dj > k * k {
                    continue;
                }
                let idx = g.index((ci + di) as usize, (cj + dj) as usize);
                let pl = g.physical_lattice(idx);
                let c = g.physical_lattice(cidx);
                offsets.push([pl[0] - c[0], pl[1] - c[1]]);
                values.push(u.values[idx]);
            }
        }
        Ok(Window {
            t: u.t,
            center: g.position(cidx),
            radius,
            dim: g.dim,
            resolution: g.resolution(),
            center_lattice: g.physical_lattice(cidx),
            offsets,
            values,
        })
    }

    /// Window sampled from the reconstructed front `phi(s, .)` itself.
    pub fn from_profile(p: &FrontProfile, s: f64, center_lattice: [i64; 2], radius: f64) -> Window {
        let h = 1.0 / p.resolution as f64;
        let k = (radius / h).floor() as i64;
        let kj = if p.dim == 2 { k } else { 0 };
        let mut offsets = Vec::new();
        let mut values = Vec::new();
        for dj in -kj..=kj {
            for di in -k..=k {
                if di * di + dj * dj > k * k {
                    continue;
                }
                offsets.push([di, dj]);
                values.push(p.phi(s, [center_lattice[0] + di, center_lattice[1] + dj]));
            }
        }
        Window {
            t: s,
            center: [center_lattice[0] as f64 * h, center_lattice[1] as f64 * h],
            radius,
            dim: p.dim,
            resolution: p.resolution,
            center_lattice,
            offsets,
            values,
        }
    }

    /// `max |u - v|` against a constant.
    pub fn constant_residual(&self, v: f64) -> f64 {
        self.values.iter().map(|u| (u - v).abs()).fold(0.0, f64::max)
    }
}

/// Best match of a window against a set of profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub candidate: usize,
    pub direction: [f64; 2],
    /// Time `s` of the matching front state `phi(s, x + y)`.
    pub time_shift: f64,
    /// Lattice cell shift `y / h`, each component in `[0, M)`.
    pub cell_shift: [i64; 2],
    pub residual: f64,
}

fn is_cell_uniform(p: &FrontProfile) -> bool {
    let r0 = p.row(0);
    (1..p.cells()).all(|c| p.row(c) == r0)
}

fn sup_residual(w: &Window, p: &FrontProfile, s: f64, sigma: [i64; 2]) -> f64 {
    let h = 1.0 / p.resolution as f64;
    let base = [w.center_lattice[0] + sigma[0], w.center_lattice[1] + sigma[1]];
    let e = p.direction;
    let zc = (base[0] as f64 * e[0] + base[1] as f64 * e[1]) * h - p.c * s;
    w.offsets
        .iter()
        .zip(&w.values)
        .map(|(o, u)| {
            let pl = [base[0] + o[0], base[1] + o[1]];
            let z = zc + (o[0] as f64 * e[0] + o[1] as f64 * e[1]) * h;
            (u - p.eval(cell_of(p.dim, p.resolution, pl), z)).abs()
        })
        .fold(0.0, f64::max)
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

fn fit_one(w: &Window, p: &FrontProfile) -> (f64, [i64; 2], f64) {
    let r = p.resolution as i64;
    let shifts: Vec<[i64; 2]> = if is_cell_uniform(p) {
        vec![[0, 0]]
    } else if p.dim == 1 {
        (0..r).map(|i| [i, 0]).collect()
    } else {
        (0..r * r).map(|k| [k % r, k / r]).collect()
    };
    let h = 1.0 / r as f64;
    let step = SHIFT_STEP / p.c;
    // scan the centre's z over the tabulated range widened by the radius
    let zlo = p.z0 - w.radius - 1.0;
    let zhi = p.z_max() + w.radius + 1.0;
    let jobs: Vec<([i64; 2], f64)> = shifts
        .iter()
        .flat_map(|&sg| {
            let base = [w.center_lattice[0] + sg[0], w.center_lattice[1] + sg[1]];
            let xe = (base[0] as f64 * p.direction[0] + base[1] as f64 * p.direction[1]) * h;
            let s_lo = (xe - zhi) / p.c;
            let n = ((zhi - zlo) / SHIFT_STEP).ceil() as usize + 1;
            (0..n).map(move |k| (sg, s_lo + k as f64 * step))
        })
        .collect();
    let vals = par::map_slice(&jobs, |(sg, s)| sup_residual(w, p, *s, *sg));
    let best = (0..jobs.len())
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .unwrap_or(0);
    let (sg, s0) = jobs[best];
    let (s, res) = golden_min(|s| sup_residual(w, p, s, sg), s0 - step, s0 + step, 60);
    if res <= vals[best] {
        (s, sg, res)
    } else {
        (s0, sg, vals[best])
    }
}

/// Minimizes the sup-norm mismatch over candidates, cell shifts and time
/// shifts (coarse scan, then golden-section refinement).
pub fn front_fit(w: &Window, candidates: &[FrontProfile]) -> Result<Fit> {
    if candidates.is_empty() {
        return Err(Error::InsufficientData("no candidate profiles".into()));
    }
    if w.radius < 1.0 {
        return Err(Error::InsufficientData(format!(
            "window radius {} is below one period",
            w.radius
        )));
    }
    for p in candidates {
        if !(p.c > 0.0) {
            return Err(Error::NoPositiveSpeed { speed: p.c });
        }
        if p.resolution != w.resolution || p.dim != w.dim {
            return Err(Error::Structural(format!(
                "profile resolution {} (dim {}) differs from window resolution {} (dim {})",
                p.resolution, p.dim, w.resolution, w.dim
            )));
        }
    }
    let mut best: Option<Fit> = None;
    for (k, p) in candidates.iter().enumerate() {
        let (s, sg, res) = fit_one(w, p);
        if best.as_ref().is_none_or(|b| res < b.residual) {
            best = Some(Fit {
                candidate: k,
                direction: p.direction,
                time_shift: s,
                cell_shift: sg,
                residual: res,
            });
        }
    }
    Ok(best.expect("candidates nonempty"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowClass {
    Front,
    Bulk0,
    Bulk1,
    Unresolved,
}

impl WindowClass {
    pub fn label(&self) -> &'static str {
        match self {
            WindowClass::Front => "front",
            WindowClass::Bulk0 => "bulk-0",
            WindowClass::Bulk1 => "bulk-1",
            WindowClass::Unresolved => "unresolved",
        }
    }
}

/// Bulk when a constant fits within [`BULK_TOL`]; otherwise front when the
/// fit is within [`FRONT_TOL`].
///
/// The constants are limits of fronts translated to infinity, so a far tail
/// may fit the profile slightly better than the constant; the constant wins.
pub fn classify(w: &Window, fit: &Fit) -> WindowClass {
    let r0 = w.constant_residual(0.0);
    let r1 = w.constant_residual(1.0);
    let rc = r0.min(r1);
    if rc < BULK_TOL {
        if r1 <= r0 {
            WindowClass::Bulk1
        } else {
            WindowClass::Bulk0
        }
    } else if fit.residual < FRONT_TOL {
        WindowClass::Front
    } else {
        WindowClass::Unresolved
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayTrack {
    pub direction: [f64; 2],
    pub level: f64,
    /// `(t_n, x_n)` for snapshots with a crossing.
    pub points: Vec<(f64, [f64; 2])>,
    /// Times of snapshots without a crossing.
    pub skipped: Vec<f64>,
}

/// Largest `s` with `u(s e) > level >= u((s + ds) e)`, by bilinear sampling.
pub fn ray_crossing(u: &GridField, e: [f64; 2], level: f64) -> Option<[f64; 2]> {
    let ds = 0.5 * u.grid.h;
    let mut prev: Option<(f64, f64)> = None;
    let mut found = None;
    let mut s = 0.0;
    while let Some(v) = u.sample([s * e[0], s * e[1]]) {
        if let Some((sp, vp)) = prev {
            if vp > level && v <= level {
                let f = (vp - level) / (vp - v);
                found = Some(sp + f * (s - sp));
            }
        }
        prev = Some((s, v));
        s += ds;
    }
    found.map(|s| [s * e[0], s * e[1]])
}

/// Level crossing along the ray `{s e : s > 0}` for every snapshot.
pub fn ray_tracker(traj: &Trajectory, e: [f64; 2], level: f64) -> Result<RayTrack> {
    let n = e[0].hypot(e[1]);
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("ray direction {e:?} is not a unit vector")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("level {level} must lie in (0, 1)")));
    }
    let found = par::map_slice(&traj.snapshots, |u| ray_crossing(u, e, level));
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for (u, x) in traj.snapshots.iter().zip(found) {
        match x {
            Some(x) => points.push((u.t, x)),
            None => skipped.push(u.t),
        }
    }
    Ok(RayTrack {
        direction: e,
        level,
        points,
        skipped,
    })
}

/// One classified window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub t: f64,
    pub center: [f64; 2],
    pub fit: Fit,
    pub constant0: f64,
    pub constant1: f64,
    pub class: WindowClass,
}

/// Fits and classifies the window at `center` of snapshot `u`.
pub fn fit_window(u: &GridField, center: [f64; 2], radius: f64, candidates: &[FrontProfile]) -> Result<WindowReport> {
    let w = Window::extract(u, center, radius)?;
    let fit = front_fit(&w, candidates)?;
    Ok(WindowReport {
        t: w.t,
        center: w.center,
        constant0: w.constant_residual(0.0),
        constant1: w.constant_residual(1.0),
        class: classify(&w, &fit),
        fit,
    })
}

/// Fits windows centred on the ray crossings at the requested times.
pub fn track_and_fit(
    traj: &Trajectory,
    e: [f64; 2],
    level: f64,
    times: &[f64],
    radius: f64,
    candidates: &[FrontProfile],
) -> Result<Vec<WindowReport>> {
    let track = ray_tracker(traj, e, level)?;
    let mut out = Vec::new();
    for &t in times {
        let Some((_, x)) = track.points.iter().find(|p| (p.0 - t).abs() < 1e-9) else {
            return Err(Error::InsufficientData(format!("no crossing at t = {t}")));
        };
        let u = traj.at(t).expect("tracked snapshot exists");
        out.push(fit_window(u, *x, radius, candidates)?);
    }
    Ok(out)
}

/// Per-minimizer residuals of windows along a corner direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerScan {
    pub direction: [f64; 2],
    pub minimizers: Vec<[f64; 2]>,
    /// `(t, residual against each minimizer's profile)`.
    pub rows: Vec<(f64, Vec<f64>)>,
    /// Index of the best minimizer at each time.
    pub winners: Vec<usize>,
}

/// Fits windows along `e` against the profiles of every minimizer.
pub fn corner_direction_scan(
    traj: &Trajectory,
    e: [f64; 2],
    minimizers: &[FrontProfile],
    times: &[f64],
    level: f64,
    radius: f64,
) -> Result<CornerScan> {
    if minimizers.is_empty() {
        return Err(Error::InsufficientData("empty minimizer set".into()));
    }
    let track = ray_tracker(traj, e, level)?;
    let mut rows = Vec::new();
    let mut winners = Vec::new();
    for &t in times {
        let Some((_, x)) = track.points.iter().find(|p| (p.0 - t).abs() < 1e-9) else {
            return Err(Error::InsufficientData(format!("no crossing at t = {t}")));
        };
        let w = Window::extract(traj.at(t).expect("tracked snapshot exists"), *x, radius)?;
        let res: Vec<f64> = minimizers
            .iter()
            .map(|p| front_fit(&w, std::slice::from_ref(p)).map(|f| f.residual))
            .collect::<Result<_>>()?;
        let best = (0..res.len()).min_by(|&a, &b| res[a].total_cmp(&res[b])).unwrap_or(0);
        winners.push(best);
        rows.push((t, res));
    }
    Ok(CornerScan {
        direction: e,
        minimizers: minimizers.iter().map(|p| p.direction).collect(),
        rows,
        winners,
    })
}

/// CSV with columns `t,x,y,nu_x,nu_y,residual,class`.
pub fn reports_to_csv(rows: &[WindowReport]) -> String {
    let mut s = String::from("t,x,y,nu_x,nu_y,residual,class\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.t,
            r.center[0],
            r.center[1],
            r.fit.direction[0],
            r.fit.direction[1],
            r.fit.residual,
            r.class.label()
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fronts::planar_front_shooting;
    use crate::grid::{AxisBoundary, Grid};
    use crate::medium::{PeriodicMedium, ReactionSpec};
    use crate::solver::{simulate, BoundarySpec, StepOptions};
    use proptest::prelude::*;

    fn cubic(r: usize) -> PeriodicMedium {
        PeriodicMedium::homogeneous(2, r, ReactionSpec::Bistable { alpha: 0.25 }).unwrap()
    }

    fn profile(e: [f64; 2], r: usize) -> FrontProfile {
        let m = cubic(r);
        let pf = planar_front_shooting(m.reaction(), 1e-10).unwrap();
        FrontProfile::from_planar(&pf, e, &m, (-12.0, 25.0), 0.05).unwrap()
    }

    /// A synthetic pulsating profile with cell dependence.
    fn wavy(r: usize) -> FrontProfile {
        let mut p = profile([1.0, 0.0], r);
        let nz = p.nz;
        for c in 0..p.cells() {
            let x = (c % r) as f64 / r as f64;
            for k in 0..nz {
                let z = p.z0 + k as f64 * p.dz;
                p.values[c * nz + k] = 1.0 / (1.0 + (z + 0.3 * (2.0 * std::f64::consts::PI * x).sin()).exp());
            }
        }
        p
    }

    #[test]
    fn self_fit_recovers_the_shift() {
        let p = profile([1.0, 0.0], 4);
        let w = Window::from_profile(&p, 7.3, [40, -3], 4.0);
        let f = front_fit(&w, std::slice::from_ref(&p)).unwrap();
        assert!(f.residual < 1e-9, "{}", f.residual);
        assert!((f.time_shift - 7.3).abs() < 1e-6, "{}", f.time_shift);

        let q = wavy(4);
        let w = Window::from_profile(&q, 3.1, [17, 5], 3.0);
        let f = front_fit(&w, std::slice::from_ref(&q)).unwrap();
        assert!(f.residual < 1e-6, "{}", f.residual);
        assert_eq!(f.cell_shift, [0, 0]);
    }

    #[test]
    fn best_direction_wins() {
        let e = [1.0, 0.0];
        let d = [0.6, 0.8];
        let cands = [profile(d, 4), profile(e, 4)];
        let w = Window::from_profile(&cands[1], 2.0, [10, 0], WINDOW_RADIUS);
        let f = front_fit(&w, &cands).unwrap();
        assert_eq!(f.candidate, 1);
        assert!(front_fit(&w, &[]).is_err());
        let small = Window::from_profile(&cands[1], 2.0, [10, 0], 0.5);
        assert!(matches!(front_fit(&small, &cands), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn constant_windows_are_bulk() {
        let p = profile([1.0, 0.0], 4);
        let mut w = Window::from_profile(&p, 0.0, [0, 0], 4.0);
        w.values.iter_mut().for_each(|v| *v = 1.0);
        let f = front_fit(&w, std::slice::from_ref(&p)).unwrap();
        // the profile's plateau is the only way to fit a constant
        let plateau = (1.0 - p.row(0)[0]).abs();
        assert!((f.residual - plateau).abs() < 1e-9, "{} {plateau}", f.residual);
        assert_eq!(classify(&w, &f), WindowClass::Bulk1);
        w.values.iter_mut().for_each(|v| *v = 0.0);
        let f = front_fit(&w, &[p]).unwrap();
        assert_eq!(classify(&w, &f), WindowClass::Bulk0);
    }

    #[test]
    fn ray_tracking_on_synthetic_fields() {
        let g = Grid::centered(2, 10.0, 4, AxisBoundary::Neumann).unwrap();
        let ones = GridField::constant(g.clone(), 1.0);
        assert!(ray_crossing(&ones, [1.0, 0.0], 0.5).is_none());
        let mut u = GridField::from_fn(g, |p| 1.0 / (1.0 + (p[0].hypot(p[1]) - 4.0).exp()));
        u.t = 1.0;
        let x = ray_crossing(&u, [0.6, 0.8], 0.5).unwrap();
        assert!((x[0].hypot(x[1]) - 4.0).abs() < 0.02);
        let traj = Trajectory { snapshots: vec![u, ones] };
        let tr = ray_tracker(&traj, [1.0, 0.0], 0.5).unwrap();
        assert_eq!(tr.points.len(), 1);
        assert_eq!(tr.skipped, vec![0.0]);
        assert!(ray_tracker(&traj, [1.0, 1.0], 0.5).is_err());
    }

    #[test]
    fn simulated_planar_front_fits() {
        let m = cubic(4);
        let g = Grid::rect([-20.0, -6.0], [40.0, 6.0], 4, [AxisBoundary::Neumann; 2]).unwrap();
        let u0 = GridField::from_fn(g, |p| if p[0] < 0.0 { 1.0 } else { 0.0 });
        let traj = simulate(&m, &u0, 40.0, &[10.0, 25.0, 40.0], BoundarySpec::Neumann, StepOptions::default()).unwrap();
        let p = profile([1.0, 0.0], 4);
        let rows = track_and_fit(&traj, [1.0, 0.0], 0.5, &[10.0, 25.0, 40.0], 5.0, &[p]).unwrap();
        assert!(rows[2].fit.residual < rows[0].fit.residual);
        assert!(rows[2].fit.residual < 0.01, "{}", rows[2].fit.residual);
        assert_eq!(rows[2].class, WindowClass::Front);
        let csv = reports_to_csv(&rows);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(3).unwrap().ends_with(",front"));
    }

    #[test]
    fn corner_scan_prefers_the_generating_direction() {
        let a = profile([1.0, 0.0], 4);
        let b = profile([0.0, 1.0], 4);
        let g = Grid::rect([0.0, -10.0], [30.0, 10.0], 4, [AxisBoundary::Neumann; 2]).unwrap();
        let snaps: Vec<GridField> = [4.0, 8.0]
            .iter()
            .map(|&t| {
                let mut u = GridField::from_fn(g.clone(), |p| a.eval(0, p[0] - a.c * t - 10.0));
                u.t = t;
                u
            })
            .collect();
        let traj = Trajectory { snapshots: snaps };
        let scan = corner_direction_scan(&traj, [1.0, 0.0], &[b.clone(), a.clone()], &[4.0, 8.0], 0.5, 5.0).unwrap();
        assert_eq!(scan.winners, vec![1, 1]);
        assert!(scan.rows.iter().all(|r| r.1[1] < 1e-3 && r.1[0] > 0.1));
        assert!(corner_direction_scan(&traj, [1.0, 0.0], &[], &[4.0], 0.5, 5.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn residual_invariant_under_cell_translation(
            s in 0.0f64..10.0, k in -3i64..4, i0 in 10i64..30, d in 0usize..3,
        ) {
            // phi(s + k e_1.nu / c, x + k e_1) = phi(s, x)
            let r = 4usize;
            let nu = [[1.0, 0.0], [0.8, 0.6], [0.6, 0.8]][d];
            let p = wavy(r);
            let q = FrontProfile { direction: nu, ..p.clone() };
            let w = Window::from_profile(&q, s, [i0, 0], 3.0);
            let w2 = Window::from_profile(&q, s + k as f64 * nu[0] / q.c, [i0 + k * r as i64, 0], 3.0);
            let probe = wavy(r);
            let cand = FrontProfile { direction: [1.0, 0.0], ..probe };
            let a = front_fit(&w, std::slice::from_ref(&cand)).unwrap().residual;
            let b = front_fit(&w2, &[cand]).unwrap().residual;
            prop_assert!((a - b).abs() < 1e-6, "{} {}", a, b);
        }
    }
}

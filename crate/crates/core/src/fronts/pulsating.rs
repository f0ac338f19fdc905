//! Pulsating front speeds from long-time simulation of step-like data.
//!
//! A lattice direction `(p, q)` (after a signed permutation, `p >= |q|`) is
//! simulated on a strip that is long along the local `x` axis and wraps
//! helically in `y`: `(x, y + p) ~ (x + q, y)`. Pulsating fronts in that
//! direction are invariant under this identification. The strip follows the
//! front by whole-cell shifts, which leave the discrete operator unchanged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AxisBoundary, Frame, Grid, GridField};
use crate::medium::PeriodicMedium;
use crate::par;
use crate::solver::{Integrator, StepOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedParams {
    pub t_final: f64,
    /// Strip length behind and ahead of the front (whole cells).
    pub behind: usize,
    pub ahead: usize,
    /// Spacing of position samples.
    pub sample_every: f64,
    pub level: f64,
    /// Largest lattice component used when snapping directions.
    pub max_denominator: i64,
    pub step: StepOptions,
    /// Keep strip snapshots from this time on (for profile extraction).
    pub keep_from: Option<f64>,
    pub snapshot_every: f64,
    /// Width of the linear ramp of the initial datum (0 for a step).
    pub ramp: f64,
}

impl Default for SpeedParams {
    fn default() -> Self {
        Self {
            t_final: 120.0,
            behind: 15,
            ahead: 25,
            sample_every: 0.25,
            level: 0.5,
            max_denominator: 3,
            step: StepOptions::default(),
            keep_from: None,
            snapshot_every: 0.5,
            ramp: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedEstimate {
    /// Unit direction actually simulated.
    pub direction: [f64; 2],
    pub lattice: [i64; 2],
    pub c: f64,
    pub intercept: f64,
    /// `sup |p(t) - c t - intercept|` over the fit window.
    pub oscillation: f64,
    pub fit_from: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontRun {
    pub estimate: SpeedEstimate,
    /// `(t, p(t))` samples of the level position along the direction.
    pub positions: Vec<(f64, f64)>,
    pub snapshots: Vec<GridField>,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Primitive lattice direction with components bounded by `max_den` closest
/// in angle to `e`.
pub fn snap_direction(e: [f64; 2], max_den: i64) -> [i64; 2] {
    let mut best = [1, 0];
    let mut best_cos = f64::NEG_INFINITY;
    let norm = (e[0] * e[0] + e[1] * e[1]).sqrt();
    for a in -max_den..=max_den {
        for b in -max_den..=max_den {
            if (a == 0 && b == 0) || gcd(a, b) != 1 {
                continue;
            }
            let l = ((a * a + b * b) as f64).sqrt();
            let cs = (a as f64 * e[0] + b as f64 * e[1]) / (l * norm);
            if cs > best_cos + 1e-14 {
                best_cos = cs;
                best = [a, b];
            }
        }
    }
    best
}

/// All primitive lattice directions with components bounded by `max_den`,
/// sorted by angle in `[0, 2 pi)`.
pub fn lattice_directions(max_den: i64) -> Vec<[i64; 2]> {
    let mut out = Vec::new();
    for a in -max_den..=max_den {
        for b in -max_den..=max_den {
            if (a != 0 || b != 0) && gcd(a, b) == 1 {
                out.push([a, b]);
            }
        }
    }
    let ang = |d: &[i64; 2]| (d[1] as f64).atan2(d[0] as f64).rem_euclid(std::f64::consts::TAU);
    out.sort_by(|x, y| ang(x).partial_cmp(&ang(y)).unwrap());
    out
}

pub fn unit(d: [i64; 2]) -> [f64; 2] {
    let l = ((d[0] * d[0] + d[1] * d[1]) as f64).sqrt();
    [d[0] as f64 / l, d[1] as f64 / l]
}

struct Strip {
    grid: Grid,
    local_dir: [f64; 2],
}

fn build_strip(m: &PeriodicMedium, d: [i64; 2], behind: usize, ahead: usize) -> Result<Strip> {
    let r = m.resolution() as i64;
    let frame = if m.dim() == 1 {
        Frame {
            swap: false,
            sign: [if d[0] < 0 { -1 } else { 1 }, 1],
        }
    } else {
        Frame::dominant(d)
    };
    let l = frame.to_local([d[0] as f64, d[1] as f64]);
    let (p, q) = (l[0].round() as i64, l[1].round() as i64);
    let nx = ((behind + ahead) as i64 * r + 1) as usize;
    let (ny, ybc) = if m.dim() == 1 {
        (1, AxisBoundary::Neumann)
    } else if q == 0 {
        (r as usize, AxisBoundary::Periodic)
    } else {
        ((p * r) as usize, AxisBoundary::Helical { shift: q * r })
    };
    let grid = Grid {
        dim: m.dim(),
        n: [nx, ny],
        h: 1.0 / r as f64,
        offset: [-(behind as i64) * r, 0],
        frame,
        boundary: [AxisBoundary::Dirichlet { low: 1.0, high: 0.0 }, ybc],
    };
    let len = ((p * p + q * q) as f64).sqrt();
    Ok(Strip {
        grid,
        local_dir: [p as f64 / len, q as f64 / len],
    })
}

/// Position of the `level` crossing along the strip direction, averaged over
/// rows; in each row the largest crossing wins.
fn level_position(u: &[f64], grid: &Grid, dir: [f64; 2], level: f64) -> Option<(f64, f64)> {
    let (nx, ny) = (grid.n[0], grid.n[1]);
    let h = grid.h;
    let mut sum = 0.0;
    let mut sum_x = 0.0;
    for j in 0..ny {
        let row = &u[j * nx..(j + 1) * nx];
        let i = (0..nx - 1).rev().find(|&i| row[i] >= level && row[i + 1] < level)?;
        let frac = (row[i] - level) / (row[i] - row[i + 1]);
        let x = (grid.offset[0] as f64 + i as f64 + frac) * h;
        let y = (grid.offset[1] + j as i64) as f64 * h;
        sum += x * dir[0] + y * dir[1];
        sum_x += x;
    }
    Some((sum / ny as f64, sum_x / ny as f64))
}

/// Moves strip values by `k` nodes toward `-x` (negative `k` moves them the
/// other way), filling with the far-field states.
fn shift_values(u: &mut [f64], nx: usize, k: i64) {
    par::for_each_chunk(u, nx, |_, row| {
        if k > 0 {
            let k = k as usize;
            row.copy_within(k.., 0);
            row[nx - k..].fill(0.0);
        } else {
            let k = (-k) as usize;
            row.copy_within(..nx - k, k);
            row[..k].fill(1.0);
        }
    });
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mp = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let stp: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mp)).sum();
    let slope = stp / stt;
    (slope, mp - slope * mt)
}

/// Simulates a step-like front in lattice direction nearest to `e`.
pub fn run_front(m: &PeriodicMedium, e: [f64; 2], params: &SpeedParams) -> Result<FrontRun> {
    if !(params.t_final > 0.0) || !(params.sample_every > 0.0) {
        return Err(Error::Domain("t_final and sample_every must be positive".into()));
    }
    if !(params.level > 0.0 && params.level < 1.0) {
        return Err(Error::Domain("level must lie in (0, 1)".into()));
    }
    if params.behind < 3 || params.ahead < 3 {
        return Err(Error::DomainTooSmall("strip needs at least 3 cells on each side".into()));
    }
    let d = if m.dim() == 1 {
        if e[1].abs() > 1e-12 || e[0] == 0.0 {
            return Err(Error::Domain("1D media only admit e = (+-1, 0)".into()));
        }
        [e[0].signum() as i64, 0]
    } else {
        snap_direction(e, params.max_denominator)
    };
    let strip = build_strip(m, d, params.behind, params.ahead)?;
    let mut grid = strip.grid.clone();
    let dir = strip.local_dir;
    let r = m.resolution() as i64;
    let u0: Vec<f64> = (0..grid.len())
        .map(|k| {
            let l = grid.lattice(k);
            let z = (l[0] as f64 * dir[0] + l[1] as f64 * dir[1]) * grid.h;
            if params.ramp > 0.0 {
                (0.5 - z / params.ramp).clamp(0.0, 1.0)
            } else if z < 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let mut integ = Integrator::new(m, &strip.grid, params.step)?;
    let (steps, dt) = integ.step_for(params.sample_every);
    let n_samples = (params.t_final / params.sample_every).round() as usize;
    let mut positions = Vec::with_capacity(n_samples);
    let mut snapshots = Vec::new();
    let mut next_snap = params.keep_from.unwrap_or(f64::INFINITY);
    let nx = grid.n[0];
    let margin = 2.0;
    let mut work = GridField::new(strip.grid.clone(), u0, 0.0)?;
    for s in 1..=n_samples {
        integ.run(&mut work, steps, dt, |_| Ok(()))?;
        let t = s as f64 * params.sample_every;
        work.t = t;
        let (pos, xbar) = level_position(&work.values, &grid, dir, params.level).ok_or({
            Error::NoPositiveSpeed { speed: f64::NAN }
        })?;
        positions.push((t, pos));
        if t + 1e-9 >= next_snap {
            snapshots.push(GridField {
                grid: grid.clone(),
                values: work.values.clone(),
                t,
            });
            next_snap += params.snapshot_every;
        }
        let lo = grid.offset[0] as f64 * grid.h;
        let hi = lo + (nx - 1) as f64 * grid.h;
        if xbar - lo < margin || hi - xbar < margin {
            return Err(Error::DomainTooSmall(format!(
                "front at local x = {xbar:.3} left the strip [{lo}, {hi}]"
            )));
        }
        // recentre so that the crossing sits near local x = 0 of the original strip
        let centre = (grid.offset[0] + (params.behind as i64) * r) as f64 * grid.h;
        let cells = (xbar - centre).trunc() as i64;
        if cells != 0 {
            shift_values(&mut work.values, nx, cells * r);
            grid.offset[0] += cells * r;
        }
    }
    let fit_from = 0.5 * params.t_final;
    let window: Vec<(f64, f64)> = positions.iter().copied().filter(|p| p.0 >= fit_from).collect();
    if window.len() < 3 {
        return Err(Error::InsufficientData("too few samples in the fit window".into()));
    }
    let (c, intercept) = least_squares(&window);
    if !(c > 0.0) {
        return Err(Error::NoPositiveSpeed { speed: c });
    }
    let oscillation = window
        .iter()
        .map(|p| (p.1 - c * p.0 - intercept).abs())
        .fold(0.0, f64::max);
    let phys = grid.frame.to_physical(dir);
    Ok(FrontRun {
        estimate: SpeedEstimate {
            direction: phys,
            lattice: d,
            c,
            intercept,
            oscillation,
            fit_from,
        },
        positions,
        snapshots,
    })
}

/// Speed and oscillation bound of the pulsating front in direction `e`.
pub fn pulsating_front_speed(m: &PeriodicMedium, e: [f64; 2], params: &SpeedParams) -> Result<SpeedEstimate> {
    let mut p = *params;
    p.keep_from = None;
    Ok(run_front(m, e, &p)?.estimate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedTable {
    pub entries: Vec<SpeedEstimate>,
    /// Largest `|c_i - c_{i+1}| / angle_i,i+1` over adjacent directions.
    pub max_jump_rate: f64,
}

impl SpeedTable {
    pub fn directions(&self) -> Vec<[f64; 2]> {
        self.entries.iter().map(|e| e.direction).collect()
    }

    pub fn speeds(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.c).collect()
    }
}

/// Speeds for every direction, run in parallel.
pub fn speed_table(m: &PeriodicMedium, directions: &[[f64; 2]], params: &SpeedParams) -> Result<SpeedTable> {
    if m.dim() == 2 && directions.len() < 8 {
        return Err(Error::Coverage(format!(
            "speed table needs at least 8 directions, got {}",
            directions.len()
        )));
    }
    let results = par::map_slice(directions, |e| pulsating_front_speed(m, *e, params));
    let mut entries = results.into_iter().collect::<Result<Vec<_>>>()?;
    let ang = |d: [f64; 2]| d[1].atan2(d[0]).rem_euclid(std::f64::consts::TAU);
    entries.sort_by(|a, b| ang(a.direction).partial_cmp(&ang(b.direction)).unwrap());
    let n = entries.len();
    let mut max_jump_rate: f64 = 0.0;
    for i in 0..n {
        let a = &entries[i];
        let b = &entries[(i + 1) % n];
        let dth = (ang(b.direction) - ang(a.direction)).rem_euclid(std::f64::consts::TAU);
        if dth > 1e-12 {
            max_jump_rate = max_jump_rate.max((b.c - a.c).abs() / dth);
        }
    }
    Ok(SpeedTable {
        entries,
        max_jump_rate,
    })
}

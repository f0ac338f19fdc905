//! IMEX time integration of the periodic reaction-diffusion-advection equation.
//!
//! Diffusion is implicit; drift, cross diffusion and reaction are explicit.
//! On grids whose axes are open, Neumann, Dirichlet or periodic, the implicit
//! stage is split by axis and solved exactly line by line. The inverse of each
//! line operator is entrywise nonnegative, so the scheme is monotone and keeps
//! values in `[0, 1]` without clamping. Grids with a helical wrap fall back to
//! conjugate gradients on the unsplit operator.

mod linalg;
pub(crate) mod stencil;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AxisBoundary, Grid, GridField, Nbr};
use crate::medium::PeriodicMedium;
use crate::par;

pub use linalg::{conjugate_gradient, CyclicTridiag, LineSolver, Tridiag};
pub use stencil::Stencil;

/// How the implicit diffusion stage is solved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
#[derive(Default)]
pub enum DiffusionSolve {
    /// Split when the grid allows it, conjugate gradients otherwise.
    #[default]
    Auto,
    Split,
    ConjugateGradient { rel_tol: f64, max_iter: usize },
}


pub const CG_REL_TOL: f64 = 1e-10;
pub const CG_MAX_ITER: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOptions {
    /// Upper bound on the time step; the stability bound may lower it.
    pub dt_max: f64,
    pub solve: DiffusionSolve,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            dt_max: 0.05,
            solve: DiffusionSolve::Auto,
        }
    }
}

/// Largest step keeping the explicit stage monotone.
pub fn stable_dt(m: &PeriodicMedium, st: &Stencil) -> f64 {
    let lip = m.reaction_lipschitz();
    let mut dt = f64::INFINITY;
    if lip > 0.0 {
        dt = dt.min(0.5 / lip);
    }
    let drift = st.max_drift_rate();
    if drift > 0.0 {
        dt = dt.min(0.5 / drift);
    }
    let cross = st.max_cross_weight();
    if cross > 0.0 {
        dt = dt.min(0.5 / cross);
    }
    dt
}

enum Implicit {
    Split {
        xlines: Vec<LineSolver>,
        ylines: Vec<LineSolver>,
        xfixed: Vec<f64>,
        yfixed: Vec<f64>,
    },
    Cg {
        diag: Vec<f64>,
        fixed: Vec<f64>,
        rel_tol: f64,
        max_iter: usize,
    },
}

/// One-step map for a fixed grid, medium and time step.
pub struct Stepper {
    stencil: Stencil,
    grid: Grid,
    dt: f64,
    implicit: Implicit,
    reaction: PeriodicMedium,
}

fn line_solver(
    st: &Stencil,
    nodes: &[usize],
    dirs: (usize, usize),
    dt: f64,
    fixed: &mut [f64],
) -> Result<LineSolver> {
    let n = nodes.len();
    let mut a = vec![0.0; n];
    let mut b = vec![1.0; n];
    let mut c = vec![0.0; n];
    let mut alpha = 0.0;
    let mut beta = 0.0;
    let mut cyclic = false;
    for (pos, &idx) in nodes.iter().enumerate() {
        for (side, dir) in [(0usize, dirs.0), (1usize, dirs.1)] {
            let w = st.diff[idx][dir];
            match st.nbr[idx][dir] {
                Nbr::Reflect => {}
                Nbr::Fixed(v) => {
                    b[pos] += dt * w;
                    fixed[idx] += dt * w * v;
                }
                Nbr::Node(k) => {
                    b[pos] += dt * w;
                    let interior = if side == 0 { pos > 0 && nodes[pos - 1] == k } else { pos + 1 < n && nodes[pos + 1] == k };
                    if interior {
                        if side == 0 {
                            a[pos] = -dt * w;
                        } else {
                            c[pos] = -dt * w;
                        }
                    } else if side == 0 && pos == 0 && k == nodes[n - 1] {
                        beta = -dt * w;
                        cyclic = true;
                    } else if side == 1 && pos + 1 == n && k == nodes[0] {
                        alpha = -dt * w;
                        cyclic = true;
                    } else {
                        return Err(Error::Structural(
                            "line coupling does not follow the grid axis".into(),
                        ));
                    }
                }
            }
        }
    }
    if cyclic {
        if n < 3 {
            return Err(Error::Structural("periodic axis needs at least 3 nodes".into()));
        }
        Ok(LineSolver::Cyclic(CyclicTridiag::new(&a, &b, &c, alpha, beta)))
    } else {
        Ok(LineSolver::Open(Tridiag::new(&a, &b, &c)))
    }
}

impl Stepper {
    pub fn new(m: &PeriodicMedium, grid: &Grid, dt: f64, solve: DiffusionSolve) -> Result<Stepper> {
        let stencil = Stencil::build(grid, m)?;
        Self::with_stencil(m, grid, stencil, dt, solve)
    }

    pub fn with_stencil(
        m: &PeriodicMedium,
        grid: &Grid,
        stencil: Stencil,
        dt: f64,
        solve: DiffusionSolve,
    ) -> Result<Stepper> {
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("time step {dt} must be positive")));
        }
        let bound = stable_dt(m, &stencil);
        if dt > bound * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "time step {dt} exceeds the monotonicity bound {bound}"
            )));
        }
        let split_ok = grid.is_line_separable();
        let solve = match solve {
            DiffusionSolve::Auto if split_ok => DiffusionSolve::Split,
            DiffusionSolve::Auto => DiffusionSolve::ConjugateGradient {
                rel_tol: CG_REL_TOL,
                max_iter: CG_MAX_ITER,
            },
            DiffusionSolve::Split if !split_ok => {
                return Err(Error::Structural(
                    "helical grids cannot use the split diffusion solve".into(),
                ))
            }
            s => s,
        };
        let n = grid.len();
        let implicit = match solve {
            DiffusionSolve::Split => {
                let (nx, ny) = (grid.n[0], grid.n[1]);
                let mut xfixed = vec![0.0; n];
                let mut yfixed = vec![0.0; n];
                let mut xlines = Vec::with_capacity(ny);
                for j in 0..ny {
                    let nodes: Vec<usize> = (0..nx).map(|i| grid.index(i, j)).collect();
                    xlines.push(line_solver(&stencil, &nodes, (0, 1), dt, &mut xfixed)?);
                }
                let mut ylines = Vec::new();
                if grid.dim == 2 {
                    for i in 0..nx {
                        let nodes: Vec<usize> = (0..ny).map(|j| grid.index(i, j)).collect();
                        ylines.push(line_solver(&stencil, &nodes, (2, 3), dt, &mut yfixed)?);
                    }
                }
                Implicit::Split {
                    xlines,
                    ylines,
                    xfixed,
                    yfixed,
                }
            }
            DiffusionSolve::ConjugateGradient { rel_tol, max_iter } => {
                let mut diag = vec![1.0; n];
                let mut fixed = vec![0.0; n];
                for i in 0..n {
                    for d in 0..4 {
                        let w = stencil.diff[i][d];
                        match stencil.nbr[i][d] {
                            Nbr::Reflect => {}
                            Nbr::Fixed(v) => {
                                diag[i] += dt * w;
                                fixed[i] += dt * w * v;
                            }
                            Nbr::Node(_) => diag[i] += dt * w,
                        }
                    }
                }
                Implicit::Cg {
                    diag,
                    fixed,
                    rel_tol,
                    max_iter,
                }
            }
            DiffusionSolve::Auto => unreachable!(),
        };
        Ok(Stepper {
            stencil,
            grid: grid.clone(),
            dt,
            implicit,
            reaction: m.clone(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    /// Advances `u` by one step in place.
    pub fn advance(&self, u: &mut [f64]) -> Result<()> {
        let dt = self.dt;
        let st = &self.stencil;
        let m = &self.reaction;
        let prev: &[f64] = u;
        let mut rhs = par::map_range(prev.len(), |i| {
            prev[i] + dt * (st.explicit_at(prev, i) + m.f(st.sample[i], prev[i]))
        });
        match &self.implicit {
            Implicit::Split {
                xlines,
                ylines,
                xfixed,
                yfixed,
            } => {
                let (nx, ny) = (self.grid.n[0], self.grid.n[1]);
                par::for_each_chunk(&mut rhs, nx, |j, row| {
                    let base = j * nx;
                    for (i, v) in row.iter_mut().enumerate() {
                        *v += xfixed[base + i];
                    }
                    xlines[j].solve_in_place(row);
                });
                if !ylines.is_empty() {
                    let src = &rhs;
                    let mut cols = vec![0.0; nx * ny];
                    par::for_each_chunk(&mut cols, ny, |i, col| {
                        for (j, v) in col.iter_mut().enumerate() {
                            let k = j * nx + i;
                            *v = src[k] + yfixed[k];
                        }
                        ylines[i].solve_in_place(col);
                    });
                    let cols = &cols;
                    par::for_each_chunk(u, nx, |j, row| {
                        for (i, v) in row.iter_mut().enumerate() {
                            *v = cols[i * ny + j];
                        }
                    });
                } else {
                    u.copy_from_slice(&rhs);
                }
            }
            Implicit::Cg {
                diag,
                fixed,
                rel_tol,
                max_iter,
            } => {
                par::for_each_indexed(&mut rhs, |i, v| *v += fixed[i]);
                let apply = |x: &[f64], out: &mut [f64]| {
                    par::for_each_indexed(out, |i, o| {
                        *o = x[i] - dt * st.diffusion_linear_at(x, i);
                    });
                };
                let mut x = u.to_vec();
                conjugate_gradient(apply, diag, &rhs, &mut x, *rel_tol, *max_iter)?;
                u.copy_from_slice(&x);
            }
        }
        Ok(())
    }
}

/// Discrete `div(A grad u) + q . grad u` (reaction excluded).
pub fn apply_operator(m: &PeriodicMedium, u: &GridField) -> Result<GridField> {
    let st = Stencil::build(&u.grid, m)?;
    let vals = &u.values;
    let out = par::map_range(vals.len(), |i| st.apply_at(vals, i));
    GridField::new(u.grid.clone(), out, u.t)
}

/// One IMEX step of size `dt`.
pub fn step(m: &PeriodicMedium, u: &GridField, dt: f64) -> Result<GridField> {
    let stepper = Stepper::new(m, &u.grid, dt, DiffusionSolve::Auto)?;
    let mut values = u.values.clone();
    stepper.advance(&mut values)?;
    GridField::new(u.grid.clone(), values, u.t + dt)
}

/// Ordered snapshots `(t, u(t))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub snapshots: Vec<GridField>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    /// Snapshot whose time is closest to `t`.
    pub fn at(&self, t: f64) -> Option<&GridField> {
        self.snapshots.iter().min_by(|a, b| {
            (a.t - t).abs().partial_cmp(&(b.t - t).abs()).unwrap()
        })
    }

    pub fn last(&self) -> Option<&GridField> {
        self.snapshots.last()
    }

    pub fn is_increasing(&self) -> bool {
        self.snapshots.windows(2).all(|w| w[1].t > w[0].t)
    }
}

/// Advances fields to requested times, reusing factorizations per step size.
pub struct Integrator<'a> {
    medium: &'a PeriodicMedium,
    opts: StepOptions,
    bound: f64,
    grid: Grid,
    stencil: Stencil,
    cache: HashMap<u64, Stepper>,
}

impl<'a> Integrator<'a> {
    pub fn new(medium: &'a PeriodicMedium, grid: &Grid, opts: StepOptions) -> Result<Self> {
        if !(opts.dt_max > 0.0) {
            return Err(Error::Domain("dt_max must be positive".into()));
        }
        let stencil = Stencil::build(grid, medium)?;
        let bound = stable_dt(medium, &stencil).min(opts.dt_max);
        Ok(Self {
            medium,
            opts,
            bound,
            grid: grid.clone(),
            stencil,
            cache: HashMap::new(),
        })
    }

    /// Step size actually used for an interval of length `span`.
    pub fn step_for(&self, span: f64) -> (usize, f64) {
        let steps = ((span / self.bound) - 1e-9).ceil().max(1.0) as usize;
        (steps, span / steps as f64)
    }

    pub fn max_dt(&self) -> f64 {
        self.bound
    }

    fn stepper(&mut self, dt: f64) -> Result<&Stepper> {
        let key = dt.to_bits();
        if !self.cache.contains_key(&key) {
            let s = Stepper::with_stencil(
                self.medium,
                &self.grid,
                self.stencil.clone(),
                dt,
                self.opts.solve,
            )?;
            self.cache.insert(key, s);
        }
        Ok(&self.cache[&key])
    }

    /// Takes `steps` steps of size `dt`, calling `observe` after each one.
    pub fn run<F>(&mut self, u: &mut GridField, steps: usize, dt: f64, mut observe: F) -> Result<()>
    where
        F: FnMut(&GridField) -> Result<()>,
    {
        if u.grid != self.grid {
            return Err(Error::Structural("field grid differs from integrator grid".into()));
        }
        let t0 = u.t;
        for s in 0..steps {
            self.stepper(dt)?.advance(&mut u.values)?;
            u.t = t0 + (s + 1) as f64 * dt;
            observe(u)?;
        }
        Ok(())
    }

    /// Advances `u` to time `t`.
    pub fn advance_to(&mut self, u: &mut GridField, t: f64) -> Result<()> {
        let span = t - u.t;
        if span <= 0.0 {
            return Ok(());
        }
        let (steps, dt) = self.step_for(span);
        self.run(u, steps, dt, |_| Ok(()))?;
        u.t = t;
        Ok(())
    }
}

/// Boundary choice for [`simulate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundarySpec {
    Neumann,
    /// Far-field Dirichlet values `low` (at `x_1 -> -inf`) and `high` (at
    /// `x_1 -> +inf`) along the first axis, Neumann elsewhere.
    DirichletFarField { low: f64, high: f64 },
    /// Keep whatever the grid already carries.
    AsGrid,
}

impl BoundarySpec {
    pub fn apply(&self, grid: &mut Grid) {
        match *self {
            BoundarySpec::Neumann => grid.boundary = [AxisBoundary::Neumann; 2],
            BoundarySpec::DirichletFarField { low, high } => {
                grid.boundary = [AxisBoundary::Dirichlet { low, high }, AxisBoundary::Neumann]
            }
            BoundarySpec::AsGrid => {}
        }
    }
}

/// Integrates from `u0` to `t_final`, recording snapshots at `output_times`.
pub fn simulate(
    m: &PeriodicMedium,
    u0: &GridField,
    t_final: f64,
    output_times: &[f64],
    boundary: BoundarySpec,
    opts: StepOptions,
) -> Result<Trajectory> {
    if !(t_final > 0.0) {
        return Err(Error::Domain(format!("final time {t_final} must be positive")));
    }
    let mut times: Vec<f64> = output_times.to_vec();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    if times.iter().any(|&t| t < u0.t || t > t_final) {
        return Err(Error::Domain("output times must lie in [t0, T]".into()));
    }
    let mut u = u0.clone();
    boundary.apply(&mut u.grid);
    let mut integ = Integrator::new(m, &u.grid, opts)?;
    let mut snapshots = Vec::with_capacity(times.len());
    for &t in &times {
        integ.advance_to(&mut u, t)?;
        snapshots.push(u.clone());
    }
    Ok(Trajectory { snapshots })
}

/// Decides whether `u(T)` is within `tol` of 1 on the ball `B_radius(center)`.
pub fn invasion_test(
    m: &PeriodicMedium,
    grid: &Grid,
    theta: f64,
    rho: f64,
    t_final: f64,
    ball: ([f64; 2], f64),
    tol: f64,
    opts: StepOptions,
) -> Result<bool> {
    if !(theta > 0.0 && theta < 1.0) || !(rho > 0.0) {
        return Err(Error::Domain("invasion test needs theta in (0,1) and rho > 0".into()));
    }
    let u0 = GridField::from_fn(grid.clone(), |p| {
        if p[0] * p[0] + p[1] * p[1] < rho * rho {
            theta
        } else {
            0.0
        }
    });
    let traj = simulate(m, &u0, t_final, &[t_final], BoundarySpec::AsGrid, opts)?;
    let u = traj.last().unwrap();
    let (c, r) = ball;
    let mut min_v = f64::INFINITY;
    for k in 0..u.grid.len() {
        let p = u.grid.position(k);
        if (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) <= r * r {
            min_v = min_v.min(u.values[k]);
        }
    }
    Ok(min_v > 1.0 - tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::{AdvectionSpec, DiffusionSpec, MediumBuilder, ReactionSpec};
    use proptest::prelude::*;

    fn bistable(dim: usize, m: usize) -> PeriodicMedium {
        PeriodicMedium::homogeneous(dim, m, ReactionSpec::Bistable { alpha: 0.25 }).unwrap()
    }

    fn shear(m: usize) -> PeriodicMedium {
        MediumBuilder::new(2, m, ReactionSpec::Bistable { alpha: 0.25 })
            .diffusion(DiffusionSpec::Oscillating { amp: 0.3 })
            .advection(AdvectionSpec::Shear { amp: 0.5 })
            .build()
            .unwrap()
    }

    fn periodic_box(m: usize, cells: usize) -> Grid {
        let hi = (cells * m - 1) as f64 / m as f64;
        Grid::rect([0.0, 0.0], [hi, hi], m, [AxisBoundary::Periodic; 2]).unwrap()
    }

    #[test]
    fn operator_annihilates_constants() {
        let m = shear(8);
        let g = periodic_box(8, 2);
        let u = GridField::constant(g, 0.7);
        let lu = apply_operator(&m, &u).unwrap();
        assert!(lu.values.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn laplacian_of_linear_and_quadratic() {
        let m = bistable(2, 4);
        let g = Grid::centered(2, 2.0, 4, AxisBoundary::Neumann).unwrap();
        let lin = GridField::from_fn(g.clone(), |p| 0.3 * p[0] - 0.2 * p[1]);
        let quad = GridField::from_fn(g.clone(), |p| p[0] * p[0] + p[1] * p[1]);
        let l1 = apply_operator(&m, &lin).unwrap();
        let l2 = apply_operator(&m, &quad).unwrap();
        for k in 0..g.len() {
            let (i, j) = g.ij(k);
            if i == 0 || j == 0 || i + 1 == g.n[0] || j + 1 == g.n[1] {
                continue;
            }
            assert!(l1.values[k].abs() < 1e-10);
            assert!((l2.values[k] - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn equilibria_are_fixed() {
        let m = shear(8);
        let g = periodic_box(8, 2);
        let mut st = Integrator::new(&m, &g, StepOptions::default()).unwrap();
        for c in [0.0, 1.0] {
            let mut u = GridField::constant(g.clone(), c);
            st.advance_to(&mut u, 1.0).unwrap();
            assert!(u.values.iter().all(|v| (v - c).abs() < 1e-12));
        }
    }

    #[test]
    fn constant_data_follow_the_ode() {
        // u' = u(1-u)(u-a) starting at 0.6, against a fine RK4 oracle
        let a = 0.25;
        let f = |u: f64| u * (1.0 - u) * (u - a);
        let mut y: f64 = 0.6;
        let n = 20000;
        let hh = 2.0 / n as f64;
        for _ in 0..n {
            let k1 = f(y);
            let k2 = f(y + 0.5 * hh * k1);
            let k3 = f(y + 0.5 * hh * k2);
            let k4 = f(y + hh * k3);
            y += hh / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        let m = bistable(1, 4);
        let g = Grid::centered(1, 2.0, 4, AxisBoundary::Neumann).unwrap();
        let mut errs = Vec::new();
        for dt in [0.02, 0.01] {
            let u0 = GridField::constant(g.clone(), 0.6);
            let opts = StepOptions { dt_max: dt, ..Default::default() };
            let tr = simulate(&m, &u0, 2.0, &[2.0], BoundarySpec::Neumann, opts).unwrap();
            errs.push((tr.last().unwrap().values[3] - y).abs());
        }
        assert!(errs[0] < 2e-3, "{errs:?}");
        assert!(errs[1] < 0.6 * errs[0], "{errs:?}");
    }

    #[test]
    fn step_rejects_unstable_dt() {
        let m = bistable(1, 4);
        let g = Grid::centered(1, 2.0, 4, AxisBoundary::Neumann).unwrap();
        let u = GridField::constant(g, 0.5);
        assert!(matches!(step(&m, &u, 10.0), Err(Error::Domain(_))));
        assert!(step(&m, &u, 0.1).is_ok());
    }

    #[test]
    fn split_and_cg_agree_to_second_order() {
        let m = MediumBuilder::new(2, 4, ReactionSpec::Bistable { alpha: 0.25 })
            .advection(AdvectionSpec::Shear { amp: 0.5 })
            .build()
            .unwrap();
        let g = periodic_box(4, 3);
        let w = 2.0 * std::f64::consts::PI / 3.0;
        let u0 = GridField::from_fn(g.clone(), |p| 0.5 + 0.4 * (p[0] * w).sin() * (p[1] * w).cos());
        let gap = |dt: f64| {
            let mut a = u0.values.clone();
            let mut b = u0.values.clone();
            let s1 = Stepper::new(&m, &g, dt, DiffusionSolve::Split).unwrap();
            let cg = DiffusionSolve::ConjugateGradient { rel_tol: 1e-13, max_iter: 1000 };
            let s2 = Stepper::new(&m, &g, dt, cg).unwrap();
            s1.advance(&mut a).unwrap();
            s2.advance(&mut b).unwrap();
            a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        };
        let (d1, d2) = (gap(0.02), gap(0.01));
        assert!(d1 < 1e-2 && d2 / d1 < 0.3, "{d1} {d2}");
    }

    #[test]
    fn heat_mode_decays_at_discrete_rate() {
        let m = PeriodicMedium::homogeneous(1, 8, ReactionSpec::Table { values: vec![0.0, 0.0] }).unwrap();
        let n = 32usize;
        let hi = (n - 1) as f64 / 8.0;
        let g = Grid::rect([0.0, 0.0], [hi, 0.0], 8, [AxisBoundary::Periodic, AxisBoundary::Neumann]).unwrap();
        let kw = 2.0 * std::f64::consts::PI / n as f64;
        let u0 = GridField::from_fn(g.clone(), |p| (kw * 8.0 * p[0]).cos());
        let dt = 0.01;
        let s = Stepper::new(&m, &g, dt, DiffusionSolve::Split).unwrap();
        let mut u = u0.values.clone();
        s.advance(&mut u).unwrap();
        let lam = (2.0 - 2.0 * kw.cos()) * 64.0;
        let factor = 1.0 / (1.0 + dt * lam);
        for (a, b) in u.iter().zip(&u0.values) {
            assert!((a - factor * b).abs() < 1e-12);
        }
    }

    #[test]
    fn extinction_and_invasion() {
        let m = bistable(1, 4);
        let g = Grid::centered(1, 20.0, 4, AxisBoundary::Neumann).unwrap();
        let opts = StepOptions::default();
        let small = invasion_test(&m, &g, 0.3, 0.5, 30.0, ([0.0, 0.0], 1.0), 0.05, opts).unwrap();
        let large = invasion_test(&m, &g, 0.9, 6.0, 30.0, ([0.0, 0.0], 1.0), 0.05, opts).unwrap();
        assert!(!small);
        assert!(large);
    }

    #[test]
    fn simulate_checks_times() {
        let m = bistable(1, 4);
        let g = Grid::centered(1, 2.0, 4, AxisBoundary::Neumann).unwrap();
        let u0 = GridField::constant(g, 0.5);
        assert!(simulate(&m, &u0, 1.0, &[2.0], BoundarySpec::Neumann, StepOptions::default()).is_err());
        let tr = simulate(&m, &u0, 1.0, &[0.5, 0.25, 1.0], BoundarySpec::Neumann, StepOptions::default()).unwrap();
        assert!(tr.is_increasing());
        assert_eq!(tr.times(), vec![0.25, 0.5, 1.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn ordered_data_stay_ordered_and_in_range(
            seed in proptest::collection::vec(0.0f64..1.0, 21),
            bump in proptest::collection::vec(0.0f64..0.5, 21),
        ) {
            let m = MediumBuilder::new(1, 4, ReactionSpec::Bistable { alpha: 0.3 })
                .diffusion(DiffusionSpec::Oscillating { amp: 0.4 })
                .build()
                .unwrap();
            let g = Grid::centered(1, 2.5, 4, AxisBoundary::Neumann).unwrap();
            let lo = GridField::new(g.clone(), seed.clone(), 0.0).unwrap();
            let hi_vals: Vec<f64> = seed.iter().zip(&bump).map(|(a, b)| (a + b).min(1.0)).collect();
            let hi = GridField::new(g.clone(), hi_vals, 0.0).unwrap();
            let a = simulate(&m, &lo, 2.0, &[2.0], BoundarySpec::Neumann, StepOptions::default()).unwrap();
            let b = simulate(&m, &hi, 2.0, &[2.0], BoundarySpec::Neumann, StepOptions::default()).unwrap();
            let (a, b) = (a.last().unwrap(), b.last().unwrap());
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!(*x <= *y + 1e-12);
                prop_assert!(*x >= -1e-12 && *y <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn period_shift_commutes_with_flow(shift in 0usize..3) {
            let mm = 4;
            let m = shear(mm);
            let g = periodic_box(mm, 3);
            let n = g.n[0];
            let f = |p: [f64; 2]| 0.5 + 0.45 * (p[0] * 2.0 * std::f64::consts::PI / 3.0).sin();
            let u0 = GridField::from_fn(g.clone(), f);
            let s = shift * mm;
            let mut shifted = u0.clone();
            for k in 0..g.len() {
                let (i, j) = g.ij(k);
                shifted.values[k] = u0.values[g.index((i + s) % n, j)];
            }
            let opts = StepOptions { dt_max: 0.05, ..Default::default() };
            let a = simulate(&m, &u0, 0.5, &[0.5], BoundarySpec::AsGrid, opts).unwrap();
            let b = simulate(&m, &shifted, 0.5, &[0.5], BoundarySpec::AsGrid, opts).unwrap();
            let (a, b) = (a.last().unwrap(), b.last().unwrap());
            for k in 0..g.len() {
                let (i, j) = g.ij(k);
                prop_assert!((b.values[k] - a.values[g.index((i + s) % n, j)]).abs() < 1e-12);
            }
        }
    }
}

//! Tabulated pulsating front profiles `U(x, z)`, `x` in the cell.

use serde::{Deserialize, Serialize};

use super::pulsating::SpeedEstimate;
use super::shooting::PlanarFront;
use crate::error::{Error, Result};
use crate::grid::{AxisBoundary, Grid, GridField};
use crate::medium::PeriodicMedium;
use crate::solver::Stencil;

/// Value used to normalize the cell-averaged profile at `z = 0`.
pub const MU: f64 = 0.5;
pub const TAIL_RANGE: (f64, f64) = (1e-8, 1e-2);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontProfile {
    pub direction: [f64; 2],
    pub c: f64,
    pub dim: usize,
    pub resolution: usize,
    pub z0: f64,
    pub dz: f64,
    pub nz: usize,
    /// Row `cell` holds `U(cell, z0 + k dz)`.
    pub values: Vec<f64>,
    pub mu: f64,
    pub lambda0: f64,
    /// Prefactor of the tail bound `U <= C e^{-lambda0 z}`.
    pub tail_c: f64,
}

/// Cell index of a physical lattice point.
pub fn cell_of(dim: usize, resolution: usize, pl: [i64; 2]) -> usize {
    let r = resolution as i64;
    let i = pl[0].rem_euclid(r) as usize;
    if dim == 1 {
        i
    } else {
        i + resolution * pl[1].rem_euclid(r) as usize
    }
}

pub(crate) fn catmull_rom(v: &[f64], x: f64) -> f64 {
    let n = v.len();
    let k = (x.floor() as usize).min(n - 2);
    let t = x - k as f64;
    let p1 = v[k];
    let p2 = v[k + 1];
    let p0 = if k > 0 { v[k - 1] } else { 2.0 * p1 - p2 };
    let p3 = if k + 2 < n { v[k + 2] } else { 2.0 * p2 - p1 };
    let t2 = t * t;
    let t3 = t2 * t;
    0.5 * (2.0 * p1
        + (p2 - p0) * t
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2
        + (3.0 * p1 - p0 + p3 - 3.0 * p2) * t3)
}

impl FrontProfile {
    pub fn cells(&self) -> usize {
        self.values.len() / self.nz
    }

    pub fn row(&self, cell: usize) -> &[f64] {
        &self.values[cell * self.nz..(cell + 1) * self.nz]
    }

    pub fn z_max(&self) -> f64 {
        self.z0 + (self.nz - 1) as f64 * self.dz
    }

    pub fn z_grid(&self) -> Vec<f64> {
        (0..self.nz).map(|k| self.z0 + k as f64 * self.dz).collect()
    }

    /// `U(cell, z)`, constant on the left and exponential on the right.
    pub fn eval(&self, cell: usize, z: f64) -> f64 {
        let row = self.row(cell);
        let x = (z - self.z0) / self.dz;
        if x <= 0.0 {
            return row[0];
        }
        if x >= (self.nz - 1) as f64 {
            let last = row[self.nz - 1];
            return if self.lambda0 > 0.0 {
                last * (-self.lambda0 * (z - self.z_max())).exp()
            } else {
                last
            };
        }
        catmull_rom(row, x)
    }

    pub fn dz_eval(&self, cell: usize, z: f64) -> f64 {
        let d = self.dz;
        (self.eval(cell, z + d) - self.eval(cell, z - d)) / (2.0 * d)
    }

    /// Reconstructed pulsating front `phi(t, x) = U(x, x.e - c t)` at a
    /// physical lattice point.
    pub fn phi(&self, t: f64, pl: [i64; 2]) -> f64 {
        let h = 1.0 / self.resolution as f64;
        let x = [pl[0] as f64 * h, pl[1] as f64 * h];
        let z = x[0] * self.direction[0] + x[1] * self.direction[1] - self.c * t;
        self.eval(cell_of(self.dim, self.resolution, pl), z)
    }

    /// Cell average of `U` at each tabulated `z`.
    pub fn mean_profile(&self) -> Vec<f64> {
        let cells = self.cells();
        (0..self.nz)
            .map(|k| (0..cells).map(|c| self.values[c * self.nz + k]).sum::<f64>() / cells as f64)
            .collect()
    }

    /// Strictly decreasing in `z` at every cell.
    pub fn is_monotone(&self) -> bool {
        (0..self.cells()).all(|c| self.row(c).windows(2).all(|w| w[1] < w[0]))
    }

    /// Number of `(cell, k)` bins violating strict decrease.
    pub fn monotonicity_violations(&self) -> usize {
        (0..self.cells())
            .map(|c| self.row(c).windows(2).filter(|w| w[1] >= w[0]).count())
            .sum()
    }

    /// Tail bins, where the cell-averaged profile lies in [`TAIL_RANGE`].
    pub fn tail_bins(&self) -> Vec<usize> {
        self.mean_profile()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= TAIL_RANGE.0 && v <= TAIL_RANGE.1)
            .map(|(k, _)| k)
            .collect()
    }

    /// `U(x, z) <= C e^{-lambda0 z}` on every tail bin.
    pub fn tail_bound_holds(&self) -> bool {
        let bins = self.tail_bins();
        !bins.is_empty()
            && (0..self.cells()).all(|c| {
                bins.iter().all(|&k| {
                    let z = self.z0 + k as f64 * self.dz;
                    self.values[c * self.nz + k] <= self.tail_c * (-self.lambda0 * z).exp() * (1.0 + 1e-12)
                })
            })
    }

    /// Tabulates a planar profile on every cell of a homogeneous medium.
    pub fn from_planar(pf: &PlanarFront, e: [f64; 2], m: &PeriodicMedium, z_range: (f64, f64), dz: f64) -> Result<Self> {
        if !(z_range.1 > z_range.0) || !(dz > 0.0) {
            return Err(Error::Domain("empty z range".into()));
        }
        let nz = ((z_range.1 - z_range.0) / dz).round() as usize + 1;
        let cells = m.resolution().pow(m.dim() as u32);
        let row: Vec<f64> = (0..nz).map(|k| pf.eval(z_range.0 + k as f64 * dz)).collect();
        let values = row.iter().copied().cycle().take(nz * cells).collect();
        let tail_c = row
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= TAIL_RANGE.0 && v <= TAIL_RANGE.1)
            .map(|(k, &v)| v * (pf.lambda0 * (z_range.0 + k as f64 * dz)).exp())
            .fold(0.0, f64::max);
        Ok(FrontProfile {
            direction: e,
            c: pf.c,
            dim: m.dim(),
            resolution: m.resolution(),
            z0: z_range.0,
            dz,
            nz,
            values,
            mu: MU,
            lambda0: pf.lambda0,
            tail_c,
        })
    }
}

/// Bins late snapshots by `(cell, z = x.e - c t - b)` with bin width `h`.
pub fn extract_front_profile(
    m: &PeriodicMedium,
    est: &SpeedEstimate,
    snapshots: &[GridField],
    z_range: (f64, f64),
) -> Result<FrontProfile> {
    if snapshots.is_empty() {
        return Err(Error::InsufficientData("no snapshots to bin".into()));
    }
    let r = m.resolution();
    let dim = m.dim();
    let h = 1.0 / r as f64;
    let cells = r.pow(dim as u32);
    let nz = ((z_range.1 - z_range.0) / h).floor() as usize;
    if nz < 4 {
        return Err(Error::Domain("z range shorter than four bins".into()));
    }
    let e = est.direction;
    let mut sz = vec![0.0; cells * nz];
    let mut su = vec![0.0; cells * nz];
    let mut cnt = vec![0usize; cells * nz];
    for snap in snapshots {
        let g = &snap.grid;
        let shift = est.c * snap.t + est.intercept;
        for k in 0..g.len() {
            let x = g.position(k);
            let z = x[0] * e[0] + x[1] * e[1] - shift;
            let b = ((z - z_range.0) / h).floor();
            if b < 0.0 || b >= nz as f64 {
                continue;
            }
            let cell = cell_of(dim, r, g.physical_lattice(k));
            let idx = cell * nz + b as usize;
            sz[idx] += z;
            su[idx] += snap.values[k];
            cnt[idx] += 1;
        }
    }
    if let Some(miss) = cnt.iter().position(|&c| c == 0) {
        return Err(Error::Coverage(format!(
            "bin z = {:.3} of cell {} has no samples",
            z_range.0 + (miss % nz) as f64 * h,
            miss / nz
        )));
    }
    // resample each cell at bin centres from the bin means
    let mut values = vec![0.0; cells * nz];
    for c in 0..cells {
        let zs: Vec<f64> = (0..nz).map(|k| sz[c * nz + k] / cnt[c * nz + k] as f64).collect();
        let us: Vec<f64> = (0..nz).map(|k| su[c * nz + k] / cnt[c * nz + k] as f64).collect();
        for k in 0..nz {
            let zc = z_range.0 + (k as f64 + 0.5) * h;
            let j = if zc >= zs[k] { k.min(nz - 2) } else { k.max(1) - 1 };
            let w = (zc - zs[j]) / (zs[j + 1] - zs[j]);
            values[c * nz + k] = us[j] + w * (us[j + 1] - us[j]);
        }
    }
    let mut prof = FrontProfile {
        direction: e,
        c: est.c,
        dim,
        resolution: r,
        z0: z_range.0 + 0.5 * h,
        dz: h,
        nz,
        values,
        mu: MU,
        lambda0: 0.0,
        tail_c: 0.0,
    };
    // shift z so the cell average passes through MU at z = 0
    let mean = prof.mean_profile();
    let k = (0..nz - 1)
        .rev()
        .find(|&k| mean[k] >= MU && mean[k + 1] < MU)
        .ok_or_else(|| Error::Coverage("profile does not cross 1/2 inside the z range".into()))?;
    let zstar = prof.z0 + (k as f64 + (mean[k] - MU) / (mean[k] - mean[k + 1])) * h;
    prof.z0 -= zstar;
    // log-linear tail fit
    let bins = prof.tail_bins();
    if bins.len() < 3 {
        return Err(Error::InsufficientData(format!("only {} tail bins", bins.len())));
    }
    let pts: Vec<(f64, f64)> = bins
        .iter()
        .map(|&k| (prof.z0 + k as f64 * h, mean[k].ln()))
        .collect();
    let n = pts.len() as f64;
    let mz = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let szz: f64 = pts.iter().map(|p| (p.0 - mz).powi(2)).sum();
    let szl: f64 = pts.iter().map(|p| (p.0 - mz) * (p.1 - ml)).sum();
    prof.lambda0 = -szl / szz;
    let lam = prof.lambda0;
    prof.tail_c = (0..cells)
        .flat_map(|c| bins.iter().map(move |&k| (c, k)))
        .map(|(c, k)| prof.values[c * nz + k] * (lam * (prof.z0 + k as f64 * h)).exp())
        .fold(0.0, f64::max);
    Ok(prof)
}

/// Sup-norm residual of the discrete equation on the reconstructed front
/// `phi(t, x) = U(x, x.e - c t)` over a patch of cells around the origin.
pub fn front_residual(m: &PeriodicMedium, profile: &FrontProfile) -> Result<f64> {
    if profile.resolution != m.resolution() || profile.dim != m.dim() {
        return Err(Error::Structural("profile and medium grids differ".into()));
    }
    let half = 4.0;
    let hi_y = if m.dim() == 2 { half } else { 0.0 };
    let grid = Grid::rect(
        [-half, -hi_y],
        [half, hi_y],
        m.resolution(),
        [AxisBoundary::Neumann; 2],
    )?;
    let st = Stencil::build(&grid, m)?;
    let e = profile.direction;
    let n = grid.len();
    let mut phi = vec![0.0; n];
    let mut dphi = vec![0.0; n];
    for k in 0..n {
        let pl = grid.physical_lattice(k);
        let x = grid.position(k);
        let cell = cell_of(m.dim(), m.resolution(), pl);
        let z = x[0] * e[0] + x[1] * e[1];
        phi[k] = profile.eval(cell, z);
        dphi[k] = -profile.c * profile.dz_eval(cell, z);
    }
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let (i, j) = grid.ij(k);
        let edge_y = m.dim() == 2 && (j < 2 || j + 2 >= grid.n[1]);
        if i < 2 || i + 2 >= grid.n[0] || edge_y {
            continue;
        }
        let rhs = st.apply_at(&phi, k) + m.f(st.sample[k], phi[k]);
        worst = worst.max((dphi[k] - rhs).abs());
    }
    Ok(worst)
}

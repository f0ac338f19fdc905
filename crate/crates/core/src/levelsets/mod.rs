//! Upper level sets, Hausdorff distances and rescaled convergence series.

mod marching;
mod raster;
mod region;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::par;
use crate::solver::Trajectory;

pub use marching::contour_loops;
pub use raster::{distance_transform, raster_hausdorff, raster_hausdorff_masks, raster_points};
pub use region::{Disk, Points, Region, Shape};
pub(crate) use region::box_grid;

/// Default number of samples across the larger bounding-box side.
pub const SAMPLES_ACROSS: f64 = 400.0;

/// `{u > level}` as a polygonal region, a point cloud (1D fields) or empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PlanarSet {
    Empty,
    Region(Region),
    Points(Points),
}

impl PlanarSet {
    pub fn scaled(&self, s: f64) -> PlanarSet {
        match self {
            PlanarSet::Empty => PlanarSet::Empty,
            PlanarSet::Region(r) => PlanarSet::Region(r.scaled(s)),
            PlanarSet::Points(p) => PlanarSet::Points(Points(p.0.iter().map(|q| [q[0] * s, q[1] * s]).collect())),
        }
    }

    pub fn region(&self) -> Option<&Region> {
        match self {
            PlanarSet::Region(r) => Some(r),
            _ => None,
        }
    }

    fn inner(&self) -> Option<&dyn Shape> {
        match self {
            PlanarSet::Empty => None,
            PlanarSet::Region(r) => Some(r),
            PlanarSet::Points(p) => Some(p),
        }
    }
}

impl Shape for PlanarSet {
    fn is_empty(&self) -> bool {
        self.inner().is_none_or(|s| s.is_empty())
    }

    fn signed_distance(&self, p: [f64; 2]) -> f64 {
        self.inner().map_or(f64::INFINITY, |s| s.signed_distance(p))
    }

    fn contains(&self, p: [f64; 2]) -> bool {
        self.inner().is_some_and(|s| s.contains(p))
    }

    fn distance(&self, p: [f64; 2]) -> f64 {
        self.inner().map_or(f64::INFINITY, |s| s.distance(p))
    }

    fn samples(&self, spacing: f64) -> Vec<[f64; 2]> {
        self.inner().map_or(Vec::new(), |s| s.samples(spacing))
    }

    fn bounds(&self) -> Option<([f64; 2], [f64; 2])> {
        self.inner().and_then(|s| s.bounds())
    }
}

/// Boundary of `{u > level}` by marching squares.
pub fn upper_level_set(u: &GridField, level: f64) -> PlanarSet {
    let g = &u.grid;
    if g.dim == 1 {
        let mut pts = Vec::new();
        let n = g.n[0];
        for i in 0..n {
            let here = u.values[i] > level;
            let left = i > 0 && u.values[i - 1] > level;
            let right = i + 1 < n && u.values[i + 1] > level;
            if here && (!left || !right) {
                pts.push(g.position(i));
            }
        }
        return if pts.is_empty() {
            PlanarSet::Empty
        } else {
            PlanarSet::Points(Points(pts))
        };
    }
    let loops = contour_loops(u, level);
    if loops.is_empty() {
        PlanarSet::Empty
    } else {
        PlanarSet::Region(Region::new(loops))
    }
}

fn default_spacing(a: &dyn Shape, b: &dyn Shape) -> f64 {
    let ext = |s: &dyn Shape| {
        s.bounds()
            .map_or(0.0, |(lo, hi)| (hi[0] - lo[0]).max(hi[1] - lo[1]))
    };
    let e = ext(a).max(ext(b));
    if e > 0.0 {
        e / SAMPLES_ACROSS
    } else {
        1e-3
    }
}

/// Hausdorff distance on boundary and interior samples, with
/// `d(A, {}) = +inf` for nonempty `A` and `d({}, {}) = 0`.
pub fn hausdorff(a: &dyn Shape, b: &dyn Shape) -> f64 {
    hausdorff_with(a, b, default_spacing(a, b))
}

pub fn hausdorff_with(a: &dyn Shape, b: &dyn Shape, spacing: f64) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    let sa = a.samples(spacing);
    let sb = b.samples(spacing);
    let ab = par::max_range(sa.len(), |k| b.distance(sa[k]));
    let ba = par::max_range(sb.len(), |k| a.distance(sb[k]));
    ab.max(ba)
}

/// `t^{-1} E_level(t)` for one snapshot.
pub fn rescaled_level_set(u: &GridField, level: f64) -> Result<PlanarSet> {
    if !(u.t > 0.0) {
        return Err(Error::Domain("rescaling needs t > 0".into()));
    }
    Ok(upper_level_set(u, level).scaled(1.0 / u.t))
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("level {level} must lie in (0, 1)")));
    }
    Ok(())
}

/// `(t, d_H(t^{-1} E_level(t), target))` for every snapshot with `t > 0`.
pub fn rescaled_convergence(traj: &Trajectory, level: f64, target: &dyn Shape) -> Result<Vec<(f64, f64)>> {
    check_level(level)?;
    let snaps: Vec<&GridField> = traj.snapshots.iter().filter(|s| s.t > 0.0).collect();
    let out = snaps
        .iter()
        .map(|s| {
            let e = rescaled_level_set(s, level)?;
            Ok((s.t, hausdorff(&e, target)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(out)
}

/// Windowed variant for unbounded targets: both sets are intersected with
/// the square `[lo, hi]` and rasterized with `n` pixels per side. The
/// measured set is `{p : u(t, t p) > level}` with bilinear sampling.
pub fn windowed_convergence(
    traj: &Trajectory,
    level: f64,
    target: &dyn Shape,
    lo: [f64; 2],
    hi: [f64; 2],
    n: usize,
) -> Result<Vec<(f64, f64)>> {
    check_level(level)?;
    if ((hi[0] - lo[0]) - (hi[1] - lo[1])).abs() > 1e-12 * (hi[0] - lo[0]).abs() {
        return Err(Error::Domain("window must be square".into()));
    }
    let mut out = Vec::new();
    for s in traj.snapshots.iter().filter(|s| s.t > 0.0) {
        let t = s.t;
        let (glo, ghi) = s.grid.bounds();
        if lo[0] * t < glo[0] || lo[1] * t < glo[1] || hi[0] * t > ghi[0] || hi[1] * t > ghi[1] {
            return Err(Error::DomainTooSmall(format!("window at t = {t} leaves the grid")));
        }
        let measured = |p: [f64; 2]| s.sample([p[0] * t, p[1] * t]).is_some_and(|v| v > level);
        let d = raster_hausdorff(measured, |p| target.contains(p), lo, hi, n);
        out.push((t, d));
    }
    Ok(out)
}

/// Measured invasion-shape estimate `t^{-1} E_level(t)` at the snapshot
/// closest to `t_final`.
pub fn shape_from_levelset(traj: &Trajectory, level: f64, t_final: f64) -> Result<PlanarSet> {
    check_level(level)?;
    let s = traj
        .at(t_final)
        .ok_or_else(|| Error::InsufficientData("empty trajectory".into()))?;
    if (s.t - t_final).abs() > 1e-9 * (1.0 + t_final) {
        return Err(Error::Domain(format!("no snapshot at t = {t_final}")));
    }
    rescaled_level_set(s, level)
}

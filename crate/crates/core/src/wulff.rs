//! Predicted invasion shapes from speed tables, shifted cone and halfspace
//! shapes, and geometric checks on measured shapes.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levelsets::{Region, Shape};
use crate::par;

/// Minimum number of sampled directions in the plane.
pub const MIN_DIRECTIONS: usize = 8;
/// Relative tie tolerance for minimizer sets.
pub const TIE_REL: f64 = 1e-6;
/// Default number of evaluation directions.
pub const EVAL_DIRECTIONS: usize = 256;

fn angle(v: [f64; 2]) -> f64 {
    let a = v[1].atan2(v[0]);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

fn normalize(v: [f64; 2]) -> Result<[f64; 2]> {
    let n = v[0].hypot(v[1]);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Domain(format!("direction {v:?} has no length")));
    }
    Ok([v[0] / n, v[1] / n])
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Speeds on the circle, interpolated piecewise-linearly in angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedCurve {
    /// Unit directions sorted by angle in `[0, 2 pi)`.
    pub directions: Vec<[f64; 2]>,
    pub speeds: Vec<f64>,
}

impl SpeedCurve {
    pub fn new(directions: &[[f64; 2]], speeds: &[f64]) -> Result<SpeedCurve> {
        if directions.len() != speeds.len() {
            return Err(Error::Structural(format!(
                "{} directions but {} speeds",
                directions.len(),
                speeds.len()
            )));
        }
        if directions.is_empty() {
            return Err(Error::Coverage("empty speed table".into()));
        }
        let mut rows = Vec::with_capacity(speeds.len());
        for (d, &c) in directions.iter().zip(speeds) {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::Domain(format!("speed {c} in direction {d:?} is not positive")));
            }
            let u = normalize(*d)?;
            rows.push((angle(u), u, c));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        rows.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-12);
        Ok(SpeedCurve {
            directions: rows.iter().map(|r| r.1).collect(),
            speeds: rows.iter().map(|r| r.2).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds.is_empty()
    }

    /// Largest angular gap between consecutive directions.
    pub fn max_gap(&self) -> f64 {
        let a: Vec<f64> = self.directions.iter().map(|d| angle(*d)).collect();
        let n = a.len();
        (0..n)
            .map(|k| {
                let next = if k + 1 < n { a[k + 1] } else { a[0] + 2.0 * PI };
                next - a[k]
            })
            .fold(0.0, f64::max)
    }

    pub fn max_speed(&self) -> f64 {
        self.speeds.iter().cloned().fold(0.0, f64::max)
    }

    pub fn min_speed(&self) -> f64 {
        self.speeds.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Interpolated speed in direction `nu`.
    pub fn at(&self, nu: [f64; 2]) -> f64 {
        let n = self.len();
        if n == 1 {
            return self.speeds[0];
        }
        let t = angle(nu);
        let a: Vec<f64> = self.directions.iter().map(|d| angle(*d)).collect();
        let k = a.partition_point(|&x| x <= t);
        let (lo, hi) = if k == 0 || k == n { (n - 1, 0) } else { (k - 1, k) };
        let mut span = a[hi] - a[lo];
        let mut off = t - a[lo];
        if span <= 0.0 {
            span += 2.0 * PI;
        }
        if off < 0.0 {
            off += 2.0 * PI;
        }
        let w = (off / span).clamp(0.0, 1.0);
        (1.0 - w) * self.speeds[lo] + w * self.speeds[hi]
    }

    pub fn scaled(&self, s: f64) -> SpeedCurve {
        SpeedCurve {
            directions: self.directions.clone(),
            speeds: self.speeds.iter().map(|c| c * s).collect(),
        }
    }
}

/// Radial and halfspace description of `W = {x : x.xi < c(xi) for all xi}`.
#[derive(Debug, Clone)]
pub struct WulffShape {
    pub dim: usize,
    pub speeds: SpeedCurve,
    /// Evaluation directions `e_i`.
    pub directions: Vec<[f64; 2]>,
    /// `w(e_i)`.
    pub radii: Vec<f64>,
    /// Indices into `speeds` realizing each minimum, ties retained.
    pub minimizers: Vec<Vec<usize>>,
    /// Counter-clockwise vertices of the halfspace intersection.
    pub vertices: Vec<[f64; 2]>,
    /// Speed index of the halfspace bounding edge `k` (from vertex `k` to `k+1`).
    pub edge_speed: Vec<usize>,
    region: Region,
}

/// On-disk form of a Wulff shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeJson {
    pub directions: Vec<[f64; 2]>,
    pub radii: Vec<f64>,
    pub vertices: Vec<[f64; 2]>,
    pub minimizers: Vec<Vec<[f64; 2]>>,
}

/// Radial function `min_{xi.e > 0} c(xi) / (xi.e)` with its minimizer set.
fn radial(speeds: &SpeedCurve, e: [f64; 2], tie: f64) -> (f64, Vec<usize>) {
    let vals: Vec<f64> = speeds
        .directions
        .iter()
        .zip(&speeds.speeds)
        .map(|(xi, c)| {
            let p = dot(*xi, e);
            if p > 0.0 {
                c / p
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let w = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let arg = (0..vals.len()).filter(|&k| vals[k] <= w + tie).collect();
    (w, arg)
}

/// Clip a convex polygon by `{x : x.n <= c}`, keeping the clipping index on
/// new edges.
fn clip(poly: &[([f64; 2], usize)], n: [f64; 2], c: f64, id: usize) -> Vec<([f64; 2], usize)> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let m = poly.len();
    for k in 0..m {
        let (a, ea) = poly[k];
        let (b, _) = poly[(k + 1) % m];
        let da = dot(a, n) - c;
        let db = dot(b, n) - c;
        if da <= 0.0 {
            out.push((a, ea));
        }
        if (da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0) {
            let t = da / (da - db);
            let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            // the edge leaving p follows the clipping line when entering outside
            out.push((p, if da < 0.0 { id } else { ea }));
        }
    }
    out
}

impl WulffShape {
    /// `w(e)` for any direction.
    pub fn radius(&self, e: [f64; 2]) -> f64 {
        match normalize(e) {
            Ok(u) => radial(&self.speeds, u, self.tie_tol()).0,
            Err(_) => 0.0,
        }
    }

    /// Minimizing directions for `e`.
    pub fn minimizers_at(&self, e: [f64; 2]) -> Vec<[f64; 2]> {
        match normalize(e) {
            Ok(u) => radial(&self.speeds, u, self.tie_tol())
                .1
                .into_iter()
                .map(|k| self.speeds.directions[k])
                .collect(),
            Err(_) => Vec::new(),
        }
    }

    pub fn tie_tol(&self) -> f64 {
        TIE_REL * self.speeds.max_speed()
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn scaled(&self, s: f64) -> Result<WulffShape> {
        build(self.dim, self.speeds.scaled(s), self.directions.len())
    }

    /// Boundary point `w(e) e`.
    pub fn boundary_point(&self, e: [f64; 2]) -> [f64; 2] {
        let u = normalize(e).unwrap_or([1.0, 0.0]);
        let w = self.radius(u);
        [w * u[0], w * u[1]]
    }

    /// Polygon cross products all have one sign.
    pub fn is_convex(&self) -> bool {
        let v = &self.vertices;
        let n = v.len();
        if n < 3 {
            return self.dim == 1;
        }
        (0..n).all(|k| {
            let a = v[k];
            let b = v[(k + 1) % n];
            let c = v[(k + 2) % n];
            (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]) >= -1e-12
        })
    }

    pub fn to_json(&self) -> ShapeJson {
        ShapeJson {
            directions: self.directions.clone(),
            radii: self.radii.clone(),
            vertices: self.vertices.clone(),
            minimizers: self
                .minimizers
                .iter()
                .map(|m| m.iter().map(|&k| self.speeds.directions[k]).collect())
                .collect(),
        }
    }

    /// Shape outline, with an optional measured region overlaid.
    pub fn to_svg(&self, overlay: Option<&Region>) -> String {
        let mut paths = vec![(vec![self.vertices.clone()], "#1f4e9c")];
        if let Some(r) = overlay {
            paths.push((r.loops.clone(), "#c0392b"));
        }
        svg(&paths)
    }
}

/// Minimal SVG of closed polylines, y pointing up.
pub fn svg(paths: &[(Vec<Vec<[f64; 2]>>, &str)]) -> String {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for (loops, _) in paths {
        for p in loops.iter().flatten() {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
    }
    if !lo[0].is_finite() {
        lo = [-1.0, -1.0];
        hi = [1.0, 1.0];
    }
    let pad = 0.05 * (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
    let (x0, y0) = (lo[0] - pad, lo[1] - pad);
    let (w, h) = (hi[0] - lo[0] + 2.0 * pad, hi[1] - lo[1] + 2.0 * pad);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.6} {:.6} {:.6} {:.6}\" width=\"600\" height=\"{:.0}\">",
        x0,
        -(y0 + h),
        w,
        h,
        600.0 * h / w
    );
    let stroke = 0.004 * w.max(h);
    for (loops, color) in paths {
        for l in loops {
            if l.is_empty() {
                continue;
            }
            let pts: Vec<String> = l.iter().map(|p| format!("{:.6},{:.6}", p[0], -p[1])).collect();
            let _ = writeln!(
                s,
                "<polygon points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{:.6}\"/>",
                pts.join(" "),
                color,
                stroke
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

impl Shape for WulffShape {
    fn is_empty(&self) -> bool {
        false
    }

    fn signed_distance(&self, p: [f64; 2]) -> f64 {
        if self.dim == 1 {
            return (p[0] - self.vertices[0][0]).max(self.vertices[1][0] - p[0]);
        }
        self.region.signed_distance(p)
    }

    fn samples(&self, spacing: f64) -> Vec<[f64; 2]> {
        if self.dim == 1 {
            return self.vertices.clone();
        }
        self.region.samples(spacing)
    }

    fn bounds(&self) -> Option<([f64; 2], [f64; 2])> {
        Shape::bounds(&self.region)
    }
}

fn build(dim: usize, speeds: SpeedCurve, n_eval: usize) -> Result<WulffShape> {
    let tie = TIE_REL * speeds.max_speed();
    if dim == 1 {
        let plus = speeds.directions.iter().position(|d| d[0] > 0.0 && d[1].abs() < 1e-12);
        let minus = speeds.directions.iter().position(|d| d[0] < 0.0 && d[1].abs() < 1e-12);
        let (Some(p), Some(m)) = (plus, minus) else {
            return Err(Error::Coverage("a line needs both directions +1 and -1".into()));
        };
        let (cp, cm) = (speeds.speeds[p], speeds.speeds[m]);
        let vertices = vec![[cp, 0.0], [-cm, 0.0]];
        return Ok(WulffShape {
            dim,
            directions: vec![[1.0, 0.0], [-1.0, 0.0]],
            radii: vec![cp, cm],
            minimizers: vec![vec![p], vec![m]],
            region: Region::new(vec![vec![[-cm, -1e-9], [cp, -1e-9], [cp, 1e-9], [-cm, 1e-9]]]),
            edge_speed: vec![p, m],
            vertices,
            speeds,
        });
    }
    if speeds.len() < MIN_DIRECTIONS {
        return Err(Error::Coverage(format!(
            "need at least {MIN_DIRECTIONS} directions, got {}",
            speeds.len()
        )));
    }
    let gap = speeds.max_gap();
    if gap >= PI / 2.0 {
        return Err(Error::Coverage(format!("angular gap {gap:.4} leaves the shape unbounded")));
    }
    let n_eval = n_eval.max(speeds.len());
    let directions: Vec<[f64; 2]> = (0..n_eval)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / n_eval as f64;
            [a.cos(), a.sin()]
        })
        .collect();
    let rows = par::map_slice(&directions, |e| radial(&speeds, *e, tie));
    let radii: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let minimizers: Vec<Vec<usize>> = rows.into_iter().map(|r| r.1).collect();

    let b = 4.0 * radii.iter().cloned().fold(0.0, f64::max) + 1.0;
    let mut poly = vec![([-b, -b], usize::MAX), ([b, -b], usize::MAX), ([b, b], usize::MAX), ([-b, b], usize::MAX)];
    for (k, (xi, c)) in speeds.directions.iter().zip(&speeds.speeds).enumerate() {
        poly = clip(&poly, *xi, *c, k);
    }
    // drop vertices closer than round-off
    let mut cleaned: Vec<([f64; 2], usize)> = Vec::with_capacity(poly.len());
    for p in poly {
        if let Some(last) = cleaned.last() {
            if (last.0[0] - p.0[0]).hypot(last.0[1] - p.0[1]) < 1e-12 * b {
                continue;
            }
        }
        cleaned.push(p);
    }
    if cleaned.len() > 1 {
        let (f, l) = (cleaned[0].0, cleaned[cleaned.len() - 1].0);
        if (f[0] - l[0]).hypot(f[1] - l[1]) < 1e-12 * b {
            cleaned.pop();
        }
    }
    let vertices: Vec<[f64; 2]> = cleaned.iter().map(|p| p.0).collect();
    let edge_speed = cleaned.iter().map(|p| p.1).collect();
    Ok(WulffShape {
        dim,
        region: Region::new(vec![vertices.clone()]),
        directions,
        radii,
        minimizers,
        vertices,
        edge_speed,
        speeds,
    })
}

/// Wulff shape of a speed table, with `n_eval` evaluation directions.
pub fn wulff_shape(dim: usize, directions: &[[f64; 2]], speeds: &[f64], n_eval: usize) -> Result<WulffShape> {
    if dim != 1 && dim != 2 {
        return Err(Error::Domain(format!("dimension {dim} is not supported")));
    }
    build(dim, SpeedCurve::new(directions, speeds)?, n_eval)
}

/// Residuals of `z.nu = c(nu)` at one boundary point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FgSample {
    pub z: [f64; 2],
    pub normals: Vec<[f64; 2]>,
    pub residuals: Vec<f64>,
    pub vertex: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FgReport {
    pub samples: Vec<FgSample>,
    pub max_residual: f64,
    /// `max_residual / max c`.
    pub max_relative: f64,
}

impl FgReport {
    fn from_samples(samples: Vec<FgSample>, speeds: &SpeedCurve) -> FgReport {
        let max_residual = samples
            .iter()
            .flat_map(|s| s.residuals.iter().cloned())
            .fold(0.0, f64::max);
        FgReport {
            max_relative: max_residual / speeds.max_speed(),
            max_residual,
            samples,
        }
    }
}

/// Regular identity on the predicted polygon: `n_samples` edge-interior
/// points plus every vertex with its two adjacent edge normals.
pub fn regular_fg_check(shape: &WulffShape, n_samples: usize) -> FgReport {
    let v = &shape.vertices;
    let sp = &shape.speeds;
    let mut samples = Vec::new();
    if shape.dim == 1 {
        for (k, z) in v.iter().enumerate() {
            let nu = [if k == 0 { 1.0 } else { -1.0 }, 0.0];
            samples.push(FgSample {
                z: *z,
                residuals: vec![(dot(*z, nu) - sp.at(nu)).abs()],
                normals: vec![nu],
                vertex: true,
            });
        }
        return FgReport::from_samples(samples, sp);
    }
    let n = v.len();
    let normal = |k: usize| -> [f64; 2] {
        let a = v[k];
        let b = v[(k + 1) % n];
        let l = (b[0] - a[0]).hypot(b[1] - a[1]);
        [(b[1] - a[1]) / l, -(b[0] - a[0]) / l]
    };
    let lengths: Vec<f64> = (0..n)
        .map(|k| (v[(k + 1) % n][0] - v[k][0]).hypot(v[(k + 1) % n][1] - v[k][1]))
        .collect();
    let total: f64 = lengths.iter().sum();
    let mut next = 0.5 * total / n_samples.max(1) as f64;
    let mut acc = 0.0;
    for k in 0..n {
        let nu = normal(k);
        while next < acc + lengths[k] && n_samples > 0 {
            let t = (next - acc) / lengths[k];
            let z = [v[k][0] + t * (v[(k + 1) % n][0] - v[k][0]), v[k][1] + t * (v[(k + 1) % n][1] - v[k][1])];
            samples.push(FgSample {
                z,
                residuals: vec![(dot(z, nu) - sp.at(nu)).abs()],
                normals: vec![nu],
                vertex: false,
            });
            next += total / n_samples as f64;
        }
        acc += lengths[k];
    }
    for k in 0..n {
        let fan = [normal((k + n - 1) % n), normal(k)];
        let z = v[k];
        samples.push(FgSample {
            z,
            residuals: fan.iter().map(|nu| (dot(z, *nu) - sp.at(*nu)).abs()).collect(),
            normals: fan.to_vec(),
            vertex: true,
        });
    }
    FgReport::from_samples(samples, sp)
}

/// Boundary points of a measured region with outward normals from chords
/// spanning `stride_frac` of the loop length on each side.
pub fn boundary_normals(region: &Region, n: usize, stride_frac: f64) -> Vec<([f64; 2], [f64; 2])> {
    let dense_n = 64 * n.max(1);
    let dense = region.boundary_points(dense_n);
    if dense.len() < 3 {
        return Vec::new();
    }
    let m = dense.len();
    let stride = ((stride_frac * m as f64).round() as usize).clamp(1, m / 4);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let i = (k * m) / n;
        let a = dense[(i + m - stride) % m];
        let b = dense[(i + stride) % m];
        let d = [b[0] - a[0], b[1] - a[1]];
        let l = d[0].hypot(d[1]);
        if l == 0.0 {
            continue;
        }
        let mut nu = [d[1] / l, -d[0] / l];
        let z = dense[i];
        let eps = 1e-3 * l;
        if region.inside([z[0] + eps * nu[0], z[1] + eps * nu[1]]) {
            nu = [-nu[0], -nu[1]];
        }
        out.push((z, nu));
    }
    out
}

/// Regular identity on a measured region against an interpolated speed curve.
pub fn regular_fg_check_region(region: &Region, speeds: &SpeedCurve, n_samples: usize, stride_frac: f64) -> FgReport {
    let samples = boundary_normals(region, n_samples, stride_frac)
        .into_iter()
        .map(|(z, nu)| FgSample {
            z,
            residuals: vec![(dot(z, nu) - speeds.at(nu)).abs()],
            normals: vec![nu],
            vertex: false,
        })
        .collect();
    FgReport::from_samples(samples, speeds)
}

/// Shape family obtained from non-compact data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ShiftKind {
    /// Data `{y <= alpha |x|}`.
    Cone { alpha: f64 },
    /// Data `{x.e <= 0}`.
    Halfspace { e: [f64; 2] },
}

/// `W` for cone or halfspace data in a medium with constant speed `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftedShape {
    pub kind: ShiftKind,
    pub c: f64,
}

/// Signed distance to `{y < beta |x|}` for `beta < 0` (a convex wedge).
fn sd_lower_wedge(p: [f64; 2], beta: f64) -> f64 {
    let q = [p[0].abs(), p[1]];
    let s = (1.0 + beta * beta).sqrt();
    let d = [1.0 / s, beta / s];
    let n = [-beta / s, 1.0 / s];
    let side = dot(q, n);
    let dist = if dot(q, d) >= 0.0 { side.abs() } else { q[0].hypot(q[1]) };
    if side < 0.0 {
        -dist
    } else {
        dist
    }
}

/// Shifted shape for cone data (`alpha` finite and nonzero) or halfspace data.
pub fn shifted_shape(kind: ShiftKind, c: f64) -> Result<ShiftedShape> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("speed {c} is not positive")));
    }
    match kind {
        ShiftKind::Cone { alpha } if alpha == 0.0 || !alpha.is_finite() => {
            Err(Error::Domain(format!("cone parameter {alpha} must be finite and nonzero")))
        }
        ShiftKind::Halfspace { e } => Ok(ShiftedShape {
            kind: ShiftKind::Halfspace { e: normalize(e)? },
            c,
        }),
        k => Ok(ShiftedShape { kind: k, c }),
    }
}

impl ShiftedShape {
    /// Point where the symmetry axis (or the normal line) meets the boundary.
    pub fn apex(&self) -> [f64; 2] {
        match self.kind {
            ShiftKind::Cone { alpha } if alpha < 0.0 => [0.0, self.c],
            ShiftKind::Cone { alpha } => [0.0, self.c * (1.0 + alpha * alpha).sqrt()],
            ShiftKind::Halfspace { e } => [self.c * e[0], self.c * e[1]],
        }
    }

    /// Boundary points over `[-half, half]` of arc parameter around the apex.
    pub fn boundary_samples(&self, n: usize, half: f64) -> Vec<[f64; 2]> {
        let ts: Vec<f64> = (0..n)
            .map(|k| if n == 1 { 0.0 } else { -half + 2.0 * half * k as f64 / (n - 1) as f64 })
            .collect();
        match self.kind {
            ShiftKind::Halfspace { e } => {
                let a = self.apex();
                ts.iter().map(|t| [a[0] - t * e[1], a[1] + t * e[0]]).collect()
            }
            ShiftKind::Cone { alpha } if alpha > 0.0 => {
                let a = self.apex();
                let s = (1.0 + alpha * alpha).sqrt();
                ts.iter().map(|t| [t / s, a[1] + alpha * t.abs() / s]).collect()
            }
            ShiftKind::Cone { alpha } => {
                // arc of radius c over the normal fan, then the offset rays
                let s = (1.0 + alpha * alpha).sqrt();
                let half_fan = (1.0 / s).acos().abs();
                let arc = self.c * half_fan;
                ts.iter()
                    .map(|&t| {
                        let sg = t.signum();
                        let a = t.abs();
                        if a <= arc {
                            let th = a / self.c;
                            [sg * self.c * th.sin(), self.c * th.cos()]
                        } else {
                            let n = [-alpha / s, 1.0 / s];
                            let d = [1.0 / s, alpha / s];
                            let r = a - arc;
                            [sg * (self.c * n[0] + r * d[0]), self.c * n[1] + r * d[1]]
                        }
                    })
                    .collect()
            }
        }
    }
}

impl Shape for ShiftedShape {
    fn is_empty(&self) -> bool {
        false
    }

    fn signed_distance(&self, p: [f64; 2]) -> f64 {
        match self.kind {
            ShiftKind::Halfspace { e } => dot(p, e) - self.c,
            ShiftKind::Cone { alpha } if alpha < 0.0 => sd_lower_wedge(p, alpha) - self.c,
            ShiftKind::Cone { alpha } => {
                // complement of the convex wedge above the vertex
                let a = self.apex();
                -sd_lower_wedge([p[0] - a[0], a[1] - p[1]], -alpha)
            }
        }
    }

    /// Points within a box of half-width `4c` around the apex.
    fn samples(&self, spacing: f64) -> Vec<[f64; 2]> {
        let a = self.apex();
        let r = 4.0 * self.c;
        let grid = crate::levelsets::box_grid([a[0] - r, a[1] - r], [a[0] + r, a[1] + r], spacing);
        let mut out: Vec<[f64; 2]> = grid.into_iter().filter(|p| self.contains(*p)).collect();
        out.extend(self.boundary_samples((2.0 * r / spacing).ceil() as usize + 1, r));
        out
    }

    fn bounds(&self) -> Option<([f64; 2], [f64; 2])> {
        None
    }
}

/// Interior and exterior tangent-ball test at a boundary point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallProbe {
    pub z: [f64; 2],
    pub r: f64,
    pub interior: bool,
    pub exterior: bool,
    /// Exterior unit normal when both balls exist.
    pub normal: Option<[f64; 2]>,
    /// Best `min(interior, exterior)` margin over candidate normals.
    pub margin: f64,
}

const PROBE_ANGLES: usize = 720;

/// Search tangent balls of radius `r` at `z`; `tol` absorbs the distance
/// error of the shape representation.
pub fn ball_condition_probe(shape: &dyn Shape, z: [f64; 2], r: f64, tol: f64) -> BallProbe {
    let margins = |th: f64| {
        let nu = [th.cos(), th.sin()];
        let inner = -shape.signed_distance([z[0] - r * nu[0], z[1] - r * nu[1]]) - r;
        let outer = shape.signed_distance([z[0] + r * nu[0], z[1] + r * nu[1]]) - r;
        (inner, outer)
    };
    let coarse = par::map_range(PROBE_ANGLES, |k| {
        let th = 2.0 * PI * k as f64 / PROBE_ANGLES as f64;
        let (i, o) = margins(th);
        (th, i, o)
    });
    let interior = coarse.iter().any(|c| c.1 >= -tol);
    let exterior = coarse.iter().any(|c| c.2 >= -tol);
    let (mut best_th, _, _) = coarse
        .iter()
        .cloned()
        .max_by(|a, b| a.1.min(a.2).total_cmp(&b.1.min(b.2)))
        .unwrap_or((0.0, f64::NEG_INFINITY, f64::NEG_INFINITY));
    // golden-section refinement of the joint margin
    let step = 2.0 * PI / PROBE_ANGLES as f64;
    let joint = |th: f64| {
        let (i, o) = margins(th);
        i.min(o)
    };
    let (mut a, mut b) = (best_th - step, best_th + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (joint(x1), joint(x2));
    for _ in 0..60 {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = joint(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = joint(x2);
        }
    }
    best_th = 0.5 * (a + b);
    let margin = joint(best_th);
    let both = margin >= -tol;
    BallProbe {
        z,
        r,
        interior: interior || margin >= -tol,
        exterior: exterior || margin >= -tol,
        normal: both.then(|| [best_th.cos(), best_th.sin()]),
        margin,
    }
}

/// One cone-condition evaluation at `lambda z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeRow {
    pub z: [f64; 2],
    pub lambda: f64,
    /// Nonnegative when the required ball lies on the required side.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub gamma: f64,
    pub rows: Vec<ConeRow>,
    pub worst_margin: f64,
    pub passed: bool,
}

/// Balls `B_{(1-l) gamma}(l z)` inside the shape for `l < 1` and
/// `B_{(l-1) gamma}(l z)` outside for `l > 1`, at every boundary sample.
pub fn cone_conditions_check(
    shape: &dyn Shape,
    gamma: f64,
    boundary: &[[f64; 2]],
    lambdas: &[f64],
    tol: f64,
) -> Result<ConeReport> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("gamma {gamma} must be positive")));
    }
    if let Some(l) = lambdas.iter().find(|l| !(**l >= 0.0) || **l == 1.0) {
        return Err(Error::Domain(format!("lambda {l} must lie in [0, 1) or (1, inf)")));
    }
    let mut rows = Vec::with_capacity(boundary.len() * lambdas.len());
    for z in boundary {
        for &l in lambdas {
            let p = [l * z[0], l * z[1]];
            let sd = shape.signed_distance(p);
            let margin = if l < 1.0 {
                -sd - (1.0 - l) * gamma
            } else {
                sd - (l - 1.0) * gamma
            };
            rows.push(ConeRow { z: *z, lambda: l, margin });
        }
    }
    let worst_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    Ok(ConeReport {
        gamma,
        passed: worst_margin >= -tol,
        rows,
        worst_margin,
    })
}

/// Parse `ex,ey,c` rows, skipping a header line and blank lines.
/// Columns after `ex,ey,c` are ignored.
pub fn read_speeds_csv(text: &str) -> Result<(Vec<[f64; 2]>, Vec<f64>)> {
    let mut dirs = Vec::new();
    let mut speeds = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).take(3).collect();
        let parsed: std::result::Result<Vec<f64>, _> = cols.iter().map(|c| c.parse::<f64>()).collect();
        match parsed {
            Ok(v) if v.len() == 3 => {
                dirs.push([v[0], v[1]]);
                speeds.push(v[2]);
            }
            Err(_) if k == 0 => continue,
            _ => return Err(Error::Config(format!("line {}: expected ex,ey,c", k + 1))),
        }
    }
    Ok((dirs, speeds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ring(n: usize) -> Vec<[f64; 2]> {
        (0..n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                [a.cos(), a.sin()]
            })
            .collect()
    }

    fn ellipse_speed(xi: [f64; 2]) -> f64 {
        (xi[0] * xi[0] + 4.0 * xi[1] * xi[1]).sqrt()
    }

    #[test]
    fn constant_speeds_give_the_disk() {
        let d = ring(64);
        let w = wulff_shape(2, &d, &[1.0; 64], 256).unwrap();
        for r in &w.radii {
            assert!(*r >= 1.0 - 1e-15 && r - 1.0 < 2e-3, "{r}");
        }
        // exactly on the sampled directions, with a single minimizer
        for xi in &d {
            assert!((w.radius(*xi) - 1.0).abs() < 1e-15);
            let m = w.minimizers_at(*xi);
            assert_eq!(m.len(), 1);
            assert!((m[0][0] - xi[0]).abs() < 1e-15 && (m[0][1] - xi[1]).abs() < 1e-15);
        }
        assert!(w.is_convex());
        assert!(w.contains([0.0, 0.0]) && !w.contains([1.01, 0.0]));
    }

    #[test]
    fn ellipse_against_brute_force() {
        let d = ring(64);
        let c: Vec<f64> = d.iter().map(|x| ellipse_speed(*x)).collect();
        let w = wulff_shape(2, &d, &c, 256).unwrap();
        assert!((w.radius([0.0, 1.0]) - 2.0).abs() < 1e-12);
        assert!((w.radius([1.0, 0.0]) - 1.0).abs() < 1e-12);
        let fine = ring(4096);
        for e in ring(97) {
            let brute = fine
                .iter()
                .filter(|x| dot(**x, e) > 0.0)
                .map(|x| ellipse_speed(*x) / dot(*x, e))
                .fold(f64::INFINITY, f64::min);
            let exact = 1.0 / (e[0] * e[0] + e[1] * e[1] / 4.0).sqrt();
            assert!((brute - exact).abs() < 1e-5);
            assert!((w.radius(e) - brute).abs() < 2e-2 * brute, "{e:?}");
            assert!(w.radius(e) >= brute - 1e-12);
        }
    }

    #[test]
    fn coverage_and_positivity_errors() {
        assert!(matches!(
            wulff_shape(2, &[[1.0, 0.0], [0.0, 1.0]], &[1.0, 1.0], 64),
            Err(Error::Coverage(_))
        ));
        let half: Vec<[f64; 2]> = (0..9).map(|k| [(PI * k as f64 / 8.0).cos(), (PI * k as f64 / 8.0).sin()]).collect();
        assert!(matches!(wulff_shape(2, &half, &[1.0; 9], 64), Err(Error::Coverage(_))));
        let mut c = vec![1.0; 8];
        c[3] = 0.0;
        assert!(matches!(wulff_shape(2, &ring(8), &c, 64), Err(Error::Domain(_))));
        let line = wulff_shape(1, &[[1.0, 0.0], [-1.0, 0.0]], &[0.5, 0.7], 2).unwrap();
        assert_eq!(line.radii, vec![0.5, 0.7]);
        assert!(line.contains([0.4, 0.0]) && !line.contains([-0.8, 0.0]));
    }

    #[test]
    fn fg_identity_on_predicted_shapes() {
        let w = wulff_shape(2, &ring(64), &[1.0; 64], 256).unwrap();
        let z = w.boundary_point([1.0, 0.0]);
        assert!((z[0] - 1.0).abs() < 1e-15 && z[1].abs() < 1e-15);
        assert!(regular_fg_check(&w, 64).max_residual < 1e-12);

        let d = ring(64);
        let c: Vec<f64> = d.iter().map(|x| ellipse_speed(*x)).collect();
        let e = wulff_shape(2, &d, &c, 256).unwrap();
        let rep = regular_fg_check(&e, 64);
        assert!(rep.max_residual < 1e-12, "{}", rep.max_residual);
        assert!(rep.samples.iter().filter(|s| s.vertex).all(|s| s.normals.len() == 2));
        let top = e.boundary_point([0.0, 1.0]);
        assert!((top[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn corner_fan_residuals() {
        // support function of the square [-1, 1]^2
        let d = ring(16);
        let c: Vec<f64> = d.iter().map(|x| x[0].abs() + x[1].abs()).collect();
        let w = wulff_shape(2, &d, &c, 256).unwrap();
        assert!((w.radius([1.0, 1.0]) - 2f64.sqrt()).abs() < 1e-12);
        let corner = w.minimizers_at([1.0, 1.0]);
        assert!(corner.len() >= 2, "{corner:?}");
        let rep = regular_fg_check(&w, 32);
        let v = rep
            .samples
            .iter()
            .find(|s| s.vertex && (s.z[0] - 1.0).abs() < 1e-9 && (s.z[1] - 1.0).abs() < 1e-9)
            .unwrap();
        assert!(v.residuals.iter().all(|r| *r < 1e-12));
    }

    #[test]
    fn measured_region_normals() {
        let loop_: Vec<[f64; 2]> = ring(2000).iter().map(|p| [p[0], 2.0 * p[1]]).collect();
        let region = Region::new(vec![loop_]);
        let d = ring(64);
        let c: Vec<f64> = d.iter().map(|x| ellipse_speed(*x)).collect();
        let curve = SpeedCurve::new(&d, &c).unwrap();
        let rep = regular_fg_check_region(&region, &curve, 32, 0.005);
        assert_eq!(rep.samples.len(), 32);
        assert!(rep.max_relative < 5e-3, "{}", rep.max_relative);
    }

    #[test]
    fn shifted_shapes() {
        let s = shifted_shape(ShiftKind::Cone { alpha: -1.0 }, 1.0).unwrap();
        assert!(s.signed_distance([0.0, 1.0]).abs() < 1e-15);
        assert!(s.contains([0.0, 0.99]) && !s.contains([0.0, 1.01]));
        // far along the ray the boundary is the ray offset by c
        let p = [10.0, -10.0 + 2f64.sqrt()];
        assert!(s.signed_distance(p).abs() < 1e-12);
        for z in s.boundary_samples(33, 6.0) {
            assert!(s.signed_distance(z).abs() < 1e-12, "{z:?}");
        }
        let v = shifted_shape(ShiftKind::Cone { alpha: 1.0 }, 1.0).unwrap();
        assert!((v.apex()[1] - 2f64.sqrt()).abs() < 1e-15);
        assert!(v.signed_distance([0.0, 2f64.sqrt()]).abs() < 1e-15);
        assert!(v.contains([0.0, 1.4]) && !v.contains([0.0, 1.42]) && v.contains([5.0, 5.0]));
        for z in v.boundary_samples(17, 4.0) {
            assert!(v.signed_distance(z).abs() < 1e-12);
        }
        let h = shifted_shape(ShiftKind::Halfspace { e: [0.0, 1.0] }, 0.4).unwrap();
        assert!(h.contains([0.0, 0.39]) && !h.contains([0.0, 0.41]));
        assert!(shifted_shape(ShiftKind::Cone { alpha: 0.0 }, 1.0).is_err());
    }

    #[test]
    fn minkowski_sum_matches_raster_oracle() {
        // brute-force distance to the sampled wedge, minus c
        let s = shifted_shape(ShiftKind::Cone { alpha: -1.0 }, 1.0).unwrap();
        let mut wedge = Vec::new();
        for i in -400..=400 {
            for j in -400..=10 {
                let p = [i as f64 * 0.02, j as f64 * 0.02];
                if p[1] < -p[0].abs() {
                    wedge.push(p);
                }
            }
        }
        for q in [[0.0, 1.0], [0.5, 0.6], [-1.0, 0.4], [2.0, -1.0], [0.0, 3.0]] {
            let d = wedge
                .iter()
                .map(|w| (w[0] - q[0]).hypot(w[1] - q[1]))
                .fold(f64::INFINITY, f64::min);
            assert!((s.signed_distance(q) - (d - 1.0)).abs() < 0.03, "{q:?}");
        }
    }

    #[test]
    fn ball_probes() {
        let w = wulff_shape(2, &ring(256), &[1.0; 256], 256).unwrap();
        let b = ball_condition_probe(&w, [1.0, 0.0], 0.5, 1e-3);
        assert!(b.interior && b.exterior);
        let n = b.normal.unwrap();
        assert!((n[0] - 1.0).abs() < 1e-3);

        let v = shifted_shape(ShiftKind::Cone { alpha: 1.0 }, 1.0).unwrap();
        let p = ball_condition_probe(&v, v.apex(), 0.5, 1e-9);
        assert!(p.interior && !p.exterior && p.normal.is_none());

        let s = shifted_shape(ShiftKind::Cone { alpha: -1.0 }, 1.0).unwrap();
        for z in s.boundary_samples(16, 5.0) {
            let p = ball_condition_probe(&s, z, 0.5, 1e-9);
            assert!(p.interior && p.exterior, "{z:?} {}", p.margin);
        }
    }

    #[test]
    fn cone_conditions() {
        let w = wulff_shape(2, &ring(256), &[1.0; 256], 256).unwrap();
        let bd: Vec<[f64; 2]> = ring(16).iter().map(|e| w.boundary_point(*e)).collect();
        let rep = cone_conditions_check(&w, 0.5, &bd, &[0.25, 0.5, 0.75, 1.5, 2.0], 1e-9).unwrap();
        assert!(rep.passed && rep.worst_margin > 0.0, "{}", rep.worst_margin);
        // a C-shaped region is not star-shaped about the origin
        let c_shape = Region::new(vec![vec![
            [-2.0, -2.0],
            [2.0, -2.0],
            [2.0, -1.0],
            [-1.0, -1.0],
            [-1.0, 1.0],
            [2.0, 1.0],
            [2.0, 2.0],
            [-2.0, 2.0],
        ]]);
        let bd = vec![[1.0, 0.0], [2.0, 1.5]];
        let rep = cone_conditions_check(&c_shape, 0.2, &bd, &[0.5, 1.5], 1e-9).unwrap();
        assert!(!rep.passed && rep.worst_margin < 0.0);
        assert!(cone_conditions_check(&w, 0.0, &bd, &[0.5], 0.0).is_err());
    }

    #[test]
    fn speeds_csv_and_json() {
        let (d, c) = read_speeds_csv("ex,ey,c\n1,0,0.5\n0,1,0.25\n").unwrap();
        assert_eq!(d, vec![[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(c, vec![0.5, 0.25]);
        assert!(read_speeds_csv("1,0\n").is_err());
        let w = wulff_shape(2, &ring(8), &[1.0; 8], 16).unwrap();
        let a = serde_json::to_string(&w.to_json()).unwrap();
        let b = serde_json::to_string(&wulff_shape(2, &ring(8), &[1.0; 8], 16).unwrap().to_json()).unwrap();
        assert_eq!(a, b);
        assert!(w.to_svg(None).starts_with("<svg"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn homogeneity_and_containment(
            c in proptest::collection::vec(0.2f64..2.0, 12),
            s in 0.1f64..10.0,
        ) {
            let d = ring(12);
            let w = wulff_shape(2, &d, &c, 128).unwrap();
            let cs: Vec<f64> = c.iter().map(|x| x * s).collect();
            let ws = wulff_shape(2, &d, &cs, 128).unwrap();
            for k in 0..w.radii.len() {
                prop_assert!((ws.radii[k] - s * w.radii[k]).abs() <= 1e-12 * ws.radii[k]);
                prop_assert_eq!(&ws.minimizers[k], &w.minimizers[k]);
            }
            let cmin = c.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert!(w.radii.iter().all(|r| *r >= cmin - 1e-12));
            prop_assert!(w.is_convex());
            // radial points sit on the clipped polygon and obey every halfspace
            for (e, r) in w.directions.iter().zip(&w.radii) {
                let z = [r * e[0], r * e[1]];
                prop_assert!(w.region().boundary_distance(z) < 1e-9);
                for (xi, ci) in d.iter().zip(&c) {
                    prop_assert!(dot(z, *xi) <= ci + 1e-9);
                }
            }
        }
    }
}

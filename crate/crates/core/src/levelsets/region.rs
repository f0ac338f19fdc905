//! Planar sets bounded by closed polylines, with distance queries.

use serde::{Deserialize, Serialize};

use crate::par;

/// Anything with a signed distance and a finite sampling of its closure.
pub trait Shape: Sync {
    fn is_empty(&self) -> bool;

    /// Negative inside, positive outside, `+inf` for the empty set.
    fn signed_distance(&self, p: [f64; 2]) -> f64;

    fn contains(&self, p: [f64; 2]) -> bool {
        self.signed_distance(p) < 0.0
    }

    /// Distance from `p` to the closure of the set.
    fn distance(&self, p: [f64; 2]) -> f64 {
        self.signed_distance(p).max(0.0)
    }

    /// Boundary points at roughly `spacing` plus interior grid points.
    fn samples(&self, spacing: f64) -> Vec<[f64; 2]>;

    /// Bounding box, `None` when empty or unbounded.
    fn bounds(&self) -> Option<([f64; 2], [f64; 2])>;
}

pub(crate) fn dist_point_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * d[0] - p[0], a[1] + t * d[1] - p[1]];
    (q[0] * q[0] + q[1] * q[1]).sqrt()
}

/// Grid points with the given spacing over a box.
pub(crate) fn box_grid(lo: [f64; 2], hi: [f64; 2], spacing: f64) -> Vec<[f64; 2]> {
    let nx = ((hi[0] - lo[0]) / spacing).ceil().max(1.0) as usize;
    let ny = ((hi[1] - lo[1]) / spacing).ceil().max(1.0) as usize;
    let mut out = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            out.push([
                lo[0] + (hi[0] - lo[0]) * i as f64 / nx as f64,
                lo[1] + (hi[1] - lo[1]) * j as f64 / ny as f64,
            ]);
        }
    }
    out
}

#[derive(Debug, Clone, Default)]
struct SegIndex {
    lo: [f64; 2],
    cell: [f64; 2],
    n: usize,
    buckets: Vec<Vec<u32>>,
    rows: Vec<Vec<u32>>,
}

/// Union of closed polylines under the even-odd rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Region {
    pub loops: Vec<Vec<[f64; 2]>>,
    #[serde(skip)]
    segs: Vec<[[f64; 2]; 2]>,
    #[serde(skip)]
    index: SegIndex,
    lo: [f64; 2],
    hi: [f64; 2],
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.loops == other.loops
    }
}

impl Region {
    /// Builds a region from closed loops (the last vertex connects to the first).
    pub fn new(loops: Vec<Vec<[f64; 2]>>) -> Region {
        let loops: Vec<Vec<[f64; 2]>> = loops.into_iter().filter(|l| l.len() >= 3).collect();
        let mut segs = Vec::new();
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for l in &loops {
            for k in 0..l.len() {
                let a = l[k];
                let b = l[(k + 1) % l.len()];
                segs.push([a, b]);
                for d in 0..2 {
                    lo[d] = lo[d].min(a[d]);
                    hi[d] = hi[d].max(a[d]);
                }
            }
        }
        let mut r = Region {
            loops,
            segs,
            index: SegIndex::default(),
            lo,
            hi,
        };
        r.build_index();
        r
    }

    fn build_index(&mut self) {
        if self.segs.is_empty() {
            return;
        }
        let n = ((self.segs.len() as f64).sqrt().ceil() as usize).clamp(1, 512);
        let pad = 1e-9 * (1.0 + (self.hi[0] - self.lo[0]).abs() + (self.hi[1] - self.lo[1]).abs());
        let lo = [self.lo[0] - pad, self.lo[1] - pad];
        let cell = [
            (self.hi[0] - self.lo[0] + 2.0 * pad) / n as f64,
            (self.hi[1] - self.lo[1] + 2.0 * pad) / n as f64,
        ];
        let mut buckets = vec![Vec::new(); n * n];
        let mut rows = vec![Vec::new(); n];
        let bin = |v: f64, d: usize| (((v - lo[d]) / cell[d]).floor().max(0.0) as usize).min(n - 1);
        for (s, seg) in self.segs.iter().enumerate() {
            let (x0, x1) = (bin(seg[0][0].min(seg[1][0]), 0), bin(seg[0][0].max(seg[1][0]), 0));
            let (y0, y1) = (bin(seg[0][1].min(seg[1][1]), 1), bin(seg[0][1].max(seg[1][1]), 1));
            for j in y0..=y1 {
                rows[j].push(s as u32);
                for i in x0..=x1 {
                    buckets[j * n + i].push(s as u32);
                }
            }
        }
        self.index = SegIndex {
            lo,
            cell,
            n,
            buckets,
            rows,
        };
    }

    pub fn is_empty(&self) -> bool {
        self.segs.is_empty()
    }

    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        (self.lo, self.hi)
    }

    pub fn segment_count(&self) -> usize {
        self.segs.len()
    }

    /// Even-odd membership.
    pub fn inside(&self, p: [f64; 2]) -> bool {
        if self.segs.is_empty() || p[1] < self.lo[1] || p[1] > self.hi[1] || p[0] > self.hi[0] {
            return false;
        }
        let ix = &self.index;
        let j = (((p[1] - ix.lo[1]) / ix.cell[1]).floor().max(0.0) as usize).min(ix.n - 1);
        let mut odd = false;
        for &s in &ix.rows[j] {
            let [a, b] = self.segs[s as usize];
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if x > p[0] {
                    odd = !odd;
                }
            }
        }
        odd
    }

    /// Distance from `p` to the boundary polylines.
    pub fn boundary_distance(&self, p: [f64; 2]) -> f64 {
        if self.segs.is_empty() {
            return f64::INFINITY;
        }
        let ix = &self.index;
        let n = ix.n as i64;
        let ci = (((p[0] - ix.lo[0]) / ix.cell[0]).floor() as i64).clamp(0, n - 1);
        let cj = (((p[1] - ix.lo[1]) / ix.cell[1]).floor() as i64).clamp(0, n - 1);
        let step = ix.cell[0].min(ix.cell[1]);
        let mut best = f64::INFINITY;
        for k in 0..=n {
            if best.is_finite() && (k as f64 - 1.0) * step > best {
                break;
            }
            for j in (cj - k).max(0)..=(cj + k).min(n - 1) {
                for i in (ci - k).max(0)..=(ci + k).min(n - 1) {
                    if (i - ci).abs() != k && (j - cj).abs() != k {
                        continue;
                    }
                    for &s in &ix.buckets[(j * n + i) as usize] {
                        let [a, b] = self.segs[s as usize];
                        best = best.min(dist_point_segment(p, a, b));
                    }
                }
            }
        }
        best
    }

    /// `n` points spread by arc length over all loops.
    pub fn boundary_points(&self, n: usize) -> Vec<[f64; 2]> {
        let total: f64 = self.segs.iter().map(|s| dist_point_segment(s[0], s[1], s[1])).sum();
        if n == 0 || total == 0.0 {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(n);
        let mut acc = 0.0;
        let mut next = 0.5 * total / n as f64;
        for s in &self.segs {
            let len = dist_point_segment(s[0], s[1], s[1]);
            while next <= acc + len && out.len() < n {
                let t = if len > 0.0 { (next - acc) / len } else { 0.0 };
                out.push([s[0][0] + t * (s[1][0] - s[0][0]), s[0][1] + t * (s[1][1] - s[0][1])]);
                next += total / n as f64;
            }
            acc += len;
        }
        out
    }

    /// Outward unit normal of the boundary near `p`, from the nearest segment.
    pub fn normal_near(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        let s = self
            .segs
            .iter()
            .min_by(|a, b| {
                dist_point_segment(p, a[0], a[1])
                    .partial_cmp(&dist_point_segment(p, b[0], b[1]))
                    .unwrap()
            })?;
        let d = [s[1][0] - s[0][0], s[1][1] - s[0][1]];
        let l = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if l == 0.0 {
            return None;
        }
        let mut nrm = [d[1] / l, -d[0] / l];
        let mid = [0.5 * (s[0][0] + s[1][0]), 0.5 * (s[0][1] + s[1][1])];
        let eps = 1e-6 * (1.0 + l);
        if self.inside([mid[0] + eps * nrm[0], mid[1] + eps * nrm[1]]) {
            nrm = [-nrm[0], -nrm[1]];
        }
        Some(nrm)
    }

    /// Image under `x -> s x`.
    pub fn scaled(&self, s: f64) -> Region {
        Region::new(
            self.loops
                .iter()
                .map(|l| l.iter().map(|p| [p[0] * s, p[1] * s]).collect())
                .collect(),
        )
    }

    /// Even-odd area.
    pub fn area(&self) -> f64 {
        // signed shoelace per loop; nested loops alternate orientation under
        // marching squares, so absolute values of the total are not needed
        let tot: f64 = self
            .loops
            .iter()
            .map(|l| {
                (0..l.len())
                    .map(|k| {
                        let a = l[k];
                        let b = l[(k + 1) % l.len()];
                        a[0] * b[1] - a[1] * b[0]
                    })
                    .sum::<f64>()
                    * 0.5
            })
            .sum();
        tot.abs()
    }
}

impl Shape for Region {
    fn is_empty(&self) -> bool {
        self.segs.is_empty()
    }

    fn signed_distance(&self, p: [f64; 2]) -> f64 {
        let d = self.boundary_distance(p);
        if self.inside(p) {
            -d
        } else {
            d
        }
    }

    fn distance(&self, p: [f64; 2]) -> f64 {
        if self.inside(p) {
            0.0
        } else {
            self.boundary_distance(p)
        }
    }

    fn bounds(&self) -> Option<([f64; 2], [f64; 2])> {
        (!self.segs.is_empty()).then_some((self.lo, self.hi))
    }

    fn samples(&self, spacing: f64) -> Vec<[f64; 2]> {
        let mut out = Vec::new();
        for s in &self.segs {
            let len = dist_point_segment(s[0], s[1], s[1]);
            let k = (len / spacing).ceil().max(1.0) as usize;
            for t in 0..k {
                let w = t as f64 / k as f64;
                out.push([s[0][0] + w * (s[1][0] - s[0][0]), s[0][1] + w * (s[1][1] - s[0][1])]);
            }
        }
        if !self.segs.is_empty() {
            let grid = box_grid(self.lo, self.hi, spacing);
            let keep = par::map_slice(&grid, |p| self.inside(*p));
            out.extend(grid.iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| *p));
        }
        out
    }
}

/// Closed disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Shape for Disk {
    fn is_empty(&self) -> bool {
        self.radius <= 0.0
    }

    fn signed_distance(&self, p: [f64; 2]) -> f64 {
        let d = [p[0] - self.center[0], p[1] - self.center[1]];
        (d[0] * d[0] + d[1] * d[1]).sqrt() - self.radius
    }

    fn bounds(&self) -> Option<([f64; 2], [f64; 2])> {
        let (c, r) = (self.center, self.radius);
        (r > 0.0).then_some(([c[0] - r, c[1] - r], [c[0] + r, c[1] + r]))
    }

    fn samples(&self, spacing: f64) -> Vec<[f64; 2]> {
        let r = self.radius;
        let n = ((std::f64::consts::TAU * r / spacing).ceil() as usize).max(8);
        let mut out: Vec<[f64; 2]> = (0..n)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                [self.center[0] + r * a.cos(), self.center[1] + r * a.sin()]
            })
            .collect();
        let c = self.center;
        out.extend(
            box_grid([c[0] - r, c[1] - r], [c[0] + r, c[1] + r], spacing)
                .into_iter()
                .filter(|p| self.signed_distance(*p) < 0.0),
        );
        out
    }
}

/// Finite point cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Points(pub Vec<[f64; 2]>);

impl Shape for Points {
    fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn signed_distance(&self, p: [f64; 2]) -> f64 {
        self.distance(p)
    }

    fn contains(&self, _p: [f64; 2]) -> bool {
        false
    }

    fn distance(&self, p: [f64; 2]) -> f64 {
        self.0
            .iter()
            .map(|q| ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    fn samples(&self, _spacing: f64) -> Vec<[f64; 2]> {
        self.0.clone()
    }

    fn bounds(&self) -> Option<([f64; 2], [f64; 2])> {
        if self.0.is_empty() {
            return None;
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.0 {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        Some((lo, hi))
    }
}

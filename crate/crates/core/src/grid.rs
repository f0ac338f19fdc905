//! Cell-aligned grids and sampled fields.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signed permutation taking local lattice coordinates to physical ones.
///
/// Front computations in oblique lattice directions run in a local frame
/// whose first axis is the dominant component of the direction; every other
/// consumer uses the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub swap: bool,
    pub sign: [i8; 2],
}

impl Default for Frame {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Frame {
    pub const IDENTITY: Frame = Frame {
        swap: false,
        sign: [1, 1],
    };

    /// Physical integer coordinates of a local lattice point.
    #[inline]
    pub fn to_physical_int(&self, l: [i64; 2]) -> [i64; 2] {
        let (a, b) = if self.swap { (l[1], l[0]) } else { (l[0], l[1]) };
        [a * self.sign[0] as i64, b * self.sign[1] as i64]
    }

    #[inline]
    pub fn to_physical(&self, l: [f64; 2]) -> [f64; 2] {
        let (a, b) = if self.swap { (l[1], l[0]) } else { (l[0], l[1]) };
        [a * self.sign[0] as f64, b * self.sign[1] as f64]
    }

    #[inline]
    pub fn to_local(&self, p: [f64; 2]) -> [f64; 2] {
        let a = p[0] * self.sign[0] as f64;
        let b = p[1] * self.sign[1] as f64;
        if self.swap {
            [b, a]
        } else {
            [a, b]
        }
    }

    /// Local representation `(a11, a22, a12)` of a physical symmetric matrix.
    pub fn matrix_to_local(&self, a: [f64; 3]) -> [f64; 3] {
        let s = (self.sign[0] * self.sign[1]) as f64;
        if self.swap {
            [a[1], a[0], a[2] * s]
        } else {
            [a[0], a[1], a[2] * s]
        }
    }

    /// Frame whose local `x` axis carries the dominant component of `d`,
    /// with `d` mapped to `(p, q)`, `p >= |q|`, `p > 0`.
    pub fn dominant(d: [i64; 2]) -> Frame {
        let swap = d[1].abs() > d[0].abs();
        let (major, _) = if swap { (d[1], d[0]) } else { (d[0], d[1]) };
        let s0 = if major < 0 { -1 } else { 1 };
        // physical = F local; choose local first axis sign so that local p > 0.
        if swap {
            Frame {
                swap,
                sign: [1, s0],
            }
        } else {
            Frame {
                swap,
                sign: [s0, 1],
            }
        }
    }
}

/// Boundary treatment along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AxisBoundary {
    /// Zero normal flux.
    Neumann,
    /// Fixed ghost values beyond the low and high ends.
    Dirichlet { low: f64, high: f64 },
    Periodic,
    /// `y`-wrap that shifts by `shift` nodes along `x` (oblique periodicity).
    Helical { shift: i64 },
}

/// Uniform lattice grid with spacing `h = 1 / M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub n: [usize; 2],
    pub h: f64,
    /// Lattice coordinates (in units of `h`) of node `(0, 0)`.
    pub offset: [i64; 2],
    pub frame: Frame,
    pub boundary: [AxisBoundary; 2],
}

/// What sits across a grid face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nbr {
    Node(usize),
    Fixed(f64),
    Reflect,
}

impl Grid {
    /// Box `[-L, L]^N` with spacing `1 / resolution`.
    pub fn centered(dim: usize, half_width: f64, resolution: usize, boundary: AxisBoundary) -> Result<Grid> {
        if dim != 1 && dim != 2 {
            return Err(Error::Domain(format!("dimension {dim} not supported")));
        }
        let cells = half_width * resolution as f64;
        if (cells - cells.round()).abs() > 1e-9 || cells < 1.0 {
            return Err(Error::Domain(format!(
                "half width {half_width} is not a positive multiple of h = 1/{resolution}"
            )));
        }
        let k = cells.round() as i64;
        let nn = (2 * k + 1) as usize;
        Ok(Grid {
            dim,
            n: [nn, if dim == 2 { nn } else { 1 }],
            h: 1.0 / resolution as f64,
            offset: [-k, if dim == 2 { -k } else { 0 }],
            frame: Frame::IDENTITY,
            boundary: [boundary, if dim == 2 { boundary } else { AxisBoundary::Neumann }],
        })
    }

    /// Rectangle `[x0, x1] x [y0, y1]` (corners must be lattice points).
    pub fn rect(lo: [f64; 2], hi: [f64; 2], resolution: usize, boundary: [AxisBoundary; 2]) -> Result<Grid> {
        let m = resolution as f64;
        let lat = |v: f64| -> Result<i64> {
            let c = v * m;
            if (c - c.round()).abs() > 1e-9 {
                return Err(Error::Domain(format!("{v} is not a multiple of h = 1/{resolution}")));
            }
            Ok(c.round() as i64)
        };
        let (i0, i1, j0, j1) = (lat(lo[0])?, lat(hi[0])?, lat(lo[1])?, lat(hi[1])?);
        if i1 <= i0 || j1 < j0 {
            return Err(Error::Domain("empty rectangle".into()));
        }
        let dim = if j1 == j0 { 1 } else { 2 };
        Ok(Grid {
            dim,
            n: [(i1 - i0 + 1) as usize, (j1 - j0 + 1) as usize],
            h: 1.0 / m,
            offset: [i0, j0],
            frame: Frame::IDENTITY,
            boundary,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cells per unit length.
    pub fn resolution(&self) -> usize {
        (1.0 / self.h).round() as usize
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n[0] + i
    }

    #[inline]
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.n[0], idx / self.n[0])
    }

    /// Local lattice coordinates of a node.
    #[inline]
    pub fn lattice(&self, idx: usize) -> [i64; 2] {
        let (i, j) = self.ij(idx);
        [self.offset[0] + i as i64, self.offset[1] + j as i64]
    }

    /// Physical lattice coordinates of a node.
    #[inline]
    pub fn physical_lattice(&self, idx: usize) -> [i64; 2] {
        self.frame.to_physical_int(self.lattice(idx))
    }

    /// Physical position of a node.
    #[inline]
    pub fn position(&self, idx: usize) -> [f64; 2] {
        let l = self.lattice(idx);
        self.frame.to_physical([l[0] as f64 * self.h, l[1] as f64 * self.h])
    }

    /// Physical bounding box `(lo, hi)`.
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let a = self.position(0);
        let b = self.position(self.len() - 1);
        (
            [a[0].min(b[0]), a[1].min(b[1])],
            [a[0].max(b[0]), a[1].max(b[1])],
        )
    }

    /// Neighbor across face `dir` (0: -x, 1: +x, 2: -y, 3: +y).
    pub fn neighbor(&self, idx: usize, dir: usize) -> Nbr {
        let (i, j) = self.ij(idx);
        let (nx, ny) = (self.n[0], self.n[1]);
        match dir {
            0 | 1 => {
                let up = dir == 1;
                let at_edge = if up { i + 1 == nx } else { i == 0 };
                if !at_edge {
                    let ii = if up { i + 1 } else { i - 1 };
                    return Nbr::Node(self.index(ii, j));
                }
                match self.boundary[0] {
                    AxisBoundary::Neumann => Nbr::Reflect,
                    AxisBoundary::Dirichlet { low, high } => Nbr::Fixed(if up { high } else { low }),
                    AxisBoundary::Periodic | AxisBoundary::Helical { .. } => {
                        Nbr::Node(self.index(if up { 0 } else { nx - 1 }, j))
                    }
                }
            }
            _ => {
                if self.dim == 1 {
                    return Nbr::Reflect;
                }
                let up = dir == 3;
                let at_edge = if up { j + 1 == ny } else { j == 0 };
                if !at_edge {
                    let jj = if up { j + 1 } else { j - 1 };
                    return Nbr::Node(self.index(i, jj));
                }
                match self.boundary[1] {
                    AxisBoundary::Neumann => Nbr::Reflect,
                    AxisBoundary::Dirichlet { low, high } => Nbr::Fixed(if up { high } else { low }),
                    AxisBoundary::Periodic => Nbr::Node(self.index(i, if up { 0 } else { ny - 1 })),
                    AxisBoundary::Helical { shift } => {
                        let ii = i as i64 + if up { shift } else { -shift };
                        let jj = if up { 0 } else { ny - 1 };
                        if ii < 0 || ii >= nx as i64 {
                            match self.boundary[0] {
                                AxisBoundary::Dirichlet { low, high } => {
                                    Nbr::Fixed(if ii < 0 { low } else { high })
                                }
                                _ => Nbr::Node(self.index(ii.clamp(0, nx as i64 - 1) as usize, jj)),
                            }
                        } else {
                            Nbr::Node(self.index(ii as usize, jj))
                        }
                    }
                }
            }
        }
    }

    /// True when every axis admits line-by-line tridiagonal solves.
    pub fn is_line_separable(&self) -> bool {
        !matches!(self.boundary[1], AxisBoundary::Helical { .. }) || self.dim == 1
    }

    /// Checks that the grid spacing matches a medium resolution.
    pub fn check_aligned(&self, resolution: usize) -> Result<()> {
        if (self.h * resolution as f64 - 1.0).abs() > 1e-12 {
            return Err(Error::Structural(format!(
                "grid spacing {} does not match medium resolution 1/{resolution}",
                self.h
            )));
        }
        Ok(())
    }
}

/// Scalar field on a grid at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub t: f64,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<f64>, t: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Structural(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values, t })
    }

    pub fn constant(grid: Grid, v: f64) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![v; n],
            t: 0.0,
        }
    }

    /// Samples `u0(x)` at the physical node positions.
    pub fn from_fn<F: Fn([f64; 2]) -> f64>(grid: Grid, u0: F) -> Self {
        let values = (0..grid.len()).map(|k| u0(grid.position(k))).collect();
        Self {
            grid,
            values,
            t: 0.0,
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Bilinear interpolation at a physical point; `None` outside the grid.
    pub fn sample(&self, p: [f64; 2]) -> Option<f64> {
        let g = &self.grid;
        let l = g.frame.to_local(p);
        let fx = l[0] / g.h - g.offset[0] as f64;
        let fy = if g.dim == 2 { l[1] / g.h - g.offset[1] as f64 } else { 0.0 };
        let eps = 1e-9;
        if fx < -eps || fx > (g.n[0] - 1) as f64 + eps {
            return None;
        }
        if g.dim == 2 && (fy < -eps || fy > (g.n[1] - 1) as f64 + eps) {
            return None;
        }
        let i = (fx.floor().max(0.0) as usize).min(g.n[0].saturating_sub(2));
        let wx = (fx - i as f64).clamp(0.0, 1.0);
        if g.dim == 1 || g.n[1] == 1 {
            let a = self.values[i];
            let b = self.values[(i + 1).min(g.n[0] - 1)];
            return Some(a + wx * (b - a));
        }
        let j = (fy.floor().max(0.0) as usize).min(g.n[1] - 2);
        let wy = (fy - j as f64).clamp(0.0, 1.0);
        let v00 = self.values[g.index(i, j)];
        let v10 = self.values[g.index(i + 1, j)];
        let v01 = self.values[g.index(i, j + 1)];
        let v11 = self.values[g.index(i + 1, j + 1)];
        Some(
            v00 * (1.0 - wx) * (1.0 - wy)
                + v10 * wx * (1.0 - wy)
                + v01 * (1.0 - wx) * wy
                + v11 * wx * wy,
        )
    }

    /// Writes the snapshot as CSV: a `#` header with `t, L, h, N` and grid
    /// metadata, then one `x,y,u` row per node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let g = &self.grid;
        let (lo, hi) = g.bounds();
        let half = 0.5 * (hi[0] - lo[0]);
        writeln!(
            w,
            "# t={:?} L={:?} h={:?} N={} nx={} ny={} i0={} j0={}",
            self.t, half, g.h, g.dim, g.n[0], g.n[1], g.offset[0], g.offset[1]
        )?;
        writeln!(w, "x,y,u")?;
        for k in 0..g.len() {
            let p = g.position(k);
            writeln!(w, "{:?},{:?},{:?}", p[0], p[1], self.values[k])?;
        }
        Ok(())
    }

    /// Reads a snapshot written by [`GridField::write_csv`] (identity frame,
    /// Neumann boundaries).
    pub fn read_csv<R: BufRead>(r: R) -> Result<GridField> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Io("empty snapshot".into()))??;
        let mut meta = std::collections::HashMap::new();
        for tok in header.trim_start_matches('#').split_whitespace() {
            if let Some((k, v)) = tok.split_once('=') {
                meta.insert(k.to_string(), v.to_string());
            }
        }
        let get = |k: &str| -> Result<String> {
            meta.get(k)
                .cloned()
                .ok_or_else(|| Error::Io(format!("snapshot header lacks {k}")))
        };
        let parse_err = |k: &str| Error::Io(format!("bad value for {k}"));
        let t: f64 = get("t")?.parse().map_err(|_| parse_err("t"))?;
        let h: f64 = get("h")?.parse().map_err(|_| parse_err("h"))?;
        let dim: usize = get("N")?.parse().map_err(|_| parse_err("N"))?;
        let nx: usize = get("nx")?.parse().map_err(|_| parse_err("nx"))?;
        let ny: usize = get("ny")?.parse().map_err(|_| parse_err("ny"))?;
        let i0: i64 = get("i0")?.parse().map_err(|_| parse_err("i0"))?;
        let j0: i64 = get("j0")?.parse().map_err(|_| parse_err("j0"))?;
        let _ = lines.next();
        let mut values = Vec::with_capacity(nx * ny);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let u = line
                .rsplit(',')
                .next()
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Io(format!("bad snapshot row: {line}")))?;
            values.push(u);
        }
        let grid = Grid {
            dim,
            n: [nx, ny],
            h,
            offset: [i0, j0],
            frame: Frame::IDENTITY,
            boundary: [AxisBoundary::Neumann; 2],
        };
        GridField::new(grid, values, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_grid_layout() {
        let g = Grid::centered(2, 2.0, 4, AxisBoundary::Neumann).unwrap();
        assert_eq!(g.n, [17, 17]);
        assert_eq!(g.position(0), [-2.0, -2.0]);
        assert_eq!(g.position(g.len() - 1), [2.0, 2.0]);
        assert!(Grid::centered(2, 2.1, 4, AxisBoundary::Neumann).is_err());
    }

    #[test]
    fn helical_wrap_shifts_columns() {
        let g = Grid {
            dim: 2,
            n: [10, 4],
            h: 0.5,
            offset: [0, 0],
            frame: Frame::IDENTITY,
            boundary: [
                AxisBoundary::Dirichlet { low: 1.0, high: 0.0 },
                AxisBoundary::Helical { shift: 2 },
            ],
        };
        assert_eq!(g.neighbor(g.index(3, 3), 3), Nbr::Node(g.index(5, 0)));
        assert_eq!(g.neighbor(g.index(3, 0), 2), Nbr::Node(g.index(1, 3)));
        assert_eq!(g.neighbor(g.index(9, 3), 3), Nbr::Fixed(0.0));
        assert_eq!(g.neighbor(g.index(0, 0), 2), Nbr::Fixed(1.0));
    }

    #[test]
    fn dominant_frame_maps_direction_to_first_octant() {
        for d in [[1, 0], [0, 1], [-1, 0], [0, -1], [2, 1], [-1, 2], [-3, -1], [1, -2]] {
            let f = Frame::dominant(d);
            let l = f.to_local([d[0] as f64, d[1] as f64]);
            assert!(l[0] > 0.0 && l[0] >= l[1].abs(), "{d:?} -> {l:?}");
            let back = f.to_physical(l);
            assert_eq!(back, [d[0] as f64, d[1] as f64]);
        }
    }

    #[test]
    fn bilinear_sampling_reproduces_linear_functions() {
        let g = Grid::centered(2, 3.0, 2, AxisBoundary::Neumann).unwrap();
        let f = GridField::from_fn(g, |p| 2.0 * p[0] - p[1] + 0.5);
        for p in [[0.1, 0.2], [-2.9, 1.7], [2.5, -2.25]] {
            let v = f.sample(p).unwrap();
            assert!((v - (2.0 * p[0] - p[1] + 0.5)).abs() < 1e-12);
        }
        assert!(f.sample([3.5, 0.0]).is_none());
    }

    #[test]
    fn csv_round_trip() {
        let g = Grid::centered(2, 1.0, 2, AxisBoundary::Neumann).unwrap();
        let mut f = GridField::from_fn(g, |p| (p[0] * 0.3 + p[1]).sin().abs());
        f.t = 1.25;
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let back = GridField::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back.values, f.values);
        assert_eq!(back.t, f.t);
        assert_eq!(back.grid.n, f.grid.n);
        assert_eq!(back.grid.offset, f.grid.offset);
    }
}

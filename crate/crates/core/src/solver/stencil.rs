use crate::error::{Error, Result};
use crate::grid::{Grid, Nbr};
use crate::medium::PeriodicMedium;

/// Discrete `div(A grad u) + q . grad u` on a grid, in difference form
/// `(L u)_i = sum_d w_id (u_d - u_i)`.
///
/// Diagonal diffusion uses arithmetic face averages of `A`; drift uses face
/// velocities with upwinding against `q`, which reduces to the flux form when
/// the face velocities are discretely divergence-free. Off-diagonal diffusion
/// adds a centered nine-point correction that is not monotone.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub(crate) nbr: Vec<[Nbr; 4]>,
    pub(crate) diff: Vec<[f64; 4]>,
    pub(crate) adv: Vec<[f64; 4]>,
    pub(crate) cross: Option<Vec<[(Nbr, f64); 8]>>,
    pub(crate) sample: Vec<usize>,
    pub(crate) h: f64,
}

/// Local lattice offsets of the eight cross-diffusion entries, in order.
pub(crate) const CROSS_OFFSETS: [[i64; 2]; 8] = [
    [1, 1],
    [-1, 1],
    [1, -1],
    [-1, -1],
    [0, 1],
    [0, -1],
    [1, 0],
    [-1, 0],
];

/// Local lattice offsets of the four face neighbors.
pub(crate) const FACE_OFFSETS: [[i64; 2]; 4] = [[-1, 0], [1, 0], [0, -1], [0, 1]];

/// Local-frame `(axx, ayy, axy, qx, qy)` at local lattice coordinates.
fn local_coef(grid: &Grid, m: &PeriodicMedium, l: [i64; 2]) -> [f64; 5] {
    let p = grid.frame.to_physical_int(l);
    let k = m.wrap_index(p[0], p[1]);
    let a = grid.frame.matrix_to_local(m.diffusion_at(k));
    let q = m.advection_at(k);
    let ql = grid.frame.to_local(q);
    [a[0], a[1], a[2], ql[0], ql[1]]
}

impl Stencil {
    pub fn build(grid: &Grid, m: &PeriodicMedium) -> Result<Stencil> {
        if grid.dim != m.dim() {
            return Err(Error::Structural(format!(
                "grid dimension {} differs from medium dimension {}",
                grid.dim,
                m.dim()
            )));
        }
        grid.check_aligned(m.resolution())?;
        let h = grid.h;
        let h2 = h * h;
        let n = grid.len();
        let mut nbr = Vec::with_capacity(n);
        let mut diff = Vec::with_capacity(n);
        let mut adv = Vec::with_capacity(n);
        let mut sample = Vec::with_capacity(n);
        let axes = if grid.dim == 2 { 2 } else { 1 };
        for idx in 0..n {
            let l = grid.lattice(idx);
            let here = local_coef(grid, m, l);
            let p = grid.frame.to_physical_int(l);
            sample.push(m.wrap_index(p[0], p[1]));
            let mut nb = [Nbr::Reflect; 4];
            let mut dw = [0.0; 4];
            let mut aw = [0.0; 4];
            for axis in 0..axes {
                for side in 0..2 {
                    let dir = 2 * axis + side;
                    nb[dir] = grid.neighbor(idx, dir);
                    let mut lo = l;
                    lo[axis] += if side == 1 { 1 } else { -1 };
                    let there = local_coef(grid, m, lo);
                    let a_face = 0.5 * (here[axis] + there[axis]);
                    let q_face = 0.5 * (here[3 + axis] + there[3 + axis]);
                    dw[dir] = a_face / h2;
                    aw[dir] = if side == 1 {
                        q_face.max(0.0) / h
                    } else {
                        -q_face.min(0.0) / h
                    };
                }
            }
            nbr.push(nb);
            diff.push(dw);
            adv.push(aw);
        }

        let cross = if m.has_cross_diffusion() {
            let mut out = Vec::with_capacity(n);
            for idx in 0..n {
                let l = grid.lattice(idx);
                let axy = |d: [i64; 2]| local_coef(grid, m, [l[0] + d[0], l[1] + d[1]])[2];
                let c = axy([0, 0]);
                let dx_axy = (axy([1, 0]) - axy([-1, 0])) / (2.0 * h);
                let dy_axy = (axy([0, 1]) - axy([0, -1])) / (2.0 * h);
                let nb = nbr[idx];
                let diag = |xd: usize, yd: usize| -> Nbr {
                    match nb[xd] {
                        Nbr::Node(k) => match grid.neighbor(k, yd) {
                            Nbr::Reflect => Nbr::Node(k),
                            other => other,
                        },
                        Nbr::Fixed(v) => Nbr::Fixed(v),
                        Nbr::Reflect => nb[yd],
                    }
                };
                let w = c / (2.0 * h2);
                out.push([
                    (diag(1, 3), w),
                    (diag(0, 3), -w),
                    (diag(1, 2), -w),
                    (diag(0, 2), w),
                    (nb[3], dx_axy / (2.0 * h)),
                    (nb[2], -dx_axy / (2.0 * h)),
                    (nb[1], dy_axy / (2.0 * h)),
                    (nb[0], -dy_axy / (2.0 * h)),
                ]);
            }
            Some(out)
        } else {
            None
        };

        Ok(Stencil {
            nbr,
            diff,
            adv,
            cross,
            sample,
            h,
        })
    }

    pub fn len(&self) -> usize {
        self.nbr.len()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn is_empty(&self) -> bool {
        self.nbr.is_empty()
    }

    #[inline]
    fn value(u: &[f64], nb: Nbr, own: f64) -> f64 {
        match nb {
            Nbr::Node(k) => u[k],
            Nbr::Fixed(v) => v,
            Nbr::Reflect => own,
        }
    }

    /// Diffusion part with fixed boundary values replaced by zero (the
    /// linear part of the affine map).
    #[inline]
    pub(crate) fn diffusion_linear_at(&self, u: &[f64], i: usize) -> f64 {
        let ui = u[i];
        let nb = &self.nbr[i];
        let w = &self.diff[i];
        (0..4)
            .map(|d| {
                let v = match nb[d] {
                    Nbr::Node(k) => u[k],
                    Nbr::Fixed(_) => 0.0,
                    Nbr::Reflect => ui,
                };
                w[d] * (v - ui)
            })
            .sum()
    }

    /// Diffusion part at one node.
    #[inline]
    pub fn diffusion_at(&self, u: &[f64], i: usize) -> f64 {
        let ui = u[i];
        let nb = &self.nbr[i];
        let w = &self.diff[i];
        (0..4).map(|d| w[d] * (Self::value(u, nb[d], ui) - ui)).sum()
    }

    /// Drift and cross-diffusion parts at one node (the explicit part).
    #[inline]
    pub fn explicit_at(&self, u: &[f64], i: usize) -> f64 {
        let ui = u[i];
        let nb = &self.nbr[i];
        let w = &self.adv[i];
        let mut s: f64 = (0..4).map(|d| w[d] * (Self::value(u, nb[d], ui) - ui)).sum();
        if let Some(cross) = &self.cross {
            for &(nbd, wd) in &cross[i] {
                s += wd * (Self::value(u, nbd, ui) - ui);
            }
        }
        s
    }

    /// Full spatial operator at one node.
    #[inline]
    pub fn apply_at(&self, u: &[f64], i: usize) -> f64 {
        self.diffusion_at(u, i) + self.explicit_at(u, i)
    }

    /// Largest `sum_d adv_d` (the explicit drift rate).
    pub fn max_drift_rate(&self) -> f64 {
        self.adv
            .iter()
            .map(|w| w.iter().sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_cross_weight(&self) -> f64 {
        self.cross
            .as_ref()
            .map(|c| {
                c.iter()
                    .map(|row| row.iter().map(|(_, w)| w.abs()).sum::<f64>())
                    .fold(0.0, f64::max)
            })
            .unwrap_or(0.0)
    }
}

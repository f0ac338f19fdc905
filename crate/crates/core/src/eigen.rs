//! Principal eigenvalue of the exponentially twisted cell operator
//! `phi -> e^{lambda x.e} L (e^{-lambda x.e} phi)` on periodic functions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AxisBoundary, Grid, Nbr};
use crate::medium::PeriodicMedium;
use crate::solver::stencil::{CROSS_OFFSETS, FACE_OFFSETS};
use crate::solver::Stencil;

pub const TOL_EIG: f64 = 1e-10;
pub const MAX_ITER: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub direction: [f64; 2],
    pub lambda: f64,
    pub k: f64,
    /// Eigenfunction on the cell nodes, row-major, `max = 1`.
    pub phi: Vec<f64>,
    pub resolution: usize,
    pub iterations: usize,
    pub residual: f64,
}

fn cell_grid(m: &PeriodicMedium) -> Result<Grid> {
    let r = m.resolution();
    if r < 3 {
        return Err(Error::Domain("cell operator needs resolution >= 3".into()));
    }
    let hi = (r - 1) as f64 / r as f64;
    let y = if m.dim() == 2 { hi } else { 0.0 };
    Grid::rect([0.0, 0.0], [hi, y], r, [AxisBoundary::Periodic; 2])
}

fn check_direction(e: [f64; 2], dim: usize) -> Result<()> {
    let n = (e[0] * e[0] + e[1] * e[1]).sqrt();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("direction has norm {n}, expected 1")));
    }
    if dim == 1 && e[1] != 0.0 {
        return Err(Error::Domain("1D media only admit e = (+-1, 0)".into()));
    }
    Ok(())
}

/// Dense matrix of the discrete twisted operator on the cell.
pub fn twisted_matrix(m: &PeriodicMedium, e: [f64; 2], lambda: f64) -> Result<DMatrix<f64>> {
    check_direction(e, m.dim())?;
    let grid = cell_grid(m)?;
    let st = Stencil::build(&grid, m)?;
    let h = grid.h;
    let n = grid.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut add = |i: usize, nb: Nbr, w: f64, off: [i64; 2]| {
        if let Nbr::Node(k) = nb {
            let d = (off[0] as f64 * e[0] + off[1] as f64 * e[1]) * h;
            a[(i, k)] += w * (-lambda * d).exp();
            a[(i, i)] -= w;
        }
    };
    for i in 0..n {
        for d in 0..4 {
            add(i, st.nbr[i][d], st.diff[i][d] + st.adv[i][d], FACE_OFFSETS[d]);
        }
        if let Some(cross) = &st.cross {
            for (c, &(nb, w)) in cross[i].iter().enumerate() {
                add(i, nb, w, CROSS_OFFSETS[c]);
            }
        }
    }
    Ok(a)
}

fn residual_of(a: &DMatrix<f64>, phi: &[f64], k: f64) -> f64 {
    let n = phi.len();
    (0..n)
        .map(|i| {
            let lphi: f64 = (0..n).map(|j| a[(i, j)] * phi[j]).sum();
            (lphi - k * phi[i]).abs()
        })
        .fold(0.0, f64::max)
}

/// Shifted inverse power iteration for the eigenvalue of largest real part.
pub fn principal_eigenvalue(m: &PeriodicMedium, e: [f64; 2], lambda: f64) -> Result<EigenPair> {
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!("lambda = {lambda} must be >= 0")));
    }
    let a = twisted_matrix(m, e, lambda)?;
    let n = a.nrows();
    let sigma = (0..n)
        .map(|i| a[(i, i)] + (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
        + 1.0;
    let b = DMatrix::<f64>::identity(n, n) * sigma - &a;
    let lu = b.lu();
    let mut phi = nalgebra::DVector::<f64>::from_element(n, 1.0);
    let mut spread = f64::INFINITY;
    for it in 1..=MAX_ITER {
        let next = lu
            .solve(&phi)
            .ok_or_else(|| Error::Domain("shifted cell operator is singular".into()))?;
        let top = next.max();
        let next = next / top;
        // Collatz-Wielandt bounds on sigma - k
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let r = phi[i] / next[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        phi = next;
        let k_lo = sigma - hi / top;
        let k_hi = sigma - lo / top;
        let k = 0.5 * (k_lo + k_hi);
        spread = (k_hi - k_lo).abs();
        if spread <= 0.1 * TOL_EIG && it > 1 {
            let phi_v: Vec<f64> = phi.iter().copied().collect();
            let residual = residual_of(&a, &phi_v, k);
            if phi_v.iter().any(|&v| v <= 0.0) {
                return Err(Error::EigenNoConvergence { iterations: it, residual });
            }
            return Ok(EigenPair {
                direction: e,
                lambda,
                k,
                phi: phi_v,
                resolution: m.resolution(),
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::EigenNoConvergence {
        iterations: MAX_ITER,
        residual: spread,
    })
}

/// Sup-norm residual `|L_lambda phi - k phi|` of a pair against a medium.
pub fn eigenfunction_residual(pair: &EigenPair, m: &PeriodicMedium) -> Result<f64> {
    if pair.resolution != m.resolution() {
        return Err(Error::Structural("pair and medium resolutions differ".into()));
    }
    let a = twisted_matrix(m, pair.direction, pair.lambda)?;
    if a.nrows() != pair.phi.len() {
        return Err(Error::Structural("eigenfunction length does not match the cell".into()));
    }
    Ok(residual_of(&a, &pair.phi, pair.k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeRow {
    pub lambda: f64,
    pub k: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub rows: Vec<SlopeRow>,
    pub decreasing: bool,
    pub final_ratio: f64,
    pub passed: bool,
}

/// Table of `|k_e(lambda)| / lambda` along a decreasing sequence.
pub fn slope_check(m: &PeriodicMedium, e: [f64; 2], lambdas: &[f64], slope_tol: f64) -> Result<SlopeReport> {
    if lambdas.is_empty() {
        return Err(Error::Domain("empty lambda sequence".into()));
    }
    if lambdas.iter().any(|&l| !(l > 0.0)) || lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("lambda sequence must be positive and decreasing".into()));
    }
    let mut rows = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let p = principal_eigenvalue(m, e, l)?;
        rows.push(SlopeRow {
            lambda: l,
            k: p.k,
            ratio: p.k.abs() / l,
        });
    }
    let decreasing = rows.windows(2).all(|w| w[1].ratio < w[0].ratio);
    let final_ratio = rows.last().unwrap().ratio;
    Ok(SlopeReport {
        passed: decreasing && final_ratio <= slope_tol,
        rows,
        decreasing,
        final_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridField;
    use crate::medium::{AdvectionSpec, DiffusionSpec, MediumBuilder, ReactionSpec};
    use crate::solver::apply_operator;

    fn medium(d: DiffusionSpec, q: AdvectionSpec, r: usize) -> PeriodicMedium {
        MediumBuilder::new(2, r, ReactionSpec::Bistable { alpha: 0.25 })
            .diffusion(d)
            .advection(q)
            .build()
            .unwrap()
    }

    #[test]
    fn laplacian_closed_form() {
        let m = medium(DiffusionSpec::Identity, AdvectionSpec::None, 16);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = principal_eigenvalue(&m, [s, s], 0.3).unwrap();
        // discrete symbol of the twisted Laplacian
        let h = 1.0 / 16.0;
        let exact: f64 = 2.0 * ((2.0 * (0.3 * s * h).cosh() - 2.0) / (h * h));
        assert!((p.k - exact).abs() < 1e-9, "{} {}", p.k, exact);
        assert!((p.k - 0.09).abs() < 1e-4);
        assert!(p.phi.iter().all(|v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn anisotropic_closed_form() {
        let m = medium(
            DiffusionSpec::Constant { a11: 1.0, a22: 4.0, a12: 0.0 },
            AdvectionSpec::None,
            16,
        );
        let p = principal_eigenvalue(&m, [0.0, 1.0], 0.2).unwrap();
        assert!((p.k - 0.16).abs() < 1e-4, "{}", p.k);
    }

    #[test]
    fn zero_lambda_gives_zero() {
        let m = medium(DiffusionSpec::Oscillating { amp: 0.3 }, AdvectionSpec::Cellular { amp: 1.0 }, 12);
        let p = principal_eigenvalue(&m, [0.6, 0.8], 0.0).unwrap();
        assert!(p.k.abs() <= 1e-10, "{}", p.k);
        assert!(p.phi.iter().all(|v| (v - 1.0).abs() < 1e-8));
        assert!(p.residual <= TOL_EIG);
    }

    #[test]
    fn shear_ratios_shrink() {
        let m = medium(DiffusionSpec::Identity, AdvectionSpec::Shear { amp: 1.0 }, 16);
        let r = slope_check(&m, [1.0, 0.0], &[0.2, 0.1, 0.05], 0.1).unwrap();
        assert!(r.decreasing, "{r:?}");
        assert!(r.rows[2].ratio <= 0.5 * r.rows[0].ratio);
        assert!(r.passed);
    }

    #[test]
    fn identity_ratios_equal_lambda() {
        let m = medium(DiffusionSpec::Identity, AdvectionSpec::None, 16);
        let r = slope_check(&m, [1.0, 0.0], &[0.4, 0.2, 0.1], 0.2).unwrap();
        for row in &r.rows {
            assert!((row.ratio - row.lambda).abs() < 1e-3 * row.lambda);
        }
        assert!(slope_check(&m, [1.0, 0.0], &[], 0.1).is_err());
        assert!(slope_check(&m, [1.0, 0.0], &[0.1, 0.2], 0.1).is_err());
    }

    #[test]
    fn residual_is_linear_in_perturbation() {
        let m = medium(DiffusionSpec::Identity, AdvectionSpec::None, 8);
        let mut p = principal_eigenvalue(&m, [1.0, 0.0], 0.0).unwrap();
        assert!(eigenfunction_residual(&p, &m).unwrap() <= 1e-12);
        p.phi[5] += 1e-3;
        let r1 = eigenfunction_residual(&p, &m).unwrap();
        p.phi[5] += 1e-3;
        let r2 = eigenfunction_residual(&p, &m).unwrap();
        assert!((r2 / r1 - 2.0).abs() < 1e-6);
    }

    #[test]
    fn positive_eigenfunction_on_cellular_flow() {
        let m = medium(DiffusionSpec::Oscillating { amp: 0.2 }, AdvectionSpec::Cellular { amp: 2.0 }, 12);
        let p = principal_eigenvalue(&m, [0.6, 0.8], 0.5).unwrap();
        assert!(p.phi.iter().all(|&v| v > 0.0));
        assert!((p.phi.iter().cloned().fold(0.0, f64::max) - 1.0).abs() < 1e-15);
        assert!(p.residual <= TOL_EIG, "{}", p.residual);
    }

    #[test]
    fn twisted_operator_matches_conjugation() {
        // e^{lx.e} L(e^{-lx.e} phi) evaluated with the untwisted operator on a larger box
        let r = 8;
        let m = medium(DiffusionSpec::Oscillating { amp: 0.3 }, AdvectionSpec::Cellular { amp: 1.0 }, r);
        let e = [0.6, 0.8];
        let lam = 0.7;
        let a = twisted_matrix(&m, e, lam).unwrap();
        let phi: Vec<f64> = (0..r * r).map(|i| 1.0 + 0.3 * ((i * 7919) % 13) as f64 / 13.0).collect();
        let g = Grid::rect([-2.0, -2.0], [2.0, 2.0], r, [AxisBoundary::Neumann; 2]).unwrap();
        let v = GridField::from_fn(g.clone(), |p| {
            let i = ((p[0] * r as f64).round() as i64).rem_euclid(r as i64) as usize;
            let j = ((p[1] * r as f64).round() as i64).rem_euclid(r as i64) as usize;
            (-lam * (p[0] * e[0] + p[1] * e[1])).exp() * phi[j * r + i]
        });
        let lv = apply_operator(&m, &v).unwrap();
        for k in 0..g.len() {
            let (gi, gj) = g.ij(k);
            if gi < 2 || gj < 2 || gi + 2 >= g.n[0] || gj + 2 >= g.n[1] {
                continue;
            }
            let p = g.position(k);
            let i = ((p[0] * r as f64).round() as i64).rem_euclid(r as i64) as usize;
            let j = ((p[1] * r as f64).round() as i64).rem_euclid(r as i64) as usize;
            let row = j * r + i;
            let twisted: f64 = (0..r * r).map(|c| a[(row, c)] * phi[c]).sum();
            let direct = (lam * (p[0] * e[0] + p[1] * e[1])).exp() * lv.values[k];
            assert!((twisted - direct).abs() < 1e-9 * (1.0 + direct.abs()), "{twisted} {direct}");
        }
    }
}

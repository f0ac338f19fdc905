//! Tridiagonal and conjugate-gradient solvers for the implicit diffusion stage.

use crate::error::{Error, Result};
use crate::par;

/// LU-factored tridiagonal system `a_i x_{i-1} + b_i x_i + c_i x_{i+1} = r_i`.
#[derive(Debug, Clone)]
pub struct Tridiag {
    a: Vec<f64>,
    c_prime: Vec<f64>,
    inv_denom: Vec<f64>,
}

impl Tridiag {
    pub fn new(a: &[f64], b: &[f64], c: &[f64]) -> Tridiag {
        let n = b.len();
        let mut c_prime = vec![0.0; n];
        let mut inv_denom = vec![0.0; n];
        let mut prev_c = 0.0;
        for i in 0..n {
            let ai = if i == 0 { 0.0 } else { a[i] };
            let d = b[i] - ai * prev_c;
            inv_denom[i] = 1.0 / d;
            c_prime[i] = if i + 1 < n { c[i] * inv_denom[i] } else { 0.0 };
            prev_c = c_prime[i];
        }
        Tridiag {
            a: a.to_vec(),
            c_prime,
            inv_denom,
        }
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        if n == 0 {
            return;
        }
        x[0] *= self.inv_denom[0];
        for i in 1..n {
            x[i] = (x[i] - self.a[i] * x[i - 1]) * self.inv_denom[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.c_prime[i] * x[i + 1];
        }
    }
}

/// Periodic tridiagonal system with corner entries, solved by Sherman-Morrison.
#[derive(Debug, Clone)]
pub struct CyclicTridiag {
    inner: Tridiag,
    z: Vec<f64>,
    beta: f64,
    gamma: f64,
    denom: f64,
}

impl CyclicTridiag {
    /// `alpha` couples row `n-1` to `x_0`, `beta` couples row `0` to `x_{n-1}`.
    pub fn new(a: &[f64], b: &[f64], c: &[f64], alpha: f64, beta: f64) -> CyclicTridiag {
        let n = b.len();
        assert!(n >= 3, "cyclic systems need at least 3 unknowns");
        let gamma = -b[0];
        let mut bb = b.to_vec();
        bb[0] = b[0] - gamma;
        bb[n - 1] = b[n - 1] - alpha * beta / gamma;
        let inner = Tridiag::new(a, &bb, c);
        let mut z = vec![0.0; n];
        z[0] = gamma;
        z[n - 1] = alpha;
        inner.solve_in_place(&mut z);
        let denom = 1.0 + z[0] + beta * z[n - 1] / gamma;
        CyclicTridiag {
            inner,
            z,
            beta,
            gamma,
            denom,
        }
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        self.inner.solve_in_place(x);
        let fact = (x[0] + self.beta * x[n - 1] / self.gamma) / self.denom;
        for (xi, zi) in x.iter_mut().zip(&self.z) {
            *xi -= fact * zi;
        }
    }
}

/// Either kind of line solver.
#[derive(Debug, Clone)]
pub enum LineSolver {
    Open(Tridiag),
    Cyclic(CyclicTridiag),
}

impl LineSolver {
    pub fn solve_in_place(&self, x: &mut [f64]) {
        match self {
            LineSolver::Open(t) => t.solve_in_place(x),
            LineSolver::Cyclic(t) => t.solve_in_place(x),
        }
    }
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// definite operator given as a closure `apply(x, out)`.
pub fn conjugate_gradient<F>(
    apply: F,
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<usize>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let b_norm = par::dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    par::for_each_indexed(&mut r, |i, ri| *ri = b[i] - *ri);
    let mut z: Vec<f64> = (0..n).map(|i| r[i] / diag[i]).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = par::dot(&r, &z);
    for it in 0..max_iter {
        let res = par::dot(&r, &r).sqrt() / b_norm;
        if res <= rel_tol {
            return Ok(it);
        }
        apply(&p, &mut ap);
        let alpha = rz / par::dot(&p, &ap);
        par::for_each_indexed(x, |i, xi| *xi += alpha * p[i]);
        par::for_each_indexed(&mut r, |i, ri| *ri -= alpha * ap[i]);
        par::for_each_indexed(&mut z, |i, zi| *zi = r[i] / diag[i]);
        let rz_new = par::dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        par::for_each_indexed(&mut p, |i, pi| *pi = z[i] + beta * *pi);
    }
    let res = par::dot(&r, &r).sqrt() / b_norm;
    if res <= rel_tol {
        Ok(max_iter)
    } else {
        Err(Error::LinearSolve {
            iterations: max_iter,
            residual: res,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve(m: &[Vec<f64>], r: &[f64]) -> Vec<f64> {
        let n = r.len();
        let a = nalgebra::DMatrix::from_fn(n, n, |i, j| m[i][j]);
        let b = nalgebra::DVector::from_column_slice(r);
        a.lu().solve(&b).unwrap().iter().copied().collect()
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let n = 7;
        let a: Vec<f64> = (0..n).map(|i| -0.3 - 0.01 * i as f64).collect();
        let b: Vec<f64> = (0..n).map(|i| 2.0 + 0.1 * i as f64).collect();
        let c: Vec<f64> = (0..n).map(|i| -0.5 + 0.02 * i as f64).collect();
        let r: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            dense[i][i] = b[i];
            if i > 0 {
                dense[i][i - 1] = a[i];
            }
            if i + 1 < n {
                dense[i][i + 1] = c[i];
            }
        }
        let want = dense_solve(&dense, &r);
        let mut x = r.clone();
        Tridiag::new(&a, &b, &c).solve_in_place(&mut x);
        for i in 0..n {
            assert!((x[i] - want[i]).abs() < 1e-13);
        }

        let (alpha, beta) = (-0.4, -0.25);
        dense[n - 1][0] = alpha;
        dense[0][n - 1] = beta;
        let want = dense_solve(&dense, &r);
        let mut x = r.clone();
        CyclicTridiag::new(&a, &b, &c, alpha, beta).solve_in_place(&mut x);
        for i in 0..n {
            assert!((x[i] - want[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn cg_solves_spd_system() {
        let n = 50;
        let apply = |x: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                out[i] = 3.0 * x[i] - l - r;
            }
        };
        let b: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.3).cos()).collect();
        let mut x = vec![0.0; n];
        let it = conjugate_gradient(apply, &vec![3.0; n], &b, &mut x, 1e-12, 500).unwrap();
        assert!(it > 0);
        let mut ax = vec![0.0; n];
        apply(&x, &mut ax);
        for i in 0..n {
            assert!((ax[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn cg_reports_non_convergence() {
        let n = 200;
        let apply = |x: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                out[i] = 2.0001 * x[i] - l - r;
            }
        };
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        let err = conjugate_gradient(apply, &vec![2.0; n], &b, &mut x, 1e-14, 3).unwrap_err();
        assert!(matches!(err, Error::LinearSolve { iterations: 3, .. }));
    }
}

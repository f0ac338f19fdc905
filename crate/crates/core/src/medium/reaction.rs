use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reaction term `f(x, s)` on `[0, 1]`.
///
/// Spatial dependence enters only through the threshold parameter, which the
/// medium samples once per cell node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReactionSpec {
    /// Cubic `s (1 - s) (s - alpha)`.
    Bistable { alpha: f64 },
    /// `(s - alpha)(1 - s)` above the threshold, zero below.
    Ignition { alpha: f64 },
    /// Fisher-KPP `s (1 - s)`.
    Kpp,
    /// Cubic bistable with `alpha(x) = alpha_mean + alpha_amp * sin(2 pi x_1)`.
    PeriodicBistable { alpha_mean: f64, alpha_amp: f64 },
    /// Piecewise-linear table on a uniform grid of `[0, 1]`.
    Table { values: Vec<f64> },
}

impl ReactionSpec {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |a: f64| a > 0.0 && a < 1.0;
        match self {
            ReactionSpec::Bistable { alpha } | ReactionSpec::Ignition { alpha } => {
                if !in_unit(*alpha) {
                    return Err(Error::Domain(format!("alpha = {alpha} not in (0, 1)")));
                }
            }
            ReactionSpec::Kpp => {}
            ReactionSpec::PeriodicBistable {
                alpha_mean,
                alpha_amp,
            } => {
                let lo = alpha_mean - alpha_amp.abs();
                let hi = alpha_mean + alpha_amp.abs();
                if !in_unit(lo) || !in_unit(hi) {
                    return Err(Error::Domain(format!(
                        "alpha(x) ranges over [{lo}, {hi}], not inside (0, 1)"
                    )));
                }
            }
            ReactionSpec::Table { values } => {
                if values.len() < 2 {
                    return Err(Error::Domain("reaction table needs at least 2 values".into()));
                }
                if values[0] != 0.0 || *values.last().unwrap() != 0.0 {
                    return Err(Error::Domain("reaction table must vanish at s = 0 and s = 1".into()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Domain("reaction table has non-finite entries".into()));
                }
            }
        }
        Ok(())
    }

    pub fn is_homogeneous(&self) -> bool {
        match self {
            ReactionSpec::PeriodicBistable { alpha_amp, .. } => *alpha_amp == 0.0,
            _ => true,
        }
    }

    /// Threshold parameter at position `x` (zero for kinds without one).
    pub fn alpha_at(&self, x: [f64; 2]) -> f64 {
        match self {
            ReactionSpec::Bistable { alpha } | ReactionSpec::Ignition { alpha } => *alpha,
            ReactionSpec::PeriodicBistable {
                alpha_mean,
                alpha_amp,
            } => alpha_mean + alpha_amp * (2.0 * std::f64::consts::PI * x[0]).sin(),
            ReactionSpec::Kpp | ReactionSpec::Table { .. } => 0.0,
        }
    }

    /// `f(s)` given the local threshold `alpha`.
    #[inline]
    pub fn eval(&self, alpha: f64, s: f64) -> f64 {
        match self {
            ReactionSpec::Bistable { .. } | ReactionSpec::PeriodicBistable { .. } => {
                s * (1.0 - s) * (s - alpha)
            }
            ReactionSpec::Ignition { .. } => {
                if s <= alpha {
                    0.0
                } else {
                    (s - alpha) * (1.0 - s)
                }
            }
            ReactionSpec::Kpp => s * (1.0 - s),
            ReactionSpec::Table { values } => table_eval(values, s),
        }
    }

    /// `d f / d s` given the local threshold `alpha`.
    #[inline]
    pub fn deriv(&self, alpha: f64, s: f64) -> f64 {
        match self {
            ReactionSpec::Bistable { .. } | ReactionSpec::PeriodicBistable { .. } => {
                -3.0 * s * s + 2.0 * (1.0 + alpha) * s - alpha
            }
            ReactionSpec::Ignition { .. } => {
                if s <= alpha {
                    0.0
                } else {
                    1.0 + alpha - 2.0 * s
                }
            }
            ReactionSpec::Kpp => 1.0 - 2.0 * s,
            ReactionSpec::Table { values } => table_slope(values, s),
        }
    }

    /// Homogeneous evaluation; uses the mean threshold for periodic kinds.
    pub fn eval_homogeneous(&self, s: f64) -> f64 {
        self.eval(self.mean_alpha(), s)
    }

    pub fn deriv_homogeneous(&self, s: f64) -> f64 {
        self.deriv(self.mean_alpha(), s)
    }

    fn mean_alpha(&self) -> f64 {
        match self {
            ReactionSpec::PeriodicBistable { alpha_mean, .. } => *alpha_mean,
            other => other.alpha_at([0.0, 0.0]),
        }
    }

    /// Largest `s` below which `f` vanishes identically (ignition threshold),
    /// used by the shooting method to close the phase-plane trajectory.
    pub(crate) fn flat_below(&self) -> Option<f64> {
        match self {
            ReactionSpec::Ignition { alpha } => Some(*alpha),
            ReactionSpec::Table { values } => {
                let n = values.len() - 1;
                let k = values.iter().skip(1).position(|v| *v != 0.0)?;
                (k > 0).then(|| k as f64 / n as f64)
            }
            _ => None,
        }
    }
}

fn table_eval(values: &[f64], s: f64) -> f64 {
    let n = values.len() - 1;
    let x = s.clamp(0.0, 1.0) * n as f64;
    let k = (x.floor() as usize).min(n - 1);
    let w = x - k as f64;
    values[k] * (1.0 - w) + values[k + 1] * w
}

fn table_slope(values: &[f64], s: f64) -> f64 {
    let n = values.len() - 1;
    let x = s.clamp(0.0, 1.0) * n as f64;
    let k = (x.floor() as usize).min(n - 1);
    (values[k + 1] - values[k]) * n as f64
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Samples of `s` used by the sign scans.
pub const SCAN_POINTS: usize = 1000;

/// Decides the homogeneous invasion condition: `f > 0` on some `[theta, 1)`
/// and `int_s^1 f > 0` for every `s` in `[0, 1)`.
pub fn check_homogeneous_invasion(f: &ReactionSpec) -> Result<bool> {
    if !f.is_homogeneous() {
        return Err(Error::Domain(
            "invasion condition is only decidable for x-independent reactions".into(),
        ));
    }
    f.validate()?;
    let k = SCAN_POINTS;
    let s_at = |i: usize| i as f64 / k as f64;
    // theta: smallest grid point from which f stays positive up to 1.
    let mut theta_idx = k;
    for i in (1..k).rev() {
        if f.eval_homogeneous(s_at(i)) > 0.0 {
            theta_idx = i;
        } else {
            break;
        }
    }
    if theta_idx == k {
        return Ok(false);
    }
    // Tail integrals int_s^1 f, accumulated from the right on the scan grid.
    let g = |s: f64| f.eval_homogeneous(s);
    let mut tail = 0.0;
    let floor = 1e-12;
    for i in (0..k).rev() {
        tail += adaptive_simpson(&g, s_at(i), s_at(i + 1), 1e-15);
        if i < theta_idx && tail <= floor {
            return Ok(false);
        }
    }
    Ok(tail > floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_zeros_for_builtin_kinds() {
        let kinds = [
            ReactionSpec::Bistable { alpha: 0.25 },
            ReactionSpec::Ignition { alpha: 0.3 },
            ReactionSpec::Kpp,
            ReactionSpec::PeriodicBistable {
                alpha_mean: 0.25,
                alpha_amp: 0.1,
            },
            ReactionSpec::Table {
                values: vec![0.0, -0.01, 0.05, 0.08, 0.0],
            },
        ];
        for f in &kinds {
            for x in [[0.0, 0.0], [0.3, 0.7], [0.9, 0.1]] {
                let a = f.alpha_at(x);
                assert_eq!(f.eval(a, 0.0), 0.0, "{f:?}");
                assert_eq!(f.eval(a, 1.0), 0.0, "{f:?}");
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let f = ReactionSpec::Bistable { alpha: 0.25 };
        for i in 1..20 {
            let s = i as f64 / 20.0;
            let h = 1e-6;
            let fd = (f.eval(0.25, s + h) - f.eval(0.25, s - h)) / (2.0 * h);
            assert!((fd - f.deriv(0.25, s)).abs() < 1e-8);
        }
    }

    #[test]
    fn simpson_integrates_cubic_exactly() {
        let v = adaptive_simpson(&|s: f64| s * (1.0 - s) * (s - 0.25), 0.0, 1.0, 1e-14);
        assert!((v - 1.0 / 24.0).abs() < 1e-14);
    }

    #[test]
    fn invasion_condition_examples() {
        assert!(check_homogeneous_invasion(&ReactionSpec::Bistable { alpha: 0.25 }).unwrap());
        assert!(!check_homogeneous_invasion(&ReactionSpec::Bistable { alpha: 0.5 }).unwrap());
        assert!(!check_homogeneous_invasion(&ReactionSpec::Bistable { alpha: 0.6 }).unwrap());
        assert!(check_homogeneous_invasion(&ReactionSpec::Kpp).unwrap());
        assert!(check_homogeneous_invasion(&ReactionSpec::Ignition { alpha: 0.3 }).unwrap());
    }

    #[test]
    fn invasion_condition_rejects_heterogeneous() {
        let f = ReactionSpec::PeriodicBistable {
            alpha_mean: 0.25,
            alpha_amp: 0.1,
        };
        assert!(matches!(check_homogeneous_invasion(&f), Err(Error::Domain(_))));
    }

    #[test]
    fn table_validation() {
        assert!(ReactionSpec::Table { values: vec![0.0, 0.1, 0.2] }.validate().is_err());
        assert!(ReactionSpec::Table { values: vec![0.0, 0.1, 0.0] }.validate().is_ok());
        assert!(ReactionSpec::Bistable { alpha: 1.2 }.validate().is_err());
    }
}

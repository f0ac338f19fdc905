//! Planar fronts of `phi'' + c phi' + f(phi) = 0`, `phi(-inf) = 1`, `phi(+inf) = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::{adaptive_simpson, ReactionSpec};

/// Heteroclinic profile from the shooting method, normalized by `phi(0) = 1/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarFront {
    pub c: f64,
    /// Decay rate of `phi` as `z -> +inf`.
    pub lambda0: f64,
    pub z0: f64,
    pub dz: f64,
    pub phi: Vec<f64>,
}

const STEP: f64 = 2e-3;
const START_OFFSET: f64 = 1e-7;
const MAX_LENGTH: f64 = 400.0;
const TAIL_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Outcome {
    /// `phi` crossed zero: the speed is too small.
    Undershoot,
    /// `phi'` reached zero inside `(0, 1)`: the speed is too large.
    Overshoot,
}

struct Shooter<'a> {
    f: &'a ReactionSpec,
    flat: Option<f64>,
}

impl Shooter<'_> {
    fn rhs(&self, c: f64, y: [f64; 2]) -> [f64; 2] {
        [y[1], -c * y[1] - self.f.eval_homogeneous(y[0])]
    }

    fn rk4(&self, c: f64, y: [f64; 2], h: f64) -> [f64; 2] {
        let k1 = self.rhs(c, y);
        let k2 = self.rhs(c, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = self.rhs(c, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = self.rhs(c, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    }

    fn start(&self, c: f64) -> [f64; 2] {
        let d1 = self.f.deriv_homogeneous(1.0);
        let mu = 0.5 * (-c + (c * c - 4.0 * d1).sqrt());
        [1.0 - START_OFFSET, -START_OFFSET * mu]
    }

    /// Decay rate at 0 on the stable manifold.
    fn tail_rate(&self, c: f64) -> f64 {
        if self.flat.is_some() {
            return c;
        }
        let d0 = self.f.deriv_homogeneous(0.0);
        0.5 * (c + (c * c - 4.0 * d0).sqrt())
    }

    /// Integrates from the saddle, returning the outcome and, if `record`,
    /// the visited `phi` values until the trajectory settles or leaves.
    fn shoot(&self, c: f64, record: Option<&mut Vec<f64>>) -> Outcome {
        let mut y = self.start(c);
        let mut rec = record;
        if let Some(r) = rec.as_deref_mut() {
            r.push(y[0]);
        }
        let steps = (MAX_LENGTH / STEP) as usize;
        for _ in 0..steps {
            y = self.rk4(c, y, STEP);
            if let Some(r) = rec.as_deref_mut() {
                r.push(y[0]);
            }
            if y[0] < 0.0 {
                return Outcome::Undershoot;
            }
            if y[1] >= 0.0 {
                return Outcome::Overshoot;
            }
            if let Some(a) = self.flat {
                if y[0] <= a {
                    // phi'' + c phi' = 0 below the threshold: phi -> phi + phi'/c
                    if c <= 0.0 {
                        return Outcome::Undershoot;
                    }
                    let limit = y[0] + y[1] / c;
                    return if limit < 0.0 { Outcome::Undershoot } else { Outcome::Overshoot };
                }
            }
            if y[0] < TAIL_FLOOR {
                let nu = self.tail_rate(c);
                return if y[1] + nu * y[0] < 0.0 { Outcome::Undershoot } else { Outcome::Overshoot };
            }
        }
        Outcome::Overshoot
    }
}

/// Bisection on `c` until the bracket is narrower than `tol`.
pub fn planar_front_shooting(f: &ReactionSpec, tol: f64) -> Result<PlanarFront> {
    f.validate()?;
    if !f.is_homogeneous() {
        return Err(Error::Domain("shooting needs a homogeneous reaction".into()));
    }
    if matches!(f, ReactionSpec::Kpp) {
        return Err(Error::Domain("shooting supports bistable and ignition kinds".into()));
    }
    if f.deriv_homogeneous(1.0) >= 0.0 {
        return Err(Error::Domain("f'(1) must be negative".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let flat = f.flat_below();
    let sh = Shooter { f, flat };
    // the speed has the sign of the integral of f over [0, 1]
    let mass = adaptive_simpson(&|s| f.eval_homogeneous(s), 0.0, 1.0, 1e-13);
    if mass <= 1e-12 {
        return Err(Error::NoPositiveSpeed { speed: 0.0 });
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while sh.shoot(hi, None) == Outcome::Undershoot {
        lo = hi;
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::Domain("could not bracket the front speed".into()));
        }
    }
    if flat.is_none() && sh.shoot(lo.max(1e-12), None) == Outcome::Overshoot {
        return Err(Error::NoPositiveSpeed { speed: lo });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match sh.shoot(mid, None) {
            Outcome::Undershoot => lo = mid,
            Outcome::Overshoot => hi = mid,
        }
    }
    let c = 0.5 * (lo + hi);
    if c <= tol {
        return Err(Error::NoPositiveSpeed { speed: c });
    }
    let mut phi = Vec::new();
    sh.shoot(c, Some(&mut phi));
    // keep the monotone part above the floor, then continue with the linear tail
    let lambda0 = sh.tail_rate(c);
    let mut end = phi.len();
    for k in 1..phi.len() {
        if phi[k] >= phi[k - 1] || phi[k] <= 0.0 || phi[k] < 1e-6 {
            end = k;
            break;
        }
        if let Some(a) = flat {
            if phi[k] <= a {
                end = k + 1;
                break;
            }
        }
    }
    phi.truncate(end);
    let last = *phi.last().unwrap();
    let tail_len = ((-(TAIL_FLOOR / last).ln()) / lambda0 / STEP).ceil().max(0.0) as usize;
    for k in 1..=tail_len {
        phi.push(last * (-lambda0 * k as f64 * STEP).exp());
    }
    let k_half = phi.iter().position(|&v| v < 0.5).unwrap_or(0).max(1);
    let (a, b) = (phi[k_half - 1], phi[k_half]);
    let z_half = (k_half - 1) as f64 * STEP + STEP * (a - 0.5) / (a - b);
    Ok(PlanarFront {
        c,
        lambda0,
        z0: -z_half,
        dz: STEP,
        phi,
    })
}

impl PlanarFront {
    pub fn z_max(&self) -> f64 {
        self.z0 + (self.phi.len() - 1) as f64 * self.dz
    }

    /// Profile value at `z`, extended by 1 on the left and by the linear
    /// tail on the right.
    pub fn eval(&self, z: f64) -> f64 {
        let x = (z - self.z0) / self.dz;
        if x <= 0.0 {
            return self.phi[0];
        }
        let n = self.phi.len();
        if x >= (n - 1) as f64 {
            return self.phi[n - 1] * (-self.lambda0 * (z - self.z_max())).exp();
        }
        super::catmull_rom(&self.phi, x)
    }

    pub fn derivative(&self, z: f64) -> f64 {
        let d = self.dz;
        (self.eval(z + d) - self.eval(z - d)) / (2.0 * d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_speed_and_profile() {
        let f = ReactionSpec::Bistable { alpha: 0.25 };
        let p = planar_front_shooting(&f, 1e-9).unwrap();
        let exact = std::f64::consts::SQRT_2 * 0.25;
        assert!((p.c - exact).abs() < 1e-5, "{}", p.c);
        assert!((p.lambda0 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4);
        // exact heteroclinic 1 / (1 + e^{z / sqrt 2})
        for z in [-10.0, -3.0, -1.0, 0.0, 0.5, 2.0, 6.0, 15.0] {
            let e: f64 = 1.0 / (1.0 + (z / std::f64::consts::SQRT_2).exp());
            assert!((p.eval(z) - e).abs() < 1e-4, "z={z}: {} vs {e}", p.eval(z));
        }
    }

    #[test]
    fn balanced_cubic_has_no_positive_speed() {
        let f = ReactionSpec::Bistable { alpha: 0.5 };
        assert!(matches!(planar_front_shooting(&f, 1e-8), Err(Error::NoPositiveSpeed { .. })));
        let f = ReactionSpec::Bistable { alpha: 0.7 };
        assert!(matches!(planar_front_shooting(&f, 1e-8), Err(Error::NoPositiveSpeed { .. })));
    }

    #[test]
    fn ignition_speed_is_positive_and_monotone_in_threshold() {
        let a = planar_front_shooting(&ReactionSpec::Ignition { alpha: 0.3 }, 1e-9).unwrap();
        let b = planar_front_shooting(&ReactionSpec::Ignition { alpha: 0.5 }, 1e-9).unwrap();
        assert!(a.c > 0.0 && b.c > 0.0 && a.c > b.c);
        assert!((a.lambda0 - a.c).abs() < 1e-12);
        // below the threshold phi = phi_a e^{-c (z - z_a)} exactly
        let za = (0..4000).map(|k| k as f64 * 0.01).find(|&z| a.eval(z) < 0.29).unwrap();
        let r = a.eval(za + 2.0) / a.eval(za);
        assert!((r - (-2.0 * a.c).exp()).abs() < 1e-3, "{r}");
    }

    #[test]
    fn kpp_is_rejected() {
        assert!(matches!(planar_front_shooting(&ReactionSpec::Kpp, 1e-6), Err(Error::Domain(_))));
    }

    #[test]
    fn profile_is_decreasing() {
        let p = planar_front_shooting(&ReactionSpec::Bistable { alpha: 0.3 }, 1e-9).unwrap();
        assert!(p.phi.windows(2).all(|w| w[1] < w[0]));
        assert!((p.eval(0.0) - 0.5).abs() < 1e-9);
    }
}

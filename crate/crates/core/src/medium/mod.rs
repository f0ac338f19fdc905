//! Periodic coefficients and reaction terms.
//!
//! Coefficients are given as closed-form evaluators and sampled once on the
//! closed cell grid `{0, 1/M, ..., 1}^N`. The solver reads samples `0..M` with
//! wrap-around; the extra endpoint layer only serves the periodicity check.

mod reaction;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use reaction::{adaptive_simpson, check_homogeneous_invasion, ReactionSpec, SCAN_POINTS};

type DiffusionFn = Arc<dyn Fn([f64; 2]) -> [f64; 3] + Send + Sync>;
type AdvectionFn = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

/// Diffusion matrix `A(x)`, stored as `(a11, a22, a12)`.
#[derive(Clone)]
pub enum DiffusionSpec {
    Identity,
    Constant { a11: f64, a22: f64, a12: f64 },
    /// `(1 + amp sin 2 pi x1 [sin 2 pi x2]) I`.
    Oscillating { amp: f64 },
    Custom(DiffusionFn),
}

/// Drift `q(x)`.
#[derive(Clone)]
pub enum AdvectionSpec {
    None,
    /// `amp (sin 2 pi x2, sin 2 pi x1)`.
    Shear { amp: f64 },
    /// `amp (-sin 2 pi x1 cos 2 pi x2, cos 2 pi x1 sin 2 pi x2)`.
    Cellular { amp: f64 },
    /// `(x1, 0)`; not periodic, kept for exercising validation.
    LinearX,
    Custom(AdvectionFn),
}

impl fmt::Debug for DiffusionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiffusionSpec::Identity => write!(f, "Identity"),
            DiffusionSpec::Constant { a11, a22, a12 } => {
                write!(f, "Constant({a11}, {a22}, {a12})")
            }
            DiffusionSpec::Oscillating { amp } => write!(f, "Oscillating({amp})"),
            DiffusionSpec::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl fmt::Debug for AdvectionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdvectionSpec::None => write!(f, "None"),
            AdvectionSpec::Shear { amp } => write!(f, "Shear({amp})"),
            AdvectionSpec::Cellular { amp } => write!(f, "Cellular({amp})"),
            AdvectionSpec::LinearX => write!(f, "LinearX"),
            AdvectionSpec::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl DiffusionSpec {
    pub fn eval(&self, x: [f64; 2], dim: usize) -> [f64; 3] {
        match self {
            DiffusionSpec::Identity => [1.0, 1.0, 0.0],
            DiffusionSpec::Constant { a11, a22, a12 } => [*a11, *a22, *a12],
            DiffusionSpec::Oscillating { amp } => {
                let mut s = (2.0 * PI * x[0]).sin();
                if dim == 2 {
                    s *= (2.0 * PI * x[1]).sin();
                }
                let a = 1.0 + amp * s;
                [a, a, 0.0]
            }
            DiffusionSpec::Custom(g) => g(x),
        }
    }

    fn is_constant(&self) -> bool {
        matches!(self, DiffusionSpec::Identity | DiffusionSpec::Constant { .. })
            || matches!(self, DiffusionSpec::Oscillating { amp } if *amp == 0.0)
    }
}

impl AdvectionSpec {
    pub fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        let tau = 2.0 * PI;
        match self {
            AdvectionSpec::None => [0.0, 0.0],
            AdvectionSpec::Shear { amp } => [amp * (tau * x[1]).sin(), amp * (tau * x[0]).sin()],
            AdvectionSpec::Cellular { amp } => [
                -amp * (tau * x[0]).sin() * (tau * x[1]).cos(),
                amp * (tau * x[0]).cos() * (tau * x[1]).sin(),
            ],
            AdvectionSpec::LinearX => [x[0], 0.0],
            AdvectionSpec::Custom(g) => g(x),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            AdvectionSpec::None => true,
            AdvectionSpec::Shear { amp } | AdvectionSpec::Cellular { amp } => *amp == 0.0,
            _ => false,
        }
    }
}

/// Periodic medium sampled on the unit cell.
#[derive(Debug, Clone)]
pub struct PeriodicMedium {
    dim: usize,
    resolution: usize,
    diffusion: Vec<[f64; 3]>,
    advection: Vec<[f64; 2]>,
    reaction: ReactionSpec,
    alpha: Vec<f64>,
    delta: f64,
    homogeneous: bool,
}

/// Builder collecting the closed-form evaluators before sampling.
#[derive(Debug, Clone)]
pub struct MediumBuilder {
    dim: usize,
    resolution: usize,
    diffusion: DiffusionSpec,
    advection: AdvectionSpec,
    reaction: ReactionSpec,
    delta: f64,
}

pub const DEFAULT_DELTA: f64 = 0.05;

impl MediumBuilder {
    pub fn new(dim: usize, resolution: usize, reaction: ReactionSpec) -> Self {
        Self {
            dim,
            resolution,
            diffusion: DiffusionSpec::Identity,
            advection: AdvectionSpec::None,
            reaction,
            delta: DEFAULT_DELTA,
        }
    }

    pub fn diffusion(mut self, d: DiffusionSpec) -> Self {
        self.diffusion = d;
        self
    }

    pub fn advection(mut self, q: AdvectionSpec) -> Self {
        self.advection = q;
        self
    }

    pub fn delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn resolution(mut self, m: usize) -> Self {
        self.resolution = m;
        self
    }

    pub fn build(&self) -> Result<PeriodicMedium> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::Domain(format!("dimension {} not supported", self.dim)));
        }
        if self.resolution < 2 {
            return Err(Error::Domain("cell resolution must be at least 2".into()));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::Domain(format!("delta = {} not in (0, 1/2)", self.delta)));
        }
        self.reaction.validate()?;
        let m = self.resolution;
        let side = m + 1;
        let count = if self.dim == 1 { side } else { side * side };
        let pos = |k: usize| -> [f64; 2] {
            let i = k % side;
            let j = k / side;
            [i as f64 / m as f64, j as f64 / m as f64]
        };
        let diffusion: Vec<[f64; 3]> = (0..count)
            .map(|k| {
                let mut a = self.diffusion.eval(pos(k), self.dim);
                if self.dim == 1 {
                    a[1] = a[0];
                    a[2] = 0.0;
                }
                a
            })
            .collect();
        let advection: Vec<[f64; 2]> = (0..count)
            .map(|k| {
                let mut q = self.advection.eval(pos(k));
                if self.dim == 1 {
                    q[1] = 0.0;
                }
                q
            })
            .collect();
        let alpha = (0..count).map(|k| self.reaction.alpha_at(pos(k))).collect();
        Ok(PeriodicMedium {
            dim: self.dim,
            resolution: m,
            diffusion,
            advection,
            reaction: self.reaction.clone(),
            alpha,
            delta: self.delta,
            homogeneous: self.diffusion.is_constant()
                && self.advection.is_zero()
                && self.reaction.is_homogeneous(),
        })
    }
}

impl PeriodicMedium {
    /// Homogeneous medium with identity diffusion and no drift.
    pub fn homogeneous(dim: usize, resolution: usize, reaction: ReactionSpec) -> Result<Self> {
        MediumBuilder::new(dim, resolution, reaction).build()
    }

    /// Medium from raw samples on the closed cell grid; shapes are checked by
    /// [`validate_medium`].
    pub fn from_samples(
        dim: usize,
        resolution: usize,
        diffusion: Vec<[f64; 3]>,
        advection: Vec<[f64; 2]>,
        reaction: ReactionSpec,
        delta: f64,
    ) -> Self {
        let side = resolution + 1;
        let count = if dim == 1 { side } else { side * side };
        let alpha = (0..count)
            .map(|k| {
                reaction.alpha_at([
                    (k % side) as f64 / resolution as f64,
                    (k / side) as f64 / resolution as f64,
                ])
            })
            .collect();
        let homogeneous = reaction.is_homogeneous()
            && diffusion.windows(2).all(|w| w[0] == w[1])
            && advection.iter().all(|q| q[0] == 0.0 && q[1] == 0.0);
        Self {
            dim,
            resolution,
            diffusion,
            advection,
            reaction,
            alpha,
            delta,
            homogeneous,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Samples per unit length `M`.
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn reaction(&self) -> &ReactionSpec {
        &self.reaction
    }

    /// True when no coefficient depends on `x`.
    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    fn side(&self) -> usize {
        self.resolution + 1
    }

    /// Closed-grid sample index for periodic cell index `(i, j)`, `0 <= i, j < M`.
    #[inline]
    pub fn sample_index(&self, i: usize, j: usize) -> usize {
        j * self.side() + i
    }

    /// Closed-grid sample index for arbitrary integer lattice coordinates.
    #[inline]
    pub fn wrap_index(&self, gi: i64, gj: i64) -> usize {
        let m = self.resolution as i64;
        let i = gi.rem_euclid(m) as usize;
        let j = if self.dim == 1 { 0 } else { gj.rem_euclid(m) as usize };
        self.sample_index(i, j)
    }

    #[inline]
    pub fn diffusion_at(&self, k: usize) -> [f64; 3] {
        self.diffusion[k]
    }

    #[inline]
    pub fn advection_at(&self, k: usize) -> [f64; 2] {
        self.advection[k]
    }

    #[inline]
    pub fn f(&self, k: usize, s: f64) -> f64 {
        self.reaction.eval(self.alpha[k], s)
    }

    #[inline]
    pub fn df(&self, k: usize, s: f64) -> f64 {
        self.reaction.deriv(self.alpha[k], s)
    }

    /// Number of periodic cell samples `M^N`.
    pub fn cell_count(&self) -> usize {
        self.resolution.pow(self.dim as u32)
    }

    /// Iterator over closed-grid indices of the periodic samples.
    pub fn cell_samples(&self) -> impl Iterator<Item = usize> + '_ {
        let m = self.resolution;
        let rows = if self.dim == 1 { 1 } else { m };
        (0..rows).flat_map(move |j| (0..m).map(move |i| self.sample_index(i, j)))
    }

    /// Lipschitz constant of `f` in `s`, sampled.
    pub fn reaction_lipschitz(&self) -> f64 {
        let mut lip: f64 = 0.0;
        for k in self.cell_samples() {
            for i in 0..=200 {
                let s = i as f64 / 200.0;
                lip = lip.max(self.df(k, s).abs());
            }
        }
        lip
    }

    /// Largest `|q|_1` over the cell.
    pub fn max_drift(&self) -> f64 {
        self.cell_samples()
            .map(|k| self.advection[k][0].abs() + self.advection[k][1].abs())
            .fold(0.0, f64::max)
    }

    /// Largest diagonal diffusion coefficient.
    pub fn max_diffusion(&self) -> f64 {
        self.cell_samples()
            .map(|k| self.diffusion[k][0].max(self.diffusion[k][1]))
            .fold(0.0, f64::max)
    }

    /// True when the diffusion matrix has a nonzero off-diagonal entry somewhere.
    pub fn has_cross_diffusion(&self) -> bool {
        self.dim == 2 && self.cell_samples().any(|k| self.diffusion[k][2] != 0.0)
    }

    pub(crate) fn sample_count(&self) -> usize {
        let side = self.side();
        if self.dim == 1 {
            side
        } else {
            side * side
        }
    }
}

/// Thresholds for [`validate_medium`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ValidationTolerances {
    pub div: f64,
    pub avg: f64,
    pub periodic: f64,
}

impl Default for ValidationTolerances {
    fn default() -> Self {
        Self {
            div: 1e-8,
            avg: 1e-8,
            periodic: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub worst_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Runs the standing-assumption checks on a sampled medium.
pub fn validate_medium(m: &PeriodicMedium, tol: ValidationTolerances) -> Result<ValidationReport> {
    let count = m.sample_count();
    if m.diffusion.len() != count || m.advection.len() != count || m.alpha.len() != count {
        return Err(Error::Structural(format!(
            "expected {count} samples per field, got diffusion {}, advection {}, reaction {}",
            m.diffusion.len(),
            m.advection.len(),
            m.alpha.len()
        )));
    }
    let res = m.resolution;
    let side = m.side();
    let h = 1.0 / res as f64;
    let mut checks = Vec::new();

    // Ellipticity: smallest eigenvalue of the symmetric 2x2 matrix.
    let mut worst_eig = f64::INFINITY;
    for a in &m.diffusion {
        let lam = if m.dim == 1 {
            a[0]
        } else {
            let tr = 0.5 * (a[0] + a[1]);
            let disc = (0.25 * (a[0] - a[1]).powi(2) + a[2] * a[2]).sqrt();
            tr - disc
        };
        worst_eig = worst_eig.min(lam);
    }
    checks.push(Check {
        name: "ellipticity".into(),
        passed: worst_eig > 0.0,
        worst_residual: worst_eig,
    });

    // Divergence by centered differences at interior samples of the closed grid.
    let q_scale = m
        .advection
        .iter()
        .map(|q| q[0].abs().max(q[1].abs()))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut worst_div: f64 = 0.0;
    if m.dim == 1 {
        for i in 1..res {
            let d = (m.advection[i + 1][0] - m.advection[i - 1][0]) / (2.0 * h);
            worst_div = worst_div.max(d.abs());
        }
    } else {
        for j in 1..res {
            for i in 1..res {
                let dx = (m.advection[j * side + i + 1][0] - m.advection[j * side + i - 1][0])
                    / (2.0 * h);
                let dy = (m.advection[(j + 1) * side + i][1] - m.advection[(j - 1) * side + i][1])
                    / (2.0 * h);
                worst_div = worst_div.max((dx + dy).abs());
            }
        }
    }
    let div_rel = worst_div * h / q_scale;
    checks.push(Check {
        name: "divergence-free".into(),
        passed: div_rel <= tol.div,
        worst_residual: div_rel,
    });

    // Cell average of q over the periodic samples.
    let n = m.cell_count() as f64;
    let mut avg = [0.0; 2];
    for k in m.cell_samples() {
        avg[0] += m.advection[k][0];
        avg[1] += m.advection[k][1];
    }
    let avg_res = (avg[0] / n).abs().max((avg[1] / n).abs()) / q_scale.max(1.0);
    checks.push(Check {
        name: "zero-average".into(),
        passed: avg_res <= tol.avg,
        worst_residual: avg_res,
    });

    // Periodicity: sample(0) equals sample(M) along each axis.
    let mut worst_per: f64 = 0.0;
    let mut compare = |a: usize, b: usize| {
        let da = &m.diffusion;
        let qa = &m.advection;
        let scale = 1.0f64
            .max(da[a][0].abs())
            .max(qa[a][0].abs())
            .max(qa[a][1].abs());
        let diff = (0..3)
            .map(|c| (da[a][c] - da[b][c]).abs())
            .chain((0..2).map(|c| (qa[a][c] - qa[b][c]).abs()))
            .chain(std::iter::once((m.alpha[a] - m.alpha[b]).abs()))
            .fold(0.0, f64::max);
        worst_per = worst_per.max(diff / scale);
    };
    if m.dim == 1 {
        compare(0, res);
    } else {
        for t in 0..side {
            compare(t * side, t * side + res);
            compare(t, res * side + t);
        }
    }
    checks.push(Check {
        name: "periodicity".into(),
        passed: worst_per <= tol.periodic,
        worst_residual: worst_per,
    });

    // f(x, 0) = f(x, 1) = 0 exactly as evaluated.
    let mut worst_end: f64 = 0.0;
    for k in 0..count {
        worst_end = worst_end.max(m.f(k, 0.0).abs()).max(m.f(k, 1.0).abs());
    }
    checks.push(Check {
        name: "endpoint-zeros".into(),
        passed: worst_end == 0.0,
        worst_residual: worst_end,
    });

    Ok(ValidationReport { checks })
}

/// Outcome of the weak-stability sign scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakStability {
    pub holds: bool,
    /// First violation `(x, s, d f / d s)`.
    pub witness: Option<([f64; 2], f64, f64)>,
}

/// Checks that `d f / d s <= 0` on `[0, delta]` and `< 0` on `[1 - delta, 1]`
/// at every cell sample, scanning the fixed grid `s = k / 1000`.
///
/// The fixed grid makes the answer monotone in `delta`.
pub fn check_weak_stability(m: &PeriodicMedium, delta: f64) -> WeakStability {
    let k_max = SCAN_POINTS;
    let lo_last = (delta * k_max as f64 + 1e-9).floor() as usize;
    let hi_first = ((1.0 - delta) * k_max as f64 - 1e-9).ceil() as usize;
    let res = m.resolution;
    let side = m.side();
    for k in m.cell_samples() {
        let x = [(k % side) as f64 / res as f64, (k / side) as f64 / res as f64];
        for i in 0..=lo_last.min(k_max) {
            let s = i as f64 / k_max as f64;
            let d = m.df(k, s);
            if d > 0.0 {
                return WeakStability {
                    holds: false,
                    witness: Some((x, s, d)),
                };
            }
        }
        for i in hi_first..=k_max {
            let s = i as f64 / k_max as f64;
            let d = m.df(k, s);
            if d >= 0.0 {
                return WeakStability {
                    holds: false,
                    witness: Some((x, s, d)),
                };
            }
        }
    }
    WeakStability {
        holds: true,
        witness: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic(a: f64) -> ReactionSpec {
        ReactionSpec::Bistable { alpha: a }
    }

    #[test]
    fn constant_medium_passes_all_checks() {
        let m = PeriodicMedium::homogeneous(2, 16, cubic(0.25)).unwrap();
        let r = validate_medium(&m, ValidationTolerances::default()).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.checks.len(), 5);
    }

    #[test]
    fn shear_flow_is_divergence_free_with_zero_average() {
        let m = MediumBuilder::new(2, 20, cubic(0.25))
            .advection(AdvectionSpec::Shear { amp: 1.5 })
            .build()
            .unwrap();
        let r = validate_medium(&m, ValidationTolerances::default()).unwrap();
        assert!(r.check("divergence-free").unwrap().passed);
        assert!(r.check("zero-average").unwrap().passed);
        assert!(r.passed());
    }

    #[test]
    fn cellular_flow_is_discretely_divergence_free() {
        let m = MediumBuilder::new(2, 24, cubic(0.25))
            .advection(AdvectionSpec::Cellular { amp: 2.0 })
            .build()
            .unwrap();
        let r = validate_medium(&m, ValidationTolerances::default()).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn linear_drift_fails_periodicity_and_average() {
        let m = MediumBuilder::new(2, 10, cubic(0.25))
            .advection(AdvectionSpec::LinearX)
            .build()
            .unwrap();
        let r = validate_medium(&m, ValidationTolerances::default()).unwrap();
        assert!(!r.check("periodicity").unwrap().passed);
        assert!(!r.check("zero-average").unwrap().passed);
    }

    #[test]
    fn indefinite_diffusion_fails_ellipticity() {
        let m = MediumBuilder::new(2, 8, cubic(0.25))
            .diffusion(DiffusionSpec::Constant {
                a11: 1.0,
                a22: 1.0,
                a12: 1.5,
            })
            .build()
            .unwrap();
        let r = validate_medium(&m, ValidationTolerances::default()).unwrap();
        let c = r.check("ellipticity").unwrap();
        assert!(!c.passed);
        assert!((c.worst_residual + 0.5).abs() < 1e-12);
    }

    #[test]
    fn mismatched_samples_are_structural_errors() {
        let m = PeriodicMedium::from_samples(
            1,
            8,
            vec![[1.0, 1.0, 0.0]; 9],
            vec![[0.0, 0.0]; 7],
            cubic(0.25),
            0.05,
        );
        assert!(matches!(
            validate_medium(&m, ValidationTolerances::default()),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn validation_is_idempotent() {
        let m = MediumBuilder::new(2, 12, cubic(0.3))
            .diffusion(DiffusionSpec::Oscillating { amp: 0.4 })
            .advection(AdvectionSpec::Shear { amp: 0.7 })
            .build()
            .unwrap();
        let a = validate_medium(&m, ValidationTolerances::default()).unwrap();
        let b = validate_medium(&m, ValidationTolerances::default()).unwrap();
        assert_eq!(a, b);
    }

    /// Independent sign scan of the cubic derivative on 10^3 points.
    fn cubic_scan(a: f64, delta: f64) -> bool {
        let d = |s: f64| -3.0 * s * s + 2.0 * (1.0 + a) * s - a;
        (0..=1000).all(|i| {
            let s = i as f64 / 1000.0;
            if s <= delta {
                d(s) <= 0.0
            } else if s >= 1.0 - delta {
                d(s) < 0.0
            } else {
                true
            }
        })
    }

    #[test]
    fn weak_stability_examples() {
        let m = PeriodicMedium::homogeneous(1, 8, cubic(0.25)).unwrap();
        assert!(cubic_scan(0.25, 0.1));
        assert!(check_weak_stability(&m, 0.1).holds);

        let kpp = PeriodicMedium::homogeneous(1, 8, ReactionSpec::Kpp).unwrap();
        let w = check_weak_stability(&kpp, 0.05);
        assert!(!w.holds);
        let (_, s, d) = w.witness.unwrap();
        assert!(s < 0.05 && d > 0.0);

        let ign = PeriodicMedium::homogeneous(1, 8, ReactionSpec::Ignition { alpha: 0.3 }).unwrap();
        assert!(check_weak_stability(&ign, 0.05).holds);
    }

    #[test]
    fn weak_stability_fails_beyond_derivative_root() {
        // d f / d s of the cubic with a = 0.25 changes sign near s = 0.1162.
        let m = PeriodicMedium::homogeneous(1, 8, cubic(0.25)).unwrap();
        assert!(!cubic_scan(0.25, 0.2));
        assert!(!check_weak_stability(&m, 0.2).holds);
    }

    #[test]
    fn periodic_threshold_samples() {
        let m = MediumBuilder::new(1, 20, ReactionSpec::PeriodicBistable {
            alpha_mean: 0.25,
            alpha_amp: 0.1,
        })
        .build()
        .unwrap();
        assert!(!m.is_homogeneous());
        let r = validate_medium(&m, ValidationTolerances::default()).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(check_weak_stability(&m, 0.05).holds);
    }
}

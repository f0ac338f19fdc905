//! Planar and pulsating fronts: speeds, profiles and residuals.

mod profile;
mod pulsating;
mod shooting;

pub(crate) use profile::catmull_rom;
pub use profile::{cell_of, extract_front_profile, front_residual, FrontProfile, MU, TAIL_RANGE};
pub use pulsating::{
    lattice_directions, pulsating_front_speed, run_front, snap_direction, speed_table, unit, FrontRun,
    SpeedEstimate, SpeedParams, SpeedTable,
};
pub use shooting::{planar_front_shooting, PlanarFront};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::{DiffusionSpec, MediumBuilder, PeriodicMedium, ReactionSpec};
    use crate::error::Error;
    use crate::solver::StepOptions;

    fn cubic(dim: usize, r: usize) -> PeriodicMedium {
        PeriodicMedium::homogeneous(dim, r, ReactionSpec::Bistable { alpha: 0.25 }).unwrap()
    }

    fn params(t: f64, dt: f64) -> SpeedParams {
        SpeedParams {
            t_final: t,
            step: StepOptions { dt_max: dt, ..Default::default() },
            ..Default::default()
        }
    }

    fn shoot(f: ReactionSpec) -> PlanarFront {
        planar_front_shooting(&f, 1e-10).unwrap()
    }

    fn unit_of(d: [f64; 2]) -> [f64; 2] {
        let l = (d[0] * d[0] + d[1] * d[1]).sqrt();
        [d[0] / l, d[1] / l]
    }

    #[test]
    fn shooting_matches_simulation() {
        for f in [ReactionSpec::Bistable { alpha: 0.25 }, ReactionSpec::Ignition { alpha: 0.3 }] {
            let c = shoot(f.clone()).c;
            let m = PeriodicMedium::homogeneous(1, 8, f).unwrap();
            let est = pulsating_front_speed(&m, [1.0, 0.0], &params(80.0, 0.02)).unwrap();
            assert!((est.c / c - 1.0).abs() < 0.02, "{} vs {c}", est.c);
        }
    }

    #[test]
    fn homogeneous_speeds_are_isotropic() {
        let m = cubic(2, 4);
        let a = pulsating_front_speed(&m, [1.0, 0.0], &params(60.0, 0.05)).unwrap();
        let b = pulsating_front_speed(&m, [0.0, 1.0], &params(60.0, 0.05)).unwrap();
        let d = pulsating_front_speed(&m, unit_of([1.0, 2.0]), &params(60.0, 0.05)).unwrap();
        assert!((a.c / b.c - 1.0).abs() < 0.01);
        assert!((a.c / d.c - 1.0).abs() < 0.01);
        assert_eq!(d.lattice, [1, 2]);
    }

    #[test]
    fn anisotropic_speeds_follow_rescaled_1d_runs() {
        let an = MediumBuilder::new(2, 4, ReactionSpec::Bistable { alpha: 0.25 })
            .diffusion(DiffusionSpec::Constant { a11: 1.0, a22: 4.0, a12: 0.0 })
            .build()
            .unwrap();
        let cx = pulsating_front_speed(&an, [1.0, 0.0], &params(60.0, 0.05)).unwrap().c;
        let cy = pulsating_front_speed(&an, [0.0, 1.0], &params(60.0, 0.05)).unwrap().c;
        assert!((cy / cx - 2.0).abs() < 0.02, "{}", cy / cx);
        // oracle: 1D run with diffusivity e.Ae, on a grid fine enough to
        // make the discretization gap negligible
        let e = unit_of([1.0, 1.0]);
        let cd = pulsating_front_speed(&an, e, &params(60.0, 0.05)).unwrap().c;
        let one_d = MediumBuilder::new(1, 16, ReactionSpec::Bistable { alpha: 0.25 })
            .diffusion(DiffusionSpec::Constant { a11: 2.5, a22: 2.5, a12: 0.0 })
            .build()
            .unwrap();
        let c1 = pulsating_front_speed(&one_d, [1.0, 0.0], &params(60.0, 0.02)).unwrap().c;
        assert!((cd / c1 - 1.0).abs() < 0.01, "{cd} vs {c1}");
    }

    #[test]
    fn periodic_speed_is_resolution_consistent() {
        let medium = |r| {
            MediumBuilder::new(2, r, ReactionSpec::PeriodicBistable { alpha_mean: 0.25, alpha_amp: 0.1 })
                .build()
                .unwrap()
        };
        let a = pulsating_front_speed(&medium(8), [1.0, 0.0], &params(80.0, 0.05)).unwrap();
        let b = pulsating_front_speed(&medium(16), [1.0, 0.0], &params(80.0, 0.05)).unwrap();
        assert!((a.c / b.c - 1.0).abs() < 0.03);
        assert!(a.oscillation < 1.0 && b.oscillation < 1.0);
    }

    #[test]
    fn extinct_dynamics_report_no_front() {
        let m = PeriodicMedium::homogeneous(1, 4, ReactionSpec::Bistable { alpha: 0.7 }).unwrap();
        let r = pulsating_front_speed(&m, [1.0, 0.0], &params(40.0, 0.05));
        assert!(matches!(r, Err(Error::NoPositiveSpeed { .. })), "{r:?}");
    }

    #[test]
    fn small_strip_is_rejected() {
        let m = cubic(1, 4);
        let mut p = params(40.0, 0.05);
        p.behind = 2;
        assert!(matches!(pulsating_front_speed(&m, [1.0, 0.0], &p), Err(Error::DomainTooSmall(_))));
    }

    fn late_run(m: &PeriodicMedium, ramp: f64) -> FrontRun {
        let mut p = params(100.0, 0.02);
        p.keep_from = Some(60.0);
        p.ramp = ramp;
        run_front(m, [1.0, 0.0], &p).unwrap()
    }

    #[test]
    fn extracted_profile_matches_shooting() {
        let m = cubic(1, 8);
        let run = late_run(&m, 0.0);
        let prof = extract_front_profile(&m, &run.estimate, &run.snapshots, (-12.0, 22.0)).unwrap();
        let pf = shoot(ReactionSpec::Bistable { alpha: 0.25 });
        let worst = prof
            .z_grid()
            .iter()
            .map(|&z| (prof.eval(0, z) - pf.eval(z)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.02, "{worst}");
        assert!(prof.is_monotone());
        assert!(prof.lambda0 > 0.0 && (prof.lambda0 / pf.lambda0 - 1.0).abs() < 0.03);
        assert!(prof.tail_bound_holds());
        let mean = prof.mean_profile();
        assert!(mean[0] > 0.99 && *mean.last().unwrap() < 0.01);
    }

    #[test]
    fn profile_is_unique_up_to_shift() {
        let m = cubic(1, 8);
        let a = late_run(&m, 0.0);
        let b = late_run(&m, 6.0);
        let pa = extract_front_profile(&m, &a.estimate, &a.snapshots, (-12.0, 22.0)).unwrap();
        let pb = extract_front_profile(&m, &b.estimate, &b.snapshots, (-12.0, 22.0)).unwrap();
        let worst = pa
            .z_grid()
            .iter()
            .map(|&z| (pa.eval(0, z) - pb.eval(0, z)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.01, "{worst}");
    }

    #[test]
    fn late_snapshots_increase_in_time() {
        let m = cubic(1, 8);
        let run = late_run(&m, 0.0);
        for w in run.snapshots.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let off = (b.grid.offset[0] - a.grid.offset[0]) as usize;
            for i in 0..b.values.len() {
                if i + off < a.values.len() {
                    assert!(b.values[i] >= a.values[i + off] - 1e-9);
                }
            }
        }
    }

    #[test]
    fn reconstruction_is_periodic_in_shifts() {
        let m = MediumBuilder::new(1, 8, ReactionSpec::PeriodicBistable { alpha_mean: 0.25, alpha_amp: 0.1 })
            .build()
            .unwrap();
        let run = late_run(&m, 0.0);
        let prof = extract_front_profile(&m, &run.estimate, &run.snapshots, (-12.0, 22.0)).unwrap();
        assert!(prof.is_monotone());
        for i in -20..20 {
            for k in [1i64, 3] {
                let a = prof.phi(0.7, [i, 0]);
                let b = prof.phi(0.7 + k as f64 / prof.c, [i + 8 * k, 0]);
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shooting_profile_residual() {
        let pf = shoot(ReactionSpec::Bistable { alpha: 0.25 });
        for r in [4usize, 8] {
            let m = cubic(2, r);
            let h = 1.0 / r as f64;
            let e = unit_of([2.0, 1.0]);
            let prof = FrontProfile::from_planar(&pf, e, &m, (-20.0, 30.0), h / 16.0).unwrap();
            let res = front_residual(&m, &prof).unwrap();
            assert!(res <= 5.0 * h * h, "{res}");
            let mut flat = prof.clone();
            flat.values.iter_mut().for_each(|v| *v = 1.0);
            assert_eq!(front_residual(&m, &flat).unwrap(), 0.0);
            let mut bumped = prof.clone();
            let zs = bumped.z_grid();
            for (i, v) in bumped.values.iter_mut().enumerate() {
                *v += 0.01 * (-zs[i % bumped.nz].powi(2)).exp();
            }
            assert!(front_residual(&m, &bumped).unwrap() > res);
        }
    }

    #[test]
    fn snapping_and_lattice_directions() {
        assert_eq!(snap_direction([1.0, 0.0], 3), [1, 0]);
        assert_eq!(snap_direction(unit_of([0.5, 1.0]), 3), [1, 2]);
        assert_eq!(snap_direction([-0.6, -0.8], 3), [-2, -3]);
        assert_eq!(lattice_directions(1).len(), 8);
        assert_eq!(lattice_directions(3).len(), 32);
    }

    #[test]
    fn speed_table_is_flat_for_homogeneous_media() {
        let m = cubic(2, 4);
        let dirs: Vec<[f64; 2]> = lattice_directions(2).into_iter().map(unit).collect();
        let t = speed_table(&m, &dirs, &params(50.0, 0.05)).unwrap();
        let s = t.speeds();
        let (lo, hi) = s.iter().fold((f64::MAX, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
        assert!(hi / lo - 1.0 < 0.01, "{s:?}");
        assert!(speed_table(&m, &dirs[..4], &params(50.0, 0.05)).is_err());
    }
}

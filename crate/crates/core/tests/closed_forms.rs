//! Cross-module checks against closed-form solutions of homogeneous media.

use std::f64::consts::{SQRT_2, TAU};

use proptest::prelude::*;

use frontlab::eigen::principal_eigenvalue;
use frontlab::fronts::planar_front_shooting;
use frontlab::grid::{AxisBoundary, Grid, GridField};
use frontlab::medium::{DiffusionSpec, MediumBuilder, ReactionSpec};
use frontlab::wulff::wulff_shape;

fn circle(n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|k| {
            let t = TAU * k as f64 / n as f64;
            [t.cos(), t.sin()]
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    // Exact front 1 / (1 + exp(z / sqrt 2)) of the cubic nonlinearity.
    #[test]
    fn cubic_front_speed_and_decay(alpha in 0.1f64..0.4) {
        let f = planar_front_shooting(&ReactionSpec::Bistable { alpha }, 1e-8).unwrap();
        let c = SQRT_2 * (0.5 - alpha);
        prop_assert!((f.c - c).abs() < 1e-4, "c = {} vs {}", f.c, c);
        prop_assert!((f.lambda0 - 1.0 / SQRT_2).abs() < 1e-3, "lambda0 = {}", f.lambda0);
    }

    // Constant eigenfunction: k(lambda) = lambda^2 e.A.e.
    #[test]
    fn homogeneous_eigenvalue_is_quadratic(
        lambda in 0.1f64..1.0,
        angle in 0.0f64..TAU,
        a22 in 1.0f64..3.0,
    ) {
        let m = MediumBuilder::new(2, 16, ReactionSpec::Kpp)
            .diffusion(DiffusionSpec::Constant { a11: 1.0, a22, a12: 0.0 })
            .build()
            .unwrap();
        let e = [angle.cos(), angle.sin()];
        let pair = principal_eigenvalue(&m, e, lambda).unwrap();
        let exact = lambda * lambda * (e[0] * e[0] + a22 * e[1] * e[1]);
        prop_assert!((pair.k - exact).abs() < 1e-2 * lambda * lambda, "k = {} vs {}", pair.k, exact);
    }

    // Speeds sqrt(v.A.v) give the ellipse {x.A^-1.x < 1}.
    #[test]
    fn wulff_shape_of_elliptic_speeds(a11 in 0.5f64..2.0, a22 in 0.5f64..2.0) {
        let dirs = circle(720);
        let cs: Vec<f64> = dirs.iter().map(|v| (a11 * v[0] * v[0] + a22 * v[1] * v[1]).sqrt()).collect();
        let w = wulff_shape(2, &dirs, &cs, 256).unwrap();
        for e in circle(64) {
            let exact = 1.0 / (e[0] * e[0] / a11 + e[1] * e[1] / a22).sqrt();
            prop_assert!((w.radius(e) - exact).abs() < 2e-3 * exact, "{:?}: {} vs {}", e, w.radius(e), exact);
        }
    }
}

#[test]
fn snapshot_csv_round_trips() {
    let g = Grid::centered(2, 3.0, 4, AxisBoundary::Neumann).unwrap();
    let mut u = GridField::from_fn(g, |p| (-(p[0] * p[0] + p[1] * p[1])).exp());
    u.t = 2.5;
    let mut buf = Vec::new();
    u.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    let header = text.lines().next().unwrap();
    for key in ["t=", "L=", "h=", "N="] {
        assert!(header.contains(key), "{header}");
    }
    let back = GridField::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.t, u.t);
    assert_eq!(back.values, u.values);
}

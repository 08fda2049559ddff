use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spherevortex::dynamics::{
    hamiltonian, regularized_log, regularized_rhs, vortex_rhs, VortexConfig,
};
use spherevortex::equilibria::{perturb, vortex_crystal};
use spherevortex::geometry::{rotation_z, UnitVector3, Vec3};
use spherevortex::io::cli::Grid;
use spherevortex::io::fmt_float;
use spherevortex::stability::relative_equilibrium;

fn unit() -> impl Strategy<Value = UnitVector3> {
    (-1.0f64..1.0, 0.0f64..2.0 * PI).prop_map(|(z, phi)| {
        let r = (1.0 - z * z).sqrt();
        UnitVector3::from_xyz(r * phi.cos(), r * phi.sin(), z).unwrap()
    })
}

/// Gauss-constrained configurations with well-separated vortices.
fn config() -> impl Strategy<Value = VortexConfig> {
    (3usize..6)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(unit(), n),
                prop::collection::vec(0.3f64..2.0, n - 1),
                -2.0f64..2.0,
            )
        })
        .prop_filter("separated", |(p, _, _)| {
            (0..p.len()).all(|i| (i + 1..p.len()).all(|j| p[i].chordal_distance(&p[j]) > 0.05))
        })
        .prop_map(|(p, mut g, gamma)| {
            g.push(-g.iter().sum::<f64>());
            VortexConfig::new(p, g, gamma).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn velocities_are_tangent(cfg in config()) {
        for (v, x) in vortex_rhs(&cfg).unwrap().iter().zip(cfg.points()) {
            prop_assert!(v.vec.dot(x.as_vec()).abs() <= 1e-9 * (1.0 + v.vec.norm()));
        }
    }

    #[test]
    fn field_commutes_with_rotation_about_the_axis(cfg in config(), theta in -PI..PI) {
        let r = rotation_z(theta);
        let turned: Vec<Vec3> = cfg.positions().iter().map(|x| r * x).collect();
        let rcfg = cfg.with_positions(&turned).unwrap();
        let v = vortex_rhs(&cfg).unwrap();
        let w = vortex_rhs(&rcfg).unwrap();
        for (a, b) in v.iter().zip(&w) {
            prop_assert!((r * a.vec - b.vec).norm() <= 1e-9 * (1.0 + a.vec.norm()));
        }
        let (h0, h1) = (hamiltonian(&cfg).unwrap(), hamiltonian(&rcfg).unwrap());
        prop_assert!((h0 - h1).abs() <= 1e-10 * (1.0 + h0.abs()));
    }

    #[test]
    fn interaction_part_preserves_the_moment(cfg in config()) {
        // Σ Γ_i ẋ_i vanishes for the pair interaction; rotation only turns the moment
        let cfg = cfg.with_gamma(0.0);
        let total: Vec3 = vortex_rhs(&cfg)
            .unwrap()
            .iter()
            .zip(cfg.strengths())
            .map(|(v, g)| v.vec * *g)
            .sum();
        prop_assert!(total.norm() <= 1e-9);
    }

    #[test]
    fn regularization_is_inactive_for_separated_vortices(cfg in config(), eps in 1e-3f64..0.05) {
        let exact = vortex_rhs(&cfg).unwrap();
        let reg = regularized_rhs(&cfg, eps).unwrap();
        for (a, b) in exact.iter().zip(&reg) {
            prop_assert!((a.vec - b.vec).norm() <= 1e-12 * (1.0 + a.vec.norm()));
        }
    }

    #[test]
    fn regularized_log_is_c1_and_below_ln(r in 1e-6f64..2.0, eps in 1e-3f64..1.0) {
        let (v, d) = regularized_log(r, eps);
        prop_assert!(v.abs() <= r.ln().abs() + 1e-15);
        prop_assert!(d <= 1.0 / r + 1e-12);
        let (below, db) = regularized_log(eps * (1.0 - 1e-12), eps);
        let (at, da) = regularized_log(eps, eps);
        prop_assert!((below - at).abs() <= 1e-10 && (db - da).abs() <= 1e-9 / eps);
    }

    #[test]
    fn perturbation_stays_within_delta(cfg in config(), delta in 0.0f64..0.5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let moved = perturb(&cfg, delta, &mut rng).unwrap();
        for (a, b) in cfg.points().iter().zip(moved.points()) {
            prop_assert!(a.chordal_distance(b) <= delta + 1e-12);
        }
        prop_assert_eq!(moved.strengths(), cfg.strengths());
    }

    #[test]
    fn crystals_are_relative_equilibria(n in 4usize..12, a in 0.05f64..0.95, kappa in -3.0f64..3.0, gamma in -2.0f64..2.0) {
        let cfg = vortex_crystal(n, a, kappa, gamma).unwrap();
        let eq = relative_equilibrium(&cfg).unwrap();
        prop_assert!(eq.residual <= 1e-9, "{eq:?}");
    }

    #[test]
    fn floats_round_trip(bits in any::<u64>()) {
        let v = f64::from_bits(bits);
        prop_assume!(v.is_finite());
        prop_assert_eq!(fmt_float(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
    }

    #[test]
    fn range_grids_hit_both_ends(a in -10.0f64..10.0, b in -10.0f64..10.0, n in 2usize..200) {
        let g: Grid = format!("{a}:{b}:{n}").parse().unwrap();
        prop_assert_eq!(g.0.len(), n);
        prop_assert_eq!(g.0[0], a);
        prop_assert_eq!(g.0[n - 1], b);
    }
}

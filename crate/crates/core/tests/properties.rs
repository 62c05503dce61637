use dupin::clifford::build_system;
use dupin::engine::{arccot, focal_nullity};
use dupin::hopfmo::{fiber_param, hopf};
use dupin::liegeo::{cross_ratio, lie_inner, random_lie_transform, sphere_to_lie, ProjParam};
use dupin::morse::{ell_ab, g_ab, random_fiber_instance};
use dupin::otfkm::{sample_v2, v2_manifold};
use dupin::quat::Quaternion;
use dupin::rng;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn flipping_the_normal_negates_the_spectrum(seed in 0u64..10_000) {
        let sys = build_system(2, 4).unwrap();
        let manifold = v2_manifold(&sys).unwrap();
        let x = sample_v2(&sys, seed, 1).unwrap()[0].to_vec();
        let xi = manifold.random_normal(&x, &mut rng::stream(seed, 1)).unwrap();
        let a = manifold.principal_spectrum(&x, &xi, 1e-4).unwrap().spectrum.values();
        let b = manifold.principal_spectrum(&x, &(-&xi), 1e-4).unwrap();
        let neg = b.negated();
        prop_assert_eq!(a.len(), neg.len());
        for (p, q) in a.iter().zip(&neg) {
            prop_assert!((p - q).abs() < 1e-8);
        }
    }

    #[test]
    fn focal_rank_drop_equals_multiplicity(seed in 0u64..10_000) {
        let sys = build_system(2, 4).unwrap();
        let manifold = v2_manifold(&sys).unwrap();
        let x = sample_v2(&sys, seed, 1).unwrap()[0].to_vec();
        let xi = manifold.random_normal(&x, &mut rng::stream(seed, 2)).unwrap();
        let chart = manifold.tube_chart(&x, &xi, 0.3).unwrap();
        let q = chart.origin_params();
        let spec = manifold.principal_spectrum(&x, &xi, 1e-4).unwrap();
        for c in &spec.spectrum.clusters {
            let nullity = focal_nullity(&chart.with_radius(arccot(c.value)), &q, 6, 1e-6).unwrap();
            prop_assert_eq!(nullity, c.multiplicity);
        }
    }
}

proptest! {
    #[test]
    fn lie_transforms_preserve_the_quadric(seed in 0u64..100_000, n in 2usize..9, rho in 0.0f64..std::f64::consts::PI) {
        let b = random_lie_transform(seed, n, 0.5);
        let mut r = rng::stream(seed, 3);
        let x = sphere_to_lie(&rng::unit_vector(&mut r, n + 1), rho).unwrap();
        let y = x.transformed(&b);
        prop_assert!(lie_inner(&y, &y).unwrap().abs() < 1e-8 * y.x.norm_squared());
    }

    #[test]
    fn cross_ratio_is_projectively_invariant(
        t in prop::array::uniform4(0.0f64..std::f64::consts::PI),
        m in prop::array::uniform4(-1.0f64..1.0),
    ) {
        let det = m[0] * m[3] - m[1] * m[2];
        prop_assume!(det.abs() > 0.1);
        let ps: Vec<ProjParam> = t.iter().map(|&a| ProjParam::from_angle(a)).collect();
        let before = cross_ratio(ps[0], ps[1], ps[2], ps[3]);
        prop_assume!(before.is_ok());
        let mm = [[m[0], m[1]], [m[2], m[3]]];
        let qs: Vec<ProjParam> = ps.iter().map(|p| p.mapped(&mm)).collect();
        let before = before.unwrap();
        let after = cross_ratio(qs[0], qs[1], qs[2], qs[3]).unwrap();
        prop_assert!((before - after).abs() < 1e-10 * before.abs().max(1.0));
    }

    #[test]
    fn fiber_points_project_to_their_base(seed in 0u64..100_000) {
        let mut r = rng::stream(seed, 4);
        let (a, b, w, t) = random_fiber_instance(&mut r, 1e-2);
        let z = Quaternion::from_slice(rng::unit_vector(&mut r, 4).as_slice());
        let (u, v) = fiber_param(w, t, z).unwrap();
        let x = hopf(u, v).unwrap();
        prop_assert!((x[4] - t).abs() < 1e-10);
        prop_assert!(((g_ab(a, b, w, t).unwrap()) - 0.5 - 0.5 * ell_ab(a, b, w, t)).abs() < 1e-12);
    }
}

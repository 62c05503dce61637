use dupin::engine::{Hypersurface, PointNormalMap};
use dupin::hopfmo::{lifted_spectrum_check, psi_mo, Lift, S4Base};
use dupin::quat::Quaternion;
use dupin::rng;

fn lifted_errors(base: S4Base, samples: usize, seed: u64) -> (f64, Vec<usize>) {
    let lift = Lift::new(base).unwrap();
    let mut r = rng::stream(seed, 0);
    let mut worst = 0.0f64;
    let mut counts = Vec::new();
    for _ in 0..samples {
        let q = lift.base.sample_params(&mut r);
        let z = Quaternion::from_slice(rng::unit_vector(&mut r, 4).as_slice());
        let rep = lifted_spectrum_check(&lift, &q, z, 1e-4).unwrap();
        assert!(rep.count_ok && rep.multiplicity_ok, "{rep:?}");
        worst = worst.max(rep.max_error);
        counts.push(rep.lifted_values.len());
    }
    (worst, counts)
}

#[test]
fn warped_cyclide_lift_matches_half_angles() {
    let (err, counts) = lifted_errors(S4Base::cyclide(0.6, 1.5).unwrap(), 10, 1);
    assert!(err < 1e-5, "{err}");
    assert!(counts.iter().all(|&c| c == 4));
}

#[test]
fn warped_cartan_lift_matches_half_angles() {
    let (err, counts) = lifted_errors(S4Base::cartan(std::f64::consts::PI / 6.0, 1.5).unwrap(), 10, 2);
    assert!(err < 1e-5, "{err}");
    assert!(counts.iter().all(|&c| c == 6));
}

#[test]
fn warped_cyclide_pairing_follows_formula_and_varies() {
    let lift = Lift::new(S4Base::cyclide(0.6, 1.5).unwrap()).unwrap();
    let mut r = rng::stream(3, 0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..20 {
        let q = lift.base.sample_params(&mut r);
        let z = Quaternion::from_slice(rng::unit_vector(&mut r, 4).as_slice());
        let rep = lifted_spectrum_check(&lift, &q, z, 1e-4).unwrap();
        let pairing = rep.psi_mo_pairing.unwrap();
        assert!((pairing - rep.psi_mo_formula.unwrap()).abs() < 1e-6, "{rep:?}");
        lo = lo.min(pairing);
        hi = hi.max(pairing);
    }
    assert!(hi - lo > 0.05, "{lo} {hi}");
}

#[test]
fn unwarped_base_angle_gap_gives_constant_two() {
    let base = S4Base::cyclide(0.6, 1.0).unwrap();
    let mut r = rng::stream(4, 0);
    for _ in 0..5 {
        let q = base.sample_params(&mut r);
        let v = base.principal_spectrum(&q, 1e-4).unwrap().spectrum.values();
        let (a, b) = (dupin::engine::arccot(v[0]), dupin::engine::arccot(v[1]));
        assert!((psi_mo(a, b).unwrap() - 2.0).abs() < 1e-6);
    }
}

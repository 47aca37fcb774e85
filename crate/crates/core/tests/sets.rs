use nalgebra::DMatrix;
use proptest::prelude::*;
use qmi_core::linalg::spectral_norm;
use qmi_core::projection::{lift, project};
use qmi_core::random::{admissible, gaussian, rng};
use qmi_core::sets::{
    analyze, check_admissible, membership, parameterize, recover_params, sample, zero_witness, SampleConfig,
};
use qmi_core::{SetKind, Tolerances};

fn dims() -> impl Strategy<Value = (u64, usize, usize, usize, usize)> {
    (any::<u64>(), 1usize..=4, 1usize..=4).prop_flat_map(|(s, q, r)| (Just(s), Just(q), Just(r), 0..=r, 0..=q))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_sets_are_admissible((seed, q, r, k, j) in dims()) {
        let t = Tolerances::default();
        let pi = admissible::<f64>(&mut rng(seed), q, r, k, j);
        prop_assert!(check_admissible(&pi, &t).unwrap().admissible());
        let a = analyze(&pi, &t).unwrap();
        prop_assert_eq!(a.rank_p22, k);
        prop_assert_eq!(a.rank_schur, j);
        prop_assert_eq!(a.bounded, k == r);
        prop_assert_eq!(a.strict_nonempty, j == q);
    }

    #[test]
    fn samples_are_members_and_round_trip((seed, q, r, k, j) in dims()) {
        let t = Tolerances::default();
        let pi = admissible::<f64>(&mut rng(seed), q, r, k, j);
        for z in sample(&pi, 5, seed ^ 1, &SampleConfig::default(), &t).unwrap() {
            prop_assert!(membership(&z, &pi, SetKind::Nonstrict, &t).unwrap());
            let p = recover_params(&z, &pi, &t).unwrap();
            prop_assert!(spectral_norm(&p.contraction).unwrap() <= 1.0 + 1e-9);
            let back = parameterize(&pi, &p, false, &t).unwrap();
            prop_assert!((back - &z).norm() <= 1e-8 * (1.0 + z.norm()));
        }
    }

    #[test]
    fn strict_samples_are_strict_members((seed, q, r, k, _j) in dims()) {
        let t = Tolerances::default();
        let pi = admissible::<f64>(&mut rng(seed), q, r, k, q);
        let cfg = SampleConfig { strict: true, spread: 1.0 };
        for z in sample(&pi, 5, seed, &cfg, &t).unwrap() {
            prop_assert!(membership(&z, &pi, SetKind::Strict, &t).unwrap());
        }
    }

    #[test]
    fn bounded_sets_respect_their_radius((seed, q, r, _k, j) in dims()) {
        // With -Π22 ≻ 0 every member lies within ‖C‖ + ‖(-Π22)^{-1/2}‖ ‖(Π|Π22)^{1/2}‖.
        let t = Tolerances::default();
        let pi = admissible::<f64>(&mut rng(seed), q, r, r, j);
        let a = analyze(&pi, &t).unwrap();
        let neg = -pi.p22().into_matrix();
        let inv = neg.try_inverse().unwrap();
        let radius = a.center.norm() + (spectral_norm(&inv).unwrap() * spectral_norm(a.schur.as_matrix()).unwrap()).sqrt();
        for z in sample(&pi, 10, seed, &SampleConfig::default(), &t).unwrap() {
            prop_assert!(spectral_norm(&z).unwrap() <= radius * (1.0 + 1e-9) + 1e-9);
        }
    }

    #[test]
    fn zero_witness_exists_iff_rank_condition((seed, q, r, k, j) in dims()) {
        let t = Tolerances::default();
        let pi = admissible::<f64>(&mut rng(seed), q, r, k, j);
        let a = analyze(&pi, &t).unwrap();
        prop_assert_eq!(a.zero_nonempty, k >= j);
        match zero_witness(&pi, &t) {
            Ok(z) => prop_assert!(membership(&z, &pi, SetKind::Zero, &t).unwrap()),
            Err(_) => prop_assert!(!a.zero_nonempty),
        }
    }

    #[test]
    fn projection_maps_members_to_members((seed, q, r, k, j) in dims(), p in 1usize..=5) {
        let t = Tolerances::default();
        let mut g = rng(seed);
        let pi = admissible::<f64>(&mut g, q, r, k, j);
        let w = gaussian::<f64>(&mut g, q, p);
        let proj = project(&pi, &w, &t).unwrap();
        for z in sample(&pi, 5, seed, &SampleConfig::default(), &t).unwrap() {
            prop_assert!(membership(&(z * &w), &proj.projected, SetKind::Nonstrict, &t).unwrap());
        }
    }

    #[test]
    fn lifting_inverts_projection((seed, q, r, k, j) in dims(), p in 1usize..=4) {
        let t = Tolerances::default();
        let mut g = rng(seed);
        let pi = admissible::<f64>(&mut g, q, r, k, j);
        let w = gaussian::<f64>(&mut g, q, p.min(q));
        let proj = project(&pi, &w, &t).unwrap();
        prop_assume!(proj.lift_applicable(false));
        for zp in sample(&proj.projected, 4, seed, &SampleConfig::default(), &t).unwrap() {
            let z = lift(&zp, &proj, false, &t).unwrap();
            prop_assert!((&z * &w - &zp).norm() <= 1e-8 * (1.0 + zp.norm()));
            prop_assert!(membership(&z, &pi, SetKind::Nonstrict, &t).unwrap());
        }
    }
}

#[test]
fn sampling_is_deterministic_per_seed() {
    let t = Tolerances::default();
    let pi = admissible::<f64>(&mut rng(11), 3, 2, 1, 2);
    let a = sample(&pi, 6, 5, &SampleConfig::default(), &t).unwrap();
    let b = sample(&pi, 6, 5, &SampleConfig::default(), &t).unwrap();
    let c = sample(&pi, 6, 6, &SampleConfig::default(), &t).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn strict_sampling_of_empty_interior_fails() {
    let t = Tolerances::default();
    let pi = admissible::<f64>(&mut rng(2), 3, 2, 2, 1);
    assert!(sample(&pi, 1, 0, &SampleConfig { strict: true, spread: 1.0 }, &t).is_err());
}

#[test]
fn non_member_is_rejected_by_recovery() {
    let t = Tolerances::default();
    let pi = admissible::<f64>(&mut rng(4), 2, 2, 2, 2);
    let far = DMatrix::from_element(2, 2, 1e3);
    assert!(!membership(&far, &pi, SetKind::Nonstrict, &t).unwrap());
    assert!(recover_params(&far, &pi, &t).is_err());
}

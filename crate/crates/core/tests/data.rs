use nalgebra::DMatrix;
use proptest::prelude::*;
use qmi_core::data::{
    build_n, build_phi, chi2_quantile, simulate, stabilize_full, strict_applicable, system_to_z, z_to_system,
    DesignConfig, ExperimentData, NoiseModel, StabilizationResult,
};
use qmi_core::random::{ball_columns, gaussian, rng, uniform};
use qmi_core::sets::membership;
use qmi_core::{Document, SetKind, SymMatrix, Tolerances};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn experiment(seed: u64, n: usize, m: usize, t: usize, eps: f64) -> (DMatrix<f64>, DMatrix<f64>, ExperimentData<f64>) {
    let mut g = rng(seed);
    let a = uniform::<f64>(&mut g, n, n);
    let b = uniform::<f64>(&mut g, n, m);
    let x0 = uniform::<f64>(&mut g, n, 1);
    let u = gaussian::<f64>(&mut g, m, t);
    let w = ball_columns::<f64>(&mut g, n, t, eps);
    let data = simulate(&a, &b, &x0, &u, &w).unwrap();
    (a, b, data)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn simulated_data_satisfy_the_recursion(seed in any::<u64>(), n in 1usize..=3, m in 1usize..=2, t in 1usize..=8) {
        let (a, b, data) = experiment(seed, n, m, t, 0.3);
        let w = data.x_plus() - &a * data.x_minus() - &b * data.inputs();
        for col in w.column_iter() {
            prop_assert!(col.norm() <= 0.3 + 1e-12);
        }
    }

    #[test]
    fn least_squares_is_exact_without_noise(seed in any::<u64>(), n in 1usize..=3, m in 1usize..=2) {
        let t = n + m + 3;
        let (a, b, data) = experiment(seed, n, m, t, 0.0);
        let tol = Tolerances::default();
        prop_assume!(data.persistently_exciting(&tol).unwrap());
        let (ah, bh) = data.least_squares(&tol).unwrap();
        prop_assert!((ah - &a).norm() <= 1e-7 * (1.0 + a.norm()));
        prop_assert!((bh - &b).norm() <= 1e-7 * (1.0 + b.norm()));
    }

    #[test]
    fn true_system_explains_the_data(seed in any::<u64>(), n in 1usize..=3, m in 1usize..=2, t in 2usize..=10) {
        let eps = 0.2;
        let (a, b, data) = experiment(seed, n, m, t, eps);
        let tol = Tolerances::default();
        let phi = build_phi(&NoiseModel::PerSample { eps: eps * eps }, n, t, &tol).unwrap();
        let nq = build_n(&data, &phi, &tol).unwrap();
        prop_assert!(nq.consistent);
        prop_assert!(membership(&system_to_z(&a, &b), &nq.n, SetKind::Nonstrict, &tol).unwrap());
    }

    #[test]
    fn system_z_round_trip(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=3) {
        let mut g = rng(seed);
        let a = gaussian::<f64>(&mut g, n, n);
        let b = gaussian::<f64>(&mut g, n, m);
        let (a2, b2) = z_to_system(&system_to_z(&a, &b), n);
        prop_assert_eq!(a2, a);
        prop_assert_eq!(b2, b);
    }

    #[test]
    fn chi2_quantile_inverts_the_cdf(k in 1usize..=40, p in 0.01f64..0.99) {
        let x = chi2_quantile(k, p).unwrap();
        let cdf = ChiSquared::new(k as f64).unwrap().cdf(x);
        prop_assert!((cdf - p).abs() <= 1e-9);
        let x2 = chi2_quantile(k, (p + 0.005).min(0.995)).unwrap();
        prop_assert!(x2 > x);
    }
}

#[test]
fn chi2_known_values() {
    // Tabulated 95% points.
    for (k, x) in [(1, 3.841458820694124), (2, 5.991464547107979), (10, 18.307038053275146)] {
        assert!((chi2_quantile(k, 0.95).unwrap() - x).abs() < 1e-8);
    }
    assert!(chi2_quantile(0, 0.5).is_err());
    assert!(chi2_quantile(3, 1.0).is_err());
}

#[test]
fn strict_variant_needs_excitation() {
    let tol = Tolerances::default();
    let (_, _, data) = experiment(3, 2, 1, 8, 0.1);
    let phi = build_phi(&NoiseModel::Energy { bound: SymMatrix::identity(2).scale(0.1) }, 2, 8, &tol).unwrap();
    assert!(strict_applicable(&data, &phi, &tol).unwrap());
    // Two samples cannot excite three regressor directions.
    let (_, _, short) = experiment(3, 2, 1, 2, 0.1);
    let phi = build_phi(&NoiseModel::Energy { bound: SymMatrix::identity(2).scale(0.1) }, 2, 2, &tol).unwrap();
    assert!(!strict_applicable(&short, &phi, &tol).unwrap());
}

#[test]
fn design_stabilizes_the_true_system() {
    let tol = Tolerances::default();
    let (a, b, data) = experiment(11, 2, 1, 10, 0.05);
    let phi = build_phi(&NoiseModel::PerSample { eps: 0.05f64.powi(2) }, 2, 10, &tol).unwrap();
    let res = stabilize_full(&data, &phi, &DesignConfig::default()).unwrap().expect("informative data");
    let ak = &a + &b * &res.k;
    let lyap = res.p.as_matrix() - &ak * res.p.as_matrix() * ak.transpose();
    assert!(lyap.symmetric_eigen().eigenvalues.min() > 0.0);
}

#[test]
fn controller_documents_round_trip() {
    let tol = Tolerances::default();
    let (_, _, data) = experiment(11, 2, 1, 10, 0.05);
    let phi = build_phi(&NoiseModel::PerSample { eps: 0.05f64.powi(2) }, 2, 10, &tol).unwrap();
    let res = stabilize_full(&data, &phi, &DesignConfig::default()).unwrap().unwrap();
    let text = res.to_document().to_string();
    let back = StabilizationResult::<f64>::from_document(&Document::parse(&text).unwrap()).unwrap();
    assert_eq!(back.k, res.k);
    assert_eq!(back.p.as_matrix(), res.p.as_matrix());
    assert_eq!(back.method, res.method);
    assert_eq!(back.strict, res.strict);
    assert_eq!(back.beta, res.beta);

    let minimal = Document::parse("P: matrix 1 1\n2\nK: matrix 1 1\n-0.5\n").unwrap();
    let r = StabilizationResult::<f64>::from_document(&minimal).unwrap();
    assert_eq!(r.l[(0, 0)], -1.0);
    assert!(r.beta.is_none());
}

#[test]
fn experiment_documents_round_trip() {
    let (_, _, data) = experiment(2, 3, 2, 5, 0.1);
    let back = ExperimentData::<f64>::from_document(&Document::parse(&data.to_document().to_string()).unwrap()).unwrap();
    assert_eq!(back.states(), data.states());
    assert_eq!(back.inputs(), data.inputs());
}

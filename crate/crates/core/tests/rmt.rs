use freeconv::rmt::{haar_matrix, validate, Ensemble, TrialConfig};
use freeconv::spectral::{density_grid, Problem};
use freeconv::{build_measure, MeasureSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn seeded_runs_repeat_exactly() {
    let sc = build_measure(&MeasureSpec::semicircle(1.0)).unwrap();
    let problem = Problem::pair(&sc, &sc).unwrap();
    let dg = density_grid(&problem, (-3.5, 3.5), 701).unwrap();
    for ensemble in [Ensemble::Orthogonal, Ensemble::Unitary] {
        let cfg = TrialConfig { matrix_size: 80, trials: 4, seed: 31, ensemble };
        let first = validate(&sc, &sc, &cfg, &dg, None).unwrap();
        let second = validate(&sc, &sc, &cfg, &dg, None).unwrap();
        assert_eq!(first, second);
        assert!(first.trace_error <= 1e-8 * 80.0);
        let other = validate(&sc, &sc, &TrialConfig { seed: 32, ..cfg }, &dg, None).unwrap();
        assert_ne!(first.ks_distance, other.ks_distance);
    }
}

#[test]
fn tiny_configuration_reports() {
    let sc = build_measure(&MeasureSpec::semicircle(1.0)).unwrap();
    let problem = Problem::pair(&sc, &sc).unwrap();
    let dg = density_grid(&problem, (-3.5, 3.5), 201).unwrap();
    let cfg = TrialConfig { matrix_size: 2, trials: 1, seed: 0, ensemble: Ensemble::Unitary };
    let report = validate(&sc, &sc, &cfg, &dg, None).unwrap();
    assert_eq!(report.eigenvalues, 2);
    let bad = TrialConfig { matrix_size: 1, ..cfg };
    assert!(validate(&sc, &sc, &bad, &dg, None).is_err());
}

#[test]
fn spectrum_outside_window_is_an_error() {
    let sc = build_measure(&MeasureSpec::semicircle(1.0)).unwrap();
    let problem = Problem::pair(&sc, &sc).unwrap();
    let dg = density_grid(&problem, (-3.0, 2.0), 201).unwrap();
    let cfg = TrialConfig { matrix_size: 100, trials: 1, seed: 0, ensemble: Ensemble::Orthogonal };
    assert!(validate(&sc, &sc, &cfg, &dg, None).is_err());
}

#[test]
fn orthogonal_draws_are_real_orthonormal() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let q = haar_matrix(40, Ensemble::Orthogonal, &mut rng);
    assert!(q.iter().all(|v| v.im == 0.0));
    let gram = q.adjoint() * &q;
    for i in 0..40 {
        for j in 0..40 {
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((gram[(i, j)].re - expected).abs() < 1e-12);
        }
    }
}

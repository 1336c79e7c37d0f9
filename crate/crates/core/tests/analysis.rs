use freeconv::analysis::{bounds_report, classify_p_sets, gap_zeros, BoundsInput, BoundsKind};
use freeconv::measures::ComponentSpec;
use freeconv::spectral::{density_grid, detect_support, Problem};
use freeconv::transform::evaluate;
use freeconv::{build_measure, Complex64, MeasureSpec, MultiCutMeasure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_measure(rng: &mut ChaCha8Rng, n: usize, lengths: (f64, f64)) -> MultiCutMeasure {
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut x = 0.0;
    let mut components = Vec::new();
    for w in weights {
        let len = rng.random_range(lengths.0..lengths.1);
        components.push(ComponentSpec {
            a: x,
            b: x + len,
            t_minus: rng.random_range(-0.9..0.9),
            t_plus: rng.random_range(-0.9..0.9),
            h: vec![1.0],
            weight: w / total,
        });
        x += len + rng.random_range(0.3..3.0);
    }
    build_measure(&MeasureSpec { components, atoms: vec![], centered: false })
        .unwrap()
        .centered()
        .unwrap()
}

#[test]
fn at_most_one_zero_per_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let n = rng.random_range(2..=4);
        let mu = random_measure(&mut rng, n, (0.3, 2.0));
        let zeros = gap_zeros(&mu);
        let mut changes = 0;
        for pair in mu.components().windows(2) {
            let (a, b) = (pair[0].right_endpoint(), pair[1].left_endpoint());
            let values: Vec<f64> = (1..=256)
                .map(|k| a + (b - a) * k as f64 / 257.0)
                .map(|x| evaluate(&mu, Complex64::new(x, 0.0)).unwrap().m.re)
                .collect();
            let here = values.windows(2).filter(|v| v[0].signum() != v[1].signum()).count();
            assert!(here <= 1);
            assert!(values.windows(2).all(|v| v[1] > v[0]), "m increases across a gap");
            let found = zeros.iter().filter(|&&e| e > a && e < b).count();
            assert_eq!(found, here);
            changes += here;
        }
        assert_eq!(changes, zeros.len());
    }
}

#[test]
fn p_set_criteria_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut members = 0;
    for _ in 0..40 {
        let alpha = random_measure(&mut rng, 3, (0.3, 2.0));
        let beta = random_measure(&mut rng, 2, (0.05, 1.0));
        let sets = classify_p_sets(&alpha, &beta).unwrap();
        for c in sets.alpha.iter().chain(&sets.beta) {
            if (c.criterion - 1.0).abs() > 1e-9 {
                assert_eq!(c.member, c.hat_total_other <= c.hat_atom);
            }
            members += c.member as usize;
        }
    }
    assert!(members > 0, "sample never exercised P-set membership");
}

#[test]
fn multi_cut_upper_bound_below_chain_limit() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let (na, nb) = (rng.random_range(2..=3), rng.random_range(2..=3));
        let alpha = random_measure(&mut rng, na, (0.3, 2.0));
        let beta = random_measure(&mut rng, nb, (0.05, 1.0));
        let problem = Problem::pair(&alpha, &beta).unwrap();
        let dg = density_grid(&problem, problem.default_window(), 601).unwrap();
        let support = detect_support(&dg, &problem).unwrap();
        let input = BoundsInput::Pair { alpha: &alpha, beta: &beta };
        let report = bounds_report(input, &support, Some(BoundsKind::PairMultiCut)).unwrap();
        assert!(report.upper < 2 * na * nb);
        assert!(report.passed(), "{report:?}");
    }
}

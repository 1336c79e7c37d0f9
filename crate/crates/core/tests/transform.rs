use std::f64::consts::PI;

use freeconv::measures::ComponentSpec;
use freeconv::transform::{evaluate, hat_data, hat_density};
use freeconv::{build_measure, Complex64, MeasureSpec, MultiCutMeasure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_measure(rng: &mut ChaCha8Rng) -> MultiCutMeasure {
    let n = rng.random_range(1..=3);
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut x = rng.random_range(-2.0..0.0);
    let mut components = Vec::new();
    for w in weights {
        let len = rng.random_range(0.5..2.0);
        components.push(ComponentSpec {
            a: x,
            b: x + len,
            t_minus: rng.random_range(-0.9..0.9),
            t_plus: rng.random_range(-0.9..0.9),
            h: vec![1.0],
            weight: w / total,
        });
        x += len + rng.random_range(0.5..2.5);
    }
    build_measure(&MeasureSpec { components, atoms: vec![], centered: false }).unwrap()
}

/// Tanh-sinh nodes on `(a, b)` carrying the density of `μ̂_ac`.
fn hat_nodes(mu: &MultiCutMeasure) -> Vec<(f64, f64)> {
    let h = 1.0 / 64.0;
    let mut nodes = Vec::new();
    for c in mu.components() {
        let (a, b) = (c.left_endpoint(), c.right_endpoint());
        let half = 0.5 * (b - a);
        for k in -256..=256 {
            let s = k as f64 * h;
            let u = 0.5 * PI * s.sinh();
            // Distance to the nearer endpoint, formed without cancellation.
            let gap = half / (u.exp() * u.cosh());
            let x = if s < 0.0 { a + half / ((-u).exp() * u.cosh()) } else { b - gap };
            if !(x > a && x < b) || (x - a).min(b - x) < 1e-13 {
                continue;
            }
            let w = h * half * 0.5 * PI * s.cosh() / u.cosh().powi(2);
            nodes.push((x, w * hat_density(mu, x).unwrap()));
        }
    }
    nodes
}

#[test]
fn nevanlinna_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let mu = random_measure(&mut rng);
        let data = hat_data(&mu).unwrap();
        let nodes = hat_nodes(&mu);
        let ac_mass: f64 = nodes.iter().map(|n| n.1).sum();
        let pp_mass: f64 = data.pure_points.iter().map(|p| p.1).sum();
        assert!((ac_mass + pp_mass - data.total_mass).abs() < 1e-8, "μ̂ mass {ac_mass} + {pp_mass} vs {}", data.total_mass);
        let (lo, hi) = mu.hull();
        for _ in 0..100 {
            let w = Complex64::new(rng.random_range(lo - 1.0..hi + 1.0), rng.random_range(0.1..2.0));
            let f = evaluate(&mu, w).unwrap().f().unwrap();
            let mut rhs = w + data.shift;
            for &(loc, mass) in &data.pure_points {
                rhs += mass / (loc - w);
            }
            for &(x, wx) in &nodes {
                rhs += wx / (x - w);
            }
            worst = worst.max((f - rhs).norm());
        }
    }
    assert!(worst <= 1e-8, "Nevanlinna mismatch {worst:e}");
}

#[test]
fn f_increases_imaginary_part() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let mu = random_measure(&mut rng);
        let (lo, hi) = mu.hull();
        for _ in 0..50 {
            let w = Complex64::new(rng.random_range(lo - 2.0..hi + 2.0), 10f64.powf(rng.random_range(-6.0..1.0)));
            let f = evaluate(&mu, w).unwrap().f().unwrap();
            assert!(f.im >= w.im, "Im F = {} < Im w = {}", f.im, w.im);
        }
    }
}

#[test]
fn derivative_matches_differences_in_gaps() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let delta = 1e-5;
    let mut points = 0;
    while points < 100 {
        let mu = random_measure(&mut rng);
        let pieces: Vec<(f64, f64)> = mu.components().iter().map(|c| (c.left_endpoint(), c.right_endpoint())).collect();
        let (lo, hi) = mu.hull();
        let mut gaps = vec![(lo - 3.0, lo - 0.25), (hi + 0.25, hi + 3.0)];
        gaps.extend(pieces.windows(2).map(|p| (p[0].1 + 0.25, p[1].0 - 0.25)));
        for (a, b) in gaps.into_iter().filter(|g| g.1 > g.0) {
            let x = rng.random_range(a..b);
            let m = |y: f64| evaluate(&mu, Complex64::new(y, 0.0)).unwrap().m;
            let fd = (m(x + delta) - m(x - delta)) / (2.0 * delta);
            let exact = evaluate(&mu, Complex64::new(x, 0.0)).unwrap().dm;
            assert!((exact - fd).norm() <= 1e-6, "m' {exact} vs {fd} at {x}");
            points += 1;
        }
    }
}

#[test]
fn real_on_gaps_and_conjugate_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mu = random_measure(&mut rng);
    let (_, hi) = mu.hull();
    let x = hi + 0.7;
    let on_axis = evaluate(&mu, Complex64::new(x, 0.0)).unwrap().m;
    assert_eq!(on_axis.im, 0.0);
    // m(x + iy) and m(x - iy) = conj m(x + iy) average to the real boundary value.
    for y in [1e-3, 1e-5] {
        let up = evaluate(&mu, Complex64::new(x, y)).unwrap().m;
        let down = up.conj();
        let mean = 0.5 * (up + down);
        assert!((mean - on_axis).norm() < 10.0 * y * y / 0.7f64.powi(3));
        assert!(up.im > 0.0);
    }
}

use freeconv::measures::{AtomSpec, ComponentSpec};
use freeconv::{build_measure, MeasureSpec};
use proptest::prelude::*;

fn component_strategy() -> impl Strategy<Value = (f64, f64, f64, f64, f64, f64)> {
    (0.3..3.0f64, 0.2..2.5f64, -0.9..0.9f64, -0.9..0.9f64, 0.0..0.5f64, 0.1..1.0f64)
}

prop_compose! {
    fn spec_strategy()(
        parts in prop::collection::vec(component_strategy(), 1..=3),
        atoms in prop::collection::vec((0.02..0.1f64, 0.2..1.5f64), 0..=2),
    ) -> MeasureSpec {
        let total: f64 = parts.iter().map(|p| p.5).sum();
        let atom_mass: f64 = atoms.iter().map(|a| a.0).sum();
        let mut x = 0.0;
        let mut components = Vec::new();
        for (gap, len, t_minus, t_plus, h1, w) in parts {
            x += gap;
            components.push(ComponentSpec {
                a: x,
                b: x + len,
                t_minus,
                t_plus,
                h: vec![1.0, h1],
                weight: w / total * (1.0 - atom_mass),
            });
            x += len;
        }
        // Atoms to the right of everything, spaced apart.
        let mut ax = x;
        let atoms = atoms
            .into_iter()
            .map(|(mass, gap)| {
                ax += gap;
                AtomSpec { x: ax, mass }
            })
            .collect();
        MeasureSpec { components, atoms, centered: false }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn total_mass_is_one(spec in spec_strategy()) {
        let mu = build_measure(&spec).unwrap();
        prop_assert!((mu.moment(0).unwrap() - 1.0).abs() <= 1e-10);
        prop_assert!((mu.cdf(1e6) - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn quantile_is_monotone(spec in spec_strategy()) {
        let mu = build_measure(&spec).unwrap();
        let mut last = f64::NEG_INFINITY;
        for k in 1..1000 {
            let q = mu.quantile(k as f64 / 1000.0).unwrap();
            prop_assert!(q >= last, "quantile decreased at p = {}", k as f64 / 1000.0);
            last = q;
        }
    }

    #[test]
    fn centering_removes_the_mean(spec in spec_strategy()) {
        let mu = build_measure(&spec).unwrap();
        let centered = mu.centered().unwrap();
        prop_assert!(centered.moment(1).unwrap().abs() <= 1e-10);
        prop_assert!((centered.variance() - mu.variance()).abs() <= 1e-10 * mu.variance().max(1.0));
    }

    #[test]
    fn json_round_trip_is_exact(spec in spec_strategy()) {
        let text = spec.to_json();
        let back = MeasureSpec::from_json(&text).unwrap();
        prop_assert_eq!(&back, &spec);
        let rebuilt = build_measure(&back).unwrap().to_spec();
        prop_assert_eq!(rebuilt, build_measure(&spec).unwrap().to_spec());
    }
}

#[test]
fn quantile_inverts_cdf() {
    let mu = build_measure(&MeasureSpec::semicircle(2.0)).unwrap();
    for p in [0.01, 0.2, 0.5, 0.77, 0.99] {
        let q = mu.quantile(p).unwrap();
        assert!((mu.cdf(q) - p).abs() < 1e-10);
    }
}

#[test]
fn rejects_bad_specs() {
    let base = MeasureSpec::semicircle(1.0);
    let mut spec = base.clone();
    spec.components[0].t_minus = 1.0;
    assert!(build_measure(&spec).is_err());
    let mut spec = base.clone();
    spec.components[0].weight = 0.5;
    assert!(build_measure(&spec).is_err());
    let mut spec = base.clone();
    spec.atoms.push(AtomSpec { x: 2.0, mass: 0.1 });
    spec.components[0].weight = 0.9;
    assert!(build_measure(&spec).is_err(), "atom on an endpoint");
    let mut spec = base;
    spec.centered = true;
    spec.components[0].a = -1.0;
    assert!(build_measure(&spec).is_err(), "claimed centering is checked");
}

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use frolov::cubature::integrate_points;
use frolov::enumeration::{enumerate_points, enumerate_points_brute_force};
use frolov::fooling::{build_fooling, empty_cells, Variant};
use frolov::generator::{FrolovLattice, GeneratorSpec};
use frolov::testfns::{
    linear_combination, make_bump, make_hat, make_spline_kink, predict_rate, Scale, SmoothnessClass, TestFunction,
};

fn catalog(d: usize) -> Vec<TestFunction> {
    vec![make_hat(d), make_bump(d), make_spline_kink(d, 2).unwrap(), make_spline_kink(d, 4).unwrap()]
}

/// Points with at least one coordinate outside `[0,1]`.
fn outside_points(seed: u64, d: usize, count: usize) -> Vec<Vec<f64>> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
            let axis = rng.gen_range(0..d);
            x[axis] = if rng.gen_bool(0.5) { -rng.gen_range(1e-12..3.0) } else { 1.0 + rng.gen_range(1e-12..3.0) };
            x
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn functions_vanish_outside_the_cube(seed in any::<u64>(), d in 1usize..=4) {
        for f in catalog(d) {
            for x in outside_points(seed, d, 32) {
                prop_assert_eq!(f.evaluate(&x), 0.0, "{} at {:?}", f.name, x);
            }
        }
    }

    #[test]
    fn tensor_functions_factor(x in prop::collection::vec(0.0f64..=1.0, 1..=4)) {
        let d = x.len();
        for f in catalog(d) {
            let product: f64 = x.iter().map(|&t| f.evaluate_1d(t).unwrap()).product();
            prop_assert_eq!(f.evaluate(&x), product);
        }
    }

    #[test]
    fn scales_agree_on_the_diagonal(s in 0.05f64..4.0, p in 0.2f64..6.0, d in 1usize..=5) {
        let b = predict_rate(&SmoothnessClass::new(s, p, p, Scale::B).unwrap(), d);
        let f = predict_rate(&SmoothnessClass::new(s, p, p, Scale::F).unwrap(), d);
        match (b, f) {
            (Ok(b), Ok(f)) => prop_assert_eq!(b, f),
            (Err(_), Err(_)) => {}
            (b, f) => prop_assert!(false, "B {:?} vs F {:?}", b, f),
        }
    }

    #[test]
    fn empty_cells_pigeonhole(
        nodes in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 0..80),
        j0 in 1u32..=5,
        j1 in 1u32..=5,
    ) {
        let refs: Vec<&[f64]> = nodes.iter().map(Vec::as_slice).collect();
        let j = [j0, j1];
        let admissible = ((1i64 << j0) - 1) * ((1i64 << j1) - 1);
        let empty = empty_cells(&refs, &j);
        prop_assert!(empty.len() as i64 >= admissible - nodes.len() as i64);
        for k in &empty {
            for x in &nodes {
                let cell: Vec<i64> = x.iter().zip(&j).map(|(&t, &ji)| (t * (1u64 << ji) as f64).floor() as i64).collect();
                prop_assert_ne!(&cell, k);
            }
        }
    }

    #[test]
    fn linearity_on_cached_points(n in 64.0f64..3000.0, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let lat = FrolovLattice::from_spec(GeneratorSpec::standard(2).unwrap(), n).unwrap();
        let pts = enumerate_points(&lat).unwrap();
        let (f, g) = (make_hat(2), make_bump(2));
        let combo = integrate_points(&pts, &linear_combination(a, &f, b, &g).unwrap()).unwrap().value;
        let qf = integrate_points(&pts, &f).unwrap().value;
        let qg = integrate_points(&pts, &g).unwrap().value;
        let expected = a * qf + b * qg;
        prop_assert!((combo - expected).abs() <= 1e-12 * (a.abs() * qf.abs() + b.abs() * qg.abs()).max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fooling_vanishes_at_nodes(n in 40.0f64..1500.0, d in 2usize..=3) {
        let lat = FrolovLattice::from_spec(GeneratorSpec::standard(d).unwrap(), n).unwrap();
        let pts = enumerate_points(&lat).unwrap();
        let nodes: Vec<&[f64]> = pts.points().collect();
        let m = (nodes.len() as f64).log2().ceil() as u32;
        let class = SmoothnessClass::new(2.0, 1.0, f64::INFINITY, Scale::B).unwrap();
        let g = build_fooling(&nodes, &class, Variant::G1, m).unwrap();
        prop_assert!(g.integral > 0.0);
        for x in &nodes {
            prop_assert_eq!(g.evaluate(x), 0.0);
        }
        prop_assert_eq!(integrate_points(&pts, &g.to_test_function()).unwrap().value, 0.0);
    }

    #[test]
    fn enumeration_matches_brute_force(n in 4.0f64..600.0, d in 1usize..=4) {
        let lat = FrolovLattice::from_spec(GeneratorSpec::standard(d).unwrap(), n).unwrap();
        let fast = enumerate_points(&lat).unwrap();
        let slow = enumerate_points_brute_force(&lat, 1e8).unwrap();
        let mut a: Vec<Vec<i64>> = fast.preimages().map(<[i64]>::to_vec).collect();
        let mut b: Vec<Vec<i64>> = slow.preimages().map(<[i64]>::to_vec).collect();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn lattice_invariants_hold(n in 2.0f64..1e7, d in 1usize..=6) {
        let lat = FrolovLattice::from_spec(GeneratorSpec::standard(d).unwrap(), n).unwrap();
        prop_assert!(lat.check_invariants().is_ok());
        prop_assert!(lat.admissible);
    }
}

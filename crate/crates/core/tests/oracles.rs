//! Cubature errors checked against independent computations.

use std::f64::consts::PI;

use frolov::cubature::{geometric_schedule, integrate, run_study};
use frolov::enumeration::{BoxSearch, UpperBound};
use frolov::generator::{FrolovLattice, GeneratorSpec};
use frolov::testfns::make_hat;

/// Fourier transform of `min(x, 1 - x)` on `[0,1]` at frequency `xi`,
/// as `(re, im)`: `e^{-i pi xi} sin^2(pi xi / 2) / (pi xi)^2`.
fn hat_transform(xi: f64) -> (f64, f64) {
    if xi == 0.0 {
        return (0.25, 0.0);
    }
    let a = (PI * xi / 2.0).sin();
    let mag = a * a / (PI * xi).powi(2);
    (mag * (PI * xi).cos(), -mag * (PI * xi).sin())
}

/// `Q_n(f) - I(f) = sum over nonzero dual points of the transform`, truncated
/// to the cube `|z|_inf <= radius`.
fn poisson_error(lattice: &FrolovLattice, radius: f64) -> f64 {
    let d = lattice.d;
    let search = BoxSearch::new(lattice.b_n.clone(), vec![-radius; d], vec![radius; d], UpperBound::Closed).unwrap();
    let mut terms = Vec::new();
    search.for_each(&mut |k, z| {
        if k.iter().all(|&v| v == 0) {
            return;
        }
        let (mut re, mut im) = (1.0, 0.0);
        for &zj in z {
            let (a, b) = hat_transform(zj);
            (re, im) = (re * a - im * b, re * b + im * a);
        }
        terms.push(re);
    });
    terms.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    terms.iter().sum()
}

#[test]
fn hat_error_matches_poisson_summation() {
    for n in [256.0, 1024.0] {
        let lat = FrolovLattice::from_spec(GeneratorSpec::standard(2).unwrap(), n).unwrap();
        let r = integrate(&lat, &make_hat(2)).unwrap();
        let signed = r.value - r.reference;
        let predicted = poisson_error(&lat, 16.0 * n);
        assert!(
            (signed - predicted).abs() <= 1e-3 * signed.abs(),
            "n={n}: measured {signed:e}, Poisson sum {predicted:e}"
        );
    }
}

#[test]
fn hat_error_at_moderate_n() {
    let lat = FrolovLattice::from_spec(GeneratorSpec::standard(2).unwrap(), 16384.0).unwrap();
    let r = integrate(&lat, &make_hat(2)).unwrap();
    assert!(r.abs_error < 5e-6, "{}", r.abs_error);
}

#[test]
fn hat_error_decreases_along_the_schedule() {
    let schedule = geometric_schedule(256.0, 262144.0, 2.0).unwrap();
    let study = run_study(GeneratorSpec::standard(2).unwrap(), &make_hat(2), &schedule).unwrap();
    assert!(study.fit.unwrap().main_rate > 0.0);
}

//! The equal-weight rule `Q_n(f) = (1/n) sum f(x)` and convergence studies.

use rayon::prelude::*;
use serde::Serialize;

use crate::enumeration::{enumerate_points_with, EnumerationConfig, LatticePointSet};
use crate::error::{FrolovError, Result};
use crate::fit::{fit_rate, RateFit};
use crate::generator::{assemble_lattice, build_polynomial, FrolovLattice, GeneratorSpec, PolynomialKind};
use crate::numeric::NeumaierSum;
use crate::testfns::{RatePrediction, SmoothnessClass, TestFunction};

/// Points per partial sum. Fixed so the reduction order does not depend on
/// the thread pool.
pub const SUM_CHUNK: usize = 4096;

/// Smallest `n` included in rate fits.
pub const FIT_MIN_N: f64 = 16.0;

/// Multiple of machine epsilon used by [`resolution_floor`].
pub const RESOLUTION_EPS: f64 = 8.0 * f64::EPSILON;

/// Records needed before a fit is attempted.
pub const FIT_MIN_RECORDS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubatureResult {
    pub n: f64,
    pub point_count: usize,
    /// `Q_n(f)`.
    pub value: f64,
    pub reference: f64,
    pub abs_error: f64,
    /// Errors at or below this level are round-off, not cubature error.
    pub resolution: f64,
}

impl CubatureResult {
    pub fn is_resolved(&self) -> bool {
        self.abs_error > self.resolution
    }
}

/// Round-off resolution of a computed `Q_n(f)`: a few ulps of the integral
/// plus the uncertainty of the reference value.
pub fn resolution_floor(value: f64, reference: f64, reference_error_bound: f64) -> f64 {
    RESOLUTION_EPS * value.abs().max(reference.abs()) + reference_error_bound
}

/// Compensated `sum f(x)` over the point set, in lexicographic preimage order
/// with a fixed chunked reduction.
pub fn raw_sum(points: &LatticePointSet, f: &TestFunction) -> f64 {
    let d = points.dim();
    let flat = points.flat_points();
    if flat.is_empty() {
        return 0.0;
    }
    let partials: Vec<NeumaierSum> =
        flat.par_chunks(SUM_CHUNK * d).map(|chunk| chunk.chunks_exact(d).map(|x| f.evaluate(x)).collect()).collect();
    let mut total = NeumaierSum::new();
    for p in &partials {
        total.merge(p);
    }
    total.value()
}

/// `Q_n(f)` over an enumerated point set.
pub fn integrate_points(points: &LatticePointSet, f: &TestFunction) -> Result<CubatureResult> {
    let lattice = &points.lattice;
    if f.arity != lattice.d {
        return Err(FrolovError::ArityMismatch { function: f.arity, lattice: lattice.d });
    }
    let value = raw_sum(points, f) / lattice.n;
    Ok(CubatureResult {
        n: lattice.n,
        point_count: points.count(),
        value,
        reference: f.reference_integral,
        abs_error: (value - f.reference_integral).abs(),
        resolution: resolution_floor(value, f.reference_integral, f.reference_error_bound),
    })
}

pub fn integrate(lattice: &FrolovLattice, f: &TestFunction) -> Result<CubatureResult> {
    integrate_with(lattice, f, &EnumerationConfig::default())
}

pub fn integrate_with(lattice: &FrolovLattice, f: &TestFunction, config: &EnumerationConfig) -> Result<CubatureResult> {
    if f.arity != lattice.d {
        return Err(FrolovError::ArityMismatch { function: f.arity, lattice: lattice.d });
    }
    integrate_points(&enumerate_points_with(lattice, config)?, f)
}

/// `n_min, n_min r, n_min r^2, ...` up to and including `n_max`.
pub fn geometric_schedule(n_min: f64, n_max: f64, ratio: f64) -> Result<Vec<f64>> {
    if !(n_min >= 1.0 && n_max >= n_min && n_max.is_finite()) {
        return Err(FrolovError::Domain(format!("bad schedule bounds [{n_min}, {n_max}]")));
    }
    if !(ratio >= 2.0 && ratio.is_finite()) {
        return Err(FrolovError::Domain(format!("schedule ratio must be at least 2, got {ratio}")));
    }
    let mut out = Vec::new();
    let mut n = n_min;
    while n <= n_max * (1.0 + 1e-12) {
        out.push(n);
        n *= ratio;
    }
    Ok(out)
}

fn validate_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(FrolovError::Domain("empty n schedule".into()));
    }
    if schedule.iter().any(|&n| !(n >= 1.0 && n.is_finite())) {
        return Err(FrolovError::Domain("schedule entries must be finite and at least 1".into()));
    }
    if schedule.windows(2).any(|w| w[1] < 2.0 * w[0]) {
        return Err(FrolovError::Domain("schedule must grow by a factor of at least 2 per step".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub function: String,
    pub dimension: usize,
    pub kind: PolynomialKind,
    pub class: Option<SmoothnessClass>,
    /// Sorted by `n`.
    pub records: Vec<CubatureResult>,
    pub fit: Option<RateFit>,
    /// Why the fit is missing, when it is.
    pub fit_skipped: Option<String>,
    /// Scales whose error is zero or below round-off resolution; kept in
    /// `records` but left out of the fit.
    pub unresolved_n: Vec<f64>,
    pub prediction: Option<RatePrediction>,
}

impl ConvergenceStudy {
    pub fn fit_points(&self) -> Vec<(f64, f64)> {
        self.records.iter().filter(|r| r.n >= FIT_MIN_N && r.is_resolved()).map(|r| (r.n, r.abs_error)).collect()
    }
}

pub fn run_study(spec: GeneratorSpec, f: &TestFunction, schedule: &[f64]) -> Result<ConvergenceStudy> {
    run_study_with(spec, f, schedule, &EnumerationConfig::default())
}

pub fn run_study_with(
    spec: GeneratorSpec,
    f: &TestFunction,
    schedule: &[f64],
    config: &EnumerationConfig,
) -> Result<ConvergenceStudy> {
    if f.arity != spec.dimension {
        return Err(FrolovError::ArityMismatch { function: f.arity, lattice: spec.dimension });
    }
    validate_schedule(schedule)?;
    let poly = build_polynomial(spec)?;
    let records = schedule
        .iter()
        .map(|&n| integrate_with(&assemble_lattice(&poly, n)?, f, config))
        .collect::<Result<Vec<_>>>()?;
    let prediction = f.prediction().transpose()?;
    let mut study = ConvergenceStudy {
        function: f.name.clone(),
        dimension: spec.dimension,
        kind: spec.kind,
        class: f.declared_class,
        unresolved_n: records.iter().filter(|r| !r.is_resolved()).map(|r| r.n).collect(),
        records,
        fit: None,
        fit_skipped: None,
        prediction,
    };
    let pts = study.fit_points();
    if pts.len() < FIT_MIN_RECORDS {
        study.fit_skipped = Some(format!(
            "{} usable records (n >= {FIT_MIN_N}, error above round-off), need {FIT_MIN_RECORDS}",
            pts.len()
        ));
    } else {
        study.fit = Some(fit_rate(&pts)?);
    }
    Ok(study)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorComparison {
    pub standard: ConvergenceStudy,
    pub chebyshev: ConvergenceStudy,
    /// `(n, err_standard / err_chebyshev)`.
    pub error_ratio: Vec<(f64, f64)>,
}

/// Runs the same study with both polynomial families.
pub fn compare_generators(f: &TestFunction, schedule: &[f64]) -> Result<GeneratorComparison> {
    let d = f.arity;
    if !d.is_power_of_two() {
        return Err(FrolovError::Domain(format!("generator comparison needs a power-of-two dimension, got {d}")));
    }
    let standard = run_study(GeneratorSpec::standard(d)?, f, schedule)?;
    let chebyshev = run_study(GeneratorSpec::chebyshev(d)?, f, schedule)?;
    let error_ratio = standard
        .records
        .iter()
        .zip(&chebyshev.records)
        .map(|(a, b)| (a.n, a.abs_error / b.abs_error))
        .collect();
    Ok(GeneratorComparison { standard, chebyshev, error_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::enumerate_points;
    use crate::testfns::{linear_combination, make_bump, make_hat, zero};

    fn lattice(d: usize, n: f64) -> FrolovLattice {
        FrolovLattice::from_spec(GeneratorSpec::standard(d).unwrap(), n).unwrap()
    }

    #[test]
    fn scalar_hat_by_hand() {
        let r = integrate(&lattice(1, 5.0), &make_hat(1)).unwrap();
        assert_eq!(r.point_count, 5);
        assert!((r.value - 0.24).abs() < 1e-15);
        assert!((r.abs_error - 0.01).abs() < 1e-15);
    }

    #[test]
    fn zero_function() {
        let r = integrate(&lattice(2, 300.0), &zero(2)).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.abs_error, 0.0);
    }

    #[test]
    fn arity_mismatch() {
        assert!(matches!(integrate(&lattice(2, 64.0), &make_hat(3)), Err(FrolovError::ArityMismatch { .. })));
    }

    #[test]
    fn weight_is_one_over_n() {
        let f = make_hat(2);
        let pts = (900..1100)
            .map(|n| enumerate_points(&lattice(2, n as f64)).unwrap())
            .find(|p| p.count() as f64 != p.lattice.n)
            .unwrap();
        let n = pts.lattice.n;
        let r = integrate_points(&pts, &f).unwrap();
        assert_eq!(r.value * n, raw_sum(&pts, &f));
        assert_ne!(r.value, raw_sum(&pts, &f) / r.point_count as f64);
    }

    #[test]
    fn linearity_on_cached_points() {
        let pts = enumerate_points(&lattice(2, 4096.0)).unwrap();
        let (f, g) = (make_hat(2), make_bump(2));
        let h = linear_combination(2.5, &f, -0.75, &g).unwrap();
        let qf = integrate_points(&pts, &f).unwrap().value;
        let qg = integrate_points(&pts, &g).unwrap().value;
        let qh = integrate_points(&pts, &h).unwrap().value;
        let expect = 2.5 * qf - 0.75 * qg;
        assert!((qh - expect).abs() <= 1e-12 * expect.abs());
    }

    #[test]
    fn short_schedule_skips_fit() {
        let s = run_study(GeneratorSpec::standard(2).unwrap(), &make_hat(2), &[256.0, 512.0]).unwrap();
        assert!(s.fit.is_none());
        assert!(s.fit_skipped.is_some());
        assert_eq!(s.prediction.unwrap().main_rate, 2.0);
    }

    #[test]
    fn schedule_checks() {
        assert_eq!(geometric_schedule(256.0, 4096.0, 2.0).unwrap(), vec![256.0, 512.0, 1024.0, 2048.0, 4096.0]);
        assert!(geometric_schedule(256.0, 4096.0, 1.5).is_err());
        assert!(run_study(GeneratorSpec::standard(2).unwrap(), &make_hat(2), &[256.0, 300.0]).is_err());
    }

    #[test]
    fn comparison_needs_power_of_two() {
        assert!(matches!(compare_generators(&make_hat(3), &[64.0, 128.0]), Err(FrolovError::Domain(_))));
    }

    fn cheb(d: usize, n: f64) -> FrolovLattice {
        FrolovLattice::from_spec(GeneratorSpec::chebyshev(d).unwrap(), n).unwrap()
    }

    #[test]
    fn chebyshev_d2_is_an_integer_shift_of_standard() {
        // +-sqrt(2) = (2 +- sqrt(2)) - 2: the Vandermonde rows differ by a
        // unimodular change of basis, so both rules use the same nodes.
        let a = enumerate_points(&lattice(2, 1024.0)).unwrap();
        let b = enumerate_points(&cheb(2, 1024.0)).unwrap();
        assert_eq!(a.count(), b.count());
        let mut pa: Vec<Vec<f64>> = a.points().map(|x| x.to_vec()).collect();
        let mut pb: Vec<Vec<f64>> = b.points().map(|x| x.to_vec()).collect();
        pa.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pb.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (x, y) in pa.iter().zip(&pb) {
            assert!((x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn generators_differ_in_dimension_four() {
        let a = enumerate_points(&lattice(4, 1024.0)).unwrap();
        let b = enumerate_points(&cheb(4, 1024.0)).unwrap();
        let key = |x: &[f64]| x.iter().map(|v| (v * 1e9).round() as i64).collect::<Vec<_>>();
        let sa: std::collections::HashSet<_> = a.points().map(key).collect();
        let sb: std::collections::HashSet<_> = b.points().map(key).collect();
        assert!(sa.intersection(&sb).count() < sa.len() / 2);
    }

    #[test]
    fn resolution_excludes_roundoff() {
        let r = CubatureResult { n: 1.0, point_count: 1, value: 0.25, reference: 0.25 + 1e-17, abs_error: 1e-17, resolution: resolution_floor(0.25, 0.25, 0.0) };
        assert!(!r.is_resolved());
    }
}

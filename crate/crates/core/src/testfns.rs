//! Integrands supported in the unit cube with known integrals, and the rate
//! predictions attached to their declared smoothness classes.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{FrolovError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scale {
    B,
    F,
}

impl FromStr for Scale {
    type Err = FrolovError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "B" | "b" => Ok(Scale::B),
            "F" | "f" => Ok(Scale::F),
            other => Err(FrolovError::Domain(format!("unknown scale '{other}', expected B or F"))),
        }
    }
}

/// Mixed smoothness class `A^s_{p,theta}`. `p` and `theta` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothnessClass {
    pub s: f64,
    pub p: f64,
    pub theta: f64,
    pub scale: Scale,
}

impl fmt::Display for SmoothnessClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}(s={}, p={}, theta={})", self.scale, self.s, self.p, self.theta)
    }
}

impl SmoothnessClass {
    pub fn new(s: f64, p: f64, theta: f64, scale: Scale) -> Result<Self> {
        let c = Self { s, p, theta, scale };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s.is_finite() && self.s > 0.0) {
            return Err(FrolovError::Domain(format!("smoothness must be positive and finite, got {}", self.s)));
        }
        if !(self.p > 0.0) || !(self.theta > 0.0) {
            return Err(FrolovError::Domain(format!(
                "p and theta must lie in (0, inf], got p = {}, theta = {}",
                self.p, self.theta
            )));
        }
        Ok(())
    }

    /// `max(0, 1/p - 1)`.
    pub fn sigma_p(&self) -> f64 {
        (1.0 / self.p - 1.0).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Standard,
    SmallSmoothness,
    SmallSmoothnessLimiting,
    SmallFineIndex,
    QuasiBanach,
    Limiting,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Standard => "standard",
            Regime::SmallSmoothness => "small-smoothness",
            Regime::SmallSmoothnessLimiting => "small-smoothness-limiting",
            Regime::SmallFineIndex => "small-fine-index",
            Regime::QuasiBanach => "quasi-banach",
            Regime::Limiting => "limiting",
        }
    }
}

/// Predicted error `n^{-main_rate} (log n)^{log_exponent} (log log n)^{loglog_exponent}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePrediction {
    pub main_rate: f64,
    pub log_exponent: f64,
    pub loglog_exponent: f64,
    pub regime: Regime,
    /// False when only an upper bound is known.
    pub sharp: bool,
}

impl RatePrediction {
    fn new(main_rate: f64, log_exponent: f64, regime: Regime, sharp: bool) -> Self {
        Self { main_rate, log_exponent, loglog_exponent: 0.0, regime, sharp }
    }

    pub fn envelope(&self, n: f64) -> f64 {
        let l = n.ln();
        n.powf(-self.main_rate) * l.powf(self.log_exponent) * l.ln().powf(self.loglog_exponent)
    }
}

fn unsupported(class: &SmoothnessClass, reason: &str, nearest: &str) -> FrolovError {
    FrolovError::UnsupportedClass { class: class.to_string(), reason: reason.into(), nearest: nearest.into() }
}

/// Worst-case rate of the cubature rule on the class, as far as it is known.
pub fn predict_rate(class: &SmoothnessClass, d: usize) -> Result<RatePrediction> {
    class.validate()?;
    if d == 0 {
        return Err(FrolovError::Domain("dimension must be at least 1".into()));
    }
    let SmoothnessClass { s, p, theta, .. } = *class;
    let dm1 = (d - 1) as f64;
    // F and B coincide on the diagonal p = theta.
    let scale = if p == theta { Scale::B } else { class.scale };
    let inv_p = 1.0 / p;
    let inv_t = 1.0 / theta;

    if s == inv_p {
        return match scale {
            Scale::B if theta <= 1.0 => Ok(RatePrediction::new(1.0 / p.max(1.0), 0.0, Regime::Limiting, true)),
            Scale::F if p < 1.0 => Ok(RatePrediction::new(1.0, 0.0, Regime::Limiting, true)),
            _ => Err(unsupported(
                class,
                "s = 1/p needs theta <= 1 (B) or p < 1 (F) for continuity",
                "limiting with theta <= 1, or standard with s > 1/p",
            )),
        };
    }
    if s < inv_p {
        return Err(unsupported(class, "s < 1/p: the class is not embedded in the continuous functions", "limiting s = 1/p"));
    }

    if p < 1.0 {
        let main = s - inv_p + 1.0;
        return Ok(match scale {
            Scale::B => RatePrediction::new(main, dm1 * (1.0 - inv_t).max(0.0), Regime::QuasiBanach, true),
            Scale::F => RatePrediction::new(main, 0.0, Regime::QuasiBanach, true),
        });
    }

    if scale == Scale::F && p.is_infinite() {
        return Err(unsupported(class, "F-scale needs p < inf", "B-scale with the same parameters"));
    }

    if theta < 1.0 {
        return Ok(match scale {
            Scale::B => RatePrediction::new(s, 0.0, Regime::SmallFineIndex, true),
            Scale::F if s >= 1.0 => RatePrediction::new(s, 0.0, Regime::SmallFineIndex, true),
            Scale::F => RatePrediction::new(s, dm1 * (1.0 - s), Regime::SmallSmoothness, false),
        });
    }

    // p, theta >= 1 and s > 1/p from here on.
    match scale {
        Scale::B => Ok(RatePrediction::new(s, dm1 * (1.0 - inv_t), Regime::Standard, true)),
        Scale::F if s > inv_t => Ok(RatePrediction::new(s, dm1 * (1.0 - inv_t), Regime::Standard, true)),
        Scale::F if s < inv_t => Ok(RatePrediction::new(s, dm1 * (1.0 - s), Regime::SmallSmoothness, false)),
        Scale::F => {
            let mut r = RatePrediction::new(s, dm1 * (1.0 - s), Regime::SmallSmoothnessLimiting, false);
            r.loglog_exponent = 1.0 - s;
            Ok(r)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    TensorProduct,
    AtomSum,
}

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Field = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Evaluator {
    Tensor(Profile),
    Custom(Field),
}

/// An integrand on `[0,1]^d`, zero outside the cube.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    pub arity: usize,
    evaluator: Evaluator,
    pub reference_integral: f64,
    /// Bound on `|reference_integral - true integral|`.
    pub reference_error_bound: f64,
    pub declared_class: Option<SmoothnessClass>,
    pub structure: Structure,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("reference_integral", &self.reference_integral)
            .field("declared_class", &self.declared_class)
            .field("structure", &self.structure)
            .finish()
    }
}

impl TestFunction {
    /// Tensor product `prod_i profile(x_i)` of a profile supported in `[0,1]`.
    pub fn tensor(
        name: impl Into<String>,
        d: usize,
        profile: impl Fn(f64) -> f64 + Send + Sync + 'static,
        integral_1d: f64,
        error_1d: f64,
        declared_class: Option<SmoothnessClass>,
    ) -> Self {
        let di = d as i32;
        // |I^d - J^d| <= d max(I, J)^{d-1} |I - J|
        let err = if d == 0 { 0.0 } else { d as f64 * (integral_1d.abs() + error_1d).powi(di - 1) * error_1d };
        Self {
            name: name.into(),
            arity: d,
            evaluator: Evaluator::Tensor(Arc::new(profile)),
            reference_integral: integral_1d.powi(di),
            reference_error_bound: err,
            declared_class,
            structure: Structure::TensorProduct,
        }
    }

    pub fn custom(
        name: impl Into<String>,
        d: usize,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        reference_integral: f64,
        reference_error_bound: f64,
        declared_class: Option<SmoothnessClass>,
        structure: Structure,
    ) -> Self {
        Self {
            name: name.into(),
            arity: d,
            evaluator: Evaluator::Custom(Arc::new(f)),
            reference_integral,
            reference_error_bound,
            declared_class,
            structure,
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.arity);
        if x.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return 0.0;
        }
        match &self.evaluator {
            Evaluator::Tensor(phi) => x.iter().map(|&t| phi(t)).product(),
            Evaluator::Custom(f) => f(x),
        }
    }

    /// The 1-D factor of a tensor-product function.
    pub fn evaluate_1d(&self, t: f64) -> Option<f64> {
        match &self.evaluator {
            Evaluator::Tensor(phi) if (0.0..=1.0).contains(&t) => Some(phi(t)),
            Evaluator::Tensor(_) => Some(0.0),
            Evaluator::Custom(_) => None,
        }
    }

    pub fn prediction(&self) -> Option<Result<RatePrediction>> {
        self.declared_class.map(|c| predict_rate(&c, self.arity))
    }
}

/// `a f + b g`; both must share the arity.
pub fn linear_combination(a: f64, f: &TestFunction, b: f64, g: &TestFunction) -> Result<TestFunction> {
    if f.arity != g.arity {
        return Err(FrolovError::ArityMismatch { function: g.arity, lattice: f.arity });
    }
    let (f2, g2) = (f.clone(), g.clone());
    Ok(TestFunction::custom(
        format!("{a}*{}+{b}*{}", f.name, g.name),
        f.arity,
        move |x| a * f2.evaluate(x) + b * g2.evaluate(x),
        a * f.reference_integral + b * g.reference_integral,
        a.abs() * f.reference_error_bound + b.abs() * g.reference_error_bound,
        None,
        Structure::AtomSum,
    ))
}

pub fn zero(d: usize) -> TestFunction {
    TestFunction::custom("zero", d, |_| 0.0, 0.0, 0.0, None, Structure::TensorProduct)
}

/// `exp(4 - 1/(t(1-t)))` on `(0,1)`, zero elsewhere. Peak value 1 at `t = 1/2`.
pub fn bump_profile(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    (4.0 - 1.0 / (t * (1.0 - t))).exp()
}

/// `(integral of the bump over [0,1], error estimate)`, computed once.
pub fn bump_integral() -> (f64, f64) {
    static CACHE: OnceLock<(f64, f64)> = OnceLock::new();
    *CACHE.get_or_init(|| {
        let out = quadrature::double_exponential::integrate(bump_profile, 0.0, 1.0, 1e-15);
        (out.integral, out.error_estimate.max(4.0 * f64::EPSILON * out.integral))
    })
}

pub fn make_bump(d: usize) -> TestFunction {
    let (i, e) = bump_integral();
    TestFunction::tensor("bump", d, bump_profile, i, e, None)
}

pub fn hat_profile(t: f64) -> f64 {
    if (0.0..=1.0).contains(&t) {
        t.min(1.0 - t)
    } else {
        0.0
    }
}

pub fn make_hat(d: usize) -> TestFunction {
    let class = SmoothnessClass { s: 2.0, p: 1.0, theta: f64::INFINITY, scale: Scale::B };
    TestFunction::tensor("hat", d, hat_profile, 0.25, 0.0, Some(class))
}

/// Cardinal B-spline of order `k`, supported on `[0, k]`.
pub fn cardinal_bspline(k: usize, t: f64) -> f64 {
    if k == 0 || !(0.0..k as f64).contains(&t) {
        return 0.0;
    }
    let mut b: Vec<f64> = (0..k).map(|i| if (i as f64..i as f64 + 1.0).contains(&t) { 1.0 } else { 0.0 }).collect();
    for r in 2..=k {
        let rf = r as f64;
        for i in 0..=k - r {
            let fi = i as f64;
            b[i] = ((t - fi) * b[i] + (fi + rf - t) * b[i + 1]) / (rf - 1.0);
        }
    }
    b[0]
}

/// `prod_i N_k(k x_i)`.
pub fn make_spline_kink(d: usize, k: usize) -> Result<TestFunction> {
    if k < 2 {
        return Err(FrolovError::Domain(format!("spline order must be at least 2, got {k}")));
    }
    let kf = k as f64;
    let class = SmoothnessClass { s: kf, p: 1.0, theta: f64::INFINITY, scale: Scale::B };
    Ok(TestFunction::tensor(format!("spline:k={k}"), d, move |t| cardinal_bspline(k, kf * t), 1.0 / kf, 0.0, Some(class)))
}

/// `(syntax, description)` for every named family.
pub fn function_catalog() -> Vec<(&'static str, &'static str)> {
    vec![
        ("hat", "prod min(x_i, 1 - x_i); integral 4^-d; declared B^2_{1,inf}"),
        ("bump", "prod exp(4 - 1/(x_i(1 - x_i))); C-infinity, flat at the boundary"),
        ("spline:k=K", "prod N_K(K x_i), cardinal B-spline of order K >= 2; integral K^-d; declared B^K_{1,inf}"),
        ("zero", "the zero function"),
    ]
}

/// Parses `hat`, `bump`, `zero` or `spline:k=K`.
pub fn parse_fn_spec(spec: &str, d: usize) -> Result<TestFunction> {
    let (name, params) = match spec.split_once(':') {
        Some((n, p)) => (n, Some(p)),
        None => (spec, None),
    };
    match (name, params) {
        ("hat", None) => Ok(make_hat(d)),
        ("bump", None) => Ok(make_bump(d)),
        ("zero", None) => Ok(zero(d)),
        ("spline", Some(p)) => {
            let k = p
                .strip_prefix("k=")
                .and_then(|v| v.parse::<usize>().ok())
                .ok_or_else(|| FrolovError::Domain(format!("bad spline parameter '{p}', expected k=<order>")))?;
            make_spline_kink(d, k)
        }
        _ => Err(FrolovError::Domain(format!("unknown function '{spec}'; try `fns --list`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class(s: f64, p: f64, theta: f64, scale: Scale) -> SmoothnessClass {
        SmoothnessClass { s, p, theta, scale }
    }

    #[test]
    fn hat_values_and_integral() {
        let h = make_hat(1);
        assert_eq!(h.evaluate(&[0.5]), 0.5);
        assert_eq!(h.evaluate(&[0.0]), 0.0);
        assert_eq!(h.evaluate(&[1.0]), 0.0);
        assert_eq!(h.reference_integral, 0.25);
        assert_eq!(make_hat(3).reference_integral, 1.0 / 64.0);
    }

    #[test]
    fn bump_peak_and_boundary() {
        assert_eq!(bump_profile(0.5), 1.0);
        assert_eq!(bump_profile(0.0), 0.0);
        assert_eq!(bump_profile(1.0), 0.0);
        assert!(bump_profile(1e-3) < 1e-300);
    }

    #[test]
    fn bump_integral_matches_trapezoid_oracle() {
        // The bump is flat to all orders at both ends, so the trapezoid rule
        // converges faster than any power of the step.
        let m = 20_000;
        let h = 1.0 / m as f64;
        let mut acc = crate::numeric::NeumaierSum::new();
        for i in 1..m {
            acc.add(bump_profile(i as f64 * h));
        }
        let trap = acc.value() * h;
        let (i, e) = bump_integral();
        assert!((i - trap).abs() < 1e-14, "{i} vs {trap}");
        assert!(e <= 1e-14);
        let f = make_bump(3);
        assert!(f.reference_error_bound <= 1e-12);
        assert!((f.reference_integral - i.powi(3)).abs() <= 1e-12 * f.reference_integral);
    }

    /// Truncated power representation of the cardinal B-spline.
    fn bspline_oracle(k: usize, t: f64) -> f64 {
        let mut fact = 1.0;
        for i in 1..k {
            fact *= i as f64;
        }
        let mut binom = 1.0;
        let mut sum = 0.0;
        for i in 0..=k {
            let x = t - i as f64;
            if x > 0.0 {
                sum += if i % 2 == 0 { 1.0 } else { -1.0 } * binom * x.powi(k as i32 - 1);
            }
            binom = binom * (k - i) as f64 / (i + 1) as f64;
        }
        sum / fact
    }

    #[test]
    fn bspline_textbook_values() {
        assert!((cardinal_bspline(3, 1.5) - 0.75).abs() < 1e-15);
        assert!((cardinal_bspline(4, 2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(cardinal_bspline(2, 1.0), 1.0);
        for k in 2..=6 {
            for i in 0..=100 {
                let t = k as f64 * i as f64 / 100.0;
                assert!((cardinal_bspline(k, t) - bspline_oracle(k, t)).abs() < 1e-12, "k = {k}, t = {t}");
            }
        }
    }

    #[test]
    fn spline_integrals() {
        assert_eq!(make_spline_kink(2, 2).unwrap().reference_integral, 0.25);
        assert_eq!(make_spline_kink(1, 3).unwrap().reference_integral, 1.0 / 3.0);
        assert!(matches!(make_spline_kink(2, 1), Err(FrolovError::Domain(_))));
        // unit mass check by midpoint sum
        let m = 200_000;
        let s: f64 = (0..m).map(|i| cardinal_bspline(3, 3.0 * (i as f64 + 0.5) / m as f64)).sum::<f64>() / m as f64;
        assert!((s - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn zero_outside_cube() {
        for f in [make_hat(2), make_bump(2), make_spline_kink(2, 3).unwrap()] {
            for x in [[-0.1, 0.5], [0.5, 1.0000001], [2.0, 2.0], [0.0, 0.0], [1.0, 1.0], [0.0, 1.0]] {
                assert_eq!(f.evaluate(&x), 0.0, "{} at {x:?}", f.name);
            }
        }
    }

    #[test]
    fn parse_specs() {
        assert_eq!(parse_fn_spec("hat", 2).unwrap().name, "hat");
        assert_eq!(parse_fn_spec("spline:k=3", 2).unwrap().name, "spline:k=3");
        assert!(parse_fn_spec("spline:q=3", 2).is_err());
        assert!(parse_fn_spec("gauss", 2).is_err());
    }

    #[test]
    fn rate_examples() {
        let r = predict_rate(&class(2.0, 1.0, f64::INFINITY, Scale::B), 2).unwrap();
        assert_eq!((r.main_rate, r.log_exponent, r.regime), (2.0, 1.0, Regime::Standard));
        let r = predict_rate(&class(0.4, 5.0, 2.0, Scale::F), 3).unwrap();
        assert_eq!(r.regime, Regime::SmallSmoothness);
        assert_eq!(r.main_rate, 0.4);
        assert!((r.log_exponent - 1.2).abs() < 1e-15);
        assert!(matches!(
            predict_rate(&class(0.5, 2.0, 2.0, Scale::B), 2),
            Err(FrolovError::UnsupportedClass { .. })
        ));
    }

    #[test]
    fn rate_limiting_and_quasi_banach() {
        let r = predict_rate(&class(0.5, 2.0, 1.0, Scale::B), 2).unwrap();
        assert_eq!((r.main_rate, r.regime), (0.5, Regime::Limiting));
        let r = predict_rate(&class(2.0, 0.5, 1.0, Scale::B), 2).unwrap();
        assert_eq!((r.main_rate, r.regime), (1.0, Regime::Limiting));
        let r = predict_rate(&class(3.0, 0.5, 4.0, Scale::B), 3).unwrap();
        assert_eq!((r.main_rate, r.log_exponent, r.regime), (2.0, 1.5, Regime::QuasiBanach));
        let r = predict_rate(&class(3.0, 0.5, 4.0, Scale::F), 3).unwrap();
        assert_eq!((r.main_rate, r.log_exponent), (2.0, 0.0));
        let r = predict_rate(&class(0.5, 4.0, 2.0, Scale::F), 2).unwrap();
        assert_eq!(r.regime, Regime::SmallSmoothnessLimiting);
        assert_eq!(r.loglog_exponent, 0.5);
    }

    #[test]
    fn sigma_p_values() {
        assert_eq!(class(1.0, 0.5, 1.0, Scale::B).sigma_p(), 1.0);
        assert_eq!(class(1.0, 2.0, 1.0, Scale::B).sigma_p(), 0.0);
    }
}

//! Generator polynomials, certified real roots, and the scaled Vandermonde
//! lattice `T_n` with its dual `B_n = (T_n^{-1})^T`.
//!
//! Two polynomial families are supported:
//!
//! * `Standard`: `P_d(t) = (t - 1)(t - 3)...(t - (2d - 1)) - 1`.
//! * `ChebyshevType` (`d = 2^l`): `P_d(t) = 2 cos(d arccos(t / 2))`, which is the
//!   monic integer polynomial `C_d` with `C_0 = 2`, `C_1 = t`,
//!   `C_{k+1} = t C_k - C_{k-1}`. Its roots are `2 cos(pi (2i - 1) / (2d))`.
//!
//! Both are irreducible over the rationals with `d` distinct real roots, which is
//! what makes the resulting lattice admissible. Lattices built from arbitrary
//! roots go through [`GeneratorPolynomial::unsafe_custom`] and are flagged.

use serde::{Deserialize, Serialize};

use crate::error::{FrolovError, Result};
use crate::matrix::Matrix;
use crate::numeric::{comp_horner, comp_product, HornerEval};

/// Largest dimension for which root certification in binary64 is supported.
pub const MAX_DIMENSION: usize = 16;

/// Maximum width of a certified root bracket.
pub const ROOT_BRACKET_WIDTH: f64 = 1e-13;

/// Relative residual target: `|P(xi)| <= RESIDUAL_FACTOR * max(1, |xi|^d)`,
/// relaxed to `2 |P'(xi)| ulp(xi)` where that floor is larger.
pub const RESIDUAL_FACTOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolynomialKind {
    Standard,
    #[serde(rename = "chebyshev")]
    ChebyshevType,
}

impl PolynomialKind {
    pub fn name(self) -> &'static str {
        match self {
            PolynomialKind::Standard => "standard",
            PolynomialKind::ChebyshevType => "chebyshev",
        }
    }
}

impl std::str::FromStr for PolynomialKind {
    type Err = FrolovError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(PolynomialKind::Standard),
            "chebyshev" => Ok(PolynomialKind::ChebyshevType),
            other => Err(FrolovError::InvalidSpec(format!("unknown polynomial kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub dimension: usize,
    pub kind: PolynomialKind,
}

impl GeneratorSpec {
    pub fn new(dimension: usize, kind: PolynomialKind) -> Result<Self> {
        let spec = Self { dimension, kind };
        spec.validate()?;
        Ok(spec)
    }

    pub fn standard(dimension: usize) -> Result<Self> {
        Self::new(dimension, PolynomialKind::Standard)
    }

    pub fn chebyshev(dimension: usize) -> Result<Self> {
        Self::new(dimension, PolynomialKind::ChebyshevType)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(FrolovError::InvalidSpec("dimension must be at least 1".into()));
        }
        if self.dimension > MAX_DIMENSION {
            return Err(FrolovError::InvalidSpec(format!(
                "dimension {} exceeds the supported maximum {MAX_DIMENSION}",
                self.dimension
            )));
        }
        if self.kind == PolynomialKind::ChebyshevType && !self.dimension.is_power_of_two() {
            return Err(FrolovError::InvalidSpec(format!(
                "chebyshev-type generator needs a power-of-two dimension, got {}",
                self.dimension
            )));
        }
        Ok(())
    }
}

/// A real root with a bracketing interval on which the polynomial changes sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedRoot {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// `|P(value)|` from compensated evaluation.
    pub residual: f64,
    /// Acceptance threshold for `residual`.
    pub residual_bound: f64,
}

impl CertifiedRoot {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolynomialOrigin {
    Certified(PolynomialKind),
    /// Roots supplied by the caller; no admissibility guarantee.
    UnsafeCustom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorPolynomial {
    pub origin: PolynomialOrigin,
    /// Exact coefficients `c_0 .. c_d` (ascending powers). Empty for custom roots.
    pub coefficients: Vec<i128>,
    /// Ascending roots.
    pub roots: Vec<CertifiedRoot>,
    /// Lower bound on the gap between neighbouring roots.
    pub root_separation: f64,
}

/// Exact expansion of `prod_j (t - (2j - 1)) - 1`.
pub fn standard_coefficients(d: usize) -> Vec<i128> {
    let mut c: Vec<i128> = vec![1];
    for j in 1..=d as i128 {
        let root = 2 * j - 1;
        let mut next = vec![0i128; c.len() + 1];
        for (i, &a) in c.iter().enumerate() {
            next[i + 1] += a;
            next[i] -= root * a;
        }
        c = next;
    }
    c[0] -= 1;
    c
}

/// Exact coefficients of `2 cos(d arccos(t / 2))` via the three-term recurrence.
pub fn chebyshev_coefficients(d: usize) -> Vec<i128> {
    let mut prev: Vec<i128> = vec![2];
    let mut cur: Vec<i128> = vec![0, 1];
    if d == 0 {
        return prev;
    }
    for _ in 1..d {
        let mut next = vec![0i128; cur.len() + 1];
        for (i, &a) in cur.iter().enumerate() {
            next[i + 1] += a;
        }
        for (i, &a) in prev.iter().enumerate() {
            next[i] -= a;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Exact evaluation at an integer point.
pub fn eval_exact(coeffs: &[i128], t: i128) -> i128 {
    coeffs.iter().rev().fold(0i128, |acc, &c| acc * t + c)
}

impl GeneratorPolynomial {
    pub fn degree(&self) -> usize {
        self.roots.len()
    }

    pub fn root_values(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.value).collect()
    }

    pub fn is_certified(&self) -> bool {
        matches!(self.origin, PolynomialOrigin::Certified(_))
    }

    pub fn kind(&self) -> Option<PolynomialKind> {
        match self.origin {
            PolynomialOrigin::Certified(k) => Some(k),
            PolynomialOrigin::UnsafeCustom => None,
        }
    }

    /// Coefficients as `f64`; exact as long as every coefficient is below 2^53.
    pub fn float_coefficients(&self) -> Vec<f64> {
        self.coefficients.iter().map(|&c| c as f64).collect()
    }

    /// Compensated evaluation with a rigorous error bound.
    pub fn evaluate(&self, t: f64) -> HornerEval {
        comp_horner(&self.float_coefficients(), t)
    }

    /// Wraps caller-supplied roots. The roots must be distinct; nothing else is
    /// checked and the lattice built from them carries no admissibility guarantee.
    pub fn unsafe_custom(mut roots: Vec<f64>) -> Result<Self> {
        if roots.is_empty() || roots.len() > MAX_DIMENSION {
            return Err(FrolovError::InvalidSpec(format!(
                "custom roots: need between 1 and {MAX_DIMENSION} roots, got {}",
                roots.len()
            )));
        }
        if roots.iter().any(|r| !r.is_finite()) {
            return Err(FrolovError::InvalidSpec("custom roots must be finite".into()));
        }
        roots.sort_by(f64::total_cmp);
        let separation = min_gap(&roots);
        if separation <= 0.0 {
            return Err(FrolovError::InvalidSpec("custom roots must be distinct".into()));
        }
        Ok(Self {
            origin: PolynomialOrigin::UnsafeCustom,
            coefficients: Vec::new(),
            roots: roots
                .into_iter()
                .map(|r| CertifiedRoot { value: r, lower: r, upper: r, residual: 0.0, residual_bound: 0.0 })
                .collect(),
            root_separation: separation,
        })
    }
}

fn ulp(x: f64) -> f64 {
    let a = x.abs();
    if a == 0.0 {
        return f64::MIN_POSITIVE;
    }
    f64::from_bits(a.to_bits() + 1) - a
}

fn min_gap(sorted: &[f64]) -> f64 {
    sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Builds the generator polynomial for `spec` and certifies its roots.
pub fn build_polynomial(spec: GeneratorSpec) -> Result<GeneratorPolynomial> {
    spec.validate()?;
    let d = spec.dimension;
    let coefficients = match spec.kind {
        PolynomialKind::Standard => standard_coefficients(d),
        PolynomialKind::ChebyshevType => chebyshev_coefficients(d),
    };
    if coefficients.iter().any(|c| c.unsigned_abs() >= 1u128 << 53) {
        return Err(FrolovError::Certification(format!(
            "coefficients of the degree-{d} polynomial are not exactly representable in binary64"
        )));
    }
    let fc: Vec<f64> = coefficients.iter().map(|&c| c as f64).collect();

    let approx = match spec.kind {
        PolynomialKind::Standard => isolate_by_integer_scan(&coefficients, d)?,
        PolynomialKind::ChebyshevType => {
            let mut r: Vec<f64> = (1..=d)
                .map(|i| {
                    2.0 * (std::f64::consts::PI * (2 * i - 1) as f64 / (2 * d) as f64).cos()
                })
                .collect();
            r.sort_by(f64::total_cmp);
            r.into_iter().map(|x| newton_polish(&fc, x)).map(|x| bracket_around(&fc, x)).collect::<Result<Vec<_>>>()?
        }
    };

    if approx.len() != d {
        return Err(FrolovError::Certification(format!(
            "expected {d} real roots, isolated {}",
            approx.len()
        )));
    }

    let mut roots = Vec::with_capacity(d);
    for (lo, hi) in approx {
        roots.push(certify(&fc, lo, hi, d)?);
    }
    roots.sort_by(|a, b| a.value.total_cmp(&b.value));

    let separation = roots
        .windows(2)
        .map(|w| w[1].lower - w[0].upper)
        .fold(f64::INFINITY, f64::min);
    if separation <= 0.0 {
        return Err(FrolovError::Certification("root brackets overlap".into()));
    }

    Ok(GeneratorPolynomial {
        origin: PolynomialOrigin::Certified(spec.kind),
        coefficients,
        roots,
        root_separation: separation,
    })
}

/// Scans integer abscissae with exact arithmetic and returns the brackets of
/// every sign change. An exact integer root is returned as a degenerate bracket.
fn isolate_by_integer_scan(coeffs: &[i128], d: usize) -> Result<Vec<(f64, f64)>> {
    // roots of the standard polynomial lie within one unit of 1, 3, ..., 2d - 1
    let lo = -1i128;
    let hi = 2 * d as i128 + 1;
    let mut out = Vec::with_capacity(d);
    let mut prev = eval_exact(coeffs, lo);
    if prev == 0 {
        return Err(FrolovError::Certification("root at the scan boundary".into()));
    }
    for t in lo + 1..=hi {
        let v = eval_exact(coeffs, t);
        if v == 0 {
            out.push((t as f64, t as f64));
        } else if prev != 0 && (prev < 0) != (v < 0) {
            out.push(((t - 1) as f64, t as f64));
        }
        prev = v;
    }
    Ok(out)
}

fn newton_polish(coeffs: &[f64], mut x: f64) -> f64 {
    let deriv: Vec<f64> = coeffs.iter().enumerate().skip(1).map(|(i, &c)| i as f64 * c).collect();
    for _ in 0..8 {
        let f = comp_horner(coeffs, x).value;
        let df = comp_horner(&deriv, x).value;
        if df == 0.0 {
            break;
        }
        let step = f / df;
        let next = x - step;
        if next == x || !next.is_finite() {
            break;
        }
        x = next;
    }
    x
}

/// Expands a bracket around an approximate root until both endpoints carry
/// certified, opposite signs.
fn bracket_around(coeffs: &[f64], x: f64) -> Result<(f64, f64)> {
    let ev = comp_horner(coeffs, x);
    if ev.value == 0.0 && ev.error_bound == 0.0 {
        return Ok((x, x));
    }
    let mut h = f64::EPSILON * x.abs().max(1.0);
    for _ in 0..60 {
        let a = comp_horner(coeffs, x - h).certain_sign();
        let b = comp_horner(coeffs, x + h).certain_sign();
        if let (Some(sa), Some(sb)) = (a, b) {
            if sa != sb {
                return Ok((x - h, x + h));
            }
        }
        h *= 2.0;
    }
    Err(FrolovError::Certification(format!("could not bracket the root near {x}")))
}

/// Bisects a sign-change bracket down to neighbouring floats (or until the
/// sign can no longer be decided) and checks the residual.
fn certify(coeffs: &[f64], mut lo: f64, mut hi: f64, d: usize) -> Result<CertifiedRoot> {
    let deriv: Vec<f64> = coeffs.iter().enumerate().skip(1).map(|(i, &c)| i as f64 * c).collect();
    // A float root cannot do better than |P'| times its own spacing; roots near
    // 1 with a steep polynomial hit that floor before the relative target.
    let residual_bound = |x: f64| {
        let floor = 2.0 * comp_horner(&deriv, x).value.abs() * ulp(x);
        (RESIDUAL_FACTOR * x.abs().powi(d as i32).max(1.0)).max(floor)
    };
    if lo == hi {
        let ev = comp_horner(coeffs, lo);
        if ev.value != 0.0 {
            return Err(FrolovError::Certification(format!("claimed exact root {lo} has residual {}", ev.value)));
        }
        return Ok(CertifiedRoot { value: lo, lower: lo, upper: hi, residual: 0.0, residual_bound: residual_bound(lo) });
    }
    let sign_lo = comp_horner(coeffs, lo)
        .certain_sign()
        .ok_or_else(|| FrolovError::Certification(format!("undecidable sign at bracket end {lo}")))?;
    let sign_hi = comp_horner(coeffs, hi)
        .certain_sign()
        .ok_or_else(|| FrolovError::Certification(format!("undecidable sign at bracket end {hi}")))?;
    if sign_lo == sign_hi {
        return Err(FrolovError::Certification(format!("no sign change on [{lo}, {hi}]")));
    }
    let mut exact = None;
    loop {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let ev = comp_horner(coeffs, mid);
        if ev.value == 0.0 && ev.error_bound == 0.0 {
            exact = Some(mid);
            break;
        }
        match ev.certain_sign() {
            Some(s) if s == sign_lo => lo = mid,
            Some(_) => hi = mid,
            None => break,
        }
    }
    let (value, lower, upper) = match exact {
        Some(x) => (x, x, x),
        None => {
            let rl = comp_horner(coeffs, lo).value.abs();
            let rh = comp_horner(coeffs, hi).value.abs();
            let v = if rl <= rh { lo } else { hi };
            (v, lo, hi)
        }
    };
    let residual = comp_horner(coeffs, value).value.abs();
    let bound = residual_bound(value);
    if upper - lower > ROOT_BRACKET_WIDTH {
        return Err(FrolovError::Certification(format!(
            "root bracket [{lower}, {upper}] wider than {ROOT_BRACKET_WIDTH:e}"
        )));
    }
    if residual > bound {
        return Err(FrolovError::Certification(format!(
            "residual {residual:e} at root {value} exceeds {bound:e}"
        )));
    }
    Ok(CertifiedRoot { value, lower, upper, residual, residual_bound: bound })
}

/// The scaled lattice `X_n = T_n Z^d` together with its dual generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrolovLattice {
    pub d: usize,
    pub n: f64,
    pub roots: Vec<f64>,
    pub t_tilde: Matrix,
    pub det_t_tilde: f64,
    /// `(n det T~)^{-1/d}`.
    pub scale: f64,
    pub t_n: Matrix,
    pub b_n: Matrix,
    /// False for lattices built from unchecked custom roots.
    pub admissible: bool,
}

/// Residuals of the algebraic identities every lattice must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeDiagnostics {
    /// `|n det(T_n) - 1|`, determinant from LU.
    pub det_t_n_residual: f64,
    /// `|det(B_n) / n - 1|`, determinant from LU.
    pub det_b_n_residual: f64,
    /// `max |T_n^T B_n - I|`.
    pub identity_residual: f64,
    /// `max |B_n|`, the scale for `identity_residual`.
    pub b_n_max: f64,
}

impl LatticeDiagnostics {
    pub const TOLERANCE: f64 = 1e-10;

    pub fn passes(&self) -> bool {
        self.det_t_n_residual <= Self::TOLERANCE
            && self.det_b_n_residual <= Self::TOLERANCE
            && self.identity_residual <= Self::TOLERANCE * self.b_n_max
    }
}

/// Vandermonde determinant `prod_{i<j} (x_j - x_i)` with compensated products.
pub fn vandermonde_determinant(nodes: &[f64]) -> f64 {
    let mut diffs = Vec::with_capacity(nodes.len() * nodes.len() / 2);
    for j in 0..nodes.len() {
        for i in 0..j {
            diffs.push(nodes[j] - nodes[i]);
        }
    }
    comp_product(diffs)
}

/// Coefficients (ascending) of the Lagrange basis polynomial for node `i`.
fn lagrange_coefficients(nodes: &[f64], i: usize) -> Vec<f64> {
    let mut c = vec![1.0];
    for (k, &x) in nodes.iter().enumerate() {
        if k == i {
            continue;
        }
        let mut next = vec![0.0; c.len() + 1];
        for (p, &a) in c.iter().enumerate() {
            next[p + 1] += a;
            next[p] -= x * a;
        }
        c = next;
    }
    let denom = comp_product(nodes.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &x)| nodes[i] - x));
    c.into_iter().map(|a| a / denom).collect()
}

/// Assembles `T_n` and `B_n` from the polynomial's roots.
pub fn assemble_lattice(poly: &GeneratorPolynomial, n: f64) -> Result<FrolovLattice> {
    if !(n >= 1.0) || !n.is_finite() {
        return Err(FrolovError::Domain(format!("scale n must be a finite real >= 1, got {n}")));
    }
    let roots = poly.root_values();
    let d = roots.len();
    let t_tilde = Matrix::from_fn(d, |i, j| comp_product(std::iter::repeat(roots[i]).take(j)));
    let det_t_tilde = vandermonde_determinant(&roots);
    let scale = (n * det_t_tilde).powf(-1.0 / d as f64);
    let t_n = t_tilde.scaled(scale);
    // (T~^{-1})_{j,i} is the t^j coefficient of the i-th Lagrange polynomial,
    // so row i of (T~^{-1})^T is exactly that coefficient vector.
    let mut b_n = Matrix::zeros(d);
    for i in 0..d {
        for (j, c) in lagrange_coefficients(&roots, i).into_iter().enumerate() {
            b_n[(i, j)] = c / scale;
        }
    }
    Ok(FrolovLattice { d, n, roots, t_tilde, det_t_tilde, scale, t_n, b_n, admissible: poly.is_certified() })
}

impl FrolovLattice {
    pub fn from_spec(spec: GeneratorSpec, n: f64) -> Result<Self> {
        assemble_lattice(&build_polynomial(spec)?, n)
    }

    /// `T_n^{-1}`, which equals `B_n^T`.
    pub fn t_n_inverse(&self) -> Matrix {
        self.b_n.transpose()
    }

    /// `n / det(T~)`: the lower bound on `prod |z_j|` over nonzero dual points.
    pub fn norm_product_certificate(&self) -> f64 {
        self.n / self.det_t_tilde
    }

    pub fn diagnostics(&self) -> LatticeDiagnostics {
        let prod = self.t_n.transpose().mul(&self.b_n);
        LatticeDiagnostics {
            det_t_n_residual: (self.n * self.t_n.lu_determinant() - 1.0).abs(),
            det_b_n_residual: (self.b_n.lu_determinant() / self.n - 1.0).abs(),
            identity_residual: prod.max_abs_diff(&Matrix::identity(self.d)),
            b_n_max: self.b_n.max_abs(),
        }
    }

    pub fn check_invariants(&self) -> Result<LatticeDiagnostics> {
        let diag = self.diagnostics();
        if diag.passes() {
            Ok(diag)
        } else {
            Err(FrolovError::Certification(format!("lattice invariants violated: {diag:?}")))
        }
    }
}

//! Error-free transformations and compensated accumulation.
//!
//! Everything here is deterministic: results depend only on the order in
//! which values are fed in, never on thread count.

/// `a + b = s + e` exactly (Knuth's TwoSum).
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// `a * b = p + e` exactly, using a fused multiply-add for the error term.
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

/// Kahan–Babuška–Neumaier running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.sum, x);
        self.sum = s;
        self.comp += e;
    }

    /// Merge another partial sum, keeping both compensation terms.
    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.comp += other.comp;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated dot product (Ogita–Rump–Oishi `Dot2`).
pub fn dot2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    let mut c = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let (p, ep) = two_prod(x, y);
        let (t, es) = two_sum(s, p);
        s = t;
        c += ep + es;
    }
    s + c
}

/// Compensated dot product of a real row against an integer vector.
pub fn dot2_int(row: &[f64], v: &[i64]) -> f64 {
    debug_assert_eq!(row.len(), v.len());
    let mut s = 0.0;
    let mut c = 0.0;
    for (&x, &k) in row.iter().zip(v) {
        let (p, ep) = two_prod(x, k as f64);
        let (t, es) = two_sum(s, p);
        s = t;
        c += ep + es;
    }
    s + c
}

/// Compensated product of all factors (Graillat's `CompProd`).
pub fn comp_product(factors: impl IntoIterator<Item = f64>) -> f64 {
    let mut iter = factors.into_iter();
    let Some(first) = iter.next() else {
        return 1.0;
    };
    let mut p = first;
    let mut e = 0.0f64;
    for a in iter {
        let (q, pi) = two_prod(p, a);
        e = e.mul_add(a, pi);
        p = q;
    }
    p + e
}

/// Value of a polynomial together with a rigorous bound on the evaluation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HornerEval {
    pub value: f64,
    pub error_bound: f64,
}

impl HornerEval {
    /// Sign of the exact polynomial value, when it can be decided.
    pub fn certain_sign(&self) -> Option<f64> {
        if self.value.abs() > self.error_bound {
            Some(self.value.signum())
        } else {
            None
        }
    }
}

fn gamma(k: usize) -> f64 {
    let u = f64::EPSILON / 2.0;
    let ku = k as f64 * u;
    ku / (1.0 - ku)
}

/// Compensated Horner scheme (Graillat–Langlois–Louvet) with its a-posteriori
/// error bound. `coeffs[i]` multiplies `x^i`; coefficients must be exactly
/// representable as `f64`.
pub fn comp_horner(coeffs: &[f64], x: f64) -> HornerEval {
    let deg = coeffs.len().saturating_sub(1);
    let Some(&lead) = coeffs.last() else {
        return HornerEval { value: 0.0, error_bound: 0.0 };
    };
    let mut s = lead;
    let mut c = 0.0;
    // running sum of |p_i| + |s_i| terms for the error bound
    let mut abs_err_terms = 0.0;
    for &a in coeffs[..deg].iter().rev() {
        let (p, pi) = two_prod(s, x);
        let (t, sigma) = two_sum(p, a);
        s = t;
        c = c * x + (pi + sigma);
        abs_err_terms = abs_err_terms * x.abs() + (pi.abs() + sigma.abs());
    }
    let u = f64::EPSILON / 2.0;
    let value = s + c;
    let bound = if deg == 0 {
        0.0
    } else {
        (u * value.abs() + (gamma(4 * deg + 2) * abs_err_terms + 2.0 * u * u * value.abs()))
            / (1.0 - 2.0 * (deg as f64 + 1.0) * u)
    };
    HornerEval { value, error_bound: bound }
}

/// Smallest power of two `2^m` with `2^m >= x` (`x >= 1`), returned as `m`.
pub fn ceil_log2(x: f64) -> u32 {
    let mut m = 0u32;
    while 2f64.powi(m as i32) < x {
        m += 1;
    }
    m
}

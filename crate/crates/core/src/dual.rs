//! Measurements on the dual lattice `B_n Z^d`: the smallest coordinate
//! product `prod |z_j|` over a searched region, and the dyadic shell counts
//! `Z_n(m)`.
//!
//! Everything here is a restricted search. Reports carry the region that was
//! searched and say nothing about dual points outside it.

use rayon::prelude::*;
use serde::Serialize;

use crate::enumeration::{BoxSearch, EnumerationConfig, UpperBound};
use crate::error::{FrolovError, Result};
use crate::generator::{FrolovLattice, MAX_DIMENSION};
use crate::numeric::{comp_horner, comp_product};

/// `I_m = { x : C1 floor(2^{m_j - 1}) <= |x_j| < C2 2^{m_j} }`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadicBox {
    pub m: Vec<u32>,
    pub c1: f64,
    pub c2: f64,
}

impl DyadicBox {
    pub fn new(m: Vec<u32>, c1: f64, c2: f64) -> Result<Self> {
        if !(c1 > 0.0 && c1 <= c2 && c2.is_finite()) {
            return Err(FrolovError::Domain(format!("shell constants need 0 < C1 <= C2 < inf, got C1 = {c1}, C2 = {c2}")));
        }
        if m.iter().any(|&mj| mj > 60) {
            return Err(FrolovError::Domain("shell level too large".into()));
        }
        Ok(Self { m, c1, c2 })
    }

    /// Lower bound on `|x_j|`; zero when `m_j = 0`.
    pub fn lower(&self, j: usize) -> f64 {
        match self.m[j] {
            0 => 0.0,
            mj => self.c1 * 2f64.powi(mj as i32 - 1),
        }
    }

    pub fn upper(&self, j: usize) -> f64 {
        self.c2 * 2f64.powi(self.m[j] as i32)
    }

    pub fn level(&self) -> u32 {
        self.m.iter().sum()
    }

    /// Non-strict lower, strict upper, on absolute values.
    pub fn contains(&self, z: &[f64]) -> bool {
        z.iter().enumerate().all(|(j, &x)| {
            let a = x.abs();
            self.lower(j) <= a && a < self.upper(j)
        })
    }
}

/// `|prod_j z_j|` with compensated accumulation.
pub fn norm_product(z: &[f64]) -> f64 {
    comp_product(z.iter().map(|x| x.abs()))
}

fn dual_box_search(lattice: &FrolovLattice, half_widths: &[f64]) -> Result<BoxSearch> {
    let lo = half_widths.iter().map(|w| -w).collect();
    BoxSearch::new(lattice.b_n.clone(), lo, half_widths.to_vec(), UpperBound::Closed)
}

fn check_budget(search: &BoxSearch, lattice: &FrolovLattice, budget: f64) -> Result<()> {
    let est = search.estimated_candidates();
    if !(est <= budget) {
        return Err(FrolovError::BudgetExceeded { n: lattice.n, d: lattice.d, estimate: est, budget });
    }
    Ok(())
}

/// Dual coordinates in trace-dual form. For a monic integer generator `P`
/// with roots `xi_i`, the dual point `B_n k` has coordinates
/// `z_i = q(xi_i) / (scale P'(xi_i))`, where `q` has the integer
/// coefficients `H^{-1} k` and `H` is the Hankel matrix of
/// `e_r = sum_i xi_i^r / P'(xi_i)`. Evaluating `q` at a Newton-corrected
/// root keeps full relative precision in coordinates far smaller than `|k|`,
/// where `B_n k` in binary64 cancels.
#[derive(Debug, Clone)]
struct TraceDual {
    e: Vec<i128>,
    roots: Vec<f64>,
    root_corrections: Vec<f64>,
    inv_denominators: Vec<f64>,
}

impl TraceDual {
    fn new(lattice: &FrolovLattice) -> Option<Self> {
        let d = lattice.d;
        let roots = lattice.roots.clone();
        let mut c = vec![1.0f64];
        for &r in &roots {
            let mut next = vec![0.0; c.len() + 1];
            for (i, &a) in c.iter().enumerate() {
                next[i + 1] += a;
                next[i] -= r * a;
            }
            c = next;
        }
        let mut coeffs = Vec::with_capacity(d + 1);
        for &a in &c {
            let r = a.round();
            if r.abs() >= 2f64.powi(50) || (a - r).abs() > 1e-6 * a.abs().max(1.0) {
                return None;
            }
            coeffs.push(r as i128);
        }
        let cf: Vec<f64> = coeffs.iter().map(|&a| a as f64).collect();

        let mut root_corrections = Vec::with_capacity(d);
        let mut inv_denominators = Vec::with_capacity(d);
        for (i, &x) in roots.iter().enumerate() {
            let dp: f64 = roots.iter().enumerate().filter(|&(m, _)| m != i).map(|(_, &y)| x - y).product();
            let p = comp_horner(&cf, x);
            let scale: f64 = cf.iter().enumerate().map(|(j, a)| a.abs() * x.abs().powi(j as i32)).sum();
            if dp == 0.0 || p.value.abs() > 1e-6 * scale {
                return None;
            }
            root_corrections.push(-p.value / dp);
            inv_denominators.push(1.0 / (lattice.scale * dp));
        }

        let mut e = vec![0i128; 2 * d - 1];
        e[d - 1] = 1;
        for r in d..2 * d - 1 {
            let mut acc = 0i128;
            for t in 0..d {
                acc = acc.checked_sub(coeffs[t].checked_mul(e[r - d + t])?)?;
            }
            e[r] = acc;
        }
        Some(Self { e, roots, root_corrections, inv_denominators })
    }

    /// Writes the coordinates of `B_n k` to `out`; false if the integer
    /// solve leaves the exactly representable range.
    fn coordinates(&self, k: &[i64], out: &mut [f64]) -> bool {
        let d = self.roots.len();
        let limit = 2i128.pow(53);
        let mut gamma = [0i128; MAX_DIMENSION];
        for j in 0..d {
            let idx = d - 1 - j;
            let mut acc = k[j] as i128;
            for m in idx + 1..d {
                match gamma[m].checked_mul(self.e[j + m]).and_then(|v| acc.checked_sub(v)) {
                    Some(v) => acc = v,
                    None => return false,
                }
            }
            if acc.abs() >= limit {
                return false;
            }
            gamma[idx] = acc;
        }
        let mut g = [0.0f64; MAX_DIMENSION];
        for (a, &b) in g.iter_mut().zip(&gamma[..d]) {
            *a = b as f64;
        }
        let g = &g[..d];
        for i in 0..d {
            let x = self.roots[i];
            let value = comp_horner(g, x).value;
            let slope = g.iter().enumerate().skip(1).rev().fold(0.0, |acc, (j, &a)| acc * x + j as f64 * a);
            out[i] = (value + slope * self.root_corrections[i]) * self.inv_denominators[i];
        }
        true
    }
}

/// Lower bound on `prod |z_j|` of the exact dual point from its binary64
/// coordinates, allowing `ERROR_FACTOR * eps * row_sum_i * max|k|` per coordinate.
struct ProductFloor {
    row_sums: Vec<f64>,
}

impl ProductFloor {
    const ERROR_FACTOR: f64 = 1024.0;

    fn new(lattice: &FrolovLattice) -> Self {
        let row_sums = (0..lattice.d).map(|i| lattice.b_n.row(i).iter().map(|b| b.abs()).sum()).collect();
        Self { row_sums }
    }

    fn bound(&self, k: &[i64], z: &[f64]) -> f64 {
        let kmax = k.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) as f64;
        let slack = Self::ERROR_FACTOR * f64::EPSILON * kmax;
        z.iter().zip(&self.row_sums).map(|(x, r)| (x.abs() - slack * r).max(0.0)).product()
    }
}

/// Coordinates of a visited dual point: the trace-dual form when available,
/// otherwise the enumerated binary64 values.
fn refine<'a>(trace: Option<&TraceDual>, k: &[i64], z: &'a [f64], buf: &'a mut [f64]) -> &'a [f64] {
    match trace {
        Some(t) if t.coordinates(k, buf) => buf,
        _ => z,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormProductMin {
    pub min: f64,
    pub argmin: Vec<f64>,
    pub argmin_preimage: Vec<i64>,
    /// Nonzero dual points examined.
    pub points_searched: usize,
}

/// Minimum of `prod |z_j|` over nonzero dual points with `|z|_inf <= radius`.
pub fn min_norm_product(lattice: &FrolovLattice, radius: f64) -> Result<NormProductMin> {
    min_norm_product_with(lattice, radius, &EnumerationConfig::default())
}

pub fn min_norm_product_with(lattice: &FrolovLattice, radius: f64, config: &EnumerationConfig) -> Result<NormProductMin> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(FrolovError::Domain(format!("radius must be positive and finite, got {radius}")));
    }
    let search = dual_box_search(lattice, &vec![radius; lattice.d])?;
    check_budget(&search, lattice, config.budget)?;
    let trace = TraceDual::new(lattice);
    let floor = ProductFloor::new(lattice);
    let mut buf = vec![0.0; lattice.d];
    let mut best: Option<NormProductMin> = None;
    let mut seen = 0usize;
    search.for_each(&mut |k, z| {
        if k.iter().all(|&v| v == 0) {
            return;
        }
        seen += 1;
        if best.as_ref().is_some_and(|b| floor.bound(k, z) > b.min) {
            return;
        }
        let z = refine(trace.as_ref(), k, z, &mut buf);
        let p = norm_product(z);
        if best.as_ref().is_none_or(|b| p < b.min) {
            best = Some(NormProductMin { min: p, argmin: z.to_vec(), argmin_preimage: k.to_vec(), points_searched: 0 });
        }
    });
    let mut best = best.ok_or(FrolovError::RadiusTooSmall { radius })?;
    best.points_searched = seen;
    Ok(best)
}

/// Per-shell result: the count and the smallest product among every nonzero
/// dual point visited in the shell's enclosing box.
#[derive(Debug, Clone, PartialEq)]
struct ShellScan {
    count: u64,
    min_product: Option<(f64, Vec<f64>)>,
}

fn scan_shell(lattice: &FrolovLattice, trace: Option<&TraceDual>, shell: &DyadicBox, budget: f64) -> Result<ShellScan> {
    let widths: Vec<f64> = (0..lattice.d).map(|j| shell.upper(j)).collect();
    let search = dual_box_search(lattice, &widths)?;
    check_budget(&search, lattice, budget)?;
    let mut buf = vec![0.0; lattice.d];
    let mut count = 0u64;
    let mut min_product: Option<(f64, Vec<f64>)> = None;
    search.for_each(&mut |k, z| {
        if k.iter().all(|&v| v == 0) {
            return;
        }
        let z = refine(trace, k, z, &mut buf);
        let p = norm_product(z);
        if min_product.as_ref().is_none_or(|(b, _)| p < *b) {
            min_product = Some((p, z.to_vec()));
        }
        if shell.contains(z) {
            count += 1;
        }
    });
    Ok(ShellScan { count, min_product })
}

/// `Z_n(m)`: nonzero dual points inside `I_m`.
pub fn count_dyadic(lattice: &FrolovLattice, shell: &DyadicBox) -> Result<u64> {
    count_dyadic_with(lattice, shell, &EnumerationConfig::default())
}

pub fn count_dyadic_with(lattice: &FrolovLattice, shell: &DyadicBox, config: &EnumerationConfig) -> Result<u64> {
    if shell.m.len() != lattice.d {
        return Err(FrolovError::Domain(format!("shell has {} levels, lattice dimension is {}", shell.m.len(), lattice.d)));
    }
    Ok(scan_shell(lattice, TraceDual::new(lattice).as_ref(), shell, config.budget)?.count)
}

/// All `m` in `N_0^d` with `|m|_1 <= max_level`, ordered by level then
/// lexicographically.
pub fn shells_up_to(d: usize, max_level: u32) -> Vec<Vec<u32>> {
    fn rec(d: usize, remaining: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() + 1 == d {
            cur.push(remaining);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in 0..=remaining {
            cur.push(v);
            rec(d, remaining - v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for level in 0..=max_level {
        rec(d, level, &mut Vec::with_capacity(d), &mut out);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellCount {
    pub m: Vec<u32>,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeSummary {
    pub d: usize,
    pub n: f64,
    pub roots: Vec<f64>,
    pub det_t_tilde: f64,
    pub admissible: bool,
}

impl From<&FrolovLattice> for LatticeSummary {
    fn from(l: &FrolovLattice) -> Self {
        Self { d: l.d, n: l.n, roots: l.roots.clone(), det_t_tilde: l.det_t_tilde, admissible: l.admissible }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualSpectrumReport {
    pub lattice: LatticeSummary,
    /// Smallest `prod |z_j|` over every nonzero dual point visited (radius box
    /// and all shell enclosing boxes).
    pub min_norm_product: f64,
    pub argmin_point: Vec<f64>,
    /// `n / det(T~)`.
    pub norm_product_certificate: f64,
    pub search_radius: f64,
    pub m_max: u32,
    pub c1: f64,
    pub c2: f64,
    pub z_counts: Vec<ShellCount>,
    /// Smallest `|m|_1` with a nonempty shell, if any was found.
    pub first_occupied_level: Option<u32>,
    /// `log2(n) - r_n` where `r_n` is the largest level whose shells (and all
    /// lower ones) are empty in the searched range.
    pub fitted_c: f64,
    /// Max over nonempty shells of `Z_n(m) n / 2^{|m|_1}`; zero when all are empty.
    pub max_density_ratio: f64,
}

impl DualSpectrumReport {
    /// Every visited nonzero dual point satisfies `prod |z_j| >= (1 - rel) n / det(T~)`.
    pub fn admissibility_holds(&self, rel: f64) -> bool {
        self.min_norm_product >= self.norm_product_certificate * (1.0 - rel)
    }

    /// `Z_n(m) = 0` for every searched shell with `|m|_1 <= log2(n) - fitted_c`.
    pub fn empty_below_threshold(&self) -> bool {
        let threshold = self.lattice.n.log2() - self.fitted_c;
        self.z_counts.iter().filter(|s| s.m.iter().sum::<u32>() as f64 <= threshold + 1e-9).all(|s| s.count == 0)
    }
}

/// Counts every shell with `|m|_1 <= m_max` and searches the radius box.
pub fn spectrum_report(lattice: &FrolovLattice, m_max: u32, radius: f64, c1: f64, c2: f64) -> Result<DualSpectrumReport> {
    spectrum_report_with(lattice, m_max, radius, c1, c2, &EnumerationConfig::default())
}

pub fn spectrum_report_with(
    lattice: &FrolovLattice,
    m_max: u32,
    radius: f64,
    c1: f64,
    c2: f64,
    config: &EnumerationConfig,
) -> Result<DualSpectrumReport> {
    let shells: Vec<DyadicBox> =
        shells_up_to(lattice.d, m_max).into_iter().map(|m| DyadicBox::new(m, c1, c2)).collect::<Result<_>>()?;

    let trace = TraceDual::new(lattice);
    let trace = trace.as_ref();
    let scans: Vec<Result<ShellScan>> = if config.parallel {
        shells.par_iter().map(|s| scan_shell(lattice, trace, s, config.budget)).collect()
    } else {
        shells.iter().map(|s| scan_shell(lattice, trace, s, config.budget)).collect()
    };

    let mut best: Option<(f64, Vec<f64>)> = match min_norm_product_with(lattice, radius, config) {
        Ok(r) => Some((r.min, r.argmin)),
        Err(FrolovError::RadiusTooSmall { .. }) => None,
        Err(e) => return Err(e),
    };
    let mut z_counts = Vec::with_capacity(shells.len());
    for (shell, scan) in shells.iter().zip(scans) {
        let scan = scan?;
        if let Some((p, z)) = scan.min_product {
            if best.as_ref().is_none_or(|(b, _)| p < *b) {
                best = Some((p, z));
            }
        }
        z_counts.push(ShellCount { m: shell.m.clone(), count: scan.count });
    }
    let (min_norm_product, argmin_point) = best.ok_or(FrolovError::RadiusTooSmall { radius })?;

    let log2n = lattice.n.log2();
    let first_occupied_level = z_counts.iter().filter(|s| s.count > 0).map(|s| s.m.iter().sum::<u32>()).min();
    let fitted_c = match first_occupied_level {
        Some(level) => log2n - (level as f64 - 1.0),
        None => log2n - m_max as f64,
    };
    let max_density_ratio = z_counts
        .iter()
        .filter(|s| s.count > 0)
        .map(|s| s.count as f64 * lattice.n / 2f64.powi(s.m.iter().sum::<u32>() as i32))
        .fold(0.0, f64::max);

    Ok(DualSpectrumReport {
        lattice: LatticeSummary::from(lattice),
        min_norm_product,
        argmin_point,
        norm_product_certificate: lattice.norm_product_certificate(),
        search_radius: radius,
        m_max,
        c1,
        c2,
        z_counts,
        first_occupied_level,
        fitted_c,
        max_density_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{assemble_lattice, GeneratorPolynomial, GeneratorSpec};

    fn lattice(d: usize, n: f64) -> FrolovLattice {
        FrolovLattice::from_spec(GeneratorSpec::standard(d).unwrap(), n).unwrap()
    }

    #[test]
    fn scalar_dual_is_multiples_of_n() {
        let lat = lattice(1, 5.0);
        let r = min_norm_product(&lat, 20.0).unwrap();
        assert!((r.min - 5.0).abs() < 1e-12);
        assert_eq!(r.points_searched, 8);
        assert!((lat.norm_product_certificate() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn radius_too_small() {
        let lat = lattice(2, 1024.0);
        assert!(matches!(min_norm_product(&lat, 1.0), Err(FrolovError::RadiusTooSmall { .. })));
    }

    #[test]
    fn scalar_shell_zero_is_empty() {
        let lat = lattice(1, 5.0);
        let shell = DyadicBox::new(vec![0], 1.0, 1.0).unwrap();
        assert_eq!(count_dyadic(&lat, &shell).unwrap(), 0);
        // 5 and -5 sit in [4, 8)
        let shell = DyadicBox::new(vec![3], 1.0, 1.0).unwrap();
        assert_eq!(count_dyadic(&lat, &shell).unwrap(), 2);
    }

    #[test]
    fn scalar_spectrum_fitted_c() {
        // 8Z: the first occupied shell is I_4 = [8, 16), so levels 0..=3 are
        // empty and r_n = 3 = log2(8), i.e. c = 0.
        let lat = lattice(1, 8.0);
        let rep = spectrum_report(&lat, 5, 20.0, 1.0, 1.0).unwrap();
        assert_eq!(rep.first_occupied_level, Some(4));
        assert_eq!(rep.fitted_c, 0.0);
        assert!(rep.empty_below_threshold());
        let counts: Vec<u64> = rep.z_counts.iter().map(|s| s.count).collect();
        // I_4 holds ±8, I_5 holds ±16 and ±24
        assert_eq!(counts, vec![0, 0, 0, 0, 2, 4]);
    }

    #[test]
    fn only_origin_shell_when_m_max_zero() {
        let lat = lattice(2, 4096.0);
        let rep = spectrum_report(&lat, 0, 200.0, 1.0, 1.0).unwrap();
        assert_eq!(rep.z_counts, vec![ShellCount { m: vec![0, 0], count: 0 }]);
    }

    #[test]
    fn shell_membership_policy() {
        let s = DyadicBox::new(vec![0, 2], 1.0, 1.0).unwrap();
        assert!(s.contains(&[0.5, 2.0]));
        assert!(!s.contains(&[0.5, 4.0]));
        assert!(!s.contains(&[1.0, 3.0]));
        assert!(s.contains(&[-0.99, -3.9]));
        assert!(DyadicBox::new(vec![1], 2.0, 1.0).is_err());
    }

    #[test]
    fn shells_enumeration_order() {
        let s = shells_up_to(2, 2);
        assert_eq!(s, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(shells_up_to(3, 4).len(), 35);
    }

    /// Direct oracle: enumerate the whole cube [-2^M, 2^M]^d once and assign each
    /// nonzero point to its unique shell (C1 = C2 = 1).
    fn direct_shell_total(lat: &FrolovLattice, m_max: u32) -> u64 {
        let w = 2f64.powi(m_max as i32);
        let search = dual_box_search(lat, &vec![w; lat.d]).unwrap();
        let mut total = 0;
        search.for_each(&mut |k, z| {
            if k.iter().all(|&v| v == 0) {
                return;
            }
            let level: u32 = z
                .iter()
                .map(|x| {
                    let a = x.abs();
                    if a < 1.0 {
                        0
                    } else {
                        a.log2().floor() as u32 + 1
                    }
                })
                .sum();
            if level <= m_max {
                total += 1;
            }
        });
        total
    }

    #[test]
    fn shell_counts_aggregate_to_direct_count() {
        for (d, n, m_max) in [(2, 256.0, 12), (2, 1000.0, 14), (3, 64.0, 9)] {
            let lat = lattice(d, n);
            let rep = spectrum_report(&lat, m_max, 50.0, 1.0, 1.0).unwrap();
            let sum: u64 = rep.z_counts.iter().map(|s| s.count).sum();
            assert_eq!(sum, direct_shell_total(&lat, m_max), "d = {d}, n = {n}");
            assert!(sum > 0);
        }
    }

    #[test]
    fn admissible_lattice_respects_certificate() {
        let lat = lattice(2, 1024.0);
        let r = min_norm_product(&lat, 64.0 * 32.0).unwrap();
        assert!(r.min >= lat.n / (2.0 * 2f64.sqrt()) * (1.0 - 1e-8), "{}", r.min);
    }

    #[test]
    fn rational_roots_break_admissibility() {
        let poly = GeneratorPolynomial::unsafe_custom(vec![1.0, 2.0]).unwrap();
        let lat = assemble_lattice(&poly, 64.0).unwrap();
        let r = min_norm_product(&lat, 200.0).unwrap();
        assert!(r.min < 1e-9 * lat.n, "integer generator has dual points on the axes: {}", r.min);
    }

    #[test]
    fn doubling_n_doubles_certificate() {
        let a = lattice(3, 512.0);
        let b = lattice(3, 1024.0);
        assert_eq!(b.norm_product_certificate(), 2.0 * a.norm_product_certificate());
    }

    #[test]
    fn fitted_c_non_increasing_in_m_max() {
        let lat = lattice(2, 256.0);
        let mut prev = f64::INFINITY;
        for m_max in [2, 4, 6, 8, 10, 12] {
            let rep = spectrum_report(&lat, m_max, 40.0, 1.0, 1.0).unwrap();
            assert!(rep.fitted_c <= prev);
            prev = rep.fitted_c;
        }
    }

    #[test]
    fn trace_dual_matches_matrix_product() {
        for d in 1..=5 {
            let lat = lattice(d, 4096.0);
            let trace = TraceDual::new(&lat).expect("integer generator");
            let mut out = vec![0.0; d];
            for seed in 0..50i64 {
                let k: Vec<i64> = (0..d as i64).map(|j| (seed * 7 + j * 13) % 11 - 5).collect();
                assert!(trace.coordinates(&k, &mut out));
                let mut z = vec![0.0; d];
                lat.b_n.apply_int(&k, &mut z);
                for (a, b) in out.iter().zip(&z) {
                    assert!((a - b).abs() <= 1e-12 * lat.b_n.max_abs() * 10.0, "d={d} k={k:?}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn trace_dual_resolves_unit_points() {
        // Preimages of unit-norm dual points, identified with a 60-digit
        // evaluation: the coordinate product equals n / det(T~) exactly.
        let cases: [(usize, f64, &[i64]); 3] = [
            (3, 256.0, &[-2961, -15145, -77465]),
            (3, 4096.0, &[-21809, -111551, -570573]),
            (2, 4096.0, &[-2378, -8119]),
        ];
        for (d, n, k) in cases {
            let lat = lattice(d, n);
            let trace = TraceDual::new(&lat).unwrap();
            let mut z = vec![0.0; d];
            assert!(trace.coordinates(k, &mut z));
            let ratio = norm_product(&z) / lat.norm_product_certificate();
            assert!((ratio - 1.0).abs() <= 1e-13, "d={d} n={n}: ratio {ratio}");
        }
    }

    #[test]
    fn trace_dual_rejects_non_integer_generator() {
        let poly = GeneratorPolynomial::unsafe_custom(vec![0.5, 2.25]).unwrap();
        let lat = assemble_lattice(&poly, 64.0).unwrap();
        assert!(TraceDual::new(&lat).is_none());
    }
}

//! Enumeration of lattice points `G v` (`v` integer) inside an axis-parallel box.
//!
//! The search fixes `v_0, v_1, ...` one coordinate at a time. With the first `k`
//! coordinates fixed, the remaining real coordinates range over a polytope (the
//! box section), and the admissible range of `v_k` is the projection of that
//! polytope onto its first axis. The projection is computed exactly from the
//! polytope's vertices: each vertex makes `d - k` box faces active, so the
//! inverses of all `(d - k)`-row submatrices are precomputed once per search.
//! At depth 0 the vertices are the images of the box corners, i.e. the integer
//! bounding box of the preimage parallelepiped.
//!
//! Membership of a leaf is decided on the compensated product `G v` with exact
//! comparisons: `lo <= y` always, and `y < hi` or `y <= hi` depending on
//! [`UpperBound`]. No epsilon snapping is applied anywhere in that test.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FrolovError, Result};
use crate::generator::{FrolovLattice, GeneratorSpec};
use crate::matrix::Matrix;

/// Default cap on the estimated number of search candidates.
pub const DEFAULT_BUDGET: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UpperBound {
    /// `y_i < hi_i`
    Open,
    /// `y_i <= hi_i`
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationConfig {
    pub budget: f64,
    /// Split the outermost coordinate range across the rayon pool.
    pub parallel: bool,
}

impl Default for EnumerationConfig {
    fn default() -> Self {
        Self { budget: DEFAULT_BUDGET, parallel: true }
    }
}

/// One precomputed vertex system: rows `rows` active, inverse of the
/// submatrix over the free columns (row-major, `r x r`).
#[derive(Debug, Clone)]
struct VertexSystem {
    rows: Vec<usize>,
    others: Vec<usize>,
    inverse: Vec<f64>,
}

#[derive(Debug, Clone)]
struct LevelPlan {
    systems: Vec<VertexSystem>,
}

/// Search for all integer `v` with `G v` inside `[lo, hi]` (upper faces per `upper`).
#[derive(Debug, Clone)]
pub struct BoxSearch {
    g: Matrix,
    lo: Vec<f64>,
    hi: Vec<f64>,
    upper: UpperBound,
    levels: Vec<LevelPlan>,
    /// Scale of the box used for the feasibility slack.
    slack: Vec<f64>,
}

fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < r - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, r, &mut Vec::with_capacity(r), &mut out);
    out
}

impl BoxSearch {
    pub fn new(g: Matrix, lo: Vec<f64>, hi: Vec<f64>, upper: UpperBound) -> Result<Self> {
        let d = g.dim();
        if lo.len() != d || hi.len() != d {
            return Err(FrolovError::Domain("box bounds must match the matrix dimension".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(FrolovError::Domain("box bounds must be finite with lo <= hi".into()));
        }
        let mut levels = Vec::with_capacity(d);
        for k in 0..d {
            let r = d - k;
            let mut systems = Vec::new();
            for rows in combinations(d, r) {
                let sub = nalgebra::DMatrix::from_fn(r, r, |a, b| g[(rows[a], k + b)]);
                let Some(inv) = sub.try_inverse() else { continue };
                if inv.iter().any(|x| !x.is_finite()) {
                    continue;
                }
                let inverse = (0..r).flat_map(|a| (0..r).map(move |b| (a, b))).map(|(a, b)| inv[(a, b)]).collect();
                let others = (0..d).filter(|i| !rows.contains(i)).collect();
                systems.push(VertexSystem { rows, others, inverse });
            }
            if systems.is_empty() {
                return Err(FrolovError::Domain("singular lattice generator".into()));
            }
            levels.push(LevelPlan { systems });
        }
        let slack = lo.iter().zip(&hi).map(|(a, b)| 1e-9 * ((b - a) + a.abs().max(b.abs())).max(1e-300)).collect();
        Ok(Self { g, lo, hi, upper, levels, slack })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// Expected number of lattice points in the box (volume over covolume).
    pub fn expected_points(&self) -> f64 {
        let vol: f64 = self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product();
        vol / self.g.lu_determinant().abs()
    }

    /// Integer bounding box of the preimage parallelepiped.
    pub fn bounding_box(&self) -> Option<Vec<(i64, i64)>> {
        let inv = self.g.lu_inverse()?;
        let d = self.dim();
        let mut out = Vec::with_capacity(d);
        for j in 0..d {
            let mut lo = 0.0;
            let mut hi = 0.0;
            for i in 0..d {
                let a = inv[(j, i)] * self.lo[i];
                let b = inv[(j, i)] * self.hi[i];
                lo += a.min(b);
                hi += a.max(b);
            }
            let margin = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
            out.push(((lo - margin).ceil() as i64, (hi + margin).floor() as i64));
        }
        Some(out)
    }

    /// Candidate-count estimate used for the budget guard: expected points plus
    /// the width of the outermost range.
    pub fn estimated_candidates(&self) -> f64 {
        let top = self.range_at(0, &vec![0.0; self.dim()]).map(|(a, b)| (b - a + 1) as f64).unwrap_or(0.0);
        self.expected_points() + top
    }

    #[inline]
    fn accepts(&self, y: &[f64]) -> bool {
        y.iter().enumerate().all(|(i, &v)| {
            self.lo[i] <= v
                && match self.upper {
                    UpperBound::Open => v < self.hi[i],
                    UpperBound::Closed => v <= self.hi[i],
                }
        })
    }

    /// Integer range of coordinate `k` given the offset `c = sum_{j<k} G[:, j] v_j`.
    fn range_at(&self, k: usize, c: &[f64]) -> Option<(i64, i64)> {
        let d = self.dim();
        let r = d - k;
        let mut best_lo = f64::INFINITY;
        let mut best_hi = f64::NEG_INFINITY;
        if r == 1 {
            // interval intersection over every row
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            for i in 0..d {
                let gi = self.g[(i, k)];
                let a = self.lo[i] - c[i];
                let b = self.hi[i] - c[i];
                if gi == 0.0 {
                    if a > self.slack[i] || b < -self.slack[i] {
                        return None;
                    }
                    continue;
                }
                let (p, q) = if gi > 0.0 { (a / gi, b / gi) } else { (b / gi, a / gi) };
                let s = self.slack[i] / gi.abs();
                lo = lo.max(p - s);
                hi = hi.min(q + s);
            }
            if lo > hi {
                return None;
            }
            best_lo = lo;
            best_hi = hi;
        } else {
            let mut bound = vec![0.0; r];
            let mut mu = vec![0.0; r];
            for sys in &self.levels[k].systems {
                for pattern in 0..(1usize << r) {
                    for (a, &row) in sys.rows.iter().enumerate() {
                        let face = if pattern >> a & 1 == 0 { self.lo[row] } else { self.hi[row] };
                        bound[a] = face - c[row];
                    }
                    for a in 0..r {
                        mu[a] = (0..r).map(|b| sys.inverse[a * r + b] * bound[b]).sum();
                    }
                    let feasible = sys.others.iter().all(|&i| {
                        let y: f64 = c[i] + (0..r).map(|b| self.g[(i, k + b)] * mu[b]).sum::<f64>();
                        y >= self.lo[i] - self.slack[i] && y <= self.hi[i] + self.slack[i]
                    });
                    if feasible {
                        best_lo = best_lo.min(mu[0]);
                        best_hi = best_hi.max(mu[0]);
                    }
                }
            }
            if best_lo > best_hi {
                return None;
            }
        }
        let margin = 1e-9 * (1.0 + best_lo.abs().max(best_hi.abs()));
        let a = (best_lo - margin).ceil();
        let b = (best_hi + margin).floor();
        if a > b || !a.is_finite() || !b.is_finite() || a.abs() > 9e15 || b.abs() > 9e15 {
            return None;
        }
        Some((a as i64, b as i64))
    }

    fn descend(&self, k: usize, v: &mut Vec<i64>, c: &mut Vec<f64>, y: &mut [f64], visit: &mut dyn FnMut(&[i64], &[f64])) {
        let d = self.dim();
        if k == d {
            self.g.apply_int(v, y);
            if self.accepts(y) {
                visit(v, y);
            }
            return;
        }
        let Some((a, b)) = self.range_at(k, c) else { return };
        let saved = c.clone();
        for t in a..=b {
            v[k] = t;
            for i in 0..d {
                c[i] = saved[i] + self.g[(i, k)] * t as f64;
            }
            self.descend(k + 1, v, c, y, visit);
        }
        c.copy_from_slice(&saved);
    }

    fn check_budget(&self, budget: f64, n: f64) -> Result<()> {
        let est = self.estimated_candidates();
        if !(est <= budget) {
            return Err(FrolovError::BudgetExceeded { n, d: self.dim(), estimate: est, budget });
        }
        Ok(())
    }

    /// Visits every member in lexicographic order of `v`.
    pub fn for_each(&self, visit: &mut dyn FnMut(&[i64], &[f64])) {
        let d = self.dim();
        let mut v = vec![0i64; d];
        let mut c = vec![0.0; d];
        let mut y = vec![0.0; d];
        self.descend(0, &mut v, &mut c, &mut y, visit);
    }

    /// Collects every member in lexicographic order; the outermost range may be
    /// split across threads, the merge order is fixed.
    pub fn collect(&self, parallel: bool) -> (Vec<i64>, Vec<f64>) {
        let d = self.dim();
        let zero = vec![0.0; d];
        let Some((a, b)) = self.range_at(0, &zero) else { return (Vec::new(), Vec::new()) };
        let slab = |t: i64| {
            let mut v = vec![0i64; d];
            v[0] = t;
            let mut c: Vec<f64> = (0..d).map(|i| self.g[(i, 0)] * t as f64).collect();
            let mut y = vec![0.0; d];
            let mut pre = Vec::new();
            let mut pts = Vec::new();
            self.descend(1, &mut v, &mut c, &mut y, &mut |l, x| {
                pre.extend_from_slice(l);
                pts.extend_from_slice(x);
            });
            (pre, pts)
        };
        let parts: Vec<(Vec<i64>, Vec<f64>)> =
            if parallel { (a..=b).into_par_iter().map(slab).collect() } else { (a..=b).map(slab).collect() };
        let mut pre = Vec::new();
        let mut pts = Vec::new();
        for (l, x) in parts {
            pre.extend(l);
            pts.extend(x);
        }
        (pre, pts)
    }

    /// Reference scan over the full integer bounding box, no tightening.
    pub fn brute_force(&self) -> (Vec<i64>, Vec<f64>) {
        let d = self.dim();
        let Some(bbox) = self.bounding_box() else { return (Vec::new(), Vec::new()) };
        let mut v: Vec<i64> = bbox.iter().map(|r| r.0).collect();
        let mut y = vec![0.0; d];
        let mut pre = Vec::new();
        let mut pts = Vec::new();
        if bbox.iter().any(|r| r.0 > r.1) {
            return (pre, pts);
        }
        loop {
            self.g.apply_int(&v, &mut y);
            if self.accepts(&y) {
                pre.extend_from_slice(&v);
                pts.extend_from_slice(&y);
            }
            // odometer, last coordinate fastest: lexicographic order
            let mut k = d;
            loop {
                if k == 0 {
                    return (pre, pts);
                }
                k -= 1;
                if v[k] < bbox[k].1 {
                    v[k] += 1;
                    for j in k + 1..d {
                        v[j] = bbox[j].0;
                    }
                    break;
                }
            }
        }
    }
}

/// The lattice points `X_n ∩ [0,1)^d`, ordered lexicographically by preimage.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePointSet {
    pub lattice: FrolovLattice,
    preimages: Vec<i64>,
    points: Vec<f64>,
}

impl LatticePointSet {
    pub fn dim(&self) -> usize {
        self.lattice.d
    }

    pub fn count(&self) -> usize {
        if self.dim() == 0 {
            0
        } else {
            self.preimages.len() / self.dim()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.preimages.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.points[i * d..(i + 1) * d]
    }

    pub fn preimage(&self, i: usize) -> &[i64] {
        let d = self.dim();
        &self.preimages[i * d..(i + 1) * d]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.dim())
    }

    pub fn preimages(&self) -> impl ExactSizeIterator<Item = &[i64]> + '_ {
        self.preimages.chunks_exact(self.dim())
    }

    /// Flat row-major coordinate buffer.
    pub fn flat_points(&self) -> &[f64] {
        &self.points
    }
}

fn cube_search(lattice: &FrolovLattice) -> Result<BoxSearch> {
    let d = lattice.d;
    BoxSearch::new(lattice.t_n.clone(), vec![0.0; d], vec![1.0; d], UpperBound::Open)
}

/// All `l` with `T_n l ∈ [0,1)^d`.
pub fn enumerate_points(lattice: &FrolovLattice) -> Result<LatticePointSet> {
    enumerate_points_with(lattice, &EnumerationConfig::default())
}

pub fn enumerate_points_with(lattice: &FrolovLattice, config: &EnumerationConfig) -> Result<LatticePointSet> {
    let search = cube_search(lattice)?;
    search.check_budget(config.budget, lattice.n)?;
    let (preimages, points) = search.collect(config.parallel);
    Ok(LatticePointSet { lattice: lattice.clone(), preimages, points })
}

/// Streams the points without storing them. Returns the count.
pub fn stream_points(
    lattice: &FrolovLattice,
    config: &EnumerationConfig,
    visit: &mut dyn FnMut(&[i64], &[f64]),
) -> Result<usize> {
    let search = cube_search(lattice)?;
    search.check_budget(config.budget, lattice.n)?;
    let mut count = 0usize;
    search.for_each(&mut |l, x| {
        count += 1;
        visit(l, x);
    });
    Ok(count)
}

/// Oracle enumeration: scans the whole integer bounding box.
pub fn enumerate_points_brute_force(lattice: &FrolovLattice, budget: f64) -> Result<LatticePointSet> {
    let search = cube_search(lattice)?;
    let bbox = search
        .bounding_box()
        .ok_or_else(|| FrolovError::Domain("singular lattice generator".into()))?;
    let est: f64 = bbox.iter().map(|(a, b)| (b - a + 1).max(0) as f64).product();
    if !(est <= budget) {
        return Err(FrolovError::BudgetExceeded { n: lattice.n, d: lattice.d, estimate: est, budget });
    }
    let (preimages, points) = search.brute_force();
    Ok(LatticePointSet { lattice: lattice.clone(), preimages, points })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountRecord {
    pub n: f64,
    pub count: usize,
    /// `count - n`
    pub discrepancy: f64,
}

/// Point counts for each scale in `n_list`.
pub fn point_count_profile(spec: GeneratorSpec, n_list: &[f64], config: &EnumerationConfig) -> Result<Vec<CountRecord>> {
    let poly = crate::generator::build_polynomial(spec)?;
    n_list
        .iter()
        .map(|&n| {
            let lattice = crate::generator::assemble_lattice(&poly, n)?;
            let search = cube_search(&lattice)?;
            search.check_budget(config.budget, n)?;
            let mut count = 0usize;
            search.for_each(&mut |_, _| count += 1);
            Ok(CountRecord { n, count, discrepancy: count as f64 - n })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{FrolovLattice, GeneratorSpec};

    #[test]
    fn scalar_lattice_five_points() {
        let lat = FrolovLattice::from_spec(GeneratorSpec::standard(1).unwrap(), 5.0).unwrap();
        let set = enumerate_points(&lat).unwrap();
        assert_eq!(set.count(), 5);
        let xs: Vec<f64> = set.points().map(|p| p[0]).collect();
        let expect = [0.0, 0.2, 0.4, 0.6, 0.8];
        for (a, b) in xs.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let ls: Vec<i64> = set.preimages().map(|l| l[0]).collect();
        assert_eq!(ls, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn d2_matches_brute_force_at_64() {
        let lat = FrolovLattice::from_spec(GeneratorSpec::standard(2).unwrap(), 64.0).unwrap();
        let fast = enumerate_points(&lat).unwrap();
        let slow = enumerate_points_brute_force(&lat, 1e8).unwrap();
        assert_eq!(fast, slow);
        let c = fast.count() as f64;
        assert!((c - 64.0).abs() <= 6.0 * 6.0, "count {c}");
    }

    #[test]
    fn points_are_in_the_unit_cube_and_distinct() {
        let lat = FrolovLattice::from_spec(GeneratorSpec::standard(3).unwrap(), 300.0).unwrap();
        let set = enumerate_points(&lat).unwrap();
        for x in set.points() {
            assert!(x.iter().all(|&v| (0.0..1.0).contains(&v)));
        }
        let pre: Vec<&[i64]> = set.preimages().collect();
        assert!(pre.windows(2).all(|w| w[0] < w[1]), "strictly lexicographic");
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let lat = FrolovLattice::from_spec(GeneratorSpec::standard(2).unwrap(), 5000.0).unwrap();
        let a = enumerate_points_with(&lat, &EnumerationConfig { parallel: false, ..Default::default() }).unwrap();
        let b = enumerate_points_with(&lat, &EnumerationConfig { parallel: true, ..Default::default() }).unwrap();
        assert_eq!(a, b);
        let mut streamed = 0;
        let n = stream_points(&lat, &EnumerationConfig::default(), &mut |_, _| streamed += 1).unwrap();
        assert_eq!(n, a.count());
        assert_eq!(streamed, n);
    }

    #[test]
    fn budget_guard_names_n_and_d() {
        let lat = FrolovLattice::from_spec(GeneratorSpec::standard(2).unwrap(), 1e6).unwrap();
        let err = enumerate_points_with(&lat, &EnumerationConfig { budget: 1000.0, parallel: false }).unwrap_err();
        match err {
            FrolovError::BudgetExceeded { n, d, .. } => {
                assert_eq!(n, 1e6);
                assert_eq!(d, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn scalar_profile_has_zero_discrepancy() {
        let prof = point_count_profile(GeneratorSpec::standard(1).unwrap(), &[5.0, 10.0, 20.0], &EnumerationConfig::default()).unwrap();
        assert_eq!(prof.iter().map(|r| r.count).collect::<Vec<_>>(), vec![5, 10, 20]);
        assert!(prof.iter().all(|r| r.discrepancy == 0.0));
        assert!(point_count_profile(GeneratorSpec::standard(1).unwrap(), &[], &EnumerationConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn closed_box_includes_upper_face() {
        let g = Matrix::identity(2);
        let s = BoxSearch::new(g, vec![-1.0, -1.0], vec![1.0, 1.0], UpperBound::Closed).unwrap();
        let (pre, _) = s.collect(false);
        assert_eq!(pre.len() / 2, 9);
        let g = Matrix::identity(2);
        let s = BoxSearch::new(g, vec![-1.0, -1.0], vec![1.0, 1.0], UpperBound::Open).unwrap();
        assert_eq!(s.collect(false).0.len() / 2, 4);
    }

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
    }
}

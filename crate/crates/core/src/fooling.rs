//! Fooling functions: sums of dyadic bump atoms placed in cells that contain
//! no node, so any rule using those nodes returns zero while the integral
//! decays at the lower-bound rate.

use std::collections::HashSet;
use std::str::FromStr;

use serde::Serialize;

use crate::cubature::{geometric_schedule, integrate_points};
use crate::enumeration::{enumerate_points_with, EnumerationConfig};
use crate::error::{FrolovError, Result};
use crate::fit::{fit_rate, fit_rate_fixed_log, RateFit};
use crate::generator::{assemble_lattice, build_polynomial, GeneratorSpec};
use crate::numeric::{ceil_log2, NeumaierSum};
use crate::testfns::{bump_integral, bump_profile, Scale, SmoothnessClass, Structure, TestFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    G1,
    G2,
    G3,
    G4,
}

impl FromStr for Variant {
    type Err = FrolovError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "g1" => Ok(Variant::G1),
            "g2" => Ok(Variant::G2),
            "g3" => Ok(Variant::G3),
            "g4" => Ok(Variant::G4),
            other => Err(FrolovError::Domain(format!("unknown variant '{other}', expected g1..g4"))),
        }
    }
}

/// The B-scale class whose fooling functions also bound `class`.
///
/// F-scale lower bounds come from embeddings: `B^s_{theta,theta}` when
/// `p >= 1` and `theta >= p`, `B^s_{p,theta}` when `p >= 1` and `theta < p`,
/// and `B^s_{p,min(p,theta)}` when `p < 1`.
pub fn effective_b_class(class: &SmoothnessClass) -> SmoothnessClass {
    let SmoothnessClass { s, p, theta, scale } = *class;
    match scale {
        Scale::B => *class,
        Scale::F if p < 1.0 => SmoothnessClass { s, p, theta: theta.min(p), scale: Scale::B },
        Scale::F if theta >= p => SmoothnessClass { s, p: theta, theta, scale: Scale::B },
        Scale::F => SmoothnessClass { s, p, theta, scale: Scale::B },
    }
}

/// The construction matching the class.
pub fn natural_variant(class: &SmoothnessClass) -> Variant {
    let b = effective_b_class(class);
    match (b.p >= 1.0, b.theta >= 1.0) {
        (true, true) => Variant::G1,
        (true, false) => Variant::G2,
        (false, true) => Variant::G3,
        (false, false) => Variant::G4,
    }
}

fn check_class(class: &SmoothnessClass, variant: Variant) -> Result<SmoothnessClass> {
    class.validate()?;
    if class.s <= class.sigma_p() {
        return Err(FrolovError::Domain(format!(
            "fooling functions need s > sigma_p = {}, got s = {}",
            class.sigma_p(),
            class.s
        )));
    }
    let natural = natural_variant(class);
    if natural != variant {
        return Err(FrolovError::Domain(format!("variant {variant:?} does not match class {class}; use {natural:?}")));
    }
    Ok(effective_b_class(class))
}

/// Admissible cell indices `D_{j_1} x ... x D_{j_d}` (each `k_i` in
/// `1..2^{j_i}`) whose cell holds no node, in lexicographic order.
pub fn empty_cells(nodes: &[&[f64]], j: &[u32]) -> Vec<Vec<i64>> {
    let d = j.len();
    let sides: Vec<i64> = j.iter().map(|&ji| 1i64 << ji).collect();
    if sides.iter().any(|&s| s < 2) {
        return Vec::new();
    }
    let occupied: HashSet<Vec<i64>> = nodes
        .iter()
        .map(|x| x.iter().zip(&sides).map(|(&t, &s)| (t * s as f64).floor() as i64).collect::<Vec<i64>>())
        .filter(|k| k.iter().zip(&sides).all(|(&ki, &s)| ki >= 1 && ki < s))
        .collect();
    let mut out = Vec::new();
    let mut k = vec![1i64; d];
    loop {
        if !occupied.contains(&k) {
            out.push(k.clone());
        }
        let mut axis = d;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            k[axis] += 1;
            if k[axis] < sides[axis] {
                break;
            }
            k[axis] = 1;
        }
    }
}

/// `prod_i phi(2^{j_i} x_i - k_i)`.
pub fn atom(j: &[u32], k: &[i64], x: &[f64]) -> f64 {
    j.iter().zip(k).zip(x).map(|((&ji, &ki), &xi)| bump_profile((1u64 << ji) as f64 * xi - ki as f64)).product()
}

/// All `j` in `N^d` (every entry at least 1) with `|j|_1 = total`.
pub fn positive_levels(d: usize, total: u32) -> Vec<Vec<u32>> {
    crate::dual::shells_up_to(d, total.saturating_sub(d as u32))
        .into_iter()
        .filter(|m| m.iter().sum::<u32>() + d as u32 == total)
        .map(|m| m.into_iter().map(|v| v + 1).collect())
        .collect()
}

/// The level in `N^d` with `|j|_1 = total` whose entries differ by at most one.
pub fn balanced_level(d: usize, total: u32) -> Vec<u32> {
    let base = total / d as u32;
    let extra = (total % d as u32) as usize;
    (0..d).map(|i| base + u32::from(i < extra)).collect()
}

/// Atoms sharing one level `j` and one coefficient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomLevel {
    pub j: Vec<u32>,
    pub coefficient: f64,
    pub cells: Vec<Vec<i64>>,
    #[serde(skip)]
    lookup: HashSet<Vec<i64>>,
}

impl AtomLevel {
    fn new(j: Vec<u32>, coefficient: f64, cells: Vec<Vec<i64>>) -> Self {
        let lookup = cells.iter().cloned().collect();
        Self { j, coefficient, cells, lookup }
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        let k: Vec<i64> = self.j.iter().zip(x).map(|(&ji, &t)| ((1u64 << ji) as f64 * t).floor() as i64).collect();
        if self.lookup.contains(&k) {
            self.coefficient * atom(&self.j, &k, x)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoolingFunction {
    pub variant: Variant,
    pub m: u32,
    pub class: SmoothnessClass,
    pub dimension: usize,
    pub levels: Vec<AtomLevel>,
    /// `sum lambda 2^{-|j|_1} (int phi)^d`.
    pub integral: f64,
    /// Right-hand side of the atomic-decomposition norm bound with `r = s`.
    pub norm_surrogate: f64,
    pub node_count: usize,
}

impl FoolingFunction {
    pub fn atom_count(&self) -> usize {
        self.levels.iter().map(|l| l.cells.len()).sum()
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        if x.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return 0.0;
        }
        self.levels.iter().map(|l| l.evaluate(x)).sum()
    }

    pub fn to_test_function(&self) -> TestFunction {
        let g = self.clone();
        let err = self.integral * 4.0 * f64::EPSILON * self.dimension as f64;
        TestFunction::custom(
            format!("fool:{:?}", self.variant).to_lowercase(),
            self.dimension,
            move |x| g.evaluate(x),
            self.integral,
            err,
            Some(self.class),
            Structure::AtomSum,
        )
    }
}

fn norm_surrogate(levels: &[AtomLevel], b: &SmoothnessClass) -> f64 {
    let (s, p, theta) = (b.s, b.p, b.theta);
    let per_level: Vec<f64> = levels
        .iter()
        .map(|l| {
            let count = l.cells.len() as f64;
            let lp = if p.is_infinite() { l.coefficient.abs() } else { l.coefficient.abs() * count.powf(1.0 / p) };
            let level = l.j.iter().sum::<u32>() as f64;
            2f64.powf(level * (s - if p.is_infinite() { 0.0 } else { 1.0 / p })) * lp
        })
        .collect();
    if theta.is_infinite() {
        per_level.into_iter().fold(0.0, f64::max)
    } else {
        per_level.iter().map(|v| v.powf(theta)).sum::<f64>().powf(1.0 / theta)
    }
}

/// Builds the fooling function of the given variant for `nodes` at level `m`
/// (normalisation constant 1).
pub fn build_fooling(nodes: &[&[f64]], class: &SmoothnessClass, variant: Variant, m: u32) -> Result<FoolingFunction> {
    let b = check_class(class, variant)?;
    let d = match nodes.first() {
        Some(x) => x.len(),
        None => return Err(FrolovError::Domain("node set is empty".into())),
    };
    if nodes.iter().any(|x| x.len() != d) {
        return Err(FrolovError::Domain("nodes have mixed dimensions".into()));
    }
    if m == 0 || m > 40 || 2f64.powi(m as i32) < nodes.len() as f64 {
        return Err(FrolovError::Domain(format!("need 1 <= m <= 40 and 2^m >= {} nodes, got m = {m}", nodes.len())));
    }
    if m + 1 < d as u32 {
        return Err(FrolovError::Domain(format!("level m + 1 = {} is below the dimension {d}", m + 1)));
    }
    let (s, p, theta) = (b.s, b.p, b.theta);
    let mf = m as f64;
    let base = 2f64.powf(-s * mf);
    let log_factor = if theta.is_infinite() { 1.0 } else { mf.powf(-((d - 1) as f64) / theta) };
    let p_factor = if p.is_infinite() { 1.0 } else { 2f64.powf(mf / p) };

    let no_cells = |j: &[u32]| FrolovError::Domain(format!("every admissible cell at level {j:?} holds a node"));
    let levels: Vec<AtomLevel> = match variant {
        Variant::G1 => positive_levels(d, m + 1)
            .into_iter()
            .map(|j| {
                let cells = empty_cells(nodes, &j);
                AtomLevel::new(j, base * log_factor, cells)
            })
            .filter(|l| !l.cells.is_empty())
            .collect(),
        Variant::G2 => {
            let j = balanced_level(d, m + 1);
            let cells = empty_cells(nodes, &j);
            if cells.is_empty() {
                return Err(no_cells(&j));
            }
            vec![AtomLevel::new(j, base, cells)]
        }
        Variant::G3 => positive_levels(d, m + 1)
            .into_iter()
            .filter_map(|j| {
                let first = empty_cells(nodes, &j).into_iter().next()?;
                Some(AtomLevel::new(j, base * log_factor * p_factor, vec![first]))
            })
            .collect(),
        Variant::G4 => {
            let j = balanced_level(d, m + 1);
            let first = empty_cells(nodes, &j).into_iter().next().ok_or_else(|| no_cells(&j))?;
            vec![AtomLevel::new(j, base * p_factor, vec![first])]
        }
    };
    if levels.is_empty() {
        return Err(FrolovError::Domain("no empty cell at any level".into()));
    }

    let (i_phi, _) = bump_integral();
    let atom_mass = i_phi.powi(d as i32) * 2f64.powi(-((m + 1) as i32));
    let integral: NeumaierSum = levels.iter().map(|l| l.coefficient * l.cells.len() as f64 * atom_mass).collect();
    Ok(FoolingFunction {
        variant,
        m,
        class: *class,
        dimension: d,
        norm_surrogate: norm_surrogate(&levels, &b),
        levels,
        integral: integral.value(),
        node_count: nodes.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoolingRecord {
    pub n: f64,
    pub node_count: usize,
    pub m: u32,
    /// `Q_n(g)`; zero by construction.
    pub cubature_value: f64,
    pub integral: f64,
    /// `2^{-m(s - (1/p-1)_+)} m^{(d-1)(1-1/theta)_+}`.
    pub predicted_shape: f64,
    pub norm_surrogate: f64,
    pub atom_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoolingDemo {
    pub variant: Variant,
    pub class: SmoothnessClass,
    pub dimension: usize,
    pub records: Vec<FoolingRecord>,
    /// Main exponent of `integral` against `n`, log exponent held at the
    /// predicted value.
    pub fit: Option<RateFit>,
    /// Unconstrained fit of main and log exponents, for comparison.
    pub joint_fit: Option<RateFit>,
    pub predicted_main_rate: f64,
    pub predicted_log_exponent: f64,
}

pub fn predicted_shape(class: &SmoothnessClass, d: usize, m: u32) -> f64 {
    let (main, log) = predicted_exponents(class, d);
    let mf = m as f64;
    2f64.powf(-mf * main) * mf.powf(log)
}

/// `(s - (1/p - 1)_+, (d-1)(1 - 1/theta)_+)`, for the effective B class.
pub fn predicted_exponents(class: &SmoothnessClass, d: usize) -> (f64, f64) {
    let b = effective_b_class(class);
    (b.s - b.sigma_p(), (d - 1) as f64 * (1.0 - 1.0 / b.theta).max(0.0))
}

/// Builds a fooling function for the nodes of each `n`, checks that the
/// rule returns zero on it, and fits the decay of its integral.
pub fn lower_bound_demo(
    spec: GeneratorSpec,
    class: &SmoothnessClass,
    variant: Variant,
    schedule: &[f64],
    config: &EnumerationConfig,
) -> Result<FoolingDemo> {
    check_class(class, variant)?;
    let poly = build_polynomial(spec)?;
    let d = spec.dimension;
    let mut records = Vec::with_capacity(schedule.len());
    for &n in schedule {
        let lattice = assemble_lattice(&poly, n)?;
        let points = enumerate_points_with(&lattice, config)?;
        let nodes: Vec<&[f64]> = points.points().collect();
        let m = ceil_log2(nodes.len().max(2) as f64);
        let g = build_fooling(&nodes, class, variant, m)?;
        if let Some(x) = nodes.iter().find(|x| g.evaluate(x) != 0.0) {
            return Err(FrolovError::Domain(format!("fooling function is nonzero at node {x:?}")));
        }
        let q = integrate_points(&points, &g.to_test_function())?;
        records.push(FoolingRecord {
            n,
            node_count: nodes.len(),
            m,
            cubature_value: q.value,
            integral: g.integral,
            predicted_shape: predicted_shape(class, d, m),
            norm_surrogate: g.norm_surrogate,
            atom_count: g.atom_count(),
        });
    }
    let (predicted_main_rate, predicted_log_exponent) = predicted_exponents(class, d);
    let data: Vec<(f64, f64)> = records.iter().map(|r| (r.n, r.integral)).collect();
    let (fit, joint_fit) = if data.len() >= crate::cubature::FIT_MIN_RECORDS {
        (Some(fit_rate_fixed_log(&data, predicted_log_exponent)?), Some(fit_rate(&data)?))
    } else {
        (None, None)
    };
    Ok(FoolingDemo {
        variant,
        class: *class,
        dimension: d,
        records,
        fit,
        joint_fit,
        predicted_main_rate,
        predicted_log_exponent,
    })
}

/// Schedule helper matching the study front end.
pub fn fooling_schedule(n_min: f64, n_max: f64, ratio: f64) -> Result<Vec<f64>> {
    geometric_schedule(n_min, n_max, ratio)
}

//! Output formats. Every floating-point number is written with 17
//! significant digits so it parses back to the same binary64 value.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{FrolovError, Result};
use crate::generator::{FrolovLattice, GeneratorPolynomial, GeneratorSpec, LatticeDiagnostics, PolynomialKind};
use crate::matrix::Matrix;

/// `x` with 17 significant digits; `NaN`, `inf` and `-inf` for non-finite values.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// Writes one CSV row.
pub fn write_row<W: Write>(out: &mut W, fields: &[String]) -> Result<()> {
    writeln!(out, "{}", fields.join(","))?;
    Ok(())
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, k: usize| out.extend(std::iter::repeat_n(' ', k));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_i64() || n.is_u64() {
                let _ = write!(out, "{n}");
            } else {
                out.push_str(&fmt_num(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.iter().all(|x| !x.is_array() && !x.is_object()) {
                out.push('[');
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, x, indent);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                pad(out, indent + 2);
                write_value(out, x, indent + 2);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                pad(out, indent + 2);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, x, indent + 2);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

/// Pretty JSON with 17-digit floats and a trailing newline. Non-finite floats
/// become `null`.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

fn null_as_infinity<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

/// Serialized form of a generator run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorDocument {
    pub dimension: usize,
    pub kind: PolynomialKind,
    pub n: f64,
    /// Exact integer coefficients, ascending powers, as decimal strings.
    pub coefficients: Vec<String>,
    pub roots: Vec<RootDocument>,
    /// Infinite (written as `null`) when there is a single root.
    #[serde(deserialize_with = "null_as_infinity")]
    pub root_separation: f64,
    /// How the roots were obtained.
    pub root_reading: String,
    pub lattice: LatticeDocument,
    pub diagnostics: DiagnosticsDocument,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootDocument {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub residual: f64,
    pub residual_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeDocument {
    pub d: usize,
    pub n: f64,
    pub roots: Vec<f64>,
    pub t_tilde: Vec<Vec<f64>>,
    pub det_t_tilde: f64,
    pub scale: f64,
    pub t_n: Vec<Vec<f64>>,
    pub b_n: Vec<Vec<f64>>,
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsDocument {
    pub det_t_n_residual: f64,
    pub det_b_n_residual: f64,
    pub identity_residual: f64,
    pub b_n_max: f64,
    pub passes: bool,
}

impl From<&LatticeDiagnostics> for DiagnosticsDocument {
    fn from(d: &LatticeDiagnostics) -> Self {
        Self {
            det_t_n_residual: d.det_t_n_residual,
            det_b_n_residual: d.det_b_n_residual,
            identity_residual: d.identity_residual,
            b_n_max: d.b_n_max,
            passes: d.passes(),
        }
    }
}

impl From<&FrolovLattice> for LatticeDocument {
    fn from(l: &FrolovLattice) -> Self {
        Self {
            d: l.d,
            n: l.n,
            roots: l.roots.clone(),
            t_tilde: l.t_tilde.rows(),
            det_t_tilde: l.det_t_tilde,
            scale: l.scale,
            t_n: l.t_n.rows(),
            b_n: l.b_n.rows(),
            admissible: l.admissible,
        }
    }
}

impl LatticeDocument {
    /// Rebuilds the lattice and checks its algebraic invariants.
    pub fn to_lattice(&self) -> Result<FrolovLattice> {
        let mat = |rows: &[Vec<f64>], name: &str| {
            Matrix::from_rows(rows)
                .filter(|m| m.dim() == self.d)
                .ok_or_else(|| FrolovError::Domain(format!("matrix {name} is not {0}x{0}", self.d)))
        };
        let lattice = FrolovLattice {
            d: self.d,
            n: self.n,
            roots: self.roots.clone(),
            t_tilde: mat(&self.t_tilde, "t_tilde")?,
            det_t_tilde: self.det_t_tilde,
            scale: self.scale,
            t_n: mat(&self.t_n, "t_n")?,
            b_n: mat(&self.b_n, "b_n")?,
            admissible: self.admissible,
        };
        lattice.check_invariants()?;
        Ok(lattice)
    }
}

pub fn generator_document(spec: GeneratorSpec, poly: &GeneratorPolynomial, lattice: &FrolovLattice) -> GeneratorDocument {
    let root_reading = match spec.kind {
        PolynomialKind::Standard => "sign-change isolation on the integers, then certified bisection",
        PolynomialKind::ChebyshevType => "closed form 2cos(pi(2i-1)/(2d)), Newton-polished, certified bracket",
    };
    GeneratorDocument {
        dimension: spec.dimension,
        kind: spec.kind,
        n: lattice.n,
        coefficients: poly.coefficients.iter().map(|c| c.to_string()).collect(),
        roots: poly
            .roots
            .iter()
            .map(|r| RootDocument {
                value: r.value,
                lower: r.lower,
                upper: r.upper,
                residual: r.residual,
                residual_bound: r.residual_bound,
            })
            .collect(),
        root_separation: poly.root_separation,
        root_reading: root_reading.into(),
        lattice: LatticeDocument::from(lattice),
        diagnostics: DiagnosticsDocument::from(&lattice.diagnostics()),
    }
}

/// Parses a document written by `gen --emit json` back into a lattice.
pub fn lattice_from_generator_json(text: &str) -> Result<FrolovLattice> {
    let doc: GeneratorDocument = serde_json::from_str(text)?;
    doc.lattice.to_lattice()
}

/// Reproducibility record written next to every run's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub argv: Vec<String>,
    pub subcommand: String,
    pub config: Value,
    pub threads: Option<usize>,
    pub budget: f64,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub policies: Policies,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policies {
    pub membership: String,
    pub ordering: String,
    pub summation: String,
    pub shells: String,
    pub number_format: String,
}

impl Default for Policies {
    fn default() -> Self {
        Self {
            membership: "half-open unit cube [0,1)^d, exact comparisons on compensated coordinates".into(),
            ordering: "lexicographic order of integer preimages".into(),
            summation: format!(
                "Neumaier partial sums over fixed chunks of {} points, merged in order; weight 1/n",
                crate::cubature::SUM_CHUNK
            ),
            shells: "C1 floor(2^(m-1)) <= |z_j| < C2 2^m; search boxes closed".into(),
            number_format: "17 significant digits".into(),
        }
    }
}

//! Command-line front end.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cubature::{geometric_schedule, run_study_with};
use crate::dual::spectrum_report_with;
use crate::enumeration::{enumerate_points_with, stream_points, EnumerationConfig, DEFAULT_BUDGET};
use crate::error::{FrolovError, Result};
use crate::fooling::{lower_bound_demo, Variant};
use crate::generator::{assemble_lattice, build_polynomial, GeneratorSpec, PolynomialKind};
use crate::io::{fmt_num, generator_document, to_json_string, write_row, Manifest, Policies};
use crate::testfns::{function_catalog, parse_fn_spec, Scale, SmoothnessClass};

#[derive(Debug, Parser, Serialize)]
#[command(name = "frolov", version, about = "Frolov lattice cubature toolkit")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Cap on estimated enumeration candidates.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    pub budget: f64,
    /// Recorded in the manifest; no subcommand draws random numbers.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Manifest location (default: next to the output, or ./manifest.json).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Generator polynomial, certified roots and lattice matrices.
    Gen(GenArgs),
    /// Lattice points in [0,1)^d as CSV.
    Points(PointsArgs),
    /// Dual-lattice minimum norm product and dyadic shell counts.
    Dual(DualArgs),
    /// Available test functions.
    Fns(FnsArgs),
    /// Convergence study of the cubature rule on a test function.
    Study(StudyArgs),
    /// Fooling-function lower-bound demonstration.
    Fool(FoolArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Standard,
    Chebyshev,
}

impl From<KindArg> for PolynomialKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Standard => PolynomialKind::Standard,
            KindArg::Chebyshev => PolynomialKind::ChebyshevType,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GeneratorArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long, value_enum, default_value_t = KindArg::Standard)]
    pub kind: KindArg,
}

impl GeneratorArgs {
    fn spec(&self) -> Result<GeneratorSpec> {
        GeneratorSpec::new(self.dim, self.kind.into())
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Json,
    Text,
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long)]
    pub n: f64,
    #[arg(long, value_enum, default_value_t = Emit::Json)]
    pub emit: Emit,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PointsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long)]
    pub n: f64,
    /// Write rows as they are found instead of collecting them first.
    #[arg(long)]
    pub stream: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DualArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long)]
    pub n: f64,
    /// Largest shell level |m|_1.
    #[arg(long, default_value_t = 12)]
    pub m_max: u32,
    /// Half-width of the cube searched for the minimum norm product.
    #[arg(long, default_value_t = 64.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c2: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct FnsArgs {
    #[arg(long)]
    pub list: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScheduleArgs {
    #[arg(long, default_value_t = 256.0)]
    pub nmin: f64,
    #[arg(long, default_value_t = 1048576.0)]
    pub nmax: f64,
    #[arg(long, default_value_t = 2.0)]
    pub ratio: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct StudyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub generator: GeneratorArgs,
    /// `hat`, `bump` or `spline:k=K`.
    #[arg(long = "fn")]
    pub function: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub schedule: ScheduleArgs,
    #[arg(long, default_value = "study.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum ScaleArg {
    #[value(name = "B", alias = "b")]
    B,
    #[value(name = "F", alias = "f")]
    F,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    G1,
    G2,
    G3,
    G4,
}

#[derive(Debug, Args, Serialize)]
pub struct FoolArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long)]
    pub s: f64,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub theta: f64,
    #[arg(long, value_enum, default_value_t = ScaleArg::B)]
    pub scale: ScaleArg,
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 64.0)]
    pub nmin: f64,
    #[arg(long, default_value_t = 16384.0)]
    pub nmax: f64,
    #[arg(long, default_value_t = 2.0)]
    pub ratio: f64,
    #[arg(long, default_value = "fool.csv")]
    pub out: PathBuf,
}

/// Parses `argv` (including the program name), runs, and returns the exit code.
pub fn main_with_args(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}{suffix}"))
}

fn manifest_path(cli: &Cli, out: Option<&Path>) -> PathBuf {
    if let Some(m) = &cli.manifest {
        return m.clone();
    }
    match out.and_then(|p| p.parent()) {
        Some(dir) if !dir.as_os_str().is_empty() => dir.join("manifest.json"),
        _ => PathBuf::from("manifest.json"),
    }
}

pub fn run(cli: &Cli, argv: &[String]) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(FrolovError::Domain("--threads must be at least 1".into()));
        }
        // Fails only if the pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    if !(cli.budget > 0.0) {
        return Err(FrolovError::Domain("--budget must be positive".into()));
    }
    let config = EnumerationConfig { budget: cli.budget, parallel: true };
    let (subcommand, out, outputs) = match &cli.command {
        Command::Gen(a) => ("gen", a.out.clone(), run_gen(a)?),
        Command::Points(a) => ("points", a.out.clone(), run_points(a, &config)?),
        Command::Dual(a) => ("dual", a.out.clone(), run_dual(a, &config)?),
        Command::Fns(a) => ("fns", None, run_fns(a)?),
        Command::Study(a) => ("study", Some(a.out.clone()), run_study_cmd(a, &config)?),
        Command::Fool(a) => ("fool", Some(a.out.clone()), run_fool(a, &config)?),
    };
    let manifest = Manifest {
        tool: "frolov".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        argv: argv.to_vec(),
        subcommand: subcommand.into(),
        config: serde_json::to_value(&cli.command)?,
        threads: cli.threads,
        budget: cli.budget,
        seed: cli.seed,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        policies: Policies::default(),
    };
    std::fs::write(manifest_path(cli, out.as_deref()), to_json_string(&manifest)?)?;
    Ok(())
}

fn run_gen(a: &GenArgs) -> Result<Vec<PathBuf>> {
    let spec = a.generator.spec()?;
    let poly = build_polynomial(spec)?;
    let lattice = assemble_lattice(&poly, a.n)?;
    let mut w = open_output(a.out.as_deref())?;
    match a.emit {
        Emit::Json => w.write_all(to_json_string(&generator_document(spec, &poly, &lattice))?.as_bytes())?,
        Emit::Text => {
            writeln!(w, "kind {} dimension {} n {}", spec.kind.name(), spec.dimension, fmt_num(a.n))?;
            let coeffs: Vec<String> = poly.coefficients.iter().map(|c| c.to_string()).collect();
            writeln!(w, "coefficients (ascending) {}", coeffs.join(" "))?;
            for r in &poly.roots {
                writeln!(w, "root {} in [{}, {}] residual {}", fmt_num(r.value), fmt_num(r.lower), fmt_num(r.upper), fmt_num(r.residual))?;
            }
            writeln!(w, "det(T~) {}", fmt_num(lattice.det_t_tilde))?;
            for (name, m) in [("T_n", &lattice.t_n), ("B_n", &lattice.b_n)] {
                writeln!(w, "{name}")?;
                for row in m.rows() {
                    writeln!(w, "  {}", row.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(" "))?;
                }
            }
        }
    }
    w.flush()?;
    Ok(a.out.iter().cloned().collect())
}

fn point_header(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("l_{i}")).chain((1..=d).map(|i| format!("x_{i}"))).collect()
}

fn point_row(l: &[i64], x: &[f64]) -> Vec<String> {
    l.iter().map(|v| v.to_string()).chain(x.iter().map(|v| fmt_num(*v))).collect()
}

fn run_points(a: &PointsArgs, config: &EnumerationConfig) -> Result<Vec<PathBuf>> {
    let lattice = assemble_lattice(&build_polynomial(a.generator.spec()?)?, a.n)?;
    let header = point_header(lattice.d);
    if a.stream {
        let mut w = open_output(a.out.as_deref())?;
        let mut started = false;
        let mut failure = None;
        stream_points(&lattice, config, &mut |l, x| {
            if failure.is_some() {
                return;
            }
            let res = if started {
                write_row(&mut w, &point_row(l, x))
            } else {
                started = true;
                write_row(&mut w, &header).and_then(|_| write_row(&mut w, &point_row(l, x)))
            };
            if let Err(e) = res {
                failure = Some(e);
            }
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        if !started {
            write_row(&mut w, &header)?;
        }
        w.flush()?;
    } else {
        let pts = enumerate_points_with(&lattice, config)?;
        let mut w = open_output(a.out.as_deref())?;
        write_row(&mut w, &header)?;
        for (l, x) in pts.preimages().zip(pts.points()) {
            write_row(&mut w, &point_row(l, x))?;
        }
        w.flush()?;
    }
    Ok(a.out.iter().cloned().collect())
}

fn run_dual(a: &DualArgs, config: &EnumerationConfig) -> Result<Vec<PathBuf>> {
    let lattice = assemble_lattice(&build_polynomial(a.generator.spec()?)?, a.n)?;
    let report = spectrum_report_with(&lattice, a.m_max, a.radius, a.c1, a.c2, config)?;
    let mut w = open_output(a.out.as_deref())?;
    w.write_all(to_json_string(&report)?.as_bytes())?;
    w.flush()?;
    Ok(a.out.iter().cloned().collect())
}

fn run_fns(a: &FnsArgs) -> Result<Vec<PathBuf>> {
    if !a.list {
        return Err(FrolovError::Domain("nothing to do; pass --list".into()));
    }
    let mut w = std::io::stdout().lock();
    for (name, description) in function_catalog() {
        writeln!(w, "{name:<12} {description}")?;
    }
    Ok(Vec::new())
}

fn run_study_cmd(a: &StudyArgs, config: &EnumerationConfig) -> Result<Vec<PathBuf>> {
    let spec = a.generator.spec()?;
    let f = parse_fn_spec(&a.function, spec.dimension)?;
    let schedule = geometric_schedule(a.schedule.nmin, a.schedule.nmax, a.schedule.ratio)?;
    let study = run_study_with(spec, &f, &schedule, config)?;

    let mut w = open_output(Some(&a.out))?;
    write_row(&mut w, &["n", "count", "value", "reference", "abs_error"].map(String::from))?;
    for r in &study.records {
        write_row(
            &mut w,
            &[fmt_num(r.n), r.point_count.to_string(), fmt_num(r.value), fmt_num(r.reference), fmt_num(r.abs_error)],
        )?;
    }
    w.flush()?;

    #[derive(Serialize)]
    struct FitDoc<'a> {
        function: &'a str,
        dimension: usize,
        kind: PolynomialKind,
        class: Option<SmoothnessClass>,
        fit: Option<crate::fit::RateFit>,
        fit_skipped: Option<&'a str>,
        unresolved_n: &'a [f64],
        prediction: Option<crate::testfns::RatePrediction>,
    }
    let fit_path = sibling(&a.out, ".fit.json");
    let doc = FitDoc {
        function: &study.function,
        dimension: study.dimension,
        kind: study.kind,
        class: study.class,
        fit: study.fit,
        fit_skipped: study.fit_skipped.as_deref(),
        unresolved_n: &study.unresolved_n,
        prediction: study.prediction,
    };
    std::fs::write(&fit_path, to_json_string(&doc)?)?;
    match &study.fit {
        Some(fit) => println!("fitted main rate {:.4}, log exponent {:.4}", fit.main_rate, fit.log_exponent),
        None => println!("fit skipped: {}", study.fit_skipped.as_deref().unwrap_or("")),
    }
    Ok(vec![a.out.clone(), fit_path])
}

fn run_fool(a: &FoolArgs, config: &EnumerationConfig) -> Result<Vec<PathBuf>> {
    let spec = a.generator.spec()?;
    let scale = match a.scale {
        ScaleArg::B => Scale::B,
        ScaleArg::F => Scale::F,
    };
    let class = SmoothnessClass::new(a.s, a.p, a.theta, scale)?;
    let variant = match a.variant {
        VariantArg::G1 => Variant::G1,
        VariantArg::G2 => Variant::G2,
        VariantArg::G3 => Variant::G3,
        VariantArg::G4 => Variant::G4,
    };
    let schedule = geometric_schedule(a.nmin, a.nmax, a.ratio)?;
    let demo = lower_bound_demo(spec, &class, variant, &schedule, config)?;

    let mut w = open_output(Some(&a.out))?;
    write_row(
        &mut w,
        &["n", "count", "m", "cubature_value", "integral", "predicted_shape", "norm_surrogate", "atoms"].map(String::from),
    )?;
    for r in &demo.records {
        write_row(
            &mut w,
            &[
                fmt_num(r.n),
                r.node_count.to_string(),
                r.m.to_string(),
                fmt_num(r.cubature_value),
                fmt_num(r.integral),
                fmt_num(r.predicted_shape),
                fmt_num(r.norm_surrogate),
                r.atom_count.to_string(),
            ],
        )?;
    }
    w.flush()?;

    #[derive(Serialize)]
    struct FitDoc<'a> {
        variant: Variant,
        class: SmoothnessClass,
        dimension: usize,
        fit: Option<crate::fit::RateFit>,
        joint_fit: Option<crate::fit::RateFit>,
        predicted_main_rate: f64,
        predicted_log_exponent: f64,
        all_cubature_values_zero: bool,
        #[serde(skip)]
        _p: std::marker::PhantomData<&'a ()>,
    }
    let fit_path = sibling(&a.out, ".fit.json");
    let doc = FitDoc {
        variant: demo.variant,
        class: demo.class,
        dimension: demo.dimension,
        fit: demo.fit,
        joint_fit: demo.joint_fit,
        predicted_main_rate: demo.predicted_main_rate,
        predicted_log_exponent: demo.predicted_log_exponent,
        all_cubature_values_zero: demo.records.iter().all(|r| r.cubature_value == 0.0),
        _p: std::marker::PhantomData,
    };
    std::fs::write(&fit_path, to_json_string(&doc)?)?;
    if let Some(fit) = &demo.fit {
        println!("fitted main exponent {:.4} (predicted {:.4})", fit.main_rate, demo.predicted_main_rate);
    }
    Ok(vec![a.out.clone(), fit_path])
}

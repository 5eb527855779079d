use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use qh_core::asymptotics::{scaling_convergence, table_laplace};
use qh_core::curve::{corner_angle_estimate, no_zero_check, trace_s1};
use qh_core::harmonic::{
    expand_harmonic, functional_equation_residual, interpolate_boundary, laplacian_residual, ray_sign, sign_grid,
    vanishing_check, ExpandOptions, HarmonicSpec, HarmonicTable, Provenance,
};
use qh_core::maps::{Backend, ConformalMap, PsiSeries};
use qh_core::scalar::{format_rational, parse_rational};
use qh_core::walk::StepSet;
use qh_core::{Rational, Scalar};

mod error;

use error::CliError;

#[derive(Parser)]
#[command(name = "qh", version, about = "Discrete harmonic functions for quarter-plane walks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file and print its invariants.
    Validate(ModelArgs),
    /// Sample the curve S1 and estimate its corner angle.
    Curve(CurveArgs),
    /// Build the conformal map and print its series.
    Map(MapArgs),
    /// Expand a harmonic function to a CSV table.
    Harmonic(HarmonicArgs),
    /// Expand and check harmonicity, vanishing pattern and boundary condition.
    Verify(VerifyArgs),
    /// Recover characterizing coefficients from boundary data.
    Interpolate(InterpolateArgs),
    /// Export the sign pattern as a graymap and CSV.
    Nodal(NodalArgs),
    /// Laplace-transform scaling against the continuous limit.
    Asymp(AsympArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Model file: one `k l weight` line per jump.
    #[arg(long)]
    model: PathBuf,
    /// Accept step sets that do not generate the lattice.
    #[arg(long)]
    allow_reducible: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Auto,
    Explicit,
    Smallstep,
    Bipolar,
    Fit,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum FieldArg {
    Rational,
    Float,
}

#[derive(Args, Clone)]
struct MapChoice {
    #[arg(long, value_enum, default_value = "auto")]
    backend: BackendArg,
}

#[derive(Args, Clone)]
struct TableArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    map: MapChoice,
    /// `t`, `t^n`, `Pn`, or comma-separated coefficients of the basis functions.
    #[arg(long = "F", default_value = "t")]
    f: String,
    #[arg(long, default_value_t = 20)]
    window: usize,
    #[arg(long, value_enum, default_value = "rational")]
    field: FieldArg,
    /// Skip the float stability estimate.
    #[arg(long)]
    no_stability_check: bool,
    /// Recompute by bivariate division and compare (p11 != 0).
    #[arg(long)]
    cross_check: bool,
    /// Provenance JSON path; defaults to `<out>.provenance.json`, or stderr without `--out`.
    #[arg(long)]
    provenance: Option<PathBuf>,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 512)]
    points: usize,
    /// Random pairs for the no-zero check of K inside the curve.
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MapFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct MapArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    map: MapChoice,
    /// Series order.
    #[arg(long, default_value_t = 20)]
    order: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: MapFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HarmonicArgs {
    #[command(flatten)]
    table: TableArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    table: TableArgs,
    /// Order of the boundary-condition check on S1; 0 skips it.
    #[arg(long, default_value_t = 0)]
    order: usize,
    /// Curve samples closer than this to the corner are skipped.
    #[arg(long, default_value_t = 0.1)]
    exclusion: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InterpolateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    map: MapChoice,
    /// CSV of `i,value` for h(i,1).
    #[arg(long)]
    boundary: PathBuf,
    /// CSV of `j,value` for h(1,j); required when p11 != 0.
    #[arg(long)]
    boundary_y: Option<PathBuf>,
    /// Number of coefficients to recover.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NodalArgs {
    #[command(flatten)]
    table: TableArgs,
    /// Binary graymap output: black negative, gray zero, white positive.
    #[arg(long)]
    pgm: PathBuf,
    /// `i,j,sign` CSV output.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct AsympArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    map: MapChoice,
    /// Index of the basis function.
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 300)]
    window: usize,
    /// Scaling factors.
    #[arg(long, value_delimiter = ',', default_values_t = vec![10.0, 50.0])]
    m: Vec<f64>,
    /// Sample points `x,y` separated by `;`.
    #[arg(long, default_value = "1,1;1,2;2,1")]
    samples: String,
    #[arg(long, value_enum, default_value = "rational")]
    field: FieldArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("QH_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("QH_THREADS must be a positive integer, got {v:?}"))?;
    if n == 0 {
        return Err("QH_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Validate(a) => validate(&a),
        Command::Curve(a) => curve(&a),
        Command::Map(a) => map(&a),
        Command::Harmonic(a) => harmonic(&a),
        Command::Verify(a) => verify(&a),
        Command::Interpolate(a) => interpolate(&a),
        Command::Nodal(a) => nodal(&a),
        Command::Asymp(a) => asymp(&a),
    }
}

fn load_model(a: &ModelArgs) -> Result<StepSet, CliError> {
    let text = std::fs::read_to_string(&a.model)
        .map_err(|e| CliError::new("IoError", format!("{}: {e}", a.model.display())))?;
    Ok(StepSet::from_model_text(&text, a.allow_reducible)?)
}

fn build_map(model: &StepSet, choice: &MapChoice) -> Result<ConformalMap, CliError> {
    let backend = match choice.backend {
        BackendArg::Auto => return Ok(ConformalMap::auto(model)?),
        BackendArg::Explicit => Backend::ExplicitRational,
        BackendArg::Smallstep => Backend::SmallStepChebyshev,
        BackendArg::Bipolar => Backend::BipolarFamily,
        BackendArg::Fit => Backend::FittedNumeric,
    };
    Ok(ConformalMap::new(model, backend)?)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::new("IoError", format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            let mut so = std::io::stdout().lock();
            so.write_all(bytes)?;
            Ok(so.flush()?)
        }
    }
}

fn emit_json(out: Option<&Path>, v: &impl Serialize) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    emit(out, s.as_bytes())
}

#[derive(Serialize)]
struct RunProvenance<'a> {
    command: &'a str,
    version: &'static str,
    threads: usize,
    #[serde(flatten)]
    table: Option<Provenance>,
    #[serde(flatten)]
    extra: Value,
}

fn write_provenance(
    command: &str,
    table: Option<Provenance>,
    extra: Value,
    path: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let p = RunProvenance { command, version: env!("CARGO_PKG_VERSION"), threads: rayon::current_num_threads(), table, extra };
    let derived = out.map(|o| {
        let mut s = o.as_os_str().to_owned();
        s.push(".provenance.json");
        PathBuf::from(s)
    });
    match path.map(Path::to_path_buf).or(derived) {
        Some(p2) => emit_json(Some(&p2), &p),
        None => {
            eprintln!("{}", json!({ "provenance": p }));
            Ok(())
        }
    }
}

fn validate(a: &ModelArgs) -> Result<(), CliError> {
    let m = load_model(a)?;
    let steps: Vec<Value> = m.steps().iter().map(|((k, l), w)| json!([k, l, format_rational(w)])).collect();
    let cov = m.covariance()?;
    emit_json(
        None,
        &json!({
            "valid": true,
            "model_hash": m.hash(),
            "steps": steps,
            "p11": format_rational(&m.p11()),
            "small_step": m.is_small_step(),
            "irreducible": m.is_irreducible(),
            "max_negative_jump": m.max_neg_jump(),
            "covariance": cov,
        }),
    )
}

fn curve(a: &CurveArgs) -> Result<(), CliError> {
    let m = load_model(&a.model)?;
    let c = trace_s1(&m, a.points)?;
    let theta = m.covariance()?.theta;
    let estimate = corner_angle_estimate(&c)?;
    let nz = no_zero_check(&m, &c, a.samples, a.seed);
    let points: Vec<[f64; 2]> = c.points.iter().map(|z| [z.re, z.im]).collect();
    emit_json(
        a.out.as_deref(),
        &json!({
            "model_hash": m.hash(),
            "points": points,
            "params": c.params,
            "theta": theta,
            "corner_angle_estimate": estimate,
            "angle_error": (estimate - theta).abs(),
            "conjugate_symmetry_residual": c.conjugate_symmetry_residual(),
            "self_intersections": c.self_intersections(),
            "real_left_end": c.real_left_end(),
            "no_zero": nz,
            "seed": a.seed,
        }),
    )
}

fn map(a: &MapArgs) -> Result<(), CliError> {
    let m = load_model(&a.model)?;
    let map = build_map(&m, &a.map)?;
    let s = map.psi1_series(a.order)?;
    match a.format {
        MapFormat::Csv => emit(a.out.as_deref(), s.to_csv().as_bytes()),
        MapFormat::Json => {
            let coeffs: Vec<Value> = match &s {
                PsiSeries::Exact(s) => s.coeffs().iter().map(|c| json!(format_rational(c))).collect(),
                PsiSeries::Float(s) => s.coeffs().iter().map(|c| json!(c)).collect(),
            };
            emit_json(
                a.out.as_deref(),
                &json!({
                    "model_hash": m.hash(),
                    "report": map.report(),
                    "field": map.native_field(),
                    "order": a.order,
                    "coefficients": coeffs,
                }),
            )
        }
    }
}

fn expand<S: Scalar>(m: &StepSet, map: &ConformalMap, t: &TableArgs) -> Result<HarmonicTable<S>, CliError> {
    let spec = HarmonicSpec::parse(&t.f, &m.p11())?;
    let opts = ExpandOptions { cross_check: t.cross_check, stability_check: !t.no_stability_check };
    Ok(expand_harmonic(m, map, &spec, t.window, opts)?)
}

/// Table in either field, reduced to what the subcommands need.
enum AnyTable {
    Rational(HarmonicTable<Rational>),
    Float(HarmonicTable<f64>),
}

impl AnyTable {
    fn build(m: &StepSet, map: &ConformalMap, t: &TableArgs) -> Result<AnyTable, CliError> {
        Ok(match t.field {
            FieldArg::Rational => AnyTable::Rational(expand(m, map, t)?),
            FieldArg::Float => AnyTable::Float(expand(m, map, t)?),
        })
    }

    fn provenance(&self) -> Option<Provenance> {
        match self {
            AnyTable::Rational(t) => t.provenance.clone(),
            AnyTable::Float(t) => t.provenance.clone(),
        }
    }
}

fn harmonic(a: &HarmonicArgs) -> Result<(), CliError> {
    let m = load_model(&a.table.model)?;
    let map = build_map(&m, &a.table.map)?;
    let t = AnyTable::build(&m, &map, &a.table)?;
    let csv = match &t {
        AnyTable::Rational(t) => t.to_csv(),
        AnyTable::Float(t) => t.to_csv(),
    };
    emit(a.out.as_deref(), csv.as_bytes())?;
    write_provenance("harmonic", t.provenance(), json!({}), a.table.provenance.as_deref(), a.out.as_deref())
}

/// `n` when the spec is a single basis function.
fn single_index(text: &str, p11: &Rational) -> Option<usize> {
    let t = text.trim();
    if let Some(n) = t.strip_prefix('P') {
        return n.trim().parse().ok();
    }
    if num_traits::Zero::is_zero(p11) {
        if t == "t" {
            return Some(1);
        }
        return t.strip_prefix("t^").and_then(|n| n.trim().parse().ok());
    }
    None
}

fn verify(a: &VerifyArgs) -> Result<(), CliError> {
    let m = load_model(&a.table.model)?;
    let map = build_map(&m, &a.table.map)?;
    let t = AnyTable::build(&m, &map, &a.table)?;
    let p11 = m.p11();
    let idx = single_index(&a.table.f, &p11);
    let (lap, vanishing) = match &t {
        AnyTable::Rational(t) => (laplacian_residual(t, &m)?, idx.map(|n| vanishing_check(t, n, &p11)).transpose()?),
        AnyTable::Float(t) => (laplacian_residual(t, &m)?, idx.map(|n| vanishing_check(t, n, &p11)).transpose()?),
    };
    let lap_ok = match a.table.field {
        FieldArg::Rational => lap.exact_zero,
        FieldArg::Float => lap.relative <= 1e-10,
    };
    let mut pass = lap_ok && vanishing.as_ref().map_or(true, |v| v.pass);
    let boundary = if a.order > 0 {
        let spec = HarmonicSpec::parse(&a.table.f, &p11)?;
        let c = trace_s1(&m, 256)?;
        let r = functional_equation_residual(&m, &map, &spec, &c, a.order, a.exclusion)?;
        Some(json!({ "order": r.order, "exclusion": a.exclusion, "max": r.max, "samples": r.samples.len() }))
    } else {
        None
    };
    if let Some(b) = &boundary {
        pass &= b["max"].as_f64().is_some_and(|x| x <= 1e-8);
    }
    let report = json!({
        "pass": pass,
        "laplacian": lap,
        "vanishing": vanishing,
        "boundary_condition": boundary,
    });
    emit_json(a.out.as_deref(), &report)?;
    write_provenance("verify", t.provenance(), json!({}), a.table.provenance.as_deref(), a.out.as_deref())?;
    if pass {
        Ok(())
    } else {
        Err(CliError::new("VerificationFailed", "at least one check failed; see the report"))
    }
}

/// `i,value` rows starting at `i = 1`; a header line is optional.
fn read_boundary(path: &Path) -> Result<Vec<Rational>, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::new("IoError", format!("{}: {e}", path.display())))?;
    let bad = |line: usize, msg: String| CliError::new("ParseError", format!("{}:{line}: {msg}", path.display()));
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (k == 0 && line.chars().next().is_some_and(|c| c.is_alphabetic())) {
            continue;
        }
        let (i, v) = line.split_once(',').ok_or_else(|| bad(k + 1, "expected `i,value`".into()))?;
        let i: usize = i.trim().parse().map_err(|_| bad(k + 1, format!("bad index {i:?}")))?;
        if i != out.len() + 1 {
            return Err(bad(k + 1, format!("expected index {}, got {i}", out.len() + 1)));
        }
        out.push(parse_rational(v.trim()).map_err(|e| bad(k + 1, e.to_string()))?);
    }
    Ok(out)
}

fn interpolate(a: &InterpolateArgs) -> Result<(), CliError> {
    let m = load_model(&a.model)?;
    let map = build_map(&m, &a.map)?;
    let c = read_boundary(&a.boundary)?;
    let d = a.boundary_y.as_deref().map(read_boundary).transpose()?;
    let r = interpolate_boundary(&m, &map, &c, d.as_deref(), a.n)?;
    let support: Vec<usize> = (1..=r.coeffs.len()).filter(|n| !num_traits::Zero::is_zero(&r.coeffs[n - 1])).collect();
    emit_json(
        a.out.as_deref(),
        &json!({
            "model_hash": m.hash(),
            "backend": map.backend().name(),
            "coefficients": r.coeffs.iter().map(format_rational).collect::<Vec<_>>(),
            "support": support,
            "overflow": r.overflow.as_ref().map(format_rational),
            "unused_residual": r.unused_residual,
        }),
    )
}

fn nodal(a: &NodalArgs) -> Result<(), CliError> {
    let m = load_model(&a.table.model)?;
    let map = build_map(&m, &a.table.map)?;
    let t = AnyTable::build(&m, &map, &a.table)?;
    let (grid, rays) = match &t {
        AnyTable::Rational(t) => (sign_grid(t), [0.5, 1.0, 2.0].map(|x| ray_sign(t, x))),
        AnyTable::Float(t) => (sign_grid(t), [0.5, 1.0, 2.0].map(|x| ray_sign(t, x))),
    };
    emit(Some(&a.pgm), &grid.to_pgm())?;
    if let Some(c) = &a.csv {
        emit(Some(c), grid.to_csv().as_bytes())?;
    }
    emit_json(
        None,
        &json!({
            "window": grid.window,
            "normalization": grid.normalization,
            "all_positive": grid.all_positive,
            "negative_count": grid.negative_count,
            "rays": { "0.5": rays[0], "1": rays[1], "2": rays[2] },
        }),
    )?;
    write_provenance("nodal", t.provenance(), json!({}), a.table.provenance.as_deref(), Some(&a.pgm))
}

fn parse_samples(s: &str) -> Result<Vec<(f64, f64)>, CliError> {
    s.split(';')
        .map(|p| {
            let bad = || CliError::new("ParseError", format!("sample {p:?} is not `x,y`"));
            let (x, y) = p.split_once(',').ok_or_else(bad)?;
            Ok((x.trim().parse().map_err(|_| bad())?, y.trim().parse().map_err(|_| bad())?))
        })
        .collect()
}

fn asymp(a: &AsympArgs) -> Result<(), CliError> {
    let m = load_model(&a.model)?;
    let map = build_map(&m, &a.map)?;
    let theta = m.covariance()?.theta;
    let samples = parse_samples(&a.samples)?;
    let spec = HarmonicSpec::basis(a.n, &m.p11());
    let table: HarmonicTable<f64> = match a.field {
        FieldArg::Rational => {
            let t: HarmonicTable<Rational> = expand_harmonic(&m, &map, &spec, a.window, ExpandOptions::default())?;
            t.to_f64()
        }
        FieldArg::Float => expand_harmonic(&m, &map, &spec, a.window, ExpandOptions::default())?,
    };
    let r = scaling_convergence(&table, a.n as u32, theta, &samples, &a.m)?;
    let at_one = table_laplace(&table, 1.0, 1.0, r.alpha).ok();
    let report = json!({
        "model_hash": m.hash(),
        "window": a.window,
        "scaling": r,
        "laplace_at_1_1": at_one,
    });
    emit_json(a.out.as_deref(), &report)?;
    write_provenance(
        "asymp",
        None,
        json!({ "model_hash": m.hash(), "backend": map.backend().name(), "window": a.window, "n": a.n }),
        None,
        a.out.as_deref(),
    )
}

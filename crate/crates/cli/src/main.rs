//! `fln`: evaluate, build and check the `F_{L,N}` hypergeometric systems.
//!
//! Exit codes: `0` when every requested check passes, `1` when a check
//! fails (or a computation cannot be carried out), `2` on usage and parse
//! errors.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use num_bigint::BigInt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use fln::acceptance::{self, random_rational_point, MONODROMY_TOL};
use fln::continuation::{
    fundamental_frame, monodromy_matrix, multiset_distance, predicted_eigenvalues, standard_loop, transport, ContinuationOptions,
    FrameSeed, Path,
};
use fln::euler::{fundamental_system_general, fundamental_system_thomae, local_factorization_check, ThomaeRep};
use fln::isomono::{lax_compatibility_residual, lax_convergence_study, series_solution, verify_particular_solution};
use fln::pfaffian::{expected_exponents, multiplicities, same_multiset};
use fln::series::{eval_series, eval_series_auto, holomorphic_solution_vector_auto};
use fln::{build_system, DivisorId, Matrix, ParameterSet, ParamsDoc, Rational, Scalar};

#[derive(Parser, Debug)]
#[command(name = "fln", version, about = "Hypergeometric F_{L,N}: series, Pfaffian systems, Euler integrals, monodromy, isomonodromy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the series F at x.
    Eval(Common),
    /// Residue matrices (and connection matrices at --x, if given).
    Build(Common),
    /// Riemann scheme: residue spectra against the predicted exponents.
    Exponents(Common),
    /// Integrability check (exact for rational parameters and points).
    CheckFlat(Common),
    /// Continue the holomorphic solution along a path.
    Continue {
        #[command(flatten)]
        common: Common,
        /// JSON path: a list of waypoints ([[re, im], ...] per point) or
        /// {"segments": [...]} with line/arc segments.
        #[arg(long)]
        path: PathBuf,
    },
    /// Local monodromy around one divisor (or all) from basepoint --x.
    Monodromy {
        #[command(flatten)]
        common: Common,
        /// Divisor such as x1=0, x1=1, x1=inf, x1=x2 (default: all).
        #[arg(long)]
        divisor: Option<String>,
    },
    /// Euler-integral fundamental system at --x.
    Fundamental {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Rep::General)]
        rep: Rep,
        /// Also write the local-factorization slope table (CSV) of the
        /// general representation here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Lax-pair compatibility residuals (CSV) at u = 1/x.
    IsomonoCheck {
        #[command(flatten)]
        common: Common,
        /// Spectral point z as "re,im".
        #[arg(long, default_value = "0.37,0.2")]
        z: String,
        #[arg(long, default_value_t = acceptance::LAX_STEP)]
        step: f64,
    },
    /// Hamiltonian particular-solution residuals (CSV) on a grid of x.
    HamCheck {
        #[command(flatten)]
        common: Common,
        /// Grid points separated by '|', each in --x syntax.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value_t = acceptance::LAX_STEP)]
        step: f64,
    },
    /// Run the acceptance suite.
    Selftest(Common),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Chamber {
    Real,
    Complex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Rep {
    General,
    Single,
    Cyclic,
}

#[derive(Args, Debug, Default, Clone)]
struct Common {
    /// JSON config with any of the fields below; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter file {"L", "N", "alpha", "beta", "gamma"}.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Point "re,im;re,im;..." (imaginary parts optional).
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    chamber: Option<Chamber>,
}

/// Settings after merging the config file with the flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    params: Option<PathBuf>,
    x: Option<String>,
    order: Option<usize>,
    nodes: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    chamber: Option<Chamber>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Check { name: String, observed: f64, tolerance: f64 },
    Compute(fln::Error),
}

impl From<fln::Error> for Failure {
    fn from(e: fln::Error) -> Self {
        match e {
            fln::Error::Parse(m) => Failure::Usage(m),
            fln::Error::Json(e) => Failure::Usage(e.to_string()),
            fln::Error::CheckFailed { name, observed, tolerance } => Failure::Check { name, observed, tolerance },
            other => Failure::Compute(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

impl RunConfig {
    fn load(c: &Common) -> CliResult<Self> {
        let mut cfg = match &c.config {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        macro_rules! over {
            ($($f:ident),*) => { $( if c.$f.is_some() { cfg.$f = c.$f.clone(); } )* };
        }
        over!(params, x, order, nodes, tol, seed, out, chamber);
        if let Some(t) = cfg.tol {
            if !(t > 0.0) {
                return usage("--tol must be positive");
            }
        }
        if let Some(n) = cfg.nodes {
            if n < 4 {
                return usage("--nodes must be at least 4");
            }
        }
        Ok(cfg)
    }

    fn doc(&self) -> CliResult<ParamsDoc> {
        let Some(p) = &self.params else { return usage("--params is required") };
        let text = fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
        let doc = ParamsDoc::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
        // surface validation problems here, as usage errors
        doc.to_complex().map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
        Ok(doc)
    }

    fn params(&self) -> CliResult<ParameterSet<Complex64>> {
        Ok(self.doc()?.to_complex()?)
    }

    fn x(&self, n: usize) -> CliResult<Vec<Complex64>> {
        let Some(s) = &self.x else { return usage("--x is required") };
        let x = parse_point(s)?;
        if x.len() != n {
            return usage(format!("--x has {} coordinates, expected {n}", x.len()));
        }
        Ok(x)
    }

    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn nodes(&self) -> usize {
        self.nodes.unwrap_or(acceptance::QUADRATURE_NODES)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(acceptance::DEFAULT_SEED)
    }

    fn emit(&self, text: &str) -> CliResult<()> {
        match &self.out {
            Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
            None => {
                print!("{text}");
                if !text.ends_with('\n') {
                    println!();
                }
                Ok(())
            }
        }
    }

    fn emit_json(&self, v: &Value) -> CliResult<()> {
        self.emit(&(serde_json::to_string_pretty(v).expect("serializable") + "\n"))
    }
}

fn parse_complex(s: &str) -> CliResult<Complex64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| Failure::Usage(format!("bad number `{t}`")));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => usage(format!("bad complex number `{s}`")),
    }
}

fn parse_point(s: &str) -> CliResult<Vec<Complex64>> {
    s.split(';').filter(|t| !t.trim().is_empty()).map(parse_complex).collect()
}

/// Exact value of a decimal literal such as `-0.35` or `2e-3`.
fn parse_decimal_rational(s: &str) -> CliResult<Rational> {
    let t = s.trim();
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(k) => (&t[..k], t[k + 1..].parse::<i32>().map_err(|_| Failure::Usage(format!("bad number `{s}`")))?),
        None => (t, 0),
    };
    let (neg, digits) = match mant.strip_prefix('-') {
        Some(d) => (true, d),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let all = format!("{int}{frac}");
    if all.is_empty() || !all.chars().all(|ch| ch.is_ascii_digit()) {
        return usage(format!("bad number `{s}`"));
    }
    let num: BigInt = all.parse().map_err(|_| Failure::Usage(format!("bad number `{s}`")))?;
    let scale = exp - frac.len() as i32;
    let pow = Rational::from_integer(BigInt::from(10).pow(scale.unsigned_abs()));
    let r = Rational::from_integer(num);
    let r = if scale >= 0 { r * pow } else { r / pow };
    Ok(if neg { -r } else { r })
}

fn pairs(v: &[Complex64]) -> Value {
    json!(v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
}

fn mat(m: &Matrix<Complex64>) -> Value {
    json!(m.to_pairs())
}

fn rational_mat(m: &Matrix<Rational>) -> Value {
    let rows: Vec<Vec<Value>> = (0..m.rows())
        .map(|r| (0..m.cols()).map(|k| json!({ "num": m[(r, k)].numer().to_string(), "den": m[(r, k)].denom().to_string() })).collect())
        .collect();
    json!(rows)
}

fn check(name: &str, observed: f64, tolerance: f64) -> CliResult<()> {
    if observed <= tolerance {
        Ok(())
    } else {
        Err(Failure::Check { name: name.into(), observed, tolerance })
    }
}

fn cmd_eval(cfg: &RunConfig) -> CliResult<()> {
    let p = cfg.params()?;
    let x = cfg.x(p.n())?;
    let v = match cfg.order {
        Some(k) => eval_series(&p, &x, k)?,
        None => eval_series_auto(&p, &x, cfg.tol(fln::series::AUTO_REL_TOL))?,
    };
    cfg.emit_json(&json!({ "re": v.value.re, "im": v.value.im, "order": v.truncation_order, "tail_bound": v.tail_bound }))
}

fn cmd_build(cfg: &RunConfig) -> CliResult<()> {
    let doc = cfg.doc()?;
    let p = doc.to_complex()?;
    let mut out = serde_json::Map::new();
    out.insert("L".into(), json!(p.l()));
    out.insert("N".into(), json!(p.n()));
    out.insert("rank".into(), json!(p.rank()));
    if let Some(exact) = doc.to_rational() {
        let sys = build_system(&exact?);
        out.insert("exact".into(), json!({
            "E": (0..p.n()).map(|i| rational_mat(sys.e(i))).collect::<Vec<_>>(),
            "F": (0..p.n()).map(|i| rational_mat(sys.f(i))).collect::<Vec<_>>(),
        }));
    }
    let sys = build_system(&p);
    out.insert("E".into(), json!((0..p.n()).map(|i| mat(sys.e(i))).collect::<Vec<_>>()));
    out.insert("F".into(), json!((0..p.n()).map(|i| mat(sys.f(i))).collect::<Vec<_>>()));
    let g: serde_json::Map<String, Value> = sys.g_pairs().map(|(&(i, j), m)| (format!("{},{}", i + 1, j + 1), mat(m))).collect();
    out.insert("G".into(), Value::Object(g));
    if cfg.x.is_some() {
        let x = cfg.x(p.n())?;
        out.insert("x".into(), pairs(&x));
        out.insert("connection".into(), json!(sys.connection_at(&x)?.iter().map(mat).collect::<Vec<_>>()));
    }
    cfg.emit_json(&Value::Object(out))
}

fn divisors(n: usize) -> Vec<DivisorId> {
    let mut v: Vec<DivisorId> = (0..n).flat_map(|i| DivisorId::around(i, n)).collect();
    v.sort();
    v.dedup();
    v
}

fn cmd_exponents(cfg: &RunConfig) -> CliResult<()> {
    let doc = cfg.doc()?;
    let p = doc.to_complex()?;
    let mut rows = Vec::new();
    let mut mismatches = 0usize;
    let exact = doc.to_rational().transpose()?;
    for d in divisors(p.n()) {
        let expected = expected_exponents(&p, d);
        let (found, ok, mode) = match &exact {
            Some(pr) => {
                let sys = build_system(pr);
                let f = sys.residue_spectrum(d)?;
                let ok = same_multiset(&f, &expected_exponents(pr, d));
                (f.iter().map(Scalar::to_complex).collect::<Vec<_>>(), ok, "exact")
            }
            None => {
                let f = build_system(&p).residue_spectrum(d)?;
                let ok = same_multiset(&f, &expected);
                (f, ok, "float")
            }
        };
        if !ok {
            mismatches += 1;
        }
        let mut mult = multiplicities(&expected);
        mult.sort_unstable();
        rows.push(json!({
            "divisor": d.to_string(),
            "expected": pairs(&expected),
            "residue_eigenvalues": pairs(&found),
            "multiplicities": mult,
            "match": ok,
            "arithmetic": mode,
        }));
    }
    cfg.emit_json(&json!({ "L": p.l(), "N": p.n(), "scheme": rows }))?;
    check("riemann-scheme", mismatches as f64, 0.0)
}

fn cmd_check_flat(cfg: &RunConfig) -> CliResult<()> {
    let doc = cfg.doc()?;
    let p = doc.to_complex()?;
    let n = p.n();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    if let Some(exact) = doc.to_rational() {
        let sys = build_system(&exact?);
        let points: Vec<Vec<Rational>> = match &cfg.x {
            Some(s) => {
                let coords: Vec<&str> = s.split(';').filter(|t| !t.trim().is_empty()).collect();
                if coords.len() != n || coords.iter().any(|t| t.contains(',')) {
                    return usage(format!("exact check needs {n} real coordinates in --x"));
                }
                vec![coords.iter().map(|t| parse_decimal_rational(t)).collect::<CliResult<_>>()?]
            }
            None => (0..10).map(|_| random_rational_point(&mut rng, n)).collect(),
        };
        let mut bad = 0usize;
        for x in &points {
            if !sys.is_flat(x)? {
                bad += 1;
            }
        }
        let residual = if bad == 0 { json!("exact-zero") } else { json!(format!("nonzero at {bad} points")) };
        cfg.emit_json(&json!({ "residual": residual, "points": points.len(), "arithmetic": "exact" }))?;
        return check("flatness", bad as f64, 0.0);
    }
    let sys = build_system(&p);
    let points: Vec<Vec<Complex64>> = match &cfg.x {
        Some(_) => vec![cfg.x(n)?],
        None => {
            use rand::Rng;
            let complex = cfg.chamber == Some(Chamber::Complex);
            (0..10)
                .map(|_| {
                    (0..n)
                        .map(|_| Complex64::new(rng.gen_range(-2.0..2.0), if complex { rng.gen_range(-2.0..2.0) } else { 0.0 }))
                        .collect()
                })
                .collect()
        }
    };
    let mut worst: f64 = 0.0;
    for x in &points {
        worst = worst.max(sys.integrability_residual_relative(x)?);
    }
    let tol = cfg.tol(1e-12);
    cfg.emit_json(&json!({ "residual": worst, "tolerance": tol, "points": points.len(), "arithmetic": "float" }))?;
    check("flatness", worst, tol)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PathDoc {
    Path(Path),
    Waypoints(Vec<Vec<[f64; 2]>>),
}

fn cmd_continue(cfg: &RunConfig, path: &PathBuf) -> CliResult<()> {
    let p = cfg.params()?;
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let doc: PathDoc = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let path = match doc {
        PathDoc::Path(p) => {
            p.validate()?;
            p
        }
        PathDoc::Waypoints(w) => {
            let pts: Vec<Vec<Complex64>> = w.iter().map(|pt| pt.iter().map(|z| Complex64::new(z[0], z[1])).collect()).collect();
            Path::polyline(&pts)?
        }
    };
    if path.basepoint().len() != p.n() {
        return usage(format!("path has dimension {}, expected {}", path.basepoint().len(), p.n()));
    }
    let start = path.basepoint();
    let y0 = holomorphic_solution_vector_auto(&p, &start)?;
    let sys = build_system(&p);
    let opts = ContinuationOptions::with_tol(cfg.tol(acceptance::ODE_TOL));
    let y0m = Matrix::from_fn(y0.len(), 1, |r, _| y0[r]);
    let (y1, stats) = transport(&sys, &path, &y0m, &opts)?;
    cfg.emit_json(&json!({
        "start": pairs(&start),
        "end": pairs(&path.end()),
        "y_start": pairs(&y0),
        "y_end": pairs(&y1.column(0)),
        "accepted_steps": stats.accepted,
        "rejected_steps": stats.rejected,
        "min_distance_to_locus": stats.min_distance,
    }))
}

fn cmd_monodromy(cfg: &RunConfig, divisor: Option<&str>) -> CliResult<()> {
    let p = cfg.params()?;
    let base = cfg.x(p.n())?;
    let sys = build_system(&p);
    let opts = ContinuationOptions::with_tol(cfg.tol(acceptance::ODE_TOL));
    let list = match divisor {
        Some(s) => vec![s.parse::<DivisorId>()?],
        None => divisors(p.n()),
    };
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    let frame = fundamental_frame(&sys, &base, FrameSeed::Identity)?;
    for d in list {
        let m = monodromy_matrix(&sys, &standard_loop(&base, d)?, &frame, &opts)?;
        let predicted = predicted_eigenvalues(&sys, d);
        let deviation = multiset_distance(&m.eigenvalues, &predicted);
        worst = worst.max(deviation);
        rows.push(json!({
            "divisor": d.to_string(),
            "matrix": mat(&m.matrix),
            "eigenvalues": pairs(&m.eigenvalues),
            "predicted": pairs(&predicted),
            "deviation": deviation,
        }));
    }
    cfg.emit_json(&json!({
        "basepoint": pairs(&base),
        "frame": "identity initial data at the basepoint; a loop maps Y to Y M (loop g1 then g2 gives M_g2 M_g1)",
        "loops": rows,
    }))?;
    check("monodromy-eigenvalues", worst, MONODROMY_TOL)
}

fn cmd_fundamental(cfg: &RunConfig, rep: Rep, csv: Option<&PathBuf>) -> CliResult<()> {
    let p = cfg.params()?;
    let x = cfg.x(p.n())?;
    let nodes = cfg.nodes();
    let sys = match rep {
        Rep::General => fundamental_system_general(&p, &x, nodes)?,
        Rep::Single => fundamental_system_thomae(&p, x[0], nodes, ThomaeRep::SingleSimplex)?,
        Rep::Cyclic => fundamental_system_thomae(&p, x[0], nodes, ThomaeRep::CyclicSimplices)?,
    };
    let det = sys.scaled_determinant().norm();
    let labels: Vec<String> = sys.labels.iter().map(|l| format!("{l:?}")).collect();
    cfg.emit_json(&json!({
        "x": pairs(&x),
        "nodes_per_axis": nodes,
        "columns": labels,
        "Y": mat(&sys.y),
        "scaled_determinant": det,
        "error_estimate": sys.error_estimate,
    }))?;
    if let Some(path) = csv {
        let r = local_factorization_check(&p, &x, &acceptance::FACTORIZATION_SAMPLES, nodes, f64::INFINITY, f64::NEG_INFINITY)?;
        let mut out = String::from("kind,column,row,slope,reference\n");
        for (col, row, s, b) in &r.exponent_slopes {
            let _ = writeln!(out, "exponent,{col},{row},{s:.10},{b:.10}");
        }
        for (col, row, s) in &r.decay_slopes {
            let _ = writeln!(out, "decay,{col},{row},{s:.10},{}", acceptance::DECAY_SLOPE_MIN);
        }
        fs::write(path, out).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    }
    check("fundamental-determinant", acceptance::DET_FLOOR, det)
}

fn cmd_isomono(cfg: &RunConfig, z: &str, step: f64) -> CliResult<()> {
    let p = cfg.params()?;
    let x = cfg.x(p.n())?;
    let z = parse_complex(z)?;
    let u: Vec<Complex64> = x.iter().map(|v| 1.0 / v).collect();
    let iso = p.to_isomonodromic();
    let sol = series_solution(&p);
    let mut out = String::from("i,step,residual,order\n");
    let mut worst: f64 = 0.0;
    for i in 1..=p.n() {
        let st = lax_convergence_study(&iso, &u, i, z, 2e-2, 4, &sol)?;
        for (k, (h, r)) in st.steps.iter().zip(&st.residuals).enumerate() {
            let order = if k == 0 { String::new() } else { format!("{:.6}", st.orders[k - 1]) };
            let _ = writeln!(out, "{i},{h:e},{r:e},{order}");
        }
        let r = lax_compatibility_residual(&iso, &u, i, z, step, &sol)?;
        let _ = writeln!(out, "{i},{step:e},{r:e},");
        worst = worst.max(r);
    }
    cfg.emit(&out)?;
    check("lax-compatibility", worst, cfg.tol(acceptance::LAX_TOL))
}

fn cmd_ham(cfg: &RunConfig, grid: Option<&str>, step: f64) -> CliResult<()> {
    let p = cfg.params()?;
    let points: Vec<Vec<Complex64>> = match grid {
        Some(g) => g.split('|').map(parse_point).collect::<CliResult<_>>()?,
        None => vec![cfg.x(p.n())?],
    };
    if points.iter().any(|x| x.len() != p.n()) {
        return usage(format!("grid points need {} coordinates", p.n()));
    }
    let sol = series_solution(&p);
    let mut out = String::from("point,hamilton_residual,q_consistency\n");
    let mut worst: f64 = 0.0;
    let mut cons: f64 = 0.0;
    for (k, x) in points.iter().enumerate() {
        let r = verify_particular_solution(&p, std::slice::from_ref(x), step, &sol)?;
        let _ = writeln!(out, "{k},{:e},{:e}", r.hamilton_residual, r.q_consistency);
        worst = worst.max(r.hamilton_residual);
        cons = cons.max(r.q_consistency);
    }
    cfg.emit(&out)?;
    check("q-consistency", cons, acceptance::Q_CONSISTENCY_TOL)?;
    check("hamilton-residual", worst, cfg.tol(acceptance::HAMILTON_TOL))
}

fn cmd_selftest(cfg: &RunConfig) -> CliResult<()> {
    let reports = acceptance::run_all(cfg.seed());
    for r in &reports {
        eprintln!("{}", r.line());
    }
    if let Some(path) = &cfg.out {
        let text = serde_json::to_string_pretty(&reports).expect("serializable");
        fs::write(path, text + "\n").map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    check("selftest", failed as f64, 0.0)
}

fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Eval(c) => cmd_eval(&RunConfig::load(c)?),
        Command::Build(c) => cmd_build(&RunConfig::load(c)?),
        Command::Exponents(c) => cmd_exponents(&RunConfig::load(c)?),
        Command::CheckFlat(c) => cmd_check_flat(&RunConfig::load(c)?),
        Command::Continue { common, path } => cmd_continue(&RunConfig::load(common)?, path),
        Command::Monodromy { common, divisor } => cmd_monodromy(&RunConfig::load(common)?, divisor.as_deref()),
        Command::Fundamental { common, rep, csv } => cmd_fundamental(&RunConfig::load(common)?, *rep, csv.as_ref()),
        Command::IsomonoCheck { common, z, step } => cmd_isomono(&RunConfig::load(common)?, z, *step),
        Command::HamCheck { common, grid, step } => cmd_ham(&RunConfig::load(common)?, grid.as_deref(), *step),
        Command::Selftest(c) => cmd_selftest(&RunConfig::load(c)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Check { name, observed, tolerance }) => {
            eprintln!("check {name} failed: observed {observed:e}, tolerance {tolerance:e}");
            ExitCode::from(1)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_points() {
        let x = parse_point("0.5;0.1,-0.2").unwrap();
        assert_eq!(x, vec![Complex64::new(0.5, 0.0), Complex64::new(0.1, -0.2)]);
        assert!(parse_point("a").is_err());
    }

    #[test]
    fn decimal_literals_are_exact() {
        assert_eq!(parse_decimal_rational("-0.35").unwrap(), fln::rat(-7, 20));
        assert_eq!(parse_decimal_rational("2e-3").unwrap(), fln::rat(1, 500));
        assert_eq!(parse_decimal_rational("1.5E1").unwrap(), fln::rat(15, 1));
        assert!(parse_decimal_rational("1.2.3").is_err());
    }
}

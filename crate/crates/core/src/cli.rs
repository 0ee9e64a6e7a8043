//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 singular or
//! near-singular data, 3 invalid arguments, 4 I/O failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::{Float, Rational};
use serde_json::{json, Value};

use crate::christoffel::{assemble_t, darboux, darboux_permuted, run_chain, BidiagonalChain, ChainResiduals};
use crate::error::Error;
use crate::gaussborel::{factorize, PolySet, PolynomialTable, Side};
use crate::matrix::Matrix;
use crate::measures::{JacobiPineiroParams, LaguerreFirstKindParams, MeasureMatrix};
use crate::moments::{truncation_size, MomentMatrix};
use crate::recurrence::{build_t, build_t_via_upper};
use crate::scalar::{max_of, parse_rational, Mode, PrecisionContext, Scalar, DEFAULT_DIGITS};
use crate::verify::{parse_suites, run_suites};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_SINGULAR: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "momlab",
    version,
    about = "Moment matrices, Gauss-Borel factorizations and bidiagonal factorizations of banded recurrence matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Dump the truncated moment matrix
    Moments,
    /// Gauss-Borel factorization L, D, U
    Factor,
    /// Mixed multiple orthogonal polynomials A and B
    Polys,
    /// Banded recurrence matrix T
    Recurrence,
    /// Christoffel chains and the bidiagonal factorization of T
    Bidiag,
    /// Darboux transformation of T for one step k
    Darboux,
    /// Run invariant suites
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Moments => "moments",
            Command::Factor => "factor",
            Command::Polys => "polys",
            Command::Recurrence => "recurrence",
            Command::Bidiag => "bidiag",
            Command::Darboux => "darboux",
            Command::Verify => "verify",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum FamilyArg {
    /// Mixed Jacobi-Pineiro on [0, 1]
    Jp,
    /// Mixed Laguerre of the first kind on [0, inf)
    Lag1,
    /// Finite point masses from --nodes-file
    Discrete,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ModeArg {
    /// Rational for integer parameters and discrete data, bigfloat otherwise
    Auto,
    Bigfloat,
    Rational,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum SideArg {
    Left,
    Right,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::Left => Side::Left,
            SideArg::Right => Side::Right,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct Opts {
    /// Measure family
    #[arg(long, global = true, value_enum)]
    family: Option<FamilyArg>,

    /// Comma-separated alpha parameters (p entries), e.g. 0,1/2 or 0,0.5
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<String>,

    /// Comma-separated beta parameters (q entries)
    #[arg(long, global = true, allow_hyphen_values = true)]
    beta: Option<String>,

    /// Jacobi-Pineiro gamma
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma: Option<String>,

    /// JSON file {"nodes": [..], "weights": [[[..]]]} for the discrete family
    #[arg(long, global = true)]
    nodes_file: Option<PathBuf>,

    /// Largest index of the output window
    #[arg(long, global = true, default_value_t = 8)]
    nmax: usize,

    /// Number of Christoffel steps (bidiag) or the step to transform (darboux)
    #[arg(long, global = true)]
    k: Option<usize>,

    /// Explicit truncation size for moments and factor
    #[arg(long, global = true)]
    size: Option<usize>,

    /// Decimal digits of working precision in bigfloat mode
    #[arg(long, global = true, env = "MOMLAB_DIGITS", default_value_t = DEFAULT_DIGITS)]
    digits: u32,

    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Auto)]
    mode: ModeArg,

    /// Output format; moments default to csv, everything else to json
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    /// Write output to this file (atomically) instead of standard output
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Normalization side
    #[arg(long, global = true, value_enum)]
    side: Option<SideArg>,

    /// Suites for verify: `all` or a comma-separated list
    #[arg(long, global = true, default_value = "all")]
    suite: String,
}

enum CliError {
    Lib(Error),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Lib(Error::InvalidArgument(msg.into()))
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::SingularMinor { .. } | Error::NearSingularMinor { .. } | Error::SingularSystem => EXIT_SINGULAR,
        Error::ChainMismatch(_) | Error::NormalizationMismatch(_) => EXIT_VERIFY,
        _ => EXIT_USAGE,
    }
}

struct Output {
    text: String,
    pass: bool,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => match emit(&out.text, cli.opts.out.as_deref()) {
            Ok(()) => {
                if out.pass {
                    EXIT_OK
                } else {
                    eprintln!("momlab: verification failed");
                    EXIT_VERIFY
                }
            }
            Err(msg) => {
                eprintln!("momlab: {msg}");
                EXIT_IO
            }
        },
        Err(CliError::Io(msg)) => {
            eprintln!("momlab: {msg}");
            EXIT_IO
        }
        Err(CliError::Lib(e)) => {
            eprintln!("momlab: {e}");
            exit_code(&e)
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> std::result::Result<(), String> {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| format!("cannot write to standard output: {e}"))
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .map_err(|e| format!("cannot create temporary file in {}: {e}", dir.display()))?;
            tmp.write_all(text.as_bytes())
                .and_then(|_| tmp.flush())
                .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            tmp.persist(path)
                .map_err(|e| format!("cannot write {}: {}", path.display(), e.error))?;
            Ok(())
        }
    }
}

fn parse_list(name: &str, text: Option<&str>) -> CliResult<Vec<Rational>> {
    let text = text.ok_or_else(|| usage(format!("--{name} is required for this family")))?;
    let values = text
        .split(',')
        .map(|s| parse_rational(s.trim()))
        .collect::<crate::error::Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(usage(format!("--{name} needs at least one value")));
    }
    Ok(values)
}

/// Raw discrete data with values kept as exact rationals.
struct NodesFile {
    nodes: Vec<Rational>,
    weights: Vec<Vec<Vec<Rational>>>,
}

fn json_rational(v: &Value) -> CliResult<Rational> {
    match v {
        Value::String(s) => Ok(parse_rational(s)?),
        Value::Number(n) => Ok(parse_rational(&n.to_string())?),
        other => Err(usage(format!("expected a number or string in nodes file, got {other}"))),
    }
}

fn read_nodes_file(path: &Path) -> CliResult<NodesFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| usage(format!("{} is not valid JSON: {e}", path.display())))?;
    let nodes = value["nodes"]
        .as_array()
        .ok_or_else(|| usage("nodes file needs a \"nodes\" array"))?
        .iter()
        .map(json_rational)
        .collect::<CliResult<Vec<_>>>()?;
    let weights = value["weights"]
        .as_array()
        .ok_or_else(|| usage("nodes file needs a \"weights\" array"))?
        .iter()
        .map(|w| {
            w.as_array()
                .ok_or_else(|| usage("each weight must be a q x p array"))?
                .iter()
                .map(|row| {
                    row.as_array()
                        .ok_or_else(|| usage("each weight row must be an array"))?
                        .iter()
                        .map(json_rational)
                        .collect::<CliResult<Vec<_>>>()
                })
                .collect::<CliResult<Vec<_>>>()
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(NodesFile { nodes, weights })
}

/// Family data parsed from the command line, before a scalar backend is chosen.
enum FamilySpec {
    Jp(JacobiPineiroParams),
    Lag1(LaguerreFirstKindParams),
    Discrete(NodesFile),
}

impl FamilySpec {
    fn parse(opts: &Opts) -> CliResult<Self> {
        let family = opts.family.ok_or_else(|| usage("--family is required (jp, lag1 or discrete)"))?;
        Ok(match family {
            FamilyArg::Jp => {
                let gamma = opts.gamma.as_deref().ok_or_else(|| usage("--gamma is required for jp"))?;
                FamilySpec::Jp(JacobiPineiroParams {
                    alpha: parse_list("alpha", opts.alpha.as_deref())?,
                    beta: parse_list("beta", opts.beta.as_deref())?,
                    gamma: parse_rational(gamma.trim())?,
                })
            }
            FamilyArg::Lag1 => FamilySpec::Lag1(LaguerreFirstKindParams {
                alpha: parse_list("alpha", opts.alpha.as_deref())?,
                beta: parse_list("beta", opts.beta.as_deref())?,
            }),
            FamilyArg::Discrete => {
                let path = opts
                    .nodes_file
                    .as_deref()
                    .ok_or_else(|| usage("--nodes-file is required for the discrete family"))?;
                FamilySpec::Discrete(read_nodes_file(path)?)
            }
        })
    }

    fn all_integer(&self) -> bool {
        let int = |v: &Rational| *v.denom() == 1;
        match self {
            FamilySpec::Jp(p) => p.alpha.iter().chain(&p.beta).all(int) && int(&p.gamma),
            FamilySpec::Lag1(p) => p.alpha.iter().chain(&p.beta).all(int),
            FamilySpec::Discrete(_) => true,
        }
    }

    fn build<S: Scalar>(&self, ctx: &PrecisionContext) -> CliResult<MeasureMatrix<S>> {
        Ok(match self {
            FamilySpec::Jp(p) => MeasureMatrix::jacobi_pineiro(p.clone(), ctx)?,
            FamilySpec::Lag1(p) => MeasureMatrix::laguerre_first_kind(p.clone(), ctx)?,
            FamilySpec::Discrete(d) => {
                let nodes = d.nodes.iter().map(|v| S::from_rational(v, ctx)).collect();
                let mut weights = Vec::with_capacity(d.weights.len());
                for (i, w) in d.weights.iter().enumerate() {
                    let cols = w.first().map_or(0, Vec::len);
                    if w.iter().any(|row| row.len() != cols) {
                        return Err(usage(format!("weight {i} has ragged rows")));
                    }
                    weights.push(Matrix::from_fn(w.len(), cols, |b, a| S::from_rational(&w[b][a], ctx)));
                }
                MeasureMatrix::discrete(nodes, weights, ctx)?
            }
        })
    }
}

fn execute(cli: &Cli) -> CliResult<Output> {
    let opts = &cli.opts;
    if opts.nmax < 1 {
        return Err(usage("--nmax must be at least 1"));
    }
    let spec = FamilySpec::parse(opts)?;
    let mode = match opts.mode {
        ModeArg::Rational => Mode::Rational,
        ModeArg::Bigfloat => Mode::BigFloat,
        ModeArg::Auto if spec.all_integer() => Mode::Rational,
        ModeArg::Auto => Mode::BigFloat,
    };
    let ctx = PrecisionContext::for_mode(mode, opts.digits)?;
    match mode {
        Mode::Rational => run_command::<Rational>(cli, &spec, &ctx),
        Mode::BigFloat => run_command::<Float>(cli, &spec, &ctx),
    }
}

fn meta(cli: &Cli, ctx: &PrecisionContext) -> Value {
    let o = &cli.opts;
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": {
            "command": cli.command.name(),
            "family": o.family.map(|f| format!("{f:?}").to_lowercase()),
            "alpha": o.alpha,
            "beta": o.beta,
            "gamma": o.gamma,
            "nodes_file": o.nodes_file.as_ref().map(|p| p.display().to_string()),
            "nmax": o.nmax,
            "k": o.k,
            "size": o.size,
            "digits": ctx.digits(),
            "mode": ctx.mode().to_string(),
            "format": o.format.map(|f| format!("{f:?}").to_lowercase()),
            "side": o.side.map(|s| Side::from(s).name()),
            "suite": if cli.command == Command::Verify { Some(o.suite.as_str()) } else { None },
            "residual_tol": ctx.residual_tol_exact().to_string(),
        },
    })
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn with_meta(cli: &Cli, ctx: &PrecisionContext, key: &str, body: Value) -> Value {
    let mut obj = serde_json::Map::new();
    obj.insert("meta".into(), meta(cli, ctx));
    obj.insert(key.into(), body);
    Value::Object(obj)
}

fn csv_unsupported(cmd: Command) -> CliError {
    usage(format!("--format csv is not available for `{}`", cmd.name()))
}

fn run_command<S: Scalar>(cli: &Cli, spec: &FamilySpec, ctx: &PrecisionContext) -> CliResult<Output> {
    let opts = &cli.opts;
    let mm: MeasureMatrix<S> = spec.build(ctx)?;
    for w in mm.admissibility_warnings() {
        eprintln!("momlab: warning: {w}");
    }
    let (p, q) = (mm.p(), mm.q());
    let n_max = opts.nmax;
    let window = n_max + p.max(q) + 1;
    let tol = ctx.residual_tol::<S>();
    let format = opts.format.unwrap_or(match cli.command {
        Command::Moments => FormatArg::Csv,
        _ => FormatArg::Json,
    });
    let ok = |text: String| Ok(Output { text, pass: true });
    match cli.command {
        Command::Moments => {
            let k = opts.k.unwrap_or(p.max(q));
            let size = opts.size.unwrap_or_else(|| truncation_size(n_max, k, p, q));
            if size == 0 {
                return Err(usage("--size must be positive"));
            }
            let m = MomentMatrix::build(&mm, size, size)?;
            match format {
                FormatArg::Csv => ok(m.to_csv()),
                FormatArg::Json => ok(json_text(&with_meta(cli, ctx, "moments", m.to_json()))),
            }
        }
        Command::Factor => {
            let size = opts.size.unwrap_or(window);
            if size == 0 {
                return Err(usage("--size must be positive"));
            }
            let m = MomentMatrix::build(&mm, size, size)?;
            let f = factorize(&m, size, ctx)?;
            let residual = f.biorthogonality_residual(&m, ctx)?;
            match format {
                FormatArg::Csv => {
                    let mut out = String::from("matrix,row,col,value\n");
                    let l = f.lower(Side::Left);
                    let u = f.upper(Side::Right);
                    for (i, j, v) in l.entries().filter(|(i, j, _)| j <= i) {
                        out.push_str(&format!("L,{i},{j},\"{}\"\n", v.to_text()));
                    }
                    for (i, v) in f.d().iter().enumerate() {
                        out.push_str(&format!("D,{i},{i},\"{}\"\n", v.to_text()));
                    }
                    for (i, j, v) in u.entries().filter(|(i, j, _)| j >= i) {
                        out.push_str(&format!("U,{i},{j},\"{}\"\n", v.to_text()));
                    }
                    ok(out)
                }
                FormatArg::Json => {
                    let mut v = with_meta(cli, ctx, "factorization", f.to_json());
                    v["residuals"] = json!({ "biorthogonality": residual.to_text() });
                    Ok(Output {
                        text: json_text(&v),
                        pass: residual <= tol,
                    })
                }
            }
        }
        Command::Polys => {
            let m = MomentMatrix::build(&mm, window, window)?;
            let f = factorize(&m, window, ctx)?;
            let sides: Vec<Side> = match opts.side {
                Some(s) => vec![s.into()],
                None => vec![Side::Left, Side::Right],
            };
            let tables: Vec<PolynomialTable<S>> = sides
                .iter()
                .flat_map(|&side| [f.polynomials(PolySet::B, side), f.polynomials(PolySet::A, side)])
                .collect();
            match format {
                FormatArg::Csv => {
                    let mut out = String::from("set,side,n,component,degree,value\n");
                    for t in &tables {
                        let set = if t.set() == PolySet::A { "A" } else { "B" };
                        for n in 0..=n_max {
                            for c in 0..t.components() {
                                for (d, v) in t.component(n, c).iter().enumerate() {
                                    out.push_str(&format!(
                                        "{set},{},{n},{},{d},\"{}\"\n",
                                        t.side().name(),
                                        c + 1,
                                        v.to_text()
                                    ));
                                }
                            }
                        }
                    }
                    ok(out)
                }
                FormatArg::Json => {
                    let mut body = serde_json::Map::new();
                    for t in &tables {
                        let set = if t.set() == PolySet::A { "A" } else { "B" };
                        let list: Vec<Value> = t
                            .to_json()
                            .as_array()
                            .expect("table JSON is an array")
                            .iter()
                            .filter(|e| e["n"].as_u64().is_some_and(|n| n as usize <= n_max))
                            .cloned()
                            .collect();
                        body.insert(format!("{set}_{}", t.side().name()), Value::Array(list));
                    }
                    ok(json_text(&with_meta(cli, ctx, "polynomials", Value::Object(body))))
                }
            }
        }
        Command::Recurrence => {
            let side: Side = opts.side.map_or(Side::Left, Side::from);
            let m = MomentMatrix::build(&mm, window, window)?;
            let f = factorize(&m, window, ctx)?;
            let t = build_t(&f, side, n_max)?;
            match format {
                FormatArg::Csv => ok(t.to_csv()),
                FormatArg::Json => {
                    let band = t.band_violation(ctx);
                    let routes = t.max_abs_diff(&build_t_via_upper(&f, side, n_max)?, ctx);
                    let pass = band <= tol && routes <= tol;
                    let mut v = with_meta(cli, ctx, "recurrence", t.to_json());
                    v["residuals"] = json!({ "band": band.to_text(), "routes": routes.to_text() });
                    Ok(Output { text: json_text(&v), pass })
                }
            }
        }
        Command::Bidiag => {
            if format == FormatArg::Csv {
                return Err(csv_unsupported(cli.command));
            }
            let k_left = opts.k.unwrap_or(p);
            let k_right = opts.k.unwrap_or(q);
            let left = run_chain(&mm, Side::Left, k_left, n_max)?;
            let right = run_chain(&mm, Side::Right, k_right, n_max)?;
            let exact = k_left == p && k_right == q;
            let mut pass = true;
            let mut reports = Vec::new();
            let sides: Vec<Side> = match opts.side {
                Some(s) => vec![s.into()],
                None => vec![Side::Left, Side::Right],
            };
            for side in sides {
                let chain: &BidiagonalChain<S> = if side == Side::Left { &left } else { &right };
                let theorem = if exact { Some(assemble_t(&left, &right, side, n_max)?.1) } else { None };
                let mut darboux_res = Vec::new();
                if exact {
                    for k in 1..=chain.steps() {
                        darboux_res.push(darboux_permuted(&left, &right, side, k, n_max)?.1);
                    }
                }
                let residuals = ChainResiduals {
                    theorem,
                    darboux: darboux_res,
                    triple_equality_max: chain.triple_equality_max()?,
                };
                let bidiag = chain.bidiagonality_residual();
                let worst = residuals
                    .darboux
                    .iter()
                    .chain(residuals.theorem.iter())
                    .cloned()
                    .fold(max_of(bidiag.clone(), residuals.triple_equality_max.clone()), max_of);
                pass &= worst <= tol;
                let mut r = chain.report_json(&residuals);
                r["residuals"]["bidiagonality"] = json!(bidiag.to_text());
                reports.push(r);
            }
            let mut v = with_meta(cli, ctx, "chains", Value::Array(reports));
            v["pass"] = json!(pass);
            Ok(Output { text: json_text(&v), pass })
        }
        Command::Darboux => {
            if format == FormatArg::Csv {
                return Err(csv_unsupported(cli.command));
            }
            let side: Side = opts.side.map_or(Side::Left, Side::from);
            let k = opts.k.unwrap_or(1);
            let limit = if side == Side::Left { p } else { q };
            if k > limit {
                return Err(usage(format!("--k must be at most {limit} on the {} side", side.name())));
            }
            let left = run_chain(&mm, Side::Left, p, n_max)?;
            let right = run_chain(&mm, Side::Right, q, n_max)?;
            let (t, permuted) = darboux_permuted(&left, &right, side, k, n_max)?;
            let chain = if side == Side::Left { &left } else { &right };
            let base_t = build_t(&chain.stages()[0].factors, side, n_max)?;
            let (_, conjugated) = darboux(chain, &base_t, k)?;
            let pass = permuted <= tol && conjugated <= tol;
            let body = json!({
                "side": side.name(),
                "k": k,
                "recurrence": t.to_json(),
                "residuals": { "permuted": permuted.to_text(), "conjugated": conjugated.to_text() },
                "pass": pass,
            });
            Ok(Output {
                text: json_text(&with_meta(cli, ctx, "darboux", body)),
                pass,
            })
        }
        Command::Verify => {
            if format == FormatArg::Csv {
                return Err(csv_unsupported(cli.command));
            }
            let suites = parse_suites(&opts.suite)?;
            let results = run_suites(&mm, n_max, &suites)?;
            let pass = results.iter().all(|r| r.pass);
            let mut v = with_meta(
                cli,
                ctx,
                "suites",
                Value::Array(results.iter().map(|r| r.to_json()).collect()),
            );
            v["pass"] = json!(pass);
            Ok(Output { text: json_text(&v), pass })
        }
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use bingap_core::csp::{parse_formula, reduce_e4_to_e3, serialize_formula};
use bingap_core::lattice::{
    binary_cvp, cvp_search, lindisc_grid_lb, mu_lower_bound_with, CvpOptions, CvpResult, DenseMatrix, PNorm,
    Target, DEFAULT_NODE_CAP,
};
use bingap_core::reduction::{
    build_a_prime, find_p0, gamma_closed_form, gamma_curve, parse_instance, reduce_sat_to_crp, serialize_instance,
    special_targets, unused_variables,
};
use bingap_core::verifier::{run_suite, Suite, VerifyOptions};
use bingap_core::Error;

const EXIT_VERIFY: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_RESOURCE: u8 = 3;

/// Worker count for parallel searches; defaults to all cores.
const THREADS_ENV: &str = "BINGAP_THREADS";

#[derive(Parser)]
#[command(name = "bingap", version, about = "NAE-SAT to lattice covering-radius reductions and their checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Apply a reduction to a formula file.
    Reduce(ReduceArgs),
    /// Solve a lattice problem on a matrix or instance file.
    Solve(SolveArgs),
    /// Run a verification suite and print JSON reports.
    Verify(VerifyArgs),
    /// Evaluate the approximation factor γ(p), or emit its curve as CSV.
    Gamma(GammaArgs),
    /// Find the p at which γ(p) = 1.
    P0(P0Args),
}

#[derive(Clone, Copy, ValueEnum)]
enum ReduceKind {
    E4toe3,
    Sat2crp,
    #[value(name = "sat2crp-pi2")]
    Sat2crpPi2,
}

#[derive(Args)]
struct ReduceArgs {
    kind: ReduceKind,
    input: PathBuf,
    /// Norm; a number ≥ 1 or `inf`. Defaults to 2 for `sat2crp` and ∞ for `sat2crp-pi2`.
    #[arg(long)]
    p: Option<String>,
    /// Completeness level ε of the threshold.
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    /// Soundness level δ of the recorded gap; defaults to min(15/16, ε).
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveKind {
    Cvp,
    BinaryCvp,
    LindiscLb,
    MuLb,
}

#[derive(Args)]
struct SolveArgs {
    kind: SolveKind,
    /// A matrix file, or an instance written by `reduce`.
    matrix: PathBuf,
    /// Target point, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    target: Option<String>,
    /// Target coefficients w (target B·w), comma separated, or `half` for ½·1.
    /// Repeat for several `mu-lb` targets.
    #[arg(long, allow_hyphen_values = true)]
    coeffs: Vec<String>,
    #[arg(long, default_value = "2")]
    p: String,
    /// Grid resolution for `lindisc-lb`.
    #[arg(long, default_value_t = 6)]
    grid: u32,
    /// Initial search radius for `cvp`.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    node_cap: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Gadget,
    Identity,
    Completeness,
    Rounding,
    Np,
    Pi2,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    suite: SuiteArg,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated norms, e.g. `1,2,inf`.
    #[arg(long)]
    p: Option<String>,
    /// Record wall-clock time in each report.
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GammaArgs {
    #[command(subcommand)]
    curve: Option<GammaCmd>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GammaCmd {
    /// Log-spaced samples of γ(p) as CSV with header `p,gamma`.
    Curve {
        #[arg(long, default_value_t = 1.0)]
        pmin: f64,
        #[arg(long, default_value_t = 10000.0)]
        pmax: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct P0Args {
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A command failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Input(_) | Error::Parse { .. } => EXIT_INPUT,
            Error::Resource { .. } => EXIT_RESOURCE,
            Error::LemmaViolation(_) => EXIT_VERIFY,
        };
        let mut message = e.to_string();
        if let Error::Resource { partial: Some(best), .. } = &e {
            message.push_str(&format!("\nbest found before the cap: {}", result_json(best)));
        }
        Failure { code, message }
    }
}

fn input_failure(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

type CmdResult = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input_failure(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| input_failure(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_p(s: &str) -> Result<PNorm, Failure> {
    Ok(s.parse::<PNorm>()?)
}

fn parse_vec(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            if let Some((a, b)) = t.split_once('/') {
                let (a, b) = (a.trim().parse::<f64>(), b.trim().parse::<f64>());
                if let (Ok(a), Ok(b)) = (a, b) {
                    return Ok(a / b);
                }
            }
            t.parse::<f64>().map_err(|_| input_failure(format!("bad number `{t}`")))
        })
        .collect()
}

/// Formats like C's `%.12g`.
fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci.split_once('e').map(|(_, e)| e.parse().unwrap_or(0)).unwrap_or(0);
    if (-5..12).contains(&exp) {
        let fixed = format!("{x:.*}", (11 - exp).max(0) as usize);
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    } else {
        let (mant, e) = sci.split_once('e').unwrap_or((&sci, "0"));
        let mant = if mant.contains('.') { mant.trim_end_matches('0').trim_end_matches('.') } else { mant };
        format!("{mant}e{e}")
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn result_json(r: &CvpResult) -> Value {
    json!(r)
}

fn cmd_reduce(a: ReduceArgs) -> CmdResult {
    let phi = parse_formula(&read(&a.input)?)?;
    let text = match a.kind {
        ReduceKind::E4toe3 => serialize_formula(&reduce_e4_to_e3(&phi)?),
        ReduceKind::Sat2crp => {
            let p = parse_p(a.p.as_deref().unwrap_or("2"))?;
            if p.is_infinite() {
                return Err(input_failure(
                    "sat2crp needs finite p: the distance threshold (ε m (4/3)^p + …)^{1/p} has no p = ∞ form",
                ));
            }
            let unused = unused_variables(&phi);
            if !unused.is_empty() {
                eprintln!(
                    "warning: variables {unused:?} occur in no constraint; the basis is not of full column rank"
                );
            }
            let delta = a.delta.unwrap_or(a.eps.min(15.0 / 16.0));
            serialize_instance(&reduce_sat_to_crp(&phi.unquantified(), p, a.eps, delta)?)
        }
        ReduceKind::Sat2crpPi2 => {
            if !parse_p(a.p.as_deref().unwrap_or("inf"))?.is_infinite() {
                return Err(input_failure("sat2crp-pi2 is defined for p = ∞ only"));
            }
            serialize_instance(&build_a_prime(&phi)?)
        }
    };
    emit(&a.out, &text)?;
    Ok(0)
}

struct Loaded {
    matrix: DenseMatrix,
    /// Special targets when the file is a quantified instance.
    special: Option<Vec<Vec<f64>>>,
}

fn load_matrix(path: &Path) -> Result<Loaded, Failure> {
    let text = read(path)?;
    let first = text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#'));
    if first.is_some_and(|l| l.starts_with('{')) {
        let inst = parse_instance(&text)?;
        let special = if inst.source.universal().unwrap_or(0) > 0 {
            Some(special_targets(&inst.source)?.into_iter().map(|t| t.coeffs).collect())
        } else {
            None
        };
        Ok(Loaded {
            matrix: inst.matrix,
            special,
        })
    } else {
        Ok(Loaded {
            matrix: bingap_core::lattice::parse_matrix(&text)?,
            special: None,
        })
    }
}

fn coeff_targets(specs: &[String], cols: usize) -> Result<Vec<Vec<f64>>, Failure> {
    specs
        .iter()
        .map(|s| {
            let w = if s.trim() == "half" { vec![0.5; cols] } else { parse_vec(s)? };
            if w.len() != cols {
                return Err(input_failure(format!("coefficient target has length {}, expected {cols}", w.len())));
            }
            Ok(w)
        })
        .collect()
}

fn point_target(a: &SolveArgs, b: &DenseMatrix) -> Result<Vec<f64>, Failure> {
    match (&a.target, a.coeffs.as_slice()) {
        (Some(t), []) => parse_vec(t),
        (None, [w]) => Ok(b.mul_vec(&coeff_targets(std::slice::from_ref(w), b.cols())?[0])),
        _ => Err(input_failure("give exactly one of --target or --coeffs")),
    }
}

fn cmd_solve(a: SolveArgs) -> CmdResult {
    let loaded = load_matrix(&a.matrix)?;
    let b = &loaded.matrix;
    let p = parse_p(&a.p)?;
    let opts = CvpOptions {
        node_cap: a.node_cap,
        ..CvpOptions::default()
    };
    let out = match a.kind {
        SolveKind::Cvp => {
            let res = match (&a.target, a.coeffs.as_slice()) {
                (Some(t), []) => cvp_search(b, Target::Point(&parse_vec(t)?), p, a.radius, &opts)?,
                (None, [_]) => {
                    let w = coeff_targets(&a.coeffs, b.cols())?.remove(0);
                    cvp_search(b, Target::Coefficients(&w), p, a.radius, &opts)?
                }
                _ => return Err(input_failure("give exactly one of --target or --coeffs")),
            };
            json!({"kind": "cvp", "p": p, "result": res})
        }
        SolveKind::BinaryCvp => {
            let t = point_target(&a, b)?;
            json!({"kind": "binary-cvp", "p": p, "result": binary_cvp(b, &t, p)?})
        }
        SolveKind::LindiscLb => {
            let lb = lindisc_grid_lb(b, p, a.grid)?;
            json!({"kind": "lindisc-lb", "p": p, "grid": a.grid, "lower_bound": lb.value, "witness": lb.witness, "closest": lb.closest})
        }
        SolveKind::MuLb => {
            let targets = if !a.coeffs.is_empty() {
                coeff_targets(&a.coeffs, b.cols())?
            } else if let Some(s) = loaded.special {
                s
            } else {
                vec![vec![0.5; b.cols()]]
            };
            let lb = mu_lower_bound_with(b, p, &targets, &opts)?;
            json!({"kind": "mu-lb", "p": p, "targets": targets.len(), "lower_bound": lb.value, "witness": lb.witness, "closest": lb.closest})
        }
    };
    emit(&a.out, &pretty(&out))?;
    Ok(0)
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    let suite = match a.suite {
        SuiteArg::Gadget => Suite::Gadget,
        SuiteArg::Identity => Suite::Identity,
        SuiteArg::Completeness => Suite::Completeness,
        SuiteArg::Rounding => Suite::Rounding,
        SuiteArg::Np => Suite::Np,
        SuiteArg::Pi2 => Suite::Pi2,
        SuiteArg::All => Suite::All,
    };
    let ps = match &a.p {
        Some(list) => Some(list.split(',').map(parse_p).collect::<Result<Vec<_>, _>>()?),
        None => None,
    };
    let opts = VerifyOptions {
        trials: a.trials,
        seed: a.seed,
        ps,
        timing: a.timing,
    };
    let reports = run_suite(suite, &opts)?;
    let ok = reports.iter().all(|r| r.passed());
    for r in &reports {
        eprintln!(
            "{:<28} {:>9} trials  {} failures  {} inconclusive",
            r.lemma_id, r.trials, r.failures, r.inconclusive
        );
    }
    emit(&a.out, &pretty(&json!(reports)))?;
    Ok(if ok { 0 } else { EXIT_VERIFY })
}

fn cmd_gamma(a: GammaArgs) -> CmdResult {
    match a.curve {
        Some(GammaCmd::Curve { pmin, pmax, steps, out }) => {
            let mut csv = String::from("p,gamma\n");
            for (p, g) in gamma_curve(pmin, pmax, steps)? {
                csv.push_str(&format!("{},{}\n", sig12(p), sig12(g)));
            }
            emit(&out.or(a.out), &csv)?;
        }
        None => {
            let p = a.p.ok_or_else(|| input_failure("give --p or use `gamma curve`"))?;
            let g = gamma_closed_form(PNorm::new(p)?)?;
            emit(&a.out, &format!("{}\n", sig12(g)))?;
        }
    }
    Ok(0)
}

fn cmd_p0(a: P0Args) -> CmdResult {
    let p0 = find_p0(a.tol)?;
    emit(&a.out, &format!("{}\n", sig12(p0)))?;
    Ok(0)
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| input_failure(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(input_failure(format!("{THREADS_ENV} must be positive")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| input_failure(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> CmdResult {
        configure_threads()?;
        match cli.cmd {
            Cmd::Reduce(a) => cmd_reduce(a),
            Cmd::Solve(a) => cmd_solve(a),
            Cmd::Verify(a) => cmd_verify(a),
            Cmd::Gamma(a) => cmd_gamma(a),
            Cmd::P0(a) => cmd_p0(a),
        }
    };
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

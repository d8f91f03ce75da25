//! `cylnorm`: exact cylinder-intersection norms and lower-bound certificates
//! from the command line. Results go to stdout (or `--output`) as JSON; a
//! short human-readable summary goes to stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use cylnorm::approxdeg::{alpha_d, deg_alpha, dual_polynomial, verify_dual_polynomial};
use cylnorm::boolfun::{BooleanFunction, FunctionJson};
use cylnorm::certify::{
    cc_bounds, check_certificate, contraction_chain_check, degree_to_mu_alpha, disjointness_bound, hadamard_bound,
    proof_size_bound, BoundCertificate, Conversion,
};
use cylnorm::cylinders::mu_star;
use cylnorm::norms::{Alpha, NormEngine};
use cylnorm::pattern::{
    build_pattern_tensor, degenerate_cube_stats, embed_into_disj, normalisation_holds, size_formula,
    uniform_coverage_check, PatternSpecJson,
};
use cylnorm::rational::{self, Rational};
use cylnorm::tensors::{RationalTensor, SignTensor, TensorJson};
use cylnorm::{Error, Limits};

const EXIT_OTHER: u8 = 1;
const EXIT_VALIDATION: u8 = 3;
const EXIT_CAPACITY: u8 = 4;
const EXIT_CONDITION: u8 = 5;
const EXIT_CHECK_FAILED: u8 = 6;

#[derive(Parser)]
#[command(name = "cylnorm", version, about = "Exact cylinder intersection norms and NOF lower-bound certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Write the JSON result here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Suppress the summary on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    /// Cap on dense tensor size.
    #[arg(long, global = true, default_value_t = 1 << 20)]
    max_tensor_size: u64,
    /// Cap on candidate cylinder intersections per search.
    #[arg(long, global = true, default_value_t = 1 << 25)]
    max_search: u64,
    /// Cap on distinct basis tensors in a norm LP.
    #[arg(long, global = true, default_value_t = 1 << 14)]
    max_basis: u64,
    /// Cap on arity for approximate-degree LPs.
    #[arg(long, global = true, default_value_t = 6)]
    max_adeg_arity: u32,
}

impl Common {
    fn limits(&self) -> Limits {
        Limits {
            max_tensor_size: self.max_tensor_size,
            max_search: self.max_search,
            max_basis: self.max_basis,
            max_adeg_arity: self.max_adeg_arity,
            ..Limits::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NormKind {
    Mu,
    MuPm,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Primal,
    Dual,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConversionArg {
    None,
    Deterministic,
    Randomized,
    Nondeterministic,
}

#[derive(Args)]
struct FunctionArgs {
    /// Built-in function: OR, AND, XOR, MAJ, DISJ.
    #[arg(long = "fn", value_name = "NAME", conflicts_with = "function")]
    name: Option<String>,
    /// Arity for a built-in function.
    #[arg(long)]
    m: Option<u32>,
    /// JSON function file.
    #[arg(long, value_name = "PATH")]
    function: Option<PathBuf>,
}

impl FunctionArgs {
    fn load(&self, limits: &Limits) -> Result<BooleanFunction, CliError> {
        let json = match (&self.name, &self.function) {
            (Some(name), None) => {
                let m = self.m.ok_or_else(|| CliError::usage("--fn needs --m"))?;
                FunctionJson::named(name, m)
            }
            (None, Some(path)) => read_json(path)?,
            _ => return Err(CliError::usage("give --fn NAME --m M or --function PATH")),
        };
        Ok(json.to_boolean(limits)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// mu(B) or mu_pm(B) of a rational tensor.
    Norm {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long, value_enum, default_value = "mu")]
        kind: NormKind,
    },
    /// mu^alpha(A) of a sign tensor through the primal or dual LP.
    MuAlpha {
        #[arg(long)]
        tensor: PathBuf,
        /// Rational >= 1 or "inf".
        #[arg(long)]
        alpha: Alpha,
        #[arg(long, value_enum, default_value = "primal")]
        method: MethodArg,
    },
    /// disc(A) with an optimal distribution.
    Disc {
        #[arg(long)]
        tensor: PathBuf,
    },
    /// mu*(Q) with a maximising cylinder intersection.
    MuStar {
        #[arg(long)]
        tensor: PathBuf,
    },
    /// deg_alpha(f), with alpha_d(f) at that degree and one below.
    Adeg {
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long)]
        alpha: Alpha,
    },
    /// A verified dual polynomial for f.
    Dualpoly {
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long)]
        alpha: Alpha,
    },
    /// Structural report on a pattern tensor; optionally writes the tensor.
    Pattern {
        /// PatternSpec JSON file.
        #[arg(long)]
        spec: PathBuf,
        /// Where to write the built tensor.
        #[arg(long)]
        tensor_out: Option<PathBuf>,
    },
    /// Selector embedding of A_{k,M,OR_m} into disjointness.
    EmbedDisj {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        m: u32,
        #[arg(long = "M")]
        side: u32,
    },
    /// Hadamard certificate for a sign tensor or a Sylvester matrix.
    Hadamard {
        #[arg(long, conflicts_with = "sylvester")]
        tensor: Option<PathBuf>,
        /// Use the 2^L x 2^L Sylvester matrix.
        #[arg(long, value_name = "L")]
        sylvester: Option<u32>,
        #[arg(long, value_enum, default_value = "none")]
        conversion: ConversionArg,
        #[arg(long, default_value = "1/4")]
        epsilon: String,
    },
    /// Contraction chain for a rational tensor.
    ContractionCheck {
        #[arg(long)]
        tensor: PathBuf,
    },
    /// Degree-to-norm certificate for a pattern tensor.
    CertifyDegree {
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long)]
        k: u32,
        #[arg(long = "M")]
        side: u32,
        #[arg(long)]
        alpha: Alpha,
        #[arg(long)]
        alpha0: Alpha,
        #[arg(long, value_enum, default_value = "none")]
        conversion: ConversionArg,
        #[arg(long, default_value = "1/4")]
        epsilon: String,
    },
    /// Randomized lower bound for disjointness.
    CertifyDisj {
        #[arg(long)]
        n: String,
        #[arg(long)]
        k: u32,
        /// Only 1/4 is supported.
        #[arg(long, default_value = "1/4")]
        epsilon: String,
    },
    /// Proof-size exponent arithmetic.
    ProofSize {
        #[arg(long)]
        n: String,
        #[arg(long)]
        k: u32,
    },
    /// Re-validate a certificate file.
    Check {
        #[arg(long)]
        certificate: PathBuf,
    },
}

#[derive(Debug)]
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(msg: &str) -> Self {
        CliError { code: EXIT_VALIDATION, message: msg.to_owned() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Dimension(_) | Error::Validation(_) | Error::Parse(_) => EXIT_VALIDATION,
            Error::Capacity { .. } => EXIT_CAPACITY,
            Error::ConditionViolated(_) => EXIT_CONDITION,
            Error::Internal(_) => EXIT_OTHER,
        };
        CliError { code, message: e.to_string() }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError { code: EXIT_OTHER, message: format!("cannot read {}: {e}", path.display()) })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError { code: EXIT_VALIDATION, message: format!("cannot parse {}: {e}", path.display()) })
}

fn load_rational(path: &Path, limits: &Limits) -> Result<RationalTensor, CliError> {
    let json: TensorJson = read_json(path)?;
    Ok(RationalTensor::from_json(&json, limits)?)
}

fn load_sign(path: &Path, limits: &Limits) -> Result<SignTensor, CliError> {
    let json: TensorJson = read_json(path)?;
    Ok(SignTensor::from_json(&json, limits)?)
}

fn parse_rational(s: &str) -> Result<Rational, CliError> {
    Ok(rational::parse(s)?)
}

fn parse_n(s: &str) -> Result<num_bigint::BigInt, CliError> {
    let r = parse_rational(s)?;
    if !r.is_integer() {
        return Err(CliError::usage("n must be an integer"));
    }
    Ok(r.to_integer())
}

fn convert(cert: BoundCertificate, conversion: ConversionArg, epsilon: &str) -> Result<BoundCertificate, CliError> {
    let conv = match conversion {
        ConversionArg::None => return Ok(cert),
        ConversionArg::Deterministic => Conversion::Deterministic,
        ConversionArg::Randomized => Conversion::Randomized { epsilon: parse_rational(epsilon)? },
        ConversionArg::Nondeterministic => Conversion::Nondeterministic,
    };
    Ok(cc_bounds(&cert, &conv)?)
}

/// Output value plus summary lines; `failed` marks a check that did not pass.
struct Outcome {
    value: Value,
    summary: String,
    failed: bool,
}

impl Outcome {
    fn ok(value: Value, summary: String) -> Self {
        Outcome { value, summary, failed: false }
    }

    fn certificate(cert: &BoundCertificate) -> Self {
        Outcome::ok(serde_json::to_value(cert).expect("serialisable"), cert.render())
    }
}

fn run(command: &Command, limits: &Limits) -> Result<Outcome, CliError> {
    let engine = NormEngine::new(*limits);
    Ok(match command {
        Command::Norm { tensor, kind } => {
            let b = load_rational(tensor, limits)?;
            let r = match kind {
                NormKind::Mu => engine.mu(&b)?,
                NormKind::MuPm => engine.mu_pm(&b)?,
            };
            let summary = format!("value = {}", rational::format(&r.value));
            Outcome::ok(serde_json::to_value(r.to_json()).expect("serialisable"), summary)
        }
        Command::MuAlpha { tensor, alpha, method } => {
            let a = load_sign(tensor, limits)?;
            let mut out = serde_json::Map::new();
            let mut summary = Vec::new();
            if matches!(method, MethodArg::Primal | MethodArg::Both) {
                let r = engine.mu_alpha_primal(&a, alpha)?;
                summary.push(format!("primal value = {}", rational::format(&r.value)));
                out.insert("primal".into(), serde_json::to_value(r.to_json()).expect("serialisable"));
            }
            if matches!(method, MethodArg::Dual | MethodArg::Both) {
                let r = engine.mu_alpha_dual(&a, alpha)?;
                summary.push(format!("dual value = {}", rational::format(&r.value)));
                out.insert("dual".into(), serde_json::to_value(r.to_json()).expect("serialisable"));
            }
            out.insert("alpha".into(), json!(alpha.to_string()));
            Outcome::ok(Value::Object(out), summary.join("\n"))
        }
        Command::Disc { tensor } => {
            let a = load_sign(tensor, limits)?;
            let r = engine.disc(&a)?;
            let summary = format!("disc = {}", rational::format(&r.value));
            Outcome::ok(serde_json::to_value(r.to_json()).expect("serialisable"), summary)
        }
        Command::MuStar { tensor } => {
            let q = load_rational(tensor, limits)?;
            let r = mu_star(&q, limits)?;
            let value = json!({
                "value": rational::format(&r.value),
                "witness": r.witness.to_json(),
                "evaluations": r.evaluations,
            });
            Outcome::ok(value, format!("mu* = {} ({} evaluations)", rational::format(&r.value), r.evaluations))
        }
        Command::Adeg { function, alpha } => {
            let f = function.load(limits)?;
            let d = deg_alpha(&f, alpha, limits)?;
            let at = alpha_d(&f, d, limits)?;
            let below = if d > 0 { Some(alpha_d(&f, d - 1, limits)?.value.to_string()) } else { None };
            let value = json!({
                "function": f.to_compact(),
                "alpha": alpha.to_string(),
                "degree": d,
                "alpha_d": at.value.to_string(),
                "alpha_d_minus_1": below,
            });
            Outcome::ok(value, format!("deg_{alpha}(f) = {d}"))
        }
        Command::Dualpoly { function, alpha } => {
            let f = function.load(limits)?;
            let dp = dual_polynomial(&f, alpha, limits)?;
            let report = verify_dual_polynomial(&dp, &f, alpha);
            let failed = !report.passed();
            let value = json!({ "dual_polynomial": dp.to_json(), "verification": report });
            let summary = format!(
                "vanishing degree {}, correlation {}, verification {}",
                dp.vanishing_degree,
                rational::format(&dp.correlation),
                if failed { "FAILED" } else { "passed" }
            );
            Outcome { value, summary, failed }
        }
        Command::Pattern { spec, tensor_out } => {
            let json: PatternSpecJson = read_json(spec)?;
            let s = json.to_spec(limits)?;
            let coverage = uniform_coverage_check(&s, limits)?;
            let normalised = normalisation_holds(&s, limits)?;
            let cubes = degenerate_cube_stats(s.k, s.side, s.m, limits)?;
            let tensor = build_pattern_tensor(&s, limits)?;
            let size_ok = size_formula(s.k, s.m, s.side) == num_bigint::BigUint::from(tensor.size());
            if let Some(path) = tensor_out {
                write_value(Some(path), &serde_json::to_value(tensor.to_json()).expect("serialisable"))?;
            }
            let fmt_all = |v: &[Rational]| v.iter().map(rational::format).collect::<Vec<_>>();
            let value = json!({
                "spec": s.to_json(),
                "shape": tensor.shape().dims(),
                "size": tensor.size(),
                "size_formula_holds": size_ok,
                "coverage": coverage,
                "normalisation_holds": normalised,
                "degenerate_cubes": {
                    "p1": rational::format(&cubes.p1),
                    "distribution": fmt_all(&cubes.distribution),
                    "enumerated": cubes.enumerated.as_deref().map(fmt_all),
                    "matches_enumeration": cubes.matches_enumeration(),
                    "union_bound": fmt_all(&cubes.union_bound),
                    "union_bound_holds": cubes.union_bound_holds(),
                },
                "flags": s.flags(),
            });
            let failed = !(size_ok && coverage.uniform && cubes.union_bound_holds() && cubes.matches_enumeration() != Some(false));
            let summary = format!(
                "size {} (formula {}), uniform coverage {}, normalisation {}",
                tensor.size(),
                if size_ok { "ok" } else { "MISMATCH" },
                coverage.uniform,
                normalised
            );
            Outcome { value, summary, failed }
        }
        Command::EmbedDisj { k, m, side } => {
            let r = embed_into_disj(*k, *m, *side, limits)?;
            let failed = !r.matches_or;
            let summary = format!("n' = {}, {} entries checked, matches OR: {}, matches DISJ: {}", r.n_prime, r.entries_checked, r.matches_or, r.matches_disj);
            Outcome { value: serde_json::to_value(&r).expect("serialisable"), summary, failed }
        }
        Command::Hadamard { tensor, sylvester, conversion, epsilon } => {
            let h = match (tensor, sylvester) {
                (Some(p), None) => load_sign(p, limits)?,
                (None, Some(l)) => SignTensor::sylvester(*l)?,
                _ => return Err(CliError::usage("give --tensor PATH or --sylvester L")),
            };
            let cert = convert(hadamard_bound(&h, limits)?, *conversion, epsilon)?;
            Outcome::certificate(&cert)
        }
        Command::ContractionCheck { tensor } => {
            let b = load_rational(tensor, limits)?;
            Outcome::certificate(&contraction_chain_check(&b, limits)?)
        }
        Command::CertifyDegree { function, k, side, alpha, alpha0, conversion, epsilon } => {
            let f = function.load(limits)?;
            let cert = convert(degree_to_mu_alpha(&f, *k, *side, alpha, alpha0, limits)?, *conversion, epsilon)?;
            Outcome::certificate(&cert)
        }
        Command::CertifyDisj { n, k, epsilon } => {
            if parse_rational(epsilon)? != rational::rat(1, 4) {
                return Err(CliError::usage("the disjointness pipeline is fixed at epsilon = 1/4"));
            }
            Outcome::certificate(&disjointness_bound(&parse_n(n)?, *k)?)
        }
        Command::ProofSize { n, k } => Outcome::certificate(&proof_size_bound(&parse_n(n)?, *k)?),
        Command::Check { certificate } => {
            let cert: BoundCertificate = read_json(certificate)?;
            let report = check_certificate(&cert);
            let mut summary = format!(
                "{}: {} verified steps, {} external assumptions",
                if report.valid { "valid" } else { "INVALID" },
                report.steps_checked,
                report.external_assumptions
            );
            for e in &report.errors {
                summary.push_str(&format!("\n  {e}"));
            }
            Outcome { failed: !report.valid, value: serde_json::to_value(&report).expect("serialisable"), summary }
        }
    })
}

fn write_value(path: Option<&PathBuf>, value: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serialisable") + "\n";
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| CliError { code: EXIT_OTHER, message: format!("cannot write {}: {e}", p.display()) }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let limits = cli.common.limits();
    let result = run(&cli.command, &limits).and_then(|outcome| {
        write_value(cli.common.output.as_ref(), &outcome.value)?;
        if !cli.common.quiet {
            eprintln!("{}", outcome.summary);
        }
        Ok(outcome.failed)
    });
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(EXIT_CHECK_FAILED),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

//! The `genshift` command line: one subcommand per construction, reports as
//! JSON (or CSV where a series makes sense), and an exit code that says
//! whether the hypotheses were verified.
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | verified on the horizon |
//! | 1 | invalid input or internal error |
//! | 2 | a hypothesis fails (e.g. no null subsequence within the horizon) |
//! | 3 | inconclusive on the horizon |

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use genshift::approx::{
    approximate_mixture_by_one_shift, assemble_one_shift, junctions, ApproximationResult,
    ChainBuilder, ChainFamily, InvariantReport, Provider,
};
use genshift::document::{parse_operator_spec, OperatorDocument};
use genshift::operator::{DualNorms, WeightedShift};
use genshift::scalar::{parse_rational, rational_to_string};
use genshift::shift::{
    muller_hypothesis_check, orbit_visit_evidence, recognize_generalized_shift, AdaptedSet,
    MullerVerdict, OrbitConfig, OrbitTarget, Verdict,
};
use genshift::{
    gk_density_report, spectral_radius_estimate, weight_null_subsequence, BigRational, Error,
    Exact, Float, NormMode, OperatorExpr, Scalar, SparseVector, WeightSequence,
};
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Parser, Debug)]
#[command(
    name = "genshift",
    version,
    about = "Approximate operators by generalised backward 1-shifts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub config: RunConfig,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the chain family of an operator and check its invariants.
    Chains { document: PathBuf },
    /// Perturb an operator into a generalised backward 1-shift.
    Perturb { document: PathBuf },
    /// Full pipeline: nilpotent models directly, shift mixtures through the
    /// compact correction.
    Approximate { document: PathBuf },
    /// Recognise generalised-shift form on the standard basis and check
    /// kernel and range membership.
    Verify {
        document: PathBuf,
        /// Verify the perturbed operator on its own chain family instead.
        #[arg(long)]
        perturbed: bool,
    },
    /// Windowed geometric means and a null subsequence of shift weights.
    Weights { document: PathBuf },
    /// Orbit of `lambda + S'` on a truncation (heuristic evidence only).
    Orbit {
        document: PathBuf,
        /// Real part of lambda; `|lambda| = 1` is required.
        #[arg(long, default_value = "1", value_parser = parse_scalar_part)]
        lambda: BigRational,
        #[arg(long, default_value = "0", value_parser = parse_scalar_part)]
        lambda_im: BigRational,
        /// Number of random targets.
        #[arg(long, default_value_t = 3)]
        targets: usize,
        #[arg(long, default_value_t = 0.1)]
        radius: f64,
        /// Iterate `lambda + S` rather than the perturbed operator.
        #[arg(long)]
        unperturbed: bool,
    },
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct RunConfig {
    #[arg(long, global = true, default_value = "1/10", value_parser = parse_eps)]
    #[serde(serialize_with = "ser_rational")]
    pub eps: BigRational,
    /// Number of vectors, positions or coordinates examined.
    #[arg(long, global = true, default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..))]
    pub horizon: u64,
    /// Kernel exponent search limit; defaults to 10 times the horizon.
    #[arg(long, global = true)]
    pub kmax: Option<usize>,
    /// Number of chains (`chains`, `perturb`) or thresholds (`weights`).
    #[arg(long, global = true)]
    pub chains: Option<usize>,
    /// Truncation dimension.
    #[arg(long, global = true, default_value_t = 64)]
    pub dim: usize,
    /// Iteration cap.
    #[arg(long, global = true, default_value_t = 5000)]
    pub iters: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    /// Overrides the document's norm.
    #[arg(long, global = true, value_parser = parse_norm)]
    #[serde(serialize_with = "ser_norm_opt")]
    pub norm: Option<NormMode>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Largest range order checked by `verify`.
    #[arg(long, global = true, default_value_t = 5)]
    pub rmax: usize,
    /// Largest window for geometric means; coordinates compared by `orbit`.
    #[arg(long, global = true, default_value_t = 10)]
    pub window: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

fn parse_eps(s: &str) -> Result<BigRational, String> {
    let q = parse_rational(s).ok_or_else(|| format!("`{s}` is not a rational"))?;
    if q.is_positive() {
        Ok(q)
    } else {
        Err("eps must be positive".into())
    }
}

fn parse_scalar_part(s: &str) -> Result<BigRational, String> {
    parse_rational(s).ok_or_else(|| format!("`{s}` is not a rational"))
}

fn parse_norm(s: &str) -> Result<NormMode, String> {
    s.parse()
}

fn ser_rational<S: serde::Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&rational_to_string(q))
}

fn ser_norm_opt<S: serde::Serializer>(n: &Option<NormMode>, s: S) -> Result<S::Ok, S::Error> {
    match n {
        Some(n) => s.serialize_str(n.name()),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Verified,
    HypothesisFailure,
    Inconclusive,
    Error,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Verified => 0,
            Status::Error => 1,
            Status::HypothesisFailure => 2,
            Status::Inconclusive => 3,
        }
    }

    fn of_error(e: &Error) -> Status {
        match e {
            Error::NotFoundWithinHorizon { .. }
            | Error::NotInGeneralizedKernel { .. }
            | Error::NotNilpotentModulo { .. }
            | Error::NotUnimodular
            | Error::Unbounded => Status::HypothesisFailure,
            Error::HorizonTooShort { .. }
            | Error::ProviderExhausted { .. }
            | Error::InsufficientChain { .. } => Status::Inconclusive,
            _ => Status::Error,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Verified => "verified",
            Status::HypothesisFailure => "hypothesis failure",
            Status::Inconclusive => "inconclusive",
            Status::Error => "error",
        })
    }
}

/// What a command produced.
pub struct Outcome {
    pub status: Status,
    pub result: Value,
    pub csv: Option<String>,
}

impl Outcome {
    fn new(status: Status, result: Value) -> Self {
        Outcome {
            status,
            result,
            csv: None,
        }
    }
}

/// Exit code plus the text destined for stdout and stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (including the program name) and runs the command.
/// Reports go to `--out` when given, otherwise to `stdout`.
pub fn run<I, T>(args: I) -> Execution
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let code = if e.use_stderr() { 1 } else { 0 };
            return if code == 0 {
                Execution {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Execution {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    execute(&cli)
}

pub fn execute(cli: &Cli) -> Execution {
    let (name, path) = match &cli.command {
        Command::Chains { document } => ("chains", document),
        Command::Perturb { document } => ("perturb", document),
        Command::Approximate { document } => ("approximate", document),
        Command::Verify { document, .. } => ("verify", document),
        Command::Weights { document } => ("weights", document),
        Command::Orbit { document, .. } => ("orbit", document),
    };
    let mut stderr = String::new();
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) => {
            return Execution {
                code: 1,
                stdout: String::new(),
                stderr: format!("cannot read {}: {e}\n", path.display()),
            }
        }
    };
    let digest = format!("{:x}", Sha256::digest(&bytes));
    let outcome = match std::str::from_utf8(&bytes) {
        Err(e) => Outcome::new(
            Status::Error,
            json!({ "error": format!("document is not UTF-8: {e}") }),
        ),
        Ok(text) => match parse_operator_spec(text) {
            Err(errors) => Outcome::new(
                Status::Error,
                json!({ "errors": errors.iter().map(ToString::to_string).collect::<Vec<_>>() }),
            ),
            Ok(mut doc) => {
                if let Some(n) = cli.config.norm {
                    doc.norm = n;
                    if let Some(m) = doc.mixture.as_mut() {
                        m.norm = n;
                    }
                }
                match cli.config.mode {
                    Mode::Exact => dispatch::<Exact>(&cli.command, &cli.config, &doc),
                    Mode::Float => dispatch::<Float>(&cli.command, &cli.config, &doc),
                }
                .unwrap_or_else(|e| {
                    Outcome::new(Status::of_error(&e), json!({ "error": e.to_string() }))
                })
            }
        },
    };

    let status = outcome.status;
    let body = match (cli.config.format, &outcome.csv) {
        (Format::Csv, Some(csv)) => csv.clone(),
        (Format::Csv, None)
            if status == Status::Verified || outcome.result.get("error").is_none() =>
        {
            stderr.push_str(&format!("csv output is not available for `{name}`\n"));
            return Execution {
                code: 1,
                stdout: String::new(),
                stderr,
            };
        }
        _ => {
            let report = json!({
                "command": name,
                "input_sha256": digest,
                "config": cli.config,
                "status": status,
                "exit_code": status.code(),
                "result": outcome.result,
            });
            serde_json::to_string_pretty(&report).expect("reports serialise") + "\n"
        }
    };
    if let Some(e) = outcome.result.get("error").and_then(Value::as_str) {
        stderr.push_str(&format!("{name}: {e}\n"));
    }
    if let Some(errors) = outcome.result.get("errors").and_then(Value::as_array) {
        for e in errors {
            stderr.push_str(&format!("{name}: {}\n", e.as_str().unwrap_or_default()));
        }
    }
    stderr.push_str(&format!("{name}: {status}\n"));
    let stdout = match &cli.config.out {
        Some(out) => match std::fs::write(out, &body) {
            Ok(()) => String::new(),
            Err(e) => {
                stderr.push_str(&format!("cannot write {}: {e}\n", out.display()));
                return Execution {
                    code: 1,
                    stdout: String::new(),
                    stderr,
                };
            }
        },
        None => body,
    };
    Execution {
        code: status.code(),
        stdout,
        stderr,
    }
}

fn dispatch<S: Scalar>(
    command: &Command,
    cfg: &RunConfig,
    doc: &OperatorDocument,
) -> Result<Outcome, Error> {
    let op: OperatorExpr<S> = doc.operator.convert();
    match command {
        Command::Chains { .. } => chains(&op, cfg),
        Command::Perturb { .. } => perturb(&op, cfg, doc.norm),
        Command::Approximate { .. } => approximate(&op, cfg, doc),
        Command::Verify { perturbed, .. } => verify(&op, cfg, doc.norm, *perturbed),
        Command::Weights { .. } => weights::<S>(cfg, doc),
        Command::Orbit {
            lambda,
            lambda_im,
            targets,
            radius,
            unperturbed,
            ..
        } => {
            let lambda = Float::new(
                genshift::scalar::rational_to_f64(lambda),
                genshift::scalar::rational_to_f64(lambda_im),
            );
            orbit(&op, cfg, doc.norm, lambda, *targets, *radius, *unperturbed)
        }
    }
}

fn horizon(cfg: &RunConfig) -> usize {
    cfg.horizon as usize
}

fn k_max(cfg: &RunConfig) -> usize {
    cfg.kmax.unwrap_or(10 * horizon(cfg))
}

/// Chains from the standard basis: `--chains` of them, or enough to hold
/// `size` vectors.
fn family<S: Scalar>(
    op: &OperatorExpr<S>,
    cfg: &RunConfig,
    size: usize,
) -> Result<ChainFamily<S>, Error> {
    let mut builder = ChainBuilder::new(op, Provider::Standard, k_max(cfg));
    match cfg.chains {
        Some(l) => builder.build(l)?,
        None => builder.build_until_size(size)?,
    }
    builder.finish()
}

fn chains<S: Scalar>(op: &OperatorExpr<S>, cfg: &RunConfig) -> Result<Outcome, Error> {
    let family = family(op, cfg, horizon(cfg))?;
    let report = InvariantReport::of(&family, op)?;
    let status = if report.holds {
        Status::Verified
    } else {
        Status::Error
    };
    let mut csv = String::from("chain,depth,source\n");
    for (l, c) in family.chains.iter().enumerate() {
        csv.push_str(&format!("{},{},{}\n", l + 1, c.depth(), c.source));
    }
    Ok(Outcome {
        status,
        result: json!({
            "chains": family.table(),
            "size": family.size(),
            "invariants": report,
        }),
        csv: Some(csv),
    })
}

fn perturbation<S: Scalar>(
    op: &OperatorExpr<S>,
    cfg: &RunConfig,
    norm: NormMode,
    size: usize,
) -> Result<ApproximationResult<S>, Error> {
    let family = family(op, cfg, size)?;
    assemble_one_shift(op, &family, &cfg.eps, norm)
}

fn perturbation_json<S: Scalar>(r: &ApproximationResult<S>) -> Value {
    let mut v = r.to_json();
    v["junctions"] = json!(junctions(r));
    v
}

fn perturb<S: Scalar>(
    op: &OperatorExpr<S>,
    cfg: &RunConfig,
    norm: NormMode,
) -> Result<Outcome, Error> {
    let r = perturbation(op, cfg, norm, horizon(cfg))?;
    Ok(Outcome::new(Status::Verified, perturbation_json(&r)))
}

fn approximate<S: Scalar>(
    op: &OperatorExpr<S>,
    cfg: &RunConfig,
    doc: &OperatorDocument,
) -> Result<Outcome, Error> {
    let n = horizon(cfg);
    if let Some(spec) = &doc.mixture {
        let spec = spec.convert::<S>();
        let m = approximate_mixture_by_one_shift(&spec, &cfg.eps, n as i64, 10 * n as i64)?;
        let status = if m.correction.exponent_mismatches.is_empty() {
            Status::Verified
        } else {
            Status::Error
        };
        return Ok(Outcome::new(
            status,
            json!({ "pipeline": "mixture", "report": m.to_json() }),
        ));
    }
    let density = gk_density_report(op, 1..=n as i64, k_max(cfg))?;
    if !density.dense_on_horizon {
        return Ok(Outcome::new(
            Status::HypothesisFailure,
            json!({ "pipeline": "dense-kernel", "error": "generalised kernel is not dense on the horizon", "density": density }),
        ));
    }
    let r = perturbation(op, cfg, doc.norm, n)?;
    Ok(Outcome::new(
        Status::Verified,
        json!({ "pipeline": "dense-kernel", "density": density, "report": perturbation_json(&r) }),
    ))
}

fn verify<S: Scalar>(
    op: &OperatorExpr<S>,
    cfg: &RunConfig,
    norm: NormMode,
    perturbed: bool,
) -> Result<Outcome, Error> {
    let n = horizon(cfg);
    let (target, set) = if perturbed {
        let r = perturbation(op, cfg, norm, n + cfg.rmax)?;
        (r.output.clone(), r.family.adapted_set())
    } else {
        (op.clone(), AdaptedSet::standard_chain())
    };
    let recognition = recognize_generalized_shift(&target, &set, n)?;
    let muller = muller_hypothesis_check(&target, &set, n, cfg.rmax, k_max(cfg))?;
    let status = match (recognition.verdict, muller.verdict) {
        (Verdict::No, _) | (_, MullerVerdict::Fails) => Status::HypothesisFailure,
        (Verdict::Inconclusive, _) | (_, MullerVerdict::Inconclusive) => Status::Inconclusive,
        (Verdict::Yes, MullerVerdict::CriterionSatisfiedOnHorizon) => Status::Verified,
    };
    Ok(Outcome::new(
        status,
        json!({
            "adapted_set": if perturbed { "perturbed-family" } else { "standard-basis" },
            "recognition": recognition.to_json(),
            "muller": muller,
        }),
    ))
}

fn weight_sources<S: Scalar>(
    doc: &OperatorDocument,
) -> Result<Vec<(String, WeightSequence<S>)>, Error> {
    if let Some(m) = &doc.mixture {
        let m = m.convert::<S>();
        return Ok((0..m.chain_count())
            .map(|c| {
                let kind = if m.is_bilateral(c) {
                    "bilateral"
                } else {
                    "forward"
                };
                (format!("{kind}[{c}]"), m.weights(c).clone())
            })
            .collect());
    }
    let mut out = Vec::new();
    collect_shifts(&doc.operator, &mut out);
    if out.is_empty() {
        return Err(Error::InvalidParameter(
            "the document has no weighted shift".into(),
        ));
    }
    Ok(out
        .into_iter()
        .enumerate()
        .map(|(i, s)| (format!("{}[{i}]", s.direction.name()), s.weights.convert()))
        .collect())
}

fn collect_shifts(op: &OperatorExpr<Exact>, out: &mut Vec<WeightedShift<Exact>>) {
    match op {
        OperatorExpr::WeightedShift(s) => out.push(s.clone()),
        OperatorExpr::Sum(terms) => terms.iter().for_each(|t| collect_shifts(t, out)),
        OperatorExpr::LocalSum(l) => l.terms().iter().for_each(|t| collect_shifts(t, out)),
        _ => {}
    }
}

fn weights<S: Scalar>(cfg: &RunConfig, doc: &OperatorDocument) -> Result<Outcome, Error> {
    let n = cfg.horizon as i64;
    let count = cfg.chains.unwrap_or(8);
    let thresholds: Vec<BigRational> = (1..=count)
        .map(|j| &cfg.eps / num_traits::pow(BigRational::from_integer(2.into()), j))
        .collect();
    let mut status = Status::Verified;
    let mut sequences = Vec::new();
    let mut csv = String::from("sequence,window,argmax,value,exact\n");
    for (label, w) in weight_sources::<S>(doc)? {
        let mut means = Vec::new();
        for window in 1..=cfg.window {
            let last_start = (n - window as i64 + 1).max(1);
            let g = spectral_radius_estimate(&w, window, 1..=last_start)?;
            csv.push_str(&format!(
                "{label},{},{},{:e},{}\n",
                g.window,
                g.argmax,
                g.value,
                g.exact.as_ref().map(rational_to_string).unwrap_or_default()
            ));
            means.push(g);
        }
        let subsequence =
            match weight_null_subsequence(&w, &DualNorms::normalised(), &thresholds, 1..=n) {
                Ok(found) => {
                    if !found.is_complete() {
                        status = worse(status, Status::Inconclusive);
                    }
                    json!(found)
                }
                Err(e @ Error::NotFoundWithinHorizon { .. }) => {
                    status = worse(status, Status::HypothesisFailure);
                    json!({ "error": e.to_string() })
                }
                Err(e) => return Err(e),
            };
        sequences.push(
            json!({ "sequence": label, "geometric_means": means, "null_subsequence": subsequence }),
        );
    }
    Ok(Outcome {
        status,
        result: json!({ "sequences": sequences }),
        csv: Some(csv),
    })
}

fn worse(a: Status, b: Status) -> Status {
    let rank = |s: Status| match s {
        Status::Verified => 0,
        Status::Inconclusive => 1,
        Status::HypothesisFailure => 2,
        Status::Error => 3,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

fn orbit<S: Scalar>(
    op: &OperatorExpr<S>,
    cfg: &RunConfig,
    norm: NormMode,
    lambda: Float,
    targets: usize,
    radius: f64,
    unperturbed: bool,
) -> Result<Outcome, Error> {
    let iterated = if unperturbed {
        op.clone()
    } else {
        perturbation(op, cfg, norm, cfg.dim)?.output
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let window = cfg.window.min(cfg.dim);
    let random_vector = |rng: &mut ChaCha8Rng| {
        SparseVector::<Float>::from_entries(
            (1..=window as i64).map(|c| (c, Float::new(rng.gen_range(-1.0..1.0), 0.0))),
        )
    };
    let seed = random_vector(&mut rng).convert::<S>();
    let targets: Vec<OrbitTarget> = (0..targets)
        .map(|_| OrbitTarget {
            center: random_vector(&mut rng),
            radius,
        })
        .collect();
    let config = OrbitConfig {
        dimension: cfg.dim,
        iterations: cfg.iters,
        window,
        norm,
        ..OrbitConfig::default()
    };
    let report = orbit_visit_evidence(&iterated, lambda, &seed, &targets, &config)?;
    let csv = report.to_csv();
    Ok(Outcome {
        status: Status::Verified,
        result: json!({
            "label": report.label,
            "dimension": report.dimension,
            "iterations_run": report.iterations_run,
            "leaked": report.leaked,
            "first_hits": report.first_hits,
            "overflow_at": report.overflow_at,
            "final_norm": report.samples.last().map(|s| s.norm),
            "perturbed": !unperturbed,
        }),
        csv: Some(csv),
    })
}

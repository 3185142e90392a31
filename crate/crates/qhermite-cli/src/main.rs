//! Batch front end for the `qhermite` library: evaluate core series and
//! scaled polynomials, classify scaling parameters into their asymptotic
//! regime, search for small rotation residuals, verify the certified error
//! bounds over index ranges (serially or in a deterministic parallel sweep),
//! and run the acceptance suite.
//!
//! Exit status: 0 when every requested verification passes (or the command
//! does not verify anything), 2 when at least one verification fails, and 1
//! for usage or precision errors, which are reported on standard error.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::{Complex, Float};

use qhermite::acceptance::{run_all, summary_table};
use qhermite::asymptotics::{classify, verify, Targets};
use qhermite::ismail_masson::{
    hn_direct, hn_normalized, sinh_xi_n, ScalingParams, HN_DIRECT_MAX_N,
};
use qhermite::numtheory::{approx_search, RealDescriptor};
use qhermite::qseries::{
    qpoch_infinite, ramanujan_aq, ramanujan_bq, theta, QContext, SeriesResult,
};
use qhermite::report::{csv_document, digits_for, fmt_float, json_document, sweep};

/// Default working precision when neither the flag nor the environment
/// override is present.
const DEFAULT_PRECISION_BITS: u32 = 128;
/// The only environment variable consulted: a default-precision override.
const PRECISION_ENV_VAR: &str = "QHERMITE_PRECISION_BITS";

// ---------------------------------------------------------------------------
// Argument grammar
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "qhermite",
    version,
    about = "Evaluate scaled q^{-1}-Hermite polynomials and verify their \
             asymptotic error bounds",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one core series at a point, with its certified tail bound.
    Eval(EvalArgs),
    /// Evaluate the scaled polynomials: normalized sum plus, for small
    /// indices, the direct recurrence value.
    Hn(HnArgs),
    /// Report which asymptotic regime the scaling parameters select.
    Classify(ClassifyArgs),
    /// List indices whose rotation residual falls below the power-law
    /// threshold, with the matched integers.
    Approx(ApproxArgs),
    /// Verify the asymptotic error bound at each requested index.
    Verify(VerifyArgs),
    /// Parallel verification sweep; output is identical for every worker
    /// count.
    Sweep(SweepArgs),
    /// Run the full acceptance suite and print its summary table.
    Acceptance(AcceptanceArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone)]
struct Common {
    /// Base of the series, a decimal strictly between 0 and 1.
    #[arg(long, default_value = "0.5")]
    q: String,
    /// Working precision in bits (default 128, or the QHERMITE_PRECISION_BITS
    /// environment override).
    #[arg(long, value_name = "BITS")]
    precision: Option<u32>,
    /// Absolute tail tolerance for series truncation, as a decimal.
    #[arg(long, value_name = "TOL")]
    tail_tol: Option<String>,
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write the report to this file instead of standard output.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

/// Index selection: exactly one of a single index, an inclusive range, or an
/// ascending list.
#[derive(Args, Clone)]
struct IndexSelection {
    /// Single index.
    #[arg(short, long, conflicts_with_all = ["nrange", "nlist"])]
    n: Option<u64>,
    /// Inclusive index range LO..HI with an optional ..STEP suffix.
    #[arg(long, value_name = "LO..HI[..STEP]", conflicts_with = "nlist")]
    nrange: Option<String>,
    /// Comma-separated ascending index list.
    #[arg(long, value_name = "N1,N2,...")]
    nlist: Option<String>,
}

#[derive(Args, Clone)]
struct ScalingArgs {
    /// Scale-exponent descriptor: `p/r`, `surd:p,r,d,s`, or
    /// `dec:<digits>[:irrational]`.
    #[arg(long, allow_hyphen_values = true)]
    tau: String,
    /// Rotation descriptor, same grammar as --tau.
    #[arg(long, allow_hyphen_values = true)]
    theta: String,
    /// Evaluation point as `re,im` (or a bare real part), nonzero.
    #[arg(long, value_name = "RE[,IM]", allow_hyphen_values = true)]
    z: String,
}

#[derive(Args, Clone)]
struct TargetArgs {
    /// Rotation target hit by the admissible indices (the first target when
    /// both parameters are irrational).
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    beta: String,
    /// Second rotation target, used only when both parameters are irrational.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    beta2: String,
    /// Exponent of the residual threshold 1/n^rho.
    #[arg(long, default_value_t = 0.9)]
    rho: f64,
}

#[derive(Args)]
struct EvalArgs {
    /// Series to evaluate: the bilateral theta sum, the entire q-Airy-type
    /// sums, or the infinite product.
    #[arg(value_enum)]
    series: Series,
    #[command(flatten)]
    common: Common,
    /// Complex argument as `re,im` (or a bare real part).
    #[arg(long, value_name = "RE[,IM]", allow_hyphen_values = true)]
    z: Option<String>,
    /// Real argument (positive-series form).
    #[arg(long, value_name = "X", conflicts_with = "z", allow_hyphen_values = true)]
    x: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Series {
    /// Bilateral theta sum over all integer exponents.
    Theta,
    /// Entire alternating q-series of Ramanujan type.
    Aq,
    /// Its positive-term companion at a real argument.
    Bq,
    /// Infinite product (z; q) with base q.
    Qpoch,
}

#[derive(Args)]
struct HnArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    scaling: ScalingArgs,
    #[command(flatten)]
    selection: IndexSelection,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    scaling: ScalingArgs,
}

#[derive(Args)]
struct ApproxArgs {
    #[command(flatten)]
    common: Common,
    /// Rotation descriptor whose multiples are searched.
    #[arg(long, allow_hyphen_values = true)]
    theta: String,
    /// Rotation target.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    beta: String,
    /// Exponent of the residual threshold 1/n^rho.
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Coefficient of the residual threshold omega/n^rho.
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[command(flatten)]
    selection: IndexSelection,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    scaling: ScalingArgs,
    #[command(flatten)]
    targets: TargetArgs,
    #[command(flatten)]
    selection: IndexSelection,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    scaling: ScalingArgs,
    #[command(flatten)]
    targets: TargetArgs,
    #[command(flatten)]
    selection: IndexSelection,
    /// Worker threads; the output does not depend on this.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct AcceptanceArgs {
    /// Output format: the summary table, or one JSON object per criterion.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write the report to this file instead of standard output.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

/// A usage or computation error destined for standard error with exit 1.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Run<T> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure(msg.into())
}

impl Common {
    fn precision(&self) -> Run<u32> {
        let bits = match self.precision {
            Some(bits) => bits,
            None => match std::env::var(PRECISION_ENV_VAR) {
                Ok(text) => text.trim().parse::<u32>().map_err(|_| {
                    usage(format!(
                        "{PRECISION_ENV_VAR} must be an integer bit count, got `{text}`"
                    ))
                })?,
                Err(_) => DEFAULT_PRECISION_BITS,
            },
        };
        if !(16..=1_048_576).contains(&bits) {
            return Err(usage(format!(
                "precision must lie between 16 and 1048576 bits, got {bits}"
            )));
        }
        Ok(bits)
    }

    fn context(&self) -> Run<QContext> {
        let prec = self.precision()?;
        let q = parse_real(&self.q, prec)?;
        let ctx = match &self.tail_tol {
            Some(text) => QContext::new(q, prec, parse_real(text, prec)?)?,
            None => QContext::with_default_tol(q, prec)?,
        };
        Ok(ctx)
    }

    fn emit(&self, text: &str) -> Run<()> {
        match &self.output {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())
                    .and_then(|()| out.flush())
                    .map_err(|e| usage(format!("cannot write standard output: {e}")))
            }
        }
    }
}

fn parse_real(text: &str, prec: u32) -> Run<Float> {
    let incomplete = Float::parse(text.trim())
        .map_err(|e| usage(format!("bad decimal `{text}`: {e}")))?;
    Ok(Float::with_val(prec, incomplete))
}

fn parse_point(text: &str, prec: u32) -> Run<Complex> {
    let (re, im) = match text.split_once(',') {
        Some((re, im)) => (re, im),
        None => (text, "0"),
    };
    Ok(Complex::with_val(
        prec,
        (parse_real(re, prec)?, parse_real(im, prec)?),
    ))
}

fn parse_descriptor(text: &str, role: &str) -> Run<RealDescriptor> {
    RealDescriptor::from_str(text).map_err(|e| usage(format!("bad {role} descriptor: {e}")))
}

impl ScalingArgs {
    fn params(&self, prec: u32) -> Run<ScalingParams> {
        let tau = parse_descriptor(&self.tau, "scale-exponent")?;
        let theta = parse_descriptor(&self.theta, "rotation")?;
        let z = parse_point(&self.z, prec)?;
        Ok(ScalingParams::new(tau, theta, z)?)
    }
}

impl TargetArgs {
    fn targets(&self) -> Run<Targets> {
        let targets = Targets {
            beta1: parse_descriptor(&self.beta, "rotation-target")?,
            beta2: parse_descriptor(&self.beta2, "rotation-target")?,
            rho: self.rho,
        };
        targets.validate()?;
        Ok(targets)
    }
}

impl IndexSelection {
    fn resolve(&self) -> Run<Vec<u64>> {
        if let Some(n) = self.n {
            return Ok(vec![n]);
        }
        if let Some(range) = &self.nrange {
            let parts: Vec<&str> = range.split("..").collect();
            let (lo, hi, step) = match parts.as_slice() {
                [lo, hi] => (lo, hi, "1"),
                [lo, hi, step] => (lo, hi, *step),
                _ => {
                    return Err(usage(format!(
                        "index range must look like LO..HI or LO..HI..STEP, got `{range}`"
                    )))
                }
            };
            let parse = |t: &str, what: &str| {
                t.trim().parse::<u64>().map_err(|_| {
                    usage(format!("index range {what} must be an integer, got `{t}`"))
                })
            };
            let (lo, hi, step) = (parse(lo, "start")?, parse(hi, "end")?, parse(step, "step")?);
            if step == 0 {
                return Err(usage("index range step must be positive".to_string()));
            }
            if lo > hi {
                return Err(usage(format!(
                    "index range must ascend: {lo}..{hi} is empty"
                )));
            }
            return Ok((lo..=hi).step_by(step as usize).collect());
        }
        if let Some(list) = &self.nlist {
            let indices: Run<Vec<u64>> = list
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<u64>()
                        .map_err(|_| usage(format!("bad index `{t}` in list")))
                })
                .collect();
            let indices = indices?;
            if indices.is_empty() {
                return Err(usage("index list must be nonempty".to_string()));
            }
            if indices.windows(2).any(|w| w[0] >= w[1]) {
                return Err(usage("index list must be strictly ascending".to_string()));
            }
            return Ok(indices);
        }
        Err(usage(
            "one of --n, --nrange, or --nlist is required".to_string(),
        ))
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn run_eval(args: &EvalArgs) -> Run<bool> {
    let ctx = args.common.context()?;
    let prec = ctx.precision_bits();
    let digits = digits_for(prec);

    let need_z = |z: &Option<String>| -> Run<Complex> {
        let text = z
            .as_ref()
            .ok_or_else(|| usage("this series takes a complex argument --z".to_string()))?;
        parse_point(text, prec)
    };

    let (name, result): (&str, SeriesResult) = match args.series {
        Series::Theta => ("theta", theta(&need_z(&args.z)?, &ctx)?),
        Series::Aq => ("aq", ramanujan_aq(&need_z(&args.z)?, &ctx)?),
        Series::Qpoch => ("qpoch", qpoch_infinite(&need_z(&args.z)?, &ctx)?),
        Series::Bq => {
            let text = args
                .x
                .as_ref()
                .ok_or_else(|| usage("this series takes a real argument --x".to_string()))?;
            ("bq", ramanujan_bq(&parse_real(text, prec)?, &ctx)?)
        }
    };

    let text = match args.common.format {
        Format::Csv => {
            let mut out = String::from("series,re,im,tail_bound,terms\n");
            writeln!(
                out,
                "{name},{},{},{},{}",
                fmt_float(result.value.real(), digits),
                fmt_float(result.value.imag(), digits),
                fmt_float(&result.tail_bound, digits),
                result.terms_used
            )
            .expect("string write");
            out
        }
        Format::Json => {
            let object = serde_json::json!({
                "series": name,
                "re": fmt_float(result.value.real(), digits),
                "im": fmt_float(result.value.imag(), digits),
                "tail_bound": fmt_float(&result.tail_bound, digits),
                "terms": result.terms_used,
            });
            format!("{}\n", serde_json::to_string_pretty(&object).expect("json"))
        }
    };
    args.common.emit(&text)?;
    Ok(true)
}

fn run_hn(args: &HnArgs) -> Run<bool> {
    let ctx = args.common.context()?;
    let prec = ctx.precision_bits();
    let digits = digits_for(prec);
    let params = args.scaling.params(prec)?;
    let indices = args.selection.resolve()?;

    struct Row {
        n: u64,
        normalized: Complex,
        tail: Float,
        direct: Option<Complex>,
    }
    let mut rows = Vec::with_capacity(indices.len());
    for &n in &indices {
        let normalized = hn_normalized(&params, &ctx, n)?;
        let direct = if n <= HN_DIRECT_MAX_N {
            Some(hn_direct(&sinh_xi_n(&params, &ctx, n), &ctx, n)?)
        } else {
            None
        };
        rows.push(Row {
            n,
            normalized: normalized.value,
            tail: normalized.tail_bound,
            direct,
        });
    }

    let text = match args.common.format {
        Format::Csv => {
            let mut out =
                String::from("n,normalized_re,normalized_im,tail_bound,direct_re,direct_im\n");
            for row in &rows {
                let (dre, dim) = match &row.direct {
                    Some(d) => (
                        fmt_float(d.real(), digits),
                        fmt_float(d.imag(), digits),
                    ),
                    None => (String::new(), String::new()),
                };
                writeln!(
                    out,
                    "{},{},{},{},{dre},{dim}",
                    row.n,
                    fmt_float(row.normalized.real(), digits),
                    fmt_float(row.normalized.imag(), digits),
                    fmt_float(&row.tail, digits)
                )
                .expect("string write");
            }
            out
        }
        Format::Json => {
            let objects: Vec<serde_json::Value> = rows
                .iter()
                .map(|row| {
                    serde_json::json!({
                        "n": row.n,
                        "normalized_re": fmt_float(row.normalized.real(), digits),
                        "normalized_im": fmt_float(row.normalized.imag(), digits),
                        "tail_bound": fmt_float(&row.tail, digits),
                        "direct_re": row.direct.as_ref().map(|d| fmt_float(d.real(), digits)),
                        "direct_im": row.direct.as_ref().map(|d| fmt_float(d.imag(), digits)),
                    })
                })
                .collect();
            format!(
                "{}\n",
                serde_json::to_string_pretty(&serde_json::Value::Array(objects)).expect("json")
            )
        }
    };
    args.common.emit(&text)?;
    Ok(true)
}

fn run_classify(args: &ClassifyArgs) -> Run<bool> {
    let ctx = args.common.context()?;
    let params = args.scaling.params(ctx.precision_bits())?;
    let regime = classify(&params)?;

    let text = match args.common.format {
        Format::Csv => format!("{regime}\n"),
        Format::Json => {
            let object = serde_json::json!({
                "tau": params.tau.to_string(),
                "theta": params.theta.to_string(),
                "regime_index": regime.index(),
                "regime": regime.to_string(),
            });
            format!("{}\n", serde_json::to_string_pretty(&object).expect("json"))
        }
    };
    args.common.emit(&text)?;
    Ok(true)
}

fn run_approx(args: &ApproxArgs) -> Run<bool> {
    let theta = parse_descriptor(&args.theta, "rotation")?;
    let beta = parse_descriptor(&args.beta, "rotation-target")?;
    let indices = args.selection.resolve()?;
    let (n_lo, n_hi) = (indices[0], *indices.last().expect("nonempty"));
    let hits = approx_search(&theta, &beta, args.rho, args.omega, n_lo, n_hi)?;

    let text = match args.common.format {
        Format::Csv => {
            let mut out = String::from("n,m,residual\n");
            for hit in &hits {
                writeln!(out, "{},{},{:e}", hit.n, hit.m, hit.residual).expect("string write");
            }
            out
        }
        Format::Json => {
            let objects: Vec<serde_json::Value> = hits
                .iter()
                .map(|hit| {
                    serde_json::json!({
                        "n": hit.n,
                        "m": hit.m.to_string(),
                        "residual": hit.residual,
                    })
                })
                .collect();
            format!(
                "{}\n",
                serde_json::to_string_pretty(&serde_json::Value::Array(objects)).expect("json")
            )
        }
    };
    args.common.emit(&text)?;
    Ok(true)
}

fn run_verification(
    common: &Common,
    scaling: &ScalingArgs,
    targets: &TargetArgs,
    selection: &IndexSelection,
    workers: usize,
) -> Run<bool> {
    let ctx = common.context()?;
    let prec = ctx.precision_bits();
    let params = scaling.params(prec)?;
    let targets = targets.targets()?;
    let indices = selection.resolve()?;

    let reports = if workers <= 1 {
        let mut out = Vec::with_capacity(indices.len());
        for &n in &indices {
            out.push(verify(&params, &ctx, n, &targets)?);
        }
        out
    } else {
        sweep(&params, &ctx, &indices, &targets, workers)?
    };

    let all_pass = reports.iter().all(|r| r.pass);
    let text = match common.format {
        Format::Csv => csv_document(&reports, prec),
        Format::Json => json_document(&reports, prec),
    };
    common.emit(&text)?;
    Ok(all_pass)
}

fn run_acceptance(args: &AcceptanceArgs) -> Run<bool> {
    let outcomes = run_all();
    let all_pass = outcomes.iter().all(|o| o.pass);
    let text = match args.format {
        Format::Csv => summary_table(&outcomes),
        Format::Json => {
            let objects: Vec<serde_json::Value> = outcomes
                .iter()
                .map(|o| {
                    serde_json::json!({
                        "id": o.id,
                        "name": o.name,
                        "pass": o.pass,
                        "detail": o.detail,
                    })
                })
                .collect();
            format!(
                "{}\n",
                serde_json::to_string_pretty(&serde_json::Value::Array(objects)).expect("json")
            )
        }
    };
    let common = Common {
        q: "0.5".into(),
        precision: None,
        tail_tol: None,
        format: args.format,
        output: args.output.clone(),
    };
    common.emit(&text)?;
    Ok(all_pass)
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

fn dispatch(cli: &Cli) -> Run<bool> {
    match &cli.command {
        Command::Eval(args) => run_eval(args),
        Command::Hn(args) => run_hn(args),
        Command::Classify(args) => run_classify(args),
        Command::Approx(args) => run_approx(args),
        Command::Verify(args) => {
            run_verification(&args.common, &args.scaling, &args.targets, &args.selection, 1)
        }
        Command::Sweep(args) => run_verification(
            &args.common,
            &args.scaling,
            &args.targets,
            &args.selection,
            args.workers.max(1),
        ),
        Command::Acceptance(args) => run_acceptance(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

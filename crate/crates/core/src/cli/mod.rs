//! Command-line front end.
//!
//! Every subcommand reads one JSON config, validates it without running
//! any solver, then writes CSV or JSON. Exit codes: 0 success, 2 invalid
//! input, 3 numerical failure. Errors go to stderr as
//! `{"error": {"kind", "field", "message"}}`.

mod config;
mod run;

pub use config::{check, parse, CommandKind, Finding, Parsed};

use std::f64::consts::LN_2;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::Error;

const SOLVE_HELP: &str = "\
CSV columns (one row):
  lambda        requested information level, or the information of the solution
                for upsilon and beta targets (nats; bits with --bits)
  upsilon       optimal expected utility <x, y>
  beta_inverse  1/beta; inf at beta = 0, 0 when saturated
  saturated     true when the information constraint does not bind";

const CURVE_HELP: &str = "\
CSV columns (one row per grid point):
  lambda        information level (nats; bits with --bits)
  upsilon       optimal expected utility at that level
  beta_inverse  slope of the value curve, 1/beta
  saturated     true when the constraint does not bind";

const TV_HELP: &str = "\
CSV columns (one row per lambda):
  lambda        total-variation budget
  upsilon       optimal expected utility
  beta_inverse  right slope of the value curve, (max x - x_drained) / 2
  saturated     true when the budget exceeds what the LP can use
  unique        false when another feasible point attains the same value
  on_boundary   true when the maximizer has a zero coordinate";

const CHANNEL_HELP: &str = "\
CSV columns (one row per solve):
  beta              inverse temperature; inf for the argmax limit
  expected_utility  E{x(a, b)} under the optimal kernel
  mutual_info_nats  I(a; b) of the optimal kernel (mutual_info_bits with --bits)
  iterations        fixed-point sweeps used
  converged         false when the iteration cap was hit (exit status 3)";

const SEPARATE_HELP: &str = "\
CSV columns (one row per lambda):
  lambda      mutual information budget (nats; bits with --bits)
  best_det_E  best expected utility among deterministic kernels within budget;
              empty when none fits
  channel_E   expected utility of the optimal channel at the same budget
  gap         channel_E - best_det_E; empty when no deterministic kernel fits
A config with only trials and seed writes the sweep summary instead:
  trials,seed,comparisons,violations,nonconverged,min_margin";

const ASYMPTOTICS_HELP: &str = "\
CSV columns (one row per truncation):
  parameter  scenario parameters of the sweep, e.g. beta=1 b=0 or partition=2
  T_or_N     truncation: quadrature extent, interval half-width T or series length N
  value      computed quantity at that truncation
  verdict    CONVERGENT, DIVERGENT or INCONCLUSIVE for the whole sweep
Scenarios: gauss-kernel, cauchy-loss, series, zeta.";

const VALIDATE_HELP: &str = "\
Prints {\"valid\", \"command\", \"findings\": [{\"field\", \"message\"}]} and exits
with status 0 when there are no findings, 2 otherwise.";

#[derive(Parser, Debug)]
#[command(
    name = "infokernel",
    version,
    about = "Information-constrained expected utility maximization",
    after_help = "Exit status: 0 success, 2 invalid input, 3 numerical failure."
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args, Debug, Clone)]
struct Opts {
    /// Override the information level of the config.
    #[arg(long, global = true, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Override with a fixed inverse temperature (solve, channel).
    #[arg(long, global = true, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Write results here instead of stdout and print a one-line summary.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Decimal places of numbers in CSV output.
    #[arg(long, global = true, default_value_t = 9)]
    precision: usize,
    /// Report information in bits instead of nats.
    #[arg(long, global = true)]
    bits: bool,
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "INFOKERNEL_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Solve one problem at a lambda, upsilon or beta target (default format json).
    #[command(after_help = SOLVE_HELP)]
    Solve(ConfigArg),
    /// Sample the optimal value curve on a lambda or upsilon grid (default format csv).
    #[command(after_help = CURVE_HELP)]
    Curve(ConfigArg),
    /// Total-variation LP at one lambda or along a grid (default format json).
    #[command(after_help = TV_HELP)]
    Tv(ConfigArg),
    /// Optimal channel under a mutual information budget (default format csv).
    #[command(after_help = CHANNEL_HELP)]
    Channel(ConfigArg),
    /// Deterministic kernels against the optimal channel (default format json).
    #[command(after_help = SEPARATE_HELP)]
    Separate(ConfigArg),
    /// Truncation sweeps of the continuous and infinite examples (default format csv).
    #[command(after_help = ASYMPTOTICS_HELP)]
    Asymptotics(ConfigArg),
    /// Check a config without running any solver.
    #[command(after_help = VALIDATE_HELP)]
    Validate(ValidateArg),
}

#[derive(Args, Debug)]
struct ConfigArg {
    /// JSON config file.
    config: PathBuf,
}

#[derive(Args, Debug)]
struct ValidateArg {
    config: PathBuf,
    /// Command to validate for; defaults to the config's `command` field,
    /// then to a guess from its keys.
    #[arg(long, value_enum)]
    command: Option<CommandKind>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Error reported on stderr.
#[derive(Debug, Clone)]
pub struct CliError {
    pub kind: &'static str,
    pub field: Option<String>,
    pub message: String,
    pub findings: Vec<Finding>,
}

impl CliError {
    fn new(kind: &'static str, field: Option<&str>, message: impl Into<String>) -> Self {
        CliError {
            kind,
            field: field.map(str::to_string),
            message: message.into(),
            findings: vec![],
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.kind == "numerical" {
            3
        } else {
            2
        }
    }

    pub fn to_json(&self) -> Value {
        let mut e = json!({
            "kind": self.kind,
            "field": self.field,
            "message": self.message,
        });
        if !self.findings.is_empty() {
            e["findings"] = json!(self.findings);
        }
        json!({ "error": e })
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = if e.is_validation() {
            "validation"
        } else {
            "numerical"
        };
        CliError::new(kind, None, e.to_string())
    }
}

/// Attach the config field a core error came from.
fn at(field: &'static str) -> impl Fn(Error) -> CliError {
    move |e| CliError {
        field: Some(field.to_string()),
        ..CliError::from(e)
    }
}

/// Formatting and override settings shared by the runners.
#[derive(Debug, Clone)]
struct Ctx {
    precision: usize,
    bits: bool,
    lambda: Option<f64>,
    beta: Option<f64>,
}

impl Ctx {
    fn num(&self, v: f64) -> String {
        fmt_num(v, self.precision)
    }

    fn info(&self, v: f64) -> f64 {
        if self.bits {
            v / LN_2
        } else {
            v
        }
    }

    fn unit(&self) -> &'static str {
        if self.bits {
            "bits"
        } else {
            "nats"
        }
    }
}

fn fmt_num(v: f64, precision: usize) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        let s = format!("{v:.precision$}");
        // no negative zero after rounding
        if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
            s[1..].to_string()
        } else {
            s
        }
    }
}

/// Result of one subcommand.
struct Report {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    json: Value,
    summary: String,
    /// Reported after the artifacts are written.
    failure: Option<CliError>,
}

/// Keys holding information values, converted by `--bits`.
const INFO_KEYS: &[&str] = &[
    "lambda",
    "lambda0",
    "lambda_bar",
    "lambda_bar_upper",
    "lambda_bar_lower",
    "info",
    "mutual_info",
    "deterministic_info",
    "channel_info",
    "image_info",
    "kernel_lambda",
];

fn to_bits(v: &mut Value) {
    fn scale(v: &mut Value) {
        match v {
            Value::Number(n) => {
                if let Some(f) = n.as_f64() {
                    *v = json!(f / LN_2);
                }
            }
            Value::Array(a) => a.iter_mut().for_each(scale),
            _ => {}
        }
    }
    match v {
        Value::Object(m) => {
            for (k, x) in m.iter_mut() {
                if INFO_KEYS.contains(&k.as_str()) {
                    scale(x);
                } else {
                    to_bits(x);
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(to_bits),
        _ => {}
    }
}

fn read_config(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new("io", Some("config"), format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::new("parse", None, e.to_string()))
}

/// Parse and check a config; any finding aborts before computation.
fn load(path: &Path, command: CommandKind) -> Result<Parsed, CliError> {
    let v = read_config(path)?;
    let parsed = parse(v, command).map_err(|f| CliError {
        kind: "schema",
        field: Some(f.field.clone()),
        message: f.message.clone(),
        findings: vec![f],
    })?;
    let findings = check(&parsed, command);
    if let Some(first) = findings.first() {
        return Err(CliError {
            kind: "validation",
            field: Some(first.field.clone()),
            message: first.message.clone(),
            findings,
        });
    }
    Ok(parsed)
}

fn validate(arg: &ValidateArg) -> Result<(Value, bool), CliError> {
    let v = read_config(&arg.config)?;
    let declared = match v.get("command") {
        Some(c) => Some(
            serde_json::from_value::<CommandKind>(c.clone())
                .map_err(|e| CliError::new("schema", Some("command"), e.to_string()))?,
        ),
        None => None,
    };
    let Some(command) = arg.command.or(declared).or_else(|| CommandKind::infer(&v)) else {
        let f = Finding {
            field: "command".into(),
            message: "cannot infer the command; add a command field".into(),
        };
        return Ok((
            json!({"valid": false, "command": null, "findings": [f]}),
            false,
        ));
    };
    let findings = match parse(v, command) {
        Ok(p) => check(&p, command),
        Err(f) => vec![f],
    };
    let valid = findings.is_empty();
    Ok((
        json!({"valid": valid, "command": command.name(), "findings": findings}),
        valid,
    ))
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes)
            .map_err(|e| CliError::new("io", Some("output"), format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::new("io", Some("output"), e.to_string()))
        }
    }
}

fn render(report: &Report, format: Format, bits: bool) -> Result<Vec<u8>, CliError> {
    let internal = |e: &dyn std::fmt::Display| CliError::new("io", Some("output"), e.to_string());
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(vec![]);
            w.write_record(&report.header).map_err(|e| internal(&e))?;
            for r in &report.rows {
                w.write_record(r).map_err(|e| internal(&e))?;
            }
            w.into_inner().map_err(|e| internal(&e))
        }
        Format::Json => {
            let mut v = report.json.clone();
            if bits {
                to_bits(&mut v);
            }
            let mut s = serde_json::to_string_pretty(&v).map_err(|e| internal(&e))?;
            s.push('\n');
            Ok(s.into_bytes())
        }
    }
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    let o = &cli.opts;
    if let Some(n) = o.threads {
        if n == 0 {
            return Err(CliError::new(
                "validation",
                Some("threads"),
                "need at least one thread",
            ));
        }
        // fails only if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let (command, path) = match &cli.command {
        Cmd::Validate(arg) => {
            let (v, valid) = validate(arg)?;
            let mut s = serde_json::to_string_pretty(&v).expect("findings serialize");
            s.push('\n');
            write_out(o.output.as_deref(), s.as_bytes())?;
            return Ok(if valid { 0 } else { 2 });
        }
        Cmd::Solve(a) => (CommandKind::Solve, &a.config),
        Cmd::Curve(a) => (CommandKind::Curve, &a.config),
        Cmd::Tv(a) => (CommandKind::Tv, &a.config),
        Cmd::Channel(a) => (CommandKind::Channel, &a.config),
        Cmd::Separate(a) => (CommandKind::Separate, &a.config),
        Cmd::Asymptotics(a) => (CommandKind::Asymptotics, &a.config),
    };
    if o.beta.is_some() && !matches!(command, CommandKind::Solve | CommandKind::Channel) {
        return Err(CliError::new(
            "validation",
            Some("beta"),
            format!("--beta does not apply to {}", command.name()),
        ));
    }
    if o.lambda.is_some()
        && !matches!(
            command,
            CommandKind::Solve | CommandKind::Tv | CommandKind::Channel | CommandKind::Separate
        )
    {
        return Err(CliError::new(
            "validation",
            Some("lambda"),
            format!("--lambda does not apply to {}", command.name()),
        ));
    }
    if o.lambda.is_some_and(|l| !(l >= 0.0)) {
        return Err(CliError::new(
            "validation",
            Some("lambda"),
            "lambda must be nonnegative",
        ));
    }
    if o.lambda.is_some() && o.beta.is_some() {
        return Err(CliError::new(
            "validation",
            Some("beta"),
            "give --lambda or --beta, not both",
        ));
    }
    let parsed = load(path, command)?;
    let ctx = Ctx {
        precision: o.precision,
        bits: o.bits,
        lambda: o.lambda,
        beta: o.beta,
    };
    let report = match (command, parsed) {
        (CommandKind::Solve, Parsed::Problem(p)) => run::solve(&ctx, &p)?,
        (CommandKind::Curve, Parsed::Problem(p)) => run::curve(&ctx, &p)?,
        (CommandKind::Tv, Parsed::Problem(p)) => run::tv(&ctx, &p)?,
        (CommandKind::Channel, Parsed::Channel(c)) => run::channel(&ctx, &c)?,
        (CommandKind::Separate, Parsed::Separate(s)) => run::separate(&ctx, &s)?,
        (CommandKind::Asymptotics, Parsed::Asymptotics(a)) => run::asymptotics(&ctx, &a)?,
        _ => unreachable!("parse returns the variant of its command"),
    };
    let format = o.format.unwrap_or(match command {
        CommandKind::Curve | CommandKind::Channel | CommandKind::Asymptotics => Format::Csv,
        _ => Format::Json,
    });
    let bytes = render(&report, format, o.bits)?;
    write_out(o.output.as_deref(), &bytes)?;
    if let Some(p) = &o.output {
        println!("{} -> {}", report.summary, p.display());
    }
    match report.failure {
        Some(f) => Err(f),
        None => Ok(0),
    }
}

/// Entry point of the binary; returns the process exit status.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.5, 3), "0.500");
        assert_eq!(fmt_num(-1e-12, 3), "0.000");
        assert_eq!(fmt_num(-0.25, 2), "-0.25");
        assert_eq!(fmt_num(f64::INFINITY, 3), "inf");
        assert_eq!(fmt_num(f64::NEG_INFINITY, 3), "-inf");
    }

    #[test]
    fn bits_conversion_touches_info_keys_only() {
        let mut v = json!({"lambda": LN_2, "value": 1.0, "solution": {"info": [LN_2, "inf"]}});
        to_bits(&mut v);
        assert!((v["lambda"].as_f64().unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(v["value"], json!(1.0));
        assert!((v["solution"]["info"][0].as_f64().unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(v["solution"]["info"][1], json!("inf"));
    }

    #[test]
    fn help_documents_every_csv_column() {
        for (help, cols) in [
            (CURVE_HELP, "lambda,upsilon,beta_inverse,saturated"),
            (
                TV_HELP,
                "lambda,upsilon,beta_inverse,saturated,unique,on_boundary",
            ),
            (
                CHANNEL_HELP,
                "beta,expected_utility,mutual_info_nats,iterations,converged",
            ),
            (SEPARATE_HELP, "lambda,best_det_E,channel_E,gap"),
            (ASYMPTOTICS_HELP, "parameter,T_or_N,value,verdict"),
        ] {
            for c in cols.split(',') {
                assert!(help.contains(&format!("  {c}")), "{c}");
            }
        }
    }
}

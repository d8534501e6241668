//! Config file schemas and the checks run before any solver.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::asymptotics::{Partition, Source};
use crate::functionals::{FunctionalKind, FunctionalRepr, Mode};
use crate::kernels::ChannelTarget;
use crate::measure::{FiniteSpace, UtilityRepr};
use crate::separation::ENUMERATION_LIMIT;
use crate::solver::Branch;

/// Sums further than this from 1 are reported as not normalized.
const SUM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Solve,
    Curve,
    Tv,
    Channel,
    Separate,
    Asymptotics,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Solve => "solve",
            CommandKind::Curve => "curve",
            CommandKind::Tv => "tv",
            CommandKind::Channel => "channel",
            CommandKind::Separate => "separate",
            CommandKind::Asymptotics => "asymptotics",
        }
    }

    /// Guess the command of a config without a `command` field.
    pub fn infer(v: &Value) -> Option<CommandKind> {
        let has = |k: &str| v.get(k).is_some();
        if has("scenario") {
            Some(CommandKind::Asymptotics)
        } else if has("utility_matrix") || has("trials") {
            if has("target") || has("beta_grid") {
                Some(CommandKind::Channel)
            } else {
                Some(CommandKind::Separate)
            }
        } else if has("utility") {
            let tv =
                v.pointer("/functional/kind").and_then(Value::as_str) == Some("total_variation");
            if tv && !has("upsilon_grid") {
                Some(CommandKind::Tv)
            } else if has("lambda_grid") || has("upsilon_grid") {
                Some(CommandKind::Curve)
            } else {
                Some(CommandKind::Solve)
            }
        } else {
            None
        }
    }
}

/// Problem over a single finite space, shared by `solve`, `curve` and `tv`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub space: Option<FiniteSpace>,
    pub utility: UtilityRepr,
    pub functional: FunctionalRepr,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub upsilon: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub upsilon_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub branch: Option<Branch>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    /// One row per input `b`; `null` marks an excluded output.
    pub utility_matrix: Vec<Vec<Option<f64>>>,
    pub input: Vec<f64>,
    #[serde(default)]
    pub target: Option<ChannelTarget>,
    #[serde(default)]
    pub beta_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparateFile {
    #[serde(default)]
    pub utility_matrix: Option<Vec<Vec<Option<f64>>>>,
    #[serde(default)]
    pub input: Option<Vec<f64>>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ZetaMap {
    Identity,
    Constant {
        value: u64,
    },
    /// `b -> min(b, max)`.
    Cap {
        max: u64,
    },
}

impl ZetaMap {
    pub fn apply(self, b: u64) -> u64 {
        match self {
            ZetaMap::Identity => b,
            ZetaMap::Constant { value } => value,
            ZetaMap::Cap { max } => b.min(max),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "scenario", rename_all = "kebab-case")]
pub enum AsymptoticsFile {
    GaussKernel {
        betas: Vec<f64>,
        #[serde(default)]
        extent: Option<f64>,
        #[serde(default)]
        points: Option<usize>,
        #[serde(default)]
        b_values: Option<Vec<f64>>,
    },
    CauchyLoss {
        partitions: Vec<Partition>,
        truncations: Vec<f64>,
        #[serde(default)]
        source: Option<Source>,
        /// Also report the exponential kernel at this information level.
        #[serde(default)]
        kernel_lambda: Option<f64>,
    },
    Series {
        beta: f64,
        n: Vec<u64>,
    },
    Zeta {
        m: u32,
        map: ZetaMap,
        truncations: Vec<u64>,
    },
}

#[derive(Clone, Debug)]
pub enum Parsed {
    Problem(ProblemConfig),
    Channel(ChannelFile),
    Separate(SeparateFile),
    Asymptotics(AsymptoticsFile),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Finding {
    pub field: String,
    pub message: String,
}

impl Finding {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Finding {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Typed parse of a config for `command`. The `command` key itself is
/// checked and dropped here.
pub fn parse(mut v: Value, command: CommandKind) -> Result<Parsed, Finding> {
    if let Some(obj) = v.as_object_mut() {
        if let Some(c) = obj.remove("command") {
            if c.as_str() != Some(command.name()) {
                return Err(Finding::new(
                    "command",
                    format!("config is for {c}, not {}", command.name()),
                ));
            }
        }
    } else {
        return Err(Finding::new("", "config must be a JSON object"));
    }
    fn typed<T: for<'de> Deserialize<'de>>(v: Value) -> Result<T, Finding> {
        serde_path_to_error::deserialize(v).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { String::new() } else { path };
            let message = e.into_inner().to_string();
            let missing = message
                .strip_prefix("missing field `")
                .and_then(|r| r.split('`').next());
            let field = match missing {
                Some(m) if path.is_empty() => m.to_string(),
                Some(m) => format!("{path}.{m}"),
                None => path,
            };
            Finding::new(field, message)
        })
    }
    Ok(match command {
        CommandKind::Solve | CommandKind::Curve | CommandKind::Tv => Parsed::Problem(typed(v)?),
        CommandKind::Channel => Parsed::Channel(typed(v)?),
        CommandKind::Separate => Parsed::Separate(typed(v)?),
        CommandKind::Asymptotics => Parsed::Asymptotics(typed(v)?),
    })
}

/// Semantic checks that need no solver.
pub fn check(parsed: &Parsed, command: CommandKind) -> Vec<Finding> {
    let mut out = Vec::new();
    match parsed {
        Parsed::Problem(p) => check_problem(p, command, &mut out),
        Parsed::Channel(c) => {
            check_matrix(&c.utility_matrix, &c.input, &mut out);
            match (&c.target, &c.beta_grid) {
                (Some(_), Some(_)) => out.push(Finding::new(
                    "target",
                    "give either target or beta_grid, not both",
                )),
                (None, None) => out.push(Finding::new("target", "missing target or beta_grid")),
                (Some(ChannelTarget::Beta(b)), _) if b.is_nan() || *b < 0.0 => {
                    out.push(Finding::new("target.beta", "beta must be nonnegative"))
                }
                (Some(ChannelTarget::Lambda(l)), _) if !(*l >= 0.0) => {
                    out.push(Finding::new("target.lambda", "lambda must be nonnegative"))
                }
                _ => {}
            }
            if let Some(g) = &c.beta_grid {
                check_grid("beta_grid", g, &mut out);
                if g.iter().any(|b| *b < 0.0) {
                    out.push(Finding::new("beta_grid", "beta must be nonnegative"));
                }
            }
            if c.tol.is_some_and(|t| !(t > 0.0)) {
                out.push(Finding::new("tol", "tolerance must be positive"));
            }
        }
        Parsed::Separate(s) => {
            if s.trials.is_some() && s.seed.is_none() {
                out.push(Finding::new(
                    "seed",
                    "randomized trials require an explicit seed",
                ));
            }
            let single = s.lambda.is_some() || s.lambda_grid.is_some();
            if single {
                match (&s.utility_matrix, &s.input) {
                    (Some(m), Some(i)) => {
                        check_matrix(m, i, &mut out);
                        let (a, b) = (m.first().map_or(0, Vec::len), m.len());
                        let count = (a as f64).powi(b as i32);
                        if count > ENUMERATION_LIMIT as f64 {
                            out.push(Finding::new(
                                "utility_matrix",
                                format!(
                                    "|A|^|B| = {a}^{b} = {count} deterministic maps exceeds the enumeration limit {ENUMERATION_LIMIT}"
                                ),
                            ));
                        }
                    }
                    (None, _) => out.push(Finding::new("utility_matrix", "missing utility_matrix")),
                    (_, None) => out.push(Finding::new("input", "missing input")),
                }
            } else if s.trials.is_none() {
                out.push(Finding::new(
                    "lambda",
                    "missing lambda, lambda_grid or trials",
                ));
            }
            if s.lambda.is_some() && s.lambda_grid.is_some() {
                out.push(Finding::new(
                    "lambda_grid",
                    "give either lambda or lambda_grid, not both",
                ));
            }
            if s.lambda.is_some_and(|l| !(l >= 0.0)) {
                out.push(Finding::new("lambda", "lambda must be nonnegative"));
            }
            if let Some(g) = &s.lambda_grid {
                check_grid("lambda_grid", g, &mut out);
            }
        }
        Parsed::Asymptotics(a) => check_asymptotics(a, &mut out),
    }
    out
}

fn check_problem(p: &ProblemConfig, command: CommandKind, out: &mut Vec<Finding>) {
    let n = p.utility.values.len();
    if let Some(s) = &p.space {
        if s.len() != n {
            out.push(Finding::new(
                "utility.values",
                format!("{n} values for a space of {} points", s.len()),
            ));
        }
    }
    if let Some(r) = &p.functional.reference {
        if r.len() != n {
            out.push(Finding::new(
                "functional.reference.weights",
                format!("{} weights for {n} utility values", r.len()),
            ));
        }
        let mode = p.mode.or(p.functional.mode).unwrap_or_default();
        let sum: f64 = r.weights().iter().sum();
        if mode == Mode::Simplex && (sum - 1.0).abs() > SUM_TOL {
            out.push(Finding::new(
                "functional.reference.weights",
                format!("reference not normalized (sum {sum})"),
            ));
        }
    } else if p.functional.kind != FunctionalKind::NegEntropy {
        out.push(Finding::new(
            "functional.reference",
            "functional requires a reference measure",
        ));
    }
    if let Some(g) = &p.lambda_grid {
        check_grid("lambda_grid", g, out);
    }
    if let Some(g) = &p.upsilon_grid {
        check_grid("upsilon_grid", g, out);
    }
    if p.lambda.is_some_and(|l| !(l >= 0.0)) {
        out.push(Finding::new("lambda", "lambda must be nonnegative"));
    }
    let tv = p.functional.kind == FunctionalKind::TotalVariation;
    match command {
        CommandKind::Solve => {
            let targets = [p.lambda.is_some(), p.upsilon.is_some(), p.beta.is_some()]
                .iter()
                .filter(|&&t| t)
                .count();
            if targets > 1 {
                out.push(Finding::new(
                    "lambda",
                    "give exactly one of lambda, upsilon, beta",
                ));
            }
            if p.lambda_grid.is_some() || p.upsilon_grid.is_some() {
                out.push(Finding::new(
                    "lambda_grid",
                    "grids belong to the curve command",
                ));
            }
        }
        CommandKind::Curve => match (&p.lambda_grid, &p.upsilon_grid) {
            (Some(_), Some(_)) => out.push(Finding::new(
                "lambda_grid",
                "give either lambda_grid or upsilon_grid",
            )),
            (None, None) => out.push(Finding::new(
                "lambda_grid",
                "missing lambda_grid or upsilon_grid",
            )),
            (None, Some(_)) if p.branch == Some(Branch::Lower) => out.push(Finding::new(
                "branch",
                "upsilon_grid supports the upper branch only",
            )),
            _ => {}
        },
        CommandKind::Tv => {
            if !tv {
                out.push(Finding::new(
                    "functional.kind",
                    "tv requires kind total_variation",
                ));
            }
            if p.upsilon.is_some() || p.beta.is_some() || p.upsilon_grid.is_some() {
                out.push(Finding::new(
                    "lambda",
                    "tv takes lambda or lambda_grid only",
                ));
            }
            if p.lambda.is_some() && p.lambda_grid.is_some() {
                out.push(Finding::new(
                    "lambda_grid",
                    "give either lambda or lambda_grid, not both",
                ));
            }
        }
        _ => {}
    }
}

fn check_matrix(m: &[Vec<Option<f64>>], input: &[f64], out: &mut Vec<Finding>) {
    if m.is_empty() || m[0].is_empty() {
        out.push(Finding::new(
            "utility_matrix",
            "utility_matrix must be a nonempty matrix",
        ));
        return;
    }
    let a = m[0].len();
    if let Some(b) = m.iter().position(|r| r.len() != a) {
        out.push(Finding::new(
            format!("utility_matrix[{b}]"),
            format!("row has {} entries, expected {a}", m[b].len()),
        ));
    }
    if let Some(b) = m.iter().position(|r| r.iter().all(Option::is_none)) {
        out.push(Finding::new(
            format!("utility_matrix[{b}]"),
            "row has no admissible entry",
        ));
    }
    if input.len() != m.len() {
        out.push(Finding::new(
            "input",
            format!("{} input weights for {} matrix rows", input.len(), m.len()),
        ));
    }
    if let Some(i) = input.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
        out.push(Finding::new(
            format!("input[{i}]"),
            "weights must be finite and nonnegative",
        ));
    }
    let sum: f64 = input.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        out.push(Finding::new(
            "input",
            format!("input not normalized (sum {sum})"),
        ));
    }
}

fn check_grid(field: &str, g: &[f64], out: &mut Vec<Finding>) {
    if g.is_empty() {
        out.push(Finding::new(field, "grid is empty"));
    } else if let Some(i) = g.windows(2).position(|w| !(w[1] > w[0])) {
        out.push(Finding::new(
            format!("{field}[{}]", i + 1),
            "grid not strictly increasing",
        ));
    }
    if g.iter().any(|v| v.is_nan()) {
        out.push(Finding::new(field, "grid contains NaN"));
    }
}

fn check_asymptotics(a: &AsymptoticsFile, out: &mut Vec<Finding>) {
    match a {
        AsymptoticsFile::GaussKernel {
            betas,
            extent,
            points,
            ..
        } => {
            check_grid("betas", betas, out);
            if betas.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
                out.push(Finding::new("betas", "beta must be positive and finite"));
            }
            if let (Some(e), Some(b)) = (extent, betas.first()) {
                let need = 8.0 / b.sqrt();
                if !(*e >= need) {
                    out.push(Finding::new(
                        "extent",
                        format!("extent must be at least {need}"),
                    ));
                }
            }
            if points.is_some_and(|p| p < 2) {
                out.push(Finding::new("points", "need at least 2 points"));
            }
        }
        AsymptoticsFile::CauchyLoss {
            partitions,
            truncations,
            kernel_lambda,
            ..
        } => {
            if partitions.is_empty() {
                out.push(Finding::new("partitions", "empty partition list"));
            }
            check_grid("truncations", truncations, out);
            if truncations.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                out.push(Finding::new(
                    "truncations",
                    "truncations must be positive and finite",
                ));
            }
            if kernel_lambda.is_some_and(|l| !(l >= 0.0)) {
                out.push(Finding::new("kernel_lambda", "lambda must be nonnegative"));
            }
        }
        AsymptoticsFile::Series { beta, n } => {
            if !(*beta > 0.0 && beta.is_finite()) {
                out.push(Finding::new("beta", "beta must be positive and finite"));
            }
            if n.is_empty() || n.contains(&0) {
                out.push(Finding::new("n", "need at least one N >= 1"));
            }
        }
        AsymptoticsFile::Zeta { m, truncations, .. } => {
            if *m == 0 {
                out.push(Finding::new("m", "m must be at least 1"));
            }
            if truncations.is_empty() || truncations[0] == 0 {
                out.push(Finding::new("truncations", "truncations must be positive"));
            } else if let Some(i) = truncations.windows(2).position(|w| w[1] <= w[0]) {
                out.push(Finding::new(
                    format!("truncations[{}]", i + 1),
                    "grid not strictly increasing",
                ));
            }
        }
    }
}

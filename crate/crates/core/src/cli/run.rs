//! One runner per subcommand. Each returns CSV rows and a JSON document;
//! the caller picks the format.

use std::sync::Arc;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{AsymptoticsFile, ChannelFile, ProblemConfig, SeparateFile};
use super::{at, CliError, Ctx, Report};
use crate::asymptotics::{
    beta_from_info_gaussian, cauchy_entropy, cauchy_truncated_loss, gaussian_conditional_utility,
    series_example, zeta_tail_loss, Source,
};
use crate::functionals::{FunctionalKind, InfoFunctional};
use crate::kernels::{
    blahut_arimoto, channel_lambda_bar, channel_optimize_with, ChannelConfig, ChannelSolution,
    ChannelTarget, JointUtility,
};
use crate::measure::{FiniteSpace, ProbMeasure, Utility};
use crate::separation::{separation_experiment, separation_sweep};
use crate::solver::{
    finite_or_string as jnum, lower_branch, series_verdict, solution_at_beta, solve_for_lambda,
    solve_for_upsilon, solve_tv, special_values, upsilon_curve, value_curve, Branch,
    OptimalSolution, SpecialValues, TvSolution,
};

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

fn build(p: &ProblemConfig) -> Result<(Utility, InfoFunctional), CliError> {
    let space = match &p.space {
        Some(s) => s.clone(),
        None => FiniteSpace::with_size(p.utility.values.len()).map_err(at("utility.values"))?,
    };
    let space = Arc::new(space);
    let x = Utility::from_repr(space.clone(), &p.utility).map_err(at("utility"))?;
    let mut repr = p.functional.clone();
    if p.mode.is_some() {
        repr.mode = p.mode;
    }
    let f = InfoFunctional::from_repr(&repr, &space).map_err(at("functional"))?;
    Ok((x, f))
}

fn specials_json(sv: &SpecialValues) -> Value {
    json!({
        "lambda0": jnum(sv.lambda0),
        "lambda_bar_upper": jnum(sv.lambda_bar_upper),
        "lambda_bar_lower": jnum(sv.lambda_bar_lower),
        "upsilon_bar": jnum(sv.upsilon_bar),
        "upsilon_underbar": jnum(sv.upsilon_underbar),
        "upsilon0_upper": jnum(sv.upsilon0_upper),
        "upsilon0_lower": jnum(sv.upsilon0_lower),
    })
}

/// Total-variation LP on either branch; the lower branch maximizes `-x`.
fn tv_at(
    x: &Utility,
    f: &InfoFunctional,
    lambda: f64,
    branch: Branch,
) -> Result<TvSolution, CliError> {
    let q = ProbMeasure::new(f.reference().clone()).map_err(at("functional.reference"))?;
    match branch {
        Branch::Upper => Ok(solve_tv(x, &q, lambda)?),
        Branch::Lower => {
            let mut s = solve_tv(&x.negated(), &q, lambda)?;
            s.solution.value = -s.solution.value;
            s.solution.beta = -s.solution.beta;
            Ok(s)
        }
    }
}

fn solution_row(ctx: &Ctx, lambda: f64, s: &OptimalSolution) -> Vec<String> {
    vec![
        ctx.num(ctx.info(lambda)),
        ctx.num(s.value),
        ctx.num(s.beta_inverse()),
        s.saturated().to_string(),
    ]
}

pub(super) fn solve(ctx: &Ctx, p: &ProblemConfig) -> Result<Report, CliError> {
    let (x, f) = build(p)?;
    let branch = p.branch.unwrap_or(Branch::Upper);
    let (lambda, upsilon, beta) = match (ctx.lambda, ctx.beta) {
        (Some(l), _) => (Some(l), None, None),
        (_, Some(b)) => (None, None, Some(b)),
        _ => (p.lambda, p.upsilon, p.beta),
    };
    let tv = f.kind() == FunctionalKind::TotalVariation;
    let (s, extra, target) = match (lambda, upsilon, beta) {
        (Some(l), _, _) if tv => {
            let t = tv_at(&x, &f, l, branch)?;
            (
                t.solution,
                Some((t.unique, t.on_boundary)),
                json!({"lambda": l}),
            )
        }
        (Some(l), _, _) => {
            let s = match branch {
                Branch::Upper => solve_for_lambda(&x, &f, l)?,
                Branch::Lower => lower_branch(&x, &f, l)?,
            };
            (s, None, json!({"lambda": l}))
        }
        (_, Some(u), _) => {
            if branch == Branch::Lower {
                return Err(CliError::new(
                    "validation",
                    Some("branch"),
                    "upsilon targets support the upper branch only",
                ));
            }
            (
                solve_for_upsilon(&x, &f, u).map_err(at("upsilon"))?,
                None,
                json!({"upsilon": u}),
            )
        }
        (_, _, Some(b)) => (
            solution_at_beta(&x, &f, b).map_err(at("beta"))?,
            None,
            json!({"beta": jnum(b)}),
        ),
        _ => {
            return Err(CliError::new(
                "validation",
                Some("lambda"),
                "missing lambda, upsilon or beta",
            ))
        }
    };
    let lambda_col = lambda.unwrap_or(s.info);
    let mut row = solution_row(ctx, lambda_col, &s);
    let mut cols = vec!["lambda", "upsilon", "beta_inverse", "saturated"];
    let mut doc = json!({
        "command": "solve",
        "info_unit": ctx.unit(),
        "target": target,
        "branch": branch,
        "solution": s,
    });
    if let Ok(sv) = special_values(&x, &f) {
        doc["special_values"] = specials_json(&sv);
    }
    if let Some((unique, on_boundary)) = extra {
        cols.extend(["unique", "on_boundary"]);
        row.extend([unique.to_string(), on_boundary.to_string()]);
        doc["unique"] = json!(unique);
        doc["on_boundary"] = json!(on_boundary);
    }
    let summary = format!(
        "solve: upsilon={} info={} beta={} status={:?}",
        ctx.num(s.value),
        ctx.num(ctx.info(s.info)),
        ctx.num(s.beta),
        s.status
    );
    Ok(Report {
        header: header(&cols),
        rows: vec![row],
        json: doc,
        summary,
        failure: None,
    })
}

pub(super) fn curve(ctx: &Ctx, p: &ProblemConfig) -> Result<Report, CliError> {
    let (x, f) = build(p)?;
    let branch = p.branch.unwrap_or(Branch::Upper);
    let c = match (&p.lambda_grid, &p.upsilon_grid) {
        (Some(g), _) => value_curve(&x, &f, g, branch).map_err(at("lambda_grid"))?,
        (None, Some(g)) => upsilon_curve(&x, &f, g).map_err(at("upsilon_grid"))?,
        (None, None) => unreachable!("checked before running"),
    };
    let rows = c
        .samples
        .iter()
        .map(|s| {
            vec![
                ctx.num(ctx.info(s.lambda)),
                ctx.num(s.upsilon),
                ctx.num(s.beta_inverse),
                s.saturated.to_string(),
            ]
        })
        .collect();
    let samples: Vec<Value> = c
        .samples
        .iter()
        .map(|s| {
            json!({
                "lambda": jnum(s.lambda),
                "upsilon": jnum(s.upsilon),
                "beta_inverse": jnum(s.beta_inverse),
                "saturated": s.saturated,
            })
        })
        .collect();
    let mut doc = json!({
        "command": "curve",
        "info_unit": ctx.unit(),
        "branch": branch,
        "samples": samples,
    });
    if let Ok(sv) = special_values(&x, &f) {
        doc["special_values"] = specials_json(&sv);
    }
    Ok(Report {
        header: header(&["lambda", "upsilon", "beta_inverse", "saturated"]),
        rows,
        json: doc,
        summary: format!(
            "curve: {} samples on the {:?} branch",
            c.samples.len(),
            branch
        ),
        failure: None,
    })
}

pub(super) fn tv(ctx: &Ctx, p: &ProblemConfig) -> Result<Report, CliError> {
    let (x, f) = build(p)?;
    let branch = p.branch.unwrap_or(Branch::Upper);
    let grid: Vec<f64> = match (ctx.lambda, &p.lambda_grid, p.lambda) {
        (Some(l), _, _) => vec![l],
        (None, Some(g), _) => g.clone(),
        (None, None, Some(l)) => vec![l],
        _ => {
            return Err(CliError::new(
                "validation",
                Some("lambda"),
                "missing lambda or lambda_grid",
            ))
        }
    };
    let sols = grid
        .iter()
        .map(|&l| tv_at(&x, &f, l, branch))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    let mut docs = Vec::new();
    for (&l, t) in grid.iter().zip(&sols) {
        let mut r = solution_row(ctx, l, &t.solution);
        r.extend([t.unique.to_string(), t.on_boundary.to_string()]);
        rows.push(r);
        docs.push(json!({
            "lambda": l,
            "solution": t.solution,
            "unique": t.unique,
            "on_boundary": t.on_boundary,
        }));
    }
    let mut doc = json!({
        "command": "tv",
        "branch": branch,
        "solutions": docs,
    });
    if let Ok(sv) = special_values(&x, &f) {
        doc["special_values"] = specials_json(&sv);
    }
    let nonunique = sols.iter().filter(|t| !t.unique).count();
    Ok(Report {
        header: header(&[
            "lambda",
            "upsilon",
            "beta_inverse",
            "saturated",
            "unique",
            "on_boundary",
        ]),
        rows,
        json: doc,
        summary: format!("tv: {} solutions, {nonunique} not unique", sols.len()),
        failure: None,
    })
}

fn channel_problem(
    m: &[Vec<Option<f64>>],
    input: &[f64],
) -> Result<(JointUtility, ProbMeasure), CliError> {
    let x = JointUtility::from_rows(m).map_err(at("utility_matrix"))?;
    let input = ProbMeasure::from_weights(input.to_vec()).map_err(at("input"))?;
    Ok((x, input))
}

fn channel_row(ctx: &Ctx, s: &ChannelSolution) -> Vec<String> {
    vec![
        ctx.num(s.beta),
        ctx.num(s.expected_utility),
        ctx.num(ctx.info(s.mutual_info)),
        s.iterations.to_string(),
        s.converged.to_string(),
    ]
}

pub(super) fn channel(ctx: &Ctx, c: &ChannelFile) -> Result<Report, CliError> {
    let (x, input) = channel_problem(&c.utility_matrix, &c.input)?;
    let mut cfg = ChannelConfig::default();
    if let Some(t) = c.tol {
        cfg.tol = t;
    }
    if let Some(n) = c.max_iter {
        cfg.max_iter = n;
    }
    let target = match (ctx.beta, ctx.lambda) {
        (Some(b), _) => Some(ChannelTarget::Beta(b)),
        (_, Some(l)) => Some(ChannelTarget::Lambda(l)),
        _ => c.target,
    };
    let sols: Vec<ChannelSolution> = match (target, &c.beta_grid) {
        (Some(t), _) => vec![channel_optimize_with(&x, &input, t, &cfg).map_err(at("target"))?],
        (None, Some(g)) => g
            .par_iter()
            .map(|&b| blahut_arimoto(&x, &input, b, &cfg))
            .collect::<crate::Result<Vec<_>>>()
            .map_err(at("beta_grid"))?,
        (None, None) => unreachable!("checked before running"),
    };
    let failure = sols.iter().find(|s| !s.converged).map(|s| {
        CliError::new(
            "numerical",
            Some("beta_grid"),
            format!(
                "fixed point did not converge at beta {} after {} iterations (residual {:e})",
                s.beta, s.iterations, s.residual
            ),
        )
    });
    let mi_col = if ctx.bits {
        "mutual_info_bits"
    } else {
        "mutual_info_nats"
    };
    let mut doc = json!({
        "command": "channel",
        "info_unit": ctx.unit(),
        "solutions": sols,
    });
    if let Ok(l) = channel_lambda_bar(&x, &input) {
        doc["lambda_bar"] = jnum(l);
    }
    let summary = match sols.as_slice() {
        [s] => format!(
            "channel: beta={} E={} I={} {}",
            ctx.num(s.beta),
            ctx.num(s.expected_utility),
            ctx.num(ctx.info(s.mutual_info)),
            ctx.unit()
        ),
        _ => format!("channel: {} solves", sols.len()),
    };
    Ok(Report {
        header: header(&[
            "beta",
            "expected_utility",
            mi_col,
            "iterations",
            "converged",
        ]),
        rows: sols.iter().map(|s| channel_row(ctx, s)).collect(),
        json: doc,
        summary,
        failure,
    })
}

pub(super) fn separate(ctx: &Ctx, s: &SeparateFile) -> Result<Report, CliError> {
    let lambdas: Vec<f64> = match (ctx.lambda, &s.lambda_grid, s.lambda) {
        (Some(l), _, _) => vec![l],
        (None, Some(g), _) => g.clone(),
        (None, None, Some(l)) => vec![l],
        _ => vec![],
    };
    let mut reports = Vec::new();
    if !lambdas.is_empty() {
        let (Some(m), Some(i)) = (&s.utility_matrix, &s.input) else {
            return Err(CliError::new(
                "validation",
                Some("utility_matrix"),
                "missing utility_matrix or input",
            ));
        };
        let (x, input) = channel_problem(m, i)?;
        for &l in &lambdas {
            reports.push(separation_experiment(&x, &input, l).map_err(at("lambda"))?);
        }
    }
    let sweep = match (s.trials, s.seed) {
        (Some(t), Some(seed)) => Some(separation_sweep(t, seed)?),
        _ => None,
    };

    let mut doc = json!({"command": "separate", "info_unit": ctx.unit()});
    let mut summary = String::from("separate:");
    let (head, rows) = if reports.is_empty() {
        (header(&[]), vec![])
    } else {
        let rows = reports
            .iter()
            .map(|r| {
                let best = r.best_deterministic.as_ref();
                vec![
                    ctx.num(ctx.info(r.lambda)),
                    best.map_or(String::new(), |b| ctx.num(b.expected_utility)),
                    ctx.num(r.channel.expected_utility),
                    r.gap.map_or(String::new(), |g| ctx.num(g)),
                ]
            })
            .collect();
        let strict = reports.iter().filter(|r| r.strict_separation).count();
        summary.push_str(&format!(
            " {strict}/{} budgets strictly separated",
            reports.len()
        ));
        doc["reports"] = json!(reports);
        (header(&["lambda", "best_det_E", "channel_E", "gap"]), rows)
    };
    let (head, rows) = match &sweep {
        Some(w) => {
            summary.push_str(&format!(
                " sweep: {} comparisons, {} violations, {} nonconverged",
                w.comparisons, w.violations, w.nonconverged
            ));
            doc["sweep"] = json!({
                "trials": w.trials,
                "seed": w.seed,
                "comparisons": w.comparisons,
                "violations": w.violations,
                "nonconverged": w.nonconverged,
                "min_margin": jnum(w.min_margin),
                "deterministic_interior": w.deterministic_interior,
                "nondeterministic_saturated": w.nondeterministic_saturated,
            });
            if reports.is_empty() {
                (
                    header(&[
                        "trials",
                        "seed",
                        "comparisons",
                        "violations",
                        "nonconverged",
                        "min_margin",
                    ]),
                    vec![vec![
                        w.trials.to_string(),
                        w.seed.to_string(),
                        w.comparisons.to_string(),
                        w.violations.to_string(),
                        w.nonconverged.to_string(),
                        ctx.num(w.min_margin),
                    ]],
                )
            } else {
                (head, rows)
            }
        }
        None => (head, rows),
    };
    Ok(Report {
        header: head,
        rows,
        json: doc,
        summary,
        failure: None,
    })
}

/// Gaussian kernel utility at extents `e, 2e, 4e` with a fixed step.
fn gauss_sweep(
    beta: f64,
    extent: f64,
    points: usize,
    b: f64,
) -> crate::Result<(Vec<f64>, Vec<f64>)> {
    let mut extents = Vec::new();
    let mut values = Vec::new();
    for k in [1usize, 2, 4] {
        let e = extent * k as f64;
        extents.push(e);
        values.push(gaussian_conditional_utility(beta, e, points * k, b)?);
    }
    Ok((extents, values))
}

fn source_entropy(source: Source) -> f64 {
    match source {
        Source::Cauchy => cauchy_entropy(),
        Source::Gaussian { sigma } => {
            0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * sigma * sigma).ln()
        }
    }
}

pub(super) fn asymptotics(ctx: &Ctx, a: &AsymptoticsFile) -> Result<Report, CliError> {
    let mut rows = Vec::new();
    let mut push = |param: String, t: f64, v: f64, verdict: &str| {
        rows.push(vec![param, ctx.num(t), ctx.num(v), verdict.to_string()]);
    };
    let (doc, summary) = match a {
        AsymptoticsFile::GaussKernel {
            betas,
            extent,
            points,
            b_values,
        } => {
            let bs = b_values.clone().unwrap_or_else(|| vec![-1.0, 0.0, 0.7]);
            let points = points.unwrap_or(20_000);
            let mut results = Vec::new();
            for &beta in betas {
                let e = extent.unwrap_or(12.0 / beta.sqrt());
                for &b in &bs {
                    let (extents, values) = gauss_sweep(beta, e, points, b).map_err(at("betas"))?;
                    let verdict = series_verdict(&values);
                    for (t, v) in extents.iter().zip(&values) {
                        push(format!("beta={beta} b={b}"), *t, *v, &verdict.to_string());
                    }
                    results.push(json!({
                        "beta": beta,
                        "b": b,
                        "extents": extents,
                        "values": values,
                        "verdict": verdict,
                        "closed_form": -0.5 / beta,
                    }));
                }
            }
            (
                json!({"scenario": "gauss-kernel", "results": results}),
                format!("gauss-kernel: {} betas", betas.len()),
            )
        }
        AsymptoticsFile::CauchyLoss {
            partitions,
            truncations,
            source,
            kernel_lambda,
        } => {
            let source = source.unwrap_or(Source::Cauchy);
            let mut results = Vec::new();
            let mut divergent = 0;
            for (i, part) in partitions.iter().enumerate() {
                let sweep =
                    cauchy_truncated_loss(part, source, truncations).map_err(at("partitions"))?;
                let verdict = sweep.verdict.to_string();
                for (t, v) in sweep.truncations.iter().zip(&sweep.values) {
                    push(format!("partition={i}"), *t, *v, &verdict);
                }
                divergent += (sweep.verdict == crate::solver::SeriesVerdict::Divergent) as usize;
                results.push(json!({
                    "partition": part,
                    "truncations": sweep.truncations,
                    "values": sweep.values,
                    "verdict": sweep.verdict,
                    "magnitude_ratio": sweep.magnitude_ratio(),
                }));
            }
            let mut doc = json!({"scenario": "cauchy-loss", "source": source, "results": results});
            if let Some(l) = kernel_lambda {
                let beta = beta_from_info_gaussian(source_entropy(source), *l)
                    .map_err(at("kernel_lambda"))?;
                let (extents, values) = gauss_sweep(beta, 12.0 / beta.sqrt(), 20_000, 0.0)
                    .map_err(at("kernel_lambda"))?;
                let verdict = series_verdict(&values);
                for (t, v) in extents.iter().zip(&values) {
                    push(format!("kernel beta={beta}"), *t, *v, &verdict.to_string());
                }
                doc["exponential_kernel"] = json!({
                    "kernel_lambda": l,
                    "beta": beta,
                    "expected_utility": values.last(),
                    "closed_form": -0.5 / beta,
                    "verdict": verdict,
                });
            }
            (
                doc,
                format!(
                    "cauchy-loss: {divergent}/{} partitions divergent",
                    partitions.len()
                ),
            )
        }
        AsymptoticsFile::Series { beta, n } => {
            let ex = n
                .iter()
                .map(|&k| series_example(*beta, k))
                .collect::<crate::Result<Vec<_>>>()
                .map_err(at("n"))?;
            let partials: Vec<f64> = ex.iter().map(|e| e.partial).collect();
            let verdict = series_verdict(&partials);
            for e in &ex {
                push(
                    format!("beta={beta}"),
                    e.n as f64,
                    e.partial,
                    &verdict.to_string(),
                );
            }
            let closed = ex[0].closed_form;
            (
                json!({
                    "scenario": "series",
                    "beta": beta,
                    "n": n,
                    "partial": partials,
                    "closed_form": closed,
                    "verdict": verdict,
                }),
                format!("series: closed form {} verdict {verdict}", ctx.num(closed)),
            )
        }
        AsymptoticsFile::Zeta {
            m,
            map,
            truncations,
        } => {
            let map = *map;
            let z = zeta_tail_loss(*m, truncations, |b| map.apply(b)).map_err(at("truncations"))?;
            let verdict = z.sweep.verdict.to_string();
            for (t, v) in z.sweep.truncations.iter().zip(&z.sweep.values) {
                push(format!("m={m}"), *t, *v, &verdict);
            }
            (
                json!({
                    "scenario": "zeta",
                    "m": m,
                    "truncations": truncations,
                    "values": z.sweep.values,
                    "verdict": z.sweep.verdict,
                    "magnitude_ratio": z.sweep.magnitude_ratio(),
                    "image_info": z.image_info,
                }),
                format!("zeta: m={m} verdict {verdict}"),
            )
        }
    };
    Ok(Report {
        header: header(&["parameter", "T_or_N", "value", "verdict"]),
        rows,
        json: doc,
        summary,
        failure: None,
    })
}

//! Linear program `max <x, p>` over `{p in simplex : ||p - q||_1 <= lambda}`.
//!
//! Moving mass `d` from one atom to another costs `2d` of the budget, so
//! the optimum drains the lowest-utility atoms onto an argmax atom until
//! `lambda / 2` is spent. Ties make the maximizer non-unique; this is
//! reported rather than resolved silently.

use serde::Serialize;

use super::{OptimalSolution, SolutionStatus, SpecialValues};
use crate::error::{Error, Result};
use crate::functionals::{FunctionalKind, InfoFunctional, Mode};
use crate::measure::{pair, Measure, ProbMeasure, Utility};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TvSolution {
    pub solution: OptimalSolution,
    /// False when another point of the feasible set attains the same value.
    pub unique: bool,
    /// True when the maximizer has a zero coordinate.
    pub on_boundary: bool,
}

/// Greedy transfer solution of the total-variation LP.
///
/// Atoms charged by `q` but excluded by `x` are drained first (any feasible
/// point must leave them); the rest are drained in ascending utility order,
/// ties by ascending index, onto the first argmax of `x`. The reported
/// `beta_inverse` is the slope `(max x - x_i) / 2` of the value curve at
/// the level `x_i` being drained (the right derivative at `lambda = 0`,
/// zero once saturated).
pub fn solve_tv(x: &Utility, q: &ProbMeasure, lambda: f64) -> Result<TvSolution> {
    if x.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: q.len(),
            got: x.len(),
        });
    }
    if lambda.is_nan() {
        return Err(Error::InvalidArgument("lambda is NaN".into()));
    }
    if lambda < 0.0 {
        return Err(Error::Infeasible {
            requested: lambda,
            minimum: 0.0,
        });
    }
    let n = q.len();
    let qw = q.weights();
    let (top, x_max) = x
        .admissible()
        .fold((usize::MAX, f64::NEG_INFINITY), |acc, (i, v)| {
            if v > acc.1 {
                (i, v)
            } else {
                acc
            }
        });
    let argmax_count = x.admissible().filter(|&(_, v)| v == x_max).count();

    let mut p = qw.to_vec();
    let mut budget = 0.5 * lambda;

    let forced: f64 = (0..n).filter(|&i| x.is_excluded(i)).map(|i| qw[i]).sum();
    if forced > budget + 1e-15 {
        return Err(Error::Infeasible {
            requested: lambda,
            minimum: 2.0 * forced,
        });
    }
    for i in (0..n).filter(|&i| x.is_excluded(i)) {
        p[top] += p[i];
        p[i] = 0.0;
    }
    budget = (budget - forced).max(0.0);

    let mut order: Vec<usize> = x
        .admissible()
        .filter(|&(i, v)| v < x_max && qw[i] > 0.0)
        .map(|(i, _)| i)
        .collect();
    order.sort_by(|&a, &b| x.values()[a].total_cmp(&x.values()[b]).then(a.cmp(&b)));

    // (position in `order`, amount moved) of the last atom touched
    let mut last: Option<(usize, f64)> = None;
    for (k, &i) in order.iter().enumerate() {
        if budget <= 0.0 {
            break;
        }
        let moved = p[i].min(budget);
        p[i] -= moved;
        p[top] += moved;
        budget -= moved;
        last = Some((k, moved));
    }
    let drained_all = order.iter().all(|&i| p[i] == 0.0);
    let saturated = drained_all && !order.is_empty() && budget >= 0.0;

    let beta_inverse = if order.is_empty() || drained_all {
        0.0
    } else {
        let level = match last {
            Some((k, _)) if p[order[k]] > 0.0 => x.values()[order[k]],
            Some((k, _)) => x.values()[order[k + 1]],
            None => x.values()[order[0]],
        };
        0.5 * (x_max - level)
    };

    let unique = if lambda == 0.0 || (order.is_empty() && forced == 0.0) {
        true
    } else if argmax_count > 1 {
        false
    } else {
        match last {
            Some((k, _)) if p[order[k]] > 0.0 => {
                // partially drained level: the cut can be shared with any
                // other charged atom at the same utility
                let level = x.values()[order[k]];
                order.iter().filter(|&&i| x.values()[i] == level).count() < 2
            }
            _ => true,
        }
    };

    let on_boundary = p.iter().any(|&v| v == 0.0);
    let measure = Measure::new(q.space().clone(), p)?;
    let value = pair(x, &measure)?;
    let info = measure
        .weights()
        .iter()
        .zip(qw)
        .map(|(a, b)| (a - b).abs())
        .sum();
    let status = if lambda == 0.0 || info == 0.0 {
        if order.is_empty() {
            SolutionStatus::FlatObjective
        } else {
            SolutionStatus::Trivial
        }
    } else if saturated || order.is_empty() {
        SolutionStatus::Saturated
    } else {
        SolutionStatus::Interior
    };
    let beta = if beta_inverse == 0.0 {
        f64::INFINITY
    } else {
        1.0 / beta_inverse
    };
    Ok(TvSolution {
        solution: OptimalSolution {
            beta,
            measure,
            value,
            info,
            status,
        },
        unique,
        on_boundary,
    })
}

pub(super) fn tv_special_values(x: &Utility, f: &InfoFunctional) -> Result<SpecialValues> {
    debug_assert_eq!(f.kind(), FunctionalKind::TotalVariation);
    if f.mode() != Mode::Simplex {
        return Err(Error::InvalidArgument(
            "total variation special values are defined on the simplex".into(),
        ));
    }
    if x.len() != f.reference().len() {
        return Err(Error::DimensionMismatch {
            expected: f.reference().len(),
            got: x.len(),
        });
    }
    let q = f.reference().weights();
    let hi = x
        .admissible()
        .map(|(_, v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let lo = x.admissible().map(|(_, v)| v).fold(f64::INFINITY, f64::min);
    let mass_at = |t: f64| -> f64 {
        x.admissible()
            .filter(|&(_, v)| v == t)
            .map(|(i, _)| q[i])
            .sum()
    };
    let upsilon0 = pair(x, f.reference())?;
    Ok(SpecialValues {
        lambda0: 0.0,
        lambda_bar_upper: 2.0 * (1.0 - mass_at(hi)),
        lambda_bar_lower: 2.0 * (1.0 - mass_at(lo)),
        upsilon_bar: hi,
        upsilon_underbar: lo,
        upsilon0_upper: upsilon0,
        upsilon0_lower: upsilon0,
    })
}

//! Information-constrained channel optimization.
//!
//! For a fixed input law `P(b)` the optimal kernel under a mutual
//! information budget has the form `P(a | b) ~ P(a) e^{beta x(a, b)}`,
//! where `P(a)` must itself be the output marginal of the kernel. The
//! fixed point is found by alternating the two conditions (Blahut-Arimoto);
//! `lambda` and `upsilon` targets add an outer bisection on `beta`.

use serde::{Deserialize, Serialize};

use super::{joint_from_kernel, mutual_information, JointUtility, Kernel};
use crate::bisect::{bisect_increasing, BisectConfig, Bisection};
use crate::error::{Error, Result};
use crate::measure::ProbMeasure;

/// What the channel is tuned to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelTarget {
    /// Fixed inverse temperature; `+inf` gives the argmax limit.
    Beta(f64),
    /// Mutual information budget in nats.
    Lambda(f64),
    /// Required expected utility.
    Upsilon(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelConfig {
    /// Stop when the L1 change of the output marginal drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Tolerance of the outer bisection on the target residual.
    pub outer_tol: f64,
    pub beta_max: f64,
    /// Record the free energy `I - beta E` after every sweep.
    pub trace: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            tol: 1e-10,
            max_iter: 10_000,
            outer_tol: 1e-8,
            beta_max: 1e6,
            trace: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelSolution {
    pub kernel: Kernel,
    #[serde(serialize_with = "ser_f64")]
    pub beta: f64,
    pub expected_utility: f64,
    /// Nats.
    pub mutual_info: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
    pub output_marginal: Vec<f64>,
    pub saturated: bool,
    /// Inputs of zero mass; their rows are uniform over admissible outputs.
    pub unconstrained_rows: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub free_energy_trace: Option<Vec<f64>>,
}

fn ser_f64<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    crate::solver::finite_or_string(*v).serialize(s)
}

fn check_shapes(x: &JointUtility, input: &ProbMeasure) -> Result<()> {
    if input.len() != x.len_b() {
        return Err(Error::DimensionMismatch {
            expected: x.len_b(),
            got: input.len(),
        });
    }
    Ok(())
}

/// Tilt weights `e^{beta (x(a,b) - max_a x(a,b))}` of one row; zero where
/// excluded. `beta = +inf` keeps only the argmax set.
fn row_tilt(x: &JointUtility, b: usize, beta: f64) -> Vec<f64> {
    let m = x.row_max(b);
    (0..x.len_a())
        .map(|a| {
            if x.is_excluded(a, b) {
                0.0
            } else if beta.is_infinite() {
                (x.value(a, b) == m) as u8 as f64
            } else if beta == 0.0 {
                1.0
            } else {
                (beta * (x.value(a, b) - m)).exp()
            }
        })
        .collect()
}

/// Fixed-point iteration at fixed `beta`. Non-convergence is reported
/// through `converged = false`, never hidden.
pub fn blahut_arimoto(
    x: &JointUtility,
    input: &ProbMeasure,
    beta: f64,
    cfg: &ChannelConfig,
) -> Result<ChannelSolution> {
    check_shapes(x, input)?;
    if beta.is_nan() || beta == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument(format!("unsupported beta {beta}")));
    }
    let (na, nb) = (x.len_a(), x.len_b());
    let pb = input.weights();
    let active: Vec<usize> = (0..nb).filter(|&b| pb[b] > 0.0).collect();
    let unconstrained: Vec<usize> = (0..nb).filter(|&b| pb[b] == 0.0).collect();
    let tilts: Vec<Vec<f64>> = (0..nb).map(|b| row_tilt(x, b, beta)).collect();

    // uniform over outputs admissible in some active row
    let mut q = vec![0.0; na];
    for &b in &active {
        for a in 0..na {
            if !x.is_excluded(a, b) {
                q[a] = 1.0;
            }
        }
    }
    let s: f64 = q.iter().sum();
    q.iter_mut().for_each(|v| *v /= s);

    let mut rows = vec![vec![0.0; na]; nb];
    let update_rows = |q: &[f64], rows: &mut [Vec<f64>]| -> Result<()> {
        for &b in &active {
            let r = &mut rows[b];
            let mut z = 0.0;
            for a in 0..na {
                r[a] = q[a] * tilts[b][a];
                z += r[a];
            }
            if !(z > 0.0) {
                return Err(Error::Numerical(format!(
                    "row {b} lost all mass during the fixed-point iteration"
                )));
            }
            r.iter_mut().for_each(|v| *v /= z);
        }
        Ok(())
    };

    let mut trace = cfg.trace.then(Vec::new);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        update_rows(&q, &mut rows)?;
        if let Some(t) = trace.as_mut() {
            t.push(ba_free_energy(x, pb, &rows, &q, beta));
        }
        let mut next = vec![0.0; na];
        for &b in &active {
            for a in 0..na {
                next[a] += pb[b] * rows[b][a];
            }
        }
        residual = next.iter().zip(&q).map(|(u, v)| (u - v).abs()).sum();
        q = next;
        iterations += 1;
        if residual < cfg.tol {
            converged = true;
            break;
        }
    }
    update_rows(&q, &mut rows)?;
    for &b in &unconstrained {
        let adm = (0..na).filter(|&a| !x.is_excluded(a, b)).count() as f64;
        rows[b] = (0..na)
            .map(|a| if x.is_excluded(a, b) { 0.0 } else { 1.0 / adm })
            .collect();
    }
    let kernel = Kernel::from_rows_unchecked(x.space().clone(), rows);
    let expected_utility = x.expected(input, &kernel)?;
    let mutual_info = mutual_information(&joint_from_kernel(input, &kernel)?);
    Ok(ChannelSolution {
        output_marginal: kernel.push_forward(input)?,
        kernel,
        beta,
        expected_utility,
        mutual_info,
        iterations,
        converged,
        residual,
        saturated: beta.is_infinite(),
        unconstrained_rows: unconstrained,
        free_energy_trace: trace,
    })
}

/// `sum_b P(b) sum_a k(a|b) [ln(k(a|b) / q(a)) - beta x(a,b)]`, the
/// objective that the alternating updates decrease.
fn ba_free_energy(x: &JointUtility, pb: &[f64], rows: &[Vec<f64>], q: &[f64], beta: f64) -> f64 {
    let mut f = 0.0;
    for (b, &w) in pb.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (a, &k) in rows[b].iter().enumerate() {
            if k > 0.0 {
                let util = if beta.is_infinite() {
                    0.0
                } else {
                    beta * x.value(a, b)
                };
                f += w * k * ((k / q[a]).ln() - util);
            }
        }
    }
    f
}

fn converged_or_err(s: ChannelSolution) -> Result<ChannelSolution> {
    if s.converged {
        Ok(s)
    } else {
        Err(Error::NoConvergence {
            iterations: s.iterations,
            residual: s.residual,
        })
    }
}

/// Information needed for the unconstrained optimum: the `beta = inf`
/// fixed point, which puts each row on its argmax set.
pub fn channel_lambda_bar(x: &JointUtility, input: &ProbMeasure) -> Result<f64> {
    let s = converged_or_err(blahut_arimoto(
        x,
        input,
        f64::INFINITY,
        &ChannelConfig::default(),
    )?)?;
    Ok(s.mutual_info)
}

pub fn channel_optimize(
    x: &JointUtility,
    input: &ProbMeasure,
    target: ChannelTarget,
) -> Result<ChannelSolution> {
    channel_optimize_with(x, input, target, &ChannelConfig::default())
}

/// Optimal channel for a target. Fails with [`Error::NoConvergence`] if
/// any fixed point along the way does not converge.
pub fn channel_optimize_with(
    x: &JointUtility,
    input: &ProbMeasure,
    target: ChannelTarget,
    cfg: &ChannelConfig,
) -> Result<ChannelSolution> {
    check_shapes(x, input)?;
    let at = |beta: f64| -> Result<ChannelSolution> {
        converged_or_err(blahut_arimoto(x, input, beta, cfg)?)
    };
    let bisect_cfg = BisectConfig {
        tol: cfg.outer_tol,
        max_iter: 200,
        beta_max: cfg.beta_max,
    };
    let finish = |r: Bisection| -> Result<ChannelSolution> {
        match r {
            Bisection::Root { beta, .. } => at(beta),
            Bisection::Capped { beta, .. } => {
                let mut s = at(beta)?;
                s.saturated = true;
                Ok(s)
            }
        }
    };
    match target {
        ChannelTarget::Beta(beta) => at(beta),
        ChannelTarget::Lambda(lambda) => {
            if lambda.is_nan() {
                return Err(Error::InvalidArgument("lambda is NaN".into()));
            }
            if lambda < 0.0 {
                return Err(Error::Infeasible {
                    requested: lambda,
                    minimum: 0.0,
                });
            }
            let top = at(f64::INFINITY)?;
            if lambda >= top.mutual_info - 1e-12 {
                return Ok(top);
            }
            let zero = at(0.0)?;
            if lambda <= zero.mutual_info {
                return Ok(zero);
            }
            finish(bisect_increasing(
                |b| Ok(at(b)?.mutual_info - lambda),
                &bisect_cfg,
            )?)
        }
        ChannelTarget::Upsilon(upsilon) => {
            if upsilon.is_nan() {
                return Err(Error::InvalidArgument("upsilon is NaN".into()));
            }
            let top = at(f64::INFINITY)?;
            let scale = 1.0 + top.expected_utility.abs();
            if upsilon > top.expected_utility + 1e-12 * scale {
                return Err(Error::Unreachable {
                    requested: upsilon,
                    maximum: top.expected_utility,
                });
            }
            if upsilon >= top.expected_utility {
                return Ok(top);
            }
            let zero = at(0.0)?;
            if upsilon <= zero.expected_utility {
                return Ok(zero);
            }
            finish(bisect_increasing(
                |b| Ok(at(b)?.expected_utility - upsilon),
                &bisect_cfg,
            )?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{is_deterministic, FiniteMap};

    fn binary() -> (JointUtility, ProbMeasure) {
        let x = JointUtility::from_fn(2, 2, |a, b| (a == b) as u8 as f64).unwrap();
        (x, ProbMeasure::from_weights(vec![0.5, 0.5]).unwrap())
    }

    fn hb(p: f64) -> f64 {
        -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
    }

    #[test]
    fn zero_beta_is_independent() {
        let x = JointUtility::from_fn(3, 2, |a, b| (a * b) as f64 - 0.5 * a as f64).unwrap();
        let input = ProbMeasure::from_weights(vec![0.4, 0.6]).unwrap();
        let s = channel_optimize(&x, &input, ChannelTarget::Beta(0.0)).unwrap();
        assert!(s.mutual_info < 1e-15);
        assert!(s.kernel.rows().iter().all(|r| r == s.kernel.row(0)));
        let mean: f64 = (0..2)
            .map(|b| input.weights()[b] * (0..3).map(|a| x.value(a, b) / 3.0).sum::<f64>())
            .sum();
        assert!((s.expected_utility - mean).abs() < 1e-12);
    }

    #[test]
    fn symmetric_binary_upsilon() {
        let (x, input) = binary();
        let s = channel_optimize(&x, &input, ChannelTarget::Upsilon(0.9)).unwrap();
        assert!((s.beta - 9f64.ln()).abs() < 1e-6);
        assert!((s.mutual_info - (2f64.ln() - hb(0.9))).abs() < 1e-8);
        assert!((s.mutual_info - 0.368064).abs() < 1e-6);
    }

    #[test]
    fn symmetric_binary_lambda() {
        let (x, input) = binary();
        let s = channel_optimize(&x, &input, ChannelTarget::Lambda(2f64.ln() - hb(0.9))).unwrap();
        assert!((s.beta - 9f64.ln()).abs() < 1e-6);
        assert!((s.expected_utility - 0.9).abs() < 1e-7);
        let s = channel_optimize(&x, &input, ChannelTarget::Lambda(2f64.ln())).unwrap();
        assert!(s.saturated);
        assert_eq!(
            is_deterministic(&s.kernel, 0.0),
            Some(FiniteMap::identity(2).unwrap())
        );
        assert_eq!(s.expected_utility, 1.0);
        assert!((channel_lambda_bar(&x, &input).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(channel_optimize(&x, &input, ChannelTarget::Lambda(-0.1)).is_err());
        assert!(matches!(
            channel_optimize(&x, &input, ChannelTarget::Upsilon(1.5)),
            Err(Error::Unreachable { .. })
        ));
    }

    #[test]
    fn free_energy_decreases() {
        let vals = [
            0.3, -0.2, 0.9, 0.1, 0.0, 0.5, -0.7, 0.4, 0.2, 0.8, -0.1, 0.6,
        ];
        let x = JointUtility::from_fn(4, 3, |a, b| vals[a + 4 * b]).unwrap();
        let input = ProbMeasure::from_weights(vec![0.2, 0.5, 0.3]).unwrap();
        let cfg = ChannelConfig {
            trace: true,
            ..Default::default()
        };
        let s = blahut_arimoto(&x, &input, 4.0, &cfg).unwrap();
        assert!(s.converged && s.residual < 1e-10);
        let t = s.free_energy_trace.unwrap();
        for w in t.windows(2) {
            assert!(w[1] <= w[0] + 1e-13);
        }
        // rows stay mutually absolutely continuous with the output marginal
        for row in s.kernel.rows() {
            for (k, q) in row.iter().zip(&s.output_marginal) {
                assert_eq!(*k > 0.0, *q > 0.0);
            }
        }
        for (q, v) in s
            .output_marginal
            .iter()
            .zip(s.kernel.push_forward(&input).unwrap())
        {
            assert!((q - v).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_input_rows_are_flagged() {
        let x = JointUtility::from_rows(&[
            vec![Some(1.0), Some(0.0), Some(0.2)],
            vec![Some(0.0), None, Some(1.0)],
            vec![Some(0.5), Some(0.5), Some(0.0)],
        ])
        .unwrap();
        let input = ProbMeasure::from_weights(vec![0.5, 0.0, 0.5]).unwrap();
        let s = channel_optimize(&x, &input, ChannelTarget::Beta(2.0)).unwrap();
        assert_eq!(s.unconstrained_rows, vec![1]);
        assert_eq!(s.kernel.row(1), &[0.5, 0.0, 0.5]);
    }

    #[test]
    fn nonconvergence_is_reported() {
        let (x, input) = binary();
        let x2 =
            JointUtility::from_fn(3, 2, |a, b| if a == b { 1.0 } else { 0.3 * a as f64 }).unwrap();
        let cfg = ChannelConfig {
            max_iter: 2,
            ..Default::default()
        };
        let s = blahut_arimoto(&x2, &input, 3.0, &cfg).unwrap();
        assert!(!s.converged && s.iterations == 2);
        assert!(matches!(
            channel_optimize_with(&x2, &input, ChannelTarget::Beta(3.0), &cfg),
            Err(Error::NoConvergence { iterations: 2, .. })
        ));
        assert!(blahut_arimoto(&x, &input, 3.0, &cfg).unwrap().converged);
    }
}

//! Boundedness checks for utilities on the natural numbers, where the
//! Gibbs normalizer `sum e^{beta x(n)}` may or may not converge.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome of a truncation test on a sequence of partial sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SeriesVerdict {
    Convergent,
    Divergent,
    Inconclusive,
}

impl fmt::Display for SeriesVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeriesVerdict::Convergent => "CONVERGENT",
            SeriesVerdict::Divergent => "DIVERGENT",
            SeriesVerdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Relative change below which two truncations count as converged.
pub const CONVERGENCE_RTOL: f64 = 1e-9;
/// Minimal ratio of successive increments for a divergence verdict.
pub const DIVERGENCE_RATIO: f64 = 0.9;

/// Classifies partial sums taken at geometrically spaced truncations.
///
/// Non-finite sums are divergent. The sequence is convergent when its last
/// two entries agree to [`CONVERGENCE_RTOL`] relatively, and divergent when
/// it moves strictly in one direction with increments that never shrink by
/// more than the factor [`DIVERGENCE_RATIO`]. Anything else is inconclusive.
pub fn series_verdict(values: &[f64]) -> SeriesVerdict {
    if values.iter().any(|v| !v.is_finite()) {
        return SeriesVerdict::Divergent;
    }
    if values.len() < 2 {
        return SeriesVerdict::Inconclusive;
    }
    let (a, b) = (values[values.len() - 2], values[values.len() - 1]);
    if (b - a).abs() <= CONVERGENCE_RTOL * a.abs().max(b.abs()) || a == b {
        return SeriesVerdict::Convergent;
    }
    let d: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let one_sign = d.iter().all(|&v| v > 0.0) || d.iter().all(|&v| v < 0.0);
    let no_decay = d
        .windows(2)
        .all(|w| w[1].abs() >= DIVERGENCE_RATIO * w[0].abs());
    if one_sign && no_decay {
        SeriesVerdict::Divergent
    } else {
        SeriesVerdict::Inconclusive
    }
}

/// Partial sums of `sum e^{beta x(n)}` and `sum x(n) e^{beta x(n)}` over
/// `n = 1..=N` at the truncations `N/4, N/2, N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundednessReport {
    pub beta: f64,
    pub truncations: Vec<u64>,
    pub normalizer: Vec<f64>,
    pub value: Vec<f64>,
    pub normalizer_verdict: SeriesVerdict,
    pub value_verdict: SeriesVerdict,
    /// Divergent if either series diverges, convergent if both converge.
    pub verdict: SeriesVerdict,
}

impl BoundednessReport {
    /// Expected utility `value / normalizer` at the largest truncation.
    pub fn expectation(&self) -> f64 {
        self.value.last().unwrap() / self.normalizer.last().unwrap()
    }
}

pub fn check_f_bounded<X>(x: X, beta: f64, n: u64) -> Result<BoundednessReport>
where
    X: Fn(u64) -> f64,
{
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::InvalidArgument(
            "beta must be finite and nonzero".into(),
        ));
    }
    if n < 10 {
        return Err(Error::InvalidArgument(
            "truncation N must be at least 10".into(),
        ));
    }
    let truncations = vec![n / 4, n / 2, n];
    let mut normalizer = Vec::with_capacity(3);
    let mut value = Vec::with_capacity(3);
    let (mut z, mut v) = (0.0f64, 0.0f64);
    let mut k = 1;
    for &t in &truncations {
        while k <= t {
            let xn = x(k);
            let w = (beta * xn).exp();
            z += w;
            v += if w == 0.0 { 0.0 } else { xn * w };
            k += 1;
        }
        normalizer.push(z);
        value.push(v);
    }
    let normalizer_verdict = series_verdict(&normalizer);
    let value_verdict = series_verdict(&value);
    let verdict = match (normalizer_verdict, value_verdict) {
        (SeriesVerdict::Divergent, _) | (_, SeriesVerdict::Divergent) => SeriesVerdict::Divergent,
        (SeriesVerdict::Convergent, SeriesVerdict::Convergent) => SeriesVerdict::Convergent,
        _ => SeriesVerdict::Inconclusive,
    };
    Ok(BoundednessReport {
        beta,
        truncations,
        normalizer,
        value,
        normalizer_verdict,
        value_verdict,
        verdict,
    })
}

/// Boundedness of `x` above (tested at `beta = 1`) and below (`beta = -1`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FBoundedness {
    pub bounded_above: bool,
    pub bounded_below: bool,
    pub above: BoundednessReport,
    pub below: BoundednessReport,
}

pub fn classify_f_bounded<X>(x: X, n: u64) -> Result<FBoundedness>
where
    X: Fn(u64) -> f64,
{
    let above = check_f_bounded(&x, 1.0, n)?;
    let below = check_f_bounded(&x, -1.0, n)?;
    Ok(FBoundedness {
        bounded_above: above.verdict == SeriesVerdict::Convergent,
        bounded_below: below.verdict == SeriesVerdict::Convergent,
        above,
        below,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn linear_utility_verdicts() {
        let r = check_f_bounded(|n| -(n as f64), 1.0, 200).unwrap();
        assert_eq!(r.verdict, SeriesVerdict::Convergent);
        let closed = -E / (E - 1.0).powi(2);
        assert!((r.value[2] - closed).abs() < 1e-12);
        let r = check_f_bounded(|n| -(n as f64), -1.0, 200).unwrap();
        assert_eq!(r.verdict, SeriesVerdict::Divergent);
        let c = classify_f_bounded(|n| -(n as f64), 200).unwrap();
        assert!(c.bounded_above && !c.bounded_below);
    }

    #[test]
    fn constants_are_neither() {
        for alpha in [-1.5, 0.0, 2.0] {
            let c = classify_f_bounded(|_| alpha, 200).unwrap();
            assert!(!c.bounded_above && !c.bounded_below);
            assert_eq!(c.above.normalizer_verdict, SeriesVerdict::Divergent);
        }
    }

    #[test]
    fn overflow_counts_as_divergent() {
        let r = check_f_bounded(|n| n as f64, 1.0, 4000).unwrap();
        assert_eq!(r.verdict, SeriesVerdict::Divergent);
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(series_verdict(&[1.0, 2.0, 3.0]), SeriesVerdict::Divergent);
        assert_eq!(
            series_verdict(&[1.0, 1.5, 1.6]),
            SeriesVerdict::Inconclusive
        );
        assert_eq!(
            series_verdict(&[1.0, 1.0 + 1e-12]),
            SeriesVerdict::Convergent
        );
        assert_eq!(
            series_verdict(&[1.0, f64::INFINITY]),
            SeriesVerdict::Divergent
        );
        assert!(check_f_bounded(|n| n as f64, 0.0, 100).is_err());
        assert!(check_f_bounded(|n| n as f64, 1.0, 5).is_err());
    }
}

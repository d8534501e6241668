//! Information functionals `F` on measures, their conjugates `F*` and the
//! gradient-of-conjugate map `y = grad F*(x)` that produces optimal measures.
//!
//! Three kinds are supported: the extended Kullback-Leibler divergence from
//! a reference `y0`, the negative entropy `<ln y - 1, y>` and the total
//! variation distance `||y - y0||_1`. Each may act on the positive cone
//! (unnormalized measures) or on the probability simplex.
//!
//! The KL conjugate is kept in the form `<1, y0 e^x>`, which differs from
//! the exact Fenchel conjugate of the extended divergence by the constant
//! `<1, y0>`. Identity checks that need the exact conjugate subtract it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{normalize, FiniteSpace, Measure, ProbMeasure, Utility};

/// Domain on which a functional acts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cone,
    #[default]
    Simplex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    ExtendedKl,
    NegEntropy,
    TotalVariation,
}

/// Wire form `{"kind": ..., "reference": <measure>, "mode": ...}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalRepr {
    pub kind: FunctionalKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Measure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
}

/// An information functional together with its reference point `y0`
/// (the minimizer of `F` on the functional's domain).
#[derive(Clone, Debug, PartialEq)]
pub struct InfoFunctional {
    kind: FunctionalKind,
    mode: Mode,
    reference: Measure,
}

impl InfoFunctional {
    pub fn extended_kl(reference: Measure, mode: Mode) -> Result<Self> {
        let reference = match mode {
            Mode::Cone => reference,
            Mode::Simplex => ProbMeasure::new(reference)?.into_measure(),
        };
        Ok(InfoFunctional {
            kind: FunctionalKind::ExtendedKl,
            mode,
            reference,
        })
    }

    /// Negative entropy; the reference is the counting measure on the cone
    /// and the uniform distribution on the simplex.
    pub fn neg_entropy(space: Arc<FiniteSpace>, mode: Mode) -> Self {
        let reference = match mode {
            Mode::Cone => Measure::counting(space),
            Mode::Simplex => ProbMeasure::uniform(space).into_measure(),
        };
        InfoFunctional {
            kind: FunctionalKind::NegEntropy,
            mode,
            reference,
        }
    }

    pub fn total_variation(reference: Measure, mode: Mode) -> Result<Self> {
        let reference = match mode {
            Mode::Cone => reference,
            Mode::Simplex => ProbMeasure::new(reference)?.into_measure(),
        };
        Ok(InfoFunctional {
            kind: FunctionalKind::TotalVariation,
            mode,
            reference,
        })
    }

    pub fn from_repr(repr: &FunctionalRepr, space: &Arc<FiniteSpace>) -> Result<Self> {
        let mode = repr.mode.unwrap_or_default();
        let reference = |r: &Option<Measure>| -> Result<Measure> {
            let r = r.clone().ok_or_else(|| {
                Error::InvalidArgument("functional requires a `reference` measure".into())
            })?;
            if r.len() != space.len() {
                return Err(Error::DimensionMismatch {
                    expected: space.len(),
                    got: r.len(),
                });
            }
            Measure::new(space.clone(), r.into_weights())
        };
        match repr.kind {
            FunctionalKind::ExtendedKl => Self::extended_kl(reference(&repr.reference)?, mode),
            FunctionalKind::TotalVariation => {
                Self::total_variation(reference(&repr.reference)?, mode)
            }
            FunctionalKind::NegEntropy => Ok(Self::neg_entropy(space.clone(), mode)),
        }
    }

    pub fn to_repr(&self) -> FunctionalRepr {
        FunctionalRepr {
            kind: self.kind,
            reference: Some(self.reference.clone()),
            mode: Some(self.mode),
        }
    }

    pub fn kind(&self) -> FunctionalKind {
        self.kind
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn reference(&self) -> &Measure {
        &self.reference
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        self.reference.space()
    }

    pub fn strictly_convex_dual(&self) -> bool {
        !matches!(self.kind, FunctionalKind::TotalVariation)
    }

    /// `F(y)`; on the simplex, `+inf` off the simplex.
    pub fn eval(&self, y: &Measure) -> Result<f64> {
        check_len(y.len(), self.reference.len())?;
        if self.mode == Mode::Simplex && (y.total_mass() - 1.0).abs() > 1e-9 {
            return Ok(f64::INFINITY);
        }
        match self.kind {
            FunctionalKind::ExtendedKl => kl_eval(y, &self.reference),
            FunctionalKind::NegEntropy => Ok(negentropy_eval(y)),
            FunctionalKind::TotalVariation => tv_eval(y, &self.reference),
        }
    }

    /// `F*(x)`. Cone mode: the standard conjugates on the cone. Simplex mode: the
    /// conjugate of `F` restricted to probability measures.
    pub fn dual_eval(&self, x: &Utility) -> Result<f64> {
        check_len(x.len(), self.reference.len())?;
        let y0 = &self.reference;
        match (self.kind, self.mode) {
            (FunctionalKind::ExtendedKl | FunctionalKind::NegEntropy, Mode::Cone) => {
                kl_dual_eval(x, y0)
            }
            (FunctionalKind::ExtendedKl, Mode::Simplex) => kl_dual_log_eval(x, y0),
            (FunctionalKind::NegEntropy, Mode::Simplex) => {
                let ones = Measure::counting(y0.space().clone());
                Ok(kl_dual_log_eval(x, &ones)? + 1.0)
            }
            (FunctionalKind::TotalVariation, Mode::Cone) => {
                let mut s = 0.0;
                for ((&v, &e), &w) in x.values().iter().zip(x.excluded()).zip(y0.weights()) {
                    if e {
                        continue;
                    }
                    if v > 1.0 {
                        return Ok(f64::INFINITY);
                    }
                    s += v * w;
                    if v < -1.0 {
                        s += (-1.0 - v) * w;
                    }
                }
                Ok(s)
            }
            (FunctionalKind::TotalVariation, Mode::Simplex) => {
                // Moving mass from i onto the argmax gains x_max - x_i per unit
                // and costs 2 per unit of distance.
                let x_max = x
                    .admissible()
                    .map(|(_, v)| v)
                    .fold(f64::NEG_INFINITY, f64::max);
                let mut s = 0.0;
                for (i, &w) in y0.weights().iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    if x.is_excluded(i) {
                        // Leaving the excluded atom is mandatory; it still costs 2.
                        s += (x_max - 2.0) * w;
                        continue;
                    }
                    let v = x.values()[i];
                    s += v * w + (x_max - v - 2.0).max(0.0) * w;
                }
                Ok(s)
            }
        }
    }

    /// The representative of `dF*(x)`: `y0 e^x` on the cone, its
    /// normalization on the simplex. Not available for total variation.
    pub fn dual_subgradient(&self, x: &Utility) -> Result<Measure> {
        if !self.strictly_convex_dual() {
            return Err(Error::NotStrictlyConvex);
        }
        match self.mode {
            Mode::Cone => kl_dual_subgradient(x, &self.reference),
            Mode::Simplex => {
                let q = ProbMeasure::new(self.reference.clone())?;
                Ok(gibbs(x, &q, 1.0)?.into_measure())
            }
        }
    }
}

fn check_len(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Extended KL divergence `sum [y ln(y/y0) - y + y0]`.
pub fn kl_eval(y: &Measure, y0: &Measure) -> Result<f64> {
    check_len(y.len(), y0.len())?;
    let mut s = 0.0;
    for (&a, &b) in y.weights().iter().zip(y0.weights()) {
        if a == 0.0 {
            s += b;
        } else if b == 0.0 {
            return Ok(f64::INFINITY);
        } else {
            s += a * (a / b).ln() - a + b;
        }
    }
    Ok(s.max(0.0))
}

/// `ln <1, y0 e^x>` with a max shift; `-inf` when no admissible atom is
/// charged by `y0`.
pub fn kl_dual_log_eval(x: &Utility, y0: &Measure) -> Result<f64> {
    check_len(x.len(), y0.len())?;
    let m = x
        .admissible()
        .filter(|&(i, _)| y0.weights()[i] > 0.0)
        .map(|(_, v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let s: f64 = x
        .admissible()
        .map(|(i, v)| y0.weights()[i] * (v - m).exp())
        .sum();
    Ok(m + s.ln())
}

/// `F*_KL(x) = <1, y0 e^x>`.
pub fn kl_dual_eval(x: &Utility, y0: &Measure) -> Result<f64> {
    Ok(kl_dual_log_eval(x, y0)?.exp())
}

/// `grad F*_KL(x) = y0 e^x`, zero on excluded atoms.
pub fn kl_dual_subgradient(x: &Utility, y0: &Measure) -> Result<Measure> {
    check_len(x.len(), y0.len())?;
    let w: Vec<f64> = x
        .values()
        .iter()
        .zip(y0.weights())
        .map(|(&v, &w0)| if w0 == 0.0 { 0.0 } else { w0 * v.exp() })
        .collect();
    if let Some(i) = w.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "exponential overflow at atom {i} (x = {})",
            x.values()[i]
        )));
    }
    Measure::new(y0.space().clone(), w)
}

/// `<ln y - 1, y>` with `0 ln 0 = 0`.
pub fn negentropy_eval(y: &Measure) -> f64 {
    y.weights()
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| w * (w.ln() - 1.0))
        .sum()
}

/// `||y - y0||_1`.
pub fn tv_eval(y: &Measure, y0: &Measure) -> Result<f64> {
    check_len(y.len(), y0.len())?;
    Ok(y.weights()
        .iter()
        .zip(y0.weights())
        .map(|(a, b)| (a - b).abs())
        .sum())
}

/// Gibbs tilt `p(w) ~ q(w) e^{beta x(w)}`, computed with a max shift.
///
/// `beta = 0` returns `q` itself. `beta = +inf` (or `-inf`) returns the
/// pointwise limit: `q` restricted to the argmax (argmin) of `x` over the
/// admissible support of `q`, renormalized.
pub fn gibbs(x: &Utility, q: &ProbMeasure, beta: f64) -> Result<ProbMeasure> {
    check_len(x.len(), q.len())?;
    if beta.is_nan() {
        return Err(Error::InvalidArgument("beta is NaN".into()));
    }
    let qw = q.weights();
    let charged = || x.admissible().filter(|&(i, _)| qw[i] > 0.0);
    if charged().next().is_none() {
        return Err(Error::AllExcluded);
    }
    if beta == 0.0 && x.excluded().iter().zip(qw).all(|(&e, &w)| !e || w == 0.0) {
        return Ok(q.clone());
    }
    let w: Vec<f64> = if beta.is_infinite() {
        let target = if beta > 0.0 {
            charged().map(|(_, v)| v).fold(f64::NEG_INFINITY, f64::max)
        } else {
            charged().map(|(_, v)| v).fold(f64::INFINITY, f64::min)
        };
        (0..q.len())
            .map(|i| {
                if !x.is_excluded(i) && x.values()[i] == target {
                    qw[i]
                } else {
                    0.0
                }
            })
            .collect()
    } else {
        let m = charged()
            .map(|(_, v)| beta * v)
            .fold(f64::NEG_INFINITY, f64::max);
        (0..q.len())
            .map(|i| {
                if x.is_excluded(i) || qw[i] == 0.0 {
                    0.0
                } else {
                    qw[i] * (beta * x.values()[i] - m).exp()
                }
            })
            .collect()
    };
    normalize(&Measure::with_weights_unchecked(q.space().clone(), w))
}

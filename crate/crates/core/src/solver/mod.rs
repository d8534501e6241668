//! Information-constrained maximization of expected utility.
//!
//! For a functional with strictly convex conjugate the maximizer of `<x, y>`
//! under `F(y) <= lambda` is the gradient of the conjugate at `beta x`, with
//! the inverse temperature `beta` tuned so the constraint is active. On the
//! simplex that is the Gibbs family `p ~ q e^{beta x}`; on the cone it is
//! `y0 e^{beta x}`. Both `F(y_beta)` and `<x, y_beta>` are nondecreasing in
//! `beta`, so the multiplier is found by bisection.
//!
//! Total variation has no such gradient map; it goes through the LP path
//! in [`tv`].

mod bounded;
mod tv;

pub use bounded::{
    check_f_bounded, classify_f_bounded, series_verdict, BoundednessReport, FBoundedness,
    SeriesVerdict,
};
pub use tv::{solve_tv, TvSolution};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bisect::{bisect_increasing, BisectConfig, Bisection};
use crate::error::{Error, Result};
use crate::functionals::{gibbs, kl_dual_subgradient, FunctionalKind, InfoFunctional, Mode};
use crate::measure::{pair, Measure, ProbMeasure, Utility};

/// Slack used when comparing constraint levels to the special values.
const LEVEL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionStatus {
    /// Active constraint met by bisection.
    Interior,
    /// `lambda = lambda0` (or `upsilon = upsilon0`): the reference itself.
    Trivial,
    /// Requested `upsilon` below the trivial value; the trivial solution is returned.
    BelowTrivial,
    /// Utility constant on the reference support: every feasible point is optimal.
    FlatObjective,
    /// Constraint not binding; the unconstrained maximizer is returned.
    Saturated,
    /// Bisection could not bracket before `beta_max`.
    BetaCapped,
}

/// Optimal measure with its multiplier, value `<x, y>` and information `F(y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimalSolution {
    pub beta: f64,
    pub measure: Measure,
    pub value: f64,
    pub info: f64,
    pub status: SolutionStatus,
}

impl OptimalSolution {
    pub fn saturated(&self) -> bool {
        matches!(
            self.status,
            SolutionStatus::Saturated | SolutionStatus::BetaCapped
        )
    }

    pub fn beta_inverse(&self) -> f64 {
        inverse(self.beta)
    }
}

fn inverse(beta: f64) -> f64 {
    if beta == 0.0 {
        if beta.is_sign_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    } else if beta.is_infinite() {
        0.0
    } else {
        1.0 / beta
    }
}

impl Serialize for OptimalSolution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("OptimalSolution", 7)?;
        st.serialize_field("beta", &finite_or_string(self.beta))?;
        st.serialize_field("beta_inverse", &finite_or_string(self.beta_inverse()))?;
        st.serialize_field("value", &finite_or_string(self.value))?;
        st.serialize_field("info", &finite_or_string(self.info))?;
        st.serialize_field("saturated", &self.saturated())?;
        st.serialize_field("status", &self.status)?;
        st.serialize_field("weights", self.measure.weights())?;
        st.end()
    }
}

/// JSON has no infinities; encode them as `"inf"` / `"-inf"`.
pub(crate) fn finite_or_string(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else if v.is_nan() {
        serde_json::Value::String("nan".into())
    } else if v > 0.0 {
        serde_json::Value::String("inf".into())
    } else {
        serde_json::Value::String("-inf".into())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Upper,
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurveSample {
    pub lambda: f64,
    pub upsilon: f64,
    pub beta_inverse: f64,
    pub saturated: bool,
}

/// Sampled optimal value function `lambda -> upsilon`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValueCurve {
    pub branch: Branch,
    pub samples: Vec<CurveSample>,
}

/// Levels of the constraint and values at which the problem degenerates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpecialValues {
    /// `inf F`.
    pub lambda0: f64,
    /// Information of the unconstrained maximizer.
    pub lambda_bar_upper: f64,
    /// Information of the unconstrained minimizer.
    pub lambda_bar_lower: f64,
    /// Unconstrained maximum of `<x, y>`.
    pub upsilon_bar: f64,
    /// Unconstrained minimum of `<x, y>`.
    pub upsilon_underbar: f64,
    pub upsilon0_upper: f64,
    pub upsilon0_lower: f64,
}

/// The optimal family `beta -> y_beta` for one utility and functional.
pub(crate) struct Family<'a> {
    x: &'a Utility,
    f: &'a InfoFunctional,
    q: Option<ProbMeasure>,
}

impl<'a> Family<'a> {
    pub(crate) fn new(x: &'a Utility, f: &'a InfoFunctional) -> Result<Self> {
        if !f.strictly_convex_dual() {
            return Err(Error::NotStrictlyConvex);
        }
        if x.len() != f.reference().len() {
            return Err(Error::DimensionMismatch {
                expected: f.reference().len(),
                got: x.len(),
            });
        }
        let q = match f.mode() {
            Mode::Simplex => Some(ProbMeasure::new(f.reference().clone())?),
            Mode::Cone => None,
        };
        Ok(Family { x, f, q })
    }

    pub(crate) fn measure_at(&self, beta: f64) -> Result<Measure> {
        match &self.q {
            Some(q) => Ok(gibbs(self.x, q, beta)?.into_measure()),
            None if beta == 0.0 => Ok(self.f.reference().clone()),
            None if beta.is_infinite() => self.cone_limit(beta > 0.0),
            None => kl_dual_subgradient(&self.x.scaled(beta), self.f.reference()),
        }
    }

    /// Pointwise limit of `y0 e^{beta x}` for `beta -> +-inf`; atoms whose
    /// mass diverges make the limit infinite.
    fn cone_limit(&self, upper: bool) -> Result<Measure> {
        let y0 = self.f.reference();
        let w: Vec<f64> = (0..y0.len())
            .map(|i| {
                let w0 = y0.weights()[i];
                if w0 == 0.0 || self.x.is_excluded(i) {
                    return 0.0;
                }
                let v = if upper {
                    self.x.values()[i]
                } else {
                    -self.x.values()[i]
                };
                if v > 0.0 {
                    f64::INFINITY
                } else if v == 0.0 {
                    w0
                } else {
                    0.0
                }
            })
            .collect();
        if w.iter().any(|v| v.is_infinite()) {
            return Err(Error::Unreachable {
                requested: f64::INFINITY,
                maximum: f64::INFINITY,
            });
        }
        Measure::new(y0.space().clone(), w)
    }

    fn solution(&self, beta: f64, status: SolutionStatus) -> Result<OptimalSolution> {
        let measure = self.measure_at(beta)?;
        let value = pair(self.x, &measure)?;
        let info = self.f.eval(&measure)?;
        Ok(OptimalSolution {
            beta,
            measure,
            value,
            info,
            status,
        })
    }

    /// True when `x` takes one value on the admissible support of the reference.
    fn is_flat(&self) -> bool {
        let y0 = self.f.reference();
        let mut vals = self
            .x
            .admissible()
            .filter(|&(i, _)| y0.weights()[i] > 0.0)
            .map(|(_, v)| v);
        match vals.next() {
            Some(first) => vals.all(|v| v == first),
            None => true,
        }
    }

    fn special_values(&self) -> Result<SpecialValues> {
        let y0 = self.f.reference();
        let lambda0 = self.f.eval(y0)?;
        let upsilon0 = pair(self.x, y0)?;
        let (lambda_bar_upper, upsilon_bar) = match self.measure_at(f64::INFINITY) {
            Ok(m) => (self.f.eval(&m)?, pair(self.x, &m)?),
            Err(Error::Unreachable { .. }) => (f64::INFINITY, f64::INFINITY),
            Err(e) => return Err(e),
        };
        let (lambda_bar_lower, upsilon_underbar) = match self.measure_at(f64::NEG_INFINITY) {
            Ok(m) => (self.f.eval(&m)?, pair(self.x, &m)?),
            Err(Error::Unreachable { .. }) => (f64::INFINITY, f64::NEG_INFINITY),
            Err(e) => return Err(e),
        };
        Ok(SpecialValues {
            lambda0,
            lambda_bar_upper,
            lambda_bar_lower,
            upsilon_bar,
            upsilon_underbar,
            upsilon0_upper: upsilon0,
            upsilon0_lower: upsilon0,
        })
    }
}

/// Special values of the problem pair `(x, F)`.
///
/// On the simplex with the KL functional these reduce to `lambda0 = 0`,
/// `upsilon_bar = max x`, `upsilon0 = <x, q>` and
/// `lambda_bar = -ln q(argmax x)`; the argmax is taken over the support of
/// `q`.
pub fn special_values(x: &Utility, f: &InfoFunctional) -> Result<SpecialValues> {
    if f.kind() == FunctionalKind::TotalVariation {
        return tv::tv_special_values(x, f);
    }
    Family::new(x, f)?.special_values()
}

/// Solution of the problem family at a fixed multiplier `beta`.
pub fn solution_at_beta(x: &Utility, f: &InfoFunctional, beta: f64) -> Result<OptimalSolution> {
    let fam = Family::new(x, f)?;
    let status = if beta == 0.0 {
        SolutionStatus::Trivial
    } else if beta.is_infinite() {
        SolutionStatus::Saturated
    } else {
        SolutionStatus::Interior
    };
    fam.solution(beta, status)
}

/// Maximizes `<x, y>` subject to `F(y) <= lambda`.
pub fn solve_for_lambda(x: &Utility, f: &InfoFunctional, lambda: f64) -> Result<OptimalSolution> {
    solve_for_lambda_with(x, f, lambda, &BisectConfig::default())
}

pub fn solve_for_lambda_with(
    x: &Utility,
    f: &InfoFunctional,
    lambda: f64,
    cfg: &BisectConfig,
) -> Result<OptimalSolution> {
    if lambda.is_nan() {
        return Err(Error::InvalidArgument("lambda is NaN".into()));
    }
    let fam = Family::new(x, f)?;
    let sv = fam.special_values()?;
    if lambda < sv.lambda0 - LEVEL_TOL {
        return Err(Error::Infeasible {
            requested: lambda,
            minimum: sv.lambda0,
        });
    }
    if f.mode() == Mode::Simplex && fam.is_flat() {
        return fam.solution(0.0, SolutionStatus::FlatObjective);
    }
    if lambda <= sv.lambda0 {
        return fam.solution(0.0, SolutionStatus::Trivial);
    }
    if lambda >= sv.lambda_bar_upper {
        return fam.solution(f64::INFINITY, SolutionStatus::Saturated);
    }
    let g = |beta: f64| -> Result<f64> {
        match fam.measure_at(beta) {
            Ok(m) => Ok(f.eval(&m)? - lambda),
            Err(Error::Numerical(_)) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    };
    match bisect_increasing(g, cfg)? {
        Bisection::Root { beta, .. } => fam.solution(beta, SolutionStatus::Interior),
        Bisection::Capped { beta, .. } => fam.solution(beta, SolutionStatus::BetaCapped),
    }
}

/// Minimal information needed to reach `<x, y> >= upsilon`.
pub fn solve_for_upsilon(x: &Utility, f: &InfoFunctional, upsilon: f64) -> Result<OptimalSolution> {
    if upsilon.is_nan() {
        return Err(Error::InvalidArgument("upsilon is NaN".into()));
    }
    let fam = Family::new(x, f)?;
    let sv = fam.special_values()?;
    let scale = 1.0 + sv.upsilon_bar.abs().min(1e300);
    if upsilon > sv.upsilon_bar + LEVEL_TOL * scale {
        return Err(Error::Unreachable {
            requested: upsilon,
            maximum: sv.upsilon_bar,
        });
    }
    if f.mode() == Mode::Simplex && fam.is_flat() {
        return fam.solution(0.0, SolutionStatus::FlatObjective);
    }
    if upsilon < sv.upsilon0_upper - LEVEL_TOL * scale {
        return fam.solution(0.0, SolutionStatus::BelowTrivial);
    }
    if upsilon <= sv.upsilon0_upper {
        return fam.solution(0.0, SolutionStatus::Trivial);
    }
    if upsilon >= sv.upsilon_bar {
        return fam.solution(f64::INFINITY, SolutionStatus::Saturated);
    }
    let h = |beta: f64| -> Result<f64> {
        match fam.measure_at(beta) {
            Ok(m) => Ok(pair(x, &m)? - upsilon),
            Err(Error::Numerical(_)) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    };
    match bisect_increasing(h, &BisectConfig::default())? {
        Bisection::Root { beta, .. } => fam.solution(beta, SolutionStatus::Interior),
        Bisection::Capped { beta, .. } => fam.solution(beta, SolutionStatus::BetaCapped),
    }
}

/// Minimizes `<x, y>` subject to `F(y) <= lambda`, via `-max <-x, y>`.
/// The returned multiplier is negative.
pub fn lower_branch(x: &Utility, f: &InfoFunctional, lambda: f64) -> Result<OptimalSolution> {
    let mut s = solve_for_lambda(&x.negated(), f, lambda)?;
    s.value = -s.value;
    s.beta = -s.beta;
    Ok(s)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if let Some(i) = grid.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid(i + 1));
    }
    Ok(())
}

/// Optimal value function sampled on an increasing `lambda` grid. Grid
/// points are solved in parallel and assembled in grid order.
pub fn value_curve(
    x: &Utility,
    f: &InfoFunctional,
    lambda_grid: &[f64],
    branch: Branch,
) -> Result<ValueCurve> {
    check_grid(lambda_grid)?;
    let samples = lambda_grid
        .par_iter()
        .map(|&lambda| {
            let s = match (f.kind(), branch) {
                (FunctionalKind::TotalVariation, _) => {
                    let q = ProbMeasure::new(f.reference().clone())?;
                    let xx = match branch {
                        Branch::Upper => x.clone(),
                        Branch::Lower => x.negated(),
                    };
                    let mut s = solve_tv(&xx, &q, lambda)?.solution;
                    if branch == Branch::Lower {
                        s.value = -s.value;
                        s.beta = -s.beta;
                    }
                    s
                }
                (_, Branch::Upper) => solve_for_lambda(x, f, lambda)?,
                (_, Branch::Lower) => lower_branch(x, f, lambda)?,
            };
            Ok(CurveSample {
                lambda,
                upsilon: s.value,
                beta_inverse: s.beta_inverse(),
                saturated: s.saturated(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ValueCurve { branch, samples })
}

/// Inverse value function: minimal information for each `upsilon` on an
/// increasing grid (upper branch).
pub fn upsilon_curve(x: &Utility, f: &InfoFunctional, upsilon_grid: &[f64]) -> Result<ValueCurve> {
    check_grid(upsilon_grid)?;
    let samples = upsilon_grid
        .par_iter()
        .map(|&u| {
            let s = solve_for_upsilon(x, f, u)?;
            Ok(CurveSample {
                lambda: s.info,
                upsilon: u,
                beta_inverse: s.beta_inverse(),
                saturated: s.saturated(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ValueCurve {
        branch: Branch::Upper,
        samples,
    })
}

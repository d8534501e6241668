//! Finite sample spaces, nonnegative measures over them, probability measures
//! and utility vectors, together with the pairing `<x, y> = sum x(w) y(w)`.
//!
//! All types are immutable after construction. Spaces are shared through
//! [`Arc`] so that measures derived from one another stay cheap to clone.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance accepted by [`ProbMeasure`] constructors before they
/// renormalize.
pub const RENORMALIZE_TOL: f64 = 1e-9;
/// Normalization guaranteed by every [`ProbMeasure`].
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// An ordered, finite index set with distinct labels.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SpaceRepr", into = "SpaceRepr")]
pub struct FiniteSpace {
    labels: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceRepr {
    labels: Vec<String>,
}

impl TryFrom<SpaceRepr> for FiniteSpace {
    type Error = Error;
    fn try_from(r: SpaceRepr) -> Result<Self> {
        FiniteSpace::new(r.labels)
    }
}

impl From<FiniteSpace> for SpaceRepr {
    fn from(s: FiniteSpace) -> Self {
        SpaceRepr { labels: s.labels }
    }
}

impl FiniteSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::EmptySpace);
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        Ok(FiniteSpace { labels, index })
    }

    /// Space labelled `"0"`, `"1"`, ... `"n-1"`.
    pub fn with_size(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels.get(i).map(String::as_str)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }
}

impl fmt::Debug for FiniteSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("FiniteSpace").field(&self.labels).finish()
    }
}

/// Product `A x B` with row-major flat layout in `a`: `k = a * |B| + b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointSpace {
    #[serde(rename = "a")]
    space_a: Arc<FiniteSpace>,
    #[serde(rename = "b")]
    space_b: Arc<FiniteSpace>,
}

impl JointSpace {
    pub fn new(space_a: Arc<FiniteSpace>, space_b: Arc<FiniteSpace>) -> Self {
        JointSpace { space_a, space_b }
    }

    pub fn with_sizes(a: usize, b: usize) -> Result<Self> {
        Ok(JointSpace::new(
            Arc::new(FiniteSpace::with_size(a)?),
            Arc::new(FiniteSpace::with_size(b)?),
        ))
    }

    pub fn space_a(&self) -> &Arc<FiniteSpace> {
        &self.space_a
    }

    pub fn space_b(&self) -> &Arc<FiniteSpace> {
        &self.space_b
    }

    pub fn len_a(&self) -> usize {
        self.space_a.len()
    }

    pub fn len_b(&self) -> usize {
        self.space_b.len()
    }

    pub fn len(&self) -> usize {
        self.len_a() * self.len_b()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn flat(&self, a: usize, b: usize) -> usize {
        debug_assert!(a < self.len_a() && b < self.len_b());
        a * self.len_b() + b
    }

    #[inline]
    pub fn unflat(&self, k: usize) -> (usize, usize) {
        (k / self.len_b(), k % self.len_b())
    }

    /// Swapped product `B x A`.
    pub fn transpose(&self) -> JointSpace {
        JointSpace::new(self.space_b.clone(), self.space_a.clone())
    }

    /// Flat space with labels `"a|b"`.
    pub fn as_space(&self) -> FiniteSpace {
        let mut labels = Vec::with_capacity(self.len());
        for a in self.space_a.labels() {
            for b in self.space_b.labels() {
                labels.push(format!("{a}|{b}"));
            }
        }
        FiniteSpace::new(labels).expect("product of distinct labels is distinct")
    }
}

fn check_same(a: &FiniteSpace, b: &FiniteSpace) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(())
}

/// Nonnegative finite weights over a [`FiniteSpace`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr", into = "MeasureRepr")]
pub struct Measure {
    space: Arc<FiniteSpace>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureRepr {
    /// Defaults to the space `0..n` when omitted.
    #[serde(default)]
    space: Option<FiniteSpace>,
    weights: Vec<f64>,
}

impl TryFrom<MeasureRepr> for Measure {
    type Error = Error;
    fn try_from(r: MeasureRepr) -> Result<Self> {
        match r.space {
            Some(space) => Measure::new(Arc::new(space), r.weights),
            None => Measure::from_weights(r.weights),
        }
    }
}

impl From<Measure> for MeasureRepr {
    fn from(m: Measure) -> Self {
        MeasureRepr {
            space: Some((*m.space).clone()),
            weights: m.weights,
        }
    }
}

impl Measure {
    pub fn new(space: Arc<FiniteSpace>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                got: weights.len(),
            });
        }
        for (index, &value) in weights.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidWeight { index, value });
            }
        }
        Ok(Measure { space, weights })
    }

    /// Measure on a freshly labelled space of matching size.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let space = Arc::new(FiniteSpace::with_size(weights.len())?);
        Measure::new(space, weights)
    }

    pub fn zero(space: Arc<FiniteSpace>) -> Self {
        let n = space.len();
        Measure {
            space,
            weights: vec![0.0; n],
        }
    }

    /// Counting measure, `y(w) = 1` everywhere.
    pub fn counting(space: Arc<FiniteSpace>) -> Self {
        let n = space.len();
        Measure {
            space,
            weights: vec![1.0; n],
        }
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    /// `alpha * self + gamma * other` for nonnegative coefficients.
    pub fn combine(&self, alpha: f64, other: &Measure, gamma: f64) -> Result<Measure> {
        check_same(&self.space, &other.space)?;
        let w = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| alpha * a + gamma * b)
            .collect();
        Measure::new(self.space.clone(), w)
    }

    pub(crate) fn with_weights_unchecked(space: Arc<FiniteSpace>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(space.len(), weights.len());
        Measure { space, weights }
    }
}

/// A [`Measure`] with total mass one (to [`NORMALIZATION_TOL`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Measure", into = "Measure")]
pub struct ProbMeasure(Measure);

impl TryFrom<Measure> for ProbMeasure {
    type Error = Error;
    fn try_from(m: Measure) -> Result<Self> {
        ProbMeasure::new(m)
    }
}

impl From<ProbMeasure> for Measure {
    fn from(p: ProbMeasure) -> Self {
        p.0
    }
}

impl ProbMeasure {
    /// Accepts measures whose mass is within [`RENORMALIZE_TOL`] of one and
    /// renormalizes them; rejects anything further off.
    pub fn new(m: Measure) -> Result<Self> {
        let mass = m.total_mass();
        if (mass - 1.0).abs() > RENORMALIZE_TOL {
            return Err(Error::NotNormalized(mass));
        }
        if (mass - 1.0).abs() <= NORMALIZATION_TOL {
            return Ok(ProbMeasure(m));
        }
        normalize(&m)
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        ProbMeasure::new(Measure::from_weights(weights)?)
    }

    pub fn uniform(space: Arc<FiniteSpace>) -> Self {
        let n = space.len();
        ProbMeasure(Measure::with_weights_unchecked(
            space,
            vec![1.0 / n as f64; n],
        ))
    }

    pub fn dirac(space: Arc<FiniteSpace>, at: usize) -> Result<Self> {
        let n = space.len();
        if at >= n {
            return Err(Error::InvalidArgument(format!(
                "dirac index {at} out of range for space of size {n}"
            )));
        }
        let mut w = vec![0.0; n];
        w[at] = 1.0;
        Ok(ProbMeasure(Measure::with_weights_unchecked(space, w)))
    }

    pub fn as_measure(&self) -> &Measure {
        &self.0
    }

    pub fn into_measure(self) -> Measure {
        self.0
    }

    pub fn weights(&self) -> &[f64] {
        self.0.weights()
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        self.0.space()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Deref for ProbMeasure {
    type Target = Measure;
    fn deref(&self) -> &Measure {
        &self.0
    }
}

/// Real objective over a space. Excluded entries stand for `x(w) = -inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct Utility {
    space: Arc<FiniteSpace>,
    values: Vec<f64>,
    excluded: Vec<bool>,
}

/// Wire form `{"values": [...], "excluded": [indices]}`; excluded positions
/// may hold `null`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityRepr {
    pub values: Vec<Option<f64>>,
    #[serde(default)]
    pub excluded: Vec<usize>,
}

impl Utility {
    pub fn new(space: Arc<FiniteSpace>, values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Utility::with_excluded(space, values, vec![false; n])
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let space = Arc::new(FiniteSpace::with_size(values.len())?);
        Utility::new(space, values)
    }

    pub fn with_excluded(
        space: Arc<FiniteSpace>,
        mut values: Vec<f64>,
        excluded: Vec<bool>,
    ) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                got: values.len(),
            });
        }
        if excluded.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                got: excluded.len(),
            });
        }
        for (i, (v, &e)) in values.iter_mut().zip(&excluded).enumerate() {
            if e {
                *v = f64::NEG_INFINITY;
            } else if !v.is_finite() {
                return Err(Error::InvalidWeight {
                    index: i,
                    value: *v,
                });
            }
        }
        if excluded.iter().all(|&e| e) {
            return Err(Error::AllExcluded);
        }
        Ok(Utility {
            space,
            values,
            excluded,
        })
    }

    pub fn from_repr(space: Arc<FiniteSpace>, repr: &UtilityRepr) -> Result<Self> {
        let n = repr.values.len();
        let mut excluded = vec![false; n];
        for &i in &repr.excluded {
            if i >= n {
                return Err(Error::InvalidArgument(format!(
                    "excluded index {i} out of range"
                )));
            }
            excluded[i] = true;
        }
        let mut values = Vec::with_capacity(n);
        for (i, v) in repr.values.iter().enumerate() {
            match v {
                Some(v) => values.push(*v),
                None if excluded[i] => values.push(f64::NEG_INFINITY),
                None => {
                    return Err(Error::InvalidArgument(format!(
                        "utility value {i} is null but not excluded"
                    )))
                }
            }
        }
        Utility::with_excluded(space, values, excluded)
    }

    pub fn to_repr(&self) -> UtilityRepr {
        UtilityRepr {
            values: self
                .values
                .iter()
                .zip(&self.excluded)
                .map(|(&v, &e)| if e { None } else { Some(v) })
                .collect(),
            excluded: self
                .excluded
                .iter()
                .enumerate()
                .filter_map(|(i, &e)| e.then_some(i))
                .collect(),
        }
    }

    pub fn constant(space: Arc<FiniteSpace>, c: f64) -> Result<Self> {
        let n = space.len();
        Utility::new(space, vec![c; n])
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    /// Values with `-inf` at excluded positions.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_excluded(&self, i: usize) -> bool {
        self.excluded[i]
    }

    pub fn excluded(&self) -> &[bool] {
        &self.excluded
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn negated(&self) -> Utility {
        Utility {
            space: self.space.clone(),
            values: self
                .values
                .iter()
                .zip(&self.excluded)
                .map(|(&v, &e)| if e { f64::NEG_INFINITY } else { -v })
                .collect(),
            excluded: self.excluded.clone(),
        }
    }

    pub fn scaled(&self, beta: f64) -> Utility {
        Utility {
            space: self.space.clone(),
            values: self
                .values
                .iter()
                .zip(&self.excluded)
                .map(|(&v, &e)| if e { f64::NEG_INFINITY } else { beta * v })
                .collect(),
            excluded: self.excluded.clone(),
        }
    }

    /// Iterator over `(index, value)` of admissible entries.
    pub fn admissible(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .zip(&self.excluded)
            .enumerate()
            .filter_map(|(i, (&v, &e))| (!e).then_some((i, v)))
    }
}

/// `<x, y>`. Returns `-inf` when `y` charges an excluded coordinate;
/// `0 * (-inf)` counts as zero.
pub fn pair(x: &Utility, y: &Measure) -> Result<f64> {
    check_same(x.space(), y.space())?;
    let mut s = 0.0;
    for ((&v, &e), &w) in x.values.iter().zip(&x.excluded).zip(y.weights()) {
        if e {
            if w > 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
        } else {
            s += v * w;
        }
    }
    Ok(s)
}

pub fn normalize(y: &Measure) -> Result<ProbMeasure> {
    let mass = y.total_mass();
    if !(mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    let w = y.weights().iter().map(|v| v / mass).collect();
    Ok(ProbMeasure(Measure::with_weights_unchecked(
        y.space().clone(),
        w,
    )))
}

/// Indices with weight strictly above `eps`, ascending.
pub fn support(y: &Measure, eps: f64) -> Vec<usize> {
    y.weights()
        .iter()
        .enumerate()
        .filter_map(|(i, &w)| (w > eps).then_some(i))
        .collect()
}

//! Joint measures on `A x B`, Markov kernels `P(a | b)`, Shannon mutual
//! information, deterministic kernels and Gibbs kernels.
//!
//! A [`Kernel`] stores one probability row over `A` per input `b`. Joint
//! measures use the flat layout of [`JointSpace`]. All information is in
//! nats.

mod channel;
mod free_energy;

pub use channel::{
    blahut_arimoto, channel_lambda_bar, channel_optimize, channel_optimize_with, ChannelConfig,
    ChannelSolution, ChannelTarget,
};
pub use free_energy::{free_energy, FreeEnergy, GridSpec};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::gibbs;
use crate::measure::{
    FiniteSpace, JointSpace, Measure, ProbMeasure, Utility, NORMALIZATION_TOL, RENORMALIZE_TOL,
};

/// Row-stochastic matrix: `rows[b][a] = P(a | b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    space: JointSpace,
    rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelRepr {
    pub rows: Vec<Vec<f64>>,
}

impl Serialize for Kernel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        KernelRepr {
            rows: self.rows.clone(),
        }
        .serialize(s)
    }
}

impl Kernel {
    /// Rows whose sum is within `1e-9` of one are renormalized; others are
    /// rejected.
    pub fn new(space: JointSpace, mut rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != space.len_b() {
            return Err(Error::DimensionMismatch {
                expected: space.len_b(),
                got: rows.len(),
            });
        }
        for row in rows.iter_mut() {
            if row.len() != space.len_a() {
                return Err(Error::DimensionMismatch {
                    expected: space.len_a(),
                    got: row.len(),
                });
            }
            for (i, &v) in row.iter().enumerate() {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::InvalidWeight { index: i, value: v });
                }
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > RENORMALIZE_TOL {
                return Err(Error::NotNormalized(s));
            }
            if (s - 1.0).abs() > NORMALIZATION_TOL {
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
        Ok(Kernel { space, rows })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let b = rows.len();
        let a = rows.first().map_or(0, Vec::len);
        Kernel::new(JointSpace::with_sizes(a, b)?, rows)
    }

    pub(crate) fn from_rows_unchecked(space: JointSpace, rows: Vec<Vec<f64>>) -> Self {
        Kernel { space, rows }
    }

    /// Output space `A` first, input space `B` second.
    pub fn space(&self) -> &JointSpace {
        &self.space
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, b: usize) -> &[f64] {
        &self.rows[b]
    }

    pub fn len_a(&self) -> usize {
        self.space.len_a()
    }

    pub fn len_b(&self) -> usize {
        self.space.len_b()
    }

    /// Output distribution `P(a) = sum_b P(a | b) P(b)`.
    pub fn push_forward(&self, input: &ProbMeasure) -> Result<Vec<f64>> {
        check_len(input.len(), self.len_b())?;
        let mut out = vec![0.0; self.len_a()];
        for (row, &pb) in self.rows.iter().zip(input.weights()) {
            for (o, &k) in out.iter_mut().zip(row) {
                *o += k * pb;
            }
        }
        Ok(out)
    }
}

fn check_len(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Probability measure on `A x B` with its two marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct JointMeasure {
    space: JointSpace,
    joint: ProbMeasure,
    marginal_a: Vec<f64>,
    marginal_b: Vec<f64>,
}

impl JointMeasure {
    /// Weights in the flat layout `k = a * |B| + b`.
    pub fn new(space: JointSpace, weights: Vec<f64>) -> Result<Self> {
        check_len(weights.len(), space.len())?;
        let flat = Arc::new(space.as_space());
        let joint = ProbMeasure::new(Measure::new(flat, weights)?)?;
        Ok(Self::with_joint(space, joint))
    }

    /// From a matrix `m[a][b]`.
    pub fn from_matrix(m: Vec<Vec<f64>>) -> Result<Self> {
        let a = m.len();
        let b = m.first().map_or(0, Vec::len);
        let space = JointSpace::with_sizes(a, b)?;
        let mut w = Vec::with_capacity(a * b);
        for row in m {
            check_len(row.len(), b)?;
            w.extend(row);
        }
        JointMeasure::new(space, w)
    }

    fn with_joint(space: JointSpace, joint: ProbMeasure) -> Self {
        let mut marginal_a = vec![0.0; space.len_a()];
        let mut marginal_b = vec![0.0; space.len_b()];
        for (k, &w) in joint.weights().iter().enumerate() {
            let (a, b) = space.unflat(k);
            marginal_a[a] += w;
            marginal_b[b] += w;
        }
        JointMeasure {
            space,
            joint,
            marginal_a,
            marginal_b,
        }
    }

    pub fn space(&self) -> &JointSpace {
        &self.space
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.joint.weights()[self.space.flat(a, b)]
    }

    pub fn weights(&self) -> &[f64] {
        self.joint.weights()
    }

    pub fn as_prob(&self) -> &ProbMeasure {
        &self.joint
    }

    pub fn marginal_a(&self) -> &[f64] {
        &self.marginal_a
    }

    pub fn marginal_b(&self) -> &[f64] {
        &self.marginal_b
    }

    /// The same measure on `B x A`.
    pub fn transpose(&self) -> JointMeasure {
        let t = self.space.transpose();
        let mut w = vec![0.0; t.len()];
        for a in 0..self.space.len_a() {
            for b in 0..self.space.len_b() {
                w[t.flat(b, a)] = self.get(a, b);
            }
        }
        let joint = ProbMeasure::new(Measure::with_weights_unchecked(Arc::new(t.as_space()), w))
            .expect("transpose preserves mass");
        JointMeasure::with_joint(t, joint)
    }

    /// `P(A) x P(B)` on the same flat space.
    pub fn product_of_marginals(&self) -> Measure {
        let mut w = vec![0.0; self.space.len()];
        for (a, &pa) in self.marginal_a.iter().enumerate() {
            for (b, &pb) in self.marginal_b.iter().enumerate() {
                w[self.space.flat(a, b)] = pa * pb;
            }
        }
        Measure::with_weights_unchecked(self.joint.space().clone(), w)
    }
}

/// Total map `f: B -> A` stored as `images[b] = f(b)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiniteMap {
    images: Vec<usize>,
    a_len: usize,
}

impl FiniteMap {
    pub fn new(images: Vec<usize>, a_len: usize) -> Result<Self> {
        if images.is_empty() || a_len == 0 {
            return Err(Error::EmptySpace);
        }
        if let Some(&bad) = images.iter().find(|&&a| a >= a_len) {
            return Err(Error::InvalidArgument(format!(
                "image {bad} out of range for |A| = {a_len}"
            )));
        }
        Ok(FiniteMap { images, a_len })
    }

    pub fn identity(n: usize) -> Result<Self> {
        FiniteMap::new((0..n).collect(), n)
    }

    pub fn constant(b_len: usize, a_len: usize, at: usize) -> Result<Self> {
        FiniteMap::new(vec![at; b_len], a_len)
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn apply(&self, b: usize) -> usize {
        self.images[b]
    }

    pub fn len_a(&self) -> usize {
        self.a_len
    }

    pub fn len_b(&self) -> usize {
        self.images.len()
    }

    /// `|f^{-1}(a)|` for every `a`.
    pub fn fiber_sizes(&self) -> Vec<usize> {
        let mut c = vec![0; self.a_len];
        for &a in &self.images {
            c[a] += 1;
        }
        c
    }

    /// `|f(B)|`.
    pub fn image_size(&self) -> usize {
        self.fiber_sizes().iter().filter(|&&c| c > 0).count()
    }

    pub fn is_injective(&self) -> bool {
        self.image_size() == self.len_b()
    }

    pub fn is_bijective(&self) -> bool {
        self.is_injective() && self.len_b() == self.a_len
    }
}

/// Utility `x(a, b)` on `A x B`, stored over the flat layout.
#[derive(Clone, Debug, PartialEq)]
pub struct JointUtility {
    space: JointSpace,
    utility: Utility,
}

impl JointUtility {
    pub fn new(space: JointSpace, utility: Utility) -> Result<Self> {
        check_len(utility.len(), space.len())?;
        let ju = JointUtility { space, utility };
        for b in 0..ju.len_b() {
            if (0..ju.len_a()).all(|a| ju.is_excluded(a, b)) {
                return Err(Error::EmptyRow(b));
            }
        }
        Ok(ju)
    }

    /// From rows `m[b][a] = x(a, b)` (one row per input, like kernel rows);
    /// `None` marks an excluded pair.
    pub fn from_rows(m: &[Vec<Option<f64>>]) -> Result<Self> {
        let b_len = m.len();
        let a_len = m.first().map_or(0, Vec::len);
        let space = JointSpace::with_sizes(a_len, b_len)?;
        let mut values = vec![0.0; space.len()];
        let mut excluded = vec![false; space.len()];
        for (b, row) in m.iter().enumerate() {
            check_len(row.len(), a_len)?;
            for (a, v) in row.iter().enumerate() {
                let k = space.flat(a, b);
                match v {
                    Some(v) => values[k] = *v,
                    None => excluded[k] = true,
                }
            }
        }
        let flat = Arc::new(space.as_space());
        JointUtility::new(space, Utility::with_excluded(flat, values, excluded)?)
    }

    /// Fully admissible utility from `f(a, b)`.
    pub fn from_fn(a_len: usize, b_len: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let rows: Vec<Vec<Option<f64>>> = (0..b_len)
            .map(|b| (0..a_len).map(|a| Some(f(a, b))).collect())
            .collect();
        JointUtility::from_rows(&rows)
    }

    pub fn space(&self) -> &JointSpace {
        &self.space
    }

    pub fn utility(&self) -> &Utility {
        &self.utility
    }

    pub fn len_a(&self) -> usize {
        self.space.len_a()
    }

    pub fn len_b(&self) -> usize {
        self.space.len_b()
    }

    /// `-inf` when excluded.
    pub fn value(&self, a: usize, b: usize) -> f64 {
        self.utility.values()[self.space.flat(a, b)]
    }

    pub fn is_excluded(&self, a: usize, b: usize) -> bool {
        self.utility.is_excluded(self.space.flat(a, b))
    }

    /// `x(., b)` as a utility over `A`.
    pub fn row(&self, b: usize) -> Utility {
        let values = (0..self.len_a()).map(|a| self.value(a, b)).collect();
        let excluded = (0..self.len_a()).map(|a| self.is_excluded(a, b)).collect();
        Utility::with_excluded(self.space.space_a().clone(), values, excluded)
            .expect("rows are checked at construction")
    }

    /// `max_a x(a, b)`.
    pub fn row_max(&self, b: usize) -> f64 {
        (0..self.len_a())
            .filter(|&a| !self.is_excluded(a, b))
            .map(|a| self.value(a, b))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `E{x} = sum_b P(b) sum_a P(a | b) x(a, b)`; `-inf` if the kernel
    /// charges an excluded pair with positive input mass.
    pub fn expected(&self, input: &ProbMeasure, k: &Kernel) -> Result<f64> {
        check_len(input.len(), self.len_b())?;
        check_len(k.len_b(), self.len_b())?;
        check_len(k.len_a(), self.len_a())?;
        let mut e = 0.0;
        for (b, &pb) in input.weights().iter().enumerate() {
            if pb == 0.0 {
                continue;
            }
            for (a, &w) in k.row(b).iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                if self.is_excluded(a, b) {
                    return Ok(f64::NEG_INFINITY);
                }
                e += pb * w * self.value(a, b);
            }
        }
        Ok(e)
    }
}

/// `P(a, b) = P(a | b) P(b)`.
pub fn joint_from_kernel(input: &ProbMeasure, k: &Kernel) -> Result<JointMeasure> {
    check_len(input.len(), k.len_b())?;
    let space = k.space().clone();
    let mut w = vec![0.0; space.len()];
    for (b, &pb) in input.weights().iter().enumerate() {
        for (a, &kab) in k.row(b).iter().enumerate() {
            w[space.flat(a, b)] = kab * pb;
        }
    }
    let flat = Arc::new(space.as_space());
    let joint = ProbMeasure::new(Measure::with_weights_unchecked(flat, w))?;
    Ok(JointMeasure::with_joint(space, joint))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `P(a | b)`, rows indexed by `b`.
    AGivenB,
    /// `P(b | a)`, rows indexed by `a`; the kernel lives on `B x A`.
    BGivenA,
}

/// Conditional kernel of a joint measure by the Bayes formula.
pub fn bayes_kernel(j: &JointMeasure, direction: Direction) -> Result<Kernel> {
    let j = match direction {
        Direction::AGivenB => j.clone(),
        Direction::BGivenA => j.transpose(),
    };
    let mut rows = Vec::with_capacity(j.space().len_b());
    for (b, &pb) in j.marginal_b().iter().enumerate() {
        if pb <= 0.0 {
            return Err(Error::ZeroConditioning(b));
        }
        rows.push((0..j.space().len_a()).map(|a| j.get(a, b) / pb).collect());
    }
    Kernel::new(j.space().clone(), rows)
}

/// `sum P(a,b) ln[P(a,b) / (P(a) P(b))]` in nats.
pub fn mutual_information(j: &JointMeasure) -> f64 {
    let mut s = 0.0;
    for (a, &pa) in j.marginal_a().iter().enumerate() {
        for (b, &pb) in j.marginal_b().iter().enumerate() {
            let p = j.get(a, b);
            if p > 0.0 {
                s += p * (p / (pa * pb)).ln();
            }
        }
    }
    s.max(0.0)
}

/// Shannon entropy in nats with `0 ln 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.ln())
        .sum::<f64>()
}

/// Row `b` is the Dirac measure at `f(b)`.
pub fn deterministic_kernel(f: &FiniteMap) -> Kernel {
    let rows = f
        .images()
        .iter()
        .map(|&a| {
            let mut r = vec![0.0; f.len_a()];
            r[a] = 1.0;
            r
        })
        .collect();
    let space = JointSpace::with_sizes(f.len_a(), f.len_b()).expect("map spaces are nonempty");
    Kernel::from_rows_unchecked(space, rows)
}

/// The map recovered from a kernel whose every row has an entry `>= 1 - tol`.
pub fn is_deterministic(k: &Kernel, tol: f64) -> Option<FiniteMap> {
    let images: Option<Vec<usize>> = k
        .rows()
        .iter()
        .map(|row| row.iter().position(|&v| v >= 1.0 - tol))
        .collect();
    FiniteMap::new(images?, k.len_a()).ok()
}

/// True iff the kernel is deterministic with a bijective map.
pub fn kernel_invertible(k: &Kernel) -> bool {
    is_deterministic(k, 0.0).is_some_and(|f| f.is_bijective())
}

/// `|f(B)| / |B|`.
pub fn injectivity_index(f: &FiniteMap) -> f64 {
    f.image_size() as f64 / f.len_b() as f64
}

/// `P(b) = 1 / (|f(B)| |f^{-1}(f(b))|)`, whose push-forward is uniform on `f(B)`.
pub fn maximizing_input(f: &FiniteMap) -> ProbMeasure {
    let fibers = f.fiber_sizes();
    let m = f.image_size() as f64;
    let w = f
        .images()
        .iter()
        .map(|&a| 1.0 / (m * fibers[a] as f64))
        .collect();
    let space = Arc::new(FiniteSpace::with_size(f.len_b()).expect("map domain is nonempty"));
    ProbMeasure::new(Measure::with_weights_unchecked(space, w)).expect("fibers partition B")
}

/// `(I_S, ln |f(B)|)` for the deterministic kernel of `f` under `input`.
pub fn deterministic_mi_bound(f: &FiniteMap, input: &ProbMeasure) -> Result<(f64, f64)> {
    let j = joint_from_kernel(input, &deterministic_kernel(f))?;
    let mi = mutual_information(&j);
    let bound = (f.image_size() as f64).ln();
    if mi > bound + 1e-12 {
        return Err(Error::Numerical(format!(
            "deterministic information {mi} exceeds ln|f(B)| = {bound}"
        )));
    }
    Ok((mi, bound))
}

/// Row-wise Gibbs tilt `P(a | b) ~ e^{beta x(a, b)}` with respect to the
/// uniform measure on `A`. `beta = +inf` spreads each row uniformly over
/// its argmax set.
pub fn gibbs_kernel(x: &JointUtility, beta: f64) -> Result<Kernel> {
    let uniform = ProbMeasure::uniform(x.space().space_a().clone());
    let rows = (0..x.len_b())
        .map(|b| {
            Ok(gibbs(&x.row(b), &uniform, beta)?
                .into_measure()
                .into_weights())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Kernel::from_rows_unchecked(x.space().clone(), rows))
}

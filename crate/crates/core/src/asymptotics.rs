//! Truncated numerical versions of infinite and continuous examples: a
//! Gaussian exponential kernel, quantization loss of a Cauchy source,
//! a convergent series, and a zeta-distributed source.
//!
//! Divergence is never read off a single large value. Each quantity is
//! evaluated at increasing truncations and classified by
//! [`series_verdict`](crate::solver::series_verdict).

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{series_verdict, SeriesVerdict};

/// Largest accepted deficit of quadrature mass.
pub const MASS_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncationSweep {
    pub truncations: Vec<f64>,
    pub values: Vec<f64>,
    pub verdict: SeriesVerdict,
}

impl TruncationSweep {
    fn new(truncations: Vec<f64>, values: Vec<f64>) -> Self {
        let verdict = series_verdict(&values);
        TruncationSweep {
            truncations,
            values,
            verdict,
        }
    }

    /// `|value(last)| / |value(first)|`.
    pub fn magnitude_ratio(&self) -> f64 {
        self.values.last().unwrap().abs() / self.values[0].abs()
    }
}

/// `E{-(a - b)^2 / 2 | b}` under the Gaussian kernel
/// `p(a | b) ~ e^{-beta (a - b)^2 / 2}`, by midpoint quadrature on a fixed
/// grid over `[-extent, extent]`.
pub fn gaussian_conditional_utility(beta: f64, extent: f64, points: usize, b: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(
            "beta must be positive and finite".into(),
        ));
    }
    if !(extent >= 8.0 / beta.sqrt()) || points < 2 {
        return Err(Error::InvalidArgument(format!(
            "extent must be at least 8 beta^-1/2 = {} and points at least 2",
            8.0 / beta.sqrt()
        )));
    }
    let h = 2.0 * extent / points as f64;
    let norm = (beta / (2.0 * PI)).sqrt();
    let (mut mass, mut value) = (0.0, 0.0);
    for i in 0..points {
        let a = -extent + (i as f64 + 0.5) * h;
        let d = a - b;
        let p = norm * (-0.5 * beta * d * d).exp() * h;
        mass += p;
        value -= 0.5 * d * d * p;
    }
    if (1.0 - mass).abs() > MASS_TOL {
        return Err(Error::InsufficientExtent((1.0 - mass).abs()));
    }
    Ok(value)
}

/// Inverse temperature of the Gaussian kernel at information `lambda`:
/// `beta = 2 pi e^{1 - 2 (H_b - lambda)}`.
pub fn beta_from_info_gaussian(h_b: f64, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument("lambda must be nonnegative".into()));
    }
    Ok(2.0 * PI * (1.0 - 2.0 * (h_b - lambda)).exp())
}

/// Information `beta psi0' - psi0 + H_b` with the Gaussian closed forms
/// `psi0 = ln sqrt(2 pi / beta)` and `psi0' = -1 / (2 beta)`.
pub fn gaussian_info(beta: f64, h_b: f64) -> f64 {
    let psi0 = 0.5 * (2.0 * PI / beta).ln();
    let dpsi0 = -0.5 / beta;
    beta * dpsi0 - psi0 + h_b
}

/// Differential entropy of the standard Cauchy law, `ln 4 pi`.
pub fn cauchy_entropy() -> f64 {
    (4.0 * PI).ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Source {
    Cauchy,
    Gaussian { sigma: f64 },
}

impl Source {
    fn density(&self, b: f64) -> f64 {
        match *self {
            Source::Cauchy => 1.0 / (PI * (1.0 + b * b)),
            Source::Gaussian { sigma } => {
                let z = b / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representatives {
    /// One value per cell.
    Fixed(Vec<f64>),
    /// The conditional mean of the source on each (truncated) cell.
    ConditionalMean,
}

/// Cells `(-T, c_1], (c_1, c_2], ..., (c_k, T)` for interior cuts `c_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub cuts: Vec<f64>,
    pub representatives: Representatives,
}

impl Partition {
    pub fn single(representative: f64) -> Self {
        Partition {
            cuts: vec![],
            representatives: Representatives::Fixed(vec![representative]),
        }
    }

    pub fn cells(&self) -> usize {
        self.cuts.len() + 1
    }

    fn check(&self) -> Result<()> {
        if let Representatives::Fixed(r) = &self.representatives {
            if r.is_empty() {
                return Err(Error::InvalidArgument("empty partition".into()));
            }
            if r.len() != self.cells() {
                return Err(Error::DimensionMismatch {
                    expected: self.cells(),
                    got: r.len(),
                });
            }
        }
        if let Some(i) = self.cuts.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid(i + 1));
        }
        if self.cuts.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("cuts must be finite".into()));
        }
        Ok(())
    }
}

/// Midpoint points per decade segment.
pub const POINTS_PER_DECADE: usize = 100_000;

/// Zeroth, first and second moments of the source on each cell of
/// `partition` intersected with `[-t, t]`.
fn cell_moments(partition: &Partition, source: Source, t: f64) -> Vec<[f64; 3]> {
    let mut breaks = vec![-t, 0.0, t];
    let mut p = 1.0;
    while p < t {
        breaks.push(p);
        breaks.push(-p);
        p *= 10.0;
    }
    breaks.extend(partition.cuts.iter().copied().filter(|c| c.abs() < t));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut moments = vec![[0.0; 3]; partition.cells()];
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = 0.5 * (lo + hi);
        let cell = partition.cuts.partition_point(|&c| c < mid);
        let h = (hi - lo) / POINTS_PER_DECADE as f64;
        let mut m = [0.0; 3];
        for i in 0..POINTS_PER_DECADE {
            let b = lo + (i as f64 + 0.5) * h;
            let d = source.density(b) * h;
            m[0] += d;
            m[1] += b * d;
            m[2] += b * b * d;
        }
        for k in 0..3 {
            moments[cell][k] += m[k];
        }
    }
    moments
}

/// `-1/2 sum_i int_{cell_i} (a_i - b)^2 dP(b)` over `[-T, T]` for every
/// truncation `T`.
pub fn cauchy_truncated_loss(
    partition: &Partition,
    source: Source,
    truncations: &[f64],
) -> Result<TruncationSweep> {
    partition.check()?;
    if truncations.is_empty() || truncations.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidArgument(
            "truncations must be positive and finite".into(),
        ));
    }
    if let Some(i) = truncations.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid(i + 1));
    }
    let values = truncations
        .par_iter()
        .map(|&t| {
            let moments = cell_moments(partition, source, t);
            moments
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let a = match &partition.representatives {
                        Representatives::Fixed(r) => r[i],
                        Representatives::ConditionalMean if m[0] > 0.0 => m[1] / m[0],
                        Representatives::ConditionalMean => 0.0,
                    };
                    -0.5 * (a * a * m[0] - 2.0 * a * m[1] + m[2])
                })
                .sum()
        })
        .collect();
    Ok(TruncationSweep::new(truncations.to_vec(), values))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesExample {
    pub beta: f64,
    pub n: u64,
    pub partial: f64,
    pub closed_form: f64,
}

/// `sum_{n=1}^N (-n) e^{-beta n}` and its limit `-e^beta / (e^beta - 1)^2`.
pub fn series_example(beta: f64, n: u64) -> Result<SeriesExample> {
    if !(beta > 0.0 && beta.is_finite()) || n == 0 {
        return Err(Error::InvalidArgument("need beta > 0 and N >= 1".into()));
    }
    let partial = (1..=n)
        .map(|k| -(k as f64) * (-beta * k as f64).exp())
        .sum();
    let eb = beta.exp();
    Ok(SeriesExample {
        beta,
        n,
        partial,
        closed_form: -eb / ((eb - 1.0) * (eb - 1.0)),
    })
}

/// Riemann zeta for `s > 1`: partial sum plus an Euler-Maclaurin tail.
pub fn zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta needs s > 1");
    let k = 1000.0f64;
    let head: f64 = (1..1000).map(|n| (n as f64).powf(-s)).sum();
    head + k.powf(1.0 - s) / (s - 1.0) + 0.5 * k.powf(-s) + s / 12.0 * k.powf(-s - 1.0)
        - s * (s + 1.0) * (s + 2.0) / 720.0 * k.powf(-s - 3.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZetaLoss {
    pub m: u32,
    pub sweep: TruncationSweep,
    /// `ln |f({1..N})|` per truncation: the information a maximizing input
    /// extracts through `f`.
    pub image_info: Vec<f64>,
}

/// Expected utility `-sum_{b <= N} |f(b) - b|^m P(b)` of the deterministic
/// kernel `f` under `P(b) = 1 / (b^{m+1} zeta(m+1))` on `b = 1, 2, ...`.
pub fn zeta_tail_loss<F>(m: u32, truncations: &[u64], f: F) -> Result<ZetaLoss>
where
    F: Fn(u64) -> u64,
{
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    if truncations.is_empty() || truncations[0] == 0 {
        return Err(Error::InvalidArgument(
            "truncations must be positive".into(),
        ));
    }
    if let Some(i) = truncations.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(i + 1));
    }
    let z = zeta(m as f64 + 1.0);
    let mut values = Vec::with_capacity(truncations.len());
    let mut image_info = Vec::with_capacity(truncations.len());
    let mut image = std::collections::HashSet::new();
    let (mut acc, mut b) = (0.0, 1u64);
    for &t in truncations {
        while b <= t {
            let a = f(b);
            image.insert(a);
            let d = (a as f64 - b as f64).abs();
            acc -= d.powi(m as i32) / ((b as f64).powi(m as i32 + 1) * z);
            b += 1;
        }
        values.push(acc);
        image_info.push((image.len() as f64).ln());
    }
    Ok(ZetaLoss {
        m,
        sweep: TruncationSweep::new(truncations.iter().map(|&t| t as f64).collect(), values),
        image_info,
    })
}

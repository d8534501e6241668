//! Log-partition of a translation-invariant exponential kernel on a
//! truncated one-dimensional grid.
//!
//! With `x(a, b) = u(a - b)` the normalizer `psi0(beta) = ln int e^{beta u(d)} dd`
//! does not depend on `b`; its derivative is the expected utility and
//! `I = beta psi0' - psi0 + H(b)` is the mutual information.

use serde::Serialize;

use crate::error::{Error, Result};

/// Uniform midpoint grid on `[-extent, extent]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub extent: f64,
    pub points: usize,
}

impl GridSpec {
    /// `+-10 beta^{-1/2}` with `10^4` points.
    pub fn default_for(beta: f64) -> Self {
        GridSpec {
            extent: 10.0 / beta.sqrt(),
            points: 10_000,
        }
    }

    pub fn step(&self) -> f64 {
        2.0 * self.extent / self.points as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.step();
        (0..self.points).map(move |i| -self.extent + (i as f64 + 0.5) * h)
    }

    fn check(&self) -> Result<()> {
        if !(self.extent > 0.0 && self.extent.is_finite()) || self.points < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs a positive finite extent and at least 2 points, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FreeEnergy {
    pub psi0: f64,
    /// `d psi0 / d beta`, the expected utility.
    pub dpsi0: f64,
    /// Mutual information for the caller-supplied input entropy.
    pub info: f64,
}

fn log_partition<U: Fn(f64) -> f64>(u: &U, beta: f64, grid: &GridSpec) -> Result<f64> {
    let e: Vec<f64> = grid.nodes().map(|d| beta * u(d)).collect();
    if e.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::Divergent);
    }
    let m = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return Err(Error::Divergent);
    }
    let s: f64 = e.iter().map(|v| (v - m).exp()).sum();
    Ok(m + (s * grid.step()).ln())
}

/// `psi0`, its derivative by central difference with step `1e-5 beta`, and
/// the information `beta psi0' - psi0 + h_b`.
pub fn free_energy<U>(u: U, beta: f64, grid: GridSpec, h_b: f64) -> Result<FreeEnergy>
where
    U: Fn(f64) -> f64,
{
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(
            "beta must be positive and finite".into(),
        ));
    }
    grid.check()?;
    let psi0 = log_partition(&u, beta, &grid)?;
    let h = 1e-5 * beta;
    let dpsi0 =
        (log_partition(&u, beta + h, &grid)? - log_partition(&u, beta - h, &grid)?) / (2.0 * h);
    Ok(FreeEnergy {
        psi0,
        dpsi0,
        info: beta * dpsi0 - psi0 + h_b,
    })
}

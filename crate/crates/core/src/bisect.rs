//! Bracketing bisection for nondecreasing functions of an inverse
//! temperature `beta >= 0`.

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BisectConfig {
    /// Stop once `|g(beta)| <= tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Upper end of the bracket expansion.
    pub beta_max: f64,
}

impl Default for BisectConfig {
    fn default() -> Self {
        BisectConfig {
            tol: 1e-10,
            max_iter: 200,
            beta_max: 1e6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bisection {
    Root {
        beta: f64,
        residual: f64,
        iterations: usize,
    },
    /// `g(beta_max) < 0`: the root lies beyond the cap.
    Capped { beta: f64, residual: f64 },
}

/// Finds `beta` in `[0, beta_max]` with `g(beta) ~ 0`, assuming `g` is
/// nondecreasing and `g(0) <= 0`.
///
/// The bracket starts at `[0, 1]` and doubles its upper end until `g`
/// changes sign.
pub fn bisect_increasing<G>(mut g: G, cfg: &BisectConfig) -> Result<Bisection>
where
    G: FnMut(f64) -> Result<f64>,
{
    let mut lo = 0.0;
    let mut hi = 1.0f64.min(cfg.beta_max);
    let mut g_hi = g(hi)?;
    while g_hi < -cfg.tol {
        if hi >= cfg.beta_max {
            return Ok(Bisection::Capped {
                beta: hi,
                residual: g_hi,
            });
        }
        lo = hi;
        hi = (2.0 * hi).min(cfg.beta_max);
        g_hi = g(hi)?;
    }
    if g_hi.abs() <= cfg.tol {
        return Ok(Bisection::Root {
            beta: hi,
            residual: g_hi,
            iterations: 0,
        });
    }
    let mut best = (hi, g_hi);
    for it in 1..=cfg.max_iter {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid)?;
        if gm.abs() < best.1.abs() {
            best = (mid, gm);
        }
        if gm.abs() <= cfg.tol {
            return Ok(Bisection::Root {
                beta: mid,
                residual: gm,
                iterations: it,
            });
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            return Ok(Bisection::Root {
                beta: best.0,
                residual: best.1,
                iterations: it,
            });
        }
    }
    Ok(Bisection::Root {
        beta: best.0,
        residual: best.1,
        iterations: cfg.max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_root_beyond_initial_bracket() {
        let r = bisect_increasing(|b| Ok(b.ln_1p() - 3.0), &BisectConfig::default()).unwrap();
        match r {
            Bisection::Root { beta, residual, .. } => {
                assert!(residual.abs() <= 1e-10);
                assert!((beta - (3f64.exp() - 1.0)).abs() < 1e-8);
            }
            _ => panic!("expected root"),
        }
    }

    #[test]
    fn reports_cap_when_not_bracketable() {
        let r = bisect_increasing(|b| Ok(-1.0 / (1.0 + b)), &BisectConfig::default()).unwrap();
        assert!(matches!(r, Bisection::Capped { beta, .. } if beta == 1e6));
    }
}

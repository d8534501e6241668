//! Experiments on the structure of optimal solutions: support stability of
//! Gibbs families, and strict sub-optimality of deterministic kernels under
//! an information budget.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{FunctionalKind, InfoFunctional};
use crate::kernels::{
    channel_lambda_bar, channel_optimize, deterministic_kernel, is_deterministic,
    joint_from_kernel, mutual_information, ChannelSolution, ChannelTarget, FiniteMap, JointUtility,
};
use crate::measure::{support, ProbMeasure, Utility};
use crate::solver::{solution_at_beta, solve_tv};

/// Default cap on `|A|^|B|` for exhaustive enumeration.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportProfile {
    /// The sweep parameter: `beta` for Gibbs families, `lambda` for total variation.
    pub betas: Vec<f64>,
    pub supports: Vec<Vec<usize>>,
    pub common: Vec<usize>,
    pub stable: bool,
}

/// Supports of the optimal measures along a sweep.
///
/// For functionals with a strictly convex dual the grid holds inverse
/// temperatures. Total variation has no Gibbs family, so its grid holds
/// constraint levels `lambda` solved by the LP path.
pub fn support_profile(
    x: &Utility,
    f: &InfoFunctional,
    grid: &[f64],
    eps: f64,
) -> Result<SupportProfile> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty sweep grid".into()));
    }
    let supports = grid
        .iter()
        .map(|&t| {
            let m = if f.kind() == FunctionalKind::TotalVariation {
                let q = ProbMeasure::new(f.reference().clone())?;
                solve_tv(x, &q, t)?.solution.measure
            } else {
                solution_at_beta(x, f, t)?.measure
            };
            Ok(support(&m, eps))
        })
        .collect::<Result<Vec<_>>>()?;
    let common: Vec<usize> = supports[0]
        .iter()
        .copied()
        .filter(|i| supports.iter().all(|s| s.contains(i)))
        .collect();
    let stable = supports.iter().all(|s| *s == supports[0]);
    Ok(SupportProfile {
        betas: grid.to_vec(),
        supports,
        common,
        stable,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorollaryReport {
    pub pass: bool,
    /// Atoms never charged along the sweep.
    pub zero_set: Vec<usize>,
    /// Atoms of the zero set charged by the reference measure.
    pub witnesses: Vec<usize>,
    pub x_constant_on_zero_set: bool,
    /// Reference measure strictly positive.
    pub interior_hypothesis: bool,
}

/// Checks that optimal measures vanish only where the reference does, or,
/// failing that, only on a set where `x` is constant.
pub fn support_corollary_check(
    x: &Utility,
    f: &InfoFunctional,
    grid: &[f64],
    eps: f64,
) -> Result<CorollaryReport> {
    let profile = support_profile(x, f, grid, eps)?;
    let n = x.len();
    let zero_set: Vec<usize> = (0..n)
        .filter(|i| profile.supports.iter().all(|s| !s.contains(i)))
        .collect();
    let q = f.reference().weights();
    let witnesses: Vec<usize> = zero_set.iter().copied().filter(|&i| q[i] > 0.0).collect();
    let x_constant_on_zero_set = zero_set
        .windows(2)
        .all(|w| x.values()[w[0]] == x.values()[w[1]]);
    Ok(CorollaryReport {
        pass: witnesses.is_empty() || x_constant_on_zero_set,
        zero_set,
        witnesses,
        x_constant_on_zero_set,
        interior_hypothesis: q.iter().all(|&w| w > 0.0),
    })
}

/// All maps `B -> A` in lexicographic order of `(f(0), f(1), ...)`.
pub fn enumerate_deterministic(
    a_len: usize,
    b_len: usize,
    limit: u64,
) -> Result<impl Iterator<Item = FiniteMap>> {
    if a_len == 0 || b_len == 0 {
        return Err(Error::EmptySpace);
    }
    let count = (a_len as f64).powi(b_len as i32);
    if count > limit as f64 {
        return Err(Error::EnumerationLimit { count, limit });
    }
    let total = count as u64;
    Ok((0..total).map(move |mut k| {
        let mut images = vec![0; b_len];
        for slot in images.iter_mut().rev() {
            *slot = (k % a_len as u64) as usize;
            k /= a_len as u64;
        }
        FiniteMap::new(images, a_len).expect("digits are below |A|")
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeterministicCandidate {
    pub map: Vec<usize>,
    pub expected_utility: f64,
    pub mutual_info: f64,
}

fn evaluate_map(
    x: &JointUtility,
    input: &ProbMeasure,
    f: &FiniteMap,
) -> Result<DeterministicCandidate> {
    let k = deterministic_kernel(f);
    Ok(DeterministicCandidate {
        map: f.images().to_vec(),
        expected_utility: x.expected(input, &k)?,
        mutual_info: mutual_information(&joint_from_kernel(input, &k)?),
    })
}

fn all_candidates(x: &JointUtility, input: &ProbMeasure) -> Result<Vec<DeterministicCandidate>> {
    let maps: Vec<FiniteMap> =
        enumerate_deterministic(x.len_a(), x.len_b(), ENUMERATION_LIMIT)?.collect();
    maps.par_iter().map(|f| evaluate_map(x, input, f)).collect()
}

/// A deterministic kernel at the same value as some optimal channel.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualCheck {
    pub map: Vec<usize>,
    pub expected_utility: f64,
    pub deterministic_info: f64,
    pub channel_info: f64,
    pub strict: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationReport {
    pub lambda: f64,
    pub lambda_bar: f64,
    /// Best expected utility among deterministic kernels with `I_S <= lambda`.
    pub best_deterministic: Option<DeterministicCandidate>,
    /// True when the best candidate's information equals `lambda` within `1e-6`.
    pub info_matched: bool,
    pub channel: ChannelSolution,
    /// `channel E - best deterministic E`.
    pub gap: Option<f64>,
    pub dual_checks: Vec<DualCheck>,
    pub dual_violations: usize,
    /// `gap > 0` whenever `0 < lambda < lambda_bar` and a candidate exists.
    pub strict_separation: bool,
}

/// Compares the best deterministic kernel within budget `lambda` to the
/// optimal channel at the same budget.
pub fn separation_experiment(
    x: &JointUtility,
    input: &ProbMeasure,
    lambda: f64,
) -> Result<SeparationReport> {
    let candidates = all_candidates(x, input)?;
    let lambda_bar = channel_lambda_bar(x, input)?;
    let channel = channel_optimize(x, input, ChannelTarget::Lambda(lambda))?;

    let mut best: Option<&DeterministicCandidate> = None;
    for c in &candidates {
        if c.mutual_info <= lambda + 1e-12
            && best.is_none_or(|b| c.expected_utility > b.expected_utility)
        {
            best = Some(c);
        }
    }
    let gap = best.map(|b| channel.expected_utility - b.expected_utility);
    let interior = lambda > 0.0 && lambda < lambda_bar - 1e-12;
    let strict_separation = !interior || gap.is_none_or(|g| g > 0.0);

    let lo = channel_optimize(x, input, ChannelTarget::Beta(0.0))?.expected_utility;
    let hi = channel_optimize(x, input, ChannelTarget::Beta(f64::INFINITY))?.expected_utility;
    let dual_checks = candidates
        .par_iter()
        .filter(|c| c.expected_utility > lo + 1e-9 && c.expected_utility < hi - 1e-9)
        .map(|c| {
            let s = channel_optimize(x, input, ChannelTarget::Upsilon(c.expected_utility))?;
            Ok(DualCheck {
                map: c.map.clone(),
                expected_utility: c.expected_utility,
                deterministic_info: c.mutual_info,
                channel_info: s.mutual_info,
                strict: c.mutual_info > s.mutual_info,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let dual_violations = dual_checks.iter().filter(|d| !d.strict).count();

    Ok(SeparationReport {
        lambda,
        lambda_bar,
        info_matched: best.is_some_and(|b| (b.mutual_info - lambda).abs() <= 1e-6),
        best_deterministic: best.cloned(),
        channel,
        gap,
        dual_checks,
        dual_violations,
        strict_separation,
    })
}

/// One random instance of the randomized sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepInstance {
    pub utility_rows: Vec<Vec<f64>>,
    pub input: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub trials: usize,
    pub seed: u64,
    /// Deterministic kernels compared against a channel at their information.
    pub comparisons: usize,
    pub violations: usize,
    /// Channel solves that failed to converge; counted, never accepted.
    pub nonconverged: usize,
    /// Smallest `channel E - deterministic E` seen.
    pub min_margin: f64,
    /// Interior channel solutions that came out deterministic.
    pub deterministic_interior: usize,
    /// Saturated (`beta = inf`) solutions that were not deterministic.
    pub nondeterministic_saturated: usize,
}

/// Random instance with `|A|, |B|` in `{2, 3}`, utilities uniform on
/// `[0, 1)` and an input law bounded below by `0.05`.
pub fn random_instance<R: Rng>(rng: &mut R) -> SweepInstance {
    let a = rng.random_range(2..=3);
    let b = rng.random_range(2..=3);
    let utility_rows = (0..b)
        .map(|_| (0..a).map(|_| rng.random::<f64>()).collect())
        .collect();
    let e: Vec<f64> = (0..b).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    let floor = 0.05;
    let free = 1.0 - floor * b as f64;
    let input = e.iter().map(|v| floor + free * v / s).collect();
    SweepInstance {
        utility_rows,
        input,
    }
}

/// Compares every deterministic kernel with information strictly inside
/// `(0, lambda_bar)` against the optimal channel at that information, over
/// `trials` seeded random instances.
pub fn separation_sweep(trials: usize, seed: u64) -> Result<SweepReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let instances: Vec<SweepInstance> = (0..trials).map(|_| random_instance(&mut rng)).collect();
    let per: Vec<SweepReport> = instances
        .par_iter()
        .map(|inst| sweep_one(inst, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(per.into_iter().fold(
        SweepReport {
            trials,
            seed,
            comparisons: 0,
            violations: 0,
            nonconverged: 0,
            min_margin: f64::INFINITY,
            deterministic_interior: 0,
            nondeterministic_saturated: 0,
        },
        |mut acc, r| {
            acc.comparisons += r.comparisons;
            acc.violations += r.violations;
            acc.nonconverged += r.nonconverged;
            acc.min_margin = acc.min_margin.min(r.min_margin);
            acc.deterministic_interior += r.deterministic_interior;
            acc.nondeterministic_saturated += r.nondeterministic_saturated;
            acc
        },
    ))
}

fn sweep_one(inst: &SweepInstance, seed: u64) -> Result<SweepReport> {
    let rows: Vec<Vec<Option<f64>>> = inst
        .utility_rows
        .iter()
        .map(|r| r.iter().map(|&v| Some(v)).collect())
        .collect();
    let x = JointUtility::from_rows(&rows)?;
    let input = ProbMeasure::from_weights(inst.input.clone())?;
    let mut r = SweepReport {
        trials: 1,
        seed,
        comparisons: 0,
        violations: 0,
        nonconverged: 0,
        min_margin: f64::INFINITY,
        deterministic_interior: 0,
        nondeterministic_saturated: 0,
    };
    let top = channel_optimize(&x, &input, ChannelTarget::Beta(f64::INFINITY))?;
    if is_deterministic(&top.kernel, 0.0).is_none() {
        r.nondeterministic_saturated += 1;
    }
    let lambda_bar = top.mutual_info;
    for c in all_candidates(&x, &input)? {
        if !(c.mutual_info > 1e-9 && c.mutual_info < lambda_bar - 1e-9) {
            continue;
        }
        match channel_optimize(&x, &input, ChannelTarget::Lambda(c.mutual_info)) {
            Ok(s) => {
                r.comparisons += 1;
                let margin = s.expected_utility - c.expected_utility;
                r.min_margin = r.min_margin.min(margin);
                if !(margin > 1e-9) || (s.mutual_info - c.mutual_info).abs() > 1e-6 {
                    r.violations += 1;
                }
                if is_deterministic(&s.kernel, 0.0).is_some() {
                    r.deterministic_interior += 1;
                }
            }
            Err(Error::NoConvergence { .. }) => r.nonconverged += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::Mode;
    use crate::measure::Measure;

    fn binary() -> (JointUtility, ProbMeasure) {
        let x = JointUtility::from_fn(2, 2, |a, b| (a == b) as u8 as f64).unwrap();
        (x, ProbMeasure::from_weights(vec![0.5, 0.5]).unwrap())
    }

    #[test]
    fn enumeration_counts_and_order() {
        assert_eq!(
            enumerate_deterministic(2, 2, ENUMERATION_LIMIT)
                .unwrap()
                .count(),
            4
        );
        let maps: Vec<Vec<usize>> = enumerate_deterministic(3, 2, ENUMERATION_LIMIT)
            .unwrap()
            .map(|f| f.images().to_vec())
            .collect();
        assert_eq!(maps.len(), 9);
        assert_eq!(maps[0], vec![0, 0]);
        assert_eq!(maps[1], vec![0, 1]);
        assert_eq!(maps[8], vec![2, 2]);
        assert!(matches!(
            enumerate_deterministic(2, 20, ENUMERATION_LIMIT),
            Err(Error::EnumerationLimit { count, .. }) if count == 1048576.0
        ));
    }

    #[test]
    fn support_profiles() {
        let q = Measure::from_weights(vec![0.5, 0.5, 0.0]).unwrap();
        let f = InfoFunctional::extended_kl(q.clone(), Mode::Simplex).unwrap();
        let x = Utility::new(f.space().clone(), vec![0.3, 1.0, 5.0]).unwrap();
        let p = support_profile(&x, &f, &[0.1, 1.0, 10.0, 100.0], 0.0).unwrap();
        assert!(p.stable);
        assert_eq!(p.common, vec![0, 1]);
        let c = support_corollary_check(&x, &f, &[0.1, 1.0, 10.0, 100.0], 0.0).unwrap();
        assert!(c.pass && c.witnesses.is_empty() && !c.interior_hypothesis);
        assert_eq!(c.zero_set, vec![2]);

        let tv = InfoFunctional::total_variation(
            Measure::from_weights(vec![0.5, 0.3, 0.2]).unwrap(),
            Mode::Simplex,
        )
        .unwrap();
        let x = Utility::new(tv.space().clone(), vec![0.0, 1.0, 2.0]).unwrap();
        let p = support_profile(&x, &tv, &[0.2, 1.0, 1.6], 1e-12).unwrap();
        assert!(!p.stable);
        assert_eq!(p.supports[2], vec![2]);
    }

    #[test]
    fn binary_separation() {
        let (x, input) = binary();
        let hb = -(0.9f64 * 0.9f64.ln() + 0.1 * 0.1f64.ln());
        let r = separation_experiment(&x, &input, 2f64.ln() - hb).unwrap();
        let best = r.best_deterministic.as_ref().unwrap();
        assert_eq!(best.mutual_info, 0.0);
        assert_eq!(best.expected_utility, 0.5);
        assert_eq!(best.map, vec![0, 0]);
        assert!((r.channel.expected_utility - 0.9).abs() < 1e-6);
        assert!((r.gap.unwrap() - 0.4).abs() < 1e-6);
        assert!(r.strict_separation && r.dual_violations == 0);

        let r = separation_experiment(&x, &input, 2f64.ln()).unwrap();
        assert!(r.gap.unwrap().abs() <= 1e-9);
        assert_eq!(r.best_deterministic.unwrap().map, vec![0, 1]);

        let r = separation_experiment(&x, &input, 1e-9).unwrap();
        assert!(r.gap.unwrap() > 0.0 && r.gap.unwrap() < 1e-3);
    }

    #[test]
    fn small_sweep_is_clean_and_reproducible() {
        let a = separation_sweep(5, 7).unwrap();
        let b = separation_sweep(5, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.violations, 0);
        assert_eq!(a.nonconverged, 0);
        assert_eq!(a.deterministic_interior, 0);
        assert!(a.comparisons > 0);
    }
}

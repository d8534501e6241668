//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any failed.

mod common;

use std::f64::consts::{E, LN_2, PI};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use infokernel::asymptotics::{
    beta_from_info_gaussian, cauchy_entropy, cauchy_truncated_loss, gaussian_conditional_utility,
    gaussian_info, series_example, Partition, Representatives, Source,
};
use infokernel::kernels::{
    blahut_arimoto, channel_optimize, deterministic_kernel, free_energy, joint_from_kernel,
    maximizing_input, mutual_information, ChannelConfig, ChannelTarget, FiniteMap, GridSpec,
    JointUtility,
};
use infokernel::separation::{separation_experiment, separation_sweep, support_profile};
use infokernel::solver::{check_f_bounded, classify_f_bounded, solution_at_beta, SeriesVerdict};
use infokernel::{
    solve_for_lambda, solve_tv, value_curve, Branch, InfoFunctional, Measure, Mode, ProbMeasure,
    Utility,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn kl(q: &[f64]) -> InfoFunctional {
    InfoFunctional::extended_kl(Measure::from_weights(q.to_vec()).unwrap(), Mode::Simplex).unwrap()
}

fn utility(x: &[f64]) -> Utility {
    Utility::from_values(x.to_vec()).unwrap()
}

fn pm(v: &[f64]) -> ProbMeasure {
    ProbMeasure::from_weights(v.to_vec()).unwrap()
}

fn within(t: Instant, limit: Duration) -> Outcome {
    let el = t.elapsed();
    if el < limit {
        Ok(format!("{:.2}s", el.as_secs_f64()))
    } else {
        Err(format!(
            "took {:.2}s, limit {:.0}s",
            el.as_secs_f64(),
            limit.as_secs_f64()
        ))
    }
}

fn c01_kl_grid_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for i in 0..25 {
        let n = rng.random_range(3..=5);
        let q = random_simplex(&mut rng, n, 0.1);
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let top = (0..n).max_by(|&a, &b| x[a].total_cmp(&x[b])).unwrap();
        let lambda_bar = -q[top].ln();
        let lambda = lambda_bar * rng.random_range(0.05..0.95);
        let s = solve_for_lambda(&utility(&x), &kl(&q), lambda).map_err(|e| e.to_string())?;
        let oracle = kl_grid_oracle(&x, &q, lambda, 1000);
        let d = (s.value - oracle).abs();
        worst = worst.max(d);
        ensure!(
            d <= 1e-3,
            "instance {i}: solver {} vs grid oracle {oracle}",
            s.value
        );
        ensure!(
            oracle <= s.value + 1e-12,
            "instance {i}: grid point beats the optimum"
        );
    }
    let time = within(t, Duration::from_secs(5))?;
    Ok(format!("25 instances, max |diff| {worst:.2e}, {time}"))
}

fn c02_curve_shape() -> Outcome {
    let t = Instant::now();
    let x = utility(&[0.0, 1.0, 2.0]);
    let f = kl(&[1.0 / 3.0; 3]);
    let grid: Vec<f64> = (0..50).map(|i| 3f64.ln() * i as f64 / 49.0).collect();
    let up = value_curve(&x, &f, &grid, Branch::Upper).map_err(|e| e.to_string())?;
    let lo = value_curve(&x, &f, &grid, Branch::Lower).map_err(|e| e.to_string())?;
    let u: Vec<f64> = up.samples.iter().map(|s| s.upsilon).collect();
    let l: Vec<f64> = lo.samples.iter().map(|s| s.upsilon).collect();
    let bi: Vec<f64> = up.samples.iter().map(|s| s.beta_inverse).collect();
    for i in 1..u.len() {
        ensure!(u[i] > u[i - 1], "upper not strictly increasing at {i}");
        ensure!(l[i] < l[i - 1], "lower not strictly decreasing at {i}");
        ensure!(bi[i] <= bi[i - 1], "beta_inverse increases at {i}");
    }
    for i in 1..u.len() - 1 {
        let du = u[i + 1] - 2.0 * u[i] + u[i - 1];
        let dl = l[i + 1] - 2.0 * l[i] + l[i - 1];
        ensure!(du <= 1e-9, "upper second difference {du:e} at {i}");
        ensure!(dl >= -1e-9, "lower second difference {dl:e} at {i}");
    }
    let time = within(t, Duration::from_secs(1))?;
    Ok(format!("50-point grid, both branches, {time}"))
}

fn c03_limits() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cases = vec![(vec![0.0, 0.9, 1.0], vec![1.0 / 3.0; 3])];
    for _ in 0..5 {
        let n = rng.random_range(3..=6);
        let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let top = (0..n).max_by(|&a, &b| x[a].total_cmp(&x[b])).unwrap();
        // keep a gap of at least 0.1 below the argmax
        let cap = x[top] - 0.1;
        for (i, v) in x.iter_mut().enumerate() {
            if i != top {
                *v = v.min(cap);
            }
        }
        cases.push((x, random_simplex(&mut rng, n, 0.1)));
    }
    let (mut worst_small, mut worst_off, mut worst_lambda) = (0.0f64, 0.0f64, 0.0f64);
    for (x, q) in &cases {
        let f = kl(q);
        let xu = utility(x);
        let s = solution_at_beta(&xu, &f, 1e-8).map_err(|e| e.to_string())?;
        let d = l1(s.measure.weights(), q);
        worst_small = worst_small.max(d);
        ensure!(d < 1e-6, "beta=1e-8: ||p - q||_1 = {d:e}");
        let s = solution_at_beta(&xu, &f, 1e3).map_err(|e| e.to_string())?;
        let top = (0..x.len()).max_by(|&a, &b| x[a].total_cmp(&x[b])).unwrap();
        let off = 1.0 - s.measure.weights()[top];
        worst_off = worst_off.max(off);
        ensure!(off < 1e-6, "beta=1e3: off-argmax mass {off:e}");
        let dl = (s.info + q[top].ln()).abs();
        worst_lambda = worst_lambda.max(dl);
        ensure!(
            dl < 1e-4,
            "beta=1e3: info {} vs -ln q(argmax) {}",
            s.info,
            -q[top].ln()
        );
    }
    Ok(format!(
        "{} instances: ||p-q|| {worst_small:.1e}, off-argmax {worst_off:.1e}, lambda gap {worst_lambda:.1e}",
        cases.len()
    ))
}

fn c04_support_stability() -> Outcome {
    let q = [0.5, 0.3, 0.2, 0.0];
    let x = [0.0, 0.2, 0.1, 1.0];
    let f = InfoFunctional::extended_kl(Measure::from_weights(q.to_vec()).unwrap(), Mode::Simplex)
        .unwrap();
    let p = support_profile(&utility(&x), &f, &[0.1, 1.0, 10.0, 100.0], 1e-12)
        .map_err(|e| e.to_string())?;
    for (b, s) in p.betas.iter().zip(&p.supports) {
        ensure!(s == &vec![0, 1, 2], "beta {b}: support {s:?}");
    }
    let tv =
        InfoFunctional::total_variation(Measure::from_weights(q.to_vec()).unwrap(), Mode::Simplex)
            .unwrap();
    let t = support_profile(&utility(&x), &tv, &[0.2, 0.6, 1.2, 2.0], 1e-12)
        .map_err(|e| e.to_string())?;
    let mut distinct = t.supports.clone();
    distinct.sort();
    distinct.dedup();
    ensure!(distinct.len() >= 2, "TV supports {:?}", t.supports);
    Ok(format!(
        "KL supports all {{0,1,2}}; TV supports {:?}",
        t.supports
    ))
}

fn c05_binary_separation() -> Outcome {
    let x = JointUtility::from_fn(2, 2, |a, b| (a == b) as u8 as f64).unwrap();
    let input = pm(&[0.5, 0.5]);
    let exact = binary_symmetric_info(0.9);
    let mut notes = vec![];
    for (label, lambda) in [("ln2 - H_b(0.9)", exact), ("0.368064", 0.368064)] {
        let s = channel_optimize(&x, &input, ChannelTarget::Lambda(lambda))
            .map_err(|e| e.to_string())?;
        ensure!(
            (s.expected_utility - 0.9).abs() <= 1e-6,
            "lambda {label}: E = {}",
            s.expected_utility
        );
        let db = s.beta - 9f64.ln();
        if label == "0.368064" {
            // the rounded literal sits 2.1e-7 nats below the exact level,
            // which moves beta by that amount over dlambda/dbeta
            let predicted = (lambda - exact) / (9f64.ln() * 0.09);
            ensure!(
                (db - predicted).abs() <= 0.05 * predicted.abs(),
                "lambda {label}: beta offset {db:e}, predicted {predicted:e}"
            );
            notes.push(format!(
                "beta offset at the literal {db:.2e} (predicted {predicted:.2e})"
            ));
        } else {
            ensure!(
                db.abs() <= 1e-6,
                "lambda {label}: beta = {} vs ln 9",
                s.beta
            );
        }
        let r = separation_experiment(&x, &input, lambda).map_err(|e| e.to_string())?;
        let best = r
            .best_deterministic
            .as_ref()
            .ok_or("no feasible deterministic kernel")?;
        ensure!(
            best.map == vec![0, 0] || best.map == vec![1, 1],
            "best map {:?} is not constant",
            best.map
        );
        ensure!(
            (best.expected_utility - 0.5).abs() <= 1e-12,
            "best E {}",
            best.expected_utility
        );
        let gap = r.gap.unwrap();
        ensure!((gap - 0.4).abs() <= 1e-6, "lambda {label}: gap {gap}");
    }
    let r = separation_experiment(&x, &input, LN_2).map_err(|e| e.to_string())?;
    let best = r.best_deterministic.as_ref().unwrap();
    ensure!(best.map == vec![0, 1], "best map at ln 2 is {:?}", best.map);
    let gap = r.gap.unwrap();
    ensure!(gap.abs() <= 1e-9, "gap at ln 2 is {gap:e}");
    Ok(format!(
        "gap 0.4 at both levels, {gap:.1e} at ln 2; {}",
        notes.join("")
    ))
}

fn c06_randomized_sweep() -> Outcome {
    let r = separation_sweep(50, 6).map_err(|e| e.to_string())?;
    ensure!(r.comparisons > 0, "no comparisons made");
    ensure!(
        r.nonconverged == 0 && r.violations == 0 && r.min_margin > 1e-9,
        "{} comparisons, {} violations, {} channel solves did not converge, min margin {:.2e}",
        r.comparisons,
        r.violations,
        r.nonconverged,
        r.min_margin
    );
    Ok(format!(
        "50 instances, {} comparisons, 0 violations, min margin {:.2e}",
        r.comparisons, r.min_margin
    ))
}

fn c07_deterministic_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_eq = 0.0f64;
    for i in 0..1000 {
        let a = rng.random_range(1..=5);
        let b = rng.random_range(1..=7);
        let images: Vec<usize> = (0..b).map(|_| rng.random_range(0..a)).collect();
        let mut distinct = images.clone();
        distinct.sort();
        distinct.dedup();
        let bound = (distinct.len() as f64).ln();
        let f = FiniteMap::new(images, a).unwrap();
        let k = deterministic_kernel(&f);
        let input = pm(&random_simplex(&mut rng, b, 0.0));
        let mi = mutual_information(&joint_from_kernel(&input, &k).unwrap());
        ensure!(
            mi <= bound + 1e-12,
            "pair {i}: I = {mi} > ln|f(B)| = {bound}"
        );
        let best = maximizing_input(&f);
        let j = joint_from_kernel(&best, &k).unwrap();
        let mi = mutual_information(&j);
        let h = entropy(j.marginal_a());
        worst_eq = worst_eq.max((mi - bound).abs()).max((h - bound).abs());
        ensure!(
            (mi - bound).abs() <= 1e-12,
            "pair {i}: maximizing input gives {mi} vs {bound}"
        );
        ensure!(
            (h - bound).abs() <= 1e-12,
            "pair {i}: output entropy {h} vs {bound}"
        );
    }
    Ok(format!("1000 pairs, equality error {worst_eq:.1e}"))
}

fn c08_gaussian() -> Outcome {
    let t = Instant::now();
    let quad = |d: f64| -0.5 * d * d;
    for beta in [0.5f64, 1.0, 2.0] {
        let ext = 12.0 / beta.sqrt();
        for b in [-1.0, 0.0, 0.7] {
            let v = gaussian_conditional_utility(beta, ext + 1.0, 20_000, b)
                .map_err(|e| e.to_string())?;
            ensure!((v + 0.5 / beta).abs() <= 1e-4, "beta {beta} b {b}: E = {v}");
        }
        let fe =
            free_energy(quad, beta, GridSpec::default_for(beta), 0.0).map_err(|e| e.to_string())?;
        let closed = (2.0 * PI / beta).sqrt().ln();
        ensure!(
            (fe.psi0 - closed).abs() <= 1e-4,
            "beta {beta}: psi0 {} vs {closed}",
            fe.psi0
        );
    }
    let h = cauchy_entropy();
    for lambda in [0.0, 0.25, 1.0, 2.5, 4.0] {
        let beta = beta_from_info_gaussian(h, lambda).map_err(|e| e.to_string())?;
        let back = gaussian_info(beta, h);
        ensure!(
            (back - lambda).abs() <= 1e-6,
            "lambda {lambda}: round trip {back}"
        );
    }
    let time = within(t, Duration::from_secs(2))?;
    Ok(format!("3 betas x 3 offsets, psi0 and round trip, {time}"))
}

/// Cauchy mass of each cell of `cuts`.
fn cauchy_cell_masses(cuts: &[f64]) -> Vec<f64> {
    let cdf = |c: f64| 0.5 + c.atan() / PI;
    let mut edges = vec![0.0];
    edges.extend(cuts.iter().map(|&c| cdf(c)));
    edges.push(1.0);
    edges.windows(2).map(|w| w[1] - w[0]).collect()
}

fn c09_divergence_separation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut partitions = vec![Partition::single(0.0)];
    for i in 0..50 {
        let cells = rng.random_range(1..=8);
        let mut cuts: Vec<f64> = (0..cells - 1)
            .map(|_| rng.random_range(-50.0..50.0))
            .collect();
        cuts.sort_by(f64::total_cmp);
        let representatives = if i % 5 == 4 {
            Representatives::ConditionalMean
        } else {
            Representatives::Fixed((0..cells).map(|_| rng.random_range(-10.0..10.0)).collect())
        };
        partitions.push(Partition {
            cuts,
            representatives,
        });
    }
    let mut min_ratio = f64::INFINITY;
    let mut max_kernel = f64::NEG_INFINITY;
    for (i, p) in partitions.iter().enumerate() {
        let s = cauchy_truncated_loss(p, Source::Cauchy, &[1e3, 1e4, 1e5])
            .map_err(|e| e.to_string())?;
        ensure!(
            s.verdict == SeriesVerdict::Divergent,
            "partition {i}: verdict {}",
            s.verdict
        );
        ensure!(
            s.values.windows(2).all(|w| w[1] < w[0]),
            "partition {i}: values not decreasing {:?}",
            s.values
        );
        let ratio = s.magnitude_ratio();
        min_ratio = min_ratio.min(ratio);
        ensure!(ratio >= 50.0, "partition {i}: ratio {ratio}");
        // the exponential kernel at the quantizer's own information level
        let lambda = entropy(&cauchy_cell_masses(&p.cuts));
        let beta = beta_from_info_gaussian(cauchy_entropy(), lambda).map_err(|e| e.to_string())?;
        let e = gaussian_conditional_utility(beta, 12.0 / beta.sqrt(), 20_000, 0.0)
            .map_err(|e| e.to_string())?;
        ensure!(
            e.is_finite() && (e + 0.5 / beta).abs() <= 1e-4,
            "partition {i}: kernel E {e}"
        );
        max_kernel = max_kernel.max(-e);
    }
    Ok(format!(
        "{} partitions DIVERGENT, min ratio {min_ratio:.1}; kernel |E| <= {max_kernel:.3}",
        partitions.len()
    ))
}

fn c10_example_series() -> Outcome {
    let s = series_example(1.0, 200).map_err(|e| e.to_string())?;
    let closed = -E / (E - 1.0).powi(2);
    ensure!(
        (s.partial - closed).abs() <= 1e-6,
        "partial {} vs {closed}",
        s.partial
    );
    let lin = |n: u64| -(n as f64);
    let r = check_f_bounded(lin, 1.0, 200).map_err(|e| e.to_string())?;
    ensure!(
        r.verdict == SeriesVerdict::Convergent,
        "x = -n, beta = 1: {}",
        r.verdict
    );
    let r = check_f_bounded(lin, -1.0, 200).map_err(|e| e.to_string())?;
    ensure!(
        r.verdict == SeriesVerdict::Divergent,
        "x = -n, beta = -1: {}",
        r.verdict
    );
    let c = classify_f_bounded(lin, 200).map_err(|e| e.to_string())?;
    ensure!(
        c.bounded_above && !c.bounded_below,
        "x = -n classified {c:?}"
    );
    for alpha in [-2.0, 0.0, 3.5] {
        let c = classify_f_bounded(|_| alpha, 200).map_err(|e| e.to_string())?;
        ensure!(
            !c.bounded_above && !c.bounded_below,
            "constant {alpha} classified bounded"
        );
    }
    Ok(format!(
        "partial {:.9}, -n above only, constants neither",
        s.partial
    ))
}

fn c11_tv_lp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let n = rng.random_range(3..=5);
        let mut q = random_simplex(&mut rng, n, 0.05);
        if i % 4 == 3 {
            // a zero coordinate
            let z = rng.random_range(0..n);
            q[z] = 0.0;
            let s: f64 = q.iter().sum();
            q.iter_mut().for_each(|v| *v /= s);
        }
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..2.0)).collect();
        let lambda = rng.random_range(0.0..2.0);
        let s = solve_tv(&utility(&x), &pm(&q), lambda).map_err(|e| e.to_string())?;
        let oracle = tv_vertex_oracle(&x, &q, lambda);
        let d = (s.solution.value - oracle).abs();
        worst = worst.max(d);
        ensure!(
            d <= 1e-9,
            "instance {i}: solver {} vs oracle {oracle}",
            s.solution.value
        );
    }
    let q = pm(&[1.0 / 3.0; 3]);
    let sx = solve_tv(&utility(&[0.0, 1.0, 2.0]), &q, 0.4).map_err(|e| e.to_string())?;
    let sw = solve_tv(&utility(&[0.0, 0.5, 2.0]), &q, 0.4).map_err(|e| e.to_string())?;
    let (px, pw) = (sx.solution.measure.weights(), sw.solution.measure.weights());
    ensure!(l1(px, pw) <= 1e-12, "maximizers differ: {px:?} vs {pw:?}");
    ensure!(
        (sx.solution.value - 1.4).abs() <= 1e-12,
        "value for x {}",
        sx.solution.value
    );
    let ow = tv_vertex_oracle(&[0.0, 0.5, 2.0], &[1.0 / 3.0; 3], 0.4);
    ensure!(
        (dot(pw, &[0.0, 0.5, 2.0]) - ow).abs() <= 1e-12,
        "shared point not optimal for w"
    );
    Ok(format!(
        "20 instances, max |diff| {worst:.1e}; shared maximizer {px:.4?}"
    ))
}

fn c12_ba_convergence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let cfg = ChannelConfig::default();
    let beta = 5.0;
    let mut failed = vec![];
    let mut max_iter = 0;
    for i in 0..100 {
        let vals: Vec<f64> = (0..16).map(|_| rng.random()).collect();
        let x = JointUtility::from_fn(4, 4, |a, b| vals[4 * b + a]).unwrap();
        let input = pm(&random_simplex(&mut rng, 4, 0.05));
        let s = blahut_arimoto(&x, &input, beta, &cfg).map_err(|e| e.to_string())?;
        if s.converged {
            ensure!(
                s.residual < 1e-10 && s.iterations <= 10_000,
                "trial {i} flagged converged with residual {:e} after {}",
                s.residual,
                s.iterations
            );
            max_iter = max_iter.max(s.iterations);
        } else {
            ensure!(
                s.residual >= 1e-10,
                "trial {i} unconverged with small residual"
            );
            failed.push((i, s.residual));
        }
    }
    ensure!(
        failed.len() <= 5,
        "{} of 100 trials did not converge: {failed:?}",
        failed.len()
    );
    Ok(format!(
        "{}/100 converged at beta {beta} (max {max_iter} iterations); nonconverged {failed:?}",
        100 - failed.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("KL solver vs simplex-grid oracle", c01_kl_grid_oracle),
        ("value curve shape", c02_curve_shape),
        ("beta limits", c03_limits),
        ("support stability", c04_support_stability),
        ("binary separation", c05_binary_separation),
        ("randomized separation sweep", c06_randomized_sweep),
        ("deterministic information bound", c07_deterministic_bound),
        ("Gaussian kernel formulas", c08_gaussian),
        ("divergence separation", c09_divergence_separation),
        ("convergent series and F-boundedness", c10_example_series),
        ("TV LP vs vertex enumeration", c11_tv_lp),
        ("Blahut-Arimoto convergence", c12_ba_convergence),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures > 0 {
        std::process::exit(1);
    }
}

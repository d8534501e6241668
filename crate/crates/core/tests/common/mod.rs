//! Independent oracles shared by the integration tests. None of them call
//! into the solvers they check.

#![allow(dead_code)]

use rand::Rng;

/// Best `<x, p>` over simplex grid points `p = k / steps` with
/// `KL(p || q) <= lambda`, by exact branch and bound.
///
/// Coordinates are visited in decreasing `x`. A branch is cut when even
/// putting all remaining mass on the next coordinate cannot beat the
/// incumbent, or when the log-sum inequality
/// `sum p_i ln(p_i / q_i) >= P ln(P / Q)` already exceeds the budget.
pub fn kl_grid_oracle(x: &[f64], q: &[f64], lambda: f64, steps: usize) -> f64 {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]));
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let qs: Vec<f64> = order.iter().map(|&i| q[i]).collect();
    let nf = steps as f64;
    let term = |mass: f64, qq: f64| {
        if mass == 0.0 {
            0.0
        } else {
            mass * (mass / qq).ln()
        }
    };
    let kl: Vec<Vec<f64>> = qs
        .iter()
        .map(|&qq| (0..=steps).map(|k| term(k as f64 / nf, qq)).collect())
        .collect();
    let tail: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let qq: f64 = qs[j..].iter().sum();
            (0..=steps).map(|r| term(r as f64 / nf, qq)).collect()
        })
        .collect();

    struct Ctx<'a> {
        xs: &'a [f64],
        kl: &'a [Vec<f64>],
        tail: &'a [Vec<f64>],
        nf: f64,
        lambda: f64,
        best: f64,
    }

    fn rec(c: &mut Ctx, j: usize, rem: usize, kl_acc: f64, val_acc: f64) {
        let n = c.xs.len();
        if j == n - 1 {
            if kl_acc + c.kl[j][rem] <= c.lambda {
                c.best = c.best.max(val_acc + c.xs[j] * rem as f64 / c.nf);
            }
            return;
        }
        for k in (0..=rem).rev() {
            let r = rem - k;
            let val = val_acc + c.xs[j] * k as f64 / c.nf;
            if val + c.xs[j + 1] * r as f64 / c.nf <= c.best {
                break;
            }
            let kl = kl_acc + c.kl[j][k];
            if kl + c.tail[j + 1][r] > c.lambda {
                continue;
            }
            rec(c, j + 1, r, kl, val);
        }
    }

    let mut c = Ctx {
        xs: &xs,
        kl: &kl,
        tail: &tail,
        nf,
        lambda,
        best: f64::NEG_INFINITY,
    };
    rec(&mut c, 0, steps, 0.0, 0.0);
    c.best
}

/// Solve the square system `a z = b` by Gaussian elimination with partial
/// pivoting; `None` when singular.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut z = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * z[c]).sum();
        z[r] = (b[r] - s) / a[r][r];
    }
    Some(z)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = vec![];
    go(0, n, k, &mut vec![], &mut out);
    out
}

/// Vertices of `{p in simplex : ||p - q||_1 <= lambda}`.
///
/// The L1 ball is written as the `2^n` halfspaces `s . (p - q) <= lambda`,
/// `s in {-1, 1}^n`; together with `p >= 0` and `sum p = 1`, every choice of
/// `n - 1` active inequalities with a nonsingular system is a candidate
/// vertex, kept if feasible.
pub fn tv_vertices(q: &[f64], lambda: f64) -> Vec<Vec<f64>> {
    let n = q.len();
    let mut rows: Vec<(Vec<f64>, f64)> = (0..n)
        .map(|i| {
            let mut a = vec![0.0; n];
            a[i] = -1.0;
            (a, 0.0)
        })
        .collect();
    for mask in 0..(1u32 << n) {
        let s: Vec<f64> = (0..n)
            .map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 })
            .collect();
        let rhs = lambda + s.iter().zip(q).map(|(a, b)| a * b).sum::<f64>();
        rows.push((s, rhs));
    }
    let mut out: Vec<Vec<f64>> = vec![];
    for combo in combinations(rows.len(), n - 1) {
        let mut a = vec![vec![1.0; n]];
        let mut b = vec![1.0];
        for &i in &combo {
            a.push(rows[i].0.clone());
            b.push(rows[i].1);
        }
        let Some(p) = solve_linear(a, b) else {
            continue;
        };
        let feasible = rows
            .iter()
            .all(|(r, rhs)| r.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>() <= rhs + 1e-9);
        if feasible
            && !out
                .iter()
                .any(|v| v.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-12))
        {
            out.push(p);
        }
    }
    out
}

/// LP optimum `max <x, p>` over the TV ball, by vertex enumeration.
pub fn tv_vertex_oracle(x: &[f64], q: &[f64], lambda: f64) -> f64 {
    tv_vertices(q, lambda)
        .iter()
        .map(|p| p.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Random probability vector; `floor > 0` keeps every entry strictly positive.
pub fn random_simplex<R: Rng>(rng: &mut R, n: usize, floor: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| floor + rng.random::<f64>()).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).sum()
}

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|v| v * v.ln())
        .sum::<f64>()
}

/// `ln 2 - H_b(p)` with `H_b` the binary entropy in nats.
pub fn binary_symmetric_info(p: f64) -> f64 {
    std::f64::consts::LN_2 + p * p.ln() + (1.0 - p) * (1.0 - p).ln()
}

//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Logistic function from `e^x`, without the library's formulation.
pub fn logistic(x: f64) -> f64 {
    let e = std::f64::consts::E.powf(x);
    e / (1.0 + e)
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Dominant eigenvector of a symmetric positive semidefinite matrix by
/// plain power iteration from `start`.
pub fn power_iteration(m: &[Vec<f64>], start: Vec<f64>) -> Vec<f64> {
    let mut v = unit(start);
    for _ in 0..100_000 {
        let next = unit(mat_vec(m, &v));
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if delta < 1e-14 {
            break;
        }
    }
    v
}

/// Hub and authority vectors as dominant eigenvectors of `W Wᵀ` and `Wᵀ W`
/// for a dense row-major weight matrix.
pub fn hits_oracle(n: usize, w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let at = |i: usize, j: usize| w[i * n + j];
    let wtw: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| at(k, i) * at(k, j)).sum()).collect())
        .collect();
    let wwt: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| at(i, k) * at(j, k)).sum()).collect())
        .collect();
    // Start from one HITS half-step out of the uniform vector so repeated
    // eigenvalues resolve the same way.
    let auth0: Vec<f64> = (0..n).map(|j| (0..n).map(|i| at(i, j)).sum()).collect();
    let authority = power_iteration(&wtw, auth0);
    let hub0 = (0..n).map(|i| (0..n).map(|j| at(i, j) * authority[j]).sum()).collect();
    let hub = power_iteration(&wwt, hub0);
    (hub, authority)
}

/// Random weighted digraph without self-loops on 2..=10 nodes and with at
/// least one edge, as a dense row-major matrix.
pub fn random_digraph(seed: u64) -> (usize, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=10);
    loop {
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.random_bool(0.5) {
                    w[i * n + j] = rng.random_range(0.1..5.0);
                }
            }
        }
        if w.iter().any(|&x| x > 0.0) {
            return (n, w);
        }
    }
}

/// Fleiss' kappa by enumerating ordered rater pairs per item.
pub fn fleiss_by_pairs(ratings: &[Vec<u64>]) -> f64 {
    let mut agree_sum = 0.0;
    let mut totals = vec![0u64; ratings[0].len()];
    let mut all = 0u64;
    for row in ratings {
        let raters: Vec<usize> = row
            .iter()
            .enumerate()
            .flat_map(|(c, &k)| std::iter::repeat_n(c, k as usize))
            .collect();
        let n = raters.len();
        let mut agree = 0usize;
        for i in 0..n {
            for j in 0..n {
                if i != j && raters[i] == raters[j] {
                    agree += 1;
                }
            }
        }
        agree_sum += agree as f64 / (n * (n - 1)) as f64;
        for (t, &k) in totals.iter_mut().zip(row) {
            *t += k;
        }
        all += n as u64;
    }
    let p_bar = agree_sum / ratings.len() as f64;
    let p_e: f64 = totals.iter().map(|&t| (t as f64 / all as f64).powi(2)).sum();
    (p_bar - p_e) / (1.0 - p_e)
}

/// Fleiss' 1971 worked example: 10 items, 14 raters, 5 categories.
pub fn fleiss_example() -> Vec<Vec<u64>> {
    vec![
        vec![0, 0, 0, 0, 14],
        vec![0, 2, 6, 4, 2],
        vec![0, 0, 3, 5, 6],
        vec![0, 3, 9, 2, 0],
        vec![2, 2, 8, 1, 1],
        vec![7, 7, 0, 0, 0],
        vec![3, 2, 6, 3, 0],
        vec![2, 5, 3, 2, 2],
        vec![6, 5, 2, 1, 0],
        vec![0, 2, 2, 3, 7],
    ]
}

/// Kappa of the worked example from an external statistics package.
pub const FLEISS_EXAMPLE_KAPPA: f64 = 0.20993070442195522;

/// Least squares line through `(x, y)` by Cramer's rule on the normal
/// equations.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    let intercept = (sy * sxx - sx * sxy) / det;
    let slope = (n * sxy - sx * sy) / det;
    (intercept, slope)
}

/// Fraction of positive-negative pairs ordered correctly, ties one half.
pub fn auc_by_pairs(labels: &[bool], scores: &[f64]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

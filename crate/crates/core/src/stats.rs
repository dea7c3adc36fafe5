//! Small nonparametric toolkit for trend and dominance checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, StudentsT};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean (sample standard deviation over `sqrt(n)`).
pub fn std_error(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Spearman {
    pub rho: f64,
    pub n: usize,
    /// One-sided p-value for `rho < 0`.
    pub p_negative: f64,
    /// One-sided p-value for `rho > 0`.
    pub p_positive: f64,
}

/// Spearman rank correlation with p-values from the Student-t approximation
/// `t = rho sqrt((n - 2) / (1 - rho^2))` on `n - 2` degrees of freedom.
pub fn spearman(x: &[f64], y: &[f64]) -> Spearman {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    let n = x.len();
    let rho = pearson(&ranks(x), &ranks(y));
    if n < 3 {
        return Spearman { rho, n, p_negative: 1.0, p_positive: 1.0 };
    }
    let df = (n - 2) as f64;
    let t = if rho.abs() >= 1.0 {
        rho.signum() * f64::INFINITY
    } else {
        rho * (df / (1.0 - rho * rho)).sqrt()
    };
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    let cdf = if t.is_infinite() { if t > 0.0 { 1.0 } else { 0.0 } } else { dist.cdf(t) };
    Spearman { rho, n, p_negative: cdf, p_positive: 1.0 - cdf }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SignTest {
    pub positives: u64,
    pub negatives: u64,
    /// One-sided p-value for "positive differences are more likely".
    pub p_positive: f64,
}

/// Exact binomial sign test on paired differences; zeros are dropped.
pub fn sign_test(diffs: &[f64]) -> SignTest {
    let positives = diffs.iter().filter(|d| **d > 0.0).count() as u64;
    let negatives = diffs.iter().filter(|d| **d < 0.0).count() as u64;
    let m = positives + negatives;
    let p_positive = if m == 0 || positives == 0 {
        1.0
    } else {
        let b = Binomial::new(0.5, m).expect("valid binomial");
        // P(X >= positives)
        1.0 - b.cdf(positives - 1)
    };
    SignTest { positives, negatives, p_positive }
}

/// Fraction of `resamples` bootstrap means of `xs` that are `<= threshold`.
pub fn bootstrap_coverage(xs: &[f64], threshold: f64, resamples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = xs.len();
    let hits = (0..resamples)
        .filter(|_| {
            let s: f64 = (0..n).map(|_| xs[rng.random_range(0..n)]).sum();
            s / n as f64 <= threshold
        })
        .count();
    hits as f64 / resamples as f64
}

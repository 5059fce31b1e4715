//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of the one-toppling-at-a-time reference relaxation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleRelax {
    pub heights: Vec<u64>,
    pub topplings: u64,
    pub dissipated: u64,
    pub area: u64,
}

/// Sequential relaxation on a row-major `side × side` field. Sides are given
/// as `[north, east, south, west]`, `true` meaning open.
pub fn relax_sequentially(side: usize, threshold: u64, open: [bool; 4], heights: &[u64]) -> OracleRelax {
    let mut h = heights.to_vec();
    let mut shares = [threshold / 4; 4];
    for s in shares.iter_mut().take((threshold % 4) as usize) {
        *s += 1;
    }
    let mut toppled = vec![false; h.len()];
    let mut topplings = 0;
    let mut dissipated = 0;
    // always topple the first unstable cell in row-major order
    while let Some(i) = h.iter().position(|&x| x >= threshold) {
        let (r, c) = (i / side, i % side);
        h[i] -= threshold;
        topplings += 1;
        toppled[i] = true;
        let targets = [
            (r > 0).then(|| i - side),
            (c + 1 < side).then(|| i + 1),
            (r + 1 < side).then(|| i + side),
            (c > 0).then(|| i - 1),
        ];
        for k in 0..4 {
            match targets[k] {
                Some(j) => h[j] += shares[k],
                None if open[k] => dissipated += shares[k],
                None => h[i] += shares[k],
            }
        }
    }
    OracleRelax { heights: h, topplings, dissipated, area: toppled.iter().filter(|&&t| t).count() as u64 }
}

/// Inverse-CDF sampler for `P(s) ∝ s^{-gamma}` on `[s_min, s_max]`, built from
/// an explicit cumulative table.
pub struct PowerLawSampler {
    s_min: u64,
    cdf: Vec<f64>,
}

impl PowerLawSampler {
    pub fn new(gamma: f64, s_min: u64, s_max: u64) -> Self {
        let mut cdf = Vec::with_capacity((s_max - s_min + 1) as usize);
        let mut acc = 0.0;
        for s in s_min..=s_max {
            acc += (s as f64).powf(-gamma);
            cdf.push(acc);
        }
        for x in cdf.iter_mut() {
            *x /= acc;
        }
        PowerLawSampler { s_min, cdf }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.gen();
                let k = self.cdf.partition_point(|&c| c < u).min(self.cdf.len() - 1);
                self.s_min + k as u64
            })
            .collect()
    }
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Rank of an integer matrix by fraction-free (Bareiss) elimination.
pub fn integer_rank(m: &[Vec<i64>]) -> usize {
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    let mut prev = 1i128;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(rank, p);
        for i in rank + 1..rows {
            for j in c + 1..cols {
                a[i][j] = (a[rank][c] * a[i][j] - a[i][c] * a[rank][j]) / prev;
            }
            a[i][c] = 0;
        }
        prev = a[rank][c];
        rank += 1;
    }
    rank
}

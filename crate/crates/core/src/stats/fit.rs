//! Discrete power-law maximum likelihood on a truncated support.

use crate::error::{Error, Result};

/// Smallest tail a fit will accept.
pub const MIN_TAIL: usize = 50;

/// How the lower cutoff of the fitted region is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SMinPolicy {
    Fixed(u64),
    /// Minimize the Kolmogorov–Smirnov distance between data and fit.
    KsMinimize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    /// `P(S) ∝ S^{-gamma}` on `[s_min, s_max]`.
    pub gamma: f64,
    pub s_min: u64,
    pub s_max: u64,
    pub ks_distance: f64,
    pub n_tail: u64,
    /// Asymptotic standard error from the Fisher information.
    pub std_error: f64,
}

impl PowerLawFit {
    /// Agreement of two fits within `k` joint standard errors.
    pub fn agrees_with(&self, other: &PowerLawFit, k: f64) -> bool {
        let joint = self.std_error.hypot(other.std_error);
        (self.gamma - other.gamma).abs() <= k * joint
    }
}

const EXPLICIT_BELOW: u64 = 32;

/// Euler–Maclaurin estimate of `Σ_{s=a}^{b} s^{-γ}` for `a ≥ EXPLICIT_BELOW`.
fn euler_maclaurin(gamma: f64, a: f64, b: f64) -> f64 {
    let t = 1.0 - gamma;
    let log_ratio = (b / a).ln();
    // ∫_a^b x^{-γ} dx = a^{1-γ} · expm1((1-γ) ln(b/a)) / (1-γ)
    let integral = if t.abs() < 1e-12 {
        log_ratio
    } else {
        a.powf(t) * (t * log_ratio).exp_m1() / t
    };
    let fa = a.powf(-gamma);
    let fb = b.powf(-gamma);
    let d1 = |x: f64, fx: f64| -gamma * fx / x;
    let c3 = gamma * (gamma + 1.0) * (gamma + 2.0);
    let d3 = |x: f64, fx: f64| -c3 * fx / (x * x * x);
    let c5 = c3 * (gamma + 3.0) * (gamma + 4.0);
    let d5 = |x: f64, fx: f64| -c5 * fx / x.powi(5);
    integral + 0.5 * (fa + fb) + (d1(b, fb) - d1(a, fa)) / 12.0 - (d3(b, fb) - d3(a, fa)) / 720.0
        + (d5(b, fb) - d5(a, fa)) / 30240.0
}

/// `Σ_{s=a}^{b} s^{-γ}`; zero when `b < a`. Requires `a ≥ 1`.
pub fn power_sum(gamma: f64, a: u64, b: u64) -> f64 {
    debug_assert!(a >= 1);
    if b < a {
        return 0.0;
    }
    let mut sum = 0.0;
    let explicit_end = b.min(EXPLICIT_BELOW - 1);
    for s in a..=explicit_end {
        sum += (s as f64).powf(-gamma);
    }
    let tail_start = a.max(EXPLICIT_BELOW);
    if b >= tail_start {
        sum += euler_maclaurin(gamma, tail_start as f64, b as f64);
    }
    sum
}

/// Distinct values with multiplicities, ascending.
#[derive(Debug, Clone)]
struct Support {
    values: Vec<u64>,
    counts: Vec<u64>,
}

impl Support {
    fn new(sizes: &[u64]) -> Self {
        let mut sorted = sizes.to_vec();
        sorted.sort_unstable();
        let mut values = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        for s in sorted {
            if values.last() == Some(&s) {
                *counts.last_mut().unwrap() += 1;
            } else {
                values.push(s);
                counts.push(1);
            }
        }
        Support { values, counts }
    }

    /// Index range of values within `[lo, hi]`.
    fn range(&self, lo: u64, hi: u64) -> std::ops::Range<usize> {
        self.values.partition_point(|&v| v < lo)..self.values.partition_point(|&v| v <= hi)
    }
}

struct Tail<'a> {
    values: &'a [u64],
    counts: &'a [u64],
    n: u64,
    mean_ln: f64,
    s_min: u64,
    s_max: u64,
}

impl<'a> Tail<'a> {
    fn new(support: &'a Support, s_min: u64, s_max: u64) -> Self {
        let r = support.range(s_min, s_max);
        let values = &support.values[r.clone()];
        let counts = &support.counts[r];
        let n: u64 = counts.iter().sum();
        let sum_ln: f64 = values.iter().zip(counts).map(|(&v, &c)| c as f64 * (v as f64).ln()).sum();
        Tail {
            values,
            counts,
            n,
            mean_ln: if n > 0 { sum_ln / n as f64 } else { 0.0 },
            s_min,
            s_max,
        }
    }

    fn ln_z(&self, gamma: f64) -> f64 {
        power_sum(gamma, self.s_min, self.s_max).ln()
    }

    /// Mean log-likelihood per sample.
    fn log_likelihood(&self, gamma: f64) -> f64 {
        -gamma * self.mean_ln - self.ln_z(gamma)
    }

    fn mle(&self) -> f64 {
        // the log-likelihood of an exponential family is concave in gamma
        let (mut lo, mut hi) = (-2.0f64, 8.0f64);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - r * (hi - lo);
        let mut x2 = lo + r * (hi - lo);
        let mut f1 = self.log_likelihood(x1);
        let mut f2 = self.log_likelihood(x2);
        while hi - lo > 1e-10 {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + r * (hi - lo);
                f2 = self.log_likelihood(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - r * (hi - lo);
                f1 = self.log_likelihood(x1);
            }
        }
        0.5 * (lo + hi)
    }

    /// `1 / sqrt(n · Var_γ[ln S])`, the variance being `d² ln Z / dγ²`.
    fn std_error(&self, gamma: f64) -> f64 {
        let h = 1e-3;
        let var = (self.ln_z(gamma + h) - 2.0 * self.ln_z(gamma) + self.ln_z(gamma - h)) / (h * h);
        1.0 / (self.n as f64 * var.max(f64::MIN_POSITIVE)).sqrt()
    }

    fn ks_distance(&self, gamma: f64) -> f64 {
        let z = power_sum(gamma, self.s_min, self.s_max);
        let cdf = |v: u64| 1.0 - power_sum(gamma, v + 1, self.s_max) / z;
        let n = self.n as f64;
        let mut cum = 0u64;
        let mut d: f64 = 0.0;
        for (&v, &c) in self.values.iter().zip(self.counts) {
            // just below v the empirical CDF still holds the previous value
            if v > self.s_min {
                d = d.max((cum as f64 / n - cdf(v - 1)).abs());
            }
            cum += c;
            d = d.max((cum as f64 / n - cdf(v)).abs());
        }
        d
    }

    fn fit(&self) -> PowerLawFit {
        let gamma = self.mle();
        PowerLawFit {
            gamma,
            s_min: self.s_min,
            s_max: self.s_max,
            ks_distance: self.ks_distance(gamma),
            n_tail: self.n,
            std_error: self.std_error(gamma),
        }
    }
}

/// Fits with `s_max` set to the largest observed size.
pub fn fit_power_law(sizes: &[u64], policy: SMinPolicy) -> Result<PowerLawFit> {
    fit_power_law_truncated(sizes, policy, None)
}

/// Fits `P(S) ∝ S^{-γ}` on `[s_min, s_max]`, ignoring samples outside it.
/// `s_max` defaults to the largest observed size.
pub fn fit_power_law_truncated(sizes: &[u64], policy: SMinPolicy, s_max: Option<u64>) -> Result<PowerLawFit> {
    if sizes.is_empty() {
        return Err(Error::NoAvalanches);
    }
    if sizes.contains(&0) {
        return Err(Error::Config("avalanche sizes must be at least 1".into()));
    }
    let support = Support::new(sizes);
    if support.values.len() == 1 {
        return Err(Error::NoDynamicRange);
    }
    let s_max = s_max.unwrap_or(*support.values.last().unwrap());
    match policy {
        SMinPolicy::Fixed(s_min) => {
            let s_min = s_min.max(1);
            let tail = Tail::new(&support, s_min, s_max);
            check_tail(&tail)?;
            Ok(tail.fit())
        }
        SMinPolicy::KsMinimize => {
            let mut best: Option<PowerLawFit> = None;
            for s_min in ks_candidates(&support, s_max) {
                let tail = Tail::new(&support, s_min, s_max);
                if check_tail(&tail).is_err() {
                    continue;
                }
                let fit = tail.fit();
                if best.map_or(true, |b| fit.ks_distance < b.ks_distance) {
                    best = Some(fit);
                }
            }
            best.ok_or_else(|| {
                let first = support.values[0];
                let got = Tail::new(&support, first, s_max).n;
                Error::TooFewTailSamples { needed: MIN_TAIL as u64, got, s_min: first }
            })
        }
    }
}

fn check_tail(tail: &Tail) -> Result<()> {
    if tail.s_max <= tail.s_min {
        return Err(Error::Config(format!("s_max {} must exceed s_min {}", tail.s_max, tail.s_min)));
    }
    if (tail.n as usize) < MIN_TAIL {
        return Err(Error::TooFewTailSamples { needed: MIN_TAIL as u64, got: tail.n, s_min: tail.s_min });
    }
    if tail.values.len() < 2 {
        return Err(Error::NoDynamicRange);
    }
    Ok(())
}

/// Every observed value below 20, then observed values roughly 20 per
/// decade above it.
fn ks_candidates(support: &Support, s_max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut next_log = f64::NEG_INFINITY;
    for &v in &support.values {
        if v >= s_max {
            break;
        }
        if v < 20 {
            out.push(v);
        } else if (v as f64).log10() >= next_log {
            out.push(v);
            next_log = (v as f64).log10() + 0.05;
        }
    }
    out
}

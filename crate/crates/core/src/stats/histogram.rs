//! Logarithmically binned, normalized size distributions.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Ten bins per decade.
pub const DEFAULT_BASE: f64 = 1.258_925_411_794_167_2; // 10^0.1

/// Bin `k` covers `[edges[k], edges[k+1])`; `density[k] = counts[k] / (total · width_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogHistogram {
    pub base: f64,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: u64,
    pub density: Vec<f64>,
}

/// Integer bin edges `ceil(base^k)` for every `k`, with duplicates removed so
/// each bin holds at least one integer. Covers `[min, max]`.
fn integer_edges(base: f64, min: u64, max: u64) -> Vec<u64> {
    let ln_base = base.ln();
    let edge = |k: i64| -> u64 {
        let x = (k as f64 * ln_base).exp();
        // guard exact powers (10^1 evaluates to 10.000000000000002)
        (x * (1.0 - 1e-12)).ceil().max(1.0) as u64
    };
    let mut k = ((min as f64).ln() / ln_base).floor() as i64;
    while k > 0 && edge(k) > min {
        k -= 1;
    }
    let mut edges: Vec<u64> = Vec::new();
    loop {
        let e = edge(k);
        if edges.last() != Some(&e) {
            edges.push(e);
        }
        if e > max {
            break;
        }
        k += 1;
    }
    edges
}

pub fn build_histogram(sizes: &[u64], base: f64) -> Result<LogHistogram> {
    if !(base > 1.0 && base.is_finite()) {
        return Err(Error::Config(format!("histogram base must exceed 1, got {base}")));
    }
    let (min, max) = match (sizes.iter().min(), sizes.iter().max()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::NoAvalanches),
    };
    if min == 0 {
        return Err(Error::Config("avalanche sizes must be at least 1".into()));
    }
    let int_edges = integer_edges(base, min, max);
    let mut counts = vec![0u64; int_edges.len() - 1];
    for &s in sizes {
        // last edge with e <= s
        let k = int_edges.partition_point(|&e| e <= s) - 1;
        counts[k] += 1;
    }
    let edges: Vec<f64> = int_edges.iter().map(|&e| e as f64).collect();
    Ok(LogHistogram::from_counts(base, edges, counts))
}

impl LogHistogram {
    pub fn from_counts(base: f64, edges: Vec<f64>, counts: Vec<u64>) -> Self {
        assert_eq!(edges.len(), counts.len() + 1);
        let total: u64 = counts.iter().sum();
        let density = counts
            .iter()
            .zip(edges.windows(2))
            .map(|(&c, w)| if total == 0 { 0.0 } else { c as f64 / (total as f64 * (w[1] - w[0])) })
            .collect();
        LogHistogram { base, edges, counts, total, density }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self, k: usize) -> f64 {
        self.edges[k + 1] - self.edges[k]
    }

    /// Geometric bin centre.
    pub fn center(&self, k: usize) -> f64 {
        (self.edges[k] * self.edges[k + 1]).sqrt()
    }

    /// `Σ density · width`; 1 for any nonempty histogram.
    pub fn normalization(&self) -> f64 {
        (0..self.bins()).map(|k| self.density[k] * self.width(k)).sum()
    }

    /// `(log10 centre, log10 density)` for occupied bins.
    pub fn log_curve(&self) -> Vec<(f64, f64)> {
        (0..self.bins())
            .filter(|&k| self.counts[k] > 0)
            .map(|k| (self.center(k).log10(), self.density[k].log10()))
            .collect()
    }

    /// Same distribution with sizes divided by `a`: edges shrink by `a`,
    /// densities grow by `a`.
    pub fn rescaled(&self, a: f64) -> LogHistogram {
        LogHistogram {
            base: self.base,
            edges: self.edges.iter().map(|e| e / a).collect(),
            counts: self.counts.clone(),
            total: self.total,
            density: self.density.iter().map(|d| d * a).collect(),
        }
    }

    /// Probability mass carried by bins lying entirely at or below `s`.
    pub fn mass_below(&self, s: f64) -> f64 {
        (0..self.bins())
            .filter(|&k| self.edges[k + 1] - 1.0 <= s)
            .fold(0.0, |acc, k| acc + self.density[k] * self.width(k))
    }

    pub const CSV_HEADER: &'static str = "bin_lo,bin_hi,count,density";

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for k in 0..self.bins() {
            writeln!(w, "{},{},{},{:e}", self.edges[k], self.edges[k + 1], self.counts[k], self.density[k])?;
        }
        Ok(())
    }

    /// Reads a histogram CSV. Densities are recomputed from counts.
    pub fn read_csv<R: BufRead>(r: R, base: f64) -> Result<LogHistogram> {
        let mut edges = Vec::new();
        let mut counts = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<histogram>", e))?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Config(format!("malformed histogram line {}", i + 1));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad());
            }
            let lo: f64 = f[0].parse().map_err(|_| bad())?;
            let hi: f64 = f[1].parse().map_err(|_| bad())?;
            match edges.last() {
                None => edges.push(lo),
                Some(&last) if last == lo => {}
                Some(_) => return Err(bad()),
            }
            if hi <= lo {
                return Err(bad());
            }
            edges.push(hi);
            counts.push(f[2].parse().map_err(|_| bad())?);
        }
        if counts.is_empty() {
            return Err(Error::NoAvalanches);
        }
        Ok(LogHistogram::from_counts(base, edges, counts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_base_is_tenth_decade() {
        assert!((DEFAULT_BASE - 10f64.powf(0.1)).abs() < 1e-15);
    }

    #[test]
    fn constant_sample_fills_one_bin() {
        let h = build_histogram(&[1, 1, 1, 1], DEFAULT_BASE).unwrap();
        let occupied: Vec<usize> = (0..h.bins()).filter(|&k| h.counts[k] > 0).collect();
        assert_eq!(occupied.len(), 1);
        assert_eq!(h.total, 4);
        assert!((h.normalization() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(build_histogram(&[], DEFAULT_BASE), Err(Error::NoAvalanches)));
        assert!(build_histogram(&[0, 3], DEFAULT_BASE).is_err());
        assert!(build_histogram(&[3], 1.0).is_err());
    }

    #[test]
    fn edges_are_deduplicated_integers() {
        let e = integer_edges(DEFAULT_BASE, 1, 100);
        assert_eq!(&e[..12], &[1, 2, 3, 4, 6, 7, 8, 10, 13, 16, 20, 26]);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
        assert!(*e.last().unwrap() > 100);
        // anchored on the same global grid regardless of the sample minimum
        let f = integer_edges(DEFAULT_BASE, 9, 100);
        assert_eq!(f[0], 8);
        assert!(e.ends_with(&f));
    }

    #[test]
    fn every_sample_lands_in_its_bin() {
        let sizes: Vec<u64> = (1..=5000).collect();
        let h = build_histogram(&sizes, DEFAULT_BASE).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 5000);
        for k in 0..h.bins() {
            // uniform sample: count equals integer width inside the range
            if h.edges[k + 1] <= 5001.0 {
                assert_eq!(h.counts[k] as f64, h.width(k));
            }
        }
        assert!((h.normalization() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rescale_shifts_curve() {
        let h = build_histogram(&[1, 2, 2, 5, 40, 41, 300], DEFAULT_BASE).unwrap();
        let r = h.rescaled(16.0);
        for ((x0, y0), (x1, y1)) in h.log_curve().iter().zip(r.log_curve()) {
            assert!((x0 - x1 - 16f64.log10()).abs() < 1e-12);
            assert!((y1 - y0 - 16f64.log10()).abs() < 1e-12);
        }
        assert!((r.normalization() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let h = build_histogram(&[1, 2, 2, 5, 40, 41, 300], DEFAULT_BASE).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let back = LogHistogram::read_csv(&buf[..], DEFAULT_BASE).unwrap();
        assert_eq!(back.edges, h.edges);
        assert_eq!(back.counts, h.counts);
        assert_eq!(back.density, h.density);
    }
}

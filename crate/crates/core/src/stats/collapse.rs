//! Rescaling collapse of two size distributions.

use super::histogram::LogHistogram;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseReport {
    pub scale_factor: f64,
    /// Compared range in log10 S, in the reference frame.
    pub overlap_lo: f64,
    pub overlap_hi: f64,
    /// Sup-norm of the log10-density difference over the overlap.
    pub distance: f64,
    pub decades_compared: f64,
}

/// Piecewise-linear interpolation of a curve sorted by abscissa.
fn interpolate(curve: &[(f64, f64)], x: f64) -> f64 {
    let k = curve.partition_point(|p| p.0 < x);
    if k == 0 {
        return curve[0].1;
    }
    if k == curve.len() {
        return curve[k - 1].1;
    }
    let (x0, y0) = curve[k - 1];
    let (x1, y1) = curve[k];
    if x1 == x0 {
        return y1;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Compares `reference` with `test` after mapping test sizes `S → S/A`
/// (densities scale by `A` to stay normalized). Both log10 curves are
/// interpolated onto the union of their nodes over the common range,
/// optionally restricted to `window = (lo, hi)` in log10 S.
pub fn rescale_and_compare(
    reference: &LogHistogram,
    test: &LogHistogram,
    a: f64,
    window: Option<(f64, f64)>,
) -> Result<CollapseReport> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Config(format!("scale factor must be positive, got {a}")));
    }
    let r = reference.log_curve();
    let t = test.rescaled(a).log_curve();
    if r.is_empty() || t.is_empty() {
        return Err(Error::NoAvalanches);
    }
    let mut lo = r[0].0.max(t[0].0);
    let mut hi = r[r.len() - 1].0.min(t[t.len() - 1].0);
    if let Some((wlo, whi)) = window {
        lo = lo.max(wlo);
        hi = hi.min(whi);
    }
    if hi <= lo {
        return Err(Error::NoOverlap);
    }
    let mut grid: Vec<f64> = r
        .iter()
        .chain(&t)
        .map(|p| p.0)
        .filter(|&x| x > lo && x < hi)
        .chain([lo, hi])
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let distance = grid
        .iter()
        .map(|&x| (interpolate(&r, x) - interpolate(&t, x)).abs())
        .fold(0.0, f64::max);
    Ok(CollapseReport {
        scale_factor: a,
        overlap_lo: lo,
        overlap_hi: hi,
        distance,
        decades_compared: hi - lo,
    })
}

#[cfg(test)]
mod tests {
    use super::super::histogram::{build_histogram, DEFAULT_BASE};
    use super::*;

    fn sample() -> LogHistogram {
        let sizes: Vec<u64> = (1..2000u64).flat_map(|s| std::iter::repeat(s).take((4000 / s) as usize)).collect();
        build_histogram(&sizes, DEFAULT_BASE).unwrap()
    }

    #[test]
    fn identical_histograms_have_zero_distance() {
        let h = sample();
        let rep = rescale_and_compare(&h, &h, 1.0, None).unwrap();
        assert_eq!(rep.distance, 0.0);
        assert!(rep.overlap_hi > rep.overlap_lo);
    }

    #[test]
    fn self_affine_copy_collapses() {
        let h = sample();
        let scaled = LogHistogram {
            edges: h.edges.iter().map(|e| e * 16.0).collect(),
            density: h.density.iter().map(|d| d / 16.0).collect(),
            ..h.clone()
        };
        let rep = rescale_and_compare(&h, &scaled, 16.0, None).unwrap();
        assert!(rep.distance < 1e-12, "{rep:?}");
        let unscaled = rescale_and_compare(&h, &scaled, 1.0, None).unwrap();
        assert!(unscaled.distance > 1.0);
    }

    #[test]
    fn disjoint_ranges_fail() {
        let a = build_histogram(&[1, 2, 3], DEFAULT_BASE).unwrap();
        let b = build_histogram(&[1000, 2000, 3000], DEFAULT_BASE).unwrap();
        assert!(matches!(rescale_and_compare(&a, &b, 1.0, None), Err(Error::NoOverlap)));
        assert!(rescale_and_compare(&a, &a, 1.0, Some((5.0, 6.0))).is_err());
        assert!(rescale_and_compare(&a, &a, 0.0, None).is_err());
    }

    #[test]
    fn window_restricts_range() {
        let h = sample();
        let rep = rescale_and_compare(&h, &h, 1.0, Some((1.0, 2.0))).unwrap();
        assert_eq!((rep.overlap_lo, rep.overlap_hi), (1.0, 2.0));
        assert!((rep.decades_compared - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interpolation_is_linear() {
        let c = [(0.0, 0.0), (1.0, 2.0), (3.0, 0.0)];
        assert_eq!(interpolate(&c, 0.5), 1.0);
        assert_eq!(interpolate(&c, 2.0), 1.0);
        assert_eq!(interpolate(&c, -1.0), 0.0);
        assert_eq!(interpolate(&c, 9.0), 0.0);
    }
}

//! Closure relations tying the control parameter to the scale ratio, and the
//! drive-regime classifier.

use num_traits::Signed;

use super::dimension::Rational;
use crate::error::{Error, Result};

/// Exponent linking dissipation scale and Reynolds number in K41: `R_E ~ (L0/η)^{4/3}`.
pub fn k41_beta() -> Rational {
    Rational::new(4, 3)
}

/// Degrees-of-freedom exponent for K41 in three dimensions (`α = D = 3`).
pub const K41_DEFAULT_ALPHA: f64 = 3.0;

/// `R ~ (L0/δl)^β`, `N ~ (L0/δl)^α`, hence `R ~ N^{β_N}` with `β_N = β/α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClosureRelation {
    pub beta: Rational,
    pub alpha: Rational,
    pub beta_n: Rational,
}

impl ClosureRelation {
    pub fn new(beta: Rational, alpha: Rational) -> Result<Self> {
        if !alpha.is_positive() {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        Ok(ClosureRelation { beta, alpha, beta_n: beta / alpha })
    }

    pub fn k41(alpha: Rational) -> Result<Self> {
        Self::new(k41_beta(), alpha)
    }

    /// Avalanche closure: steady-state flux balance fixes `β = -D`.
    pub fn avalanche(dimension: u32, alpha: Rational) -> Result<Self> {
        Self::new(-Rational::from_integer(dimension as i128), alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct K41Relations {
    pub reynolds: f64,
    /// Dissipation scale η = L0 · R_E^{-3/4}.
    pub eta: f64,
    pub l0: f64,
}

impl K41Relations {
    /// `N ~ (L0/η)^α`.
    pub fn dof_estimate(&self, alpha: f64) -> f64 {
        (self.l0 / self.eta).powf(alpha)
    }
}

fn require_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {x}")))
    }
}

pub fn k41_relations(u: f64, l0: f64, nu: f64) -> Result<K41Relations> {
    require_positive("U", u)?;
    require_positive("L0", l0)?;
    require_positive("nu", nu)?;
    let reynolds = u * l0 / nu;
    Ok(K41Relations {
        reynolds,
        eta: l0 * reynolds.powf(-0.75),
        l0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvalancheRelations {
    /// Measured or configured control parameter `h / ε`.
    pub r_a: f64,
    /// Steady-state prediction `(δl/L0)^D`.
    pub r_a_predicted: f64,
    pub beta_n: Rational,
    /// `N ~ (L0/δl)^α`.
    pub n_estimate: f64,
}

pub fn avalanche_relations(h: f64, eps: f64, l0_over_dl: f64, dimension: u32, alpha: Rational) -> Result<AvalancheRelations> {
    if eps == 0.0 {
        return Err(Error::Domain("no dissipation channel".into()));
    }
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!("drive rate must be non-negative, got {h}")));
    }
    require_positive("eps", eps)?;
    if !(l0_over_dl >= 1.0 && l0_over_dl.is_finite()) {
        return Err(Error::Domain(format!("L0/dl must be at least 1, got {l0_over_dl}")));
    }
    if !(1..=3).contains(&dimension) {
        return Err(Error::Domain(format!("dimension must be 1, 2 or 3, got {dimension}")));
    }
    let closure = ClosureRelation::avalanche(dimension, alpha)?;
    let alpha_f = *alpha.numer() as f64 / *alpha.denom() as f64;
    Ok(AvalancheRelations {
        r_a: h / eps,
        r_a_predicted: l0_over_dl.powi(-(dimension as i32)),
        beta_n: closure.beta_n,
        n_estimate: l0_over_dl.powf(alpha_f),
    })
}

/// Default fraction of a bound treated as "much less than" it.
pub const DEFAULT_REGIME_MARGIN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DriveRegime {
    /// Slowly driven: each event is far below one toppling's worth of grains.
    Sdidt,
    /// Events swamp several cells but stay far below system-spanning.
    Intermediate,
    /// Every event drives system-sized avalanches.
    Laminar,
}

impl DriveRegime {
    pub fn as_str(self) -> &'static str {
        match self {
            DriveRegime::Sdidt => "SDIDT",
            DriveRegime::Intermediate => "Intermediate",
            DriveRegime::Laminar => "Laminar",
        }
    }
}

/// SDIDT when `h_dt ≤ margin·g_dl`, Laminar when
/// `h_dt ≥ margin·g_dl·(L0/δl)^D`, Intermediate in between.
pub fn classify_drive_regime(h_dt: f64, g_dl: f64, l0_over_dl: f64, dimension: u32, margin: f64) -> Result<DriveRegime> {
    require_positive("h_dt", h_dt)?;
    require_positive("g_dl", g_dl)?;
    require_positive("L0/dl", l0_over_dl)?;
    if dimension == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::Domain(format!("margin must lie in (0, 1), got {margin}")));
    }
    let lower = margin * g_dl;
    let upper = lower * l0_over_dl.powi(dimension as i32);
    Ok(if h_dt <= lower {
        DriveRegime::Sdidt
    } else if h_dt >= upper {
        DriveRegime::Laminar
    } else {
        DriveRegime::Intermediate
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    #[test]
    fn k41_unit_inputs() {
        let k = k41_relations(1.0, 1.0, 1.0).unwrap();
        assert_eq!(k.reynolds, 1.0);
        assert_eq!(k.eta, 1.0);
        assert_eq!(k.dof_estimate(K41_DEFAULT_ALPHA), 1.0);
    }

    #[test]
    fn k41_high_reynolds() {
        let k = k41_relations(10.0, 1.0, 1e-3).unwrap();
        assert!((k.reynolds - 1e4).abs() < 1e-9);
        assert!((k.eta - 1e-3).abs() < 1e-15);
        // (L0/eta)^3 = 1e9
        assert!((k.dof_estimate(3.0) / 1e9 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn k41_eta_formula() {
        let k = k41_relations(2.0, 1.0, 1.0).unwrap();
        assert!((k.eta - 2f64.powf(-0.75)).abs() < 1e-15);
        assert!((k.eta - 0.5946).abs() < 1e-4);
    }

    #[test]
    fn k41_rejects_nonpositive() {
        assert!(matches!(k41_relations(0.0, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(k41_relations(1.0, -1.0, 1.0).is_err());
        assert!(k41_relations(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn steady_state_matches_prediction() {
        let h = 0.37;
        let eps = h * 100f64.powi(2);
        let a = avalanche_relations(h, eps, 100.0, 2, Rational::from_integer(2)).unwrap();
        assert!((a.r_a - 1e-4).abs() < 1e-18);
        assert!((a.r_a - a.r_a_predicted).abs() < 1e-18);
    }

    #[test]
    fn avalanche_beta_n_is_negative() {
        let a = avalanche_relations(1.0, 1.0, 1.0, 2, Rational::from_integer(2)).unwrap();
        assert_eq!(a.beta_n, Rational::from_integer(-1));
        assert_eq!(a.r_a_predicted, 1.0);
        assert_eq!(a.n_estimate, 1.0);
        let b = avalanche_relations(1.0, 1.0, 10.0, 3, Rational::new(3, 2)).unwrap();
        assert_eq!(b.beta_n, Rational::from_integer(-2));
        assert!((b.n_estimate - 10f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn avalanche_domain_errors() {
        let one = Rational::from_integer(1);
        match avalanche_relations(1.0, 0.0, 10.0, 2, one) {
            Err(Error::Domain(m)) => assert_eq!(m, "no dissipation channel"),
            other => panic!("{other:?}"),
        }
        assert!(avalanche_relations(-1.0, 1.0, 10.0, 2, one).is_err());
        assert!(avalanche_relations(1.0, 1.0, 0.5, 2, one).is_err());
        assert!(avalanche_relations(1.0, 1.0, 10.0, 4, one).is_err());
        assert!(avalanche_relations(1.0, 1.0, 10.0, 2, Rational::zero()).is_err());
    }

    #[test]
    fn closure_signs() {
        let k = ClosureRelation::k41(Rational::from_integer(3)).unwrap();
        assert_eq!(k.beta_n, Rational::new(4, 9));
        let a = ClosureRelation::avalanche(2, Rational::new(1, 2)).unwrap();
        assert_eq!(a.beta_n, Rational::from_integer(-4));
        assert!(ClosureRelation::new(Rational::from_integer(1), Rational::from_integer(-1)).is_err());
    }

    #[test]
    fn regime_examples() {
        let c = |h| classify_drive_regime(h, 4.0, 100.0, 2, 0.5).unwrap();
        assert_eq!(c(0.1), DriveRegime::Sdidt);
        assert_eq!(c(16.0), DriveRegime::Intermediate);
        assert_eq!(c(4e4 * 0.6), DriveRegime::Laminar);
        // boundaries are inclusive on both ends
        assert_eq!(c(2.0), DriveRegime::Sdidt);
        assert_eq!(c(2e4), DriveRegime::Laminar);
    }

    #[test]
    fn regime_rejects_bad_margin() {
        assert!(classify_drive_regime(1.0, 4.0, 100.0, 2, 1.0).is_err());
        assert!(classify_drive_regime(1.0, 4.0, 100.0, 2, 0.0).is_err());
        assert!(classify_drive_regime(0.0, 4.0, 100.0, 2, 0.5).is_err());
    }
}

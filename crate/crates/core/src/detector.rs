//! System detection-efficiency bookkeeping.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectorError {
    #[error("{name} = {value} is not a fraction in [0, 1]")]
    NotAFraction { name: &'static str, value: f64 },
    #[error("{name} = {value} must be non-negative and finite")]
    NegativeRate { name: &'static str, value: f64 },
    #[error("photon flux must be positive, got {0}")]
    NonPositiveFlux(f64),
    #[error("curve is empty")]
    EmptyCurve,
    #[error("dark-count rates must be strictly increasing (point {index})")]
    NotIncreasing { index: usize },
    #[error("log interpolation needs positive dark-count rates (point {index})")]
    NonPositiveRate { index: usize },
    #[error("dark rate {query} c/s outside curve range [{min}, {max}], refusing to extrapolate")]
    ExtrapolationRefused { query: f64, min: f64, max: f64 },
    #[error("baseline efficiency is zero, ratio undefined")]
    ZeroBaseline,
}

fn fraction(name: &'static str, value: f64) -> Result<f64, DetectorError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(DetectorError::NotAFraction { name, value })
    }
}

/// System DE as the product of coupling, absorption and pulse-generation
/// probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DEBudget {
    pub coupling: f64,
    pub absorptance: f64,
    pub intrinsic: f64,
    pub wavelength_nm: f64,
}

impl DEBudget {
    pub fn new(coupling: f64, absorptance: f64, intrinsic: f64, wavelength_nm: f64) -> Result<Self, DetectorError> {
        let budget = Self { coupling, absorptance, intrinsic, wavelength_nm };
        budget.validate()?;
        Ok(budget)
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        fraction("coupling", self.coupling)?;
        fraction("absorptance", self.absorptance)?;
        fraction("intrinsic", self.intrinsic)?;
        Ok(())
    }

    /// Intrinsic efficiency needed for the budget to reach `system_de`.
    /// Values above 1 mean the other two factors cannot explain it.
    pub fn required_intrinsic(coupling: f64, absorptance: f64, system_de: f64) -> Result<f64, DetectorError> {
        fraction("coupling", coupling)?;
        fraction("absorptance", absorptance)?;
        fraction("system_de", system_de)?;
        let optical = coupling * absorptance;
        if optical == 0.0 {
            return Err(DetectorError::ZeroBaseline);
        }
        Ok(system_de / optical)
    }
}

pub fn system_de(budget: &DEBudget) -> Result<f64, DetectorError> {
    budget.validate()?;
    Ok(budget.coupling * budget.absorptance * budget.intrinsic)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountMeasurement {
    pub output_count_rate_cps: f64,
    pub dark_count_rate_cps: f64,
    pub photon_flux_cps: f64,
}

impl CountMeasurement {
    pub fn validate(&self) -> Result<(), DetectorError> {
        for (name, value) in [("output_count_rate_cps", self.output_count_rate_cps), ("dark_count_rate_cps", self.dark_count_rate_cps)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(DetectorError::NegativeRate { name, value });
            }
        }
        if !(self.photon_flux_cps.is_finite() && self.photon_flux_cps > 0.0) {
            return Err(DetectorError::NonPositiveFlux(self.photon_flux_cps));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeEstimate {
    /// Dark-subtracted efficiency, clamped at 0.
    pub de: f64,
    /// Output rate over flux without dark subtraction.
    pub raw_de: f64,
    /// Set when the output rate fell below the dark rate.
    pub below_dark: bool,
}

pub fn de_from_counts(m: &CountMeasurement) -> Result<DeEstimate, DetectorError> {
    m.validate()?;
    let signal = m.output_count_rate_cps - m.dark_count_rate_cps;
    Ok(DeEstimate {
        de: (signal / m.photon_flux_cps).max(0.0),
        raw_de: m.output_count_rate_cps / m.photon_flux_cps,
        below_dark: signal < 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    LogRate,
    LinearRate,
}

/// Measured DE versus dark-count rate for one device and wavelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DECurve {
    pub points: Vec<(f64, f64)>,
    pub label: String,
    pub wavelength_nm: f64,
}

impl DECurve {
    pub fn new(points: Vec<(f64, f64)>, label: impl Into<String>, wavelength_nm: f64) -> Result<Self, DetectorError> {
        let curve = Self { points, label: label.into(), wavelength_nm };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        if self.points.is_empty() {
            return Err(DetectorError::EmptyCurve);
        }
        let mut prev = f64::NEG_INFINITY;
        for (index, &(rate, de)) in self.points.iter().enumerate() {
            if !(rate.is_finite() && rate >= 0.0) {
                return Err(DetectorError::NegativeRate { name: "dark_count_rate_cps", value: rate });
            }
            if rate <= prev {
                return Err(DetectorError::NotIncreasing { index });
            }
            fraction("de", de)?;
            prev = rate;
        }
        Ok(())
    }

    pub fn range(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }
}

/// DE at a dark-count rate inside the curve's measured range.
pub fn de_at_dark_rate(curve: &DECurve, dark_rate_cps: f64, mode: Interpolation) -> Result<f64, DetectorError> {
    curve.validate()?;
    let (min, max) = curve.range();
    if !(dark_rate_cps >= min && dark_rate_cps <= max) {
        return Err(DetectorError::ExtrapolationRefused { query: dark_rate_cps, min, max });
    }
    if mode == Interpolation::LogRate {
        if let Some(index) = curve.points.iter().position(|p| p.0 <= 0.0) {
            return Err(DetectorError::NonPositiveRate { index });
        }
    }
    let upper = curve.points.partition_point(|p| p.0 < dark_rate_cps);
    let (x1, y1) = curve.points[upper];
    if x1 == dark_rate_cps || upper == 0 {
        return Ok(y1);
    }
    let (x0, y0) = curve.points[upper - 1];
    let t = match mode {
        Interpolation::LogRate => (dark_rate_cps / x0).ln() / (x1 / x0).ln(),
        Interpolation::LinearRate => (dark_rate_cps - x0) / (x1 - x0),
    };
    Ok(y0 + t.clamp(0.0, 1.0) * (y1 - y0))
}

/// Ratio of the efficiency after a modification to the one before it.
pub fn enhancement_factor(de_after: f64, de_before: f64) -> Result<f64, DetectorError> {
    if de_before == 0.0 {
        return Err(DetectorError::ZeroBaseline);
    }
    fraction("de_after", de_after)?;
    fraction("de_before", de_before)?;
    Ok(de_after / de_before)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_products() {
        assert_eq!(system_de(&DEBudget::new(1.0, 1.0, 1.0, 1550.0).unwrap()).unwrap(), 1.0);
        let optical = system_de(&DEBudget::new(0.984, 0.32, 1.0, 1550.0).unwrap()).unwrap();
        assert!((optical - 0.31488).abs() < 1e-12);
        let x = DEBudget::required_intrinsic(0.984, 0.32, 0.025).unwrap();
        assert!((x - 0.0794).abs() < 5e-5);
        assert_eq!(system_de(&DEBudget::new(0.0, 0.5, 0.5, 1550.0).unwrap()).unwrap(), 0.0);
        assert!(DEBudget::new(1.1, 0.5, 0.5, 1550.0).is_err());
    }

    #[test]
    fn counts_to_de() {
        let m = |o, d, f| CountMeasurement { output_count_rate_cps: o, dark_count_rate_cps: d, photon_flux_cps: f };
        let e = de_from_counts(&m(1.0e5, 100.0, 1.0e6)).unwrap();
        assert!((e.de - 0.0999).abs() < 1e-15);
        assert!((e.raw_de - 0.1).abs() < 1e-15);
        assert!(!e.below_dark);
        assert_eq!(de_from_counts(&m(100.0, 100.0, 1.0e6)).unwrap().de, 0.0);
        assert!((de_from_counts(&m(2.5e4, 0.0, 1.0e6)).unwrap().de - 0.025).abs() < 1e-15);

        let below = de_from_counts(&m(50.0, 100.0, 1.0e6)).unwrap();
        assert_eq!(below.de, 0.0);
        assert!(below.below_dark);

        assert_eq!(de_from_counts(&m(1.0, 0.0, 0.0)), Err(DetectorError::NonPositiveFlux(0.0)));
        assert!(de_from_counts(&m(-1.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn interpolation() {
        let curve = DECurve::new(vec![(10.0, 0.06), (1000.0, 0.12)], "dev", 1550.0).unwrap();
        assert!((de_at_dark_rate(&curve, 100.0, Interpolation::LogRate).unwrap() - 0.09).abs() < 1e-12);
        assert_eq!(de_at_dark_rate(&curve, 10.0, Interpolation::LogRate).unwrap(), 0.06);
        assert_eq!(de_at_dark_rate(&curve, 1000.0, Interpolation::LogRate).unwrap(), 0.12);
        let lin = de_at_dark_rate(&curve, 505.0, Interpolation::LinearRate).unwrap();
        assert!((lin - 0.09).abs() < 1e-12);
        assert!(matches!(de_at_dark_rate(&curve, 5.0, Interpolation::LogRate), Err(DetectorError::ExtrapolationRefused { .. })));
        assert!(matches!(de_at_dark_rate(&curve, 1e4, Interpolation::LinearRate), Err(DetectorError::ExtrapolationRefused { .. })));
    }

    #[test]
    fn log_mode_rejects_zero_rate() {
        let curve = DECurve::new(vec![(0.0, 0.01), (10.0, 0.05)], "dev", 1550.0).unwrap();
        assert_eq!(de_at_dark_rate(&curve, 5.0, Interpolation::LogRate), Err(DetectorError::NonPositiveRate { index: 0 }));
        assert!((de_at_dark_rate(&curve, 5.0, Interpolation::LinearRate).unwrap() - 0.03).abs() < 1e-12);
    }

    #[test]
    fn curve_validation() {
        assert_eq!(DECurve::new(vec![], "x", 1550.0), Err(DetectorError::EmptyCurve));
        assert_eq!(DECurve::new(vec![(10.0, 0.1), (10.0, 0.2)], "x", 1550.0), Err(DetectorError::NotIncreasing { index: 1 }));
        assert!(DECurve::new(vec![(10.0, 1.5)], "x", 1550.0).is_err());
    }

    #[test]
    fn enhancement() {
        assert_eq!(enhancement_factor(0.095, 0.025).unwrap(), 0.095 / 0.025);
        assert!((enhancement_factor(0.095, 0.025).unwrap() - 3.8).abs() < 1e-12);
        assert!((enhancement_factor(0.25, 0.05).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(enhancement_factor(0.3, 0.3).unwrap(), 1.0);
        assert_eq!(enhancement_factor(0.3, 0.0), Err(DetectorError::ZeroBaseline));
    }
}

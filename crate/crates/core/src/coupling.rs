//! Gaussian-beam coupling from a single-mode fiber onto the nanowire area.
//!
//! The fiber output is treated as a Gaussian beam with waist `ω₀ = MFD/2` at
//! the fiber end. The spot radius is evaluated at the optical path length
//! `L_air + n·L_sub` and the captured power is the Gaussian intensity
//! integrated over the aperture.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("substrate index must be >= 1, got {0}")]
    SubstrateIndex(f64),
    #[error("thickness list is empty")]
    EmptyThicknessList,
}

/// Region of the focal plane counted as coupled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Aperture {
    /// `1 − exp(−2r²/ω²)` with `r` the full side of the active area.
    PaperDisk { r_um: f64 },
    /// Centered disk of the given radius.
    Disk { radius_um: f64 },
    /// Centered square of the given side.
    Square { side_um: f64 },
}

impl Aperture {
    pub fn dimension_um(&self) -> f64 {
        match *self {
            Aperture::PaperDisk { r_um } => r_um,
            Aperture::Disk { radius_um } => radius_um,
            Aperture::Square { side_um } => side_um,
        }
    }

    pub fn with_dimension(&self, value: f64) -> Self {
        match self {
            Aperture::PaperDisk { .. } => Aperture::PaperDisk { r_um: value },
            Aperture::Disk { .. } => Aperture::Disk { radius_um: value },
            Aperture::Square { .. } => Aperture::Square { side_um: value },
        }
    }

    /// Fraction of a Gaussian beam of radius `w` falling inside the aperture.
    pub fn captured_fraction(&self, w: f64) -> f64 {
        match *self {
            Aperture::PaperDisk { r_um: r } | Aperture::Disk { radius_um: r } => -(-2.0 * r * r / (w * w)).exp_m1(),
            Aperture::Square { side_um } => {
                let one_axis = erf(SQRT_2 * 0.5 * side_um / w);
                one_axis * one_axis
            }
        }
    }
}

/// How the beam propagation distance is derived from the gap and substrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathConvention {
    /// `L_air + n·L_sub`.
    #[default]
    OpticalPath,
    /// `L_air + L_sub/n`, the paraxial reduced distance.
    ReducedPath,
}

/// Low-temperature fiber-to-substrate gap.
pub const L_AIR_COLD_UM: f64 = 20.0;
/// Room-temperature fiber-to-substrate gap.
pub const L_AIR_WARM_UM: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    pub wavelength_um: f64,
    pub mfd_um: f64,
    pub l_air_um: f64,
    pub l_sub_um: f64,
    pub n_sub: f64,
    pub aperture: Aperture,
    #[serde(default)]
    pub path: PathConvention,
}

impl Default for BeamGeometry {
    /// SMF-28-like fiber at 1550 nm, cold gap, 45 μm MgO, 15 μm active area.
    fn default() -> Self {
        Self {
            wavelength_um: 1.55,
            mfd_um: 10.6,
            l_air_um: L_AIR_COLD_UM,
            l_sub_um: 45.0,
            n_sub: 1.7,
            aperture: Aperture::PaperDisk { r_um: 15.0 },
            path: PathConvention::OpticalPath,
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), CouplingError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(CouplingError::NonPositive { name, value })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<(), CouplingError> {
    if value >= 0.0 && !value.is_nan() {
        Ok(())
    } else {
        Err(CouplingError::Negative { name, value })
    }
}

impl BeamGeometry {
    pub fn validate(&self) -> Result<(), CouplingError> {
        positive("wavelength_um", self.wavelength_um)?;
        positive("mfd_um", self.mfd_um)?;
        non_negative("l_air_um", self.l_air_um)?;
        non_negative("l_sub_um", self.l_sub_um)?;
        if !(self.n_sub >= 1.0 && self.n_sub.is_finite()) {
            return Err(CouplingError::SubstrateIndex(self.n_sub));
        }
        let dim = self.aperture.dimension_um();
        if !(dim > 0.0) {
            return Err(CouplingError::NonPositive { name: "aperture dimension", value: dim });
        }
        Ok(())
    }

    pub fn waist_um(&self) -> f64 {
        0.5 * self.mfd_um
    }

    pub fn with_substrate(&self, l_sub_um: f64) -> Self {
        Self { l_sub_um, ..*self }
    }

    /// Distance at which the spot radius is evaluated, per [`PathConvention`].
    pub fn propagation_distance_um(&self) -> f64 {
        match self.path {
            PathConvention::OpticalPath => optical_path_length(self),
            PathConvention::ReducedPath => self.l_air_um + self.l_sub_um / self.n_sub,
        }
    }
}

/// Gaussian spot radius `ω(x) = ω₀·√(1 + (λx/πω₀²)²)`.
pub fn spot_radius(w0_um: f64, wavelength_um: f64, x_um: f64) -> Result<f64, CouplingError> {
    positive("w0_um", w0_um)?;
    positive("wavelength_um", wavelength_um)?;
    non_negative("x_um", x_um)?;
    let rayleigh = PI * w0_um * w0_um / wavelength_um;
    Ok(w0_um * (x_um / rayleigh).hypot(1.0))
}

/// `L_air + n_sub·L_sub`, regardless of the configured path convention.
pub fn optical_path_length(geom: &BeamGeometry) -> f64 {
    geom.l_air_um + geom.n_sub * geom.l_sub_um
}

pub fn coupled_fraction(geom: &BeamGeometry) -> Result<f64, CouplingError> {
    geom.validate()?;
    let w = spot_radius(geom.waist_um(), geom.wavelength_um, geom.propagation_distance_um())?;
    Ok(geom.aperture.captured_fraction(w).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingPoint {
    pub l_sub_um: f64,
    pub l_opt_um: f64,
    pub eta: f64,
    /// `eta` divided by the value at the thickest substrate in the sweep.
    pub eta_normalized: f64,
}

/// Coupling efficiency for each substrate thickness, in input order.
pub fn coupling_curve(geom_template: &BeamGeometry, substrate_thicknesses_um: &[f64]) -> Result<Vec<CouplingPoint>, CouplingError> {
    if substrate_thicknesses_um.is_empty() {
        return Err(CouplingError::EmptyThicknessList);
    }
    let mut points = substrate_thicknesses_um
        .iter()
        .map(|&t| {
            non_negative("substrate thickness", t)?;
            let geom = geom_template.with_substrate(t);
            Ok(CouplingPoint { l_sub_um: t, l_opt_um: optical_path_length(&geom), eta: coupled_fraction(&geom)?, eta_normalized: f64::NAN })
        })
        .collect::<Result<Vec<_>, CouplingError>>()?;

    // First occurrence of the largest thickness is the reference.
    let reference = points
        .iter()
        .fold(None::<&CouplingPoint>, |acc, p| match acc {
            Some(a) if a.l_sub_um >= p.l_sub_um => Some(a),
            _ => Some(p),
        })
        .map(|p| p.eta)
        .unwrap_or(f64::NAN);
    for p in &mut points {
        p.eta_normalized = p.eta / reference;
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spot_radius_anchors() {
        assert_eq!(spot_radius(5.3, 1.55, 0.0).unwrap(), 5.3);
        let zr = PI * 5.3 * 5.3 / 1.55;
        assert!((zr - 56.93).abs() < 0.01);
        assert!((spot_radius(5.3, 1.55, zr).unwrap() - 5.3 * SQRT_2).abs() < 1e-12);
        let w = spot_radius(5.3, 1.55, 96.5).unwrap();
        assert!((w - 10.4302).abs() < 1e-4);
        assert!((w * w - 108.789).abs() < 1e-3);
        assert!(spot_radius(0.0, 1.55, 1.0).is_err());
        assert!(spot_radius(5.3, -1.0, 1.0).is_err());
        assert!(spot_radius(5.3, 1.55, -1.0).is_err());
    }

    #[test]
    fn optical_path_examples() {
        let g = BeamGeometry::default();
        assert!((optical_path_length(&g) - 96.5).abs() < 1e-12);
        assert!((optical_path_length(&g.with_substrate(400.0)) - 700.0).abs() < 1e-12);
        let zero = BeamGeometry { l_air_um: 0.0, l_sub_um: 0.0, ..g };
        assert_eq!(optical_path_length(&zero), 0.0);
    }

    #[test]
    fn paper_geometry_coupling() {
        let g = BeamGeometry::default();
        assert!((coupled_fraction(&g).unwrap() - 0.9840).abs() < 5e-5);
        assert!((coupled_fraction(&g.with_substrate(400.0)).unwrap() - 0.0999).abs() < 5e-5);
        let square = BeamGeometry { aperture: Aperture::Square { side_um: 15.0 }, ..g };
        let w = spot_radius(5.3, 1.55, 96.5).unwrap();
        let expected = erf(SQRT_2 * 7.5 / w).powi(2);
        assert!((coupled_fraction(&square).unwrap() - expected).abs() < 1e-15);
        // Frozen from 2-D quadrature of the Gaussian over the square.
        assert!((coupled_fraction(&square).unwrap() - 0.7218).abs() < 5e-5);
    }

    #[test]
    fn infinite_aperture_captures_everything() {
        for aperture in [
            Aperture::PaperDisk { r_um: f64::INFINITY },
            Aperture::Disk { radius_um: f64::INFINITY },
            Aperture::Square { side_um: f64::INFINITY },
        ] {
            let g = BeamGeometry { aperture, ..BeamGeometry::default() };
            assert_eq!(coupled_fraction(&g).unwrap(), 1.0);
        }
    }

    #[test]
    fn reduced_path_is_shorter() {
        let g = BeamGeometry { path: PathConvention::ReducedPath, ..BeamGeometry::default() };
        assert!((g.propagation_distance_um() - (20.0 + 45.0 / 1.7)).abs() < 1e-12);
        assert!(coupled_fraction(&g).unwrap() > coupled_fraction(&BeamGeometry::default()).unwrap());
    }

    #[test]
    fn curve_examples() {
        let g = BeamGeometry::default();
        let curve = coupling_curve(&g, &[45.0, 100.0, 200.0, 400.0]).unwrap();
        assert!(curve.windows(2).all(|w| w[1].eta < w[0].eta));
        assert_eq!(curve[3].eta_normalized, 1.0);

        let single = coupling_curve(&g, &[45.0]).unwrap();
        assert_eq!(single[0].eta_normalized, 1.0);

        let pair = coupling_curve(&g, &[45.0, 400.0]).unwrap();
        assert!((pair[0].eta_normalized - 9.85).abs() < 0.01);

        assert_eq!(coupling_curve(&g, &[]), Err(CouplingError::EmptyThicknessList));
        assert!(coupling_curve(&g, &[45.0, -1.0]).is_err());
    }

    #[test]
    fn validation() {
        let g = BeamGeometry::default();
        assert!(coupled_fraction(&BeamGeometry { n_sub: 0.9, ..g }).is_err());
        assert!(coupled_fraction(&BeamGeometry { mfd_um: 0.0, ..g }).is_err());
        assert!(coupled_fraction(&BeamGeometry { l_air_um: -1.0, ..g }).is_err());
        assert!(coupled_fraction(&BeamGeometry { aperture: Aperture::Disk { radius_um: 0.0 }, ..g }).is_err());
    }
}

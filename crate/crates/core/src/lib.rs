//! Design and analysis toolkit for fiber-coupled optical-cavity superconducting
//! nanowire single-photon detectors (OC-SNSPDs).
//!
//! The crate is split along the physical pieces of the detection-efficiency
//! budget:
//!
//! - [`optics`]: normal-incidence transfer-matrix response of the
//!   mirror/cavity/nanowire multilayer, with per-layer absorptance.
//! - [`coupling`]: Gaussian-beam coupling from the fiber end through the air
//!   gap and the thinned substrate onto the active area.
//! - [`interferometry`]: swept-wavelength back-reflection spectra and fringe
//!   inversion to surface separations.
//! - [`detector`]: efficiency budget, count-rate reduction, dark-rate
//!   interpolation and enhancement factors.
//! - [`design`]: grid + golden-section thickness optimization.
//! - [`config`], [`io`]: run configuration, material tables and CSV formats
//!   used by the `ocsnspd` command-line tool.

// Validation is written as `!(x > 0.0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod coupling;
pub mod design;
pub mod detector;
pub mod interferometry;
pub mod io;
mod numeric;
pub mod optics;

pub use coupling::{Aperture, BeamGeometry, CouplingPoint, PathConvention};
pub use detector::{CountMeasurement, DEBudget, DECurve};
pub use interferometry::{FringeAnalysis, ReflectionSpectrum, SurfaceModel};
pub use optics::{ComplexIndex, Layer, Stack, StackResponse};

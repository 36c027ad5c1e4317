//! Normal-incidence thin-film optics.
//!
//! Stacks are solved with the characteristic-matrix method using the
//! `N = n + ik` sign convention (fields vary as `exp(i(Nk₀z − ωt))`).
//! Tangential fields are propagated from the exit medium back to the incident
//! medium; per-layer absorptance is the drop in normal Poynting flux across
//! each layer. Fields are renormalized after every layer so that thick,
//! strongly absorbing stacks do not overflow.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{bisect_increasing, golden_section_max};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpticsError {
    #[error("wavelength must be positive and finite, got {0} nm")]
    NonPositiveWavelength(f64),
    #[error("incident medium must be lossless, got k = {0}")]
    LossyIncidentMedium(f64),
    #[error("stack has no layers")]
    EmptyStack,
    #[error("invalid complex index n = {n}, k = {k} (need n > 0, k >= 0)")]
    InvalidIndex { n: f64, k: f64 },
    #[error("layer `{label}` has invalid thickness {thickness_nm} nm")]
    InvalidThickness { label: String, thickness_nm: f64 },
    #[error("target absorptance {0} outside [0, 1)")]
    InvalidTarget(f64),
    #[error("target absorptance {target} unreachable: film absorptance peaks at {ceiling:.6} for k in [0, 50]")]
    UnreachableTarget { target: f64, ceiling: f64 },
}

/// Complex refractive index `n + ik`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexIndex {
    pub n: f64,
    #[serde(default)]
    pub k: f64,
}

impl ComplexIndex {
    pub fn new(n: f64, k: f64) -> Result<Self, OpticsError> {
        let index = Self { n, k };
        index.validate()?;
        Ok(index)
    }

    pub const fn lossless(n: f64) -> Self {
        Self { n, k: 0.0 }
    }

    pub fn validate(&self) -> Result<(), OpticsError> {
        if self.n.is_finite() && self.n > 0.0 && self.k.is_finite() && self.k >= 0.0 {
            Ok(())
        } else {
            Err(OpticsError::InvalidIndex { n: self.n, k: self.k })
        }
    }

    pub fn is_lossless(&self) -> bool {
        self.k == 0.0
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.n, self.k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub label: String,
    pub thickness_nm: f64,
    pub index: ComplexIndex,
}

impl Layer {
    pub fn new(label: impl Into<String>, thickness_nm: f64, index: ComplexIndex) -> Result<Self, OpticsError> {
        let layer = Self { label: label.into(), thickness_nm, index };
        layer.validate()?;
        Ok(layer)
    }

    pub fn validate(&self) -> Result<(), OpticsError> {
        if !(self.thickness_nm.is_finite() && self.thickness_nm > 0.0) {
            return Err(OpticsError::InvalidThickness { label: self.label.clone(), thickness_nm: self.thickness_nm });
        }
        self.index.validate()
    }
}

/// Layers between two semi-infinite media. `layers[0]` faces the incident
/// medium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stack {
    pub incident: ComplexIndex,
    pub layers: Vec<Layer>,
    pub exit: ComplexIndex,
}

impl Stack {
    pub fn new(incident: ComplexIndex, layers: Vec<Layer>, exit: ComplexIndex) -> Self {
        Self { incident, layers, exit }
    }

    pub fn validate(&self) -> Result<(), OpticsError> {
        self.incident.validate()?;
        self.exit.validate()?;
        if self.incident.k != 0.0 {
            return Err(OpticsError::LossyIncidentMedium(self.incident.k));
        }
        if self.layers.is_empty() {
            return Err(OpticsError::EmptyStack);
        }
        self.layers.iter().try_for_each(Layer::validate)
    }

    /// The same stack seen from the other side. Only meaningful when the exit
    /// medium is lossless.
    pub fn reversed(&self) -> Self {
        Self { incident: self.exit, layers: self.layers.iter().rev().cloned().collect(), exit: self.incident }
    }

    pub fn layer_position(&self, label: &str) -> Option<usize> {
        self.layers.iter().position(|l| l.label == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StackResponse {
    pub wavelength_nm: f64,
    pub reflectance: f64,
    pub transmittance: f64,
    pub absorptance: f64,
    /// Aligned with [`Stack::layers`].
    pub layer_absorptance: Vec<f64>,
}

struct Solution {
    r: Complex64,
    /// Normalized Poynting flux at each boundary, boundary 0 facing the
    /// incident medium, boundary `len` facing the exit medium.
    flux: Vec<f64>,
}

fn solve(stack: &Stack, wavelength_nm: f64) -> Result<Solution, OpticsError> {
    if !(wavelength_nm.is_finite() && wavelength_nm > 0.0) {
        return Err(OpticsError::NonPositiveWavelength(wavelength_nm));
    }
    stack.validate()?;

    let k0 = 2.0 * PI / wavelength_nm;
    let count = stack.layers.len();
    let i = Complex64::i();

    // Fields at every boundary, stored as (E, H, ln scale).
    let mut fields = vec![(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 0.0); count + 1];
    let mut e = Complex64::new(1.0, 0.0);
    let mut h = stack.exit.as_complex();
    let mut log_scale = 0.0;
    fields[count] = (e, h, log_scale);

    for (j, layer) in stack.layers.iter().enumerate().rev() {
        let index = layer.index.as_complex();
        let delta = index * k0 * layer.thickness_nm;
        let (sin, cos) = (delta.sin(), delta.cos());
        let e_left = cos * e - i * sin * h / index;
        let h_left = -i * index * sin * e + cos * h;
        let scale = e_left.norm().max(h_left.norm());
        e = e_left / scale;
        h = h_left / scale;
        log_scale += scale.ln();
        fields[j] = (e, h, log_scale);
    }

    let n0 = stack.incident.n;
    let (e0, h0, log0) = fields[0];
    let incoming = 0.5 * (e0 + h0 / n0);
    let outgoing = 0.5 * (e0 - h0 / n0);
    let r = outgoing / incoming;
    let norm = n0 * incoming.norm_sqr();

    let flux = fields.iter().map(|&(e, h, log)| (e * h.conj()).re * (2.0 * (log - log0)).exp() / norm).collect();

    Ok(Solution { r, flux })
}

/// Reflectance, transmittance and per-layer absorptance at normal incidence.
pub fn stack_response(stack: &Stack, wavelength_nm: f64) -> Result<StackResponse, OpticsError> {
    let solution = solve(stack, wavelength_nm)?;
    let reflectance = solution.r.norm_sqr();
    let transmittance = solution.flux[stack.layers.len()];
    let layer_absorptance = stack
        .layers
        .iter()
        .zip(solution.flux.windows(2))
        .map(|(layer, w)| if layer.index.is_lossless() { 0.0 } else { (w[0] - w[1]).clamp(0.0, 1.0) })
        .collect();
    let absorptance =
        if stack.layers.iter().all(|l| l.index.is_lossless()) { 0.0 } else { (1.0 - reflectance - transmittance).clamp(0.0, 1.0) };
    Ok(StackResponse { wavelength_nm, reflectance, transmittance, absorptance, layer_absorptance })
}

/// Complex amplitude reflection coefficient of the stack, seen from the
/// incident medium.
pub fn reflection_amplitude(stack: &Stack, wavelength_nm: f64) -> Result<Complex64, OpticsError> {
    solve(stack, wavelength_nm).map(|s| s.r)
}

/// Amplitude reflection coefficient of a bare interface from `from` into `to`.
pub fn fresnel_amplitude(from: ComplexIndex, to: ComplexIndex) -> Complex64 {
    let (a, b) = (from.as_complex(), to.as_complex());
    (a - b) / (a + b)
}

pub fn quarter_wave_thickness(index: ComplexIndex, wavelength_nm: f64) -> Result<f64, OpticsError> {
    if !(wavelength_nm.is_finite() && wavelength_nm > 0.0) {
        return Err(OpticsError::NonPositiveWavelength(wavelength_nm));
    }
    index.validate()?;
    Ok(wavelength_nm / (4.0 * index.n))
}

/// Upper end of the extinction-coefficient search bracket.
pub const EXTINCTION_BRACKET_MAX: f64 = 50.0;

/// Absorptance of a single film on a semi-infinite substrate, illuminated
/// from vacuum on the film side.
pub fn bare_film_absorptance(
    film: ComplexIndex,
    film_thickness_nm: f64,
    substrate: ComplexIndex,
    wavelength_nm: f64,
) -> Result<f64, OpticsError> {
    let stack = Stack::new(ComplexIndex::lossless(1.0), vec![Layer::new("film", film_thickness_nm, film)?], substrate);
    Ok(stack_response(&stack, wavelength_nm)?.layer_absorptance[0])
}

/// Chooses the film's extinction coefficient so that the bare film absorbs
/// `target_absorptance`, keeping `base.n` fixed.
///
/// Film absorptance rises with k and then falls again once the film turns
/// reflective, so the search first locates the absorptance peak inside
/// `[0, 50]` and then bisects on the rising branch to 1e-9 in k.
pub fn fit_extinction(
    base: ComplexIndex,
    film_thickness_nm: f64,
    substrate: ComplexIndex,
    target_absorptance: f64,
    wavelength_nm: f64,
) -> Result<ComplexIndex, OpticsError> {
    if !(target_absorptance.is_finite() && (0.0..1.0).contains(&target_absorptance)) {
        return Err(OpticsError::InvalidTarget(target_absorptance));
    }
    ComplexIndex::lossless(base.n).validate()?;
    let absorptance = |k: f64| bare_film_absorptance(ComplexIndex { n: base.n, k }, film_thickness_nm, substrate, wavelength_nm);
    // Surface argument errors before searching.
    absorptance(0.0)?;
    if target_absorptance == 0.0 {
        return Ok(ComplexIndex::lossless(base.n));
    }

    let eval = |k: f64| absorptance(k).unwrap_or(f64::NAN);
    const GRID: usize = 500;
    let step = EXTINCTION_BRACKET_MAX / GRID as f64;
    let (peak_i, _) =
        (0..=GRID).map(|i| (i, eval(i as f64 * step))).fold((0, f64::NEG_INFINITY), |best, (i, a)| if a > best.1 { (i, a) } else { best });
    let lo = (peak_i.saturating_sub(1)) as f64 * step;
    let hi = ((peak_i + 1).min(GRID)) as f64 * step;
    let (k_peak, ceiling) =
        golden_section_max(eval, lo, hi, 1e-10, |_, _| {}).map_err(|_| OpticsError::InvalidIndex { n: base.n, k: f64::NAN })?;
    let (k_peak, ceiling) =
        if eval(peak_i as f64 * step) > ceiling { (peak_i as f64 * step, eval(peak_i as f64 * step)) } else { (k_peak, ceiling) };
    if target_absorptance > ceiling {
        return Err(OpticsError::UnreachableTarget { target: target_absorptance, ceiling });
    }

    let k = bisect_increasing(eval, target_absorptance, 0.0, k_peak, 1e-9);
    Ok(ComplexIndex { n: base.n, k })
}

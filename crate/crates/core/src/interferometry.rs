//! Swept-wavelength back-reflection metrology.
//!
//! Three reflecting surfaces (fiber end, substrate rear face, substrate front
//! face carrying the cavity) interfere in the back-reflected power. Each pair
//! of surfaces contributes a fringe that is periodic in wavenumber `1/λ` with
//! period `1/(2D)`, where `D` is the optical distance between the surfaces.
//! [`analyze_fringes`] recovers those distances from a sampled spectrum;
//! [`resolve_surfaces`] additionally imposes the three-surface structure
//! (distances `a`, `b`, `a + b`) so that components closer than one
//! resolution cell can still be separated.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;
use thiserror::Error;

/// Minimum number of samples accepted by the analyzers.
pub const MIN_SAMPLES: usize = 16;
/// Components weaker than this fraction of the strongest spectral peak are
/// discarded.
pub const RELATIVE_THRESHOLD: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterferometryError {
    #[error("wavelength range [{min}, {max}] nm is empty")]
    EmptyRange { min: f64, max: f64 },
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("surface model invalid: {0}")]
    InvalidModel(String),
    #[error("sample {index}: wavelengths must be positive and strictly increasing")]
    NotIncreasing { index: usize },
    #[error("sample {index}: power must be finite and non-negative")]
    InvalidPower { index: usize },
    #[error("spectrum has {samples} samples, at least {required} are needed")]
    InsufficientData { samples: usize, required: usize },
    #[error("no significant fringe found in spectrum")]
    NoFringe,
}

impl InterferometryError {
    /// Analysis failures as opposed to malformed input.
    pub fn is_analysis_failure(&self) -> bool {
        matches!(self, InterferometryError::InsufficientData { .. } | InterferometryError::NoFringe)
    }
}

/// Single-pass three-surface reflection model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceModel {
    /// Amplitude reflectances of fiber end, substrate rear and substrate
    /// front, in that order.
    pub reflectances: [Complex64; 3],
    pub l_air_um: f64,
    pub l_sub_um: f64,
    pub n_sub: f64,
}

impl SurfaceModel {
    pub fn validate(&self) -> Result<(), InterferometryError> {
        if let Some(i) = self.reflectances.iter().position(|r| !(r.norm() <= 1.0)) {
            return Err(InterferometryError::InvalidModel(format!("|r{}| = {} exceeds 1", i + 1, self.reflectances[i].norm())));
        }
        for (name, v) in [("l_air_um", self.l_air_um), ("l_sub_um", self.l_sub_um)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(InterferometryError::InvalidModel(format!("{name} = {v} must be non-negative")));
            }
        }
        if !(self.n_sub > 0.0 && self.n_sub.is_finite()) {
            return Err(InterferometryError::InvalidModel(format!("n_sub = {} must be positive", self.n_sub)));
        }
        Ok(())
    }

    /// Back-reflected power at one wavelength.
    pub fn power(&self, wavelength_nm: f64) -> f64 {
        let [r1, r2, r3] = self.reflectances;
        let phi_air = 4.0 * PI * self.l_air_um * 1e3 / wavelength_nm;
        let phi_sub = 4.0 * PI * self.n_sub * self.l_sub_um * 1e3 / wavelength_nm;
        (r1 + r2 * Complex64::cis(phi_air) + r3 * Complex64::cis(phi_air + phi_sub)).norm_sqr()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReflectionSpectrum {
    samples: Vec<(f64, f64)>,
}

impl ReflectionSpectrum {
    /// `(wavelength_nm, power)` pairs with strictly increasing wavelength.
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self, InterferometryError> {
        let mut prev = 0.0;
        for (index, &(wl, p)) in samples.iter().enumerate() {
            if !(wl.is_finite() && wl > prev) {
                return Err(InterferometryError::NotIncreasing { index });
            }
            if !(p.is_finite() && p >= 0.0) {
                return Err(InterferometryError::InvalidPower { index });
            }
            prev = wl;
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, InterferometryError> {
        Self::new(self.samples.iter().map(|&(wl, p)| (wl, p * factor)).collect())
    }
}

pub fn synthesize_spectrum(
    model: &SurfaceModel,
    wavelength_range_nm: (f64, f64),
    step_nm: f64,
) -> Result<ReflectionSpectrum, InterferometryError> {
    let (min, max) = wavelength_range_nm;
    if !(min.is_finite() && max.is_finite() && min > 0.0 && min < max) {
        return Err(InterferometryError::EmptyRange { min, max });
    }
    if !(step_nm.is_finite() && step_nm > 0.0) {
        return Err(InterferometryError::NonPositive { name: "step_nm", value: step_nm });
    }
    model.validate()?;
    let count = ((max - min) / step_nm * (1.0 + 1e-12)).floor() as usize + 1;
    let samples = (0..count)
        .map(|i| {
            let wl = min + i as f64 * step_nm;
            (wl, model.power(wl))
        })
        .collect();
    ReflectionSpectrum::new(samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringeComponent {
    pub delta_lambda_nm: f64,
    pub optical_distance_um: f64,
    /// Spectral power relative to the strongest component.
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FringeAnalysis {
    /// Sorted by optical distance.
    pub components: Vec<FringeComponent>,
    pub mean_lambda_nm: f64,
}

impl FringeAnalysis {
    pub fn strongest(&self) -> Option<&FringeComponent> {
        self.components.iter().max_by(|a, b| a.strength.total_cmp(&b.strength))
    }
}

/// `d = λ̄²/(2nΔλ)`, returned in μm.
pub fn thickness_from_fringe(delta_lambda_nm: f64, mean_lambda_nm: f64, n: f64) -> Result<f64, InterferometryError> {
    for (name, value) in [("delta_lambda_nm", delta_lambda_nm), ("mean_lambda_nm", mean_lambda_nm), ("n", n)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(InterferometryError::NonPositive { name, value });
        }
    }
    Ok(mean_lambda_nm * mean_lambda_nm / (2.0 * n * delta_lambda_nm) * 1e-3)
}

/// Fringe spacing produced by an optical distance at the given mean
/// wavelength.
pub fn fringe_spacing_nm(optical_distance_um: f64, mean_lambda_nm: f64) -> f64 {
    mean_lambda_nm * mean_lambda_nm / (2.0 * optical_distance_um * 1e3)
}

/// Power resampled on a uniform wavenumber grid.
struct WavenumberSeries {
    /// Wavenumber offsets from the grid center, nm⁻¹.
    offsets: Vec<f64>,
    step: f64,
    power: Vec<f64>,
    mean_lambda_nm: f64,
}

impl WavenumberSeries {
    fn from_spectrum(spectrum: &ReflectionSpectrum) -> Result<Self, InterferometryError> {
        let samples = spectrum.samples();
        if samples.len() < MIN_SAMPLES {
            return Err(InterferometryError::InsufficientData { samples: samples.len(), required: MIN_SAMPLES });
        }
        let (wl_min, wl_max) = (samples[0].0, samples[samples.len() - 1].0);
        let mean_lambda_nm = 0.5 * (wl_min + wl_max);

        // Ascending wavenumber.
        let nu: Vec<f64> = samples.iter().rev().map(|s| 1.0 / s.0).collect();
        let p: Vec<f64> = samples.iter().rev().map(|s| s.1).collect();
        let count = samples.len();
        let (nu_lo, nu_hi) = (nu[0], nu[count - 1]);
        let step = (nu_hi - nu_lo) / (count - 1) as f64;
        let center = 0.5 * (nu_lo + nu_hi);

        let mut power = Vec::with_capacity(count);
        let mut j = 0;
        for i in 0..count {
            let x = if i + 1 == count { nu_hi } else { nu_lo + i as f64 * step };
            while j + 2 < count && nu[j + 1] < x {
                j += 1;
            }
            let (x0, x1) = (nu[j], nu[j + 1]);
            let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
            power.push(p[j] + t * (p[j + 1] - p[j]));
        }
        let offsets = (0..count).map(|i| nu_lo + i as f64 * step - center).collect();
        Ok(Self { offsets, step, power, mean_lambda_nm })
    }

    fn span(&self) -> f64 {
        self.step * (self.power.len() - 1) as f64
    }

    /// Optical-distance resolution, μm.
    fn cell_um(&self) -> f64 {
        1.0 / (2.0 * self.span()) * 1e-3
    }

    /// Optical distance at which the sampled fringe aliases, μm.
    fn nyquist_um(&self) -> f64 {
        1.0 / (4.0 * self.step) * 1e-3
    }

    fn is_flat(&self) -> bool {
        let mean = self.power.iter().sum::<f64>() / self.power.len() as f64;
        let scale = self.power.iter().fold(mean.abs(), |m, p| m.max(p.abs()));
        let spread = self.power.iter().fold(0.0_f64, |m, p| m.max((p - mean).abs()));
        !(spread > 1e-9 * scale)
    }

    /// Local maxima of the zero-padded periodogram of `values` (sampled on
    /// this grid) above the relative threshold, as (optical distance μm,
    /// spectral power).
    fn periodogram_peaks(&self, values: &[f64]) -> Vec<(f64, f64)> {
        let count = values.len();
        let mean = values.iter().sum::<f64>() / count as f64;
        let pad = if count <= 1 << 16 { 8 } else { 1 };
        let size = (count * pad).next_power_of_two();
        let mut buffer: Vec<Complex64> = values.iter().map(|p| Complex64::new(p - mean, 0.0)).collect();
        buffer.resize(size, Complex64::new(0.0, 0.0));
        FftPlanner::new().plan_fft_forward(size).process(&mut buffer);

        let density: Vec<f64> = buffer[..=size / 2].iter().map(|c| c.norm_sqr()).collect();
        let top = density.iter().skip(1).cloned().fold(0.0, f64::max);
        if !(top > 0.0) {
            return Vec::new();
        }
        // Bin k is k/(size·step) cycles per nm⁻¹; optical distance is half.
        let bin_um = 1.0 / (size as f64 * self.step) * 0.5 * 1e-3;
        (1..density.len() - 1)
            .filter(|&k| density[k] > density[k - 1] && density[k] >= density[k + 1] && density[k] >= RELATIVE_THRESHOLD * top)
            .map(|k| {
                let (a, b, c) = (density[k - 1], density[k], density[k + 1]);
                let denom = a - 2.0 * b + c;
                let shift = if denom < 0.0 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
                let peak = b - 0.25 * (a - c) * shift;
                ((k as f64 + shift) * bin_um, peak)
            })
            .collect()
    }
}

/// Dot product with independent partial sums, which lets the compiler
/// vectorize the hot loop of the tone fits.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// Least-squares fit of a constant plus one sinusoid per optical distance.
struct ToneFit<'a> {
    series: &'a WavenumberSeries,
}

struct Projection {
    residual: Vec<f64>,
    sum_sq: f64,
    amplitudes: Vec<f64>,
}

impl ToneFit<'_> {
    fn project(&self, distances_um: &[f64]) -> Option<Projection> {
        let s = self.series;
        let rows = s.power.len();
        let mut columns = vec![vec![1.0; rows]];
        for &d in distances_um {
            // Phasor recurrence along the uniform grid.
            let omega = 4.0 * PI * d * 1e3;
            let rotation = Complex64::cis(omega * s.step);
            let (mut re, mut im) = (Vec::with_capacity(rows), Vec::with_capacity(rows));
            let mut phasor = Complex64::cis(omega * s.offsets[0]);
            for i in 0..rows {
                if i % 256 == 0 {
                    phasor = Complex64::cis(omega * s.offsets[i]);
                }
                re.push(phasor.re);
                im.push(phasor.im);
                phasor *= rotation;
            }
            columns.push(re);
            columns.push(im);
        }
        let cols = columns.len();
        let mut gram = DMatrix::<f64>::zeros(cols, cols);
        for i in 0..cols {
            for j in 0..=i {
                let v = dot(&columns[i], &columns[j]);
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        let rhs = DVector::from_iterator(cols, columns.iter().map(|c| dot(c, &s.power)));
        let coeffs = match gram.clone().cholesky() {
            Some(chol) => chol.solve(&rhs),
            // Nearly coincident tones: minimum-norm solution.
            None => {
                let scale = gram.diagonal().max();
                gram.svd(true, true).solve(&rhs, 1e-12 * scale).ok()?
            }
        };
        let mut residual = s.power.clone();
        for (c, column) in coeffs.iter().zip(&columns) {
            for (r, x) in residual.iter_mut().zip(column) {
                *r -= c * x;
            }
        }
        let sum_sq = dot(&residual, &residual);
        let amplitudes = (0..distances_um.len()).map(|t| coeffs[1 + 2 * t].hypot(coeffs[2 + 2 * t])).collect();
        Some(Projection { residual, sum_sq, amplitudes })
    }

    /// Damped Gauss–Newton over `params`, mapped to tone distances by `tones`.
    fn refine<F>(&self, mut params: Vec<f64>, tones: F) -> Option<(Vec<f64>, Projection)>
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        let mut current = self.project(&tones(&params))?;
        for _ in 0..60 {
            let rows = current.residual.len();
            let mut jacobian = DMatrix::<f64>::zeros(rows, params.len());
            for (j, p) in params.iter().enumerate() {
                let h = 1e-6 * p.abs().max(1.0);
                let mut shifted = params.clone();
                shifted[j] += h;
                let probe = self.project(&tones(&shifted))?;
                for i in 0..rows {
                    jacobian[(i, j)] = (probe.residual[i] - current.residual[i]) / h;
                }
            }
            let r = DVector::from_column_slice(&current.residual);
            let step = jacobian.svd(true, true).solve(&(-r), 1e-14).ok()?;

            let mut damping = 1.0;
            let mut accepted = None;
            while damping > 1e-6 {
                let candidate: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + damping * s).collect();
                if candidate.iter().all(|&p| p > 0.0) {
                    if let Some(proj) = self.project(&tones(&candidate)) {
                        if proj.sum_sq < current.sum_sq {
                            accepted = Some((candidate, proj));
                            break;
                        }
                    }
                }
                damping *= 0.5;
            }
            let Some((next, proj)) = accepted else { break };
            let moved = next.iter().zip(&params).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            params = next;
            current = proj;
            if moved < 1e-10 {
                break;
            }
        }
        Some((params, current))
    }
}

/// Detects fringe components by wavenumber-domain spectral analysis.
///
/// The spectrum is resampled uniformly in `1/λ`, mean-removed and
/// transformed; local maxima above [`RELATIVE_THRESHOLD`] of the strongest
/// peak are located by quadratic interpolation and then refined jointly by a
/// least-squares sinusoid fit.
pub fn analyze_fringes(spectrum: &ReflectionSpectrum) -> Result<FringeAnalysis, InterferometryError> {
    let series = WavenumberSeries::from_spectrum(spectrum)?;
    if series.is_flat() {
        return Err(InterferometryError::NoFringe);
    }
    let peaks = series.periodogram_peaks(&series.power);
    if peaks.is_empty() {
        return Err(InterferometryError::NoFringe);
    }
    let seeds: Vec<f64> = peaks.iter().map(|p| p.0).collect();
    let top = peaks.iter().map(|p| p.1).fold(0.0, f64::max);
    let mut estimates: Vec<(f64, f64)> = peaks.iter().map(|&(d, s)| (d, s / top)).collect();

    let fit = ToneFit { series: &series };
    let cell = series.cell_um();
    if let Some((refined, proj)) = fit.refine(seeds.clone(), |p| p.to_vec()) {
        let stays_local = refined.iter().zip(&seeds).all(|(r, s)| (r - s).abs() <= cell);
        let in_band = refined.iter().all(|&d| d > 0.0 && d < series.nyquist_um());
        if stays_local && in_band {
            let strongest = proj.amplitudes.iter().cloned().fold(0.0, f64::max);
            estimates = refined.iter().zip(&proj.amplitudes).map(|(&d, &a)| (d, (a / strongest).powi(2))).collect();
        }
    }

    estimates.retain(|e| e.1 >= RELATIVE_THRESHOLD && e.0.is_finite());
    estimates.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Collapse components that converged onto the same fringe.
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(estimates.len());
    for e in estimates {
        match merged.last_mut() {
            Some(last) if (e.0 - last.0).abs() < 0.25 * cell => {
                if e.1 > last.1 {
                    *last = e;
                }
            }
            _ => merged.push(e),
        }
    }
    if merged.is_empty() {
        return Err(InterferometryError::NoFringe);
    }
    let strongest = merged.iter().map(|e| e.1).fold(0.0, f64::max);
    let components = merged
        .into_iter()
        .map(|(d, s)| FringeComponent {
            delta_lambda_nm: fringe_spacing_nm(d, series.mean_lambda_nm),
            optical_distance_um: d,
            strength: s / strongest,
        })
        .collect();
    Ok(FringeAnalysis { components, mean_lambda_nm: series.mean_lambda_nm })
}

/// How the two elementary distances of a three-surface fit are assigned to
/// the air gap and the substrate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SurfaceAttribution {
    /// The shorter optical distance is the air gap.
    #[default]
    ShorterIsAir,
    /// Use expected reflectance magnitudes of the fiber end and the
    /// substrate front face. The gap fringe scales with the fiber-end
    /// reflectance and the substrate fringe with the front-face reflectance.
    ReflectanceRatio { fiber: f64, front: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceDistances {
    pub air_optical_um: f64,
    pub substrate_optical_um: f64,
    /// Fitted fringe amplitudes for the gap, substrate and total distances.
    pub amplitudes: [f64; 3],
    /// RMS fit residual relative to the RMS of the mean-removed spectrum.
    pub relative_residual: f64,
    pub mean_lambda_nm: f64,
}

impl SurfaceDistances {
    pub fn total_optical_um(&self) -> f64 {
        self.air_optical_um + self.substrate_optical_um
    }

    pub fn substrate_thickness_um(&self, n_sub: f64) -> f64 {
        self.substrate_optical_um / n_sub
    }
}

/// Fits the three-surface structure (fringes at `a`, `b` and `a + b`) to the
/// spectrum and returns the gap and substrate optical distances.
pub fn resolve_surfaces(spectrum: &ReflectionSpectrum, attribution: SurfaceAttribution) -> Result<SurfaceDistances, InterferometryError> {
    let series = WavenumberSeries::from_spectrum(spectrum)?;
    if series.is_flat() {
        return Err(InterferometryError::NoFringe);
    }
    let fit = ToneFit { series: &series };
    let cell = series.cell_um();
    let primary = series.periodogram_peaks(&series.power);
    if primary.is_empty() {
        return Err(InterferometryError::NoFringe);
    }
    let mut peaks: Vec<f64> = primary.iter().map(|p| p.0).collect();
    // Fringes far below the strongest one only show up once the detected
    // tones are fitted out of the spectrum.
    for _ in 0..2 {
        let Some(proj) = fit.project(&peaks) else { break };
        let mut extra: Vec<(f64, f64)> =
            series.periodogram_peaks(&proj.residual).into_iter().filter(|p| peaks.iter().all(|q| (q - p.0).abs() > 0.5 * cell)).collect();
        // Leakage from imperfectly removed tones adds minor peaks; the
        // strongest residual peaks are the ones worth seeding from.
        extra.sort_by(|a, b| b.1.total_cmp(&a.1));
        let extra: Vec<f64> = extra.into_iter().take(2).map(|p| p.0).collect();
        if extra.is_empty() {
            break;
        }
        peaks.extend(extra);
    }
    peaks.sort_by(f64::total_cmp);

    let mut seeds = Vec::new();
    for (i, &p) in peaks.iter().enumerate() {
        for &q in &peaks[i + 1..] {
            seeds.extend([(p, q - p), (p, q), (q - p, p)]);
        }
    }
    // A gap shorter than a resolution cell merges its two fringes into one
    // strong peak; scan small gaps around the strongest peaks.
    let mut strong = primary;
    strong.sort_by(|a, b| b.1.total_cmp(&a.1));
    for &(p, _) in strong.iter().take(3) {
        for s in 0..16 {
            let a = cell * (0.2 + 1.8 * s as f64 / 15.0);
            seeds.extend([(a, p - 0.5 * a), (a, p - a), (a, p)]);
        }
    }
    seeds.retain(|&(a, b)| a > 0.0 && b > 0.0);

    let structure = |p: &[f64]| vec![p[0], p[1], p[0] + p[1]];
    let mut scored: Vec<((f64, f64), f64)> =
        seeds.into_iter().filter_map(|s| fit.project(&structure(&[s.0, s.1])).map(|proj| (s, proj.sum_sq))).collect();
    scored.sort_by(|a, b| a.1.total_cmp(&b.1));

    let (params, proj) = scored
        .iter()
        .take(4)
        .filter_map(|&((a, b), _)| fit.refine(vec![a, b], structure))
        .min_by(|x, y| x.1.sum_sq.total_cmp(&y.1.sum_sq))
        .ok_or(InterferometryError::NoFringe)?;

    let (mut air, mut sub) = (params[0], params[1]);
    let (mut amp_air, mut amp_sub) = (proj.amplitudes[0], proj.amplitudes[1]);
    let swap = match attribution {
        SurfaceAttribution::ShorterIsAir => air > sub,
        SurfaceAttribution::ReflectanceRatio { fiber, front } => {
            let expected = (fiber / front).abs().ln();
            let as_is = ((amp_air / amp_sub).ln() - expected).abs();
            let swapped = ((amp_sub / amp_air).ln() - expected).abs();
            swapped < as_is
        }
    };
    if swap {
        std::mem::swap(&mut air, &mut sub);
        std::mem::swap(&mut amp_air, &mut amp_sub);
    }

    let mean = series.power.iter().sum::<f64>() / series.power.len() as f64;
    let variance: f64 = series.power.iter().map(|p| (p - mean).powi(2)).sum();
    Ok(SurfaceDistances {
        air_optical_um: air,
        substrate_optical_um: sub,
        amplitudes: [amp_air, amp_sub, proj.amplitudes[2]],
        relative_residual: (proj.sum_sq / variance).sqrt(),
        mean_lambda_nm: series.mean_lambda_nm,
    })
}

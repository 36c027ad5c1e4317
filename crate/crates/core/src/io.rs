//! CSV formats read and written by the command-line tool.
//!
//! All writers use [`format_float`] so identical inputs give byte-identical
//! files. Readers accept `#` comment lines and surrounding whitespace and
//! require the exact header of their format.

use std::fmt::Write as _;

use thiserror::Error;

use crate::coupling::CouplingPoint;
use crate::design::{DesignResult, ProbeStage};
use crate::detector::{CountMeasurement, DECurve, DetectorError};
use crate::interferometry::{FringeAnalysis, InterferometryError, ReflectionSpectrum};
use crate::optics::{Stack, StackResponse};

pub const SPECTRUM_HEADER: [&str; 2] = ["wavelength_nm", "power"];
pub const DE_CURVE_HEADER: [&str; 2] = ["dark_count_rate_cps", "de"];
pub const COUNTS_HEADER: [&str; 3] = ["output_cps", "dark_cps", "flux_cps"];
pub const COUPLING_HEADER: &str = "l_sub_um,l_opt_um,eta,eta_normalized";
pub const FRINGE_REPORT_HEADER: &str = "optical_distance_um,delta_lambda_nm,strength";

/// Significant digits of every float written to a data file.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CsvError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("expected header `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("line {line}, column `{column}`: cannot parse `{value}` as a number")]
    Number { line: u64, column: String, value: String },
    #[error("no data rows")]
    Empty,
    #[error(transparent)]
    Spectrum(#[from] InterferometryError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
}

/// Formats with 12 significant digits, `%g` style: fixed notation for
/// decimal exponents in [-5, 12), scientific otherwise, trailing zeros
/// trimmed. Never locale dependent.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn read_table(text: &str, header: &[&str]) -> Result<Vec<(u64, Vec<f64>)>, CsvError> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).has_headers(true).from_reader(text.as_bytes());
    let found = reader.headers().map_err(malformed)?.clone();
    if found.len() != header.len() || found.iter().zip(header).any(|(a, b)| a != *b) {
        return Err(CsvError::Header { expected: header.join(","), found: found.iter().collect::<Vec<_>>().join(",") });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(malformed)?;
        let line = record.position().map_or(0, |p| p.line());
        let values = record
            .iter()
            .zip(header)
            .map(|(field, column)| {
                field.parse::<f64>().map_err(|_| CsvError::Number { line, column: column.to_string(), value: field.to_string() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((line, values));
    }
    if rows.is_empty() {
        return Err(CsvError::Empty);
    }
    Ok(rows)
}

fn malformed(err: csv::Error) -> CsvError {
    let line = err.position().map_or(0, |p| p.line());
    CsvError::Malformed { line, message: err.to_string() }
}

pub fn parse_spectrum_csv(text: &str) -> Result<ReflectionSpectrum, CsvError> {
    let rows = read_table(text, &SPECTRUM_HEADER)?;
    Ok(ReflectionSpectrum::new(rows.into_iter().map(|(_, v)| (v[0], v[1])).collect())?)
}

pub fn parse_de_curve_csv(text: &str, label: &str, wavelength_nm: f64) -> Result<DECurve, CsvError> {
    let rows = read_table(text, &DE_CURVE_HEADER)?;
    Ok(DECurve::new(rows.into_iter().map(|(_, v)| (v[0], v[1])).collect(), label, wavelength_nm)?)
}

pub fn parse_counts_csv(text: &str) -> Result<Vec<CountMeasurement>, CsvError> {
    read_table(text, &COUNTS_HEADER)?
        .into_iter()
        .map(|(_, v)| {
            let m = CountMeasurement { output_count_rate_cps: v[0], dark_count_rate_cps: v[1], photon_flux_cps: v[2] };
            m.validate()?;
            Ok(m)
        })
        .collect()
}

fn row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    let line: Vec<String> = values.into_iter().map(format_float).collect();
    out.push_str(&line.join(","));
    out.push('\n');
}

pub fn spectrum_csv(spectrum: &ReflectionSpectrum) -> String {
    let mut out = SPECTRUM_HEADER.join(",") + "\n";
    for &(wl, p) in spectrum.samples() {
        row(&mut out, [wl, p]);
    }
    out
}

pub fn stack_spectrum_csv(stack: &Stack, responses: &[StackResponse]) -> String {
    let mut out = String::from("wavelength_nm,R,T,A_total");
    for layer in &stack.layers {
        let _ = write!(out, ",A_{}", layer.label);
    }
    out.push('\n');
    for r in responses {
        row(
            &mut out,
            [r.wavelength_nm, r.reflectance, r.transmittance, r.absorptance].into_iter().chain(r.layer_absorptance.iter().copied()),
        );
    }
    out
}

pub fn coupling_csv(points: &[CouplingPoint]) -> String {
    let mut out = format!("{COUPLING_HEADER}\n");
    for p in points {
        row(&mut out, [p.l_sub_um, p.l_opt_um, p.eta, p.eta_normalized]);
    }
    out
}

pub fn fringe_report_csv(analysis: &FringeAnalysis) -> String {
    let mut out = format!("{FRINGE_REPORT_HEADER}\n");
    for c in &analysis.components {
        row(&mut out, [c.optical_distance_um, c.delta_lambda_nm, c.strength]);
    }
    out
}

pub fn design_trace_csv(result: &DesignResult) -> String {
    let mut out = String::from("candidate,value,stage\n");
    for p in &result.trace {
        let stage = match p.stage {
            ProbeStage::Grid => "grid",
            ProbeStage::Refine => "refine",
            ProbeStage::Snap => "snap",
        };
        let _ = writeln!(out, "{},{},{}", format_float(p.candidate), format_float(p.value), stage);
    }
    out
}

pub fn design_result_csv(result: &DesignResult) -> String {
    format!(
        "variable,argmax,objective\n{},{},{}\n",
        result.variable.name(),
        format_float(result.argmax),
        format_float(result.objective_value)
    )
}

/// Per-measurement efficiencies, with the dark-subtraction choice recorded
/// in a leading comment.
pub fn counts_de_csv(measurements: &[CountMeasurement], estimates: &[crate::detector::DeEstimate], subtraction: bool) -> String {
    let mut out = format!("# subtraction={}\n", if subtraction { "on" } else { "off" });
    out.push_str("output_cps,dark_cps,flux_cps,de,raw_de,below_dark\n");
    for (m, e) in measurements.iter().zip(estimates) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            format_float(m.output_count_rate_cps),
            format_float(m.dark_count_rate_cps),
            format_float(m.photon_flux_cps),
            format_float(if subtraction { e.de } else { e.raw_de }),
            format_float(e.raw_de),
            e.below_dark
        );
    }
    out
}

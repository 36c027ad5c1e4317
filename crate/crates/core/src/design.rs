//! Thickness optimization.
//!
//! Every search is a coarse grid scan followed by golden-section refinement
//! inside the grid cell pair around the best grid point. Cavity absorptance
//! is oscillatory in thickness, so the grid is what picks the lobe; the
//! golden section only polishes it. When a fabrication granularity is given
//! the result is snapped to the nearest multiple of it inside the bounds and
//! re-evaluated there.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coupling::{coupled_fraction, BeamGeometry, CouplingError};
use crate::numeric::golden_section_max;
use crate::optics::{stack_response, OpticsError, Stack};

/// Number of points in the coarse scan, endpoints included.
pub const GRID_POINTS: usize = 65;
/// Floor on the golden-section bracket width, in the variable's unit.
pub const MIN_TOLERANCE: f64 = 0.01;
/// Sweep cap for coordinate-wise multi-layer design.
pub const MAX_SWEEPS: usize = 10;
pub const SWEEP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("invalid bounds [{lower}, {upper}] (need finite lower < upper)")]
    InvalidBounds { lower: f64, upper: f64 },
    #[error("invalid granularity {0}")]
    InvalidGranularity(f64),
    #[error("no multiple of granularity {granularity} inside [{lower}, {upper}]")]
    NoLatticePoint { lower: f64, upper: f64, granularity: f64 },
    #[error("objective is not finite ({value}) at candidate {candidate}")]
    NonFiniteObjective { candidate: f64, value: f64 },
    #[error("layer `{0}` not found in stack")]
    LayerNotFound(String),
    #[error("layer label `{0}` is not unique in stack")]
    AmbiguousLayer(String),
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignVariable {
    CavityThicknessNm,
    ArThicknessNm,
    SubstrateThicknessUm,
}

impl DesignVariable {
    pub fn name(&self) -> &'static str {
        match self {
            DesignVariable::CavityThicknessNm => "cavity_thickness_nm",
            DesignVariable::ArThicknessNm => "ar_thickness_nm",
            DesignVariable::SubstrateThicknessUm => "substrate_thickness_um",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignSpace {
    pub variable: DesignVariable,
    pub lower: f64,
    pub upper: f64,
    /// Snap step; 0 disables snapping.
    pub granularity: f64,
}

impl DesignSpace {
    pub fn new(variable: DesignVariable, lower: f64, upper: f64, granularity: f64) -> Result<Self, DesignError> {
        let space = Self { variable, lower, upper, granularity };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return Err(DesignError::InvalidBounds { lower: self.lower, upper: self.upper });
        }
        if !(self.granularity.is_finite() && self.granularity >= 0.0) {
            return Err(DesignError::InvalidGranularity(self.granularity));
        }
        Ok(())
    }

    /// Nearest lattice point inside the bounds; exact halves go down.
    pub fn snap(&self, x: f64) -> Result<f64, DesignError> {
        let g = self.granularity;
        let lattice = |k: f64| k * g;
        let below = (x / g).floor();
        let mut k = if x - lattice(below) <= lattice(below + 1.0) - x { below } else { below + 1.0 };
        if lattice(k) < self.lower {
            k = (self.lower / g).ceil();
        }
        if lattice(k) > self.upper {
            k = (self.upper / g).floor();
        }
        let snapped = lattice(k);
        if snapped < self.lower || snapped > self.upper {
            return Err(DesignError::NoLatticePoint { lower: self.lower, upper: self.upper, granularity: g });
        }
        Ok(snapped)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeStage {
    Grid,
    Refine,
    Snap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Probe {
    pub candidate: f64,
    pub value: f64,
    pub stage: ProbeStage,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignResult {
    pub variable: DesignVariable,
    pub argmax: f64,
    pub objective_value: f64,
    /// Every objective evaluation in order. Without snapping no entry exceeds
    /// `objective_value`; with snapping that holds for the `Snap` entry only.
    pub trace: Vec<Probe>,
    pub snapped: bool,
    /// Interval handed to the golden-section refinement.
    pub bracket: (f64, f64),
}

/// Maximizes `objective` over `space`. Ties go to the smaller candidate.
pub fn maximize<F>(space: &DesignSpace, mut objective: F) -> Result<DesignResult, DesignError>
where
    F: FnMut(f64) -> f64,
{
    space.validate()?;
    let (lower, upper) = (space.lower, space.upper);
    let mut trace = Vec::with_capacity(GRID_POINTS + 64);

    let span = upper - lower;
    for i in 0..GRID_POINTS {
        let x = if i + 1 == GRID_POINTS { upper } else { lower + span * i as f64 / (GRID_POINTS - 1) as f64 };
        let value = objective(x);
        if !value.is_finite() {
            return Err(DesignError::NonFiniteObjective { candidate: x, value });
        }
        trace.push(Probe { candidate: x, value, stage: ProbeStage::Grid });
    }
    let best_grid = (0..GRID_POINTS).fold(0, |b, i| if trace[i].value > trace[b].value { i } else { b });
    let bracket = (trace[best_grid.saturating_sub(1)].candidate, trace[(best_grid + 1).min(GRID_POINTS - 1)].candidate);

    let tol = MIN_TOLERANCE.max(space.granularity);
    let mut refine = Vec::new();
    golden_section_max(&mut objective, bracket.0, bracket.1, tol, |x, v| {
        refine.push(Probe { candidate: x, value: v, stage: ProbeStage::Refine })
    })
    .map_err(|(candidate, value)| DesignError::NonFiniteObjective { candidate, value })?;
    trace.extend(refine);

    let best = trace
        .iter()
        .copied()
        .reduce(|b, p| if p.value > b.value || (p.value == b.value && p.candidate < b.candidate) { p } else { b })
        .expect("grid scan is nonempty");

    if space.granularity > 0.0 {
        let x = space.snap(best.candidate)?;
        let value = objective(x);
        if !value.is_finite() {
            return Err(DesignError::NonFiniteObjective { candidate: x, value });
        }
        trace.push(Probe { candidate: x, value, stage: ProbeStage::Snap });
        return Ok(DesignResult { variable: space.variable, argmax: x, objective_value: value, trace, snapped: true, bracket });
    }

    Ok(DesignResult { variable: space.variable, argmax: best.candidate, objective_value: best.value, trace, snapped: false, bracket })
}

/// Figure of merit for layer designs, evaluated at a single wavelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerObjective {
    /// Absorptance of the named layer (the nanowire film).
    Absorptance { layer: String },
    /// `1 − R`, for antireflection design.
    OneMinusReflectance,
}

impl LayerObjective {
    pub fn evaluate(&self, stack: &Stack, wavelength_nm: f64) -> Result<f64, OpticsError> {
        let response = stack_response(stack, wavelength_nm)?;
        Ok(match self {
            LayerObjective::Absorptance { layer } => {
                let i = stack.layer_position(layer).expect("objective layer checked before search");
                response.layer_absorptance[i]
            }
            LayerObjective::OneMinusReflectance => 1.0 - response.reflectance,
        })
    }
}

fn unique_layer(stack: &Stack, label: &str) -> Result<usize, DesignError> {
    let mut hits = stack.layers.iter().enumerate().filter(|(_, l)| l.label == label).map(|(i, _)| i);
    let first = hits.next().ok_or_else(|| DesignError::LayerNotFound(label.to_string()))?;
    if hits.next().is_some() {
        return Err(DesignError::AmbiguousLayer(label.to_string()));
    }
    Ok(first)
}

fn check_objective(stack: &Stack, objective: &LayerObjective) -> Result<(), DesignError> {
    if let LayerObjective::Absorptance { layer } = objective {
        unique_layer(stack, layer)?;
    }
    Ok(())
}

/// Optimizes the thickness (nm) of the layer labelled `variable_layer`.
pub fn optimize_layer(
    stack_template: &Stack,
    variable_layer: &str,
    space: &DesignSpace,
    objective: &LayerObjective,
    wavelength_nm: f64,
) -> Result<DesignResult, DesignError> {
    space.validate()?;
    stack_template.validate()?;
    let index = unique_layer(stack_template, variable_layer)?;
    check_objective(stack_template, objective)?;
    // Surface wavelength errors up front rather than as NaN probes.
    objective.evaluate(stack_template, wavelength_nm)?;

    let mut stack = stack_template.clone();
    maximize(space, |x| {
        stack.layers[index].thickness_nm = x;
        objective.evaluate(&stack, wavelength_nm).unwrap_or(f64::NAN)
    })
}

/// Optimizes the substrate thickness (μm) for fiber coupling.
pub fn optimize_substrate(geom_template: &BeamGeometry, space: &DesignSpace) -> Result<DesignResult, DesignError> {
    space.validate()?;
    geom_template.validate()?;
    maximize(space, |x| coupled_fraction(&geom_template.with_substrate(x)).unwrap_or(f64::NAN))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CyclicResult {
    /// Final thickness per variable layer, in input order.
    pub thicknesses: Vec<(String, f64)>,
    pub objective_value: f64,
    pub sweeps: usize,
    pub converged: bool,
}

/// Coordinate-wise cycling over several layers, each optimized with the
/// others held fixed.
pub fn optimize_layers_cyclic(
    stack_template: &Stack,
    variables: &[(String, DesignSpace)],
    objective: &LayerObjective,
    wavelength_nm: f64,
) -> Result<CyclicResult, DesignError> {
    stack_template.validate()?;
    check_objective(stack_template, objective)?;
    for (label, space) in variables {
        unique_layer(stack_template, label)?;
        space.validate()?;
    }
    let mut stack = stack_template.clone();
    let mut value = objective.evaluate(&stack, wavelength_nm)?;
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let before = value;
        for (label, space) in variables {
            let result = optimize_layer(&stack, label, space, objective, wavelength_nm)?;
            let index = unique_layer(&stack, label)?;
            stack.layers[index].thickness_nm = result.argmax;
            value = result.objective_value;
        }
        if (value - before).abs() < SWEEP_TOLERANCE {
            converged = true;
            break;
        }
    }
    let thicknesses = variables
        .iter()
        .map(|(label, _)| (label.clone(), stack.layers[stack.layer_position(label).expect("checked")].thickness_nm))
        .collect();
    Ok(CyclicResult { thicknesses, objective_value: value, sweeps, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{quarter_wave_thickness, ComplexIndex, Layer};

    fn ar_stack(thickness: f64) -> Stack {
        Stack::new(
            ComplexIndex::lossless(1.0),
            vec![Layer::new("AR", thickness, ComplexIndex::lossless(1.7_f64.sqrt())).unwrap()],
            ComplexIndex::lossless(1.7),
        )
    }

    #[test]
    fn antireflection_optimum_is_quarter_wave() {
        let n = 1.7_f64.sqrt();
        let qw = quarter_wave_thickness(ComplexIndex::lossless(n), 1550.0).unwrap();
        let space = DesignSpace::new(DesignVariable::ArThicknessNm, 200.0, 450.0, 0.0).unwrap();
        let result = optimize_layer(&ar_stack(100.0), "AR", &space, &LayerObjective::OneMinusReflectance, 1550.0).unwrap();
        assert!((result.argmax - qw).abs() < 0.05, "{} vs {qw}", result.argmax);
        assert!(!result.snapped);
        assert!(result.trace.iter().all(|p| p.value <= result.objective_value));
    }

    #[test]
    fn snapping_lands_on_lattice() {
        let space = DesignSpace::new(DesignVariable::SubstrateThicknessUm, 43.0, 400.0, 5.0).unwrap();
        let result = optimize_substrate(&BeamGeometry::default(), &space).unwrap();
        assert_eq!(result.argmax, 45.0);
        assert!(result.snapped);
        assert_eq!(result.trace.last().unwrap().stage, ProbeStage::Snap);
    }

    #[test]
    fn monotone_coupling_picks_lower_bound() {
        let space = DesignSpace::new(DesignVariable::SubstrateThicknessUm, 45.0, 400.0, 0.0).unwrap();
        let result = optimize_substrate(&BeamGeometry::default(), &space).unwrap();
        assert_eq!(result.argmax, 45.0);
        assert!((result.objective_value - 0.9840).abs() < 5e-5);

        let eps = 1e-6;
        let tiny = DesignSpace::new(DesignVariable::SubstrateThicknessUm, 100.0, 100.0 + eps, 0.0).unwrap();
        assert_eq!(optimize_substrate(&BeamGeometry::default(), &tiny).unwrap().argmax, 100.0);
    }

    #[test]
    fn snap_rules() {
        let space = DesignSpace::new(DesignVariable::CavityThicknessNm, 43.0, 400.0, 5.0).unwrap();
        assert_eq!(space.snap(43.0).unwrap(), 45.0);
        assert_eq!(space.snap(47.5).unwrap(), 45.0);
        assert_eq!(space.snap(47.6).unwrap(), 50.0);
        assert_eq!(space.snap(399.0).unwrap(), 400.0);
        let narrow = DesignSpace::new(DesignVariable::CavityThicknessNm, 41.0, 44.0, 5.0).unwrap();
        assert!(matches!(narrow.snap(42.0), Err(DesignError::NoLatticePoint { .. })));
    }

    #[test]
    fn ties_prefer_smaller_candidate() {
        let space = DesignSpace::new(DesignVariable::CavityThicknessNm, 0.0, 10.0, 0.0).unwrap();
        let result = maximize(&space, |_| 1.0).unwrap();
        assert_eq!(result.argmax, 0.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(DesignSpace::new(DesignVariable::CavityThicknessNm, 10.0, 5.0, 0.0), Err(DesignError::InvalidBounds { .. })));
        assert!(DesignSpace::new(DesignVariable::CavityThicknessNm, 1.0, 5.0, -1.0).is_err());

        let space = DesignSpace::new(DesignVariable::CavityThicknessNm, 1.0, 5.0, 0.0).unwrap();
        let err = maximize(&space, |x| if x > 3.0 { f64::NAN } else { x }).unwrap_err();
        match err {
            DesignError::NonFiniteObjective { candidate, .. } => assert!(candidate > 3.0),
            other => panic!("{other:?}"),
        }

        let stack = ar_stack(100.0);
        assert_eq!(
            optimize_layer(&stack, "SiO", &space, &LayerObjective::OneMinusReflectance, 1550.0),
            Err(DesignError::LayerNotFound("SiO".into()))
        );
        let mut twice = stack.clone();
        twice.layers.push(twice.layers[0].clone());
        assert_eq!(
            optimize_layer(&twice, "AR", &space, &LayerObjective::OneMinusReflectance, 1550.0),
            Err(DesignError::AmbiguousLayer("AR".into()))
        );
        // Zero thickness is not a valid layer: the probe is reported.
        let from_zero = DesignSpace::new(DesignVariable::ArThicknessNm, 0.0, 5.0, 0.0).unwrap();
        assert!(matches!(
            optimize_layer(&stack, "AR", &from_zero, &LayerObjective::OneMinusReflectance, 1550.0),
            Err(DesignError::NonFiniteObjective { candidate, .. }) if candidate == 0.0
        ));
    }

    #[test]
    fn cyclic_design_converges() {
        let stack = Stack::new(
            ComplexIndex::lossless(1.0),
            vec![
                Layer::new("L1", 200.0, ComplexIndex::lossless(1.38)).unwrap(),
                Layer::new("L2", 200.0, ComplexIndex::lossless(2.1)).unwrap(),
            ],
            ComplexIndex::lossless(1.52),
        );
        let space = DesignSpace::new(DesignVariable::ArThicknessNm, 50.0, 400.0, 0.0).unwrap();
        let vars = vec![("L1".to_string(), space), ("L2".to_string(), space)];
        let start = LayerObjective::OneMinusReflectance.evaluate(&stack, 1550.0).unwrap();
        let result = optimize_layers_cyclic(&stack, &vars, &LayerObjective::OneMinusReflectance, 1550.0).unwrap();
        assert!(result.objective_value >= start);
        assert!(result.sweeps <= MAX_SWEEPS);
        assert_eq!(result.thicknesses.len(), 2);
    }
}

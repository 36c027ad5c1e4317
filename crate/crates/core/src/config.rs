//! Run configuration and material tables.
//!
//! Configuration files are JSON. Media and layers either give an index
//! directly (`"n"`, optional `"k"`) or name an entry of the material table
//! (`"material"`). The shipped table lives in `data/materials.json`; a
//! config's `material_defaults` section overrides or extends it entry by
//! entry. A material may omit `k` and instead ask for it to be fitted to a
//! bare-film absorptance measurement.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::coupling::{Aperture, BeamGeometry, PathConvention, L_AIR_COLD_UM, L_AIR_WARM_UM};
use crate::optics::{fit_extinction, ComplexIndex, Layer, OpticsError, Stack};

/// Shipped material defaults.
pub const DEFAULT_MATERIALS_JSON: &str = include_str!("../data/materials.json");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{path}: {message} (line {line}, column {column})")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("unknown material `{0}`")]
    UnknownMaterial(String),
    #[error("material `{0}` fits its own substrate")]
    CircularFit(String),
    #[error("{0}")]
    Invalid(String),
    #[error("material `{name}`: {source}")]
    Material { name: String, source: OpticsError },
    #[error("{context}: {source}")]
    Optics { context: String, source: OpticsError },
}

/// Extinction fit against a measured bare-film absorptance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    pub target_absorptance: f64,
    pub film_thickness_nm: f64,
    pub substrate: String,
    pub wavelength_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    pub n: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialFile {
    pub version: u32,
    #[serde(default)]
    pub reference_wavelength_nm: Option<f64>,
    pub materials: BTreeMap<String, MaterialSpec>,
}

/// A semi-infinite medium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub label: String,
    pub thickness_nm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackSpec {
    pub incident: MediumSpec,
    pub layers: Vec<LayerSpec>,
    pub exit: MediumSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapTemperature {
    Cold,
    Warm,
}

/// Beam section; unset fields take [`BeamGeometry::default`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSpec {
    pub wavelength_um: Option<f64>,
    pub mfd_um: Option<f64>,
    pub l_air_um: Option<f64>,
    pub temperature: Option<GapTemperature>,
    pub l_sub_um: Option<f64>,
    pub n_sub: Option<f64>,
    pub aperture: Option<Aperture>,
    pub path: Option<PathConvention>,
}

impl BeamSpec {
    pub fn resolve(&self) -> Result<BeamGeometry, ConfigError> {
        if self.l_air_um.is_some() && self.temperature.is_some() {
            return Err(ConfigError::Invalid("beam: give either `l_air_um` or `temperature`, not both".into()));
        }
        let d = BeamGeometry::default();
        let l_air_um = self.l_air_um.unwrap_or(match self.temperature {
            Some(GapTemperature::Warm) => L_AIR_WARM_UM,
            _ => L_AIR_COLD_UM,
        });
        let geom = BeamGeometry {
            wavelength_um: self.wavelength_um.unwrap_or(d.wavelength_um),
            mfd_um: self.mfd_um.unwrap_or(d.mfd_um),
            l_air_um,
            l_sub_um: self.l_sub_um.unwrap_or(d.l_sub_um),
            n_sub: self.n_sub.unwrap_or(d.n_sub),
            aperture: self.aperture.unwrap_or(d.aperture),
            path: self.path.unwrap_or(d.path),
        };
        geom.validate().map_err(|e| ConfigError::Invalid(format!("beam: {e}")))?;
        Ok(geom)
    }
}

/// Fringe-synthesis section: surface amplitudes as `[re, im]` pairs, or
/// Fresnel defaults derived from the media when omitted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfacesSpec {
    pub fiber_material: Option<String>,
    pub reflectances: Option<[[f64; 2]; 3]>,
}

/// Top-level configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub material_defaults: BTreeMap<String, MaterialSpec>,
    #[serde(default)]
    pub stack: Option<StackSpec>,
    #[serde(default)]
    pub beam: BeamSpec,
    #[serde(default)]
    pub surfaces: SurfacesSpec,
    #[serde(default)]
    pub output_path: Option<String>,
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        ConfigError::Parse { path, line: inner.line(), column: inner.column(), message: inner.to_string() }
    })
}

pub fn parse_run_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_json(text)
}

pub fn parse_material_file(text: &str) -> Result<MaterialFile, ConfigError> {
    let file: MaterialFile = parse_json(text)?;
    if file.version != 1 {
        return Err(ConfigError::Invalid(format!("unsupported material file version {}", file.version)));
    }
    Ok(file)
}

/// Parses a stack description and resolves it against the shipped materials.
pub fn parse_stack_json(text: &str) -> Result<Stack, ConfigError> {
    let spec: StackSpec = parse_json(text)?;
    MaterialTable::with_overrides(&BTreeMap::new())?.resolve_stack(&spec)
}

/// Resolved material indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaterialTable {
    indices: BTreeMap<String, ComplexIndex>,
}

impl MaterialTable {
    /// Shipped defaults overlaid with `overrides`.
    pub fn with_overrides(overrides: &BTreeMap<String, MaterialSpec>) -> Result<Self, ConfigError> {
        let mut specs = parse_material_file(DEFAULT_MATERIALS_JSON)?.materials;
        specs.extend(overrides.iter().map(|(k, v)| (k.clone(), v.clone())));
        Self::from_specs(&specs)
    }

    pub fn from_specs(specs: &BTreeMap<String, MaterialSpec>) -> Result<Self, ConfigError> {
        let mut indices = BTreeMap::new();
        // Direct indices first, then fitted materials whose substrate is direct.
        for (name, spec) in specs {
            if spec.fit.is_none() {
                let index = ComplexIndex::new(spec.n, spec.k.unwrap_or(0.0))
                    .map_err(|source| ConfigError::Material { name: name.clone(), source })?;
                indices.insert(name.clone(), index);
            }
        }
        for (name, spec) in specs {
            let Some(fit) = &spec.fit else { continue };
            if spec.k.is_some() {
                return Err(ConfigError::Invalid(format!("material `{name}`: give `k` or `fit`, not both")));
            }
            if fit.substrate == *name {
                return Err(ConfigError::CircularFit(name.clone()));
            }
            let substrate = *indices.get(&fit.substrate).ok_or_else(|| ConfigError::UnknownMaterial(fit.substrate.clone()))?;
            let index =
                fit_extinction(ComplexIndex::lossless(spec.n), fit.film_thickness_nm, substrate, fit.target_absorptance, fit.wavelength_nm)
                    .map_err(|source| ConfigError::Material { name: name.clone(), source })?;
            indices.insert(name.clone(), index);
        }
        Ok(Self { indices })
    }

    pub fn get(&self, name: &str) -> Result<ComplexIndex, ConfigError> {
        self.indices.get(name).copied().ok_or_else(|| ConfigError::UnknownMaterial(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &ComplexIndex)> {
        self.indices.iter()
    }

    fn index_of(&self, context: &str, material: &Option<String>, n: Option<f64>, k: Option<f64>) -> Result<ComplexIndex, ConfigError> {
        match (material, n) {
            (Some(_), Some(_)) => Err(ConfigError::Invalid(format!("{context}: give `material` or `n`, not both"))),
            (Some(name), None) => {
                if k.is_some() {
                    return Err(ConfigError::Invalid(format!("{context}: `k` needs `n`")));
                }
                self.get(name)
            }
            (None, Some(n)) => {
                ComplexIndex::new(n, k.unwrap_or(0.0)).map_err(|source| ConfigError::Optics { context: context.to_string(), source })
            }
            (None, None) => Err(ConfigError::Invalid(format!("{context}: needs `material` or `n`"))),
        }
    }

    pub fn resolve_stack(&self, spec: &StackSpec) -> Result<Stack, ConfigError> {
        let incident = self.index_of("stack.incident", &spec.incident.material, spec.incident.n, spec.incident.k)?;
        let exit = self.index_of("stack.exit", &spec.exit.material, spec.exit.n, spec.exit.k)?;
        let layers = spec
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let context = format!("stack.layers[{i}] ({})", l.label);
                let index = self.index_of(&context, &l.material, l.n, l.k)?;
                Layer::new(l.label.clone(), l.thickness_nm, index).map_err(|source| ConfigError::Optics { context, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let stack = Stack::new(incident, layers, exit);
        stack.validate().map_err(|source| ConfigError::Optics { context: "stack".into(), source })?;
        Ok(stack)
    }
}

/// Everything a command reads, after defaults and material lookups.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub materials: MaterialTable,
    pub stack: Option<Stack>,
    pub beam: BeamGeometry,
    pub surfaces: SurfacesSpec,
    pub output_path: Option<String>,
}

impl RunConfig {
    pub fn resolve(&self) -> Result<ResolvedConfig, ConfigError> {
        let materials = MaterialTable::with_overrides(&self.material_defaults)?;
        let stack = self.stack.as_ref().map(|s| materials.resolve_stack(s)).transpose()?;
        if let Some(name) = &self.surfaces.fiber_material {
            materials.get(name)?;
        }
        Ok(ResolvedConfig {
            stack,
            beam: self.beam.resolve()?,
            surfaces: self.surfaces.clone(),
            output_path: self.output_path.clone(),
            materials,
        })
    }
}

/// Provenance record for one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs_digest: String,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

impl RunReport {
    /// `inputs` is hashed through its canonical JSON form (object keys
    /// sorted), so key order in the source file never matters.
    pub fn new<T: Serialize>(command: &str, inputs: &T) -> Self {
        Self { command: command.to_string(), inputs_digest: digest(inputs), outputs: Vec::new(), warnings: Vec::new() }
    }

    /// Single-line `key=value` form.
    pub fn record(&self) -> String {
        format!(
            "command={} inputs_digest={} outputs={} warnings={}",
            self.command,
            self.inputs_digest,
            self.outputs.join(";"),
            self.warnings.len()
        )
    }
}

pub fn digest<T: Serialize>(value: &T) -> String {
    // serde_json's default map is ordered, so to_value canonicalizes.
    let canonical = serde_json::to_value(value).and_then(|v| serde_json::to_vec(&v)).expect("inputs serialize to JSON");
    hex::encode(Sha256::digest(&canonical))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_materials_resolve() {
        let table = MaterialTable::with_overrides(&BTreeMap::new()).unwrap();
        let nbn = table.get("NbN").unwrap();
        assert_eq!(nbn.n, 5.5);
        let a = crate::optics::bare_film_absorptance(nbn, 4.0, table.get("MgO").unwrap(), 1550.0).unwrap();
        assert!((a - 0.32).abs() < 1e-6);
        assert!(table.get("Au").unwrap().k > 5.0);
        assert_eq!(table.get("unobtainium"), Err(ConfigError::UnknownMaterial("unobtainium".into())));
    }

    #[test]
    fn overrides_replace_defaults() {
        let cfg = parse_run_config(r#"{"material_defaults": {"SiO": {"n": 1.9}}}"#).unwrap();
        let resolved = cfg.resolve().unwrap();
        assert_eq!(resolved.materials.get("SiO").unwrap(), ComplexIndex::lossless(1.9));
    }

    #[test]
    fn stack_description_file() {
        let text =
            r#"{"incident": {"n": 1.0}, "layers": [{"label": "AR", "thickness_nm": 250, "n": 1.34, "k": 0}], "exit": {"n": 1.7, "k": 0}}"#;
        let stack = parse_stack_json(text).unwrap();
        assert_eq!(stack.layers[0].label, "AR");
        assert_eq!(stack.exit.n, 1.7);

        let by_name = r#"{"incident": {"material": "MgO"}, "layers": [{"label": "NbN", "thickness_nm": 4, "material": "NbN"}], "exit": {"material": "vacuum"}}"#;
        assert!(parse_stack_json(by_name).unwrap().layers[0].index.k > 0.0);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let text = "{\n  \"incident\": {\"n\": 1.0},\n  \"layers\": [{\"label\": \"x\", \"thickness_nm\": \"thin\", \"n\": 1.5}],\n  \"exit\": {\"n\": 1.0}\n}";
        match parse_stack_json(text).unwrap_err() {
            ConfigError::Parse { path, line, .. } => {
                assert_eq!(path, "layers[0].thickness_nm");
                assert_eq!(line, 3);
            }
            other => panic!("{other:?}"),
        }
        let empty = r#"{"incident": {"n": 1.0}, "layers": [], "exit": {"n": 1.0}}"#;
        assert!(matches!(parse_stack_json(empty), Err(ConfigError::Optics { source: OpticsError::EmptyStack, .. })));
        assert!(matches!(parse_run_config(r#"{"bogus": 1}"#), Err(ConfigError::Parse { .. })));
        let both =
            r#"{"incident": {"n": 1.0, "material": "MgO"}, "layers": [{"label": "x", "thickness_nm": 1, "n": 1.5}], "exit": {"n": 1.0}}"#;
        assert!(matches!(parse_stack_json(both), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn fit_requires_known_substrate() {
        let cfg = parse_run_config(
            r#"{"material_defaults": {"X": {"n": 5.0, "fit": {"target_absorptance": 0.3, "film_thickness_nm": 4, "substrate": "nope", "wavelength_nm": 1550}}}}"#,
        )
        .unwrap();
        assert_eq!(cfg.resolve().unwrap_err(), ConfigError::UnknownMaterial("nope".into()));
    }

    #[test]
    fn beam_defaults_and_warm_gap() {
        let cfg = parse_run_config(r#"{"beam": {"temperature": "warm", "aperture": {"kind": "square", "side_um": 15}}}"#).unwrap();
        let geom = cfg.resolve().unwrap().beam;
        assert_eq!(geom.l_air_um, 30.0);
        assert_eq!(geom.aperture, Aperture::Square { side_um: 15.0 });
        assert_eq!(geom.mfd_um, 10.6);
        assert!(parse_run_config(r#"{"beam": {"temperature": "warm", "l_air_um": 5}}"#).unwrap().resolve().is_err());
    }

    #[test]
    fn digest_ignores_key_order_but_not_values() {
        let a = parse_run_config(r#"{"beam": {"mfd_um": 10.6, "l_sub_um": 45}, "output_path": "x"}"#).unwrap().resolve().unwrap();
        let b = parse_run_config(r#"{"output_path": "x", "beam": {"l_sub_um": 45, "mfd_um": 10.6}}"#).unwrap().resolve().unwrap();
        let c = parse_run_config(r#"{"output_path": "x", "beam": {"l_sub_um": 45.0000001, "mfd_um": 10.6}}"#).unwrap().resolve().unwrap();
        assert_eq!(digest(&a), digest(&b));
        assert_ne!(digest(&a), digest(&c));
        assert_eq!(digest(&a).len(), 64);
    }
}

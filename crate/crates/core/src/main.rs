use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;

use ocsnspd::config::{parse_run_config, parse_stack_json, ResolvedConfig, RunConfig, RunReport};
use ocsnspd::coupling::{coupling_curve, Aperture, BeamGeometry, PathConvention, L_AIR_WARM_UM};
use ocsnspd::design::{optimize_layer, optimize_substrate, DesignSpace, DesignVariable, LayerObjective};
use ocsnspd::detector::{de_at_dark_rate, de_from_counts, enhancement_factor, system_de, CountMeasurement, DEBudget, Interpolation};
use ocsnspd::interferometry::{
    analyze_fringes, resolve_surfaces, synthesize_spectrum, thickness_from_fringe, SurfaceAttribution, SurfaceModel,
};
use ocsnspd::io::{self, format_float};
use ocsnspd::optics::{fresnel_amplitude, reflection_amplitude, stack_response, ComplexIndex, Stack};

#[derive(Parser)]
#[command(name = "ocsnspd", version, about = "Optical-cavity SNSPD design and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the stack response over wavelength.
    StackSpectrum(StackSpectrumArgs),
    /// Fiber coupling efficiency versus substrate thickness.
    CouplingCurve(CouplingArgs),
    /// Back-reflection spectra: synthesize or analyze.
    #[command(subcommand)]
    Fringe(FringeCommand),
    /// Detection-efficiency bookkeeping.
    #[command(subcommand)]
    De(DeCommand),
    /// Optimize a layer or substrate thickness.
    Design(DesignArgs),
}

#[derive(Args)]
struct ConfigArg {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct StackSpectrumArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Stack description file, instead of the config's `stack` section.
    #[arg(long, conflicts_with = "config")]
    stack: Option<PathBuf>,
    #[arg(long)]
    min: f64,
    #[arg(long)]
    max: f64,
    #[arg(long)]
    step: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BeamArgs {
    #[arg(long)]
    wavelength_um: Option<f64>,
    #[arg(long)]
    mfd_um: Option<f64>,
    #[arg(long)]
    l_air_um: Option<f64>,
    /// Use the room-temperature gap.
    #[arg(long, conflicts_with = "l_air_um")]
    warm: bool,
    #[arg(long)]
    n_sub: Option<f64>,
    /// `paper-disk:R`, `disk:RADIUS` or `square:SIDE`, in μm.
    #[arg(long, value_parser = parse_aperture)]
    aperture: Option<Aperture>,
    #[arg(long, value_enum)]
    path: Option<PathArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PathArg {
    Optical,
    Reduced,
}

#[derive(Args)]
struct CouplingArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    beam: BeamArgs,
    /// Comma-separated substrate thicknesses, μm.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with = "range")]
    thicknesses: Option<Vec<f64>>,
    /// `START:STOP:STEP` in μm, both ends included.
    #[arg(long)]
    range: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum FringeCommand {
    /// Synthesize a three-surface back-reflection spectrum.
    Synth(SynthArgs),
    /// Detect fringe components in a spectrum CSV.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, default_value_t = 20.0)]
    l_air_um: f64,
    #[arg(long)]
    l_sub_um: f64,
    #[arg(long)]
    n_sub: Option<f64>,
    /// Amplitude reflectances as `re,im`; Fresnel defaults otherwise.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    r1: Option<Complex64>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    r2: Option<Complex64>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    r3: Option<Complex64>,
    #[arg(long, default_value_t = 1500.0)]
    min: f64,
    #[arg(long, default_value_t = 1600.0)]
    max: f64,
    #[arg(long, default_value_t = 0.02)]
    step: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    input: PathBuf,
    /// Index for thickness conversion of each component.
    #[arg(long)]
    n: Option<f64>,
    /// Also fit the three-surface structure and report gap and substrate.
    #[arg(long)]
    resolve: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DeCommand {
    /// Multiply coupling, absorptance and intrinsic efficiency.
    Compose {
        coupling: f64,
        absorptance: f64,
        intrinsic: f64,
        #[arg(long, default_value_t = 1550.0)]
        wavelength_nm: f64,
    },
    /// System DE from count rates.
    FromCounts(FromCountsArgs),
    /// Interpolate a DE-versus-dark-rate curve.
    AtDarkRate(AtDarkRateArgs),
    /// Ratio of DE after a change to DE before it.
    Enhancement {
        after: f64,
        before: f64,
        #[arg(long, default_value = "after")]
        after_label: String,
        #[arg(long, default_value = "before")]
        before_label: String,
    },
}

#[derive(Args)]
struct FromCountsArgs {
    #[arg(long, conflicts_with = "input", requires_all = ["dark", "flux"])]
    output: Option<f64>,
    #[arg(long)]
    dark: Option<f64>,
    #[arg(long)]
    flux: Option<f64>,
    /// CSV with `output_cps,dark_cps,flux_cps`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Report the raw output/flux ratio without dark subtraction.
    #[arg(long)]
    no_subtract: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AtDarkRateArgs {
    /// CSV with `dark_count_rate_cps,de`.
    #[arg(long)]
    curve: PathBuf,
    #[arg(long)]
    rate: f64,
    #[arg(long, default_value = "curve")]
    label: String,
    #[arg(long, default_value_t = 1550.0)]
    wavelength_nm: f64,
    /// Interpolate linearly in rate instead of log rate.
    #[arg(long)]
    linear: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariableArg {
    Substrate,
    Cavity,
    Ar,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Absorptance,
    OneMinusR,
    Coupling,
}

#[derive(Args)]
struct DesignArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    beam: BeamArgs,
    #[arg(long, value_enum)]
    variable: VariableArg,
    #[arg(long)]
    lower: f64,
    #[arg(long)]
    upper: f64,
    #[arg(long, default_value_t = 0.0)]
    granularity: f64,
    #[arg(long, default_value_t = 1550.0)]
    wavelength_nm: f64,
    #[arg(long, value_enum)]
    objective: Option<ObjectiveArg>,
    /// Label of the layer being optimized.
    #[arg(long)]
    layer: Option<String>,
    /// Label of the absorbing nanowire layer.
    #[arg(long, default_value = "NbN")]
    absorber: String,
    /// Trace CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// One-line result CSV.
    #[arg(long)]
    result_out: Option<PathBuf>,
}

enum CliError {
    Validation(String),
    Analysis(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Analysis(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Analysis(m) | CliError::Io(m) => m,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

type CliResult<T> = Result<T, CliError>;

fn parse_aperture(s: &str) -> Result<Aperture, String> {
    let (kind, value) = s.split_once(':').ok_or("expected KIND:SIZE")?;
    let value: f64 = value.parse().map_err(|_| format!("bad size `{value}`"))?;
    match kind {
        "paper-disk" => Ok(Aperture::PaperDisk { r_um: value }),
        "disk" => Ok(Aperture::Disk { radius_um: value }),
        "square" => Ok(Aperture::Square { side_um: value }),
        _ => Err(format!("unknown aperture `{kind}`")),
    }
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let (re, im) = s.split_once(',').unwrap_or((s, "0"));
    let re = re.trim().parse().map_err(|_| format!("bad real part `{re}`"))?;
    let im = im.trim().parse().map_err(|_| format!("bad imaginary part `{im}`"))?;
    Ok(Complex64::new(re, im))
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load_config(arg: &ConfigArg) -> CliResult<ResolvedConfig> {
    let config = match &arg.config {
        Some(path) => parse_run_config(&read_text(path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?,
        None => RunConfig::default(),
    };
    config.resolve().map_err(|e| CliError::Validation(format!("config: {e}")))
}

fn beam_from(config: &ResolvedConfig, args: &BeamArgs) -> CliResult<BeamGeometry> {
    let mut geom = config.beam;
    if let Some(v) = args.wavelength_um {
        geom.wavelength_um = v;
    }
    if let Some(v) = args.mfd_um {
        geom.mfd_um = v;
    }
    if let Some(v) = args.l_air_um {
        geom.l_air_um = v;
    }
    if args.warm {
        geom.l_air_um = L_AIR_WARM_UM;
    }
    if let Some(v) = args.n_sub {
        geom.n_sub = v;
    }
    if let Some(v) = args.aperture {
        geom.aperture = v;
    }
    match args.path {
        Some(PathArg::Optical) => geom.path = PathConvention::OpticalPath,
        Some(PathArg::Reduced) => geom.path = PathConvention::ReducedPath,
        None => {}
    }
    geom.validate().map_err(invalid)?;
    Ok(geom)
}

/// Output files are only written once every computation has succeeded.
struct Outputs {
    files: Vec<(PathBuf, String)>,
    stdout_data: Option<String>,
}

impl Outputs {
    fn new() -> Self {
        Self { files: Vec::new(), stdout_data: None }
    }

    fn data(&mut self, path: Option<PathBuf>, contents: String) {
        match path {
            Some(p) => self.files.push((p, contents)),
            None => self.stdout_data = Some(contents),
        }
    }

    fn commit(self, report: &mut RunReport) -> CliResult<()> {
        for (path, contents) in &self.files {
            fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            report.outputs.push(path.display().to_string());
        }
        if let Some(data) = self.stdout_data {
            write_stdout(&data)?;
        }
        Ok(())
    }
}

/// A reader that hangs up early (`| head`) is not an error; stop quietly.
fn write_stdout(text: &str) -> CliResult<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io(format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

fn output_path(explicit: &Option<PathBuf>, config: &ResolvedConfig) -> Option<PathBuf> {
    explicit.clone().or_else(|| config.output_path.as_ref().map(PathBuf::from))
}

/// Result records go to stdout, or to stderr when stdout carries CSV data.
fn finish(mut report: RunReport, outputs: Outputs, records: &[String]) -> CliResult<()> {
    let data_on_stdout = outputs.stdout_data.is_some();
    outputs.commit(&mut report)?;
    for r in records {
        if data_on_stdout {
            eprintln!("{r}");
        } else {
            write_stdout(&format!("{r}\n"))?;
        }
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!("{}", report.record());
    Ok(())
}

fn wavelength_grid(min: f64, max: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && min > 0.0 && min <= max) {
        return Err(invalid(format!("invalid wavelength range [{min}, {max}]")));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(invalid(format!("step must be positive, got {step}")));
    }
    let count = ((max - min) / step * (1.0 + 1e-12)).floor() as usize + 1;
    Ok((0..count).map(|i| min + i as f64 * step).collect())
}

fn cmd_stack_spectrum(args: &StackSpectrumArgs) -> CliResult<()> {
    let config = load_config(&args.config)?;
    let stack = match &args.stack {
        Some(path) => parse_stack_json(&read_text(path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?,
        None => config.stack.clone().ok_or_else(|| invalid("no stack: give --stack or a config with a `stack` section"))?,
    };
    let grid = wavelength_grid(args.min, args.max, args.step)?;
    let responses = grid.iter().map(|&wl| stack_response(&stack, wl)).collect::<Result<Vec<_>, _>>().map_err(invalid)?;

    let report = RunReport::new(
        "stack-spectrum",
        &json!({ "stack": stack, "materials": config.materials, "min": args.min, "max": args.max, "step": args.step }),
    );
    let mut outputs = Outputs::new();
    outputs.data(output_path(&args.out, &config), io::stack_spectrum_csv(&stack, &responses));
    let best = responses.iter().min_by(|a, b| a.reflectance.total_cmp(&b.reflectance)).expect("nonempty grid");
    finish(
        report,
        outputs,
        &[format!(
            "rows={} min_reflectance={} at_wavelength_nm={}",
            responses.len(),
            format_float(best.reflectance),
            format_float(best.wavelength_nm)
        )],
    )
}

fn parse_range(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| invalid(format!("bad range component `{p}`"))))
        .collect::<Result<_, _>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(invalid("range must be START:STOP:STEP"));
    };
    if !(step > 0.0 && start <= stop && start.is_finite() && stop.is_finite()) {
        return Err(invalid(format!("invalid range {spec}")));
    }
    let count = ((stop - start) / step * (1.0 + 1e-12)).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

fn cmd_coupling_curve(args: &CouplingArgs) -> CliResult<()> {
    let config = load_config(&args.config)?;
    let geom = beam_from(&config, &args.beam)?;
    let thicknesses = match (&args.thicknesses, &args.range) {
        (Some(list), None) => list.clone(),
        (None, Some(range)) => parse_range(range)?,
        _ => return Err(invalid("give --thicknesses or --range")),
    };
    let points = coupling_curve(&geom, &thicknesses).map_err(invalid)?;
    let report = RunReport::new("coupling-curve", &json!({ "beam": geom, "thicknesses": thicknesses }));
    let mut outputs = Outputs::new();
    outputs.data(output_path(&args.out, &config), io::coupling_csv(&points));
    let first = points[0];
    finish(report, outputs, &[format!("rows={} l_sub_um={} eta={}", points.len(), format_float(first.l_sub_um), format_float(first.eta))])
}

fn default_reflectances(config: &ResolvedConfig, n_sub: f64, mean_wavelength_nm: f64) -> CliResult<[Complex64; 3]> {
    if let Some(r) = config.surfaces.reflectances {
        return Ok(r.map(|[re, im]| Complex64::new(re, im)));
    }
    let fiber_name = config.surfaces.fiber_material.as_deref().unwrap_or("fiber_glass");
    let fiber = config.materials.get(fiber_name).map_err(invalid)?;
    let air = ComplexIndex::lossless(1.0);
    let substrate = ComplexIndex::new(n_sub, 0.0).map_err(invalid)?;
    let front = match &config.stack {
        Some(stack) if stack.incident == substrate => reflection_amplitude(stack, mean_wavelength_nm).map_err(invalid)?,
        _ => fresnel_amplitude(substrate, air),
    };
    Ok([fresnel_amplitude(fiber, air), fresnel_amplitude(air, substrate), front])
}

fn cmd_fringe_synth(args: &SynthArgs) -> CliResult<()> {
    let config = load_config(&args.config)?;
    let n_sub = args.n_sub.unwrap_or(config.beam.n_sub);
    let defaults = default_reflectances(&config, n_sub, 0.5 * (args.min + args.max))?;
    let reflectances = [args.r1.unwrap_or(defaults[0]), args.r2.unwrap_or(defaults[1]), args.r3.unwrap_or(defaults[2])];
    let model = SurfaceModel { reflectances, l_air_um: args.l_air_um, l_sub_um: args.l_sub_um, n_sub };
    let spectrum = synthesize_spectrum(&model, (args.min, args.max), args.step).map_err(invalid)?;

    let r: Vec<[f64; 2]> = reflectances.iter().map(|c| [c.re, c.im]).collect();
    let report = RunReport::new(
        "fringe-synth",
        &json!({ "reflectances": r, "l_air_um": args.l_air_um, "l_sub_um": args.l_sub_um, "n_sub": n_sub,
                 "min": args.min, "max": args.max, "step": args.step }),
    );
    let mut outputs = Outputs::new();
    outputs.data(output_path(&args.out, &config), io::spectrum_csv(&spectrum));
    let amps: Vec<String> = reflectances.iter().map(|c| format_float(c.norm())).collect();
    finish(report, outputs, &[format!("samples={} reflectance_magnitudes={}", spectrum.len(), amps.join(";"))])
}

fn analysis_error(e: ocsnspd::interferometry::InterferometryError) -> CliError {
    if e.is_analysis_failure() {
        CliError::Analysis(e.to_string())
    } else {
        invalid(e)
    }
}

fn cmd_fringe_analyze(args: &AnalyzeArgs) -> CliResult<()> {
    let text = read_text(&args.input)?;
    let spectrum = io::parse_spectrum_csv(&text).map_err(|e| match e {
        io::CsvError::Spectrum(inner) => analysis_error(inner),
        other => CliError::Validation(format!("{}: {other}", args.input.display())),
    })?;
    if let Some(n) = args.n {
        if !(n.is_finite() && n > 0.0) {
            return Err(invalid(format!("--n must be positive, got {n}")));
        }
    }
    let analysis = analyze_fringes(&spectrum).map_err(analysis_error)?;
    let mut records = Vec::new();
    for c in &analysis.components {
        let mut line = format!(
            "optical_distance_um={} delta_lambda_nm={} strength={}",
            format_float(c.optical_distance_um),
            format_float(c.delta_lambda_nm),
            format_float(c.strength)
        );
        if let Some(n) = args.n {
            let d = thickness_from_fringe(c.delta_lambda_nm, analysis.mean_lambda_nm, n).map_err(invalid)?;
            line.push_str(&format!(" thickness_um={}", format_float(d)));
        }
        records.push(line);
    }
    if args.resolve {
        let fit = resolve_surfaces(&spectrum, SurfaceAttribution::ShorterIsAir).map_err(analysis_error)?;
        let mut line = format!(
            "air_optical_um={} substrate_optical_um={} relative_residual={}",
            format_float(fit.air_optical_um),
            format_float(fit.substrate_optical_um),
            format_float(fit.relative_residual)
        );
        if let Some(n) = args.n {
            line.push_str(&format!(" substrate_thickness_um={}", format_float(fit.substrate_thickness_um(n))));
        }
        records.push(line);
    }
    let report = RunReport::new("fringe-analyze", &json!({ "spectrum": spectrum, "n": args.n, "resolve": args.resolve }));
    let mut outputs = Outputs::new();
    if let Some(path) = &args.out {
        outputs.data(Some(path.clone()), io::fringe_report_csv(&analysis));
    }
    records.push(format!("mean_lambda_nm={} components={}", format_float(analysis.mean_lambda_nm), analysis.components.len()));
    finish(report, outputs, &records)
}

fn cmd_de(command: &DeCommand) -> CliResult<()> {
    match command {
        DeCommand::Compose { coupling, absorptance, intrinsic, wavelength_nm } => {
            let budget = DEBudget::new(*coupling, *absorptance, *intrinsic, *wavelength_nm).map_err(invalid)?;
            let de = system_de(&budget).map_err(invalid)?;
            let report = RunReport::new("de-compose", &budget);
            finish(
                report,
                Outputs::new(),
                &[format!(
                    "system_de={} coupling={} absorptance={} intrinsic={} wavelength_nm={}",
                    format_float(de),
                    format_float(*coupling),
                    format_float(*absorptance),
                    format_float(*intrinsic),
                    format_float(*wavelength_nm)
                )],
            )
        }
        DeCommand::FromCounts(args) => {
            let measurements = match (&args.input, args.output) {
                (Some(path), None) => {
                    io::parse_counts_csv(&read_text(path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
                }
                (None, Some(output)) => vec![CountMeasurement {
                    output_count_rate_cps: output,
                    dark_count_rate_cps: args.dark.unwrap_or(0.0),
                    photon_flux_cps: args.flux.unwrap_or(0.0),
                }],
                _ => return Err(invalid("give --input or --output/--dark/--flux")),
            };
            let estimates = measurements.iter().map(de_from_counts).collect::<Result<Vec<_>, _>>().map_err(invalid)?;
            let subtraction = !args.no_subtract;
            let mut report = RunReport::new("de-from-counts", &json!({ "measurements": measurements, "subtraction": subtraction }));
            let mut records = vec![format!("# subtraction={}", if subtraction { "on" } else { "off" })];
            for (i, e) in estimates.iter().enumerate() {
                if e.below_dark {
                    report.warnings.push(format!("measurement {i}: output rate below dark rate, DE clamped to 0"));
                }
                records.push(format!(
                    "de={} raw_de={} below_dark={}",
                    format_float(if subtraction { e.de } else { e.raw_de }),
                    format_float(e.raw_de),
                    e.below_dark
                ));
            }
            let mut outputs = Outputs::new();
            if let Some(path) = &args.out {
                outputs.data(Some(path.clone()), io::counts_de_csv(&measurements, &estimates, subtraction));
            }
            finish(report, outputs, &records)
        }
        DeCommand::AtDarkRate(args) => {
            let text = read_text(&args.curve)?;
            let curve = io::parse_de_curve_csv(&text, &args.label, args.wavelength_nm)
                .map_err(|e| CliError::Validation(format!("{}: {e}", args.curve.display())))?;
            let mode = if args.linear { Interpolation::LinearRate } else { Interpolation::LogRate };
            let de = de_at_dark_rate(&curve, args.rate, mode).map_err(|e| match e {
                ocsnspd::detector::DetectorError::ExtrapolationRefused { .. } => CliError::Analysis(e.to_string()),
                other => invalid(other),
            })?;
            let report = RunReport::new("de-at-dark-rate", &json!({ "curve": curve, "rate": args.rate, "linear": args.linear }));
            finish(
                report,
                Outputs::new(),
                &[format!(
                    "label={} wavelength_nm={} dark_rate_cps={} de={}",
                    curve.label,
                    format_float(curve.wavelength_nm),
                    format_float(args.rate),
                    format_float(de)
                )],
            )
        }
        DeCommand::Enhancement { after, before, after_label, before_label } => {
            let ratio = enhancement_factor(*after, *before).map_err(invalid)?;
            let report = RunReport::new("de-enhancement", &json!({ "after": after, "before": before }));
            finish(
                report,
                Outputs::new(),
                &[format!(
                    "enhancement={} {after_label}={} {before_label}={}",
                    format_float(ratio),
                    format_float(*after),
                    format_float(*before)
                )],
            )
        }
    }
}

fn cmd_design(args: &DesignArgs) -> CliResult<()> {
    let config = load_config(&args.config)?;
    let variable = match args.variable {
        VariableArg::Substrate => DesignVariable::SubstrateThicknessUm,
        VariableArg::Cavity => DesignVariable::CavityThicknessNm,
        VariableArg::Ar => DesignVariable::ArThicknessNm,
    };
    let space = DesignSpace::new(variable, args.lower, args.upper, args.granularity).map_err(invalid)?;

    let (result, inputs) = match args.variable {
        VariableArg::Substrate => {
            if !matches!(args.objective, None | Some(ObjectiveArg::Coupling)) {
                return Err(invalid("substrate design only supports the coupling objective"));
            }
            let geom = beam_from(&config, &args.beam)?;
            (optimize_substrate(&geom, &space).map_err(invalid)?, json!({ "space": space, "beam": geom }))
        }
        VariableArg::Cavity | VariableArg::Ar => {
            let stack: Stack = config.stack.clone().ok_or_else(|| invalid("layer design needs a config with a `stack` section"))?;
            let default_layer = if matches!(args.variable, VariableArg::Cavity) { "SiO" } else { "AR" };
            let layer = args.layer.clone().unwrap_or_else(|| default_layer.to_string());
            let objective = match args.objective {
                Some(ObjectiveArg::OneMinusR) => LayerObjective::OneMinusReflectance,
                Some(ObjectiveArg::Absorptance) => LayerObjective::Absorptance { layer: args.absorber.clone() },
                Some(ObjectiveArg::Coupling) => return Err(invalid("coupling objective applies to the substrate only")),
                None if matches!(args.variable, VariableArg::Ar) => LayerObjective::OneMinusReflectance,
                None => LayerObjective::Absorptance { layer: args.absorber.clone() },
            };
            let result = optimize_layer(&stack, &layer, &space, &objective, args.wavelength_nm).map_err(invalid)?;
            (result, json!({ "space": space, "stack": stack, "layer": layer, "objective": objective, "wavelength_nm": args.wavelength_nm }))
        }
    };

    let report = RunReport::new("design", &inputs);
    let mut outputs = Outputs::new();
    if let Some(path) = output_path(&args.out, &config) {
        outputs.data(Some(path), io::design_trace_csv(&result));
    }
    if let Some(path) = &args.result_out {
        outputs.data(Some(path.clone()), io::design_result_csv(&result));
    }
    finish(
        report,
        outputs,
        &[format!(
            "variable={} argmax={} objective={} snapped={}",
            result.variable.name(),
            format_float(result.argmax),
            format_float(result.objective_value),
            result.snapped
        )],
    )
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::StackSpectrum(args) => cmd_stack_spectrum(&args),
        Command::CouplingCurve(args) => cmd_coupling_curve(&args),
        Command::Fringe(FringeCommand::Synth(args)) => cmd_fringe_synth(&args),
        Command::Fringe(FringeCommand::Analyze(args)) => cmd_fringe_analyze(&args),
        Command::De(command) => cmd_de(&command),
        Command::Design(args) => cmd_design(&args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

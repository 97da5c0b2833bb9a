//! Command line front end.
//!
//! Every subcommand prints a JSON summary on stdout (paper-check prints a
//! table) and writes its main artifact to `--out` when given. Exit codes:
//! 0 success, 1 failed acceptance check, 2 bad configuration or input,
//! 3 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fermichip_core::constants::{SpeciesRegistry, SpinState, H, K_B};
use fermichip_core::density::{default_column_grid, density_line, thomas_fermi_extent, DensityModel};
use fermichip_core::dressing::{
    analyze_wells, connect_branch, detuning_and_rabi, dressed_potential, RfField, Topology,
};
use fermichip_core::evaporation::{evaporation_preset, evaporation_report, EffectiveVolumeModel, PRESET_NAMES};
use fermichip_core::field::{
    find_minimum, find_potential_minimum, ip_fit, trap_depth, trap_frequencies, FieldModel, MagneticField,
};
use fermichip_core::fit::{
    apparent_temperature, fit_fermi_dirac, fit_gaussian, radial_residuals, synthesize_tof_image, FitModel, FitResult,
    Noise, TofImage,
};
use fermichip_core::regression::{self, CRITERIA};
use fermichip_core::thermo::{fermi_energy, thermo_row, HarmonicTrap, ThermoRow, TrappedGasState};
use fermichip_core::Vec3;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::format::{self, float};
use crate::io::{image_csv, read_raster, resolve_state, species_registry, write_raster};
use crate::presets::{dress_preset, geometry};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ACCEPTANCE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "fermichip",
    version,
    about = "Trapped Fermi gas thermodynamics, chip traps, RF dressing and image fitting",
    after_help = "Options may also come from a JSON file: fermichip --config run.json \
                  where run.json is {\"command\": \"thermo\", \"options\": {\"N\": 1e6, ...}}."
)]
pub struct Cli {
    /// Worker threads for parallel stages (default: one per core).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fugacity, chemical potential and energy of a trapped ideal Fermi gas.
    #[command(allow_negative_numbers = true)]
    Thermo(ThermoArgs),
    /// In-trap density along one axis, finite and zero temperature.
    #[command(allow_negative_numbers = true)]
    Density(DensityArgs),
    /// Synthetic time-of-flight column-density image.
    #[command(allow_negative_numbers = true)]
    Tof(TofArgs),
    /// Minimum, frequencies and depth of a chip wire trap.
    #[command(allow_negative_numbers = true)]
    Trap(TrapArgs),
    /// RF-dressed potentials and double-well analysis.
    #[command(allow_negative_numbers = true)]
    Dress(DressArgs),
    /// Evaporation loading budget for a trap preset.
    #[command(allow_negative_numbers = true)]
    Evap(EvapArgs),
    /// Gaussian and Fermi-Dirac fits of a column-density image.
    #[command(allow_negative_numbers = true)]
    Fit(FitArgs),
    /// Reference-number regression suite.
    #[command(allow_negative_numbers = true)]
    PaperCheck(PaperCheckArgs),
}

#[derive(Debug, Args)]
pub struct SpeciesArgs {
    #[arg(long, default_value = "K40")]
    pub species: String,
    /// Zeeman sublevel as a fraction (default: stretched state).
    #[arg(long)]
    pub m_f: Option<String>,
    /// JSON array of extra species definitions.
    #[arg(long)]
    pub species_file: Option<PathBuf>,
}

impl SpeciesArgs {
    fn registry(&self) -> anyhow::Result<SpeciesRegistry> {
        species_registry(self.species_file.as_deref())
    }

    fn state(&self) -> anyhow::Result<SpinState> {
        resolve_state(&self.registry()?, &self.species, self.m_f.as_deref())
    }
}

#[derive(Debug, Args)]
pub struct GasArgs {
    #[command(flatten)]
    pub species: SpeciesArgs,
    /// Atom number.
    #[arg(long = "N", default_value_t = 1e6)]
    pub n: f64,
    #[arg(long, conflicts_with = "temperature_nk")]
    pub t_over_tf: Option<f64>,
    #[arg(long)]
    pub temperature_nk: Option<f64>,
}

impl GasArgs {
    fn gas(&self, trap: HarmonicTrap) -> anyhow::Result<TrappedGasState> {
        let state = self.species.state()?;
        let gas = match (self.t_over_tf, self.temperature_nk) {
            (Some(t), _) => TrappedGasState::from_reduced_temperature(state, trap, self.n, t)?,
            (None, Some(nk)) => TrappedGasState::new(state, trap, self.n, nk * 1e-9)?,
            (None, None) => bail!("give --t-over-tf or --temperature-nk"),
        };
        Ok(gas)
    }
}

fn harmonic(hz: &[f64]) -> anyhow::Result<HarmonicTrap> {
    match hz {
        [f] => Ok(HarmonicTrap::from_hz(*f, *f, *f)?),
        [fx, fy, fz] => Ok(HarmonicTrap::from_hz(*fx, *fy, *fz)?),
        _ => bail!("--trap-hz takes one or three frequencies"),
    }
}

#[derive(Debug, Args)]
pub struct ThermoArgs {
    #[command(flatten)]
    pub gas: GasArgs,
    /// Geometric-mean trap frequency (Hz).
    #[arg(long, default_value_t = 300.0)]
    pub fbar_hz: f64,
    /// Tabulate T/T_F from --from to --to instead of a single point.
    #[arg(long)]
    pub scan: bool,
    #[arg(long, default_value_t = 0.05)]
    pub from: f64,
    #[arg(long, default_value_t = 1.5)]
    pub to: f64,
    #[arg(long, default_value_t = 30)]
    pub points: usize,
    /// JSON summary, or CSV table with --scan.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub gas: GasArgs,
    /// Trap frequencies fx,fy,fz (Hz).
    #[arg(long, value_delimiter = ',', default_values_t = [46.0, 823.0, 823.0])]
    pub trap_hz: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Axis::X)]
    pub axis: Axis,
    #[arg(long, default_value_t = 401)]
    pub points: usize,
    /// Half-width of the line in Thomas-Fermi radii.
    #[arg(long, default_value_t = 1.5)]
    pub extent: f64,
    /// CSV of the line profile.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TofArgs {
    #[command(flatten)]
    pub gas: GasArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [46.0, 823.0, 823.0])]
    pub trap_hz: Vec<f64>,
    /// Expansion time (ms).
    #[arg(long, default_value_t = 10.0)]
    pub time_ms: f64,
    /// Pixels per side.
    #[arg(long, default_value_t = 64)]
    pub pixels: usize,
    /// Gaussian noise RMS as a fraction of the peak.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Raster output file.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the pixels as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrapArgs {
    /// Geometry file or preset name.
    #[arg(long, default_value = "z-trap")]
    pub geometry: String,
    #[arg(long, default_value = "K40")]
    pub species: String,
    #[arg(long)]
    pub m_f: Option<String>,
    #[arg(long)]
    pub species_file: Option<PathBuf>,
    /// Minimum-search start x,y,z (μm), overriding the geometry.
    #[arg(long, value_delimiter = ',')]
    pub seed_um: Option<Vec<f64>>,
    /// Skip the trap-depth ray search.
    #[arg(long)]
    pub no_depth: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DressArgs {
    #[arg(long, default_value = "rb-doublewell")]
    pub preset: String,
    /// Evaluation RF frequency (kHz), overriding the preset.
    #[arg(long)]
    pub rf_khz: Option<f64>,
    /// RF amplitude (mG), overriding the preset.
    #[arg(long)]
    pub b_rf_mg: Option<f64>,
    /// Points in each written potential.
    #[arg(long, default_value_t = 801)]
    pub points: usize,
    /// Directory for the report and per-species potential tables.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvapArgs {
    #[arg(long, default_value = "toronto-z")]
    pub preset: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    Gauss,
    Fd,
    Both,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Raster image to fit.
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelChoice::Both)]
    pub model: ModelChoice,
    /// Pixel noise RMS (atoms/m²) used to weight χ².
    #[arg(long)]
    pub noise_rms: Option<f64>,
    /// Trap frequencies fx,fy,fz (Hz); with --time-ms enables apparent temperatures.
    #[arg(long, value_delimiter = ',')]
    pub trap_hz: Option<Vec<f64>>,
    #[arg(long)]
    pub time_ms: Option<f64>,
    #[arg(long, default_value = "K40")]
    pub species: String,
    #[arg(long)]
    pub species_file: Option<PathBuf>,
    /// Azimuthally averaged residuals as CSV.
    #[arg(long)]
    pub residuals: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PaperCheckArgs {
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<String>>,
    /// JSON record of every check.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit code for an error: numerical failures inside the core library map
/// to 3, everything else to 2.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    err.chain()
        .find_map(|e| e.downcast_ref::<fermichip_core::Error>())
        .map_or(
            EXIT_INPUT,
            |e| if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INPUT },
        )
}

/// Expands `--config FILE` into ordinary arguments. The file holds
/// `{"command": ..., "options": {...}, "jobs": ...}`; booleans become bare
/// flags, arrays comma-separated values. Arguments after the file name are
/// appended and win over the file.
pub fn expand_config(argv: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let Some(pos) = argv.iter().position(|a| a == "--config") else {
        return Ok(argv);
    };
    let path = argv.get(pos + 1).context("--config needs a file")?;
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", Path::new(path).display()))?;
    let doc: Value = serde_json::from_str(&text).context("config is not valid JSON")?;
    let obj = doc.as_object().context("config must be a JSON object")?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "command" | "options" | "jobs") {
            bail!("unknown config key {key:?}");
        }
    }
    let command = obj
        .get("command")
        .and_then(Value::as_str)
        .context("config needs a string \"command\"")?;

    let mut out: Vec<OsString> = argv[..pos].to_vec();
    if out.is_empty() {
        out.push("fermichip".into());
    }
    if let Some(jobs) = obj.get("jobs") {
        out.push("--jobs".into());
        out.push(scalar(jobs)?.into());
    }
    out.push(command.into());
    if let Some(options) = obj.get("options") {
        let options = options.as_object().context("config \"options\" must be an object")?;
        for (key, value) in options {
            let flag = if key == "N" {
                "--N".to_owned()
            } else {
                format!("--{}", key.replace('_', "-"))
            };
            match value {
                Value::Bool(true) => out.push(flag.into()),
                Value::Bool(false) | Value::Null => {}
                Value::Array(items) => {
                    let parts = items.iter().map(scalar).collect::<anyhow::Result<Vec<_>>>()?;
                    out.push(flag.into());
                    out.push(parts.join(",").into());
                }
                other => {
                    out.push(flag.into());
                    out.push(scalar(other)?.into());
                }
            }
        }
    }
    out.extend(argv[pos + 2..].iter().cloned());
    Ok(out)
}

fn scalar(v: &Value) -> anyhow::Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => bail!("config value {v} is not a scalar"),
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run(argv: Vec<OsString>, stdout: &mut dyn Write) -> i32 {
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_INPUT;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            bail!("--jobs must be at least 1");
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("starting worker pool")?;
    let mut buf = Vec::new();
    let result = pool.install(|| {
        let out: &mut dyn Write = &mut buf;
        match &cli.command {
            Command::Thermo(a) => thermo(a, out),
            Command::Density(a) => density(a, out),
            Command::Tof(a) => tof(a, out),
            Command::Trap(a) => trap(a, out),
            Command::Dress(a) => dress(a, out),
            Command::Evap(a) => evap(a, out),
            Command::Fit(a) => fit(a, out),
            Command::PaperCheck(a) => paper_check(a, out),
        }
    });
    stdout.write_all(&buf)?;
    stdout.flush()?;
    result
}

fn emit<T: Serialize>(stdout: &mut dyn Write, value: &T, out: Option<&Path>) -> anyhow::Result<i32> {
    let text = format::json(value)?;
    if let Some(path) = out {
        fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    stdout.write_all(text.as_bytes())?;
    Ok(EXIT_OK)
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn v3(v: Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn species_label(state: &SpinState) -> (String, String) {
    (state.species.name.clone(), state.m_f.to_string())
}

#[derive(Serialize)]
struct ThermoReport {
    species: String,
    m_f: String,
    n: f64,
    fbar_hz: f64,
    fermi_energy_j: f64,
    fermi_temperature_k: f64,
    t_over_tf: f64,
    temperature_k: f64,
    fugacity: f64,
    ln_fugacity: f64,
    mu_over_ef: f64,
    e_per_n_over_ef: f64,
    peak_phase_space_density: f64,
}

fn thermo(a: &ThermoArgs, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let state = a.gas.species.state()?;
    let trap = HarmonicTrap::from_hz(a.fbar_hz, a.fbar_hz, a.fbar_hz)?;
    let e_f = fermi_energy(a.gas.n, &trap);
    let t_f = e_f / K_B;
    if a.scan {
        if a.points < 2 || !(a.to > a.from) || !(a.from > 0.0) {
            bail!("scan needs 0 < --from < --to and at least 2 points");
        }
        let ts: Vec<f64> = (0..a.points)
            .map(|k| a.from + (a.to - a.from) * k as f64 / (a.points - 1) as f64)
            .collect();
        let rows = ts
            .par_iter()
            .map(|&t| thermo_row(t))
            .collect::<Result<Vec<ThermoRow>, _>>()?;
        let text = format::csv(
            &[
                "t_over_tf",
                "temperature_k",
                "fugacity",
                "ln_fugacity",
                "mu_over_ef",
                "e_per_n_over_ef",
                "peak_phase_space_density",
            ],
            rows.iter().map(|r| {
                vec![
                    r.t_over_tf,
                    r.t_over_tf * t_f,
                    r.z,
                    r.ln_z,
                    r.mu_over_ef,
                    r.e_per_n_over_ef,
                    r.n0_lambda3,
                ]
            }),
        );
        if let Some(path) = &a.out {
            write_text(path, &text)?;
        }
        stdout.write_all(text.as_bytes())?;
        return Ok(EXIT_OK);
    }
    let t = match (a.gas.t_over_tf, a.gas.temperature_nk) {
        (Some(t), _) => t,
        (None, Some(nk)) => nk * 1e-9 / t_f,
        (None, None) => bail!("give --t-over-tf, --temperature-nk or --scan"),
    };
    let row = thermo_row(t)?;
    let (species, m_f) = species_label(&state);
    let report = ThermoReport {
        species,
        m_f,
        n: a.gas.n,
        fbar_hz: a.fbar_hz,
        fermi_energy_j: e_f,
        fermi_temperature_k: t_f,
        t_over_tf: t,
        temperature_k: t * t_f,
        fugacity: row.z,
        ln_fugacity: row.ln_z,
        mu_over_ef: row.mu_over_ef,
        e_per_n_over_ef: row.e_per_n_over_ef,
        peak_phase_space_density: row.n0_lambda3,
    };
    emit(stdout, &report, a.out.as_deref())
}

#[derive(Serialize)]
struct DensityReport {
    species: String,
    n: f64,
    trap_hz: Vec<f64>,
    t_over_tf: f64,
    temperature_k: f64,
    fermi_energy_j: f64,
    fermi_temperature_k: f64,
    thomas_fermi_radii_m: [f64; 3],
    axis: usize,
    peak_density_per_m3: f64,
    peak_density_zero_t_per_m3: f64,
}

fn density(a: &DensityArgs, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let gas = a.gas.gas(harmonic(&a.trap_hz)?)?;
    if a.points < 2 || !(a.extent > 0.0) {
        bail!("--points must be at least 2 and --extent positive");
    }
    let axis = a.axis as usize;
    let radii = thomas_fermi_extent(gas.fermi_energy(), gas.mass(), &gas.trap).radii;
    let half = a.extent * radii[axis];
    let s: Vec<f64> = (0..a.points)
        .map(|k| -half + 2.0 * half * k as f64 / (a.points - 1) as f64)
        .collect();
    let (finite, zero) = rayon::join(
        || density_line(&gas, DensityModel::FiniteTemperature, axis, &s),
        || density_line(&gas, DensityModel::ZeroTemperature, axis, &s),
    );
    let (finite, zero) = (finite?, zero?);
    if let Some(path) = &a.out {
        let text = format::csv(
            &["position_m", "density_per_m3", "density_zero_t_per_m3"],
            (0..s.len()).map(|k| vec![s[k], finite.values[k], zero.values[k]]),
        );
        write_text(path, &text)?;
    }
    let centre = density_line(&gas, DensityModel::FiniteTemperature, axis, &[0.0])?.values[0];
    let centre0 = density_line(&gas, DensityModel::ZeroTemperature, axis, &[0.0])?.values[0];
    let report = DensityReport {
        species: gas.state.species.name.clone(),
        n: gas.n,
        trap_hz: a.trap_hz.clone(),
        t_over_tf: gas.reduced_temperature(),
        temperature_k: gas.temperature,
        fermi_energy_j: gas.fermi_energy(),
        fermi_temperature_k: gas.fermi_temperature(),
        thomas_fermi_radii_m: radii,
        axis,
        peak_density_per_m3: centre,
        peak_density_zero_t_per_m3: centre0,
    };
    emit(stdout, &report, None)
}

#[derive(Serialize)]
struct TofReport {
    species: String,
    n: f64,
    t_over_tf: f64,
    temperature_k: f64,
    fugacity: f64,
    expansion_time_s: f64,
    pixels: [usize; 2],
    pitch_m: [f64; 2],
    peak_per_m2: f64,
    integral_atoms: f64,
    noise_rms_per_m2: Option<f64>,
    seed: u64,
    raster: String,
}

fn tof(a: &TofArgs, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let gas = a.gas.gas(harmonic(&a.trap_hz)?)?;
    if !(a.time_ms >= 0.0) || a.pixels < 2 {
        bail!("--time-ms must be non-negative and --pixels at least 2");
    }
    if !(a.noise >= 0.0) {
        bail!("--noise must be non-negative");
    }
    let t = a.time_ms * 1e-3;
    let grid = default_column_grid(&gas, t, a.pixels)?;
    let noise = if a.noise > 0.0 {
        Noise::PeakFraction(a.noise)
    } else {
        Noise::None
    };
    let image = synthesize_tof_image(&gas, t, grid, noise, a.seed)?;
    write_raster(&a.out, &image)?;
    if let Some(path) = &a.csv {
        write_text(path, &image_csv(&image))?;
    }
    let report = TofReport {
        species: gas.state.species.name.clone(),
        n: gas.n,
        t_over_tf: gas.reduced_temperature(),
        temperature_k: gas.temperature,
        fugacity: gas.fugacity().value(),
        expansion_time_s: t,
        pixels: [grid.nx, grid.ny],
        pitch_m: grid.pitch,
        peak_per_m2: image.peak(),
        integral_atoms: image.integral(),
        noise_rms_per_m2: image.noise_rms,
        seed: a.seed,
        raster: a.out.display().to_string(),
    };
    emit(stdout, &report, None)
}

#[derive(Serialize)]
struct DepthJson {
    depth_j: f64,
    temperature_k: f64,
    direction: [f64; 3],
    escape_point_m: [f64; 3],
    unbounded_rays: usize,
    rays: usize,
}

#[derive(Serialize)]
struct IpJson {
    b0_t: f64,
    gradient_t_per_m: f64,
    curvature_t_per_m2: f64,
    axis: [f64; 3],
    residual: f64,
    poor_fit: bool,
    radially_trapping: bool,
    axially_trapping: bool,
}

#[derive(Serialize)]
struct TrapReport {
    geometry: String,
    calibrated: bool,
    species: String,
    m_f: String,
    gravity: bool,
    position_m: [f64; 3],
    height_m: Option<f64>,
    b0_t: f64,
    zero_field: bool,
    frequencies_hz: [f64; 3],
    axes: [[f64; 3]; 3],
    geometric_mean_hz: f64,
    depth: Option<DepthJson>,
    depth_error: Option<String>,
    ioffe_pritchard: Option<IpJson>,
    ioffe_pritchard_error: Option<String>,
}

fn trap(a: &TrapArgs, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let geo = geometry(&a.geometry)?;
    let model: FieldModel = geo.field_model()?;
    let state = resolve_state(
        &species_registry(a.species_file.as_deref())?,
        &a.species,
        a.m_f.as_deref(),
    )?;
    if !state.trappable() {
        return Err(fermichip_core::Error::NotTrappable {
            moment: state.m_f_value() * state.g_f_value(),
        }
        .into());
    }
    let seed = match &a.seed_um {
        Some(s) if s.len() == 3 => Vec3::new(s[0], s[1], s[2]) * 1e-6,
        Some(_) => bail!("--seed-um takes three coordinates"),
        None => geo.seed(),
    };
    let min = if model.gravity.is_some() {
        find_potential_minimum(&model, &state, seed)?
    } else {
        find_minimum(&model, seed)?
    };
    let freqs = trap_frequencies(&model, &state, min.position)?;
    let hz = freqs.omega.map(|w| w / (2.0 * std::f64::consts::PI));
    let (depth, depth_error) = if a.no_depth {
        (None, None)
    } else {
        match trap_depth(&model, &state, min.position) {
            Ok(d) => (
                Some(DepthJson {
                    depth_j: d.depth,
                    temperature_k: d.temperature,
                    direction: v3(d.direction),
                    escape_point_m: v3(d.escape_point),
                    unbounded_rays: d.unbounded.len(),
                    rays: d.rays,
                }),
                None,
            ),
            Err(e) => (None, Some(e.to_string())),
        }
    };
    let (ioffe_pritchard, ioffe_pritchard_error) = match ip_fit(&model, min.position) {
        Ok(fit) => (
            Some(IpJson {
                b0_t: fit.params.b0,
                gradient_t_per_m: fit.params.gradient,
                curvature_t_per_m2: fit.params.curvature,
                axis: v3(fit.axes[2]),
                residual: fit.residual,
                poor_fit: fit.poor_fit,
                radially_trapping: fit.radially_trapping,
                axially_trapping: fit.axially_trapping,
            }),
            None,
        ),
        Err(e) => (None, Some(e.to_string())),
    };
    let (species, m_f) = species_label(&state);
    let report = TrapReport {
        geometry: geo.name.clone(),
        calibrated: geo.calibrated,
        species,
        m_f,
        gravity: model.gravity.is_some(),
        position_m: v3(min.position),
        height_m: model.surface().map(|s| s.height(min.position)),
        b0_t: model.magnitude(min.position)?,
        zero_field: min.zero_field,
        frequencies_hz: hz,
        axes: freqs.axes.map(v3),
        geometric_mean_hz: freqs.geometric_mean() / (2.0 * std::f64::consts::PI),
        depth,
        depth_error,
        ioffe_pritchard,
        ioffe_pritchard_error,
    };
    emit(stdout, &report, a.out.as_deref())
}

#[derive(Serialize)]
struct DressSpecies {
    species: String,
    m_f: String,
    dressed_m_f: String,
    delta_at_origin_hz: f64,
    rabi_at_origin_hz: f64,
    topology: &'static str,
    wells_m: Vec<f64>,
    well_energies_j: Vec<f64>,
    separation_m: Option<f64>,
    barrier_position_m: Option<f64>,
    barrier_j: Option<f64>,
    barrier_hz: Option<f64>,
    level_repulsion_hz: Vec<f64>,
    rwa_warning: bool,
}

#[derive(Serialize)]
struct DressReport {
    preset: String,
    b0_t: f64,
    radial_hz: f64,
    axial_hz: f64,
    reference: String,
    b_rf_t: f64,
    connect_hz: f64,
    rf_hz: f64,
    axis: [f64; 3],
    half_span_m: f64,
    species: Vec<DressSpecies>,
}

fn dress(a: &DressArgs, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let mut p = dress_preset(&a.preset)?;
    if let Some(khz) = a.rf_khz {
        p.rf_hz = khz * 1e3;
    }
    if let Some(mg) = a.b_rf_mg {
        p.b_rf = mg * 1e-7;
    }
    if a.points < 3 {
        bail!("--points must be at least 3");
    }
    let reg = species_registry(None)?;
    let field = p.field(&reg.get(p.reference).context("reference species missing")?.stretched())?;
    let connect = RfField::uniform(p.b_rf, 2.0 * std::f64::consts::PI * p.connect_hz, p.polarization)?;
    let rf = RfField::uniform(p.b_rf, 2.0 * std::f64::consts::PI * p.rf_hz, p.polarization)?;
    let span = (-p.half_span, p.half_span);
    let origin = Vec3::zeros();

    let results = p
        .species
        .par_iter()
        .map(|name| -> anyhow::Result<(DressSpecies, String)> {
            let entry = reg.get(name).with_context(|| format!("unknown species {name}"))?;
            let state = entry.stretched();
            let branch = connect_branch(&state, &detuning_and_rabi(&field, &connect, &state, origin)?)?;
            let wells = analyze_wells(&field, &rf, &state, branch, origin, p.axis, span)?;
            let scan = dressed_potential(&field, &rf, &state, branch, origin, p.axis, span, a.points)?;
            let c0 = detuning_and_rabi(&field, &rf, &state, origin)?;
            let csv = format::csv(
                &[
                    "position_m",
                    "potential_j",
                    "potential_over_h_hz",
                    "detuning_over_h_hz",
                    "rabi_over_h_hz",
                ],
                (0..scan.s.len()).map(|k| {
                    vec![
                        scan.s[k],
                        scan.u_eff[k],
                        scan.u_eff[k] / H,
                        scan.delta[k] / H,
                        scan.rabi[k] / H,
                    ]
                }),
            );
            let row = DressSpecies {
                species: state.species.name.clone(),
                m_f: state.m_f.to_string(),
                dressed_m_f: branch.to_string(),
                delta_at_origin_hz: c0.delta / H,
                rabi_at_origin_hz: c0.rabi / H,
                topology: match wells.topology {
                    Topology::Single => "single",
                    Topology::Double => "double",
                },
                wells_m: wells.wells.clone(),
                well_energies_j: wells.well_energies.clone(),
                separation_m: wells.separation,
                barrier_position_m: wells.barrier_position,
                barrier_j: wells.barrier,
                barrier_hz: wells.barrier.map(|b| b / H),
                level_repulsion_hz: wells.level_repulsion.iter().map(|r| r / H).collect(),
                rwa_warning: scan.rwa_warning,
            };
            Ok((row, csv))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    let mut report = DressReport {
        preset: p.name.to_owned(),
        b0_t: p.b0,
        radial_hz: p.radial_hz,
        axial_hz: p.axial_hz,
        reference: p.reference.to_owned(),
        b_rf_t: p.b_rf,
        connect_hz: p.connect_hz,
        rf_hz: p.rf_hz,
        axis: v3(p.axis),
        half_span_m: p.half_span,
        species: Vec::new(),
    };
    let mut tables = Vec::new();
    for (row, csv) in results {
        tables.push((row.species.clone(), csv));
        report.species.push(row);
    }
    let report_path = match &a.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for (name, csv) in &tables {
                write_text(&dir.join(format!("dress_{name}.csv")), csv)?;
            }
            Some(dir.join("dress_report.json"))
        }
        None => None,
    };
    emit(stdout, &report, report_path.as_deref())
}

#[derive(Serialize)]
struct EvapSpecies {
    species: String,
    rho0: f64,
    effective_volume_m3: f64,
    max_atoms: f64,
    min_start_temperature_k: Option<f64>,
    collision_rate_hz: Option<f64>,
}

#[derive(Serialize)]
struct EvapReport {
    preset: String,
    volume_model: &'static str,
    volume_exponent: f64,
    depth_k: f64,
    eta: f64,
    temperature_k: f64,
    loads: Vec<EvapSpecies>,
}

fn evap(a: &EvapArgs, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let preset = evaporation_preset(&a.preset).with_context(|| {
        format!(
            "unknown evaporation preset {:?}; known: {}",
            a.preset,
            PRESET_NAMES.join(", ")
        )
    })?;
    let r = evaporation_report(&preset)?;
    let report = EvapReport {
        preset: r.preset.clone(),
        volume_model: match preset.model {
            EffectiveVolumeModel::Harmonic { .. } => "harmonic",
            EffectiveVolumeModel::Quadrupole { .. } => "quadrupole",
            EffectiveVolumeModel::Box { .. } => "box",
            EffectiveVolumeModel::QuadrupoleBox { .. } => "quadrupole-box",
        },
        volume_exponent: preset.model.exponent(),
        depth_k: r.depth / K_B,
        eta: r.eta,
        temperature_k: r.temperature,
        loads: r
            .loads
            .iter()
            .map(|l| EvapSpecies {
                species: l.species.clone(),
                rho0: l.rho0,
                effective_volume_m3: l.effective_volume,
                max_atoms: l.max_atoms,
                min_start_temperature_k: l.min_start_temperature,
                collision_rate_hz: l.collision_rate,
            })
            .collect(),
    };
    emit(stdout, &report, a.out.as_deref())
}

#[derive(Serialize)]
struct FitFlagsJson {
    z_at_bound: bool,
    z_poorly_determined: bool,
    covariance_singular: bool,
}

#[derive(Serialize)]
struct FitJson {
    model: &'static str,
    n: f64,
    radius_m: [f64; 2],
    center_m: [f64; 2],
    fugacity: Option<f64>,
    ln_fugacity: Option<f64>,
    fugacity_interval: Option<[f64; 2]>,
    t_over_tf: Option<f64>,
    chi2: f64,
    dof: usize,
    reduced_chi2: f64,
    std_errors: Option<Vec<f64>>,
    gradient_norm: f64,
    evaluations: usize,
    apparent_temperature_k: Option<f64>,
    flags: FitFlagsJson,
}

impl FitJson {
    fn new(f: &FitResult, apparent: Option<f64>) -> Self {
        Self {
            model: match f.model {
                FitModel::Gaussian => "gaussian",
                FitModel::FermiDirac => "fermi-dirac",
            },
            n: f.n,
            radius_m: f.r,
            center_m: f.center,
            fugacity: f.fugacity.map(|z| z.value()),
            ln_fugacity: f.fugacity.map(|z| z.ln()),
            fugacity_interval: f.fugacity_interval.map(|(lo, hi)| [lo, hi]),
            t_over_tf: f.t_over_tf,
            chi2: f.chi2,
            dof: f.dof,
            reduced_chi2: f.reduced_chi2,
            std_errors: f.std_errors.clone(),
            gradient_norm: f.gradient_norm,
            evaluations: f.evaluations,
            apparent_temperature_k: apparent,
            flags: FitFlagsJson {
                z_at_bound: f.flags.z_at_bound,
                z_poorly_determined: f.flags.z_poorly_determined,
                covariance_singular: f.flags.covariance_singular,
            },
        }
    }
}

#[derive(Serialize)]
struct FitReport {
    image: String,
    pixels: [usize; 2],
    pitch_m: [f64; 2],
    noise_rms_per_m2: Option<f64>,
    fits: Vec<FitJson>,
    chi2_ratio_gauss_over_fd: Option<f64>,
}

fn fit(a: &FitArgs, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let raw = read_raster(&a.image)?;
    let image = match a.noise_rms {
        Some(s) => TofImage::new(raw.grid, raw.values, Some(s))?,
        None => raw,
    };
    let (gauss, fd) = match a.model {
        ModelChoice::Gauss => (Some(fit_gaussian(&image)), None),
        ModelChoice::Fd => (None, Some(fit_fermi_dirac(&image))),
        ModelChoice::Both => {
            let (g, f) = rayon::join(|| fit_gaussian(&image), || fit_fermi_dirac(&image));
            (Some(g), Some(f))
        }
    };
    let results: Vec<FitResult> = [gauss, fd].into_iter().flatten().collect::<Result<_, _>>()?;

    let apparent = match (&a.trap_hz, a.time_ms) {
        (Some(hz), Some(ms)) => {
            let trap = harmonic(hz)?;
            let reg = species_registry(a.species_file.as_deref())?;
            let mass = reg
                .get(&a.species)
                .with_context(|| format!("unknown species {}", a.species))?
                .species
                .mass;
            Some((trap, mass, ms * 1e-3))
        }
        (None, None) => None,
        _ => bail!("--trap-hz and --time-ms go together"),
    };
    let fits = results
        .iter()
        .map(|f| {
            FitJson::new(
                f,
                apparent
                    .as_ref()
                    .map(|(trap, mass, t)| apparent_temperature(f, trap, *mass, *t)),
            )
        })
        .collect();

    if let Some(path) = &a.residuals {
        let g = &image.grid;
        let rho_max = 0.5 * (g.nx as f64 * g.pitch[0]).min(g.ny as f64 * g.pitch[1]);
        let bins = 40;
        let per_fit = results
            .iter()
            .map(|f| radial_residuals(&image, f, rho_max, bins))
            .collect::<Result<Vec<_>, _>>()?;
        let mut header = vec!["rho_m"];
        for f in &results {
            header.push(match f.model {
                FitModel::Gaussian => "gaussian_mean_residual",
                FitModel::FermiDirac => "fermi_dirac_mean_residual",
            });
        }
        let text = format::csv(
            &header,
            (0..bins).map(|k| {
                let mut row = vec![per_fit[0][k].rho];
                row.extend(per_fit.iter().map(|b| b[k].mean));
                row
            }),
        );
        write_text(path, &text)?;
    }

    let ratio = match results.as_slice() {
        [g, f] if f.chi2 > 0.0 => Some(g.chi2 / f.chi2),
        _ => None,
    };
    let report = FitReport {
        image: a.image.display().to_string(),
        pixels: [image.grid.nx, image.grid.ny],
        pitch_m: image.grid.pitch,
        noise_rms_per_m2: image.noise_rms,
        fits,
        chi2_ratio_gauss_over_fd: ratio,
    };
    emit(stdout, &report, a.out.as_deref())
}

#[derive(Serialize)]
struct CheckJson {
    label: String,
    computed: f64,
    expected: String,
    pass: bool,
}

#[derive(Serialize)]
struct CriterionJson {
    criterion: String,
    title: String,
    pass: bool,
    error: Option<String>,
    checks: Vec<CheckJson>,
}

fn paper_check(a: &PaperCheckArgs, stdout: &mut dyn Write) -> anyhow::Result<i32> {
    let ids: Vec<String> = match &a.only {
        Some(only) => {
            for id in only {
                if !CRITERIA.contains(&id.as_str()) {
                    bail!("unknown criterion {id:?}; known: {}", CRITERIA.join(", "));
                }
            }
            only.clone()
        }
        None => CRITERIA.iter().map(|s| s.to_string()).collect(),
    };
    let outcomes: Vec<CriterionJson> = ids
        .par_iter()
        .map(|id| match regression::run(id) {
            Ok(checks) => CriterionJson {
                criterion: id.clone(),
                title: regression::title(id).to_owned(),
                pass: checks.iter().all(|c| c.pass),
                error: None,
                checks: checks
                    .into_iter()
                    .map(|c| CheckJson {
                        label: c.label,
                        computed: c.computed,
                        expected: c.expected,
                        pass: c.pass,
                    })
                    .collect(),
            },
            Err(e) => CriterionJson {
                criterion: id.clone(),
                title: regression::title(id).to_owned(),
                pass: false,
                error: Some(e.to_string()),
                checks: Vec::new(),
            },
        })
        .collect();

    for c in &outcomes {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        writeln!(stdout, "{verdict} criterion {}: {}", c.criterion, c.title)?;
        if let Some(e) = &c.error {
            writeln!(stdout, "    error: {e}")?;
        }
        for k in &c.checks {
            let mark = if k.pass { "ok" } else { "XX" };
            writeln!(
                stdout,
                "    [{mark}] {} = {} (expected {})",
                k.label,
                float(k.computed),
                k.expected
            )?;
        }
    }
    let failed = outcomes.iter().filter(|c| !c.pass).count();
    writeln!(
        stdout,
        "{} of {} criteria passed",
        outcomes.len() - failed,
        outcomes.len()
    )?;
    if let Some(path) = &a.out {
        format::write_json(path, &outcomes)?;
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_ACCEPTANCE })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Vec<OsString> {
        list.iter().map(OsString::from).collect()
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn config_expands_to_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(
            &path,
            r#"{"command": "tof", "jobs": 2,
                "options": {"N": 2e5, "t_over_tf": 0.3, "trap-hz": [46, 823, 823], "csv": null, "scan": false, "out": "x.bin"}}"#,
        )
        .unwrap();
        let argv = args(&["fermichip", "--config", path.to_str().unwrap(), "--seed", "4"]);
        let out = expand_config(argv).unwrap();
        let text: Vec<String> = out.iter().map(|s| s.to_string_lossy().into_owned()).collect();
        assert_eq!(
            text,
            [
                "fermichip",
                "--jobs",
                "2",
                "tof",
                "--N",
                "200000.0",
                "--out",
                "x.bin",
                "--t-over-tf",
                "0.3",
                "--trap-hz",
                "46,823,823",
                "--seed",
                "4"
            ]
        );
        Cli::try_parse_from(out).unwrap();
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(&path, r#"{"command": "thermo", "verbose": true}"#).unwrap();
        assert!(expand_config(args(&["fermichip", "--config", path.to_str().unwrap()])).is_err());
        fs::write(&path, r#"{"options": {}}"#).unwrap();
        assert!(expand_config(args(&["fermichip", "--config", path.to_str().unwrap()])).is_err());
    }

    #[test]
    fn error_classification() {
        let numerical: anyhow::Error = fermichip_core::Error::UnboundedDepth.into();
        assert_eq!(exit_code(&numerical), EXIT_NUMERICAL);
        let input: anyhow::Error = fermichip_core::Error::Invalid("bad".into()).into();
        assert_eq!(exit_code(&input.context("while loading")), EXIT_INPUT);
        assert_eq!(exit_code(&anyhow::anyhow!("missing file")), EXIT_INPUT);
    }
}

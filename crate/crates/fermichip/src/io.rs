//! File formats: species tables, chip geometries, the binary image raster
//! and column-density CSV.
//!
//! Geometry and species files use lab units (μm, A, G, atomic mass units,
//! nm); everything is converted to SI on load.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use fermichip_core::constants::{builtin_species, AtomSpecies, SpeciesEntry, SpeciesRegistry, SpinState, AMU};
use fermichip_core::density::GridSpec;
use fermichip_core::field::{FieldModel, SurfacePlane, ZTrapLayout};
use fermichip_core::fit::TofImage;
use fermichip_core::Vec3;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

const UM: f64 = 1e-6;
const GAUSS: f64 = 1e-4;

/// One entry of a species file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesSpec {
    pub name: String,
    pub mass_u: f64,
    #[serde(default)]
    pub scattering_length_nm: Option<f64>,
    /// Hyperfine F as a fraction, e.g. "9/2".
    pub f: String,
    /// Landé g_F as a fraction, e.g. "2/9".
    pub g_f: String,
}

fn fraction(s: &str) -> anyhow::Result<Rational64> {
    s.trim().parse().with_context(|| format!("not a fraction: {s:?}"))
}

impl SpeciesSpec {
    pub fn to_entry(&self) -> anyhow::Result<SpeciesEntry> {
        let species = AtomSpecies::new(
            self.name.clone(),
            self.mass_u * AMU,
            self.scattering_length_nm.map(|a| a * 1e-9),
        )?;
        Ok(SpeciesEntry {
            species,
            f: fraction(&self.f)?,
            g_f: fraction(&self.g_f)?,
        })
    }
}

/// Built-in species plus any entries from a JSON array of [`SpeciesSpec`].
pub fn species_registry(file: Option<&Path>) -> anyhow::Result<SpeciesRegistry> {
    let mut reg = builtin_species();
    if let Some(path) = file {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let specs: Vec<SpeciesSpec> =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        for spec in specs {
            reg.insert(spec.to_entry()?);
        }
    }
    Ok(reg)
}

/// Spin state `name` with `m_f` (stretched state when `None`).
pub fn resolve_state(reg: &SpeciesRegistry, name: &str, m_f: Option<&str>) -> anyhow::Result<SpinState> {
    let entry = reg.get(name).with_context(|| format!("unknown species {name}"))?;
    match m_f {
        Some(m) => Ok(entry.state(fraction(m)?)?),
        None => Ok(entry.stretched()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZTrapSpec {
    pub central_length_um: f64,
    pub lead_length_um: f64,
    pub current_a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireSpec {
    /// Vertices of a chained conductor (μm).
    pub path_um: Vec<[f64; 3]>,
    pub current_a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub point_um: [f64; 3],
    pub normal: [f64; 3],
}

/// Chip wire geometry in lab units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Parameters were tuned numerically to hit target trap properties.
    #[serde(default)]
    pub calibrated: bool,
    #[serde(default)]
    pub z_trap: Option<ZTrapSpec>,
    #[serde(default)]
    pub wires: Vec<WireSpec>,
    pub bias_g: [f64; 3],
    /// Overrides the chip surface implied by `z_trap`.
    #[serde(default)]
    pub surface: Option<SurfaceSpec>,
    /// Direction of gravity; omitted to ignore gravity.
    #[serde(default)]
    pub gravity: Option<[f64; 3]>,
    /// Starting point for the minimum search (μm).
    #[serde(default)]
    pub seed_um: Option<[f64; 3]>,
}

fn v3(a: [f64; 3], scale: f64) -> Vec3 {
    Vec3::new(a[0], a[1], a[2]) * scale
}

impl Geometry {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing geometry {}", path.display()))
    }

    pub fn field_model(&self) -> anyhow::Result<FieldModel> {
        let bias = v3(self.bias_g, GAUSS);
        let mut model = match &self.z_trap {
            Some(z) => ZTrapLayout {
                central_length: z.central_length_um * UM,
                lead_length: z.lead_length_um * UM,
                current: z.current_a,
                bias,
            }
            .build()?,
            None => FieldModel::new(Vec::new(), bias),
        };
        for w in &self.wires {
            if w.path_um.len() < 2 {
                bail!("wire path needs at least two vertices");
            }
            let pts: Vec<Vec3> = w.path_um.iter().map(|p| v3(*p, UM)).collect();
            model.add_path(&pts, w.current_a)?;
        }
        if model.segments.is_empty() {
            bail!("geometry {} has no wires", self.name);
        }
        if let Some(s) = &self.surface {
            model.surface = Some(SurfacePlane::new(v3(s.point_um, UM), v3(s.normal, 1.0)));
        }
        if let Some(g) = self.gravity {
            model = model.with_gravity(v3(g, 1.0));
        }
        Ok(model)
    }

    pub fn seed(&self) -> Vec3 {
        self.seed_um.map_or_else(|| Vec3::new(0.0, 0.0, 100e-6), |s| v3(s, UM))
    }
}

/// Magic bytes opening a raster file.
pub const RASTER_MAGIC: &[u8; 6] = b"FCHIP1";
const RASTER_VERSION: u16 = 1;
const HEADER_LEN: usize = 32;

/// Binary raster: 32-byte little-endian header (magic, u16 version, u32 nx,
/// u32 ny, f64 pitch_x, f64 pitch_y in m) followed by `nx·ny` f64 values,
/// row-major with x fastest. The grid is centred on the origin.
pub fn encode_raster(image: &TofImage) -> Vec<u8> {
    let g = &image.grid;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * image.values.len());
    out.extend_from_slice(RASTER_MAGIC);
    out.extend_from_slice(&RASTER_VERSION.to_le_bytes());
    out.extend_from_slice(&(g.nx as u32).to_le_bytes());
    out.extend_from_slice(&(g.ny as u32).to_le_bytes());
    out.extend_from_slice(&g.pitch[0].to_le_bytes());
    out.extend_from_slice(&g.pitch[1].to_le_bytes());
    for v in &image.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_raster(bytes: &[u8]) -> anyhow::Result<TofImage> {
    if bytes.len() < HEADER_LEN || &bytes[..6] != RASTER_MAGIC {
        bail!("not an FCHIP1 raster");
    }
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let f64_at = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().expect("8 bytes"));
    let version = u16_at(6);
    if version != RASTER_VERSION {
        bail!("unsupported raster version {version}");
    }
    let (nx, ny) = (u32_at(8) as usize, u32_at(12) as usize);
    let pitch = [f64_at(16), f64_at(24)];
    let n = nx.checked_mul(ny).context("raster dimensions overflow")?;
    if bytes.len() != HEADER_LEN + 8 * n {
        bail!(
            "raster holds {} bytes, header promises {}x{} pixels",
            bytes.len(),
            nx,
            ny
        );
    }
    let values = (0..n).map(|k| f64_at(HEADER_LEN + 8 * k)).collect();
    let grid = GridSpec {
        nx,
        ny,
        pitch,
        center: [0.0, 0.0],
    };
    Ok(TofImage::new(grid, values, None)?)
}

pub fn write_raster(path: &Path, image: &TofImage) -> anyhow::Result<()> {
    fs::write(path, encode_raster(image)).with_context(|| format!("writing {}", path.display()))
}

pub fn read_raster(path: &Path) -> anyhow::Result<TofImage> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode_raster(&bytes).with_context(|| format!("decoding {}", path.display()))
}

/// Pixel table `x_m,y_m,column_density_per_m2`.
pub fn image_csv(image: &TofImage) -> String {
    let g = image.grid;
    crate::format::csv(
        &["x_m", "y_m", "column_density_per_m2"],
        (0..g.ny).flat_map(|j| (0..g.nx).map(move |i| vec![g.x(i), g.y(j), image.at(i, j)])),
    )
}

//! Named geometries and dressing scenarios.

use std::env;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::Context;
use fermichip_core::constants::{magnetic_moment, SpinState};
use fermichip_core::field::{gradient_from_frequency, IoffePritchardField, IpTrapParams};
use fermichip_core::Vec3;

use crate::io::Geometry;

/// Directory holding preset files: `$FERMICHIP_DATA_DIR`, else the `data/`
/// directory shipped with the crate.
pub fn data_dir() -> PathBuf {
    env::var_os("FERMICHIP_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data")))
}

/// Loads a geometry by file path, or by preset name from [`data_dir`].
pub fn geometry(name_or_path: &str) -> anyhow::Result<Geometry> {
    let direct = Path::new(name_or_path);
    if direct.is_file() {
        return Geometry::load(direct);
    }
    let preset = data_dir().join(format!("{name_or_path}.json"));
    if preset.is_file() {
        return Geometry::load(&preset);
    }
    anyhow::bail!(
        "no geometry file or preset named {name_or_path:?} (looked in {})",
        data_dir().display()
    )
}

pub const DRESS_PRESETS: [&str; 1] = ["rb-doublewell"];

/// RF-dressed Ioffe-Pritchard scenario. The static trap is specified through
/// the frequencies it gives the reference state.
#[derive(Debug, Clone, PartialEq)]
pub struct DressPreset {
    pub name: &'static str,
    /// Field at the trap bottom (T).
    pub b0: f64,
    pub radial_hz: f64,
    pub axial_hz: f64,
    /// RF amplitude (T) and polarization.
    pub b_rf: f64,
    pub polarization: Vec3,
    /// Frequency at which each branch is identified (Hz).
    pub connect_hz: f64,
    /// Frequency at which the potentials are evaluated (Hz).
    pub rf_hz: f64,
    pub axis: Vec3,
    pub half_span: f64,
    /// Species whose frequencies define the static trap.
    pub reference: &'static str,
    pub species: [&'static str; 2],
}

impl DressPreset {
    pub fn field(&self, reference: &SpinState) -> anyhow::Result<IoffePritchardField> {
        let curvature = reference.mass() * (2.0 * PI * self.axial_hz).powi(2) / magnetic_moment(reference);
        let gradient = gradient_from_frequency(2.0 * PI * self.radial_hz, self.b0, curvature, reference)?;
        Ok(IoffePritchardField::new(IpTrapParams::new(
            self.b0, gradient, curvature,
        )?))
    }
}

pub fn dress_preset(name: &str) -> anyhow::Result<DressPreset> {
    match name {
        "rb-doublewell" => Ok(DressPreset {
            name: "rb-doublewell",
            b0: 1.214e-4,
            radial_hz: 1230.0,
            axial_hz: 13.7,
            b_rf: 200e-7,
            polarization: Vec3::y(),
            connect_hz: 800e3,
            rf_hz: 860e3,
            axis: Vec3::x(),
            half_span: 10e-6,
            reference: "Rb87",
            species: ["Rb87", "K40"],
        }),
        _ => None.with_context(|| format!("unknown dressing preset {name:?}; known: {}", DRESS_PRESETS.join(", "))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_z_trap_loads() {
        let geo = geometry("z-trap").unwrap();
        assert!(geo.calibrated);
        assert!(geo.z_trap.is_some());
        geo.field_model().unwrap();
        assert!(geometry("no-such-trap").is_err());
    }

    #[test]
    fn dress_preset_lookup() {
        let p = dress_preset("rb-doublewell").unwrap();
        assert!(p.connect_hz < p.rf_hz);
        assert!(dress_preset("other").is_err());
    }
}

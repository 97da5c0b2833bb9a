//! Loading and evaporation design rules: effective volumes of power-law
//! traps, loadable atom numbers, current scaling, collision rates and the
//! s-wave cross-section.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::constants::{builtin_species, AtomSpecies, HBAR, K_B, MU_B};
use crate::density::thermal_wavelength;
use crate::numerics::fit_slope;
use crate::{Error, Result};

/// Trap shapes with a power-law effective volume `V_eff ∝ T^δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EffectiveVolumeModel {
    /// 3D harmonic: geometric-mean angular frequency and atomic mass.
    Harmonic { omega_bar: f64, mass: f64 },
    /// 3D linear quadrupole with geometric-mean force `F̄ = μ|∇B|` (J/m).
    Quadrupole { mean_force: f64 },
    /// Flat-bottomed cube of side `side`.
    Box { side: f64 },
    /// 2D quadrupole guide closed by a 1D box of length `length`.
    QuadrupoleBox { mean_force: f64, length: f64 },
}

impl EffectiveVolumeModel {
    /// Power-law exponent δ.
    pub fn exponent(&self) -> f64 {
        match self {
            Self::Harmonic { .. } => 1.5,
            Self::Quadrupole { .. } => 3.0,
            Self::Box { .. } => 0.0,
            Self::QuadrupoleBox { .. } => 2.0,
        }
    }

    /// `V_eff` (m³) at temperature `t` (K).
    pub fn volume(&self, t: f64) -> f64 {
        let kt = K_B * t;
        match *self {
            Self::Harmonic { omega_bar, mass } => (2.0 * PI * kt / (mass * omega_bar * omega_bar)).powf(1.5),
            Self::Quadrupole { mean_force } => 8.0 * PI * (kt / mean_force).powi(3),
            Self::Box { side } => side.powi(3),
            Self::QuadrupoleBox { mean_force, length } => 2.0 * PI * length * (kt / mean_force).powi(2),
        }
    }
}

/// Geometric-mean force of a single-coil quadrupole whose strong (axial)
/// gradient is `strong_gradient` (T/m), for moment `moment` (J/T). The 2:1:1
/// gradient anisotropy gives `F̄ = μ G / 2^{2/3}`.
pub fn quadrupole_mean_force(moment: f64, strong_gradient: f64) -> f64 {
    moment * strong_gradient / 2f64.powf(2.0 / 3.0)
}

/// Isotropic harmonic frequency `√(μ B''/M)` from a field curvature (T/m²).
pub fn omega_from_curvature(moment: f64, curvature: f64, mass: f64) -> f64 {
    (moment * curvature / mass).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadingBudget {
    /// Peak phase-space density ρ0.
    pub rho0: f64,
    /// Trap depth U_td (J).
    pub depth: f64,
    /// Truncation parameter η = U_td/(k_B T).
    pub eta: f64,
    pub mass: f64,
}

impl LoadingBudget {
    pub fn new(rho0: f64, depth: f64, eta: f64, mass: f64) -> Result<Self> {
        if !(rho0 > 0.0 && depth > 0.0 && eta >= 1.0 && mass > 0.0) {
            return Err(Error::invalid("loading budget needs rho0 > 0, depth > 0, eta >= 1"));
        }
        Ok(Self { rho0, depth, eta, mass })
    }

    /// Loading temperature `U_td/(η k_B)`.
    pub fn temperature(&self) -> f64 {
        self.depth / (self.eta * K_B)
    }
}

/// `N = ρ0 Λ_T^{-3} V_eff(T)`.
pub fn atoms_at_temperature(rho0: f64, mass: f64, model: &EffectiveVolumeModel, t: f64) -> f64 {
    rho0 * model.volume(t) / thermal_wavelength(mass, t).powi(3)
}

/// Largest number of atoms loadable at phase-space density ρ0, evaluated at
/// `T = U_td/(η k_B)`.
pub fn max_loadable_atoms(budget: &LoadingBudget, model: &EffectiveVolumeModel) -> f64 {
    atoms_at_temperature(budget.rho0, budget.mass, model, budget.temperature())
}

/// Family of single-wire harmonic traps labelled by the wire current, with
/// depth ∝ I^a, ω⊥ ∝ I^b and ω_z ∝ I^c relative to a reference trap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentScalingFamily {
    pub reference_current: f64,
    pub reference_depth: f64,
    pub reference_omega_perp: f64,
    pub reference_omega_z: f64,
    pub depth_exponent: f64,
    pub omega_perp_exponent: f64,
    pub omega_z_exponent: f64,
    pub eta: f64,
    pub rho0: f64,
    pub mass: f64,
}

impl CurrentScalingFamily {
    /// Trap above a long wire at fixed height: bias `B0⊥ ∝ I^p` sets the
    /// depth, `ω⊥ ∝ B0⊥/I`, and `ω_z ∝ I^q`.
    pub fn single_wire(bias_exponent: f64, omega_z_exponent: f64) -> Self {
        let rb = builtin_species().get("Rb87").map(|e| e.species.mass).unwrap_or(1.0);
        Self {
            reference_current: 1.0,
            reference_depth: K_B * 1e-3,
            reference_omega_perp: 2.0 * PI * 800.0,
            reference_omega_z: 2.0 * PI * 50.0,
            depth_exponent: bias_exponent,
            omega_perp_exponent: bias_exponent - 1.0,
            omega_z_exponent,
            eta: 4.0,
            rho0: 1e-6,
            mass: rb,
        }
    }

    /// `N_max` at wire current `current`.
    pub fn max_atoms(&self, current: f64) -> f64 {
        let x = current / self.reference_current;
        let depth = self.reference_depth * x.powf(self.depth_exponent);
        let wp = self.reference_omega_perp * x.powf(self.omega_perp_exponent);
        let wz = self.reference_omega_z * x.powf(self.omega_z_exponent);
        let model = EffectiveVolumeModel::Harmonic {
            omega_bar: (wp * wp * wz).cbrt(),
            mass: self.mass,
        };
        let budget = LoadingBudget {
            rho0: self.rho0,
            depth,
            eta: self.eta,
            mass: self.mass,
        };
        max_loadable_atoms(&budget, &model)
    }
}

/// Log-log slope of `N_max` against current over one decade above the
/// reference current.
pub fn current_scaling_exponent(family: &CurrentScalingFamily) -> f64 {
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..=20)
        .map(|k| {
            let i = family.reference_current * 10f64.powf(k as f64 / 20.0);
            (i.ln(), family.max_atoms(i).ln())
        })
        .unzip();
    fit_slope(&xs, &ys)
}

/// Central collision rate `σ ρ0 M (k_B T)² / (π² ħ³)`.
pub fn collision_rate(mass: f64, rho0: f64, t: f64, sigma: f64) -> f64 {
    let kt = K_B * t;
    sigma * rho0 * mass * kt * kt / (PI * PI * HBAR.powi(3))
}

/// Mean thermal speed `√(8 k_B T/(π M))`.
pub fn mean_speed(mass: f64, t: f64) -> f64 {
    (8.0 * K_B * t / (PI * mass)).sqrt()
}

/// Lowest start temperature sustaining a collision rate `gamma_min`, from
/// `(k_B T)² ≥ γ π² ħ³/(M σ ρ0)` with `σ = 8π a²`.
pub fn min_start_temperature(mass: f64, rho0: f64, gamma_min: f64, scattering_length: f64) -> Result<f64> {
    if !(mass > 0.0 && rho0 > 0.0 && gamma_min > 0.0 && scattering_length != 0.0) {
        return Err(Error::domain("inputs must be positive and a_s nonzero"));
    }
    let sigma = sigma_identical_bosons(scattering_length);
    Ok((gamma_min * PI * PI * HBAR.powi(3) / (mass * sigma * rho0)).sqrt() / K_B)
}

/// Reference inputs of the start-temperature scaling law.
pub const T0_REFERENCE_RHO0: f64 = 1e-6;
pub const T0_REFERENCE_GAMMA: f64 = 150.0;
pub const T0_REFERENCE_SCATTERING_LENGTH: f64 = 5.3e-9;

/// Scaling-law form `T0 (1e-6/ρ0)^{1/2} (γ/150 s⁻¹)^{1/2} (5.3 nm/a)` with the
/// prefactor `T0` evaluated exactly for Rb87 at the reference inputs
/// (299.0 μK).
pub fn min_start_temperature_scaling(rho0: f64, gamma_min: f64, scattering_length: f64) -> Result<f64> {
    let rb = builtin_species()
        .get("Rb87")
        .map(|e| e.species.mass)
        .ok_or_else(|| Error::invalid("Rb87 missing from registry"))?;
    let t0 = min_start_temperature(
        rb,
        T0_REFERENCE_RHO0,
        T0_REFERENCE_GAMMA,
        T0_REFERENCE_SCATTERING_LENGTH,
    )?;
    Ok(t0
        * (T0_REFERENCE_RHO0 / rho0).sqrt()
        * (gamma_min / T0_REFERENCE_GAMMA).sqrt()
        * (T0_REFERENCE_SCATTERING_LENGTH / scattering_length))
}

/// s-wave cross-section of distinguishable particles, `4π a²/(1 + a² k²)`.
pub fn sigma_swave(a: f64, k: f64) -> Result<f64> {
    if a == 0.0 || !(k >= 0.0) {
        return Err(Error::domain("need a != 0 and k >= 0"));
    }
    Ok(4.0 * PI * a * a / (1.0 + a * a * k * k))
}

/// Low-energy cross-section of identical bosons, `8π a²`.
pub fn sigma_identical_bosons(a: f64) -> f64 {
    8.0 * PI * a * a
}

/// One species loaded into a preset trap.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetLoad {
    pub species: AtomSpecies,
    pub rho0: f64,
}

/// Worked trap examples for loading estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaporationPreset {
    pub name: &'static str,
    pub model: EffectiveVolumeModel,
    pub depth: f64,
    pub eta: f64,
    pub loads: Vec<PresetLoad>,
}

pub const PRESET_NAMES: [&str; 4] = ["libbrecht-loop", "ioffe-c", "reichel-z", "toronto-z"];

/// Looks up one of [`PRESET_NAMES`].
///
/// * `libbrecht-loop`: single-coil quadrupole, 5.4e5 G/cm strong gradient,
///   21 mK depth.
/// * `ioffe-c`: harmonic microtrap, ω̄ = 2π·94 kHz, 1.3 mK depth.
/// * `reichel-z`: Z-wire trap, ω̄ = 2π·300 Hz, 1.3 mK depth.
/// * `toronto-z`: isotropic 3e4 G/cm² curvature, 1.05 mK depth at η = 3.5
///   (300 μK), loaded with Rb87 and K40.
///
/// All use η = 4 and ρ0 = 1e-6 for Rb87 unless stated.
pub fn evaporation_preset(name: &str) -> Option<EvaporationPreset> {
    let reg = builtin_species();
    let rb = reg.get("Rb87")?.species.clone();
    let k = reg.get("K40")?.species.clone();
    let rb_load = || {
        alloc::vec![PresetLoad {
            species: rb.clone(),
            rho0: 1e-6,
        }]
    };
    let harmonic_hz = |hz: f64| EffectiveVolumeModel::Harmonic {
        omega_bar: 2.0 * PI * hz,
        mass: rb.mass,
    };
    Some(match name {
        "libbrecht-loop" => EvaporationPreset {
            name: "libbrecht-loop",
            // 5.4e5 G/cm = 5.4e3 T/m
            model: EffectiveVolumeModel::Quadrupole {
                mean_force: quadrupole_mean_force(MU_B, 5.4e3),
            },
            depth: K_B * 21e-3,
            eta: 4.0,
            loads: rb_load(),
        },
        "ioffe-c" => EvaporationPreset {
            name: "ioffe-c",
            model: harmonic_hz(94e3),
            depth: K_B * 1.3e-3,
            eta: 4.0,
            loads: rb_load(),
        },
        "reichel-z" => EvaporationPreset {
            name: "reichel-z",
            model: harmonic_hz(300.0),
            depth: K_B * 1.3e-3,
            eta: 4.0,
            loads: rb_load(),
        },
        "toronto-z" => EvaporationPreset {
            name: "toronto-z",
            // 3e4 G/cm² = 3e4 T/m²
            model: EffectiveVolumeModel::Harmonic {
                omega_bar: omega_from_curvature(MU_B, 3e4, rb.mass),
                mass: rb.mass,
            },
            depth: K_B * 1.05e-3,
            eta: 3.5,
            loads: alloc::vec![
                PresetLoad {
                    species: rb.clone(),
                    rho0: 1e-6
                },
                PresetLoad { species: k, rho0: 4e-8 },
            ],
        },
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesLoadReport {
    pub species: String,
    pub rho0: f64,
    /// Effective volume (m³) at the loading temperature; species-dependent
    /// only for harmonic traps through the mass.
    pub effective_volume: f64,
    pub max_atoms: f64,
    /// Minimum start temperature for 150 s⁻¹, when the scattering length is known.
    pub min_start_temperature: Option<f64>,
    /// Central collision rate at the loading temperature.
    pub collision_rate: Option<f64>,
}

use alloc::string::String;

#[derive(Debug, Clone, PartialEq)]
pub struct EvaporationReport {
    pub preset: String,
    pub temperature: f64,
    pub depth: f64,
    pub eta: f64,
    pub loads: Vec<SpeciesLoadReport>,
}

/// Loading estimates for every species of a preset.
pub fn evaporation_report(preset: &EvaporationPreset) -> Result<EvaporationReport> {
    let t = preset.depth / (preset.eta * K_B);
    let mut loads = Vec::new();
    for load in &preset.loads {
        // a harmonic trap built for one species confines another with the
        // same spring constant M ω²
        let model = match preset.model {
            EffectiveVolumeModel::Harmonic { omega_bar, mass } => EffectiveVolumeModel::Harmonic {
                omega_bar: omega_bar * (mass / load.species.mass).sqrt(),
                mass: load.species.mass,
            },
            m => m,
        };
        let budget = LoadingBudget::new(load.rho0, preset.depth, preset.eta, load.species.mass)?;
        let (tmin, gamma) = match load.species.scattering_length {
            Some(a) => (
                Some(min_start_temperature(
                    load.species.mass,
                    load.rho0,
                    T0_REFERENCE_GAMMA,
                    a,
                )?),
                Some(collision_rate(
                    load.species.mass,
                    load.rho0,
                    t,
                    sigma_identical_bosons(a),
                )),
            ),
            None => (None, None),
        };
        loads.push(SpeciesLoadReport {
            species: load.species.name.clone(),
            rho0: load.rho0,
            effective_volume: model.volume(t),
            max_atoms: max_loadable_atoms(&budget, &model),
            min_start_temperature: tmin,
            collision_rate: gamma,
        });
    }
    Ok(EvaporationReport {
        preset: preset.name.into(),
        temperature: t,
        depth: preset.depth,
        eta: preset.eta,
        loads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{rb87_stretched, RB87_SCATTERING_LENGTH};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn rb_mass() -> f64 {
        rb87_stretched().mass()
    }

    fn report(name: &str) -> EvaporationReport {
        evaporation_report(&evaporation_preset(name).unwrap()).unwrap()
    }

    const UM3: f64 = 1e-18;

    #[test]
    fn reichel_z() {
        let r = report("reichel-z");
        assert_relative_eq!(r.temperature, 325e-6, max_relative = 1e-12);
        let l = &r.loads[0];
        assert!((l.effective_volume / UM3 / 1.289e7 - 1.0).abs() < 2e-3);
        assert!((l.max_atoms / 1.150e7 - 1.0).abs() < 2e-3);
    }

    #[test]
    fn libbrecht_loop() {
        let l = &report("libbrecht-loop").loads[0];
        assert!((l.effective_volume / UM3 / 304.8 - 1.0).abs() < 2e-3);
        assert!((l.max_atoms / 1.766e4 - 1.0).abs() < 2e-3);
    }

    #[test]
    fn ioffe_c() {
        let l = &report("ioffe-c").loads[0];
        assert!((l.effective_volume / UM3 / 0.419 - 1.0).abs() < 5e-3);
        assert!(l.max_atoms < 1.0);
    }

    #[test]
    fn toronto_z() {
        let r = report("toronto-z");
        assert_relative_eq!(r.temperature, 300e-6, max_relative = 1e-12);
        let rb = &r.loads[0];
        assert!((rb.effective_volume / UM3 / 2.861e7 - 1.0).abs() < 2e-3);
        assert!((rb.max_atoms / 2.26e7 - 1.0).abs() < 5e-3);
        let k = &r.loads[1];
        assert!((k.max_atoms / 2.82e5 - 1.0).abs() < 5e-3);
        // same spring constant: identical volume for both species
        assert_relative_eq!(k.effective_volume, rb.effective_volume, max_relative = 1e-12);
        assert!(k.collision_rate.is_none());
        let w = omega_from_curvature(MU_B, 3e4, rb_mass()) / (2.0 * PI);
        assert!((w - 220.98).abs() < 0.01);
        assert!(evaporation_preset("nope").is_none());
    }

    #[test]
    fn power_law_exponents() {
        let m = rb_mass();
        let models = [
            EffectiveVolumeModel::Harmonic {
                omega_bar: 1e3,
                mass: m,
            },
            EffectiveVolumeModel::Quadrupole { mean_force: 1e-20 },
            EffectiveVolumeModel::Box { side: 1e-4 },
            EffectiveVolumeModel::QuadrupoleBox {
                mean_force: 1e-20,
                length: 1e-3,
            },
        ];
        for model in models {
            let (x, y): (Vec<f64>, Vec<f64>) = [1e-6, 1e-5, 1e-4, 1e-3]
                .iter()
                .map(|&t| (f64::ln(t), model.volume(t).ln()))
                .unzip();
            assert!((fit_slope(&x, &y) - model.exponent()).abs() < 1e-6);
        }
    }

    #[test]
    fn atoms_scale_with_depth() {
        let m = rb_mass();
        let model = EffectiveVolumeModel::Quadrupole { mean_force: 1e-20 };
        let (x, y): (Vec<f64>, Vec<f64>) = [1e-4, 1e-3, 1e-2]
            .iter()
            .map(|&d| {
                let b = LoadingBudget::new(1e-6, K_B * d, 4.0, m).unwrap();
                (d.ln(), max_loadable_atoms(&b, &model).ln())
            })
            .unzip();
        assert!((fit_slope(&x, &y) - 4.5).abs() < 1e-3);
    }

    #[test]
    fn stiffer_harmonic_traps_hold_fewer_atoms() {
        let m = rb_mass();
        let b = LoadingBudget::new(1e-6, K_B * 1e-3, 4.0, m).unwrap();
        let n = |w: f64| max_loadable_atoms(&b, &EffectiveVolumeModel::Harmonic { omega_bar: w, mass: m });
        assert!(n(1e3) > n(2e3));
        assert_relative_eq!(n(1e3) / n(2e3), 8.0, max_relative = 1e-12);
    }

    #[test]
    fn current_scaling() {
        assert!((current_scaling_exponent(&CurrentScalingFamily::single_wire(1.0, 0.5)) - 2.5).abs() < 1e-9);
        assert!((current_scaling_exponent(&CurrentScalingFamily::single_wire(1.0, 0.0)) - 3.0).abs() < 1e-9);
        let fixed = CurrentScalingFamily {
            omega_perp_exponent: 0.0,
            ..CurrentScalingFamily::single_wire(0.0, 0.0)
        };
        assert!(current_scaling_exponent(&fixed).abs() < 1e-9);
    }

    #[test]
    fn collision_rate_reference() {
        let g = collision_rate(rb_mass(), 1e-6, 300e-6, sigma_identical_bosons(RB87_SCATTERING_LENGTH));
        assert!((g - 151.0).abs() < 0.1);
        let g2 = collision_rate(rb_mass(), 1e-6, 600e-6, sigma_identical_bosons(RB87_SCATTERING_LENGTH));
        assert_relative_eq!(g2, 4.0 * g, max_relative = 1e-14);
    }

    #[test]
    fn start_temperature() {
        let m = rb_mass();
        let t = min_start_temperature(m, 1e-6, 150.0, 5.3e-9).unwrap();
        assert!((t * 1e6 - 299.0).abs() < 0.05);
        assert_relative_eq!(
            min_start_temperature(m, 1e-4, 150.0, 5.3e-9).unwrap(),
            t / 10.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            min_start_temperature(m, 1e-6, 150.0, 2.65e-9).unwrap(),
            2.0 * t,
            max_relative = 1e-12
        );
        for (rho, g, a) in [(1e-6, 150.0, 5.3e-9), (3e-5, 40.0, 7e-9), (1e-7, 800.0, 2e-9)] {
            assert_relative_eq!(
                min_start_temperature_scaling(rho, g, a).unwrap(),
                min_start_temperature(m, rho, g, a).unwrap(),
                max_relative = 1e-12
            );
        }
        assert!(min_start_temperature(m, 0.0, 150.0, 5.3e-9).is_err());
    }

    #[test]
    fn cross_sections() {
        let a = 5e-9;
        assert_eq!(sigma_swave(a, 0.0).unwrap(), 4.0 * PI * a * a);
        assert_relative_eq!(sigma_swave(a, 1.0 / a).unwrap(), 2.0 * PI * a * a, max_relative = 1e-15);
        assert_eq!(sigma_identical_bosons(a), 2.0 * sigma_swave(a, 0.0).unwrap());
        assert!(sigma_swave(0.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn collision_rate_is_n0_sigma_v(rho0 in 1e-9_f64..0.1, t in 1e-8_f64..1e-2, a in 1e-10_f64..1e-7, mass_u in 1.0_f64..200.0) {
            let m = mass_u * crate::constants::AMU;
            let sigma = sigma_identical_bosons(a);
            let n0 = rho0 / thermal_wavelength(m, t).powi(3);
            let direct = n0 * sigma * mean_speed(m, t);
            let closed = collision_rate(m, rho0, t, sigma);
            prop_assert!((closed / direct - 1.0).abs() < 1e-12);
        }

        #[test]
        fn sigma_decreases_with_k(a in 1e-10_f64..1e-7, k1 in 0.0_f64..1e9, dk in 1.0_f64..1e9) {
            prop_assert!(sigma_swave(a, k1 + dk).unwrap() < sigma_swave(a, k1).unwrap());
        }
    }
}

//! Physical constants (CODATA 2018, SI) and the atomic species registry.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive};

use crate::{Error, Result};

/// Planck constant (J s), exact.
pub const H: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = H / (2.0 * PI);
/// Boltzmann constant (J/K), exact.
pub const K_B: f64 = 1.380_649e-23;
/// Bohr magneton (J/T).
pub const MU_B: f64 = 9.274_010_078_3e-24;
/// Vacuum permeability (T m/A).
pub const MU_0: f64 = 1.256_637_062_12e-6;
/// Unified atomic mass unit (kg).
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Standard gravitational acceleration (m/s^2).
pub const G_STANDARD: f64 = 9.806_65;

/// Bundle of the constants above, for callers that want to pass them around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub h: f64,
    pub k_b: f64,
    pub mu_b: f64,
    pub mu_0: f64,
    pub atomic_mass_unit: f64,
}

impl PhysicalConstants {
    pub const SI: PhysicalConstants = PhysicalConstants {
        hbar: HBAR,
        h: H,
        k_b: K_B,
        mu_b: MU_B,
        mu_0: MU_0,
        atomic_mass_unit: AMU,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::SI
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomSpecies {
    pub name: String,
    /// Mass in kg.
    pub mass: f64,
    /// s-wave scattering length in m, when known.
    pub scattering_length: Option<f64>,
}

impl AtomSpecies {
    pub fn new(name: impl Into<String>, mass: f64, scattering_length: Option<f64>) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::invalid("species mass must be positive"));
        }
        Ok(Self {
            name: name.into(),
            mass,
            scattering_length,
        })
    }
}

/// Hyperfine Zeeman sublevel |F, m_F> with its Landé factor.
///
/// Quantum numbers and g-factors are exact rationals so that products like
/// `m_F g_F` come out exactly (1 for both stretched K and Rb states).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    pub species: AtomSpecies,
    pub f: Rational64,
    pub m_f: Rational64,
    pub g_f: Rational64,
}

impl SpinState {
    pub fn new(species: AtomSpecies, f: Rational64, m_f: Rational64, g_f: Rational64) -> Result<Self> {
        let two_f = f * 2;
        if !two_f.is_integer() || f < Rational64::from_integer(0) {
            return Err(Error::invalid("F must be a non-negative half-integer"));
        }
        if !(m_f * 2).is_integer() || !(f - m_f).is_integer() {
            return Err(Error::invalid("m_F must be a half-integer with F - m_F integral"));
        }
        if m_f.abs() > f {
            return Err(Error::invalid("|m_F| must not exceed F"));
        }
        Ok(Self { species, f, m_f, g_f })
    }

    /// `m_F g_F` as an exact rational.
    pub fn moment_ratio(&self) -> Rational64 {
        self.m_f * self.g_f
    }

    pub fn trappable(&self) -> bool {
        self.moment_ratio() > Rational64::from_integer(0)
    }

    pub fn mass(&self) -> f64 {
        self.species.mass
    }

    pub fn f_value(&self) -> f64 {
        rational_to_f64(self.f)
    }

    pub fn m_f_value(&self) -> f64 {
        rational_to_f64(self.m_f)
    }

    pub fn g_f_value(&self) -> f64 {
        rational_to_f64(self.g_f)
    }

    /// Same atom in another sublevel of the same manifold.
    pub fn with_m_f(&self, m_f: Rational64) -> Result<Self> {
        Self::new(self.species.clone(), self.f, m_f, self.g_f)
    }

    /// All sublevels m_F = -F..=F of this manifold.
    pub fn manifold(&self) -> Vec<SpinState> {
        let n = (self.f * 2).to_integer();
        (0..=n)
            .map(|k| {
                let m_f = -self.f + Rational64::new(k, 1);
                SpinState { m_f, ..self.clone() }
            })
            .collect()
    }
}

pub fn rational_to_f64(r: Rational64) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Magnetic moment m_F g_F mu_B (J/T) of a weak-field state.
pub fn magnetic_moment(state: &SpinState) -> f64 {
    rational_to_f64(state.moment_ratio()) * MU_B
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesEntry {
    pub species: AtomSpecies,
    /// Ground manifold F and its g_F; states are generated on demand.
    pub f: Rational64,
    pub g_f: Rational64,
}

impl SpeciesEntry {
    pub fn state(&self, m_f: Rational64) -> Result<SpinState> {
        SpinState::new(self.species.clone(), self.f, m_f, self.g_f)
    }

    pub fn stretched(&self) -> SpinState {
        SpinState {
            species: self.species.clone(),
            f: self.f,
            m_f: self.f,
            g_f: self.g_f,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpeciesRegistry {
    pub entries: Vec<SpeciesEntry>,
}

impl SpeciesRegistry {
    pub fn get(&self, name: &str) -> Option<&SpeciesEntry> {
        self.entries.iter().find(|e| e.species.name == name)
    }

    pub fn insert(&mut self, entry: SpeciesEntry) {
        match self.entries.iter_mut().find(|e| e.species.name == entry.species.name) {
            Some(slot) => *slot = entry,
            None => self.entries.push(entry),
        }
    }

    pub fn state(&self, name: &str, m_f: Rational64) -> Result<SpinState> {
        self.get(name)
            .ok_or_else(|| Error::invalid(alloc::format!("unknown species {name}")))?
            .state(m_f)
    }
}

pub const K40_MASS_U: f64 = 39.963_998_48;
pub const RB87_MASS_U: f64 = 86.909_180_527;
pub const RB87_SCATTERING_LENGTH: f64 = 5.3e-9;

/// K40 (F = 9/2, g_F = 2/9) and Rb87 (F = 2, g_F = 1/2).
pub fn builtin_species() -> SpeciesRegistry {
    SpeciesRegistry {
        entries: alloc::vec![
            SpeciesEntry {
                species: AtomSpecies {
                    name: "K40".into(),
                    mass: K40_MASS_U * AMU,
                    scattering_length: None,
                },
                f: Rational64::new(9, 2),
                g_f: Rational64::new(2, 9),
            },
            SpeciesEntry {
                species: AtomSpecies {
                    name: "Rb87".into(),
                    mass: RB87_MASS_U * AMU,
                    scattering_length: Some(RB87_SCATTERING_LENGTH),
                },
                f: Rational64::from_integer(2),
                g_f: Rational64::new(1, 2),
            },
        ],
    }
}

/// K40 |9/2, 9/2>.
pub fn k40_stretched() -> SpinState {
    builtin_species()
        .get("K40")
        .map(SpeciesEntry::stretched)
        .expect("builtin")
}

/// Rb87 |2, 2>.
pub fn rb87_stretched() -> SpinState {
    builtin_species()
        .get("Rb87")
        .map(SpeciesEntry::stretched)
        .expect("builtin")
}

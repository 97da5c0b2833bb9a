//! Thermodynamics of an ideal Fermi gas in a three-dimensional harmonic trap.
//!
//! Energies are in joules and temperatures in kelvin. Reduced quantities use
//! `t = T/T_F` and energies in units of `E_F = ħω̄(6N)^{1/3}`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use crate::constants::{SpinState, HBAR, K_B};
use crate::numerics::brent;
use crate::polylog::{bose_fn, fermi_fn_ln, Fugacity};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicTrap {
    /// Angular frequencies (rad/s) along x, y, z.
    pub omega: [f64; 3],
    /// Optional trap depth in joules.
    pub depth: Option<f64>,
}

impl HarmonicTrap {
    pub fn new(omega_x: f64, omega_y: f64, omega_z: f64) -> Result<Self> {
        let omega = [omega_x, omega_y, omega_z];
        if omega.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::invalid("trap frequencies must be positive"));
        }
        Ok(Self { omega, depth: None })
    }

    pub fn isotropic(omega: f64) -> Result<Self> {
        Self::new(omega, omega, omega)
    }

    /// Trap from ordinary frequencies in Hz.
    pub fn from_hz(fx: f64, fy: f64, fz: f64) -> Result<Self> {
        Self::new(2.0 * PI * fx, 2.0 * PI * fy, 2.0 * PI * fz)
    }

    pub fn with_depth(mut self, depth: f64) -> Self {
        self.depth = Some(depth);
        self
    }

    /// Geometric mean frequency ω̄.
    pub fn omega_bar(&self) -> f64 {
        (self.omega[0] * self.omega[1] * self.omega[2]).cbrt()
    }

    pub fn omega_min(&self) -> f64 {
        self.omega.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Harmonic potential energy at `r` for mass `mass`, zero at the centre.
    pub fn potential(&self, mass: f64, r: [f64; 3]) -> f64 {
        0.5 * mass * (0..3).map(|i| self.omega[i] * self.omega[i] * r[i] * r[i]).sum::<f64>()
    }
}

/// Mean occupation `1/(exp(β(ε−μ)) + 1)`.
pub fn occupation(epsilon: f64, mu: f64, temperature: f64) -> f64 {
    let a = (epsilon - mu) / (K_B * temperature);
    if a.is_nan() {
        return if epsilon <= mu { 1.0 } else { 0.0 };
    }
    if a > 0.0 {
        let e = (-a).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + a.exp())
    }
}

/// `E_F = ħω̄(6N)^{1/3}`.
pub fn fermi_energy(n: f64, trap: &HarmonicTrap) -> f64 {
    HBAR * trap.omega_bar() * (6.0 * n).cbrt()
}

/// Inverse of [`fermi_energy`]: `N = (E_F/ħω̄)³/6`.
pub fn atom_number_from_fermi_energy(e_f: f64, trap: &HarmonicTrap) -> f64 {
    (e_f / (HBAR * trap.omega_bar())).powi(3) / 6.0
}

/// Reduced temperature at which the fugacity equals one.
pub fn unit_fugacity_temperature() -> f64 {
    (6.0 * fermi_fn_ln(3.0, 0.0).expect("valid order")).powf(-1.0 / 3.0)
}

/// Solves `6 f_3(Z) = t^{−3}` for the fugacity at reduced temperature `t`.
pub fn fugacity_from_reduced_temperature(t: f64) -> Result<Fugacity> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(alloc::format!(
            "reduced temperature must be positive, got {t}"
        )));
    }
    let target = -3.0 * t.ln() - 6.0.ln();
    let mut failure = None;
    let g = |x: f64| match fermi_fn_ln(3.0, x) {
        Ok(v) => v.ln() - target,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    let (a, b) = if t >= 0.57 {
        (1e-300_f64.ln(), 0.0)
    } else {
        (-1.0, 3.0 / t)
    };
    let root = brent(g, a, b, 1e-14, 1e-14, 200);
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(Fugacity::from_ln(root?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Sommerfeld form `1 − (π²/3)t²`, valid for `t ≲ 0.2`.
    Low,
    /// Classical form `−t ln(6t³)`, valid for `t ≳ 2`.
    High,
}

/// Closed-form approximations to `μ/E_F`.
pub fn chemical_potential_approx(t: f64, regime: Regime) -> f64 {
    match regime {
        Regime::Low => 1.0 - PI * PI / 3.0 * t * t,
        Regime::High => -t * (6.0 * t * t * t).ln(),
    }
}

/// Exact `μ/E_F = t ln Z`.
pub fn chemical_potential_reduced(t: f64) -> Result<f64> {
    Ok(t * fugacity_from_reduced_temperature(t)?.ln())
}

/// `E/(N E_F) = 3t f_4(Z)/f_3(Z)`.
pub fn energy_per_particle_reduced(t: f64) -> Result<f64> {
    let z = fugacity_from_reduced_temperature(t)?;
    Ok(3.0 * t * fermi_fn_ln(4.0, z.ln())? / fermi_fn_ln(3.0, z.ln())?)
}

/// Central phase-space density `n₀Λ³ = f_{3/2}(Z)`.
pub fn degeneracy_parameter(z: Fugacity) -> Result<f64> {
    fermi_fn_ln(1.5, z.ln())
}

/// Bose counterpart `g_{3/2}(Z)`.
pub fn bose_degeneracy_parameter(z: f64) -> Result<f64> {
    bose_fn(1.5, z)
}

/// Continuum atom number `(k_BT/ħω̄)³ f_3(Z)`, energies measured from the
/// potential minimum.
pub fn continuum_number(trap: &HarmonicTrap, mu: f64, temperature: f64) -> Result<f64> {
    let kt = K_B * temperature;
    Ok((kt / (HBAR * trap.omega_bar())).powi(3) * fermi_fn_ln(3.0, mu / kt)?)
}

/// Continuum energy `3k_BT (k_BT/ħω̄)³ f_4(Z)`.
pub fn continuum_energy(trap: &HarmonicTrap, mu: f64, temperature: f64) -> Result<f64> {
    let kt = K_B * temperature;
    Ok(3.0 * kt * (kt / (HBAR * trap.omega_bar())).powi(3) * fermi_fn_ln(4.0, mu / kt)?)
}

/// Chemical potential giving continuum atom number `n` at `temperature`.
pub fn continuum_chemical_potential(trap: &HarmonicTrap, n: f64, temperature: f64) -> Result<f64> {
    let e_f = fermi_energy(n, trap);
    let t = K_B * temperature / e_f;
    Ok(K_B * temperature * fugacity_from_reduced_temperature(t)?.ln())
}

/// A trapped gas at fixed atom number and temperature with its derived
/// fugacity and Fermi energy.
#[derive(Debug, Clone, PartialEq)]
pub struct TrappedGasState {
    pub state: SpinState,
    pub trap: HarmonicTrap,
    pub n: f64,
    pub temperature: f64,
    fugacity: Fugacity,
    fermi_energy: f64,
}

impl TrappedGasState {
    pub fn new(state: SpinState, trap: HarmonicTrap, n: f64, temperature: f64) -> Result<Self> {
        if !(n >= 1.0) {
            return Err(Error::invalid("atom number must be at least 1"));
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::invalid("temperature must be positive"));
        }
        let fermi_energy = fermi_energy(n, &trap);
        let fugacity = fugacity_from_reduced_temperature(K_B * temperature / fermi_energy)?;
        Ok(Self {
            state,
            trap,
            n,
            temperature,
            fugacity,
            fermi_energy,
        })
    }

    pub fn from_reduced_temperature(state: SpinState, trap: HarmonicTrap, n: f64, t: f64) -> Result<Self> {
        let t_f = fermi_energy(n, &trap) / K_B;
        Self::new(state, trap, n, t * t_f)
    }

    pub fn fugacity(&self) -> Fugacity {
        self.fugacity
    }

    pub fn fermi_energy(&self) -> f64 {
        self.fermi_energy
    }

    pub fn fermi_temperature(&self) -> f64 {
        self.fermi_energy / K_B
    }

    pub fn reduced_temperature(&self) -> f64 {
        self.temperature / self.fermi_temperature()
    }

    pub fn beta(&self) -> f64 {
        1.0 / (K_B * self.temperature)
    }

    pub fn chemical_potential(&self) -> f64 {
        K_B * self.temperature * self.fugacity.ln()
    }

    pub fn mass(&self) -> f64 {
        self.state.mass()
    }

    /// Atom number recomputed from `(T, Z, ω̄)`.
    pub fn number_from_fugacity(&self) -> Result<f64> {
        continuum_number(&self.trap, self.chemical_potential(), self.temperature)
    }

    pub fn total_energy(&self) -> Result<f64> {
        continuum_energy(&self.trap, self.chemical_potential(), self.temperature)
    }

    pub fn energy_per_particle(&self) -> Result<f64> {
        let x = self.fugacity.ln();
        Ok(3.0 * K_B * self.temperature * fermi_fn_ln(4.0, x)? / fermi_fn_ln(3.0, x)?)
    }

    pub fn degeneracy_parameter(&self) -> Result<f64> {
        degeneracy_parameter(self.fugacity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capacity1d {
    /// `ω_⊥/ω_∥`.
    pub ratio: f64,
    /// Number of fully filled longitudinal levels below the first transverse
    /// excitation.
    pub floor: u64,
}

/// Number of fermions that fit in the transverse ground state of an
/// elongated trap, equal to its aspect ratio.
pub fn capacity_1d(trap: &HarmonicTrap) -> Result<Capacity1d> {
    let mut w = trap.omega;
    w.sort_by(|a, b| a.total_cmp(b));
    let asym = w[2] / w[1] - 1.0;
    if asym > 0.01 {
        return Err(Error::NotAxiallySymmetric { ratio: w[2] / w[1] });
    }
    let perp = (w[1] * w[2]).sqrt();
    let ratio = perp / w[0];
    Ok(Capacity1d {
        ratio,
        floor: ratio.floor() as u64,
    })
}

/// Energy reference for the discrete oscillator levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnergyOrigin {
    /// ε = ħΣω_i(n_i + 1/2), the same origin as the continuum formulas.
    #[default]
    PotentialMinimum,
    /// ε = ħΣω_i n_i, measured from the single-particle ground state.
    GroundState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteSums {
    pub n: f64,
    pub energy: f64,
    /// Occupation just above the energy cutoff.
    pub tail_occupancy: f64,
    pub states: u64,
}

/// Brute-force sums of `n_ε` and `ε n_ε` over oscillator states.
///
/// All states with excitation energy `ħΣω_i n_i ≤ ħω_min·cutoff` are summed;
/// the occupancy just beyond that energy must be below 1e-12.
pub fn discrete_sum_oracle(
    trap: &HarmonicTrap,
    mu: f64,
    temperature: f64,
    cutoff: u64,
    origin: EnergyOrigin,
) -> Result<DiscreteSums> {
    let offset = match origin {
        EnergyOrigin::PotentialMinimum => 0.5 * HBAR * trap.omega.iter().sum::<f64>(),
        EnergyOrigin::GroundState => 0.0,
    };
    let w_min = trap.omega_min();
    let e_cut = HBAR * w_min * cutoff as f64;
    let tail_occupancy = occupation(offset + HBAR * w_min * (cutoff + 1) as f64, mu, temperature);
    if tail_occupancy >= 1e-12 {
        return Err(Error::CutoffTooSmall {
            occupancy: tail_occupancy,
        });
    }
    let isotropic = trap.omega.iter().all(|w| (w / w_min - 1.0).abs() < 1e-12);
    let mut n = 0.0;
    let mut energy = 0.0;
    let mut states = 0u64;
    if isotropic {
        for shell in 0..=cutoff {
            let g = ((shell + 1) * (shell + 2) / 2) as f64;
            let eps = offset + HBAR * w_min * shell as f64;
            let occ = occupation(eps, mu, temperature);
            n += g * occ;
            energy += g * eps * occ;
            states += (shell + 1) * (shell + 2) / 2;
        }
    } else {
        let [wx, wy, wz] = trap.omega;
        let mut ex = 0.0;
        let mut nx = 0u64;
        while ex <= e_cut * (1.0 + 1e-12) {
            let mut ey = 0.0;
            let mut ny = 0u64;
            while ex + ey <= e_cut * (1.0 + 1e-12) {
                let mut ez = 0.0;
                let mut nz = 0u64;
                while ex + ey + ez <= e_cut * (1.0 + 1e-12) {
                    let eps = offset + ex + ey + ez;
                    let occ = occupation(eps, mu, temperature);
                    n += occ;
                    energy += eps * occ;
                    states += 1;
                    nz += 1;
                    ez = HBAR * wz * nz as f64;
                }
                ny += 1;
                ey = HBAR * wy * ny as f64;
            }
            nx += 1;
            ex = HBAR * wx * nx as f64;
        }
    }
    Ok(DiscreteSums {
        n,
        energy,
        tail_occupancy,
        states,
    })
}

/// Smallest cutoff (in units of ħω_min) for which the oracle's tail check
/// passes with a margin of ten.
pub fn oracle_cutoff(trap: &HarmonicTrap, mu: f64, temperature: f64) -> u64 {
    let kt = K_B * temperature;
    let e = mu.max(0.0) + kt * (1e13_f64).ln();
    (e / (HBAR * trap.omega_min())).ceil().max(1.0) as u64
}

/// One row of a thermodynamic scan in reduced units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoRow {
    pub t_over_tf: f64,
    pub z: f64,
    pub ln_z: f64,
    pub mu_over_ef: f64,
    pub e_per_n_over_ef: f64,
    pub n0_lambda3: f64,
}

pub fn thermo_row(t: f64) -> Result<ThermoRow> {
    let z = fugacity_from_reduced_temperature(t)?;
    let x = z.ln();
    Ok(ThermoRow {
        t_over_tf: t,
        z: z.value(),
        ln_z: x,
        mu_over_ef: t * x,
        e_per_n_over_ef: 3.0 * t * fermi_fn_ln(4.0, x)? / fermi_fn_ln(3.0, x)?,
        n0_lambda3: fermi_fn_ln(1.5, x)?,
    })
}

pub fn thermo_scan(ts: &[f64]) -> Result<Vec<ThermoRow>> {
    ts.iter().map(|&t| thermo_row(t)).collect()
}

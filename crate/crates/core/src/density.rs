//! In-trap and time-of-flight densities of the trapped Fermi gas and of the
//! classical comparison gas.
//!
//! Column densities integrate along z, the imaging axis. Expansion is free
//! and ballistic; gravity is ignored.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::constants::{HBAR, K_B};
use crate::polylog::fermi_fn_ln;
use crate::thermo::{HarmonicTrap, TrappedGasState};
use crate::Result;

/// Thermal de Broglie wavelength `√(2πħ²/(M k_B T))`.
pub fn thermal_wavelength(mass: f64, temperature: f64) -> f64 {
    (2.0 * PI * HBAR * HBAR / (mass * K_B * temperature)).sqrt()
}

/// `n(r) = Λ⁻³ f_{3/2}(Z e^{−βU(r)})` with `U(0) = 0`.
pub fn density_finite_t(gas: &TrappedGasState, r: [f64; 3]) -> Result<f64> {
    let lambda = thermal_wavelength(gas.mass(), gas.temperature);
    let beta_u = gas.beta() * gas.trap.potential(gas.mass(), r);
    Ok(fermi_fn_ln(1.5, gas.fugacity().ln() - beta_u)? / lambda.powi(3))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThomasFermiExtent {
    /// `√(2E_F/Mω_i²)` along x, y, z.
    pub radii: [f64; 3],
    /// Geometric mean of the radii.
    pub mean: f64,
}

pub fn thomas_fermi_extent(e_f: f64, mass: f64, trap: &HarmonicTrap) -> ThomasFermiExtent {
    let radii = trap.omega.map(|w| (2.0 * e_f / (mass * w * w)).sqrt());
    ThomasFermiExtent {
        radii,
        mean: (radii[0] * radii[1] * radii[2]).cbrt(),
    }
}

/// Zero-temperature profile `(8N/π²R̄³)(1 − Σ x_i²/R_i²)^{3/2}`.
pub fn density_zero_t(gas: &TrappedGasState, r: [f64; 3]) -> f64 {
    let tf = thomas_fermi_extent(gas.fermi_energy(), gas.mass(), &gas.trap);
    let u: f64 = (0..3).map(|i| (r[i] / tf.radii[i]).powi(2)).sum();
    if u >= 1.0 {
        return 0.0;
    }
    8.0 * gas.n / (PI * PI * tf.mean.powi(3)) * (1.0 - u).powf(1.5)
}

/// Density of a homogeneous zero-temperature Fermi gas, `(2ME_F/ħ²)^{3/2}/6π²`.
pub fn uniform_density_zero_t(e_f: f64, mass: f64) -> f64 {
    (2.0 * mass * e_f / (HBAR * HBAR)).powf(1.5) / (6.0 * PI * PI)
}

/// Ballistic-expansion mapping after release time `t`.
///
/// The expanded density is the in-trap density evaluated with
/// `ω_i/√(1+ω_i²t²)` in place of `ω_i` and multiplied by `norm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TofScaling {
    pub omega_eff: [f64; 3],
    /// Per-axis expansion factors `√(1+ω_i²t²)`.
    pub expansion: [f64; 3],
    pub norm: f64,
}

pub fn tof_rescale(trap: &HarmonicTrap, t: f64) -> TofScaling {
    let expansion = trap.omega.map(|w| (1.0 + w * w * t * t).sqrt());
    let omega_eff = [0, 1, 2].map(|i| trap.omega[i] / expansion[i]);
    TofScaling {
        omega_eff,
        expansion,
        norm: 1.0 / (expansion[0] * expansion[1] * expansion[2]),
    }
}

/// Three-dimensional density after ballistic expansion for time `t`.
pub fn density_tof(gas: &TrappedGasState, t: f64, r: [f64; 3]) -> Result<f64> {
    let s = tof_rescale(&gas.trap, t);
    let u = 0.5 * gas.mass() * (0..3).map(|i| (s.omega_eff[i] * r[i]).powi(2)).sum::<f64>();
    let lambda = thermal_wavelength(gas.mass(), gas.temperature);
    Ok(s.norm * fermi_fn_ln(1.5, gas.fugacity().ln() - gas.beta() * u)? / lambda.powi(3))
}

/// Thermal radii `r_i² = (ω_i⁻² + t²) k_BT/M` in the imaging plane (x, y).
pub fn tof_radii(trap: &HarmonicTrap, mass: f64, temperature: f64, t: f64) -> [f64; 2] {
    let kt_m = K_B * temperature / mass;
    [0, 1].map(|i| ((trap.omega[i].powi(-2) + t * t) * kt_m).sqrt())
}

/// Column density of the expanding Fermi gas,
/// `N f_2(Z e^{−x²/2r_x²−y²/2r_y²}) / (2π r_x r_y f_3(Z))`.
pub fn column_density_fermi(gas: &TrappedGasState, t: f64, x: f64, y: f64) -> Result<f64> {
    let [rx, ry] = tof_radii(&gas.trap, gas.mass(), gas.temperature, t);
    let ln_z = gas.fugacity().ln();
    let q = 0.5 * ((x / rx).powi(2) + (y / ry).powi(2));
    Ok(gas.n * fermi_fn_ln(2.0, ln_z - q)? / (2.0 * PI * rx * ry * fermi_fn_ln(3.0, ln_z)?))
}

/// Column density of the expanding classical gas, a normalized Gaussian.
pub fn column_density_boltzmann(
    n: f64,
    temperature: f64,
    trap: &HarmonicTrap,
    mass: f64,
    t: f64,
    x: f64,
    y: f64,
) -> f64 {
    let [rx, ry] = tof_radii(trap, mass, temperature, t);
    n / (2.0 * PI * rx * ry) * (-0.5 * ((x / rx).powi(2) + (y / ry).powi(2))).exp()
}

/// Uniform rectangular pixel grid centred on `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    /// Pixel pitch (m).
    pub pitch: [f64; 2],
    pub center: [f64; 2],
}

impl GridSpec {
    pub fn square(n: usize, pitch: f64) -> Self {
        Self {
            nx: n,
            ny: n,
            pitch: [pitch, pitch],
            center: [0.0, 0.0],
        }
    }

    /// Grid of `nx × ny` pixels spanning `±half_width` along each axis.
    pub fn spanning(nx: usize, ny: usize, half_width: [f64; 2]) -> Self {
        Self {
            nx,
            ny,
            pitch: [2.0 * half_width[0] / nx as f64, 2.0 * half_width[1] / ny as f64],
            center: [0.0, 0.0],
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.center[0] + (i as f64 - 0.5 * (self.nx as f64 - 1.0)) * self.pitch[0]
    }

    pub fn y(&self, j: usize) -> f64 {
        self.center[1] + (j as f64 - 0.5 * (self.ny as f64 - 1.0)) * self.pitch[1]
    }

    pub fn pixel_area(&self) -> f64 {
        self.pitch[0] * self.pitch[1]
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Row-major (y-major) samples of a column density.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnProfile {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    /// Expansion time (s).
    pub t: f64,
}

impl ColumnProfile {
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.pixel_area()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx + i]
    }
}

/// rms widths of the Fermi column profile, `r_i √(f_4(Z)/f_3(Z))`.
pub fn fermi_column_rms(gas: &TrappedGasState, t: f64) -> Result<[f64; 2]> {
    let [rx, ry] = tof_radii(&gas.trap, gas.mass(), gas.temperature, t);
    let x = gas.fugacity().ln();
    let k = (fermi_fn_ln(4.0, x)? / fermi_fn_ln(3.0, x)?).sqrt();
    Ok([rx * k, ry * k])
}

/// Grid spanning ±4 rms widths of the expanded Fermi cloud.
pub fn default_column_grid(gas: &TrappedGasState, t: f64, n: usize) -> Result<GridSpec> {
    let [sx, sy] = fermi_column_rms(gas, t)?;
    Ok(GridSpec::spanning(n, n, [4.0 * sx, 4.0 * sy]))
}

pub fn column_profile_fermi(gas: &TrappedGasState, t: f64, grid: GridSpec) -> Result<ColumnProfile> {
    let mut values = Vec::with_capacity(grid.len());
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            values.push(column_density_fermi(gas, t, grid.x(i), grid.y(j))?);
        }
    }
    Ok(ColumnProfile { grid, values, t })
}

pub fn column_profile_boltzmann(gas: &TrappedGasState, t: f64, grid: GridSpec) -> ColumnProfile {
    let mut values = Vec::with_capacity(grid.len());
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            values.push(column_density_boltzmann(
                gas.n,
                gas.temperature,
                &gas.trap,
                gas.mass(),
                t,
                grid.x(i),
                grid.y(j),
            ));
        }
    }
    ColumnProfile { grid, values, t }
}

/// Which in-trap model to sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityModel {
    FiniteTemperature,
    ZeroTemperature,
}

/// Density sampled along one trap axis through the centre.
#[derive(Debug, Clone, PartialEq)]
pub struct LineProfile {
    pub axis: usize,
    pub positions: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn density_line(gas: &TrappedGasState, model: DensityModel, axis: usize, positions: &[f64]) -> Result<LineProfile> {
    let values = positions
        .iter()
        .map(|&s| {
            let mut r = [0.0; 3];
            r[axis] = s;
            match model {
                DensityModel::FiniteTemperature => density_finite_t(gas, r),
                DensityModel::ZeroTemperature => Ok(density_zero_t(gas, r)),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LineProfile {
        axis,
        positions: positions.to_vec(),
        values,
    })
}

/// Cell-centred 3D grid spanning `±half_width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid3 {
    pub n: [usize; 3],
    pub half_width: [f64; 3],
}

impl Grid3 {
    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        let h = 2.0 * self.half_width[axis] / self.n[axis] as f64;
        -self.half_width[axis] + (k as f64 + 0.5) * h
    }

    pub fn cell_volume(&self) -> f64 {
        (0..3).map(|a| 2.0 * self.half_width[a] / self.n[a] as f64).product()
    }

    /// 128³ cells over ±4 thermal or Thomas-Fermi radii, whichever is larger.
    pub fn default_for(gas: &TrappedGasState) -> Self {
        let tf = thomas_fermi_extent(gas.fermi_energy(), gas.mass(), &gas.trap);
        let half_width = [0, 1, 2].map(|i| {
            let thermal = (K_B * gas.temperature / gas.mass()).sqrt() / gas.trap.omega[i];
            4.0 * thermal.max(tf.radii[i])
        });
        Self {
            n: [128; 3],
            half_width,
        }
    }
}

/// Row-major (z fastest) samples of a 3D density.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub grid: Grid3,
    pub values: Vec<f64>,
}

impl DensityProfile {
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }
}

pub fn density_profile(gas: &TrappedGasState, model: DensityModel, grid: Grid3) -> Result<DensityProfile> {
    let mut values = Vec::with_capacity(grid.n.iter().product());
    for i in 0..grid.n[0] {
        for j in 0..grid.n[1] {
            for k in 0..grid.n[2] {
                let r = [grid.coord(0, i), grid.coord(1, j), grid.coord(2, k)];
                values.push(match model {
                    DensityModel::FiniteTemperature => density_finite_t(gas, r)?,
                    DensityModel::ZeroTemperature => density_zero_t(gas, r),
                });
            }
        }
    }
    Ok(DensityProfile { grid, values })
}

//! RF-dressed adiabatic potentials in the rotating-wave approximation and
//! the species-selective evaporation algebra for K/Rb mixtures.
//!
//! Energies are in joules. The detuning is `δ = ħω_RF − |g_F| μ_B B_DC`, so
//! it is negative when the RF lies below the local Larmor frequency and
//! positive above it.

use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use num_rational::Rational64;
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::{Signed, Zero};

use crate::constants::{magnetic_moment, rational_to_f64, SpinState, HBAR, K_B, MU_B};
use crate::field::MagneticField;
use crate::numerics::{linspace, parabolic_vertex};
use crate::{Error, Result, Vec3};

/// B_RF above this fraction of B0 is flagged as stretching the RWA.
pub const RWA_WARNING_RATIO: f64 = 0.3;
/// Finest scan spacing accepted by [`characterize_wells`] (m).
pub const MAX_WELL_SCAN_SPACING: f64 = 0.05e-6;

/// How the RF amplitude varies in space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AmplitudeLaw {
    Uniform,
    /// Near field of a straight RF wire: the amplitude falls as
    /// `reference_distance / d` with `d` the distance to the wire line.
    WireNearField {
        point: Vec3,
        direction: Vec3,
        reference_distance: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfField {
    /// Amplitude B_RF (T), at the reference distance for a wire source.
    pub amplitude: f64,
    /// Angular frequency ω_RF (rad/s).
    pub omega: f64,
    /// Linear polarization axis.
    pub polarization: Vec3,
    pub law: AmplitudeLaw,
}

impl RfField {
    pub fn uniform(amplitude: f64, omega: f64, polarization: Vec3) -> Result<Self> {
        if !(amplitude >= 0.0 && omega > 0.0) {
            return Err(Error::invalid(
                "RF amplitude must be non-negative and frequency positive",
            ));
        }
        let polarization = polarization
            .try_normalize(0.0)
            .ok_or_else(|| Error::invalid("zero polarization axis"))?;
        Ok(Self {
            amplitude,
            omega,
            polarization,
            law: AmplitudeLaw::Uniform,
        })
    }

    pub fn with_law(mut self, law: AmplitudeLaw) -> Self {
        self.law = law;
        self
    }

    /// RF amplitude at `r`.
    pub fn amplitude_at(&self, r: Vec3) -> f64 {
        match self.law {
            AmplitudeLaw::Uniform => self.amplitude,
            AmplitudeLaw::WireNearField {
                point,
                direction,
                reference_distance,
            } => {
                let u = direction.normalize();
                let d = r - point;
                let dist = (d - u * d.dot(&u)).norm();
                self.amplitude * reference_distance / dist
            }
        }
    }

    /// Component of the RF amplitude perpendicular to `b_dc`.
    pub fn perpendicular_amplitude(&self, r: Vec3, b_dc: Vec3) -> f64 {
        let b_hat = b_dc.normalize();
        self.amplitude_at(r) * self.polarization.cross(&b_hat).norm()
    }
}

/// Local detuning δ and Rabi frequency Ω, both in J.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub delta: f64,
    pub rabi: f64,
    /// |B_DC| at the point (T).
    pub b_dc: f64,
}

impl Coupling {
    pub fn gap(&self) -> f64 {
        self.delta.hypot(self.rabi)
    }
}

/// `δ = ħω_RF − |g_F| μ_B |B_DC|`, `Ω = |g_F| μ_B B_RF⊥ / 2`.
pub fn coupling_from_fields(state: &SpinState, omega_rf: f64, b_dc: f64, b_rf_perp: f64) -> Coupling {
    let g = state.g_f_value().abs();
    Coupling {
        delta: HBAR * omega_rf - g * MU_B * b_dc,
        rabi: 0.5 * g * MU_B * b_rf_perp,
        b_dc,
    }
}

/// Detuning and Rabi frequency of `state` at `r`.
pub fn detuning_and_rabi<F: MagneticField + ?Sized>(
    field: &F,
    rf: &RfField,
    state: &SpinState,
    r: Vec3,
) -> Result<Coupling> {
    let b = field.field(r)?;
    let b_dc = b.norm();
    if !(b_dc > 0.0) {
        return Err(Error::domain("static field vanishes; dressing undefined"));
    }
    Ok(coupling_from_fields(
        state,
        rf.omega,
        b_dc,
        rf.perpendicular_amplitude(r, b),
    ))
}

fn spin_matrices(f: Rational64) -> (DMatrix<f64>, DMatrix<f64>) {
    let dim = (f * 2).to_integer() as usize + 1;
    let fv = rational_to_f64(f);
    let mut fz = DMatrix::zeros(dim, dim);
    let mut fx = DMatrix::zeros(dim, dim);
    // basis index i ↔ m = F − i
    for i in 0..dim {
        let m = fv - i as f64;
        fz[(i, i)] = m;
        if i + 1 < dim {
            let lower = m - 1.0;
            let c = 0.5 * (fv * (fv + 1.0) - lower * (lower + 1.0)).sqrt();
            fx[(i, i + 1)] = c;
            fx[(i + 1, i)] = c;
        }
    }
    (fz, fx)
}

/// Rotating-frame Hamiltonian `−s δ F_z + Ω F_x`, `s = sign(g_F)`.
pub fn rotating_frame_hamiltonian(state: &SpinState, coupling: &Coupling) -> DMatrix<f64> {
    let (fz, fx) = spin_matrices(state.f);
    let s = if state.g_f.is_negative() { -1.0 } else { 1.0 };
    fz * (-s * coupling.delta) + fx * coupling.rabi
}

/// Adiabatic potentials `m'·√(δ²+Ω²)` for m' = −F..=F, ascending.
pub fn dressed_levels(f: Rational64, coupling: &Coupling) -> Vec<f64> {
    let n = (f * 2).to_integer();
    let gap = coupling.gap();
    (0..=n).map(|k| (rational_to_f64(-f) + k as f64) * gap).collect()
}

/// Dressed quantum number m' reached from the undressed `state` when the
/// RF coupling is ramped up from zero at fixed detuning.
///
/// Follows the eigenvector of the rotating-frame Hamiltonian by maximum
/// overlap along the ramp.
pub fn connect_branch(state: &SpinState, coupling: &Coupling) -> Result<Rational64> {
    if coupling.delta == 0.0 {
        return Err(Error::AmbiguousBranch);
    }
    let (fz, fx) = spin_matrices(state.f);
    let s = if state.g_f.is_negative() { -1.0 } else { 1.0 };
    let dim = fz.nrows();
    let start = (state.f - state.m_f).to_integer() as usize;
    let mut current = nalgebra::DVector::zeros(dim);
    current[start] = 1.0;
    const STEPS: usize = 64;
    let mut energy = 0.0;
    for k in 1..=STEPS {
        let lambda = k as f64 / STEPS as f64;
        let h = &fz * (-s * coupling.delta) + &fx * (lambda * coupling.rabi);
        let eig = SymmetricEigen::new(h);
        let (best, overlap) = (0..dim)
            .map(|j| (j, eig.eigenvectors.column(j).dot(&current).abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        if overlap < 0.5 {
            return Err(Error::AmbiguousBranch);
        }
        current = eig.eigenvectors.column(best).into_owned();
        energy = eig.eigenvalues[best];
    }
    let m = energy / coupling.gap();
    let twice = (2.0 * m).round() as i64;
    Ok(Rational64::new(twice, 2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DressedPotentialScan {
    pub state: SpinState,
    /// Dressed quantum number m'.
    pub m_f_dressed: Rational64,
    pub origin: Vec3,
    pub axis: Vec3,
    /// Positions along the axis (m).
    pub s: Vec<f64>,
    pub u_eff: Vec<f64>,
    pub delta: Vec<f64>,
    pub rabi: Vec<f64>,
    /// B_RF exceeds 0.3·B0 somewhere on the scan.
    pub rwa_warning: bool,
}

impl DressedPotentialScan {
    /// Largest deviation of `U_eff` from `m'·√(δ²+Ω²)` relative to the
    /// local gap.
    pub fn consistency_error(&self) -> f64 {
        let m = rational_to_f64(self.m_f_dressed);
        self.u_eff
            .iter()
            .zip(self.delta.iter().zip(&self.rabi))
            .map(|(u, (d, o))| {
                let gap = d.hypot(*o);
                (u - m * gap).abs() / gap.max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }

    pub fn spacing(&self) -> f64 {
        if self.s.len() < 2 {
            f64::INFINITY
        } else {
            (self.s[self.s.len() - 1] - self.s[0]) / (self.s.len() - 1) as f64
        }
    }

    fn rabi_at(&self, x: f64) -> f64 {
        let h = self.spacing();
        let t = ((x - self.s[0]) / h).clamp(0.0, (self.s.len() - 1) as f64);
        let i = (t.floor() as usize).min(self.s.len() - 2);
        let w = t - i as f64;
        self.rabi[i] * (1.0 - w) + self.rabi[i + 1] * w
    }
}

/// Samples the adiabatic potential of branch `m_f_dressed` along
/// `origin + s·axis` for `n` points of `s` in `range`.
pub fn dressed_potential<F: MagneticField + ?Sized>(
    field: &F,
    rf: &RfField,
    state: &SpinState,
    m_f_dressed: Rational64,
    origin: Vec3,
    axis: Vec3,
    range: (f64, f64),
    n: usize,
) -> Result<DressedPotentialScan> {
    if n < 3 || !(range.1 > range.0) {
        return Err(Error::invalid("scan needs at least 3 points over a non-empty range"));
    }
    if m_f_dressed.abs() > state.f || !(m_f_dressed - state.f).is_integer() {
        return Err(Error::invalid("dressed quantum number outside the manifold"));
    }
    let axis = axis
        .try_normalize(0.0)
        .ok_or_else(|| Error::invalid("zero scan axis"))?;
    let m = rational_to_f64(m_f_dressed);
    let s = linspace(range.0, range.1, n);
    let mut u_eff = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    let mut rabi = Vec::with_capacity(n);
    let mut b_min = f64::INFINITY;
    let mut rf_max = 0.0f64;
    for &x in &s {
        let r = origin + axis * x;
        let c = detuning_and_rabi(field, rf, state, r)?;
        b_min = b_min.min(c.b_dc);
        rf_max = rf_max.max(rf.amplitude_at(r));
        u_eff.push(m * c.gap());
        delta.push(c.delta);
        rabi.push(c.rabi);
    }
    if rf_max >= b_min {
        return Err(Error::RwaViolation {
            b_rf: rf_max,
            b0: b_min,
        });
    }
    Ok(DressedPotentialScan {
        state: state.clone(),
        m_f_dressed,
        origin,
        axis,
        s,
        u_eff,
        delta,
        rabi,
        rwa_warning: rf_max >= RWA_WARNING_RATIO * b_min,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Single,
    Double,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleWellReport {
    pub topology: Topology,
    /// Well positions along the scan axis (m), ascending.
    pub wells: Vec<f64>,
    pub well_energies: Vec<f64>,
    /// `|x₊ − x₋|` for a double well.
    pub separation: Option<f64>,
    pub barrier_position: Option<f64>,
    /// `U(saddle) − max U(well)`, J.
    pub barrier: Option<f64>,
    /// Ω at each well (J).
    pub level_repulsion: Vec<f64>,
}

struct Extremum {
    x: f64,
    u: f64,
    minimum: bool,
}

fn extrema(s: &[f64], u: &[f64]) -> Vec<Extremum> {
    let h = s[1] - s[0];
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < u.len() {
        let left = u[i] - u[i - 1];
        let right = u[i + 1] - u[i];
        let is_min = left < 0.0 && right >= 0.0;
        let is_max = left > 0.0 && right <= 0.0;
        if is_min || is_max {
            let (off, val) = parabolic_vertex(u[i - 1], u[i], u[i + 1]);
            out.push(Extremum {
                x: s[i] + off * h,
                u: val,
                minimum: is_min,
            });
            // skip the flat partner of a plateau
            if right == 0.0 {
                i += 1;
            }
        }
        i += 1;
    }
    out
}

/// Locates the interior extrema of a scan and classifies it as a single
/// or a double well.
pub fn characterize_wells(scan: &DressedPotentialScan) -> Result<DoubleWellReport> {
    let spacing = scan.spacing();
    if spacing > MAX_WELL_SCAN_SPACING * (1.0 + 1e-9) {
        return Err(Error::ScanTooCoarse {
            spacing,
            limit: MAX_WELL_SCAN_SPACING,
        });
    }
    let ext = extrema(&scan.s, &scan.u_eff);
    let minima: Vec<&Extremum> = ext.iter().filter(|e| e.minimum).collect();
    let maxima: Vec<&Extremum> = ext.iter().filter(|e| !e.minimum).collect();
    let report = |wells: &[&Extremum], saddle: Option<&Extremum>, topology| {
        let positions: Vec<f64> = wells.iter().map(|w| w.x).collect();
        let energies: Vec<f64> = wells.iter().map(|w| w.u).collect();
        let (separation, barrier_position, barrier) = match saddle {
            Some(sd) => {
                let top = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (
                    Some((positions[1] - positions[0]).abs()),
                    Some(sd.x),
                    Some((sd.u - top).max(0.0)),
                )
            }
            None => (None, None, None),
        };
        DoubleWellReport {
            topology,
            level_repulsion: positions.iter().map(|&x| scan.rabi_at(x)).collect(),
            wells: positions,
            well_energies: energies,
            separation,
            barrier_position,
            barrier,
        }
    };
    match (minima.len(), maxima.len()) {
        (1, 0) => Ok(report(&minima, None, Topology::Single)),
        (2, 1) if minima[0].x < maxima[0].x && maxima[0].x < minima[1].x => {
            Ok(report(&minima, Some(maxima[0]), Topology::Double))
        }
        (mn, mx) => Err(Error::AmbiguousTopology { minima: mn, maxima: mx }),
    }
}

/// Scan with 4096 points over `range`, then rescan ten times finer around
/// every extremum before classifying.
pub fn analyze_wells<F: MagneticField + ?Sized>(
    field: &F,
    rf: &RfField,
    state: &SpinState,
    m_f_dressed: Rational64,
    origin: Vec3,
    axis: Vec3,
    range: (f64, f64),
) -> Result<DoubleWellReport> {
    const POINTS: usize = 4096;
    let coarse = dressed_potential(field, rf, state, m_f_dressed, origin, axis, range, POINTS)?;
    let mut report = characterize_wells(&coarse)?;
    let h = coarse.spacing();
    let fine_points = 201;
    let refine = |x: f64| -> Result<(f64, f64)> {
        let fine = dressed_potential(
            field,
            rf,
            state,
            m_f_dressed,
            origin,
            axis,
            (x - 10.0 * h, x + 10.0 * h),
            fine_points,
        )?;
        let ext = extrema(&fine.s, &fine.u_eff);
        ext.iter()
            .min_by(|a, b| (a.x - x).abs().total_cmp(&(b.x - x).abs()))
            .map(|e| (e.x, e.u))
            .ok_or_else(|| Error::NonConvergence {
                what: "well refinement",
                detail: alloc::format!("extremum near {x:e} lost on the fine grid"),
            })
    };
    for k in 0..report.wells.len() {
        let (x, u) = refine(report.wells[k])?;
        report.wells[k] = x;
        report.well_energies[k] = u;
        report.level_repulsion[k] = detuning_and_rabi(field, rf, state, origin + axis.normalize() * x)?.rabi;
    }
    if let Some(xb) = report.barrier_position {
        let (x, u) = refine(xb)?;
        let top = report.well_energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        report.barrier_position = Some(x);
        report.barrier = Some((u - top).max(0.0));
        report.separation = Some((report.wells[1] - report.wells[0]).abs());
    }
    Ok(report)
}

/// Depth `m_F(ħω_RF − g_F μ_B B0)` set by an RF knife on a trapped state.
pub fn rf_knife_depth(state: &SpinState, b0: f64, omega_rf: f64) -> Result<f64> {
    let mu = magnetic_moment(state);
    if mu <= 0.0 {
        return Err(Error::NotTrappable { moment: mu });
    }
    let excess = HBAR * omega_rf - state.g_f_value() * MU_B * b0;
    if excess < 0.0 {
        return Err(Error::KnifeBelowBottom {
            deficit: -state.m_f_value() * excess,
        });
    }
    Ok(state.m_f_value() * excess)
}

/// RF angular frequency giving knife depth `depth` (J).
pub fn knife_frequency(state: &SpinState, b0: f64, depth: f64) -> Result<f64> {
    let mu = magnetic_moment(state);
    if mu <= 0.0 {
        return Err(Error::NotTrappable { moment: mu });
    }
    Ok((depth / state.m_f_value() + state.g_f_value() * MU_B * b0) / HBAR)
}

/// Exact coefficients `(m_F^K/m_F^Rb, m_F^K (g_F^Rb − g_F^K))` of the
/// η relation between two co-trapped species.
pub fn eta_coefficients(state_k: &SpinState, state_rb: &SpinState) -> Result<(Rational64, Rational64)> {
    if state_rb.m_f.is_zero() {
        return Err(Error::domain("reference state has m_F = 0"));
    }
    Ok((state_k.m_f / state_rb.m_f, state_k.m_f * (state_rb.g_f - state_k.g_f)))
}

/// η of the K state when the knife sits at η_Rb for Rb:
/// `η_K = (m_K/m_Rb) η_Rb + m_K (g_Rb − g_K) μ_B B0/(k_B T)`.
pub fn eta_relation(state_k: &SpinState, state_rb: &SpinState, eta_rb: f64, b0: f64, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0 && b0 >= 0.0) {
        return Err(Error::domain("need T > 0 and B0 >= 0"));
    }
    let (a, b) = eta_coefficients(state_k, state_rb)?;
    Ok(rational_to_f64(a) * eta_rb + rational_to_f64(b) * MU_B * b0 / (K_B * temperature))
}

/// Smallest η_K over the trappable sublevels of the K manifold.
pub fn eta_k_min_over_sublevels(
    state_k: &SpinState,
    state_rb: &SpinState,
    eta_rb: f64,
    b0: f64,
    temperature: f64,
) -> Result<(Rational64, f64)> {
    state_k
        .manifold()
        .into_iter()
        .filter(SpinState::trappable)
        .map(|s| eta_relation(&s, state_rb, eta_rb, b0, temperature).map(|e| (s.m_f, e)))
        .try_fold(None::<(Rational64, f64)>, |acc, item| {
            let item = item?;
            Ok(match acc {
                Some(a) if a.1 <= item.1 => Some(a),
                _ => Some(item),
            })
        })?
        .ok_or_else(|| Error::domain("no trappable sublevel"))
}

/// Deepest K knife that leaves Rb untouched: `m_K (g_Rb − g_K) μ_B B0`.
pub fn k_only_evaporation_depth(state_k: &SpinState, state_rb: &SpinState, b0: f64) -> f64 {
    let coeff = state_k.m_f * (state_rb.g_f - state_k.g_f);
    rational_to_f64(coeff) * MU_B * b0
}

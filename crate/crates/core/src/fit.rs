//! Synthetic time-of-flight images and envelope fits: a Gaussian
//! (Boltzmann) model and the Fermi-Dirac column density
//! `N f_2(Z e^{−q}) / (2π r_x r_y f_3(Z))` with
//! `q = (x−x0)²/2r_x² + (y−y0)²/2r_y²`.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{DMatrix, DVector, Dyn, Owned};
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::constants::K_B;
use crate::density::{column_density_fermi, GridSpec};
use crate::polylog::{fermi_fn_ln, ln_one_plus_exp, Fugacity};
use crate::thermo::{fugacity_from_reduced_temperature, HarmonicTrap, TrappedGasState};
use crate::{Error, Result};

/// Fitted ln Z is confined to this range; results at either end are flagged.
pub const LN_Z_BOUNDS: (f64, f64) = (-25.0, 60.0);
/// Minimum number of pixels carrying signal.
pub const MIN_INFORMATIVE_PIXELS: usize = 100;
/// Largest accepted `|J_kᵀ r| / (|J_k| |data|)` over Jacobian columns at the optimum.
pub const GRADIENT_TOL: f64 = 1e-8;
/// Starting ln Z values of the Fermi-Dirac multi-start.
pub const LN_Z_STARTS: [f64; 3] = [-3.0, 1.5, 6.0];

/// What generated a synthetic image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageProvenance {
    pub species: String,
    pub n: f64,
    pub temperature: f64,
    pub t_over_tf: f64,
    pub fugacity: Fugacity,
    /// Expansion time (s).
    pub expansion_time: f64,
    pub trap: HarmonicTrap,
    pub mass: f64,
    pub seed: u64,
}

/// Column-density image (atoms/m²), row-major with x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct TofImage {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    /// RMS of additive noise, same units as `values`, when known.
    pub noise_rms: Option<f64>,
    pub provenance: Option<ImageProvenance>,
}

impl TofImage {
    pub fn new(grid: GridSpec, values: Vec<f64>, noise_rms: Option<f64>) -> Result<Self> {
        if !(grid.pitch[0] > 0.0 && grid.pitch[1] > 0.0) {
            return Err(Error::invalid("pixel pitch must be positive"));
        }
        if values.len() != grid.len() {
            return Err(Error::invalid(alloc::format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.nx,
                grid.ny
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("image contains non-finite values"));
        }
        if let Some(s) = noise_rms {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::invalid("noise RMS must be finite and non-negative"));
            }
        }
        Ok(Self {
            grid,
            values,
            noise_rms,
            provenance: None,
        })
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx + i]
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Atom number `Σ n·A_pixel`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.pixel_area()
    }

    fn coords(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.grid.ny)
            .flat_map(move |j| (0..self.grid.nx).map(move |i| (self.grid.x(i), self.grid.y(j), self.at(i, j))))
    }

    fn informative_pixels(&self) -> usize {
        let peak = self.peak();
        let floor = (3.0 * self.noise_rms.unwrap_or(0.0)).max(1e-6 * peak);
        self.values.iter().filter(|v| **v > floor).count()
    }
}

/// Additive white Gaussian noise level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    None,
    /// RMS in atoms/m².
    Absolute(f64),
    /// RMS as a fraction of the noiseless peak.
    PeakFraction(f64),
}

/// Samples the Fermi column density after expansion time `t` on `grid` and
/// adds seeded Gaussian noise.
pub fn synthesize_tof_image(
    gas: &TrappedGasState,
    t: f64,
    grid: GridSpec,
    noise: Noise,
    seed: u64,
) -> Result<TofImage> {
    let mut values = Vec::with_capacity(grid.len());
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            values.push(column_density_fermi(gas, t, grid.x(i), grid.y(j))?);
        }
    }
    let sigma = match noise {
        Noise::None => 0.0,
        Noise::Absolute(s) => s,
        Noise::PeakFraction(f) => f * values.iter().copied().fold(0.0, f64::max),
    };
    if sigma > 0.0 {
        let dist = Normal::new(0.0, sigma).map_err(|e| Error::invalid(alloc::format!("noise: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in &mut values {
            *v += dist.sample(&mut rng);
        }
    }
    let mut image = TofImage::new(grid, values, (sigma > 0.0).then_some(sigma))?;
    image.provenance = Some(ImageProvenance {
        species: gas.state.species.name.clone(),
        n: gas.n,
        temperature: gas.temperature,
        t_over_tf: gas.reduced_temperature(),
        fugacity: gas.fugacity(),
        expansion_time: t,
        trap: gas.trap,
        mass: gas.mass(),
        seed,
    });
    Ok(image)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    Gaussian,
    FermiDirac,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FitFlags {
    /// ln Z ended within 1e-3 of [`LN_Z_BOUNDS`].
    pub z_at_bound: bool,
    /// The ±1σ interval of Z spans more than a decade.
    pub z_poorly_determined: bool,
    /// JᵀJ could not be inverted; standard errors are unavailable.
    pub covariance_singular: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: FitModel,
    pub n: f64,
    /// Envelope radii (m); thermal radii for the Fermi-Dirac model.
    pub r: [f64; 2],
    pub center: [f64; 2],
    pub fugacity: Option<Fugacity>,
    /// `T/T_F` implied by the fitted fugacity through `6 f_3(Z) = (T_F/T)³`.
    pub t_over_tf: Option<f64>,
    /// Σ residual²/σ², with σ the image noise RMS or 1 when unknown.
    pub chi2: f64,
    pub dof: usize,
    pub reduced_chi2: f64,
    /// One-sigma errors of (N, r_x, r_y, x0, y0), and ln Z for Fermi-Dirac.
    pub std_errors: Option<Vec<f64>>,
    /// One-sigma interval of Z.
    pub fugacity_interval: Option<(f64, f64)>,
    /// `max_k |J_kᵀ r| / (|J_k| |data|)` at the optimum.
    pub gradient_norm: f64,
    pub evaluations: usize,
    pub flags: FitFlags,
}

impl FitResult {
    /// Model column density at `(x, y)`.
    pub fn evaluate(&self, x: f64, y: f64) -> Result<f64> {
        let q = 0.5 * (((x - self.center[0]) / self.r[0]).powi(2) + ((y - self.center[1]) / self.r[1]).powi(2));
        let norm = self.n / (2.0 * PI * self.r[0] * self.r[1]);
        match self.fugacity {
            Some(z) if self.model == FitModel::FermiDirac => {
                Ok(norm * fermi_fn_ln(2.0, z.ln() - q)? / fermi_fn_ln(3.0, z.ln())?)
            }
            _ => Ok(norm * (-q).exp()),
        }
    }
}

/// `T/T_F` of a harmonically trapped gas with fugacity `z`.
pub fn reduced_temperature_from_fugacity(z: Fugacity) -> Result<f64> {
    Ok((6.0 * fermi_fn_ln(3.0, z.ln())?).powf(-1.0 / 3.0))
}

// Fit coordinates: positions scaled per axis by a moment width, values by
// the peak, so every parameter is O(1).
struct Normalized {
    xi: Vec<f64>,
    eta: Vec<f64>,
    w: Vec<f64>,
    origin: [f64; 2],
    scale: [f64; 2],
    value_scale: f64,
}

fn normalize(image: &TofImage) -> Result<Normalized> {
    let (mut s0, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for (x, y, v) in image.coords() {
        let v = v.max(0.0);
        s0 += v;
        sx += v * x;
        sy += v * y;
    }
    if !(s0 > 0.0) {
        return Err(Error::Fit("image has no positive signal".into()));
    }
    let origin = [sx / s0, sy / s0];
    let (mut vx, mut vy) = (0.0, 0.0);
    for (x, y, v) in image.coords() {
        let v = v.max(0.0);
        vx += v * (x - origin[0]).powi(2);
        vy += v * (y - origin[1]).powi(2);
    }
    let scale = [(vx / s0).sqrt(), (vy / s0).sqrt()];
    if !(scale[0] > 0.0 && scale[1] > 0.0) {
        return Err(Error::Fit("image has zero width".into()));
    }
    let value_scale = image.peak();
    let mut out = Normalized {
        xi: Vec::with_capacity(image.values.len()),
        eta: Vec::with_capacity(image.values.len()),
        w: Vec::with_capacity(image.values.len()),
        origin,
        scale,
        value_scale,
    };
    for (x, y, v) in image.coords() {
        out.xi.push((x - origin[0]) / scale[0]);
        out.eta.push((y - origin[1]) / scale[1]);
        out.w.push(v / value_scale);
    }
    Ok(out)
}

// Parameters: ln N', ln ρx, ln ρy, ξ0, η0 and, for Fermi-Dirac, ln Z.
struct Envelope<'a> {
    data: &'a Normalized,
    model: FitModel,
    p: DVector<f64>,
}

impl Envelope<'_> {
    fn ln_z(&self) -> f64 {
        self.p[5].clamp(LN_Z_BOUNDS.0, LN_Z_BOUNDS.1)
    }

    // Model values and, when asked, the Jacobian.
    fn evaluate(&self, jac: Option<&mut DMatrix<f64>>) -> Option<DVector<f64>> {
        let d = self.data;
        let (rx, ry) = (self.p[1].exp(), self.p[2].exp());
        let (x0, y0) = (self.p[3], self.p[4]);
        let norm = self.p[0].exp() / (2.0 * PI * rx * ry);
        let (lz, f3, f2_over_f3) = match self.model {
            FitModel::Gaussian => (0.0, 1.0, 0.0),
            FitModel::FermiDirac => {
                let lz = self.ln_z();
                let f3 = fermi_fn_ln(3.0, lz).ok()?;
                (lz, f3, fermi_fn_ln(2.0, lz).ok()? / f3)
            }
        };
        let clamped = self.model == FitModel::FermiDirac && lz != self.p[5];
        let a = norm / f3;
        let mut m = DVector::zeros(d.w.len());
        let mut jac = jac;
        for k in 0..d.w.len() {
            let dx = d.xi[k] - x0;
            let dy = d.eta[k] - y0;
            let q = 0.5 * ((dx / rx).powi(2) + (dy / ry).powi(2));
            // value and −∂value/∂q
            let (v, dq) = match self.model {
                FitModel::Gaussian => {
                    let v = norm * (-q).exp();
                    (v, v)
                }
                FitModel::FermiDirac => (a * fermi_fn_ln(2.0, lz - q).ok()?, a * ln_one_plus_exp(lz - q)),
            };
            m[k] = v;
            if let Some(j) = jac.as_deref_mut() {
                j[(k, 0)] = v;
                j[(k, 1)] = -v + dq * (dx / rx).powi(2);
                j[(k, 2)] = -v + dq * (dy / ry).powi(2);
                j[(k, 3)] = dq * dx / (rx * rx);
                j[(k, 4)] = dq * dy / (ry * ry);
                if self.model == FitModel::FermiDirac {
                    j[(k, 5)] = if clamped { 0.0 } else { dq - v * f2_over_f3 };
                }
            }
        }
        Some(m)
    }

    fn cost(&self) -> Option<f64> {
        let m = self.evaluate(None)?;
        Some(m.iter().zip(&self.data.w).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
    }
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for Envelope<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.p.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.p.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let m = self.evaluate(None)?;
        Some(m - DVector::from_column_slice(&self.data.w))
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let mut j = DMatrix::zeros(self.data.w.len(), self.p.len());
        self.evaluate(Some(&mut j))?;
        Some(j)
    }
}

fn check_image(image: &TofImage) -> Result<()> {
    let n = image.informative_pixels();
    if n < MIN_INFORMATIVE_PIXELS {
        return Err(Error::Fit(alloc::format!(
            "{n} informative pixels, need at least {MIN_INFORMATIVE_PIXELS}"
        )));
    }
    Ok(())
}

struct Solved<'a> {
    problem: Envelope<'a>,
    evaluations: usize,
    termination: String,
}

fn solve<'a>(data: &'a Normalized, model: FitModel, start: DVector<f64>) -> Solved<'a> {
    let problem = Envelope { data, model, p: start };
    let (problem, report) = LevenbergMarquardt::new().with_patience(400).minimize(problem);
    Solved {
        problem,
        evaluations: report.number_of_evaluations,
        termination: alloc::format!("{:?}", report.termination),
    }
}

// |J_kᵀ r| / (|J_k| |w|): stationarity measured against the data norm, so an
// exact fit with roundoff residuals still counts as converged.
fn gradient_cosine(j: &DMatrix<f64>, r: &DVector<f64>, data_norm: f64) -> f64 {
    let rn = data_norm;
    j.column_iter()
        .map(|c| {
            let cn = c.norm();
            if cn == 0.0 {
                0.0
            } else {
                (c.dot(r) / (cn * rn)).abs()
            }
        })
        .fold(0.0, f64::max)
}

fn finish(image: &TofImage, data: &Normalized, solved: Solved<'_>, evaluations: usize) -> Result<FitResult> {
    let best = solved.problem;
    let r = best
        .residuals()
        .ok_or_else(|| Error::Fit("residuals undefined at the optimum".into()))?;
    let j = best
        .jacobian()
        .ok_or_else(|| Error::Fit("Jacobian undefined at the optimum".into()))?;
    let data_norm = data.w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let gradient_norm = gradient_cosine(&j, &r, data_norm);
    if !(gradient_norm < GRADIENT_TOL) {
        return Err(Error::NonConvergence {
            what: "envelope fit",
            detail: alloc::format!(
                "gradient cosine {gradient_norm:.3e} after {evaluations} evaluations ({})",
                solved.termination
            ),
        });
    }
    let npar = best.p.len();
    let npix = data.w.len();
    let dof = npix.saturating_sub(npar).max(1);
    let ssr = r.norm_squared() * data.value_scale * data.value_scale;
    let sigma = image.noise_rms.filter(|s| *s > 0.0);
    let chi2 = ssr / sigma.map_or(1.0, |s| s * s);

    // Covariance in fit parameters; residual variance in normalized units.
    let s2 = match sigma {
        Some(s) => (s / data.value_scale).powi(2),
        None => r.norm_squared() / dof as f64,
    };
    let mut flags = FitFlags::default();
    let cov = (j.transpose() * &j).try_inverse().map(|m| m * s2);
    flags.covariance_singular = cov.is_none();

    let p = &best.p;
    let n = p[0].exp() * data.value_scale * data.scale[0] * data.scale[1];
    let rr = [p[1].exp() * data.scale[0], p[2].exp() * data.scale[1]];
    let center = [
        data.origin[0] + p[3] * data.scale[0],
        data.origin[1] + p[4] * data.scale[1],
    ];
    let std_errors = cov.as_ref().map(|c| {
        let sd = |k: usize| c[(k, k)].max(0.0).sqrt();
        let mut e = alloc::vec![
            n * sd(0),
            rr[0] * sd(1),
            rr[1] * sd(2),
            data.scale[0] * sd(3),
            data.scale[1] * sd(4)
        ];
        if npar == 6 {
            e.push(sd(5));
        }
        e
    });

    let (fugacity, t_over_tf, fugacity_interval) = match best.model {
        FitModel::Gaussian => (None, None, None),
        FitModel::FermiDirac => {
            let lz = best.ln_z();
            flags.z_at_bound = (lz - LN_Z_BOUNDS.0).abs() < 1e-3 || (lz - LN_Z_BOUNDS.1).abs() < 1e-3;
            let z = Fugacity::from_ln(lz);
            let interval = std_errors.as_ref().map(|e| ((lz - e[5]).exp(), (lz + e[5]).exp()));
            flags.z_poorly_determined = match &std_errors {
                Some(e) => 2.0 * e[5] > core::f64::consts::LN_10,
                None => true,
            };
            (Some(z), Some(reduced_temperature_from_fugacity(z)?), interval)
        }
    };

    Ok(FitResult {
        model: best.model,
        n,
        r: rr,
        center,
        fugacity,
        t_over_tf,
        chi2,
        dof,
        reduced_chi2: chi2 / dof as f64,
        std_errors,
        fugacity_interval,
        gradient_norm,
        evaluations,
        flags,
    })
}

/// Nonlinear least-squares fit of a Gaussian envelope over (N, r_x, r_y, x0, y0).
pub fn fit_gaussian(image: &TofImage) -> Result<FitResult> {
    check_image(image)?;
    let data = normalize(image)?;
    let solved = gaussian_core(&data);
    let evals = solved.evaluations;
    finish(image, &data, solved, evals)
}

fn gaussian_core(data: &Normalized) -> Solved<'_> {
    // moment widths are 1 in fit units; 2π ρx ρy peak = N'
    let start = DVector::from_vec(alloc::vec![(2.0 * PI).ln(), 0.0, 0.0, 0.0, 0.0]);
    solve(data, FitModel::Gaussian, start)
}

/// Nonlinear least-squares fit of the Fermi-Dirac envelope over
/// (N, r_x, r_y, x0, y0, ln Z), started from the Gaussian fit at each of
/// [`LN_Z_STARTS`]; the lowest residual wins.
pub fn fit_fermi_dirac(image: &TofImage) -> Result<FitResult> {
    check_image(image)?;
    let data = normalize(image)?;
    let g = gaussian_core(&data);
    let mut evals = g.evaluations;
    let g = g.problem;
    let mut best: Option<(f64, Solved<'_>)> = None;
    for lz in LN_Z_STARTS {
        // keep the rms width: r² f_4/f_3 = σ_gauss²
        let shrink = 0.5 * (fermi_fn_ln(4.0, lz)? / fermi_fn_ln(3.0, lz)?).ln();
        let start = DVector::from_vec(alloc::vec![
            g.p[0],
            g.p[1] - shrink,
            g.p[2] - shrink,
            g.p[3],
            g.p[4],
            lz
        ]);
        let e = solve(&data, FitModel::FermiDirac, start);
        evals += e.evaluations;
        if let Some(c) = e.problem.cost() {
            if best.as_ref().is_none_or(|(bc, _)| c < *bc) {
                best = Some((c, e));
            }
        }
    }
    let (_, best) = best.ok_or_else(|| Error::Fit("every Fermi-Dirac start failed".into()))?;
    finish(image, &data, best, evals)
}

/// `data − model` for every pixel.
pub fn fit_residuals(image: &TofImage, fit: &FitResult) -> Result<Vec<f64>> {
    image.coords().map(|(x, y, v)| Ok(v - fit.evaluate(x, y)?)).collect()
}

/// Residuals averaged in shells of the fitted elliptical radius
/// `ρ = √((x−x0)²/r_x² + (y−y0)²/r_y²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialBin {
    /// Shell mid-point in units of the fitted radii.
    pub rho: f64,
    /// Mean `data − model` in the shell, relative to the image peak.
    pub mean: f64,
    pub count: usize,
}

/// Radial residual profile out to `rho_max` in `bins` shells.
pub fn radial_residuals(image: &TofImage, fit: &FitResult, rho_max: f64, bins: usize) -> Result<Vec<RadialBin>> {
    let res = fit_residuals(image, fit)?;
    let peak = image.peak();
    let width = rho_max / bins as f64;
    let mut sum = alloc::vec![0.0; bins];
    let mut count = alloc::vec![0usize; bins];
    for ((x, y, _), r) in image.coords().zip(res) {
        let rho = (((x - fit.center[0]) / fit.r[0]).powi(2) + ((y - fit.center[1]) / fit.r[1]).powi(2)).sqrt();
        let k = (rho / width) as usize;
        if k < bins {
            sum[k] += r / peak;
            count[k] += 1;
        }
    }
    Ok((0..bins)
        .map(|k| RadialBin {
            rho: (k as f64 + 0.5) * width,
            mean: if count[k] > 0 { sum[k] / count[k] as f64 } else { 0.0 },
            count: count[k],
        })
        .collect())
}

/// In-situ temperature implied by a Gaussian radius along x,
/// `M r_x² / ((ω_x⁻² + t²) k_B)`.
pub fn apparent_temperature(fit: &FitResult, trap: &HarmonicTrap, mass: f64, t: f64) -> f64 {
    mass * fit.r[0].powi(2) / ((trap.omega[0].powi(-2) + t * t) * K_B)
}

/// Ideal-gas apparent temperature from matched second moments,
/// `T_app/T_F = (T/T_F) f_4(Z)/f_3(Z)`. Tends to `1/4` as `T → 0`.
pub fn apparent_temperature_curve(t_over_tf: f64) -> Result<f64> {
    let lz = fugacity_from_reduced_temperature(t_over_tf)?.ln();
    Ok(t_over_tf * fermi_fn_ln(4.0, lz)? / fermi_fn_ln(3.0, lz)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::k40_stretched;
    use crate::density::{column_density_boltzmann, default_column_grid};
    use approx::assert_relative_eq;

    const T_EXP: f64 = 10e-3;

    fn trap() -> HarmonicTrap {
        HarmonicTrap::from_hz(823.0, 46.0, 823.0).unwrap()
    }

    fn gas(t_over_tf: f64) -> TrappedGasState {
        TrappedGasState::from_reduced_temperature(k40_stretched(), trap(), 4e4, t_over_tf).unwrap()
    }

    fn image(t_over_tf: f64, n: usize, noise: Noise, seed: u64) -> TofImage {
        let g = gas(t_over_tf);
        let grid = default_column_grid(&g, T_EXP, n).unwrap();
        synthesize_tof_image(&g, T_EXP, grid, noise, seed).unwrap()
    }

    #[test]
    fn synthesis_normalization_and_determinism() {
        let im = image(0.3, 64, Noise::None, 0);
        assert!((im.integral() / 4e4 - 1.0).abs() < 1e-3);
        let a = image(0.3, 32, Noise::PeakFraction(0.02), 7);
        let b = image(0.3, 32, Noise::PeakFraction(0.02), 7);
        let c = image(0.3, 32, Noise::PeakFraction(0.02), 8);
        assert_eq!(a, b);
        assert_ne!(a.values, c.values);
        assert!(a.noise_rms.unwrap() > 0.0);
    }

    #[test]
    fn peak_matches_closed_form() {
        let g = gas(0.1);
        let grid = GridSpec::square(33, 5e-6);
        let im = synthesize_tof_image(&g, T_EXP, grid, Noise::None, 0).unwrap();
        // centre pixel sits at the origin for odd sizes
        let [rx, ry] = crate::density::tof_radii(&g.trap, g.mass(), g.temperature, T_EXP);
        let lz = g.fugacity().ln();
        let want = g.n * fermi_fn_ln(2.0, lz).unwrap() / (2.0 * PI * rx * ry * fermi_fn_ln(3.0, lz).unwrap());
        assert_relative_eq!(im.at(16, 16), want, max_relative = 1e-12);
    }

    #[test]
    fn gaussian_self_consistency() {
        let g = gas(1.0);
        let grid = default_column_grid(&g, T_EXP, 48).unwrap();
        let (cx, cy) = (3e-6, -5e-6);
        let values = (0..grid.ny)
            .flat_map(|j| (0..grid.nx).map(move |i| (i, j)))
            .map(|(i, j)| {
                column_density_boltzmann(
                    g.n,
                    g.temperature,
                    &g.trap,
                    g.mass(),
                    T_EXP,
                    grid.x(i) - cx,
                    grid.y(j) - cy,
                )
            })
            .collect();
        let im = TofImage::new(grid, values, None).unwrap();
        let fit = fit_gaussian(&im).unwrap();
        let [rx, ry] = crate::density::tof_radii(&g.trap, g.mass(), g.temperature, T_EXP);
        assert_relative_eq!(fit.n, g.n, max_relative = 1e-6);
        assert_relative_eq!(fit.r[0], rx, max_relative = 1e-6);
        assert_relative_eq!(fit.r[1], ry, max_relative = 1e-6);
        assert!((fit.center[0] - cx).abs() < 1e-6 * rx);
        assert!((fit.center[1] - cy).abs() < 1e-6 * ry);
        assert!(fit.gradient_norm < GRADIENT_TOL);
        assert!(fit.reduced_chi2 >= 0.0);
    }

    #[test]
    fn gaussian_fits_hot_cloud() {
        let im = image(2.0, 48, Noise::None, 0);
        let fit = fit_gaussian(&im).unwrap();
        let res = fit_residuals(&im, &fit).unwrap();
        let rms = (res.iter().map(|r| r * r).sum::<f64>() / res.len() as f64).sqrt();
        assert!(rms < 5e-3 * im.peak(), "rms/peak {}", rms / im.peak());
        let g = gas(2.0);
        let t_app = apparent_temperature(&fit, &g.trap, g.mass(), T_EXP);
        assert!((t_app / g.temperature - 1.0).abs() < 0.02);
    }

    #[test]
    fn gaussian_misses_degenerate_centre() {
        let im = image(0.1, 64, Noise::None, 0);
        let fit = fit_gaussian(&im).unwrap();
        let bins = radial_residuals(&im, &fit, 2.5, 10).unwrap();
        assert!(bins[0].mean < 0.0, "{bins:?}");
        let mid = bins.iter().filter(|b| b.rho > 0.8 && b.rho < 1.8);
        assert!(mid.clone().any(|b| b.mean > 0.0), "{bins:?}");
        // Fermi-Dirac residuals are far smaller
        let fd = fit_fermi_dirac(&im).unwrap();
        let fd_bins = radial_residuals(&im, &fd, 2.5, 10).unwrap();
        let worst = |b: &[RadialBin]| b.iter().map(|x| x.mean.abs()).fold(0.0, f64::max);
        assert!(worst(&fd_bins) < 1e-3 * worst(&bins));
    }

    #[test]
    fn fermi_dirac_recovers_fugacity() {
        for t in [0.1, 0.3, 0.6, 1.0] {
            let im = image(t, 48, Noise::None, 0);
            let fit = fit_fermi_dirac(&im).unwrap();
            let z = gas(t).fugacity().value();
            assert!((fit.fugacity.unwrap().value() / z - 1.0).abs() < 0.01, "T/TF {t}");
            assert!((fit.t_over_tf.unwrap() / t - 1.0).abs() < 0.01);
            assert!((fit.n / 4e4 - 1.0).abs() < 1e-3);
            assert!(!fit.flags.z_at_bound);
        }
    }

    #[test]
    fn hot_cloud_leaves_fugacity_undetermined() {
        let im = image(3.0, 48, Noise::PeakFraction(0.02), 3);
        let fit = fit_fermi_dirac(&im).unwrap();
        assert!(
            fit.flags.z_poorly_determined || fit.flags.z_at_bound,
            "{:?}",
            fit.fugacity_interval
        );
    }

    #[test]
    fn chi2_ratio_degenerate_vs_hot() {
        let ratio = |t: f64| {
            let im = image(t, 64, Noise::PeakFraction(0.02), 11);
            fit_gaussian(&im).unwrap().reduced_chi2 / fit_fermi_dirac(&im).unwrap().reduced_chi2
        };
        let cold = ratio(0.1);
        let hot = ratio(2.0);
        assert!((2.0..=5.0).contains(&cold), "cold {cold}");
        assert!((0.95..=1.3).contains(&hot), "hot {hot}");
    }

    #[test]
    fn fermi_dirac_nests_gaussian() {
        for t in [0.2, 0.5, 1.0] {
            let im = image(t, 40, Noise::PeakFraction(0.01), 5);
            let g = fit_gaussian(&im).unwrap();
            let f = fit_fermi_dirac(&im).unwrap();
            assert!(f.chi2 <= g.chi2 * (1.0 + 1e-9), "T/TF {t}");
        }
    }

    #[test]
    fn estimator_consistency() {
        let g = gas(0.2);
        let grid = default_column_grid(&g, T_EXP, 40).unwrap();
        let z = g.fugacity().value();
        let mut zs = Vec::new();
        let mut above = 0;
        for seed in 0..50 {
            let im = synthesize_tof_image(&g, T_EXP, grid, Noise::PeakFraction(0.02), seed).unwrap();
            let fit = fit_fermi_dirac(&im).unwrap();
            zs.push(fit.fugacity.unwrap().value());
            above += usize::from(fit.n > g.n);
        }
        zs.sort_by(f64::total_cmp);
        let median = 0.5 * (zs[24] + zs[25]);
        assert!((median / z - 1.0).abs() < 0.1, "median {median} truth {z}");
        // sign test on N: 50 fair coin flips stay within 15..=35
        assert!((15..=35).contains(&above), "{above} of 50 above truth");
    }

    #[test]
    fn apparent_temperature_plateau() {
        assert!((apparent_temperature_curve(0.005).unwrap() - 0.25).abs() < 2e-3);
        assert!((apparent_temperature_curve(3.0).unwrap() / 3.0 - 1.0).abs() < 0.02);
        let dev = |t: f64| apparent_temperature_curve(t).unwrap() / t - 1.0;
        for t in [0.05, 0.2, 0.4, 0.49] {
            assert!(dev(t) > 0.05, "T/TF {t}");
        }
        for t in [1.5, 2.0, 4.0] {
            assert!(dev(t) < 0.02, "T/TF {t}");
        }
        let mut last = 0.0;
        for k in 1..60 {
            let v = apparent_temperature_curve(0.05 * k as f64).unwrap();
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn rejects_sparse_images() {
        let grid = GridSpec::square(8, 1e-6);
        let im = TofImage::new(grid, alloc::vec![1.0; 64], None).unwrap();
        assert!(matches!(fit_gaussian(&im), Err(Error::Fit(_))));
        assert!(TofImage::new(grid, alloc::vec![1.0; 63], None).is_err());
        assert!(TofImage::new(grid, alloc::vec![f64::NAN; 64], None).is_err());
    }
}
